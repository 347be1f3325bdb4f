"""
Conventional PT network: active-stop graph, line travel times and
multigraph shortest paths between active stops.

Times are in minutes, distances in km, unless a name says otherwise.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .errors import ConfigurationError, LineInactiveError, StopInactiveError

INF = math.inf
_EPS = 1e-9


class Point(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class PTConfig:
    v_pt_kmh: float = 60.0
    v_car_kmh: float = 30.0
    v_walk_ms: float = 1.4
    circ: float = 1.255
    circ_walk: float = 1.391
    t_ingress: float = 0.0
    t_egress: float = 0.0
    t_change: float = 0.0
    dwell: float = 3.0
    headway_min: float = 2.0
    f_min: float = 0.06
    f_max: float = 0.25

    def problems(self) -> list[str]:
        out = []
        for name in ("v_pt_kmh", "v_car_kmh", "v_walk_ms"):
            if not getattr(self, name) > 0:
                out.append(f"{name} must be positive")
        for name in ("t_ingress", "t_egress", "t_change", "dwell", "headway_min", "f_min", "f_max"):
            if getattr(self, name) < 0:
                out.append(f"{name} must be nonnegative")
        if self.circ < 1:
            out.append("circ must be >= 1")
        if self.circ_walk < 1:
            out.append("circ_walk must be >= 1")
        if self.f_min > self.f_max:
            out.append("f_min must not exceed f_max")
        if self.f_max > 0 and 1.0 / self.f_max < self.headway_min - _EPS:
            out.append("f_max violates the minimum headway")
        return out


@dataclass(frozen=True)
class PotentialLine:
    id: int
    stops: tuple[int, ...]

    def __post_init__(self):
        if len(self.stops) < 2:
            raise ConfigurationError(f"line {self.id} needs at least 2 stops")
        if len(set(self.stops)) != len(self.stops):
            raise ConfigurationError(f"line {self.id} repeats a stop")


@dataclass(frozen=True)
class PotentialNetwork:
    stops: dict[int, Point]
    lines: tuple[PotentialLine, ...]
    dwell: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        for line in self.lines:
            missing = [s for s in line.stops if s not in self.stops]
            if missing:
                raise ConfigurationError(f"line {line.id} references unknown stops {missing}")


@dataclass(frozen=True)
class Layout:
    """Upper-level decision: stop activation bits and vehicle count per line."""

    active: tuple[tuple[bool, ...], ...]
    vehicles: tuple[int, ...]

    @property
    def total_vehicles(self) -> int:
        return sum(self.vehicles)

    def active_count(self, line_index: int) -> int:
        return sum(self.active[line_index])

    def key(self) -> str:
        bits = "|".join("".join("1" if b else "0" for b in row) for row in self.active)
        return bits + "#" + ",".join(str(n) for n in self.vehicles)

    @classmethod
    def from_key(cls, key: str) -> Layout:
        bits, counts = key.split("#")
        active = tuple(tuple(c == "1" for c in row) for row in bits.split("|"))
        vehicles = tuple(int(n) for n in counts.split(",")) if counts else ()
        return cls(active, vehicles)


@dataclass(frozen=True)
class PTGraph:
    stops: dict[int, Point]
    line_stops: dict[int, tuple[int, ...]]
    dwell: dict[int, float]

    @property
    def arcs(self) -> set[tuple[int, int]]:
        out = set()
        for seq in self.line_stops.values():
            if len(seq) < 2:
                continue
            for u, v in zip(seq, seq[1:]):
                out.add((u, v))
                out.add((v, u))
        return out

    def active_lines(self) -> list[int]:
        return [l for l, seq in self.line_stops.items() if len(seq) >= 2]

    def sorted_stops(self) -> list[int]:
        return sorted(self.stops)


class Leg(NamedTuple):
    u: int
    v: int
    line: int
    time: float


@dataclass(frozen=True)
class PathResult:
    legs: tuple[Leg, ...]
    total_time: float

    @property
    def reachable(self) -> bool:
        return self.total_time < INF

    @property
    def lines(self) -> tuple[int, ...]:
        return tuple(leg.line for leg in self.legs)


@dataclass(frozen=True)
class LineMultigraph:
    stops: tuple[int, ...]
    # (u, v) -> [(line, weight), ...] sorted by line id; parallel arcs kept
    arcs: dict[tuple[int, int], tuple[tuple[int, float], ...]]

    def out_arcs(self, u: int):
        for (a, b), labelled in self.arcs.items():
            if a == u:
                for line, w in labelled:
                    yield b, line, w

    @property
    def n_arcs(self) -> int:
        return sum(len(v) for v in self.arcs.values())


def euclidean_km(a: Point, b: Point) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def rs_travel_time(i: Point | None, j: Point | None, cfg: PTConfig) -> float:
    """Car travel time in minutes; ``None`` stands for the depot, whose arcs cost nothing."""
    if i is None or j is None:
        return 0.0
    return euclidean_km(i, j) * cfg.circ / cfg.v_car_kmh * 60.0


def walk_distance(a: Point, b: Point, cfg: PTConfig) -> float:
    return euclidean_km(a, b) * cfg.circ_walk


def walk_time(a: Point, b: Point, cfg: PTConfig) -> float:
    return walk_distance(a, b, cfg) * 1000.0 / cfg.v_walk_ms / 60.0


def segment_time(u: Point, v: Point, cfg: PTConfig) -> float:
    return euclidean_km(u, v) / cfg.v_pt_kmh * 60.0


def activate(network: PotentialNetwork, layout: Layout, cfg: PTConfig | None = None) -> PTGraph:
    cfg = cfg or PTConfig()
    if len(layout.active) != len(network.lines):
        raise ConfigurationError(
            f"layout has {len(layout.active)} lines, network has {len(network.lines)}")
    stops: dict[int, Point] = {}
    line_stops: dict[int, tuple[int, ...]] = {}
    for line, bits in zip(network.lines, layout.active):
        if len(bits) != len(line.stops):
            raise ConfigurationError(
                f"line {line.id}: {len(bits)} activation bits for {len(line.stops)} stops")
        seq = tuple(s for s, on in zip(line.stops, bits) if on)
        line_stops[line.id] = seq
        # a lone active stop is not served by the line
        if len(seq) >= 2:
            for s in seq:
                stops[s] = network.stops[s]
    dwell = {s: network.dwell.get(s, cfg.dwell) for s in stops}
    return PTGraph(stops=stops, line_stops=line_stops, dwell=dwell)


def _between(seq: tuple[int, ...], u: int, v: int) -> tuple[int, ...]:
    iu, iv = seq.index(u), seq.index(v)
    if iu <= iv:
        return seq[iu:iv + 1]
    return tuple(reversed(seq[iv:iu + 1]))


def line_time(line: int, u: int, v: int, f: float, graph: PTGraph, cfg: PTConfig) -> float:
    """Expected wait plus in-vehicle and dwell time riding ``line`` from ``u`` to ``v``."""
    if not f > 0:
        raise LineInactiveError(f"line {line} has no service (f={f})")
    seq = graph.line_stops.get(line, ())
    if len(seq) < 2:
        raise LineInactiveError(f"line {line} has fewer than 2 active stops")
    if u not in seq or v not in seq:
        raise StopInactiveError(f"stops {u}, {v} not both active on line {line}")
    path = _between(seq, u, v)
    moving = sum(segment_time(graph.stops[a], graph.stops[b], cfg) for a, b in zip(path, path[1:]))
    dwell = sum(graph.dwell[s] for s in path[1:])
    return 1.0 / (2.0 * f) + moving + dwell


def line_end_to_end_time(line: int, graph: PTGraph, cfg: PTConfig) -> float:
    seq = graph.line_stops.get(line, ())
    if len(seq) < 2:
        raise LineInactiveError(f"line {line} has fewer than 2 active stops")
    moving = sum(segment_time(graph.stops[a], graph.stops[b], cfg) for a, b in zip(seq, seq[1:]))
    return moving + sum(graph.dwell[s] for s in seq)


def frequency(n_vehicles: int, t_line: float) -> float:
    if not t_line > 0:
        raise ValueError(f"end-to-end time must be positive, got {t_line}")
    return n_vehicles / (2.0 * t_line)


def vehicle_bounds(t_line: float, cfg: PTConfig) -> tuple[int, int]:
    """Vehicle-count range keeping the line frequency inside [f_min, f_max]."""
    if not t_line > 0:
        raise ValueError(f"end-to-end time must be positive, got {t_line}")
    n_min = max(1, math.ceil(2.0 * t_line * cfg.f_min - _EPS))
    n_max = math.floor(2.0 * t_line * cfg.f_max + _EPS)
    # very short lines: keep at least one vehicle rather than an empty range
    return n_min, max(n_min, n_max)


def line_bounds(network: PotentialNetwork, active: tuple[tuple[bool, ...], ...],
                cfg: PTConfig) -> list[tuple[int, int]]:
    """Per-line vehicle bounds for an activation pattern; (0, 0) for inactive lines."""
    out = []
    for line, bits in zip(network.lines, active):
        pts = [network.stops[s] for s, on in zip(line.stops, bits) if on]
        if len(pts) < 2:
            out.append((0, 0))
            continue
        t = sum(segment_time(a, b, cfg) for a, b in zip(pts, pts[1:]))
        t += sum(network.dwell.get(s, cfg.dwell) for s, on in zip(line.stops, bits) if on)
        out.append(vehicle_bounds(t, cfg))
    return out


def layout_problems(network: PotentialNetwork, layout: Layout, cfg: PTConfig) -> list[str]:
    out = []
    if len(layout.vehicles) != len(network.lines):
        out.append("vehicles length differs from number of lines")
        return out
    bounds = line_bounds(network, layout.active, cfg)
    for line, n, (lo, hi) in zip(network.lines, layout.vehicles, bounds):
        if hi == 0 and n != 0:
            out.append(f"line {line.id} is inactive but carries {n} vehicles")
        elif hi > 0 and not lo <= n <= hi:
            out.append(f"line {line.id}: {n} vehicles outside [{lo}, {hi}]")
    return out


def line_frequencies(network: PotentialNetwork, graph: PTGraph, layout: Layout,
                     cfg: PTConfig) -> dict[int, float]:
    freqs = {}
    for line, n in zip(network.lines, layout.vehicles):
        if len(graph.line_stops[line.id]) >= 2 and n > 0:
            freqs[line.id] = frequency(n, line_end_to_end_time(line.id, graph, cfg))
    return freqs


def build_multigraph(graph: PTGraph, frequencies: dict[int, float], cfg: PTConfig) -> LineMultigraph:
    arcs: dict[tuple[int, int], list[tuple[int, float]]] = {}
    for line in sorted(graph.line_stops):
        seq = graph.line_stops[line]
        if len(seq) < 2:
            continue
        f = frequencies.get(line, 0.0)
        if not f > 0:
            raise LineInactiveError(f"line {line} has arcs but no positive frequency")
        wait = 1.0 / (2.0 * f)
        # cumulative moving time and dwell along the active sequence
        pts = [graph.stops[s] for s in seq]
        moving = np.concatenate([[0.0], np.cumsum([segment_time(a, b, cfg) for a, b in zip(pts, pts[1:])])])
        dwell = np.cumsum([graph.dwell[s] for s in seq])
        for i, a in enumerate(seq):
            for j, b in enumerate(seq):
                if i == j:
                    continue
                lo, hi = min(i, j), max(i, j)
                # dwell over the stops after the boarding stop in travel direction
                dw = (dwell[hi] - dwell[lo]) if j > i else (dwell[hi - 1] - (dwell[lo - 1] if lo else 0.0))
                t = wait + (moving[hi] - moving[lo]) + dw
                arcs.setdefault((a, b), []).append((line, float(t)))
    frozen = {k: tuple(sorted(v)) for k, v in sorted(arcs.items())}
    return LineMultigraph(stops=tuple(graph.sorted_stops()), arcs=frozen)


def shortest_pt_path(u: int, v: int, mg: LineMultigraph, cfg: PTConfig) -> PathResult:
    """Minimum path time between two active stops.

    Labels are ``(time, legs, line sequence)`` compared lexicographically, so
    ties go to fewer line changes and then to the smallest line-id sequence.
    """
    if u not in mg.stops:
        raise StopInactiveError(u)
    if v not in mg.stops:
        raise StopInactiveError(v)
    base = cfg.t_ingress + cfg.t_egress
    if u == v:
        return PathResult((), base)

    adjacency: dict[int, list[tuple[int, int, float]]] = {}
    for (a, b), labelled in mg.arcs.items():
        for line, w in labelled:
            adjacency.setdefault(a, []).append((b, line, w))

    # time excludes ingress/egress; t_change is charged from the second leg on
    heap = [(0.0, 0, (), u, ())]
    settled = set()
    while heap:
        t, nlegs, lines, node, legs = heapq.heappop(heap)
        if node in settled:
            continue
        settled.add(node)
        if node == v:
            return PathResult(legs, base + t)
        for nxt, line, w in adjacency.get(node, ()):
            if nxt in settled:
                continue
            step = w + (cfg.t_change if nlegs else 0.0)
            heapq.heappush(heap, (t + step, nlegs + 1, lines + (line,), nxt,
                                  legs + (Leg(node, nxt, line, w),)))
    return PathResult((), INF)


@dataclass(frozen=True)
class PairTimes:
    """All-pairs PT path times over active stops (inf where unreachable)."""

    stops: tuple[int, ...]
    matrix: np.ndarray
    index: dict[int, int]
    _predecessors: np.ndarray
    _best_line: dict[tuple[int, int], int]

    def time(self, u: int, v: int) -> float:
        return float(self.matrix[self.index[u], self.index[v]])

    def lines_on_path(self, u: int, v: int) -> list[int]:
        i, j = self.index[u], self.index[v]
        if i == j or not np.isfinite(self.matrix[i, j]):
            return []
        out = []
        while j != i:
            p = int(self._predecessors[i, j])
            out.append(self._best_line[(self.stops[p], self.stops[j])])
            j = p
        return out[::-1]


def pair_time_matrix(mg: LineMultigraph, cfg: PTConfig) -> PairTimes:
    stops = mg.stops
    n = len(stops)
    idx = {s: i for i, s in enumerate(stops)}
    base = cfg.t_ingress + cfg.t_egress
    if n == 0:
        empty = np.zeros((0, 0))
        return PairTimes((), empty, {}, empty.astype(int), {})
    # parallel arcs collapse to their cheapest line; every leg pays t_change once
    weights = np.zeros((n, n))
    best_line = {}
    for (a, b), labelled in mg.arcs.items():
        line, w = min(labelled, key=lambda lw: (lw[1], lw[0]))
        weights[idx[a], idx[b]] = w + cfg.t_change
        best_line[(a, b)] = line
    dist, pred = dijkstra(csr_matrix(weights), directed=True, return_predecessors=True)
    off = ~np.eye(n, dtype=bool)
    dist[off] += base - cfg.t_change
    dist[~off] = base
    return PairTimes(tuple(stops), dist, idx, pred, best_line)
