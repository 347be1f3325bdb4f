"""Travel-request generation and the walk / PT / ride-sharing mode partition."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError
from .network import (
    PairTimes,
    Point,
    PTConfig,
    PTGraph,
    euclidean_km,
    rs_travel_time,
    walk_distance,
    walk_time,
)

WALK = "W"
PT = "PT"
RS = "RS"
W_PT_RS = "W-PT-RS"
RS_PT_W = "RS-PT-W"
CLASSES = (WALK, PT, RS, W_PT_RS, RS_PT_W)
RS_CLASSES = (RS, W_PT_RS, RS_PT_W)

DEPARTURE = "departure"
ARRIVAL = "arrival"


@dataclass(frozen=True)
class TravelRequest:
    id: int
    origin: Point
    destination: Point
    anchor_kind: str
    anchor_time: float
    tolerance: float

    @property
    def earliest(self) -> float:
        if self.anchor_kind == DEPARTURE:
            return self.anchor_time
        return self.anchor_time - self.tolerance

    @property
    def latest(self) -> float:
        if self.anchor_kind == ARRIVAL:
            return self.anchor_time
        return self.anchor_time + self.tolerance


@dataclass(frozen=True)
class ZoneSpec:
    name: str
    r_inner: float
    r_outer: float
    origin_share: float
    destination_share: float


@dataclass(frozen=True)
class PartitionParams:
    d_walk_max: float = 2.52
    tau_rs: float = 15.0
    k: int = 5

    def problems(self) -> list[str]:
        out = []
        if not self.d_walk_max > 0:
            out.append("d_walk_max must be positive")
        if not self.tau_rs > 0:
            out.append("tau_rs must be positive")
        if self.k < 1:
            out.append("k must be >= 1")
        return out


@dataclass(frozen=True)
class PartitionedDemand:
    classes: dict[int, str]
    # request id -> (first stop, second stop) backing the assignment, if any
    stops: dict[int, tuple[int, int]] = field(default_factory=dict)

    def members(self, cls: str) -> set[int]:
        return {i for i, c in self.classes.items() if c == cls}

    @property
    def rs_requests(self) -> set[int]:
        return {i for i, c in self.classes.items() if c in RS_CLASSES}

    def counts(self) -> dict[str, int]:
        out = {c: 0 for c in CLASSES}
        for c in self.classes.values():
            out[c] += 1
        return out

    def shares(self) -> dict[str, float]:
        n = len(self.classes)
        return {c: (k / n if n else 0.0) for c, k in self.counts().items()}

    def demote(self, request_ids: Iterable[int]) -> PartitionedDemand:
        classes = dict(self.classes)
        stops = dict(self.stops)
        for i in request_ids:
            classes[i] = RS
            stops.pop(i, None)
        return PartitionedDemand(classes, stops)


def zone_problems(zones: Sequence[ZoneSpec]) -> list[str]:
    out = []
    if not zones:
        return ["at least one zone is required"]
    for z in zones:
        if not 0 <= z.r_inner < z.r_outer:
            out.append(f"zone {z.name}: need 0 <= r_inner < r_outer")
        for name in ("origin_share", "destination_share"):
            if not 0 <= getattr(z, name) <= 1:
                out.append(f"zone {z.name}: {name} outside [0, 1]")
    for name in ("origin_share", "destination_share"):
        total = sum(getattr(z, name) for z in zones)
        if abs(total - 1) > 1e-9:
            out.append(f"zone {name}s sum to {total}, expected 1")
    return out


def _sample_in_band(rng: np.random.Generator, zone: ZoneSpec) -> Point:
    # uniform over the annulus area
    u = rng.random()
    r = math.sqrt(zone.r_inner ** 2 + u * (zone.r_outer ** 2 - zone.r_inner ** 2))
    theta = rng.uniform(0, 2 * math.pi)
    return Point(r * math.cos(theta), r * math.sin(theta))


def generate_requests(n: int, zones: Sequence[ZoneSpec], horizon: float, gamma: float,
                      seed: int, cfg: PTConfig | None = None,
                      arrival_share: float = 0.5) -> list[TravelRequest]:
    """Draw ``n`` requests; tolerance is ``gamma`` times the direct car time."""
    cfg = cfg or PTConfig()
    problems = zone_problems(zones)
    if n < 0:
        problems.append("n must be nonnegative")
    if not horizon > 0:
        problems.append("horizon must be positive")
    if gamma < 1:
        problems.append("gamma must be >= 1 so a direct ride fits the tolerance")
    if problems:
        raise ConfigurationError("; ".join(problems), problems)

    rng = np.random.default_rng(seed)
    o_p = np.array([z.origin_share for z in zones])
    d_p = np.array([z.destination_share for z in zones])
    out = []
    for i in range(n):
        oz = zones[rng.choice(len(zones), p=o_p)]
        dz = zones[rng.choice(len(zones), p=d_p)]
        origin = _sample_in_band(rng, oz)
        destination = _sample_in_band(rng, dz)
        kind = ARRIVAL if rng.random() < arrival_share else DEPARTURE
        anchor = float(rng.uniform(0, horizon))
        tolerance = gamma * rs_travel_time(origin, destination, cfg)
        out.append(TravelRequest(i, origin, destination, kind, anchor, tolerance))
    return out


def with_gamma(requests: Sequence[TravelRequest], gamma: float, cfg: PTConfig) -> list[TravelRequest]:
    """Same trips, tolerance rescaled to ``gamma`` times the direct car time."""
    return [TravelRequest(r.id, r.origin, r.destination, r.anchor_kind, r.anchor_time,
                          gamma * rs_travel_time(r.origin, r.destination, cfg))
            for r in requests]


def closest_stops(endpoint: Point, graph: PTGraph, k: int, cfg: PTConfig,
                  d_walk_max: float = math.inf) -> list[tuple[int, float]]:
    """Up to ``k`` active stops within walking budget, nearest first, as (stop, walk km)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    cands = [(walk_distance(endpoint, p, cfg), s) for s, p in graph.stops.items()]
    cands = sorted(c for c in cands if c[0] <= d_walk_max)
    return [(s, d) for d, s in cands[:k]]


def transfer_candidates(endpoint: Point, graph: PTGraph, k: int) -> list[int]:
    """The ``k`` active stops closest to ``endpoint`` by car, ties broken by stop id."""
    cands = sorted((euclidean_km(endpoint, p), s) for s, p in graph.stops.items())
    return [s for _, s in cands[:k]]


def _best_pt_pair(req, graph, pt, cfg, origin_stops, dest_stops, d_walk_max):
    best = (math.inf, None)
    for s, ds in origin_stops:
        for s2, ds2 in dest_stops:
            if ds + ds2 > d_walk_max:
                continue
            t = (walk_time(req.origin, graph.stops[s], cfg) + pt.time(s, s2)
                 + walk_time(graph.stops[s2], req.destination, cfg))
            if t < best[0]:
                best = (t, (s, s2))
    return best


def partition(requests: Sequence[TravelRequest], graph: PTGraph, pair_times: PairTimes,
              params: PartitionParams, cfg: PTConfig) -> PartitionedDemand:
    """Assign each request to walk, PT, RS or one of the two RS+PT combinations.

    Preference order is walk, then PT, then PT with an RS leg on the
    destination side, then on the origin side, then door-to-door RS.
    """
    classes: dict[int, str] = {}
    stops: dict[int, tuple[int, int]] = {}
    dmax, k, tau = params.d_walk_max, params.k, params.tau_rs
    pending = []
    for req in requests:
        if walk_distance(req.origin, req.destination, cfg) <= dmax:
            classes[req.id] = WALK
            continue
        o_stops = closest_stops(req.origin, graph, k, cfg, dmax)
        d_stops = closest_stops(req.destination, graph, k, cfg, dmax)
        t, pair = _best_pt_pair(req, graph, pair_times, cfg, o_stops, d_stops, dmax)
        if pair is not None and t <= req.tolerance:
            classes[req.id] = PT
            stops[req.id] = pair
        else:
            pending.append((req, o_stops, d_stops))

    for req, o_stops, d_stops in pending:
        if not o_stops and not d_stops:
            classes[req.id] = RS
            continue
        best = (math.inf, None)
        for s, _ in o_stops:
            for s2 in transfer_candidates(req.destination, graph, k):
                if s2 == s:
                    continue  # no PT leg
                t = walk_time(req.origin, graph.stops[s], cfg) + pair_times.time(s, s2) + tau
                if t < best[0]:
                    best = (t, (s, s2))
        if best[1] is not None and best[0] <= req.tolerance:
            classes[req.id] = W_PT_RS
            stops[req.id] = best[1]
            continue
        best = (math.inf, None)
        for s in transfer_candidates(req.origin, graph, k):
            for s2, _ in d_stops:
                if s2 == s:
                    continue
                t = tau + pair_times.time(s, s2) + walk_time(graph.stops[s2], req.destination, cfg)
                if t < best[0]:
                    best = (t, (s, s2))
        if best[1] is not None and best[0] <= req.tolerance:
            classes[req.id] = RS_PT_W
            stops[req.id] = best[1]
        else:
            classes[req.id] = RS
    ordered = {r.id: classes[r.id] for r in requests}
    return PartitionedDemand(ordered, dict(sorted(stops.items())))


def write_partition_csv(pd: PartitionedDemand, path) -> None:
    """Write one row per request; ``path`` may also be an open text stream."""
    if hasattr(path, "write"):
        _write_partition_rows(pd, path)
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        _write_partition_rows(pd, fh)


def _write_partition_rows(pd: PartitionedDemand, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["request_id", "class", "first_stop", "second_stop"])
    for i, cls in pd.classes.items():
        s = pd.stops.get(i)
        w.writerow([i, cls, s[0] if s else "", s[1] if s else ""])
