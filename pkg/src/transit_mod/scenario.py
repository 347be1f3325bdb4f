"""Scenario files: JSON parsing, defaults, validation and the initial layout."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .demand import PartitionParams, TravelRequest, ZoneSpec, generate_requests, zone_problems
from .errors import ConfigurationError
from .lns import LnsParams
from .network import Layout, Point, PotentialLine, PotentialNetwork, PTConfig, line_bounds, segment_time
from .pso import EvalContext, PsoParams

GAMMA_SCHEDULE = (1.0, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0)
DEMAND_SIZES = (100, 500, 1000, 5000, 10000)
BUNDLED = ("desk3", "paris7")

_TOP_KEYS = {
    "name", "region_km", "zones", "lines", "dwell", "pt", "partition", "pso", "lns", "users",
    "gamma", "demand_sizes", "gamma_schedule", "horizon", "initial_buses", "initial_allocation",
    "capacity", "arrival_share", "seed",
}


@dataclass(frozen=True)
class ScenarioConfig:
    network: PotentialNetwork
    zones: tuple[ZoneSpec, ...]
    name: str = "scenario"
    region_km: float = 35.0
    pt: PTConfig = PTConfig()
    partition: PartitionParams = PartitionParams()
    pso: PsoParams = PsoParams()
    lns: LnsParams = LnsParams()
    users: int = 1000
    gamma: float = 1.5
    demand_sizes: tuple[int, ...] = DEMAND_SIZES
    gamma_schedule: tuple[float, ...] = GAMMA_SCHEDULE
    horizon: float = 180.0
    initial_buses: int = 25
    initial_allocation: tuple[int, ...] | None = None
    capacity: int = 4
    arrival_share: float = 0.5
    seed: int = 0

    def problems(self) -> list[str]:
        out = [f"pt: {p}" for p in self.pt.problems()]
        out += [f"partition: {p}" for p in self.partition.problems()]
        out += [f"pso: {p}" for p in self.pso.problems()]
        out += [f"lns: {p}" for p in self.lns.problems()]
        out += [f"zones: {p}" for p in zone_problems(self.zones)]
        if not self.region_km > 0:
            out.append("region_km must be positive")
        for z in self.zones:
            if z.r_outer > self.region_km + 1e-9:
                out.append(f"zones: {z.name} extends past region_km")
        if self.users < 0:
            out.append("users must be nonnegative")
        if self.gamma < 1:
            out.append("gamma must be >= 1")
        if not self.gamma_schedule:
            out.append("gamma_schedule must not be empty")
        if any(g < 1 for g in self.gamma_schedule):
            out.append("gamma_schedule values must be >= 1")
        if any(b <= a for a, b in zip(self.gamma_schedule, self.gamma_schedule[1:])):
            out.append("gamma_schedule must be strictly increasing")
        if any(n < 0 for n in self.demand_sizes):
            out.append("demand_sizes must be nonnegative")
        if not self.horizon > 0:
            out.append("horizon must be positive")
        if self.initial_buses < 0:
            out.append("initial_buses must be nonnegative")
        if self.capacity < 1:
            out.append("capacity must be >= 1")
        if not 0 <= self.arrival_share <= 1:
            out.append("arrival_share must be in [0, 1]")
        if self.initial_allocation is not None and len(self.initial_allocation) != len(self.network.lines):
            out.append("initial_allocation needs one entry per line")
        return out

    def requests(self, n_users: int, gamma: float) -> list[TravelRequest]:
        """Demand for ``n_users``; the same draw for every gamma, only tolerances change."""
        return generate_requests(n_users, self.zones, self.horizon, gamma, demand_seed(self.seed, n_users),
                                 self.pt, self.arrival_share)

    def context(self, requests) -> EvalContext:
        return EvalContext(self.network, tuple(requests), self.pt, self.partition, self.lns,
                           self.capacity, self.horizon, self.seed)


def demand_seed(seed: int, n_users: int) -> int:
    return int(np.random.SeedSequence([seed, n_users]).generate_state(1)[0])


def _build(cls, raw, section: str, problems: list[str]):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        problems.append(f"{section}: expected an object")
        return cls()
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(raw) - names)
    if unknown:
        problems.append(f"{section}: unknown fields {unknown}")
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name not in raw:
            continue
        v = raw[f.name]
        if isinstance(v, list):
            v = tuple(v)
        if isinstance(v, bool) or (v is not None and not isinstance(v, (int, float, tuple))):
            problems.append(f"{section}.{f.name}: expected a number")
            continue
        kwargs[f.name] = v
    return cls(**kwargs)


def _parse_lines(raw, problems):
    stops: dict[int, Point] = {}
    lines = []
    if not isinstance(raw, list) or not raw:
        problems.append("lines: expected a nonempty list")
        return stops, lines
    for k, entry in enumerate(raw):
        try:
            lid = int(entry.get("id", k))
            seq = []
            for st in entry["stops"]:
                sid, p = int(st["id"]), Point(float(st["x"]), float(st["y"]))
                if sid in stops and stops[sid] != p:
                    problems.append(f"lines: stop {sid} has two different positions")
                stops[sid] = p
                seq.append(sid)
            lines.append(PotentialLine(lid, tuple(seq)))
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            problems.append(f"lines[{k}]: {exc}")
    if len({l.id for l in lines}) != len(lines):
        problems.append("lines: duplicate line ids")
    return stops, lines


def _parse_zones(raw, problems):
    if not isinstance(raw, list):
        problems.append("zones: expected a list")
        return ()
    out = []
    for k, z in enumerate(raw):
        try:
            out.append(ZoneSpec(str(z["name"]), float(z["r_inner"]), float(z["r_outer"]),
                                float(z["origin_share"]), float(z["destination_share"])))
        except (KeyError, TypeError, ValueError) as exc:
            problems.append(f"zones[{k}]: {exc}")
    return tuple(out)


def scenario_from_dict(data: dict) -> ScenarioConfig:
    problems: list[str] = []
    if not isinstance(data, dict):
        raise ConfigurationError("scenario must be a JSON object", ["scenario must be a JSON object"])
    unknown = sorted(set(data) - _TOP_KEYS)
    if unknown:
        problems.append(f"unknown fields {unknown}")
    for key in ("lines", "zones"):
        if key not in data:
            problems.append(f"{key}: required")
    stops, lines = _parse_lines(data.get("lines", []), problems)
    zones = _parse_zones(data.get("zones", []), problems)
    dwell = {int(k): float(v) for k, v in data.get("dwell", {}).items()}
    pt = _build(PTConfig, data.get("pt"), "pt", problems)
    part = _build(PartitionParams, data.get("partition"), "partition", problems)
    pso = _build(PsoParams, data.get("pso"), "pso", problems)
    lns = _build(LnsParams, data.get("lns"), "lns", problems)
    scalars = {}
    for key, kind in (("name", str), ("region_km", float), ("users", int), ("gamma", float),
                      ("horizon", float), ("initial_buses", int), ("capacity", int),
                      ("arrival_share", float), ("seed", int)):
        if key in data:
            v = data[key]
            ok = isinstance(v, str) if kind is str else (isinstance(v, (int, float)) and not isinstance(v, bool))
            if kind is int and ok and v != int(v):
                ok = False
            if not ok:
                problems.append(f"{key}: expected {kind.__name__}")
            else:
                scalars[key] = kind(v)
    for key, kind in (("demand_sizes", int), ("gamma_schedule", float), ("initial_allocation", int)):
        if key in data:
            v = data[key]
            if not isinstance(v, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
                problems.append(f"{key}: expected a list of numbers")
            else:
                scalars[key] = tuple(kind(x) for x in v)
    if problems:
        # section invariants are still worth reporting alongside schema problems
        for section, obj in (("pt", pt), ("partition", part), ("pso", pso), ("lns", lns)):
            problems += [f"{section}: {p}" for p in obj.problems()]
        raise ConfigurationError("; ".join(problems), problems)
    try:
        network = PotentialNetwork(stops, tuple(lines), dwell)
    except ConfigurationError as exc:
        raise ConfigurationError(str(exc), [str(exc)]) from exc
    cfg = ScenarioConfig(network, zones, pt=pt, partition=part, pso=pso, lns=lns, **scalars)
    problems = cfg.problems()
    if problems:
        raise ConfigurationError("; ".join(problems), problems)
    return cfg


def load_scenario(path) -> ScenarioConfig:
    """Read a scenario JSON file; bundled names such as ``desk3`` are accepted too."""
    p = Path(path)
    if not p.exists() and str(path) in BUNDLED:
        text = resources.files("transit_mod").joinpath("data", f"{path}.json").read_text(encoding="utf-8")
    else:
        if not p.exists():
            raise FileNotFoundError(f"scenario file not found: {path}")
        text = p.read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"invalid JSON: {exc}", [f"invalid JSON: {exc}"]) from exc
    return scenario_from_dict(data)


def _largest_remainder(total: int, weights) -> list[int]:
    w = np.asarray(weights, dtype=float)
    if total <= 0 or w.sum() <= 0:
        return [0] * len(w)
    raw = total * w / w.sum()
    base = np.floor(raw).astype(int)
    rest = total - int(base.sum())
    order = sorted(range(len(w)), key=lambda i: (-(raw[i] - base[i]), i))
    for i in order[:rest]:
        base[i] += 1
    return [int(b) for b in base]


def initial_layout(cfg: ScenarioConfig) -> Layout:
    """Every stop active; buses split by end-to-end time, then clamped to each line's range."""
    network = cfg.network
    active = tuple(tuple(True for _ in l.stops) for l in network.lines)
    bounds = line_bounds(network, active, cfg.pt)
    if cfg.initial_allocation is not None:
        counts = list(cfg.initial_allocation)
    else:
        times = [_end_to_end(network, l, cfg.pt) for l in network.lines]
        counts = _largest_remainder(cfg.initial_buses, times)
    counts = [0 if hi == 0 else min(max(n, lo), hi) for n, (lo, hi) in zip(counts, bounds)]
    return Layout(active, tuple(counts))


def _end_to_end(network: PotentialNetwork, line: PotentialLine, pt: PTConfig) -> float:
    pts = [network.stops[s] for s in line.stops]
    t = sum(segment_time(a, b, pt) for a, b in zip(pts, pts[1:]))
    return t + sum(network.dwell.get(s, pt.dwell) for s in line.stops)
