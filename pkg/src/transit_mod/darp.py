"""
Route model for the ride-sharing fleet: schedules, feasibility checks and a
compact array view of an instance used by the search.

Vehicles leave the depot at its earliest time. Arcs into and out of the
depot take no time and cost no distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .windows import DEPOT, IdarpInstance

EPS = 1e-9


@dataclass(frozen=True)
class Visit:
    node: int
    arrival: float
    departure: float
    load: int  # on board after the visit


@dataclass(frozen=True)
class Route:
    vehicle: int
    visits: tuple[Visit, ...]

    @property
    def nodes(self) -> tuple[int, ...]:
        return tuple(v.node for v in self.visits)


@dataclass
class RSSolution:
    routes: tuple[Route, ...]
    # request id -> (pickup node, dropoff node) actually used
    chosen: dict[int, tuple[int, int]]
    fleet_size: int
    total_km: float
    unassigned: frozenset = frozenset()
    objective: float = 0.0
    trace: tuple[float, ...] = field(default=(), repr=False)


def _node_ids(route) -> list[int]:
    if isinstance(route, Route):
        return list(route.nodes)
    return list(route)


def schedule(nodes: Sequence[int], inst: IdarpInstance) -> list[Visit]:
    """Forward schedule: arrive as early as possible, wait until the window opens."""
    t = inst.depot.earliest
    load = 0
    prev = 0
    role = _roles(inst)
    out = []
    for n in nodes:
        nd = inst.nodes[n]
        a = t + (0.0 if prev == 0 else inst.travel_time(prev, n))
        t = max(a, nd.earliest) + nd.service
        rid, is_pickup, q = role[n]
        load += q if is_pickup else -q
        out.append(Visit(n, a, t, load))
        prev = n
    return out


def _roles(inst: IdarpInstance) -> dict[int, tuple[int, bool, int]]:
    cached = getattr(inst, "_roles", None)
    if cached is None:
        cached = {}
        for r in inst.requests:
            for p in r.pickups:
                cached[p] = (r.request_id, True, r.load)
            for d in r.dropoffs:
                cached[d] = (r.request_id, False, r.load)
        inst._roles = cached
    return cached


def route_feasible(route, inst: IdarpInstance) -> tuple[bool, str | None]:
    """Check pairing, precedence, windows and capacity; returns (ok, first violation)."""
    nodes = _node_ids(route)
    role = _roles(inst)
    for n in nodes:
        if n not in inst.nodes:
            return False, f"node {n} is not in the instance"
        if inst.nodes[n].kind == DEPOT:
            return False, "depot visited inside the route"
        if n not in role:
            return False, f"node {n} belongs to no request"
    if len(set(nodes)) != len(nodes):
        return False, "node visited twice"
    picked: dict[int, int] = {}
    dropped: set[int] = set()
    for n in nodes:
        rid, is_pickup, _ = role[n]
        if is_pickup:
            if rid in picked or rid in dropped:
                return False, f"request {rid} picked up twice"
            picked[rid] = n
        else:
            if rid not in picked:
                return False, f"request {rid} dropped off before pickup"
            if rid in dropped:
                return False, f"request {rid} dropped off twice"
            dropped.add(rid)
    missing = set(picked) - dropped
    if missing:
        return False, f"request {min(missing)} never dropped off"
    for v in schedule(nodes, inst):
        nd = inst.nodes[v.node]
        if v.arrival > nd.latest + EPS:
            return False, f"node {v.node} reached at {v.arrival:.4f} after its latest time {nd.latest:.4f}"
        if v.load > inst.capacity:
            return False, f"load {v.load} exceeds capacity {inst.capacity} at node {v.node}"
    if nodes:
        last = schedule(nodes, inst)[-1]
        if last.departure > inst.depot.latest + EPS:
            return False, "vehicle returns to the depot too late"
    return True, None


def route_km(route, inst: IdarpInstance) -> float:
    nodes = _node_ids(route)
    return sum(inst.distance_km(a, b) for a, b in zip(nodes, nodes[1:]))


def make_route(vehicle: int, nodes: Sequence[int], inst: IdarpInstance) -> Route:
    return Route(vehicle, tuple(schedule(nodes, inst)))


def solution_problems(sol: RSSolution, inst: IdarpInstance) -> list[str]:
    """Every reason ``sol`` is not a valid complete solution of ``inst``."""
    out = []
    role = _roles(inst)
    seen: dict[int, int] = {}
    for route in sol.routes:
        ok, why = route_feasible(route, inst)
        if not ok:
            out.append(f"vehicle {route.vehicle}: {why}")
        for n in route.nodes:
            if n in role and role[n][1]:
                seen[role[n][0]] = seen.get(role[n][0], 0) + 1
    for r in inst.requests:
        c = seen.get(r.request_id, 0)
        if c != 1:
            out.append(f"request {r.request_id} served {c} times")
    if sol.unassigned:
        out.append(f"unassigned requests {sorted(sol.unassigned)}")
    nonempty = sum(1 for r in sol.routes if r.visits)
    if nonempty != sol.fleet_size:
        out.append(f"fleet size {sol.fleet_size} but {nonempty} nonempty routes")
    km = sum(route_km(r, inst) for r in sol.routes)
    if abs(km - sol.total_km) > 1e-9 * max(1.0, km):
        out.append(f"total km {sol.total_km} but routes sum to {km}")
    return out


def write_solution(sol: RSSolution, path) -> None:
    """One route per line: vehicle then node@arrival/departure for each visit."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in sol.routes:
            stops = " ".join(f"{v.node}@{v.arrival:.4f}/{v.departure:.4f}" for v in r.visits)
            fh.write(f"{r.vehicle}: {stops}\n")


class CompiledInstance:
    """Flat lists indexed by compact node position; position 0 is the depot."""

    def __init__(self, inst: IdarpInstance):
        self.inst = inst
        ids = list(inst.nodes)
        assert ids[0] == 0
        self.ids = ids
        pos = {n: i for i, n in enumerate(ids)}
        self.pos = pos
        nodes = [inst.nodes[n] for n in ids]
        self.x = [0.0 if nd.location is None else nd.location.x for nd in nodes]
        self.y = [0.0 if nd.location is None else nd.location.y for nd in nodes]
        self.E = [nd.earliest for nd in nodes]
        self.L = [nd.latest for nd in nodes]
        self.S = [nd.service for nd in nodes]
        self.circ = inst.cfg.circ
        self.km_to_min = 60.0 / inst.cfg.v_car_kmh
        self.Q = inst.capacity
        self.req_ids = [r.request_id for r in inst.requests]
        self.pickups = [tuple(pos[p] for p in r.pickups) for r in inst.requests]
        self.dropoffs = [tuple(pos[d] for d in r.dropoffs) for r in inst.requests]
        self.load = [r.load for r in inst.requests]
        self._xa = self._ya = None
        self.owner = [-1] * len(ids)
        self.is_pickup = [False] * len(ids)
        for k, r in enumerate(inst.requests):
            for p in self.pickups[k]:
                self.owner[p] = k
                self.is_pickup[p] = True
            for d in self.dropoffs[k]:
                self.owner[d] = k

    def dist_row(self, a: int) -> list[float]:
        """Distances from ``a`` to every node position (zero to and from the depot)."""
        if a == 0:
            return [0.0] * len(self.ids)
        if self._xa is None:
            self._xa, self._ya = np.asarray(self.x), np.asarray(self.y)
        row = np.hypot(self._xa - self.x[a], self._ya - self.y[a]) * self.circ
        row[0] = 0.0
        return row.tolist()

    def dist(self, a: int, b: int) -> float:
        if a == 0 or b == 0:
            return 0.0
        return math.hypot(self.x[a] - self.x[b], self.y[a] - self.y[b]) * self.circ

    def time(self, a: int, b: int) -> float:
        return self.dist(a, b) * self.km_to_min

    def extent_km(self) -> float:
        if len(self.x) < 2:
            return 0.0
        xs, ys = self.x[1:], self.y[1:]
        return math.hypot(max(xs) - min(xs), max(ys) - min(ys)) * self.circ
