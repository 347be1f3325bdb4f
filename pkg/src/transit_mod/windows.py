"""
Ride-sharing time windows for transfer and endpoint nodes, and assembly of
the integrated dial-a-ride instance handed to the lower level.

Node ids follow the usual dial-a-ride layout: depot 0, origins 1..n,
destinations n+1..2n, and per-user copies of the active stops starting at
2n + (i-1)*|S| + 1 for user i.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .demand import (
    RS,
    RS_PT_W,
    W_PT_RS,
    PartitionedDemand,
    PartitionParams,
    TravelRequest,
    transfer_candidates,
)
from .network import PairTimes, Point, PTConfig, PTGraph, euclidean_km, rs_travel_time, walk_distance, walk_time

DEPOT = "depot"
ORIGIN = "origin"
DESTINATION = "destination"
TRANSFER = "transfer"

SERVICE_TIME = 1.0


@dataclass(frozen=True)
class IdarpNode:
    id: int
    kind: str
    location: Point | None
    earliest: float
    latest: float
    owner: int | None = None
    service: float = 0.0
    stop: int | None = None


@dataclass(frozen=True)
class IdarpRequest:
    request_id: int
    user: int
    cls: str
    pickups: tuple[int, ...]
    dropoffs: tuple[int, ...]
    load: int = 1


@dataclass
class IdarpInstance:
    nodes: dict[int, IdarpNode]
    requests: list[IdarpRequest]
    capacity: int
    cfg: PTConfig
    partition: PartitionedDemand | None = None
    demoted: frozenset = frozenset()

    @property
    def depot(self) -> IdarpNode:
        return self.nodes[0]

    def distance_km(self, a: int, b: int) -> float:
        """Car distance with circuity; arcs touching the depot are free."""
        if a == 0 or b == 0:
            return 0.0
        return euclidean_km(self.nodes[a].location, self.nodes[b].location) * self.cfg.circ

    def travel_time(self, a: int, b: int) -> float:
        return rs_travel_time(self.nodes[a].location, self.nodes[b].location, self.cfg)

    def window_problems(self) -> list[str]:
        out = []
        for n in self.nodes.values():
            if n.earliest > n.latest + 1e-9:
                out.append(f"node {n.id}: window [{n.earliest}, {n.latest}] is empty")
        for r in self.requests:
            ok = any(self.nodes[p].earliest + self.nodes[p].service + self.travel_time(p, d)
                     <= self.nodes[d].latest + 1e-9
                     for p in r.pickups for d in r.dropoffs)
            if not ok:
                out.append(f"request {r.request_id}: no consistent pickup/dropoff pair")
        return out


def _eligible_stops(y: Point, graph: PTGraph, cfg: PTConfig, d_walk_max: float):
    return [v for v, p in graph.stops.items() if walk_distance(p, y, cfg) <= d_walk_max]


def latest_departure(s: int, y: Point, l_i: float, pair_times: PairTimes, graph: PTGraph,
                     cfg: PTConfig, d_walk_max: float) -> float | None:
    """Latest time to leave stop ``s`` and still walk into ``y`` by ``l_i``; None if no egress stop works."""
    best = None
    for v in _eligible_stops(y, graph, cfg, d_walk_max):
        t_pt = pair_times.time(s, v)
        if not math.isfinite(t_pt):
            continue
        t = l_i - t_pt - walk_time(graph.stops[v], y, cfg)
        if best is None or t > best:
            best = t
    return best


def earliest_arrival(y: Point, s: int, e_i: float, pair_times: PairTimes, graph: PTGraph,
                     cfg: PTConfig, d_walk_max: float) -> float | None:
    """Earliest arrival at stop ``s`` walking from ``y`` no sooner than ``e_i``; None if unreachable."""
    best = None
    for v in _eligible_stops(y, graph, cfg, d_walk_max):
        t_pt = pair_times.time(v, s)
        if not math.isfinite(t_pt):
            continue
        t = e_i + walk_time(y, graph.stops[v], cfg) + t_pt
        if best is None or t < best:
            best = t
    return best


def transfer_node_id(user: int, stop_index: int, n_users: int, n_stops: int) -> int:
    """Node id for user ``user`` (1-based) at active stop ``stop_index`` (1-based)."""
    return 2 * n_users + (user - 1) * n_stops + stop_index


def build_instance(pd: PartitionedDemand, requests: Sequence[TravelRequest], graph: PTGraph,
                   pair_times: PairTimes, params: PartitionParams, cfg: PTConfig,
                   capacity: int = 4, horizon: float = 180.0,
                   service_time: float = SERVICE_TIME) -> IdarpInstance:
    by_id = {r.id: r for r in requests}
    rs_ids = sorted(pd.rs_requests)
    n = len(rs_ids)
    stop_order = graph.sorted_stops()
    stop_index = {s: j + 1 for j, s in enumerate(stop_order)}
    n_stops = len(stop_order)
    dmax, k = params.d_walk_max, params.k

    nodes: dict[int, IdarpNode] = {}
    reqs: list[IdarpRequest] = []
    demoted = []

    def door_to_door(user, req):
        e, l = req.earliest, req.latest
        direct = rs_travel_time(req.origin, req.destination, cfg)
        # the boarding minute must fit even when the tolerance equals the direct ride
        l = max(l, e + service_time + direct)
        nodes[user] = IdarpNode(user, ORIGIN, req.origin, e, l - direct, req.id, service_time)
        nodes[user + n] = IdarpNode(user + n, DESTINATION, req.destination, e + direct, l, req.id, service_time)
        return IdarpRequest(req.id, user, RS, (user,), (user + n,))

    for user, rid in enumerate(rs_ids, start=1):
        req = by_id[rid]
        cls = pd.classes[rid]
        e, l = req.earliest, req.latest
        if cls == RS:
            reqs.append(door_to_door(user, req))
            continue

        if cls == W_PT_RS:
            alts = []
            for s in sorted(transfer_candidates(req.destination, graph, k)):
                e_s = earliest_arrival(req.origin, s, e, pair_times, graph, cfg, dmax)
                if e_s is None:
                    continue
                ride = rs_travel_time(graph.stops[s], req.destination, cfg)
                if e_s + service_time + ride <= l:
                    alts.append((s, e_s, ride))
            if not alts:
                demoted.append(rid)
                reqs.append(door_to_door(user, req))
                continue
            ids = []
            for s, e_s, ride in alts:
                nid = transfer_node_id(user, stop_index[s], n, n_stops)
                nodes[nid] = IdarpNode(nid, TRANSFER, graph.stops[s], e_s, l - ride, rid, service_time, s)
                ids.append(nid)
            drop_e = min(e_s + ride for _, e_s, ride in alts)
            nodes[user + n] = IdarpNode(user + n, DESTINATION, req.destination, drop_e, l, rid, service_time)
            reqs.append(IdarpRequest(rid, user, cls, tuple(ids), (user + n,)))

        elif cls == RS_PT_W:
            alts = []
            for s in sorted(transfer_candidates(req.origin, graph, k)):
                l_s = latest_departure(s, req.destination, l, pair_times, graph, cfg, dmax)
                if l_s is None:
                    continue
                ride = rs_travel_time(req.origin, graph.stops[s], cfg)
                if e + service_time + ride <= l_s:
                    alts.append((s, l_s, ride))
            if not alts:
                demoted.append(rid)
                reqs.append(door_to_door(user, req))
                continue
            ids = []
            for s, l_s, ride in alts:
                nid = transfer_node_id(user, stop_index[s], n, n_stops)
                nodes[nid] = IdarpNode(nid, TRANSFER, graph.stops[s], e + ride, l_s, rid, service_time, s)
                ids.append(nid)
            pick_l = max(l_s - ride for _, l_s, ride in alts)
            nodes[user] = IdarpNode(user, ORIGIN, req.origin, e, pick_l, rid, service_time)
            reqs.append(IdarpRequest(rid, user, cls, (user,), tuple(ids)))
        else:
            raise ValueError(f"request {rid} has non-RS class {cls}")

    slack = max((by_id[r].tolerance for r in rs_ids), default=0.0)
    start = min([0.0] + [nd.earliest for nd in nodes.values()])
    end = max([horizon] + [nd.latest for nd in nodes.values()]) + slack
    nodes[0] = IdarpNode(0, DEPOT, None, start, end)
    nodes = dict(sorted(nodes.items()))
    return IdarpInstance(nodes, reqs, capacity, cfg, pd.demote(demoted), frozenset(demoted))


def write_instance(inst: IdarpInstance, path) -> None:
    """One node per line: id kind x y earliest latest service owner."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# capacity {inst.capacity}\n")
        fh.write(f"# circ {inst.cfg.circ!r} v_car_kmh {inst.cfg.v_car_kmh!r}\n")
        for nd in inst.nodes.values():
            x, y = (nd.location if nd.location is not None else (math.nan, math.nan))
            owner = -1 if nd.owner is None else nd.owner
            fh.write(f"{nd.id} {nd.kind} {x!r} {y!r} {nd.earliest!r} {nd.latest!r} {nd.service!r} {owner}\n")


def read_instance(path) -> IdarpInstance:
    capacity = 4
    circ, v_car = PTConfig.circ, PTConfig.v_car_kmh
    nodes = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "#":
                if parts[1] == "capacity":
                    capacity = int(parts[2])
                elif parts[1] == "circ":
                    circ, v_car = float(parts[2]), float(parts[4])
                continue
            nid, kind = int(parts[0]), parts[1]
            x, y, e, l, svc = map(float, parts[2:7])
            owner = int(parts[7])
            loc = None if kind == DEPOT else Point(x, y)
            nodes[nid] = IdarpNode(nid, kind, loc, e, l, None if owner < 0 else owner, svc)
    by_owner: dict[int, list[IdarpNode]] = {}
    for nd in nodes.values():
        if nd.owner is not None:
            by_owner.setdefault(nd.owner, []).append(nd)
    n = len(by_owner)
    reqs = []
    for owner, nds in sorted(by_owner.items()):
        origin = [d.id for d in nds if d.kind == ORIGIN]
        dest = [d.id for d in nds if d.kind == DESTINATION]
        transfer = tuple(sorted(d.id for d in nds if d.kind == TRANSFER))
        if origin and dest:
            reqs.append(IdarpRequest(owner, origin[0], RS, (origin[0],), (dest[0],)))
        elif dest:
            reqs.append(IdarpRequest(owner, dest[0] - n, W_PT_RS, transfer, (dest[0],)))
        else:
            reqs.append(IdarpRequest(owner, origin[0], RS_PT_W, (origin[0],), transfer))
    reqs.sort(key=lambda r: r.user)
    cfg = PTConfig(circ=circ, v_car_kmh=v_car)
    return IdarpInstance(dict(sorted(nodes.items())), reqs, capacity, cfg)

