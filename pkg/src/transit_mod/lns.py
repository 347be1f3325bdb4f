"""
Large neighbourhood search for the ride-sharing fleet.

The objective is ``w_veh * vehicles + km`` with ``w_veh`` larger than any
reachable km total, so fewer vehicles always wins and km breaks ties.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass
from operator import itemgetter

import numpy as np

from .darp import EPS, CompiledInstance, RSSolution, make_route
from .errors import InstanceError
from .windows import IdarpInstance

RANDOM = "random"
WORST = "worst"
RELATED = "related"
ROUTE = "route"
OPERATORS = (RANDOM, WORST, RELATED, ROUTE)


@dataclass(frozen=True)
class LnsParams:
    iterations: int = 2000
    q_min: float = 10.0  # percent of requests
    q_max: float = 40.0
    q_cap: int | None = None  # absolute ceiling on removals per iteration
    # random, worst, related, route removal
    weights: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)
    accept_worse: float = 0.05  # relative km worsening accepted with probability 1/2 at the start
    final_temperature_ratio: float = 1e-3
    w_veh: float | None = None
    seed: int = 0

    def problems(self) -> list[str]:
        out = []
        if self.iterations < 1:
            out.append("iterations must be >= 1")
        if not 0 < self.q_min <= self.q_max < 100:
            out.append("need 0 < q_min <= q_max < 100")
        if len(self.weights) != len(OPERATORS) or min(self.weights) < 0 or sum(self.weights) <= 0:
            out.append("operator weights must be nonnegative with a positive sum")
        if not self.accept_worse > 0:
            out.append("accept_worse must be positive")
        if not 0 < self.final_temperature_ratio <= 1:
            out.append("final_temperature_ratio must be in (0, 1]")
        if self.q_cap is not None and self.q_cap < 1:
            out.append("q_cap must be >= 1")
        if self.w_veh is not None and not self.w_veh > 0:
            out.append("w_veh must be positive")
        return out


class _Route:
    """Node positions (no depot) with cached schedule, slack, load and arc lengths."""

    __slots__ = ("nodes", "full", "arc", "dep", "lat", "load", "km")

    def __init__(self, nodes: list[int], ci: CompiledInstance):
        self.nodes = nodes
        self.refresh(ci)

    def refresh(self, ci: CompiledInstance) -> None:
        full = [0] + self.nodes + [0]
        m = len(full)
        arc = [ci.dist(full[k], full[k + 1]) for k in range(m - 1)]
        f = ci.km_to_min
        dep = [0.0] * m
        load = [0] * m
        dep[0] = ci.E[0]
        for k in range(1, m - 1):
            n = full[k]
            dep[k] = max(dep[k - 1] + arc[k - 1] * f, ci.E[n]) + ci.S[n]
            o = ci.owner[n]
            load[k] = load[k - 1] + (ci.load[o] if ci.is_pickup[n] else -ci.load[o])
        dep[m - 1] = dep[m - 2]
        lat = [0.0] * m
        lat[m - 1] = ci.L[0]
        for k in range(m - 2, 0, -1):
            n = full[k]
            lat[k] = min(ci.L[n], lat[k + 1] - arc[k] * f - ci.S[n])
        lat[0] = -math.inf  # keeps lat increasing for bisection
        self.full, self.arc = full, arc
        self.dep, self.lat, self.load, self.km = dep, lat, load, sum(arc)

    def copy(self) -> _Route:
        r = _Route.__new__(_Route)
        r.nodes = list(self.nodes)
        r.full, r.arc = self.full, self.arc
        r.dep, r.lat, r.load, r.km = self.dep, self.lat, self.load, self.km
        return r


def _best_in_route(route: _Route, k: int, ci: CompiledInstance, rows=None):
    """Cheapest feasible insertion of request ``k``: (delta km, p, d, i, j) or None.

    The pickup goes after position ``i`` and the dropoff after position
    ``j >= i`` of the depot-framed node list; ``j == i`` puts them adjacent.
    ``rows`` maps candidate nodes to their distance rows. Both scans stop early: with Euclidean travel times, arriving later at one
    position means arriving no earlier at any later one.
    """
    full, arc = route.full, route.arc
    m = len(full) - 2
    dep, lat, load = route.dep, route.lat, route.load
    E, L, S, Q = ci.E, ci.L, ci.S, ci.Q - ci.load[k]
    f = ci.km_to_min
    if rows is None:
        rows = _candidate_rows(k, ci)
    pick = itemgetter(*full)
    best = None
    to_d = {d: pick(rows[d]) for d in ci.dropoffs[k]}
    for p in ci.pickups[k]:
        dp = pick(rows[p])
        Lp, Ep, Sp = L[p] + EPS, E[p], S[p]
        # the node after the pickup is reached no sooner than Ep + Sp
        first = max(0, bisect_left(lat, Ep + Sp - EPS) - 1)
        for d, dd in to_d.items():
            d_pd = rows[p][d]
            Ld, Ed, Sd = L[d] + EPS, E[d], S[d]
            for i in range(first, m + 1):
                if load[i] > Q:
                    continue
                a_p = dep[i] + dp[i] * f
                if a_p > Lp:
                    break
                t_p = (a_p if a_p > Ep else Ep) + Sp
                # dropoff right after the pickup
                a_d = t_p + d_pd * f
                if a_d <= Ld and (a_d if a_d > Ed else Ed) + Sd + dd[i + 1] * f <= lat[i + 1] + EPS:
                    delta = dp[i] + d_pd + dd[i + 1] - arc[i]
                    if best is None or delta < best[0] - EPS:
                        best = (delta, p, d, i, i)
                base = dp[i] + dp[i + 1] - arc[i]
                t, step = t_p, dp[i + 1]
                for j in range(i + 1, m + 1):
                    a = t + step * f
                    if a > lat[j] + EPS or load[j] > Q:
                        break
                    n = full[j]
                    t = (a if a > E[n] else E[n]) + S[n]
                    step = arc[j]
                    a_d = t + dd[j] * f
                    if a_d > Ld:
                        break
                    if (a_d if a_d > Ed else Ed) + Sd + dd[j + 1] * f <= lat[j + 1] + EPS:
                        delta = base + dd[j] + dd[j + 1] - arc[j]
                        if best is None or delta < best[0] - EPS:
                            best = (delta, p, d, i, j)
    return best


def _candidate_rows(k: int, ci: CompiledInstance) -> dict[int, list[float]]:
    return {n: ci.dist_row(n) for n in ci.pickups[k] + ci.dropoffs[k]}


def _insert(route: _Route, p: int, d: int, i: int, j: int, ci: CompiledInstance) -> None:
    nodes = route.nodes
    nodes.insert(j, d)  # positions are in depot-framed terms; node list is shifted by one
    nodes.insert(i, p)
    route.refresh(ci)


class _State:
    def __init__(self, ci: CompiledInstance, routes: list[_Route]):
        self.ci = ci
        self.routes = routes

    def copy(self) -> _State:
        return _State(self.ci, [r.copy() for r in self.routes])

    def km(self) -> float:
        return sum(r.km for r in self.routes)

    def objective(self, w_veh: float) -> float:
        return w_veh * len(self.routes) + self.km()

    def where(self) -> dict[int, int]:
        out = {}
        for ri, r in enumerate(self.routes):
            for n in r.nodes:
                out[self.ci.owner[n]] = ri
        return out


def _insert_request(state: _State, k: int) -> None:
    ci = state.ci
    best = None
    rows = _candidate_rows(k, ci)
    for ri, r in enumerate(state.routes):
        cand = _best_in_route(r, k, ci, rows)
        if cand is not None and (best is None or cand[0] < best[0] - EPS):
            best = cand + (ri,)
    if best is not None:
        _, p, d, i, j, ri = best
        _insert(state.routes[ri], p, d, i, j, ci)
        return
    fresh = _Route([], ci)
    cand = _best_in_route(fresh, k, ci, rows)
    if cand is None:
        raise InstanceError(f"request {ci.req_ids[k]} cannot be served even by a dedicated vehicle")
    _, p, d, i, j = cand
    _insert(fresh, p, d, i, j, ci)
    state.routes.append(fresh)


def _remove(state: _State, ks) -> None:
    ks = set(ks)
    ci = state.ci
    kept = []
    for r in state.routes:
        nodes = [n for n in r.nodes if ci.owner[n] not in ks]
        if len(nodes) != len(r.nodes):
            if not nodes:
                continue
            r.nodes = nodes
            r.refresh(ci)
        kept.append(r)
    state.routes = kept


def _tightness(ci: CompiledInstance, k: int) -> float:
    return min(ci.L[d] for d in ci.dropoffs[k]) - max(ci.E[p] for p in ci.pickups[k])


def _greedy_state(ci: CompiledInstance, rng: np.random.Generator) -> _State:
    n = len(ci.req_ids)
    ties = rng.random(n)
    order = sorted(range(n), key=lambda k: (_tightness(ci, k), ties[k]))
    state = _State(ci, [])
    for k in order:
        _insert_request(state, k)
    return state


def _to_solution(state: _State, inst: IdarpInstance, w_veh: float, trace=()) -> RSSolution:
    ci = state.ci
    routes, chosen = [], {}
    for v, r in enumerate(state.routes):
        ids = [ci.ids[n] for n in r.nodes]
        routes.append(make_route(v, ids, inst))
        for n in r.nodes:
            rid = ci.req_ids[ci.owner[n]]
            p, d = chosen.get(rid, (None, None))
            if ci.is_pickup[n]:
                p = ci.ids[n]
            else:
                d = ci.ids[n]
            chosen[rid] = (p, d)
    km = sum(r.km for r in state.routes)
    return RSSolution(tuple(routes), dict(sorted(chosen.items())), len(routes), km,
                      frozenset(), w_veh * len(routes) + km, tuple(trace))


def vehicle_weight(inst: IdarpInstance, ci: CompiledInstance | None = None) -> float:
    """A per-vehicle cost exceeding any km total the instance can produce."""
    ci = ci or CompiledInstance(inst)
    direct = sum(min(ci.dist(p, d) for p in ci.pickups[k] for d in ci.dropoffs[k])
                 for k in range(len(ci.req_ids)))
    bound = 2 * len(ci.req_ids) * ci.extent_km()
    return max(10.0 * direct, bound) + 1.0


def greedy_initial(inst: IdarpInstance, seed: int = 0) -> RSSolution:
    """Insert requests tightest-window first at their cheapest feasible position."""
    ci = CompiledInstance(inst)
    state = _greedy_state(ci, np.random.default_rng(seed))
    return _to_solution(state, inst, vehicle_weight(inst, ci))


# --- destroy / repair -------------------------------------------------------

def _removal_saving(r: _Route, idx_p: int, idx_d: int, ci: CompiledInstance) -> float:
    full = [0] + r.nodes + [0]
    ip, id_ = idx_p + 1, idx_d + 1
    dist = ci.dist
    if id_ == ip + 1:
        a, p, d, b = full[ip - 1], full[ip], full[id_], full[id_ + 1]
        return dist(a, p) + dist(p, d) + dist(d, b) - dist(a, b)
    s = dist(full[ip - 1], full[ip]) + dist(full[ip], full[ip + 1]) - dist(full[ip - 1], full[ip + 1])
    s += dist(full[id_ - 1], full[id_]) + dist(full[id_], full[id_ + 1]) - dist(full[id_ - 1], full[id_ + 1])
    return s


def _savings(state: _State) -> dict[int, float]:
    ci = state.ci
    out = {}
    for r in state.routes:
        at: dict[int, list[int]] = {}
        for idx, n in enumerate(r.nodes):
            at.setdefault(ci.owner[n], []).append(idx)
        for k, (ip, id_) in at.items():
            out[k] = _removal_saving(r, ip, id_, ci)
    return out


def _relatedness(ci: CompiledInstance, a: int, b: int, scale_km: float, scale_min: float) -> float:
    pa, pb = ci.pickups[a][0], ci.pickups[b][0]
    space = math.hypot(ci.x[pa] - ci.x[pb], ci.y[pa] - ci.y[pb]) * ci.circ / scale_km

    def mid(k):
        return 0.5 * (max(ci.E[p] for p in ci.pickups[k]) + min(ci.L[d] for d in ci.dropoffs[k]))

    return space + abs(mid(a) - mid(b)) / scale_min


def _choose_removals(state: _State, q: int, op: str, rng: np.random.Generator) -> list[int]:
    ci = state.ci
    served = sorted(state.where())
    q = min(q, len(served))
    if op == RANDOM:
        return [served[i] for i in rng.choice(len(served), size=q, replace=False)]
    if op == WORST:
        sav = _savings(state)
        return sorted(served, key=lambda k: (-sav[k], k))[:q]
    if op == RELATED:
        seed_req = served[int(rng.integers(len(served)))]
        scale_km = max(ci.extent_km(), EPS)
        scale_min = max(max(ci.L) - min(ci.E), EPS)
        others = sorted((_relatedness(ci, seed_req, k, scale_km, scale_min), k) for k in served if k != seed_req)
        return [seed_req] + [k for _, k in others[:q - 1]]
    if op == ROUTE:
        sizes = [len(r.nodes) for r in state.routes]
        smallest = min(sizes)
        pick = [i for i, s in enumerate(sizes) if s == smallest]
        r = state.routes[pick[int(rng.integers(len(pick)))]]
        return sorted({ci.owner[n] for n in r.nodes})
    raise ValueError(f"unknown removal operator {op!r}")


def _destroy(state: _State, q: int, op: str, rng: np.random.Generator) -> list[int]:
    """Remove requests in place and return them (compact request indices)."""
    pool = _choose_removals(state, q, op, rng)
    _remove(state, pool)
    return pool


def _repair(state: _State, pool, rng: np.random.Generator) -> None:
    """Greedy best insertion of ``pool`` in random order; opens vehicles as needed."""
    pool = list(pool)
    for idx in rng.permutation(len(pool)):
        _insert_request(state, pool[idx])


def _from_solution(sol: RSSolution, ci: CompiledInstance) -> _State:
    return _State(ci, [_Route([ci.pos[n] for n in r.nodes], ci) for r in sol.routes if r.visits])


def destroy(sol: RSSolution, inst: IdarpInstance, q: int, op: str, seed: int = 0) -> tuple[RSSolution, list[int]]:
    """Remove ``q`` requests with operator ``op``; returns the partial solution and removed request ids."""
    served = sum(len(r.visits) for r in sol.routes) // 2
    if not 1 <= q <= served:
        raise ValueError(f"q must be in [1, {served}]")
    ci = CompiledInstance(inst)
    state = _from_solution(sol, ci)
    pool = _destroy(state, q, op, np.random.default_rng(seed))
    partial = _to_solution(state, inst, vehicle_weight(inst, ci))
    removed = sorted(ci.req_ids[k] for k in pool)
    partial.unassigned = frozenset(removed)
    return partial, removed


def repair(partial: RSSolution, pool, inst: IdarpInstance, seed: int = 0) -> RSSolution:
    """Reinsert the requests ``pool`` (ids) into ``partial`` by greedy best insertion."""
    ci = CompiledInstance(inst)
    state = _from_solution(partial, ci)
    index = {rid: k for k, rid in enumerate(ci.req_ids)}
    _repair(state, [index[r] for r in pool], np.random.default_rng(seed))
    out = _to_solution(state, inst, vehicle_weight(inst, ci))
    out.unassigned = frozenset(partial.unassigned) - set(pool)
    return out


# --- search -----------------------------------------------------------------

def lns_solve(inst: IdarpInstance, params: LnsParams = LnsParams()) -> RSSolution:
    problems = params.problems()
    if problems:
        raise ValueError("; ".join(problems))
    ci = CompiledInstance(inst)
    w_veh = params.w_veh if params.w_veh is not None else vehicle_weight(inst, ci)
    n = len(ci.req_ids)
    rng = np.random.default_rng(params.seed)
    cur = _greedy_state(ci, rng)
    if n == 0:
        return _to_solution(cur, inst, w_veh, (0.0,) * params.iterations)

    best = cur.copy()
    f_cur = f_best = cur.objective(w_veh)
    temp = params.accept_worse * max(cur.km(), EPS) / math.log(2)
    cooling = params.final_temperature_ratio ** (1.0 / params.iterations)
    q_lo = max(1, math.ceil(params.q_min / 100 * n))
    q_hi = max(q_lo, math.floor(params.q_max / 100 * n))
    if params.q_cap is not None:
        q_lo, q_hi = min(q_lo, params.q_cap), min(q_hi, params.q_cap)
    weights = np.asarray(params.weights, dtype=float)
    weights = weights / weights.sum()
    trace = []
    for _ in range(params.iterations):
        op = OPERATORS[int(rng.choice(len(OPERATORS), p=weights))]
        q = int(rng.integers(q_lo, q_hi + 1))
        cand = cur.copy()
        pool = _destroy(cand, q, op, rng)
        _repair(cand, pool, rng)
        f_cand = cand.objective(w_veh)
        delta = f_cand - f_cur
        if delta <= 0 or rng.random() < math.exp(-delta / temp):
            cur, f_cur = cand, f_cand
        if f_cand < f_best - EPS:
            best, f_best = cand.copy(), f_cand
        trace.append(f_best)
        temp *= cooling
    return _to_solution(best, inst, w_veh, trace)
