"""
Upper-level layout search: a synchronous particle swarm over stop activation
bits (binary velocities) and per-line vehicle counts (discrete crossover).

Each layout is scored as ``N_RS + beta * sum(N_l)``, where ``N_RS`` comes
from routing the ride-sharing demand that the layout leaves uncovered.
"""

from __future__ import annotations

import csv
import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .demand import PT, RS_PT_W, W_PT_RS, PartitionParams, TravelRequest, partition
from .lns import LnsParams, lns_solve
from .network import (
    Layout,
    PotentialNetwork,
    PTConfig,
    activate,
    build_multigraph,
    line_bounds,
    line_frequencies,
    pair_time_matrix,
)
from .windows import build_instance


@dataclass(frozen=True)
class PsoParams:
    particles: int = 20
    epochs: int = 50
    c1: float = 2.0
    c2: float = 2.0
    cr1: float = 0.55
    cr2: float = 0.65
    cr3: float = 0.52
    beta: float = 2.0
    seed: int = 0
    workers: int = 1

    def problems(self) -> list[str]:
        out = []
        if self.particles < 1:
            out.append("particles must be >= 1")
        if self.epochs < 1:
            out.append("epochs must be >= 1")
        for name in ("cr1", "cr2", "cr3"):
            if not 0 < getattr(self, name) <= 2:
                out.append(f"{name} must be in (0, 2]")
        if not self.beta > 0:
            out.append("beta must be positive")
        if self.c1 < 0 or self.c2 < 0:
            out.append("c1 and c2 must be nonnegative")
        if self.workers < 1:
            out.append("workers must be >= 1")
        return out


@dataclass(frozen=True)
class EvalContext:
    """Everything a layout evaluation needs besides the layout itself."""

    network: PotentialNetwork
    requests: tuple[TravelRequest, ...]
    cfg: PTConfig = PTConfig()
    partition_params: PartitionParams = PartitionParams()
    lns: LnsParams = LnsParams()
    capacity: int = 4
    horizon: float = 180.0
    seed: int = 0


@dataclass(frozen=True)
class EvaluationRecord:
    layout: Layout
    cost: float
    n_rs: int
    total_vehicles: int
    class_counts: dict[str, int]
    km: float
    line_users: tuple[int, ...] = ()


@dataclass
class Particle:
    layout: Layout
    ibest: Layout
    ibest_cost: float
    v0: list[list[float]]
    v1: list[list[float]]


@dataclass(frozen=True)
class TraceRow:
    epoch: int
    particle: int
    cost: float
    n_rs: int
    total_vehicles: int


@dataclass
class PsoResult:
    best: EvaluationRecord
    initial: EvaluationRecord
    gbest_trace: list[float]
    rows: list[TraceRow]
    records: dict[str, EvaluationRecord] = field(repr=False, default_factory=dict)


def layout_seed(layout: Layout, base_seed: int) -> int:
    """Stable LNS seed for a layout, so re-evaluation reproduces the same record."""
    h = hashlib.sha256(f"{base_seed}:{layout.key()}".encode()).digest()
    return int.from_bytes(h[:8], "little")


def layout_cost(n_rs: int, total_vehicles: int, beta: float) -> float:
    """Operating-cost proxy: one unit per ride-sharing car, ``beta`` per PT vehicle."""
    return n_rs + beta * total_vehicles


def evaluate(layout: Layout, ctx: EvalContext, beta: float = 2.0) -> EvaluationRecord:
    """Run the whole lower pipeline for one layout and apply the cost formula."""
    cfg = ctx.cfg
    graph = activate(ctx.network, layout, cfg)
    mg = build_multigraph(graph, line_frequencies(ctx.network, graph, layout, cfg), cfg)
    pt = pair_time_matrix(mg, cfg)
    pd = partition(ctx.requests, graph, pt, ctx.partition_params, cfg)
    inst = build_instance(pd, ctx.requests, graph, pt, ctx.partition_params, cfg,
                          capacity=ctx.capacity, horizon=ctx.horizon)
    sol = lns_solve(inst, replace(ctx.lns, seed=layout_seed(layout, ctx.seed)))
    final = inst.partition
    users = {line.id: 0 for line in ctx.network.lines}
    for rid, cls in final.classes.items():
        if cls in (PT, W_PT_RS, RS_PT_W) and rid in final.stops:
            for line in set(pt.lines_on_path(*final.stops[rid])):
                users[line] += 1
    n_veh = layout.total_vehicles
    return EvaluationRecord(layout, layout_cost(sol.fleet_size, n_veh, beta), sol.fleet_size, n_veh,
                            final.counts(), sol.total_km,
                            tuple(users[line.id] for line in ctx.network.lines))


def _evaluate_job(args):
    layout, ctx, beta = args
    return evaluate(layout, ctx, beta)


class Evaluator:
    """Layout-keyed cache in front of :func:`evaluate`, optionally fanned out to processes."""

    def __init__(self, ctx: EvalContext, beta: float = 2.0, workers: int = 1):
        self.ctx, self.beta, self.workers = ctx, beta, workers
        self.cache: dict[str, EvaluationRecord] = {}

    def __call__(self, layout: Layout) -> EvaluationRecord:
        return self.many([layout])[0]

    def many(self, layouts: Sequence[Layout]) -> list[EvaluationRecord]:
        todo = []
        for y in layouts:
            if y.key() not in self.cache and y.key() not in {t.key() for t in todo}:
                todo.append(y)
        if self.workers > 1 and len(todo) > 1:
            with ProcessPoolExecutor(max_workers=self.workers) as pool:
                done = list(pool.map(_evaluate_job, [(y, self.ctx, self.beta) for y in todo]))
        else:
            done = [evaluate(y, self.ctx, self.beta) for y in todo]
        for y, rec in zip(todo, done):
            self.cache[y.key()] = rec
        return [self.cache[y.key()] for y in layouts]


def sigmoid(v: float) -> float:
    if v >= 0:
        return 1.0 / (1.0 + math.exp(-v))
    z = math.exp(v)
    return z / (1.0 + z)


def _clamp_counts(network: PotentialNetwork, active, counts, cfg: PTConfig) -> tuple[int, ...]:
    """Force counts into the bounds implied by ``active``; lines with under two stops get 0."""
    out = []
    for n, (lo, hi) in zip(counts, line_bounds(network, active, cfg)):
        out.append(0 if hi == 0 else min(max(n, lo), hi))
    return tuple(out)


def random_layout(network: PotentialNetwork, cfg: PTConfig, rng: np.random.Generator) -> Layout:
    active = tuple(tuple(bool(rng.random() < 0.5) for _ in line.stops) for line in network.lines)
    counts = []
    for lo, hi in line_bounds(network, active, cfg):
        counts.append(0 if hi == 0 else int(rng.integers(lo, hi + 1)))
    return Layout(active, tuple(counts))


def _rng(seed: int, epoch: int, particle: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, epoch, particle]))


def init_swarm(y0: Layout, params: PsoParams, network: PotentialNetwork, cfg: PTConfig) -> list[Particle]:
    """Particle 0 is ``y0``; the rest are random layouts. Velocities start at zero."""
    swarm = []
    for p in range(params.particles):
        y = y0 if p == 0 else random_layout(network, cfg, _rng(params.seed, 0, p))
        zeros = [[0.0] * len(line.stops) for line in network.lines]
        swarm.append(Particle(y, y, math.inf, zeros, [list(r) for r in zeros]))
    return swarm


def bpso_step(p: Particle, gbest: Layout, params: PsoParams, rng: np.random.Generator):
    """Update both velocities of every line-stop pair and redraw the activation bits."""
    active = []
    for l, row in enumerate(p.layout.active):
        bits = []
        for s, on in enumerate(row):
            r1, r2 = rng.random(), rng.random()
            d1 = params.c1 * r1 if p.ibest.active[l][s] else -params.c1 * r1
            d2 = params.c2 * r2 if gbest.active[l][s] else -params.c2 * r2
            inertia = rng.uniform(-1.0, 1.0)
            p.v1[l][s] = inertia * p.v1[l][s] + d1 + d2
            p.v0[l][s] = inertia * p.v0[l][s] - d1 - d2
            v = p.v1[l][s] if on else p.v0[l][s]
            bits.append(bool(rng.random() < sigmoid(v)))
        active.append(tuple(bits))
    return tuple(active)


def dpso_step(current: Sequence[int], ibest: Sequence[int], gbest: Sequence[int],
              bounds: Sequence[tuple[int, int]], params: PsoParams,
              rng: np.random.Generator) -> tuple[int, ...]:
    """Staged crossover of vehicle counts with the personal and global bests, then a random reset."""
    out = []
    for n, nib, ngb, (lo, hi) in zip(current, ibest, gbest, bounds):
        aux = n if params.cr1 * rng.random() <= 0.5 else nib
        aux = aux if params.cr2 * rng.random() <= 0.5 else ngb
        if params.cr3 * rng.random() > 0.5:
            aux = int(rng.integers(lo, hi + 1)) if hi > 0 else 0
        out.append(aux)
    return tuple(out)


def perturb(p: Particle, gbest: Layout, params: PsoParams, network: PotentialNetwork,
            cfg: PTConfig, rng: np.random.Generator) -> Layout:
    active = bpso_step(p, gbest, params, rng)
    bounds = line_bounds(network, active, cfg)
    counts = dpso_step(p.layout.vehicles, p.ibest.vehicles, gbest.vehicles, bounds, params, rng)
    return Layout(active, _clamp_counts(network, active, counts, cfg))


def run_pso(y0: Layout, params: PsoParams, ctx: EvalContext,
            evaluator: Evaluator | None = None) -> PsoResult:
    problems = params.problems()
    if problems:
        raise ValueError("; ".join(problems))
    ev = evaluator or Evaluator(ctx, params.beta, params.workers)
    swarm = init_swarm(y0, params, ctx.network, ctx.cfg)
    initial = ev(y0)
    gbest, gbest_rec = y0, initial
    trace, rows = [], []
    for epoch in range(1, params.epochs + 1):
        recs = ev.many([p.layout for p in swarm])
        # updates happen only here, after every particle of the epoch is scored
        for i, (p, rec) in enumerate(zip(swarm, recs)):
            rows.append(TraceRow(epoch, i, rec.cost, rec.n_rs, rec.total_vehicles))
            if rec.cost < p.ibest_cost:
                p.ibest, p.ibest_cost = p.layout, rec.cost
        best_i = min(range(len(swarm)), key=lambda i: (recs[i].cost, i))
        if recs[best_i].cost < gbest_rec.cost:
            gbest, gbest_rec = swarm[best_i].layout, recs[best_i]
        trace.append(gbest_rec.cost)
        if epoch == params.epochs:
            break
        for i, p in enumerate(swarm):
            p.layout = perturb(p, gbest, params, ctx.network, ctx.cfg, _rng(params.seed, epoch, i))
    return PsoResult(gbest_rec, initial, trace, rows, dict(ev.cache))


def write_trace_csv(rows: Sequence[TraceRow], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "particle", "cost", "n_rs", "total_vehicles"])
        for r in rows:
            w.writerow([r.epoch, r.particle, f"{r.cost:.4f}", r.n_rs, r.total_vehicles])

