"""Single runs, warm-started gamma sweeps and demand sweeps over a scenario."""

from __future__ import annotations

from dataclasses import dataclass, replace

from .demand import partition as partition_demand
from .network import Layout, activate, build_multigraph, line_frequencies, pair_time_matrix
from .pso import EvaluationRecord, Evaluator, PsoResult, run_pso
from .report import LayoutChangeReport, layout_changes
from .scenario import ScenarioConfig, initial_layout


@dataclass
class RunResult:
    scenario: str
    gamma: float
    users: int
    seed: int
    beta: float
    initial: EvaluationRecord  # the all-stops, default-bus layout
    start: EvaluationRecord  # particle 0 (initial layout or warm start)
    best: EvaluationRecord
    pso: PsoResult
    changes: LayoutChangeReport

    @property
    def relative_saving(self) -> float:
        n0 = self.initial.cost
        return (n0 - self.best.cost) / n0 if n0 > 0 else 0.0


def scenario_id(cfg: ScenarioConfig, gamma: float, users: int) -> str:
    return f"{cfg.name}-g{gamma:g}-n{users}-s{cfg.seed}"


def run_single(cfg: ScenarioConfig, gamma: float | None = None, n_users: int | None = None,
               warm_start: Layout | None = None) -> RunResult:
    """Optimize one (gamma, demand) case from ``warm_start`` or the initial layout."""
    gamma = cfg.gamma if gamma is None else gamma
    n_users = cfg.users if n_users is None else n_users
    requests = cfg.requests(n_users, gamma)
    ev = Evaluator(cfg.context(requests), cfg.pso.beta, cfg.pso.workers)
    y0 = initial_layout(cfg)
    start = warm_start if warm_start is not None else y0
    result = run_pso(start, cfg.pso, ev.ctx, ev)
    initial = ev(y0)
    changes = layout_changes(cfg.network, y0, result.best, initial.cost)
    return RunResult(scenario_id(cfg, gamma, n_users), gamma, n_users, cfg.seed, cfg.pso.beta,
                     initial, result.initial, result.best, result, changes)


def gamma_sweep(cfg: ScenarioConfig, n_users: int | None = None) -> list[RunResult]:
    """Run the gamma schedule in order, each case starting from the previous optimum."""
    out = []
    warm = None
    for g in cfg.gamma_schedule:
        r = run_single(cfg, g, n_users, warm)
        warm = r.best.layout
        out.append(r)
    return out


def demand_sweep(cfg: ScenarioConfig, gamma: float | None = None) -> list[RunResult]:
    """One fresh run per demand size, each from the initial layout."""
    return [run_single(cfg, gamma, n) for n in cfg.demand_sizes]


def with_seed(cfg: ScenarioConfig, seed: int) -> ScenarioConfig:
    return replace(cfg, seed=seed, pso=replace(cfg.pso, seed=seed))


def initial_partition(cfg: ScenarioConfig, gamma: float | None = None, n_users: int | None = None):
    """Mode classes of the scenario demand under the initial layout."""
    gamma = cfg.gamma if gamma is None else gamma
    n_users = cfg.users if n_users is None else n_users
    requests = cfg.requests(n_users, gamma)
    y0 = initial_layout(cfg)
    graph = activate(cfg.network, y0, cfg.pt)
    mg = build_multigraph(graph, line_frequencies(cfg.network, graph, y0, cfg.pt), cfg.pt)
    return partition_demand(requests, graph, pair_time_matrix(mg, cfg.pt), cfg.partition, cfg.pt)
