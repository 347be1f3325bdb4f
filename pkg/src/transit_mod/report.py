"""CSV reports: per-line layout changes, costs, mode shares and PSO traces."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from .demand import CLASSES
from .network import Layout, PotentialNetwork

LAYOUT_HEADER = ["scenario", "line", "skipped_stops_fraction", "bus_reduction_fraction", "users"]
COST_HEADER = ["scenario", "gamma", "users", "seed", "beta", "n0", "n_star", "relative_saving",
               "n_rs", "total_vehicles", "km"]
SHARE_HEADER = ["scenario", "gamma", "users", "seed"] + list(CLASSES)
TRACE_HEADER = ["scenario", "epoch", "particle", "cost", "n_rs", "total_vehicles"]


@dataclass(frozen=True)
class LineChange:
    line: int
    skipped_fraction: float
    bus_reduction: float
    users: int


@dataclass(frozen=True)
class LayoutChangeReport:
    lines: tuple[LineChange, ...]
    n0: float
    n_star: float
    shares: dict[str, float]


def layout_changes(network: PotentialNetwork, y0: Layout, best, n0: float) -> LayoutChangeReport:
    """Compare the optimized layout of ``best`` (an evaluation record) with ``y0`` line by line."""
    y = best.layout
    out = []
    users = best.line_users or (0,) * len(network.lines)
    for i, line in enumerate(network.lines):
        n_stops = len(line.stops)
        active = sum(y.active[i])
        served = active >= 2 and y.vehicles[i] > 0
        skipped = 1.0 - active / n_stops if served else 1.0
        before, after = y0.vehicles[i], (y.vehicles[i] if served else 0)
        reduction = max(0.0, (before - after) / before) if before > 0 else 0.0
        out.append(LineChange(line.id, skipped, reduction, users[i] if served else 0))
    total = sum(best.class_counts.values())
    shares = {c: (best.class_counts.get(c, 0) / total if total else 0.0) for c in CLASSES}
    return LayoutChangeReport(tuple(out), n0, best.cost, shares)


def _f(x) -> str:
    return f"{float(x):.4f}"


def _writer(path: Path, header):
    fh = open(path, "w", newline="", encoding="utf-8")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    return fh, w


def emit_report(results, out_dir) -> list[Path]:
    """Write the four report CSVs for ``results`` (run results) into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / n for n in ("layout_changes.csv", "costs.csv", "mode_shares.csv", "trace.csv")]
    files = [_writer(p, h) for p, h in zip(paths, (LAYOUT_HEADER, COST_HEADER, SHARE_HEADER, TRACE_HEADER))]
    try:
        (_, lay), (_, cost), (_, share), (_, trace) = files
        for r in results:
            for c in r.changes.lines:
                lay.writerow([r.scenario, c.line, _f(c.skipped_fraction), _f(c.bus_reduction), _f(c.users)])
            b = r.best
            cost.writerow([r.scenario, _f(r.gamma), _f(r.users), r.seed, _f(r.beta), _f(r.initial.cost),
                           _f(b.cost), _f(r.relative_saving), _f(b.n_rs), _f(b.total_vehicles), _f(b.km)])
            share.writerow([r.scenario, _f(r.gamma), _f(r.users), r.seed]
                           + [_f(r.changes.shares[c]) for c in CLASSES])
            for t in r.pso.rows:
                trace.writerow([r.scenario, t.epoch, t.particle, _f(t.cost), _f(t.n_rs), _f(t.total_vehicles)])
    finally:
        for fh, _ in files:
            fh.close()
    return paths


def read_costs(in_dir) -> list[dict[str, str]]:
    with open(Path(in_dir) / "costs.csv", newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def summarize(in_dir) -> str:
    """Plain-text table of the cost rows in a report directory."""
    rows = read_costs(in_dir)
    lines = [f"{'scenario':<32} {'N0':>10} {'N*':>10} {'saving':>8} {'N_RS':>8} {'buses':>8}"]
    for r in rows:
        lines.append(f"{r['scenario']:<32} {float(r['n0']):>10.2f} {float(r['n_star']):>10.2f} "
                     f"{100 * float(r['relative_saving']):>7.1f}% {float(r['n_rs']):>8.0f} "
                     f"{float(r['total_vehicles']):>8.0f}")
    return "\n".join(lines)
