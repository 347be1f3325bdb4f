import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from transit_mod.errors import ConfigurationError, LineInactiveError, StopInactiveError
from transit_mod.network import (
    Layout,
    Point,
    PotentialLine,
    PotentialNetwork,
    PTConfig,
    PTGraph,
    activate,
    build_multigraph,
    euclidean_km,
    frequency,
    line_end_to_end_time,
    line_time,
    pair_time_matrix,
    rs_travel_time,
    segment_time,
    shortest_pt_path,
    vehicle_bounds,
    walk_time,
)

from conftest import brute_force_path_time, random_fixture

coords = st.floats(-50, 50, allow_nan=False)


def straight_graph(segments, dwell=3.0):
    """Single line 0-1-2-... along x with PT segment times given in minutes at 60 km/h."""
    xs = np.concatenate([[0.0], np.cumsum(segments)])
    stops = {i: Point(float(x), 0.0) for i, x in enumerate(xs)}
    return PTGraph(stops, {0: tuple(stops)}, {s: dwell for s in stops})


def test_euclidean_identity_and_triple():
    assert euclidean_km(Point(1, 2), Point(1, 2)) == 0
    assert euclidean_km(Point(0, 0), Point(3, 4)) == 5.0


@given(coords, coords, coords, coords)
def test_euclidean_symmetric_nonnegative(ax, ay, bx, by):
    a, b = Point(ax, ay), Point(bx, by)
    assert euclidean_km(a, b) == euclidean_km(b, a) >= 0


def test_rs_travel_time(cfg):
    assert rs_travel_time(None, Point(5, 5), cfg) == 0
    assert rs_travel_time(Point(5, 5), None, cfg) == 0
    assert rs_travel_time(Point(0, 0), Point(4, 0), cfg) == pytest.approx(10.04)
    assert rs_travel_time(Point(2, 2), Point(2, 2), cfg) == 0


def test_walk_time(cfg):
    assert walk_time(Point(0, 0), Point(0, 0), cfg) == 0
    assert walk_time(Point(0, 0), Point(1, 0), cfg) == pytest.approx(1391 / 1.4 / 60)
    assert round(walk_time(Point(0, 0), Point(1, 0), cfg), 2) == 16.56
    assert walk_time(Point(0, 0), Point(2.52 / 1.391, 0), cfg) == pytest.approx(30.0)


def test_segment_time(cfg):
    assert segment_time(Point(0, 0), Point(10, 0), cfg) == pytest.approx(10.0)
    assert segment_time(Point(0, 0), Point(0, 0), cfg) == 0
    assert segment_time(Point(0, 0), Point(3, 4), cfg) == pytest.approx(5.0)


def _abcd():
    stops = {s: Point(float(i), 0.0) for i, s in enumerate("ABCD")}
    ids = {s: i for i, s in enumerate("ABCD")}
    network = PotentialNetwork({ids[s]: p for s, p in stops.items()},
                               (PotentialLine(0, (0, 1, 2, 3)),))
    return network


def test_activate_all_off():
    network = _abcd()
    g = activate(network, Layout(((False,) * 4,), (0,)))
    assert g.stops == {} and g.arcs == set()


def test_activate_skips_stop():
    network = _abcd()
    g = activate(network, Layout(((True, False, True, True),), (3,)))
    assert g.arcs == {(0, 2), (2, 0), (2, 3), (3, 2)}
    assert set(g.stops) == {0, 2, 3}


def test_activate_identity_layout():
    network = _abcd()
    g = activate(network, Layout(((True,) * 4,), (3,)))
    assert g.arcs == {(0, 1), (1, 0), (1, 2), (2, 1), (2, 3), (3, 2)}


def test_activate_dimension_mismatch():
    network = _abcd()
    with pytest.raises(ConfigurationError):
        activate(network, Layout(((True,) * 3,), (3,)))
    with pytest.raises(ConfigurationError):
        activate(network, Layout(((True,) * 4, (True,) * 4), (3, 3)))


def test_line_time_examples(cfg):
    g = straight_graph([10.0, 8.0])
    assert line_time(0, 0, 2, 0.25, g, cfg) == pytest.approx(26.0, abs=1e-12)
    assert line_time(0, 2, 0, 0.25, g, cfg) == pytest.approx(26.0, abs=1e-12)
    assert line_time(0, 1, 1, 0.25, g, cfg) == 2.0
    g2 = straight_graph([5.0])
    assert line_time(0, 0, 1, 0.0625, g2, cfg) == pytest.approx(16.0, abs=1e-12)


def test_line_time_requires_service(cfg):
    g = straight_graph([5.0])
    with pytest.raises(LineInactiveError):
        line_time(0, 0, 1, 0.0, g, cfg)


def test_line_time_monotone_in_frequency(cfg):
    g = straight_graph([4.0, 7.0, 2.0])
    times = [line_time(0, 0, 3, f, g, cfg) for f in np.linspace(0.06, 0.25, 20)]
    assert all(a >= b for a, b in zip(times, times[1:]))


def test_line_end_to_end(cfg):
    assert line_end_to_end_time(0, straight_graph([10.0, 8.0]), cfg) == pytest.approx(27.0)
    assert line_end_to_end_time(0, straight_graph([5.0]), cfg) == pytest.approx(11.0)
    with pytest.raises(LineInactiveError):
        line_end_to_end_time(0, PTGraph({}, {0: (1,)}, {}), cfg)


@given(st.lists(st.tuples(coords, coords), min_size=3, max_size=8), st.data())
def test_skipping_interior_stop_never_increases_line_time(pts, data):
    cfg = PTConfig()
    stops = {i: Point(*p) for i, p in enumerate(pts)}
    full = PTGraph(stops, {0: tuple(stops)}, {s: 3.0 for s in stops})
    drop = data.draw(st.integers(1, len(pts) - 2))
    seq = tuple(s for s in stops if s != drop)
    reduced = PTGraph({s: stops[s] for s in seq}, {0: seq}, {s: 3.0 for s in seq})
    assert line_end_to_end_time(0, reduced, cfg) <= line_end_to_end_time(0, full, cfg) + 1e-9


def test_frequency_and_bounds(cfg):
    assert frequency(6, 50.0) == pytest.approx(0.06)
    assert frequency(0, 50.0) == 0
    assert vehicle_bounds(60.0, cfg)[1] == 30
    with pytest.raises(ValueError):
        frequency(3, 0.0)


@given(st.floats(2.0, 500.0))
def test_bounds_respect_frequency_limits(t):
    cfg = PTConfig()
    lo, hi = vehicle_bounds(t, cfg)
    if math.ceil(2 * t * cfg.f_min - 1e-9) <= math.floor(2 * t * cfg.f_max + 1e-9):
        assert frequency(hi, t) <= cfg.f_max + 1e-12
        assert frequency(lo, t) >= cfg.f_min - 1e-12
    assert 1 <= lo <= hi


def test_headway_is_redundant_at_default_frequencies(cfg):
    assert cfg.problems() == []
    assert 1 / cfg.f_max >= cfg.headway_min


def test_multigraph_counts(cfg):
    g = straight_graph([5.0, 5.0])
    mg = build_multigraph(g, {0: 0.1}, cfg)
    assert mg.n_arcs == 6
    empty = build_multigraph(PTGraph({}, {}, {}), {}, cfg)
    assert empty.n_arcs == 0


def test_multigraph_matches_line_time(cfg):
    g = straight_graph([3.0, 9.0, 4.0, 1.5])
    mg = build_multigraph(g, {0: 0.13}, cfg)
    for (a, b), labelled in mg.arcs.items():
        ((line, w),) = labelled
        assert w == pytest.approx(line_time(0, a, b, 0.13, g, cfg), abs=1e-12)


def test_parallel_arcs_preserved(cfg):
    stops = {0: Point(0, 0), 1: Point(5, 0)}
    g = PTGraph(stops, {1: (0, 1), 2: (1, 0)}, {0: 3.0, 1: 3.0})
    mg = build_multigraph(g, {1: 0.1, 2: 0.2}, cfg)
    assert [line for line, _ in mg.arcs[(0, 1)]] == [1, 2]


def test_two_leg_path_beats_slow_direct(cfg):
    # direct arc 0->2 weighs 26 min, legs 0->1 and 1->2 weigh 12 each
    stops = {0: Point(0, 0), 1: Point(7, 0), 2: Point(14, 0)}
    g = PTGraph(stops, {0: (0, 2), 1: (0, 1), 2: (1, 2)}, {0: 3.0, 1: 3.0, 2: 3.0})
    direct_f = 1 / (2 * (26 - 14 - 3))
    leg_f = 1 / (2 * (12 - 7 - 3))
    mg = build_multigraph(g, {0: direct_f, 1: leg_f, 2: leg_f}, cfg)
    assert mg.arcs[(0, 2)][0][1] == pytest.approx(26.0)
    res = shortest_pt_path(0, 2, mg, cfg)
    assert res.total_time == pytest.approx(24.0)
    assert res.lines == (1, 2)
    assert brute_force_path_time(0, 2, g, {0: direct_f, 1: leg_f, 2: leg_f}, cfg) == pytest.approx(24.0)


def test_same_stop_path(cfg):
    g = straight_graph([5.0])
    mg = build_multigraph(g, {0: 0.1}, cfg)
    res = shortest_pt_path(1, 1, mg, cfg)
    assert res.legs == () and res.total_time == 0.0


def test_inactive_stop_rejected(cfg):
    g = straight_graph([5.0])
    mg = build_multigraph(g, {0: 0.1}, cfg)
    with pytest.raises(StopInactiveError):
        shortest_pt_path(0, 9, mg, cfg)


def test_unreachable_marker(cfg):
    stops = {0: Point(0, 0), 1: Point(1, 0), 2: Point(5, 5), 3: Point(6, 5)}
    g = PTGraph(stops, {0: (0, 1), 1: (2, 3)}, {s: 3.0 for s in stops})
    mg = build_multigraph(g, {0: 0.1, 1: 0.1}, cfg)
    res = shortest_pt_path(0, 3, mg, cfg)
    assert not res.reachable
    pt = pair_time_matrix(mg, cfg)
    assert math.isinf(pt.time(0, 3))


@pytest.mark.parametrize("seed", range(30))
def test_shortest_path_matches_enumeration(seed):
    rng = random.Random(seed)
    _, graph, freqs, cfg = random_fixture(rng)
    mg = build_multigraph(graph, freqs, cfg)
    for u in mg.stops:
        for v in mg.stops:
            got = shortest_pt_path(u, v, mg, cfg)
            want = brute_force_path_time(u, v, graph, freqs, cfg)
            if math.isinf(want):
                assert not got.reachable
            else:
                assert got.total_time == pytest.approx(want, abs=1e-9)
                legs_sum = sum(leg.time for leg in got.legs)
                m = len(got.legs)
                assert got.total_time == pytest.approx(
                    cfg.t_ingress + legs_sum + max(m - 1, 0) * cfg.t_change + cfg.t_egress, abs=1e-9)
                assert all(a.v == b.u for a, b in zip(got.legs, got.legs[1:]))


@pytest.mark.parametrize("seed", range(10))
def test_pair_matrix_matches_single_queries(seed):
    rng = random.Random(100 + seed)
    _, graph, freqs, cfg = random_fixture(rng, max_stops=8, max_lines=4)
    mg = build_multigraph(graph, freqs, cfg)
    pt = pair_time_matrix(mg, cfg)
    stops = list(mg.stops)
    for _ in range(10):
        u, v = rng.choice(stops), rng.choice(stops)
        single = shortest_pt_path(u, v, mg, cfg).total_time
        assert pt.time(u, v) == pytest.approx(single, abs=1e-9) or (math.isinf(single) and math.isinf(pt.time(u, v)))
    for s in stops:
        assert pt.time(s, s) == cfg.t_ingress + cfg.t_egress


def test_pair_matrix_symmetric_on_symmetric_lines(cfg):
    stops = {i: Point(float(i * 2), float(i % 2)) for i in range(5)}
    g = PTGraph(stops, {0: (0, 1, 2), 1: (2, 3, 4), 2: (1, 3)}, {s: 3.0 for s in stops})
    mg = build_multigraph(g, {0: 0.1, 1: 0.2, 2: 0.07}, cfg)
    pt = pair_time_matrix(mg, cfg)
    assert np.allclose(pt.matrix, pt.matrix.T)


def test_lines_on_path(cfg):
    stops = {0: Point(0, 0), 1: Point(7, 0), 2: Point(14, 0)}
    g = PTGraph(stops, {1: (0, 1), 2: (1, 2)}, {0: 3.0, 1: 3.0, 2: 3.0})
    mg = build_multigraph(g, {1: 0.1, 2: 0.1}, cfg)
    pt = pair_time_matrix(mg, cfg)
    assert pt.lines_on_path(0, 2) == [1, 2]
    assert pt.lines_on_path(2, 2) == []


def test_skipping_unused_stop_on_single_line(cfg):
    xs = [0, 3, 5, 9, 12]
    stops = {i: Point(float(x), 0.0) for i, x in enumerate(xs)}
    net = PotentialNetwork(stops, (PotentialLine(0, tuple(stops)),))
    full = activate(net, Layout(((True,) * 5,), (4,)), cfg)
    part = activate(net, Layout(((True, True, False, True, True),), (4,)), cfg)
    f_full = {0: frequency(4, line_end_to_end_time(0, full, cfg))}
    f_part = {0: frequency(4, line_end_to_end_time(0, part, cfg))}
    a = pair_time_matrix(build_multigraph(full, f_full, cfg), cfg)
    b = pair_time_matrix(build_multigraph(part, f_part, cfg), cfg)
    for u in b.stops:
        for v in b.stops:
            assert b.time(u, v) <= a.time(u, v) + 1e-9
