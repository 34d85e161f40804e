"""Local collision-aware segments and global visiting-order solvers."""

import itertools

import numpy as np
import pytest

from viewplan.errors import FormatError, InvalidArgumentError, TooLargeError
from viewplan.geometry import ViewSpace, top_view, units_to_view_space
from viewplan.pathplan import (ARC_STEP, DEFAULT_CLEARANCE, EXACT_SOLVER_CAP,
                               LocalPath, ObstacleSphere, PathPlan,
                               build_cost_matrix, hamiltonian_path_exact,
                               hamiltonian_path_heuristic, load_cost_csv,
                               load_path, local_path, obstacle_for_object,
                               pairwise_cost, plan_global_path, path_length,
                               save_cost_csv, save_path, validate_cost_matrix)

ORIGIN_FREE = ObstacleSphere(center=(0.0, 0.0, 0.0), radius_obs=0.0)


def brute_force_best(costs, start):
    """Reference optimum: scan every permutation with the start pinned."""
    n = len(costs)
    rest = [i for i in range(n) if i != start]
    best_len, best_order = np.inf, None
    for perm in itertools.permutations(rest):
        order = (start,) + perm
        length = path_length(costs, order)
        if length < best_len:
            best_len, best_order = length, order
    return best_len, best_order


def random_instance(rng, n):
    pts = rng.uniform(-1.0, 1.0, size=(n, 3))
    return build_cost_matrix(pts, ORIGIN_FREE)


def hemisphere_points(rng, n, radius):
    raw = rng.normal(size=(n, 3))
    raw /= np.linalg.norm(raw, axis=1, keepdims=True)
    raw[:, 2] = np.abs(raw[:, 2])
    return raw * radius


def test_obstacle_validation():
    with pytest.raises(InvalidArgumentError):
        ObstacleSphere(center=(0.0, 0.0), radius_obs=0.1)
    with pytest.raises(InvalidArgumentError):
        ObstacleSphere(center=(0.0, 0.0, 0.0), radius_obs=-0.1)
    obs = obstacle_for_object((0.0, 0.0, 0.0), size=0.1)
    assert obs.radius_obs == pytest.approx(0.05 + DEFAULT_CLEARANCE)
    with pytest.raises(InvalidArgumentError):
        obstacle_for_object((0.0, 0.0, 0.0), size=0.0)


def test_local_path_straight_when_chord_clears():
    a = np.array([0.3, 0.0, 0.0])
    b = np.array([0.0, 0.0, 0.3])
    obs = ObstacleSphere(center=(0.0, 0.0, 0.0), radius_obs=0.1)
    seg = local_path(a, b, obs)
    assert not seg.is_arc
    assert seg.length == pytest.approx(np.linalg.norm(b - a), abs=1e-12)
    assert np.array_equal(seg.points, np.stack([a, b]))


def test_local_path_zero_for_identical_points():
    a = np.array([0.3, 0.0, 0.0])
    seg = local_path(a, a, ORIGIN_FREE)
    assert seg.length == 0.0 and not seg.is_arc
    assert seg.points.shape == (1, 3)


def test_local_path_antipodal_detour_over_zenith():
    r = 0.3
    a = np.array([r, 0.0, 0.0])
    b = np.array([-r, 0.0, 0.0])
    obs = ObstacleSphere(center=(0.0, 0.0, 0.0), radius_obs=0.1)
    seg = local_path(a, b, obs)
    assert seg.is_arc
    assert seg.length == pytest.approx(np.pi * r, rel=1e-9)
    norms = np.linalg.norm(seg.points, axis=1)
    assert np.allclose(norms, r, atol=1e-9)
    # The angular sampling keeps segments shorter than the step bound.
    assert len(seg.points) >= int(np.ceil(np.pi / ARC_STEP)) + 1
    assert np.allclose(seg.points[0], a, atol=1e-12)
    assert np.allclose(seg.points[-1], b, atol=1e-9)
    # The pivot carries the arc over the top of the sphere.
    assert seg.points[len(seg.points) // 2][2] == pytest.approx(r, abs=1e-3)


def test_local_path_random_pairs_respect_bounds_and_clearance():
    rng = np.random.default_rng(0)
    r = 0.3
    obs = ObstacleSphere(center=(0.0, 0.0, 0.0), radius_obs=0.12)
    for _ in range(200):
        a, b = hemisphere_points(rng, 2, r)
        seg = local_path(a, b, obs)
        euclid = float(np.linalg.norm(b - a))
        assert seg.length >= euclid - 1e-12
        assert seg.length <= np.pi * r + 1e-9
        assert np.allclose(seg.points[0], a, atol=1e-9)
        assert np.allclose(seg.points[-1], b, atol=1e-9)
        # No polyline vertex enters the obstacle.
        assert np.linalg.norm(seg.points, axis=1).min() >= obs.radius_obs - 1e-9
        if not seg.is_arc:
            assert seg.length == pytest.approx(euclid, abs=1e-12)


def test_local_path_rejects_view_inside_obstacle():
    obs = ObstacleSphere(center=(0.0, 0.0, 0.0), radius_obs=0.1)
    a = np.array([0.05, 0.0, 0.0])
    b = np.array([-0.05, 0.0, 0.0])
    with pytest.raises(InvalidArgumentError):
        local_path(a, b, obs)


def test_equatorial_triangle_costs_are_chords():
    r = 0.3
    angles = np.radians([0.0, 120.0, 240.0])
    pts = np.stack([r * np.cos(angles), r * np.sin(angles), np.zeros(3)], axis=1)
    obs = ObstacleSphere(center=(0.0, 0.0, 0.0), radius_obs=0.05)
    costs = build_cost_matrix(pts, obs)
    chord = r * np.sqrt(3.0)
    for i in range(3):
        for j in range(3):
            want = 0.0 if i == j else chord
            assert costs[i, j] == pytest.approx(want, rel=1e-9)


def test_build_cost_matrix_accepts_view_space_and_rejects_tiny():
    rng = np.random.default_rng(1)
    units = hemisphere_points(rng, 5, 1.0)
    vs = units_to_view_space(units, 0.3, (0.0, 0.0, 0.0), "custom")
    costs = build_cost_matrix(vs, ORIGIN_FREE)
    assert costs.shape == (5, 5)
    assert np.allclose(costs, build_cost_matrix(vs.positions(), ORIGIN_FREE))
    with pytest.raises(InvalidArgumentError):
        build_cost_matrix(np.zeros((1, 3)), ORIGIN_FREE)


def test_validate_cost_matrix_rejections():
    good = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert np.array_equal(validate_cost_matrix(good), good)
    with pytest.raises(InvalidArgumentError):
        validate_cost_matrix(np.zeros((2, 3)))
    with pytest.raises(InvalidArgumentError):
        validate_cost_matrix(np.array([[0.0, np.inf], [np.inf, 0.0]]))
    with pytest.raises(InvalidArgumentError):
        validate_cost_matrix(np.array([[0.0, -1.0], [-1.0, 0.0]]))
    with pytest.raises(InvalidArgumentError):
        validate_cost_matrix(np.array([[0.5, 1.0], [1.0, 0.0]]))
    with pytest.raises(InvalidArgumentError):
        validate_cost_matrix(np.array([[0.0, 1.0], [2.0, 0.0]]))


def test_exact_two_nodes_and_forced_line():
    costs = np.array([[0.0, 2.5], [2.5, 0.0]])
    plan = hamiltonian_path_exact(costs, 0)
    assert plan.order == (0, 1)
    assert plan.total_length == pytest.approx(2.5)
    assert plan.solver == "exact" and plan.optimality_gap_bound == 0.0

    # Points on a line at x = 0, 1, 5; starting in the middle forces a turn.
    pts = np.array([[0.0, 1.0, 0], [1.0, 1.0, 0], [5.0, 1.0, 0]])
    costs = build_cost_matrix(pts, ORIGIN_FREE)
    plan = hamiltonian_path_exact(costs, 1)
    assert plan.order == (1, 0, 2)
    assert plan.total_length == pytest.approx(6.0)


def test_exact_single_node():
    plan = hamiltonian_path_exact(np.zeros((1, 1)), 0)
    assert plan.order == (0,) and plan.total_length == 0.0


def test_exact_matches_permutation_scan():
    rng = np.random.default_rng(2)
    for trial in range(40):
        n = int(rng.integers(4, 8))
        costs = random_instance(rng, n)
        start = int(rng.integers(0, n))
        plan = hamiltonian_path_exact(costs, start)
        best_len, _ = brute_force_best(costs, start)
        assert plan.order[0] == start
        assert sorted(plan.order) == list(range(n))
        assert path_length(costs, plan.order) == pytest.approx(plan.total_length, abs=1e-9)
        assert plan.total_length == pytest.approx(best_len, abs=1e-9), trial


def test_exact_cap_and_start_validation():
    costs = random_instance(np.random.default_rng(3), 6)
    with pytest.raises(TooLargeError):
        hamiltonian_path_exact(costs, 0, cap=5)
    with pytest.raises(InvalidArgumentError):
        hamiltonian_path_exact(costs, -1)
    with pytest.raises(InvalidArgumentError):
        hamiltonian_path_exact(costs, 6)
    assert EXACT_SOLVER_CAP == 20


def test_heuristic_matches_exact_on_trivial_and_small():
    costs = np.array([[0.0, 2.5], [2.5, 0.0]])
    plan = hamiltonian_path_heuristic(costs, 0)
    assert plan.order == (0, 1) and plan.total_length == pytest.approx(2.5)
    assert plan.solver == "heuristic" and plan.optimality_gap_bound is None

    rng = np.random.default_rng(4)
    for _ in range(10):
        costs = random_instance(rng, 5)
        exact = hamiltonian_path_exact(costs, 0)
        heur = hamiltonian_path_heuristic(costs, 0, seed=1)
        assert heur.total_length >= exact.total_length - 1e-9
        assert sorted(heur.order) == list(range(5)) and heur.order[0] == 0


def test_heuristic_quality_against_exact():
    rng = np.random.default_rng(5)
    ratios = []
    for _ in range(30):
        n = int(rng.integers(6, 11))
        costs = random_instance(rng, n)
        exact = hamiltonian_path_exact(costs, 0).total_length
        heur = hamiltonian_path_heuristic(costs, 0, seed=7).total_length
        ratios.append(heur / exact)
    ratios = np.array(ratios)
    assert np.all(ratios >= 1.0 - 1e-12)
    assert np.all(ratios <= 1.10)
    assert np.mean(ratios <= 1.05) >= 0.8


def test_heuristic_is_deterministic_for_a_seed():
    costs = random_instance(np.random.default_rng(6), 9)
    a = hamiltonian_path_heuristic(costs, 2, seed=11)
    b = hamiltonian_path_heuristic(costs, 2, seed=11)
    assert a.order == b.order
    assert a.total_length == b.total_length


def test_warm_order_seeding_and_dominance():
    rng = np.random.default_rng(7)
    costs = random_instance(rng, 9)
    exact = hamiltonian_path_exact(costs, 0)
    warm = hamiltonian_path_heuristic(costs, 0, seed=0, warm_orders=[exact.order])
    assert warm.total_length == pytest.approx(exact.total_length, abs=1e-12)

    # A deliberately bad warm order can only be improved, never kept worse.
    bad = [0] + list(range(8, 0, -1))
    out = hamiltonian_path_heuristic(costs, 0, seed=0, extra_starts=0,
                                     warm_orders=[bad])
    assert out.total_length <= path_length(costs, bad) + 1e-12

    with pytest.raises(InvalidArgumentError):
        hamiltonian_path_heuristic(costs, 0, warm_orders=[[1, 0, 2, 3, 4, 5, 6, 7, 8]])
    with pytest.raises(InvalidArgumentError):
        hamiltonian_path_heuristic(costs, 0, warm_orders=[[0, 1, 2]])
    with pytest.raises(InvalidArgumentError):
        hamiltonian_path_heuristic(costs, 0, extra_starts=-1)


def test_path_length_is_reversal_invariant():
    rng = np.random.default_rng(8)
    costs = random_instance(rng, 7)
    order = list(rng.permutation(7))
    assert path_length(costs, order) == pytest.approx(
        path_length(costs, order[::-1]), abs=1e-12)


def test_path_plan_round_trips(tmp_path):
    plan = PathPlan(order=(2, 0, 1), total_length=1.25, solver="heuristic",
                    planning_time_s=0.5)
    again = PathPlan.from_dict(plan.to_dict())
    assert again.order == plan.order
    assert again.total_length == plan.total_length
    assert again.solver == plan.solver
    assert again.optimality_gap_bound is None

    path = tmp_path / "plan.json"
    save_path(plan, path)
    loaded = load_path(path)
    assert loaded.order == plan.order and loaded.total_length == plan.total_length

    with pytest.raises(FormatError):
        PathPlan.from_dict({"order": [0, 1], "solver": "exact"})
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]\n")
    with pytest.raises(FormatError):
        load_path(bad)


def test_cost_csv_round_trip_and_errors(tmp_path):
    rng = np.random.default_rng(9)
    costs = random_instance(rng, 6)
    path = tmp_path / "costs.csv"
    save_cost_csv(costs, path)
    again = load_cost_csv(path)
    assert np.array_equal(again, costs)  # .17g floats survive bitwise

    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(FormatError):
        load_cost_csv(empty)
    banner = tmp_path / "banner.csv"
    banner.write_text("nodes\n0.0,1.0\n1.0,0.0\n")
    with pytest.raises(FormatError):
        load_cost_csv(banner)
    ragged = tmp_path / "ragged.csv"
    ragged.write_text("2\n0.0,1.0\n1.0\n")
    with pytest.raises(FormatError) as err:
        load_cost_csv(ragged)
    assert err.value.line == 3


def test_plan_global_path_accounting(tammes_cache):
    vs = tammes_cache(6)
    obs = ObstacleSphere(center=(0.0, 0.0, 0.0), radius_obs=0.05)
    plan = plan_global_path(vs, obs=obs)
    n = len(vs.poses)
    # Start (the zenith view) is appended as node index n unless present.
    assert sorted(plan.order) == list(range(len(plan.order)))
    assert plan.order[0] == plan.order[0]
    assert plan.solver == "exact"
    start_pos = top_view(vs.center, vs.radius).position
    nodes = np.vstack([vs.positions(), np.asarray(start_pos)])
    assert len(plan.order) in (n, n + 1)
    costs = build_cost_matrix(nodes[:len(plan.order)], obs)
    assert plan.total_length == pytest.approx(
        path_length(costs, plan.order), abs=1e-12)
    assert plan.planning_time_s >= 0.0


def test_plan_global_path_reuses_member_start():
    rng = np.random.default_rng(10)
    units = hemisphere_points(rng, 5, 1.0)
    units[0] = [0.0, 0.0, 1.0]  # zenith is already a member
    vs = units_to_view_space(units, 0.3, (0.0, 0.0, 0.0), "custom")
    plan = plan_global_path(vs)
    assert len(plan.order) == 5
    assert plan.order[0] == 0


def test_plan_global_path_cap_dispatch():
    rng = np.random.default_rng(11)
    units = hemisphere_points(rng, 8, 1.0)
    vs = units_to_view_space(units, 0.3, (0.0, 0.0, 0.0), "custom")
    # 8 member views + appended start = 9 nodes, still within a cap of 8
    # because the appended start does not count against it.
    assert plan_global_path(vs, exact_cap=8).solver == "exact"
    assert plan_global_path(vs, exact_cap=7).solver == "heuristic"


def test_plan_global_path_rejects_empty_space():
    vs = ViewSpace(center=(0.0, 0.0, 0.0), radius=0.3, poses=[], kind="custom")
    with pytest.raises(InvalidArgumentError):
        plan_global_path(vs)
