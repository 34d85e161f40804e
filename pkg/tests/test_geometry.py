"""Poses, view spaces, named views, and the candidate grid."""

import numpy as np
import pytest

from viewplan.errors import FormatError, InvalidArgumentError
from viewplan.geometry import (DEFAULT_INITIAL_VIEWS, KIND_CUSTOM,
                               KIND_UNIFORM_GRID, NAMED_VIEW_DIRECTIONS,
                               ViewPose, ViewSpace, candidate_grid,
                               central_angle, initial_views, load_view_space,
                               look_at_pose, min_pairwise_angle,
                               quaternion_to_rotation, rotation_to_quaternion,
                               save_view_space, top_view, units_to_view_space)


def test_look_at_equator_is_axis_aligned():
    pose = look_at_pose([0.3, 0.0, 0.0], [0.0, 0.0, 0.0])
    np.testing.assert_allclose(pose.forward(), [-1.0, 0.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(pose.up(), [0.0, 0.0, 1.0], atol=1e-12)


def test_look_at_zenith_falls_back_to_x_up():
    pose = look_at_pose([0.0, 0.0, 0.3], [0.0, 0.0, 0.0])
    np.testing.assert_allclose(pose.forward(), [0.0, 0.0, -1.0], atol=1e-12)
    np.testing.assert_allclose(pose.up(), [1.0, 0.0, 0.0], atol=1e-12)


def test_look_at_random_positions_align_with_center():
    rng = np.random.default_rng(0)
    center = np.array([0.1, -0.2, 0.05])
    for _ in range(50):
        pos = center + rng.normal(size=3)
        pose = look_at_pose(pos, center)
        assert np.isclose(np.linalg.norm(pose.quaternion), 1.0, atol=1e-12)
        want = (center - pos) / np.linalg.norm(center - pos)
        assert central_angle(pose.forward(), want) < 1e-6
        rot = quaternion_to_rotation(pose.quaternion)
        np.testing.assert_allclose(rot @ rot.T, np.eye(3), atol=1e-9)
        assert np.linalg.det(rot) > 0.0


def test_look_at_rejects_coincident_position():
    with pytest.raises(InvalidArgumentError):
        look_at_pose([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])


def test_quaternion_rotation_round_trip():
    rng = np.random.default_rng(1)
    for _ in range(50):
        q = rng.normal(size=4)
        q /= np.linalg.norm(q)
        rot = quaternion_to_rotation(q)
        back = rotation_to_quaternion(rot)
        np.testing.assert_allclose(quaternion_to_rotation(back), rot, atol=1e-9)
        # Canonical sign: the first nonzero component is positive.
        nz = back[np.nonzero(back)[0][0]]
        assert nz > 0.0


def test_quaternion_sign_ambiguity_collapses():
    q = np.array([0.3, -0.5, 0.2, 0.6])
    q /= np.linalg.norm(q)
    a = rotation_to_quaternion(quaternion_to_rotation(q))
    b = rotation_to_quaternion(quaternion_to_rotation(-q))
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_pose_dict_round_trip_is_exact():
    pose = look_at_pose([0.1, 0.2, 0.25], [0.0, 0.0, 0.0])
    again = ViewPose.from_dict(pose.to_dict())
    assert np.array_equal(again.position, pose.position)
    assert np.array_equal(again.quaternion, pose.quaternion)


def test_pose_from_dict_rejects_bad_payloads():
    with pytest.raises(FormatError):
        ViewPose.from_dict({"position": [1.0, 2.0, 3.0]})
    with pytest.raises(FormatError):
        ViewPose.from_dict({"position": [1.0, 2.0], "quaternion": [1, 0, 0, 0]})


def test_central_angle_reference_points():
    assert central_angle([1, 0, 0], [0, 1, 0]) == pytest.approx(np.pi / 2)
    assert central_angle([0, 0, 2], [0, 0, 5]) == pytest.approx(0.0)
    assert central_angle([1, 0, 0], [-1, 0, 0]) == pytest.approx(np.pi)


def test_candidate_grid_covers_hemisphere():
    vs = candidate_grid(540, radius=0.3)
    assert len(vs) == 540
    assert vs.kind == KIND_UNIFORM_GRID
    dists = np.linalg.norm(vs.positions(), axis=1)
    np.testing.assert_allclose(dists, 0.3, rtol=1e-12)
    assert np.all(vs.unit_directions()[:, 2] >= -1e-12)
    vs.validate()


def test_candidate_grid_single_view_is_zenith():
    vs = candidate_grid(1, radius=0.4)
    np.testing.assert_allclose(vs.positions()[0], [0.0, 0.0, 0.4], atol=1e-12)


def test_candidate_grid_nearest_neighbor_spread():
    # Quasi-uniform coverage: per-view nearest-neighbor angles are tight.
    units = candidate_grid(540).unit_directions()
    dots = np.clip(units @ units.T, -1.0, 1.0)
    np.fill_diagonal(dots, -1.0)
    nearest = np.arccos(dots.max(axis=1))
    cov = nearest.std() / nearest.mean()
    assert cov < 0.25


def test_candidate_grid_rejects_bad_arguments():
    with pytest.raises(InvalidArgumentError):
        candidate_grid(0)
    with pytest.raises(InvalidArgumentError):
        candidate_grid(5, radius=0.0)


def test_initial_views_moves_top_last():
    poses = initial_views([0.0, 0.0, 0.0], 0.3, selection=("top", "left", "front"))
    units = [p.position / np.linalg.norm(p.position) for p in poses]
    np.testing.assert_allclose(units[0], NAMED_VIEW_DIRECTIONS["left"], atol=1e-12)
    np.testing.assert_allclose(units[1], NAMED_VIEW_DIRECTIONS["front"], atol=1e-12)
    np.testing.assert_allclose(units[2], NAMED_VIEW_DIRECTIONS["top"], atol=1e-12)
    default = initial_views([0.0, 0.0, 0.0], 0.3, selection=DEFAULT_INITIAL_VIEWS)
    np.testing.assert_allclose(default[-1].position, [0.0, 0.0, 0.3], atol=1e-12)


def test_initial_views_selection_sizes():
    only_top = initial_views([0, 0, 0], 0.3, selection=("top",))
    assert len(only_top) == 1
    all_five = initial_views([0, 0, 0], 0.3,
                             selection=("top", "left", "right", "front", "back"))
    assert len(all_five) == 5
    np.testing.assert_allclose(all_five[-1].position, [0.0, 0.0, 0.3], atol=1e-12)


def test_initial_views_rejects_bad_selections():
    with pytest.raises(InvalidArgumentError):
        initial_views([0, 0, 0], 0.3, selection=())
    with pytest.raises(InvalidArgumentError):
        initial_views([0, 0, 0], 0.3, selection=("top", "top"))
    with pytest.raises(InvalidArgumentError):
        initial_views([0, 0, 0], 0.3, selection=("zenith",))


def test_named_views_lie_on_axes_at_right_angles():
    top = NAMED_VIEW_DIRECTIONS["top"]
    assert np.array_equal(top, [0.0, 0.0, 1.0])
    for name in ("left", "right", "front", "back"):
        d = NAMED_VIEW_DIRECTIONS[name]
        assert d[2] == 0.0
        assert central_angle(d, top) == pytest.approx(np.pi / 2)
    assert central_angle(NAMED_VIEW_DIRECTIONS["left"],
                         NAMED_VIEW_DIRECTIONS["front"]) == pytest.approx(np.pi / 2)


def test_top_view_is_zenith_pose():
    pose = top_view([0.5, 0.5, 0.0], 0.3)
    np.testing.assert_allclose(pose.position, [0.5, 0.5, 0.3], atol=1e-12)


def test_view_space_validation_rejects_broken_spaces():
    good = candidate_grid(6, radius=0.3)
    with pytest.raises(InvalidArgumentError):
        ViewSpace(center=[0, 0, 0], radius=0.0, poses=good.poses).validate()
    with pytest.raises(InvalidArgumentError):
        ViewSpace(center=[0, 0, 0], radius=0.3, poses=good.poses,
                  kind="sphere").validate()
    off = ViewSpace(center=[0, 0, 0], radius=0.2, poses=good.poses)
    with pytest.raises(InvalidArgumentError):
        off.validate()
    below = units_to_view_space([[0.0, 0.6, -0.8]], 0.3, [0, 0, 0], KIND_CUSTOM)
    with pytest.raises(InvalidArgumentError):
        below.validate()
    twice = units_to_view_space([[0, 0, 1], [0, 0, 1]], 0.3, [0, 0, 0], KIND_CUSTOM)
    with pytest.raises(InvalidArgumentError):
        twice.validate()


def test_view_space_json_round_trip(tmp_path):
    vs = candidate_grid(9, radius=0.3)
    path = tmp_path / "space.json"
    save_view_space(vs, path)
    again = load_view_space(path)
    assert np.array_equal(again.positions(), vs.positions())
    assert again.radius == vs.radius
    assert again.kind == vs.kind
    assert np.array_equal(again.center, vs.center)


def test_load_view_space_rejects_wrong_top_level(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("[1, 2, 3]\n")
    with pytest.raises(FormatError):
        load_view_space(path)


def test_min_pairwise_angle_matches_double_loop():
    rng = np.random.default_rng(2)
    units = rng.normal(size=(12, 3))
    units[:, 2] = np.abs(units[:, 2])
    units /= np.linalg.norm(units, axis=1, keepdims=True)
    vs = units_to_view_space(units, 0.3, [0, 0, 0], KIND_CUSTOM)
    naive = min(central_angle(units[i], units[j])
                for i in range(12) for j in range(i + 1, 12))
    assert min_pairwise_angle(vs) == pytest.approx(naive, abs=1e-12)


def test_min_pairwise_angle_reference_configurations():
    pair = units_to_view_space([[0, 1, 0], [0, -1, 0]], 0.3, [0, 0, 0], KIND_CUSTOM)
    assert min_pairwise_angle(pair) == pytest.approx(np.pi, abs=1e-9)
    third = 2.0 * np.pi / 3.0
    triple = units_to_view_space(
        [[np.cos(k * third), np.sin(k * third), 0.0] for k in range(3)],
        0.3, [0, 0, 0], KIND_CUSTOM)
    assert min_pairwise_angle(triple) == pytest.approx(third, abs=1e-9)


def test_min_pairwise_angle_needs_two_poses():
    single = candidate_grid(1)
    with pytest.raises(InvalidArgumentError):
        min_pairwise_angle(single)


def test_units_to_view_space_points_at_center():
    center = np.array([0.2, -0.1, 0.0])
    vs = units_to_view_space([[0, 0, 1], [1, 0, 0]], 0.5, center, KIND_CUSTOM)
    for pose in vs.poses:
        want = (center - pose.position) / np.linalg.norm(center - pose.position)
        assert central_angle(pose.forward(), want) < 1e-9
