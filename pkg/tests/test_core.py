import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from commfleet.core import (
    Point2D,
    Scenario,
    center_of_gravity,
    distance,
    generate_scenario,
    load_scenario,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
)

coords = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)
points = st.builds(Point2D, coords, coords)


def test_distance_345_triangle():
    assert distance(Point2D(0, 0), Point2D(3, 4)) == 5.0


def test_distance_identity():
    assert distance(Point2D(2.5, -1.0), Point2D(2.5, -1.0)) == 0.0


def test_distance_unit_diagonal():
    assert distance(Point2D(0, 0), Point2D(1, 1)) == pytest.approx(math.sqrt(2))


@given(points, points)
def test_distance_symmetry(a, b):
    assert distance(a, b) == distance(b, a)


@given(points, points, points)
def test_distance_triangle_inequality(a, b, c):
    assert distance(a, c) <= distance(a, b) + distance(b, c) + 1e-6


def test_center_of_gravity_mean():
    cog = center_of_gravity([Point2D(0, 0), Point2D(10, 0), Point2D(5, 9)])
    assert (cog.x, cog.y) == (5.0, 3.0)


def test_center_of_gravity_single_point():
    cog = center_of_gravity([Point2D(4, 4)])
    assert (cog.x, cog.y) == (4.0, 4.0)


def test_center_of_gravity_square_symmetry():
    cog = center_of_gravity([Point2D(0, 0), Point2D(2, 0), Point2D(0, 2), Point2D(2, 2)])
    assert (cog.x, cog.y) == (1.0, 1.0)


def test_center_of_gravity_empty_rejected():
    with pytest.raises(ValueError, match="no targets"):
        center_of_gravity([])


@given(st.lists(points, min_size=1, max_size=8), points)
def test_center_of_gravity_translation_equivariant(pts, v):
    cog = center_of_gravity(pts)
    shifted = center_of_gravity([Point2D(p.x + v.x, p.y + v.y) for p in pts])
    assert shifted.x == pytest.approx(cog.x + v.x, abs=1e-6)
    assert shifted.y == pytest.approx(cog.y + v.y, abs=1e-6)


def test_generate_scenario_shape_and_bounds():
    scn = generate_scenario(n=15, m=4, edge_length=1000, comm_range=300, seed=7)
    assert scn.n == 15 and scn.m == 4
    for p in (*scn.targets, *scn.robot_starts):
        assert 0.0 <= p.x <= 1000.0 and 0.0 <= p.y <= 1000.0


def test_generate_scenario_deterministic():
    a = generate_scenario(12, 3, 500, 100, seed=99)
    b = generate_scenario(12, 3, 500, 100, seed=99)
    assert a == b  # bit-identical dataclasses


def test_generate_scenario_minimal():
    scn = generate_scenario(1, 1, 1, 0, seed=0)
    assert scn.n == 1 and scn.m == 1 and scn.comm_range == 0.0


@pytest.mark.parametrize("n,m,edge,r", [(0, 1, 10, 1), (1, 0, 10, 1), (1, 1, 0, 1), (1, 1, 10, -1)])
def test_generate_scenario_rejects_bad_dimensions(n, m, edge, r):
    with pytest.raises(ValueError):
        generate_scenario(n, m, edge, r, seed=0)


def test_scenario_rejects_empty_target_list():
    with pytest.raises(ValueError):
        Scenario(edge_length=10, targets=(), robot_starts=(Point2D(1, 1),), comm_range=1, seed=0)


def test_scenario_json_round_trip(tmp_path):
    scn = generate_scenario(6, 2, 250, 80, seed=5)
    path = tmp_path / "scenario.json"
    save_scenario(scn, path)
    assert load_scenario(path) == scn


def test_scenario_dict_format():
    scn = generate_scenario(2, 1, 10, 3, seed=1)
    d = scenario_to_dict(scn)
    assert set(d) == {"edge_length", "comm_range", "seed", "targets", "robots"}
    assert len(d["targets"]) == 2 and len(d["robots"]) == 1
    assert scenario_from_dict(json.loads(json.dumps(d))) == scn


def test_scenario_from_dict_rejects_malformed():
    with pytest.raises(ValueError, match="malformed"):
        scenario_from_dict({"edge_length": 10})
