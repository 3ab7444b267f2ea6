import numpy as np
import pytest
from hypothesis import given, strategies as st

from kernel_reach.core import (DimensionError, FirstHit, HyperRectangle, PredicateSet, ProductSet,
                               SafetyProblem, TransitionSample, constant_policy, first_hit_label,
                               indicator, zero_policy)

coords = st.floats(-3, 3, allow_nan=False)


def test_indicator_examples():
    K = HyperRectangle.cube(1.0, 2)
    T = HyperRectangle.cube(0.5, 2)
    assert indicator(K, [0.0, 0.0]) == 1
    assert indicator(K, [2.0, 0.0]) == 0
    # closed boundary
    assert indicator(T, [0.5, 0.5]) == 1


def test_open_bounds_are_honoured():
    r = HyperRectangle([0.0, 0.0], [0.8, 1.0], lower_closed=[True, True], upper_closed=[False, True])
    assert indicator(r, [0.79, 1.0]) == 1
    assert indicator(r, [0.8, 0.5]) == 0


def test_indicator_vectorised_matches_scalar(rng):
    K = HyperRectangle([-1, -2, 0], [1, 2, 3])
    pts = rng.uniform(-3, 4, (200, 3))
    vec = indicator(K, pts)
    assert vec.shape == (200,)
    assert np.array_equal(vec, [indicator(K, p) for p in pts])


def test_first_hit_labels(integrator_problem):
    assert first_hit_label(integrator_problem, [0.0, 0.0]) is FirstHit.TARGET
    assert first_hit_label(integrator_problem, [0.75, 0.0]) is FirstHit.SAFE_NOT_TARGET
    assert first_hit_label(integrator_problem, [2.0, 2.0]) is FirstHit.UNSAFE


@given(st.tuples(coords, coords))
def test_exactly_one_label(integrator_problem, x):
    in_t, in_kt = integrator_problem.masks(np.array([x]))
    in_k = indicator(integrator_problem.safe_set, x)
    assert int(in_t[0]) + int(in_kt[0]) + int(not in_k) == 1
    if first_hit_label(integrator_problem, x) is FirstHit.TARGET:
        assert in_k == 1


@given(st.lists(st.tuples(coords, coords, coords, coords), min_size=1, max_size=20))
def test_product_membership_is_product_of_blocks(pts):
    a = HyperRectangle([-1, -1], [1, 1])
    b = HyperRectangle([0, -2], [2, 0.5], lower_closed=[False, True])
    prod = ProductSet.repeated([a, b])
    x = np.array(pts)
    assert np.array_equal(prod.contains(x), a.contains(x[:, :2]) & b.contains(x[:, 2:]))


def test_problem_rejects_target_outside_safe_set():
    with pytest.raises(ValueError):
        SafetyProblem(3, HyperRectangle.cube(0.5, 2), HyperRectangle.cube(1.0, 2), zero_policy(2, 1))


def test_problem_spot_checks_predicates():
    K = PredicateSet(lambda x: np.linalg.norm(x, axis=1) <= 1.0, 2, "disk")
    T = PredicateSet(lambda x: np.linalg.norm(x, axis=1) <= 2.0, 2, "big disk")
    with pytest.raises(ValueError):
        SafetyProblem(1, K, T, zero_policy(2, 1))


def test_problem_rejects_wrong_dimension(integrator_problem):
    with pytest.raises(DimensionError):
        integrator_problem.check_points(np.zeros((3, 4)))


def test_negative_horizon_rejected():
    with pytest.raises(ValueError):
        SafetyProblem(-1, HyperRectangle.cube(1, 2), HyperRectangle.cube(0.5, 2), zero_policy(2, 1))


def test_rectangle_subset():
    assert HyperRectangle.cube(0.5, 2).issubset(HyperRectangle.cube(1.0, 2))
    assert not HyperRectangle.cube(1.0, 2).issubset(HyperRectangle.cube(0.5, 2))
    # a closed bound is not inside an open one at the same value
    open_k = HyperRectangle([-1, -1], [1, 1], upper_closed=[False, True])
    assert not HyperRectangle.cube(1.0, 2).issubset(open_k)


def test_policies():
    z = zero_policy(2, 1)
    assert z.stationary
    assert np.array_equal(z(3, np.ones((4, 2))), np.zeros((4, 1)))
    c = constant_policy([2.0, 3.0], 6)
    assert np.array_equal(c(0, np.zeros(6)), [2.0, 3.0])


def test_sample_csv_round_trip(tmp_path, small_sample):
    path = tmp_path / "s.csv"
    small_sample.to_csv(path)
    back = TransitionSample.from_csv(path)
    assert np.array_equal(back.states, small_sample.states)
    assert np.array_equal(back.inputs, small_sample.inputs)
    assert np.array_equal(back.successors, small_sample.successors)
    assert back.meta["system"] == small_sample.meta["system"]


def test_sample_csv_rejects_truncated_file(tmp_path, small_sample):
    path = tmp_path / "s.csv"
    small_sample.to_csv(path)
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(ValueError):
        TransitionSample.from_csv(path)


def test_sample_shape_validation():
    with pytest.raises(DimensionError):
        TransitionSample(np.zeros((3, 2)), np.zeros((3, 1)), np.zeros((2, 2)))
