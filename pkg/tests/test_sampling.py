import filecmp

import numpy as np
import pytest

from kernel_reach import systems as S
from kernel_reach.core import DimensionError, HyperRectangle, zero_policy
from kernel_reach.sampling import (FixedList, GaussianAround, SamplingPlan, UniformOverBox, UniformSlice,
                                   generate_sample)


def test_single_deterministic_transition():
    sys = S.integrator(S.Disturbance("none", 2))
    x = np.array([[0.4, -0.2]])
    s = generate_sample(sys, SamplingPlan(FixedList(x), 1, zero_policy(2, 1), seed=0))
    A, _ = sys.affine
    np.testing.assert_allclose(s.successors, x @ A.T)


def test_uniform_box_mean():
    sys = S.integrator()
    s = generate_sample(sys, SamplingPlan(UniformOverBox(HyperRectangle.cube(1, 2)), 10_000,
                                          zero_policy(2, 1), seed=1))
    assert np.all(np.abs(s.states.mean(axis=0)) <= 0.02)
    assert np.all(np.abs(s.states) <= 1)


def test_same_seed_same_file(tmp_path):
    sys = S.integrator()
    plan = SamplingPlan(UniformOverBox(HyperRectangle.cube(1, 2)), 100, zero_policy(2, 1), seed=5)
    generate_sample(sys, plan).to_csv(tmp_path / "a.csv")
    generate_sample(sys, plan).to_csv(tmp_path / "b.csv")
    assert filecmp.cmp(tmp_path / "a.csv", tmp_path / "b.csv", shallow=False)


def test_inputs_follow_policy():
    sys = S.quadrotor()
    pol = S.hover_lqr_policy()
    init = GaussianAround(S.HOVER_REFERENCE, np.full(6, 0.25))
    s = generate_sample(sys, SamplingPlan(init, 200, pol, seed=2))
    np.testing.assert_array_equal(s.inputs, pol(0, s.states))


def test_gaussian_residual_covariance():
    sys = S.integrator(S.gaussian(0.01, 2))
    s = generate_sample(sys, SamplingPlan(UniformOverBox(HyperRectangle.cube(1, 2)), 100_000,
                                          zero_policy(2, 1), seed=3))
    A, B = sys.affine
    r = s.successors - s.states @ A.T - s.inputs @ B.T
    np.testing.assert_allclose(np.cov(r.T), 0.01 * np.eye(2), rtol=0.05, atol=0.05 * 0.01)


def test_changing_noise_keeps_initial_states():
    box = UniformOverBox(HyperRectangle.cube(1, 2))
    plan = SamplingPlan(box, 50, zero_policy(2, 1), seed=4)
    a = generate_sample(S.integrator(S.gaussian(0.01, 2)), plan)
    b = generate_sample(S.integrator(S.scaled_beta(2, 0.5, 0.1, 2)), plan)
    assert np.array_equal(a.states, b.states)


def test_slice_distribution():
    init = UniformSlice(np.array([0, 2]), np.array([-1.1, -0.1]), np.array([1.1, 1.0]),
                        S.HOVER_REFERENCE, 0.1)
    x = init.draw(np.random.default_rng(0), 20_000)
    assert x[:, 0].min() >= -1.1 and x[:, 0].max() <= 1.1
    assert x[:, 2].min() >= -0.1 and x[:, 2].max() <= 1.0
    np.testing.assert_allclose(x[:, [1, 3, 4, 5]].std(axis=0), 0.1, rtol=0.03)


def test_dimension_mismatch_rejected():
    with pytest.raises(DimensionError):
        generate_sample(S.quadrotor(), SamplingPlan(UniformOverBox(HyperRectangle.cube(1, 2)), 5,
                                                    S.hover_lqr_policy(), seed=0))


def test_invalid_sizes_rejected():
    with pytest.raises(ValueError):
        SamplingPlan(UniformOverBox(HyperRectangle.cube(1, 2)), 0, zero_policy(2, 1))
    with pytest.raises(ValueError):
        UniformOverBox(S.quadrotor_sets()[0])


def test_meta_records_provenance():
    s = generate_sample(S.integrator(), SamplingPlan(UniformOverBox(HyperRectangle.cube(1, 2)), 3,
                                                     zero_policy(2, 1), seed=9))
    assert s.meta["seed"] == 9 and s.meta["policy"] == "zero" and s.meta["system"] == "integrator"
