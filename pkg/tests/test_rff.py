import numpy as np
import pytest
from hypothesis import given, strategies as st

from kernel_reach.kernels import GaussianKernel, joint_eval
from kernel_reach.rff import (JointFeatures, JointMode, RffBasis, feature_map, joint_feature,
                              joint_features, kernel_estimate, sample_basis)


def test_single_feature_basis():
    b = sample_basis(1, 3, 0.1, seed=11)
    assert b.frequencies.shape == (1, 3)
    assert 0.0 <= b.phases[0] < 2 * np.pi


def test_frequency_variance_is_inverse_bandwidth_squared():
    b = sample_basis(100_000, 2, 0.1, seed=0)
    np.testing.assert_allclose(b.frequencies.var(axis=0), 100.0, rtol=0.02)


def test_per_coordinate_bandwidths():
    b = sample_basis(100_000, 2, np.array([0.1, 2.0]), seed=0)
    np.testing.assert_allclose(b.frequencies.var(axis=0), [100.0, 0.25], rtol=0.02)


def test_same_seed_identical_basis():
    a = sample_basis(50, 4, 0.3, seed=5)
    b = sample_basis(50, 4, 0.3, seed=5)
    assert np.array_equal(a.frequencies, b.frequencies) and np.array_equal(a.phases, b.phases)


def test_basis_round_trip(tmp_path):
    a = sample_basis(20, 3, 0.5, seed=2)
    a.save(tmp_path / "b.txt")
    b = RffBasis.load(tmp_path / "b.txt")
    assert np.array_equal(a.frequencies, b.frequencies) and np.array_equal(a.phases, b.phases)
    assert b.sigma == a.sigma and b.seed == a.seed


def test_feature_map_zero_frequency():
    b = RffBasis(np.zeros((2, 3)), np.array([0.0, np.pi / 2]), 1.0)
    z = feature_map(b, np.array([0.4, -1.0, 3.0]))
    assert z[0] == pytest.approx(np.sqrt(2))
    assert z[1] == pytest.approx(0.0, abs=1e-15)


@given(st.integers(0, 2**32 - 1))
def test_features_bounded(seed):
    b = sample_basis(64, 3, 0.2, seed)
    x = np.random.default_rng(seed).normal(size=(10, 3))
    assert np.all(np.abs(feature_map(b, x)) <= np.sqrt(2) + 1e-12)


def test_feature_map_chunking_is_invisible(rng):
    b = sample_basis(300, 2, 0.5, seed=1)
    x = rng.normal(size=(97, 2))
    # chunk boundaries may move BLAS blocking by an ulp
    np.testing.assert_allclose(feature_map(b, x, chunk=7), feature_map(b, x), rtol=1e-12, atol=1e-14)


def test_single_feature_estimate_is_definition(rng):
    b = sample_basis(1, 2, 0.3, seed=4)
    x, y = rng.normal(size=2), rng.normal(size=2)
    w, c = b.frequencies[0], b.phases[0]
    expected = np.sqrt(2) * np.cos(w @ x + c) * np.sqrt(2) * np.cos(w @ y + c)
    assert kernel_estimate(b, x, y) == pytest.approx(expected, rel=1e-12)


def test_estimate_concentrates_at_ten_thousand_features():
    b = sample_basis(10_000, 2, 0.1, seed=8)
    x = np.array([0.3, -0.1])
    assert abs(kernel_estimate(b, x, x) - 1.0) <= 0.05
    assert abs(kernel_estimate(b, x, x + [0.1, 0.0]) - np.exp(-0.5)) <= 0.05


@given(st.integers(0, 2**32 - 1))
def test_estimate_bounded(seed):
    b = sample_basis(16, 2, 0.1, seed)
    r = np.random.default_rng(seed)
    assert abs(kernel_estimate(b, r.normal(size=2), r.normal(size=2))) <= 2.0


def test_estimate_error_shrinks_like_inverse_sqrt():
    # mean absolute error over independent bases, regression slope on log-log axes
    k = GaussianKernel(0.5)
    x, y = np.array([0.1, 0.2]), np.array([0.4, -0.1])
    truth = k(x, y)
    sizes = np.array([16, 64, 256, 1024])
    errs = []
    for D in sizes:
        e = [abs(kernel_estimate(sample_basis(int(D), 2, 0.5, seed=s), x, y) - truth) for s in range(200)]
        errs.append(np.mean(e))
    slope = np.polyfit(np.log(sizes), np.log(errs), 1)[0]
    assert -0.65 <= slope <= -0.35


def _joint_estimate(feats, a, b):
    return float(feats(*a) @ feats(*b)) / feats.size


def test_tensor_identical_pairs_near_one():
    # a single tensor basis has variance ~ 1/Dx + 1/Du at identical pairs, so average over bases
    pair = (np.array([0.2, 0.3]), np.array([0.1]))
    est = []
    for seed in range(20):
        f = joint_features("tensor", 2, 1, 100, 0.1, 0.1, seed=seed)
        est.append(_joint_estimate(f, pair, pair))
    assert f.size == 10_000
    assert abs(np.mean(est) - 1.0) <= 0.05


def test_concatenated_and_tensor_agree_in_expectation(rng):
    k = GaussianKernel(0.5)
    pairs = []
    for _ in range(100):
        a = (rng.uniform(-0.5, 0.5, 2), rng.uniform(-0.5, 0.5, 1))
        b = (a[0] + rng.normal(scale=0.3, size=2), a[1] + rng.normal(scale=0.3, size=1))
        pairs.append((a, b))
    ref = np.array([joint_eval(k, k, a, b) for a, b in pairs])
    cat = np.zeros(100)
    ten = np.zeros(100)
    bases = 20
    for s in range(bases):
        fc = joint_features("concatenated", 2, 1, 900, 0.5, 0.5, seed=s)
        ft = joint_features("tensor", 2, 1, 30, 0.5, 0.5, seed=1000 + s)
        cat += [_joint_estimate(fc, a, b) for a, b in pairs]
        ten += [_joint_estimate(ft, a, b) for a, b in pairs]
    cat /= bases
    ten /= bases
    for est in (cat, ten):
        assert np.mean(np.abs(est - ref)) < 0.04
        assert abs(np.mean(est - ref)) < 0.02
    assert np.mean(np.abs(cat - ten)) < 0.05


def test_concatenated_uses_per_block_bandwidths():
    f = joint_features("concatenated", 2, 1, 50_000, 0.1, 10.0, seed=0)
    v = f.basis.frequencies.var(axis=0)
    np.testing.assert_allclose(v, [100.0, 100.0, 0.01], rtol=0.03)


def test_zero_frequency_joint_features_constant():
    b = RffBasis(np.zeros((4, 3)), np.zeros(4), 1.0)
    z = joint_feature(JointMode.CONCATENATED, np.random.default_rng(0).normal(size=(5, 2)),
                      np.zeros((5, 1)), basis=b)
    assert np.all(z == np.sqrt(2))


def test_mode_argument_validation():
    b = sample_basis(3, 2, 1.0, seed=0)
    with pytest.raises(ValueError):
        JointFeatures("concatenated", basis_x=b, basis_u=b)
    with pytest.raises(ValueError):
        JointFeatures("tensor", basis=b)
