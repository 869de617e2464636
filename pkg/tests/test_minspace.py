import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ncshilov.errors import InvalidInput, SampledOnlyWarning
from ncshilov.minspace import (
    BanachSpace,
    MinRealization,
    banach_multiplier_check,
    banach_multipliers,
    cross_validate_multipliers,
    env_banach_check,
    realize_min,
)
from ncshilov.opspace import OperatorSpace

HEXAGON = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])


def min_norm(R, x):
    return float(np.abs(R.sample @ x).max())


def dual_norm(B, psi):
    if isinstance(B.ball, np.ndarray):
        return float(np.abs(np.vstack([B.ball, -B.ball]) @ psi).max())
    return float({"l1": np.abs(psi).max(), "linf": np.abs(psi).sum(), "l2": np.linalg.norm(psi)}[B.ball])


def test_linf_realization_is_diagonal_algebra():
    R = realize_min(BanachSpace(2, "linf"))
    assert R.exact and R.space.r == 2
    assert np.allclose(R.space.basis, [np.diag([1, 0]), np.diag([0, 1])])


def test_l1_realization_injective_and_normed(rng):
    B = BanachSpace(2, "l1")
    R = realize_min(B, 64)
    assert not R.exact and R.space.dim == 2
    for _ in range(20):
        x = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        # the 64-point circle grid loses at most 1 - cos(pi/64) of the norm
        assert (1 - 1.3e-3) * B.norm(x) <= min_norm(R, x) <= B.norm(x) + 1e-12


@pytest.mark.parametrize("B", [BanachSpace(2, "l1"), BanachSpace(3, "l1"), BanachSpace(2, "linf"),
                               BanachSpace(3, "l2"), BanachSpace(2, HEXAGON)])
def test_sampled_functionals_have_dual_norm_one(B):
    for psi in B.extreme_functionals(32, seed=3):
        assert dual_norm(B, psi) == pytest.approx(1, abs=1e-9)


def test_hexagon_polar_vertices():
    B = BanachSpace(2, HEXAGON)
    f = B.polar_vertices()
    expected = [np.array([1.0, 0.0]), np.array([0.0, 1.0]), np.array([-1.0, 1.0])]
    assert f.shape == (3, 2)
    for e in expected:
        assert any(np.allclose(row, e) or np.allclose(row, -e) for row in f)
    R = realize_min(B)
    assert R.exact and R.space.r == 3


def test_realize_min_validates():
    with pytest.raises(InvalidInput):
        realize_min(BanachSpace(3, "l1"), sample_size=2)
    with pytest.raises(InvalidInput):
        BanachSpace(2, "l7")


def test_banach_multiplier_examples():
    B = BanachSpace(2, "l1")
    R = realize_min(B, 64)
    assert banach_multiplier_check(B, R, np.eye(2)) == (True, pytest.approx(1))
    assert banach_multiplier_check(B, R, np.diag([1.0, 0.5])) == (False, None)
    ok, bound = banach_multiplier_check(B, R, 0.75 * np.eye(2))
    assert ok and bound == pytest.approx(0.75)
    Binf = BanachSpace(2, "linf")
    ok, bound = banach_multiplier_check(Binf, realize_min(Binf), np.diag([1.0, 0.5]))
    assert ok and bound == pytest.approx(1)


def test_banach_multiplier_basis():
    assert banach_multipliers(realize_min(BanachSpace(2, "linf"))).shape[0] == 2
    assert banach_multipliers(realize_min(BanachSpace(2, "l1"), 16)).shape[0] == 1
    assert banach_multipliers(realize_min(BanachSpace(2, HEXAGON))).shape[0] == 1


def test_cross_validate_linf():
    B = BanachSpace(2, "linf")
    cv = cross_validate_multipliers(B, realize_min(B))
    assert (cv.dim_left, cv.dim_right, cv.dim_banach) == (2, 2, 2)
    assert cv.agree and cv.norm_gap <= 2e-6


def test_cross_validate_hexagon():
    B = BanachSpace(2, HEXAGON)
    cv = cross_validate_multipliers(B, realize_min(B))
    assert (cv.dim_left, cv.dim_right, cv.dim_banach) == (1, 1, 1) and cv.agree


def test_cross_validate_sampled_warns():
    B = BanachSpace(2, "l1")
    with pytest.warns(SampledOnlyWarning):
        cv = cross_validate_multipliers(B, realize_min(B, 12))
    assert cv.agree and cv.dim_left == 1 and not cv.exact


@pytest.mark.parametrize("B", [BanachSpace(2, "l1"), BanachSpace(3, "linf"), BanachSpace(2, HEXAGON)])
def test_env_banach_check(B):
    ok, m = env_banach_check(B)
    assert ok and m == pytest.approx(1)


@settings(max_examples=20)
@given(st.integers(0, 10_000))
def test_sampled_norms_increase_with_resolution(seed):
    rng = np.random.default_rng(seed)
    B = BanachSpace(2, "l1")
    x = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    norms = [min_norm(realize_min(B, n), x) for n in (8, 16, 32, 64)]  # nested circle grids
    assert all(a <= b + 1e-12 for a, b in zip(norms, norms[1:]))
    assert norms[-1] <= B.norm(x) + 1e-12


@settings(max_examples=20)
@given(st.integers(0, 10_000))
def test_circle_action_invariance(seed):
    rng = np.random.default_rng(seed)
    B = BanachSpace(2, "l1")
    R = realize_min(B, 16)
    alpha = np.exp(2j * np.pi * rng.random(R.sample.shape[0]))
    aug = np.vstack([R.sample, alpha[:, None] * R.sample])
    mats = np.asarray([np.diag(aug[:, k]) for k in range(2)])
    R2 = MinRealization(OperatorSpace(mats), aug, False)
    x = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    assert min_norm(R2, x) == pytest.approx(min_norm(R, x), abs=1e-12)
    # entries transform by the scalar
    assert np.allclose(R2.sample[16:] @ x, alpha * (R.sample @ x))


@pytest.mark.parametrize("B", [BanachSpace(2, "l1"), BanachSpace(3, "l2"), BanachSpace(2, HEXAGON)])
def test_sampled_points_separated(B):
    R = realize_min(B, 32)
    weights = np.sum(np.abs(R.sample) ** 2, axis=1)  # sum over the basis of |psi(b_k)|^2
    assert weights.min() > 1e-6
