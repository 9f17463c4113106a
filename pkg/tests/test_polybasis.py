import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plurilab.errors import DegreeTooLargeError, SizeMismatchError
from plurilab.polybasis import (Configuration, MultiIndexBasis, basis_size, canonical_order, grad_log_abs_det2,
                                log_abs_det2)


def points(n_min=2, n_max=12):
    coord = st.floats(-2, 2, allow_nan=False, allow_infinity=False)
    return st.lists(st.tuples(coord, coord), min_size=n_min, max_size=n_max).map(
        lambda xs: np.array([complex(a, b) for a, b in xs]))


def well_separated(z, tol=1e-3):
    d = np.abs(z[:, None] - z[None, :]) + np.eye(len(z))
    return np.min(d) > tol


def test_basis_size_matches_binomial():
    for n in range(1, 4):
        for k in range(6):
            assert basis_size(n, k) == math.comb(n + k, n) == MultiIndexBasis(n, k).size


def test_grlex_order_n2():
    exps = MultiIndexBasis(2, 2).exponents.tolist()
    assert exps[0] == [0, 0]
    assert sorted(map(sum, exps)) == list(map(sum, exps))
    assert len(exps) == 6


def test_roots_of_unity_oracle():
    # |D|^2 = N^N for the N-th roots of unity
    for N in (3, 7, 13):
        z = np.exp(2j * np.pi * np.arange(N) / N)
        b = MultiIndexBasis(1, N - 1)
        for method in ("pairwise", "matrix", "lu"):
            assert log_abs_det2(b, z, method) == pytest.approx(N * math.log(N), abs=1e-10)


def test_small_frozen_value():
    # D(0, 1, i) = (1 - 0)(i - 0)(i - 1), |D|^2 = 2
    b = MultiIndexBasis(1, 2)
    assert log_abs_det2(b, [0, 1, 1j], "matrix") == pytest.approx(math.log(2), abs=1e-14)


def test_coincident_points_give_minus_inf():
    b = MultiIndexBasis(1, 2)
    for method in ("pairwise", "matrix", "lu"):
        assert log_abs_det2(b, [0.5, 0.5, 1j], method) == -math.inf


def test_size_mismatch():
    with pytest.raises(SizeMismatchError):
        log_abs_det2(MultiIndexBasis(1, 2), [0, 1])


def test_degree_cap():
    with pytest.raises(DegreeTooLargeError):
        MultiIndexBasis(6, 60)


def test_n2_matrix_vs_lu(rng):
    b = MultiIndexBasis(2, 3)
    z = (rng.normal(size=(b.size, 2)) + 1j * rng.normal(size=(b.size, 2))) / math.sqrt(2)
    assert log_abs_det2(b, z, "matrix") == pytest.approx(log_abs_det2(b, z, "lu"), rel=1e-9)


def test_configuration_validation():
    with pytest.raises(ValueError):
        Configuration([[np.nan]])
    with pytest.raises(ValueError):
        Configuration([1j], mode="real-line")
    c = Configuration([[2.0], [1.0]]).canonical()
    assert c.points[:, 0].real.tolist() == [1.0, 2.0]


@settings(max_examples=60, deadline=None)
@given(points())
def test_matrix_equals_pairwise(z):
    if not well_separated(z):
        return
    b = MultiIndexBasis(1, len(z) - 1)
    a, p = log_abs_det2(b, z, "matrix"), log_abs_det2(b, z, "pairwise")
    assert abs(a - p) <= 1e-9 * max(1.0, abs(p))


@settings(max_examples=60, deadline=None)
@given(points(), st.permutations(range(12)))
def test_permutation_invariance(z, perm):
    if not well_separated(z):
        return
    perm = [i for i in perm if i < len(z)]
    b = MultiIndexBasis(1, len(z) - 1)
    assert log_abs_det2(b, z[perm], "matrix") == pytest.approx(log_abs_det2(b, z, "matrix"), abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(points(), st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
       st.floats(0.2, 3.0))
def test_affine_covariance(z, shift, scale):
    # translation leaves D unchanged, scaling by c multiplies |D|^2 by |c|^{N(N-1)}
    if not well_separated(z):
        return
    N = len(z)
    b = MultiIndexBasis(1, N - 1)
    base = log_abs_det2(b, z, "matrix")
    assert log_abs_det2(b, z + shift, "matrix") == pytest.approx(base, abs=1e-8 * max(1, abs(base)))
    assert log_abs_det2(b, scale * z, "matrix") == pytest.approx(base + N * (N - 1) * math.log(scale),
                                                                 abs=1e-8 * max(1, abs(base)))


def test_gradient_routes_agree(rng):
    b = MultiIndexBasis(1, 9)
    z = rng.normal(size=10) + 1j * rng.normal(size=10)
    np.testing.assert_allclose(grad_log_abs_det2(b, z, "matrix"), grad_log_abs_det2(b, z, "pairwise"), rtol=1e-8, atol=1e-10)


def test_canonical_order_is_lexicographic():
    z = np.array([[1 + 1j], [1 + 0j], [0 + 5j]])
    assert canonical_order(z).tolist() == [2, 1, 0]
