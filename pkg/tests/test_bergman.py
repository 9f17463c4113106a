import math

import numpy as np
import pytest

from plurilab.bergman import (bergman_density, bernstein_markov_diag, christoffel, dpp_sample, factorization_residual,
                              gram_factorization, gue_tridiagonal_sample, polynomial_ratio, trace_integral)
from plurilab.polybasis import MultiIndexBasis
from plurilab.weights import BaseMeasure, Weight

FLAT = Weight.quadratic(scale=0.0)


def test_circle_kernel_is_geometric_sum():
    # monomials are orthonormal on the unit circle, so K_k(z, z) = sum_{j<=k} |z|^{2j}
    k = 10
    gram = gram_factorization(MultiIndexBasis(1, k), FLAT, BaseMeasure.circle())
    z = np.array([0.3, 0.9j, 1.0, 1.7 * np.exp(0.4j)])
    exact = np.array([sum(abs(w) ** (2 * j) for j in range(k + 1)) for w in z])
    np.testing.assert_allclose(christoffel(gram, z).kernel, exact, rtol=1e-12)


def test_trace_identity():
    for base, w in ((BaseMeasure.circle(), FLAT), (BaseMeasure.lebesgue(real_line=True), Weight.half_quadratic()),
                    (BaseMeasure.gaussian(), Weight.quadratic())):
        gram = gram_factorization(MultiIndexBasis(1, 8), w, base)
        assert trace_integral(gram) == pytest.approx(gram.size, rel=1e-10)


def test_two_dimensional_trace():
    gram = gram_factorization(MultiIndexBasis(2, 4), Weight.quadratic(), BaseMeasure.lebesgue(n=2))
    assert trace_integral(gram) == pytest.approx(15, rel=1e-8)
    assert factorization_residual(gram) < 1e-10


def test_recombination_invariance(rng):
    basis = MultiIndexBasis(1, 6)
    a = gram_factorization(basis, Weight.quadratic(), BaseMeasure.lebesgue())
    R = np.triu(rng.normal(size=(7, 7))) + 3 * np.eye(7)
    b = gram_factorization(basis, Weight.quadratic(), BaseMeasure.lebesgue(), recombination=R)
    z = rng.normal(size=20) + 1j * rng.normal(size=20)
    np.testing.assert_allclose(christoffel(a, z).kernel, christoffel(b, z).kernel, rtol=1e-10)


def test_variational_bound_and_equality(rng):
    gram = gram_factorization(MultiIndexBasis(1, 12), Weight.quadratic(), BaseMeasure.lebesgue())
    z = rng.normal(size=30) + 1j * rng.normal(size=30)
    c = christoffel(gram, z)
    coeffs = rng.normal(size=(50, gram.size)) + 1j * rng.normal(size=(50, gram.size))
    assert np.all(polynomial_ratio(gram, coeffs, z) <= c.weighted[None, :] * (1 + 1e-10))
    np.testing.assert_allclose(c.variational, c.kernel, rtol=1e-10)


def test_bergman_density_integrates_to_one():
    gram = gram_factorization(MultiIndexBasis(1, 10), Weight.half_quadratic(), BaseMeasure.lebesgue(real_line=True))
    x = np.linspace(-12, 12, 24001)
    rho = bergman_density(gram, x.astype(complex))
    assert np.trapezoid(rho, x) == pytest.approx(1.0, abs=1e-8)


def test_dpp_matches_tridiagonal_oracle():
    # phi = x^2/2 at k = 20: both routes sample the same N = 21 point ensemble, E mean x^2 = N/k
    k = 20
    gram = gram_factorization(MultiIndexBasis(1, k), Weight.half_quadratic(), BaseMeasure.lebesgue(real_line=True))
    S = dpp_sample(gram, seed=4, samples=60)
    dpp = np.mean([np.mean(cf.points[:, 0].real ** 2) for cf in S])
    rng = np.random.default_rng(4)
    tri = np.mean([np.mean(gue_tridiagonal_sample(k + 1, k, rng) ** 2) for _ in range(2000)])
    assert tri == pytest.approx((k + 1) / k, rel=0.01)
    assert dpp == pytest.approx((k + 1) / k, rel=0.05)


def test_dpp_is_reproducible():
    gram = gram_factorization(MultiIndexBasis(1, 6), FLAT, BaseMeasure.arcsine())
    a = dpp_sample(gram, seed=9, samples=3)
    b = dpp_sample(gram, seed=9, samples=3)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.points, y.points)
        assert np.all(np.abs(x.points.real) <= 1)


def test_arcsine_bernstein_markov_subexponential():
    grid = np.cos(np.linspace(0, np.pi, 401)).astype(complex)
    rows, slope = bernstein_markov_diag(FLAT, BaseMeasure.arcsine(), grid, [4, 8, 16, 32])
    assert abs(slope) < 0.05
    assert rows[-1].sup_rho == pytest.approx(2.0, rel=0.05)


@pytest.mark.slow
def test_semicircle_scalings_at_k60():
    # phi = x^2/2 gives the semicircle on [-2, 2]: exact E mean x^2 = N/k = 61/60
    # phi = 2 x^2 gives the semicircle on [-1, 1]: exact N/(4k) = 61/240, near the target 1/4
    k = 60
    basis = MultiIndexBasis(1, k)
    line = BaseMeasure.lebesgue(real_line=True)
    half = dpp_sample(gram_factorization(basis, Weight.half_quadratic(), line), seed=60, samples=100)
    m_half = np.mean([np.mean(cf.points[:, 0].real ** 2) for cf in half])
    assert m_half == pytest.approx(61 / 60, abs=0.02)
    two = dpp_sample(gram_factorization(basis, Weight.quadratic(scale=2.0), line), seed=61, samples=100)
    m_two = np.mean([np.mean(cf.points[:, 0].real ** 2) for cf in two])
    assert m_two == pytest.approx(61 / 240, abs=0.005)
    assert abs(m_two - 0.25) <= 0.0125
