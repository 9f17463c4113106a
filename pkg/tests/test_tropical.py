import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from plurilab.errors import AdmissibilityError, GeometryError, SizeMismatchError
from plurilab.tropical import (ConvexBody, assignment, assignment_bruteforce, e_trop, lattice_cloud,
                               ma_closed_form_beta0, r_invariant, solve_real_ma_1d, tropical_gibbs,
                               tropical_log_density, truncation_diagnostic)


def test_r_invariant_values():
    assert r_invariant(ConvexBody.interval(-1, 2)) == pytest.approx(2 / 3, abs=1e-12)
    assert r_invariant(ConvexBody.interval(-1, 2).scaled(5)) == pytest.approx(2 / 3, abs=1e-12)
    assert r_invariant(ConvexBody.cube(2)) == 1.0
    # triangle with vertices (-1,-1), (3,-1), (-1,2): barycenter (1/3, 0)
    P = ConvexBody(np.array([[-1, -1], [3, -1], [-1, 2]]))
    np.testing.assert_allclose(P.barycenter, [1 / 3, 0], atol=1e-14)
    # the ray from b through 0 leaves P at q = (-1, 0), so R_P = 1 / (4/3)
    assert r_invariant(P) == pytest.approx(0.75, abs=1e-12)


def test_origin_must_be_interior():
    with pytest.raises(GeometryError):
        r_invariant(ConvexBody.interval(0, 1))


def test_json_round_trip():
    P = ConvexBody.simplex(2)
    Q = ConvexBody.from_json(P.to_json())
    np.testing.assert_array_equal(P.vertices, Q.vertices)


def test_lattice_counts():
    assert lattice_cloud(ConvexBody.interval(-1, 2), 1).size == 4
    assert lattice_cloud(ConvexBody.cube(2), 1).size == 9
    assert lattice_cloud(ConvexBody.simplex(2), 5).size == 21


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 6).flatmap(lambda N: st.tuples(
    arrays(float, (N, 2), elements=st.floats(-3, 3, allow_nan=False)),
    arrays(float, (N, 2), elements=st.floats(-3, 3, allow_nan=False)))))
def test_assignment_matches_bruteforce(xp):
    x, p = xp
    v, s = assignment(x, p)
    vb, sb = assignment_bruteforce(x, p)
    assert v == pytest.approx(vb, abs=1e-9)


def test_tie_breaking_is_lexicographic():
    x = np.zeros((4, 1))
    p = np.arange(4.0)[:, None]
    v, s = assignment(x, p)
    assert s.tolist() == [0, 1, 2, 3]
    assert s.tolist() == assignment_bruteforce(x, p)[1].tolist()


def test_e_trop_is_convex_and_homogeneous(rng):
    cloud = lattice_cloud(ConvexBody.interval(-1, 2), 3)
    N = cloud.size
    for _ in range(20):
        x, y = rng.normal(size=(N, 1)), rng.normal(size=(N, 1))
        f = lambda v: e_trop(v, cloud)[0]  # noqa: E731
        assert f(0.5 * (x + y)) <= 0.5 * (f(x) + f(y)) + 1e-12
        assert f(3 * x) == pytest.approx(3 * f(x))


def test_assignment_size_mismatch():
    with pytest.raises(SizeMismatchError):
        assignment(np.zeros((3, 1)), np.zeros((2, 1)))


def test_log_density_at_beta_zero_is_product():
    cloud = lattice_cloud(ConvexBody.interval(-1, 1), 2)
    x = np.array([[0.5], [-2.0], [1.0], [0.0], [3.0]])[: cloud.size]
    assert tropical_log_density(x, cloud, 0.0, lambda v: np.abs(v).ravel()) == pytest.approx(-np.abs(x).sum())


def test_gibbs_beta_zero_is_laplace():
    res = tropical_gibbs(ConvexBody.interval(-1, 1), 4, 0.0, sweeps=3000, chains=2, seed=1)
    x = res.pooled().ravel()
    assert np.mean(np.abs(x)) == pytest.approx(1.0, rel=0.08)


def test_gibbs_refuses_below_threshold():
    res = tropical_gibbs(ConvexBody.interval(-1, 2), 2, -0.9, seed=1, diagnostic_samples=4000)
    assert res.refused and res.samples is None
    assert res.diagnostic.diverges


def test_truncation_diagnostic_reproducible():
    a = truncation_diagnostic(ConvexBody.interval(-1, 2), 1, -0.3, samples=2000, seed=5)
    b = truncation_diagnostic(ConvexBody.interval(-1, 2), 1, -0.3, samples=2000, seed=5)
    np.testing.assert_array_equal(a.log_mass, b.log_mass)


def test_real_ma_beta0_closed_form():
    s = solve_real_ma_1d(-1, 1, 0.0)
    u, du = ma_closed_form_beta0(s.x)
    assert np.max(np.abs(s.u - u)) < 1e-8
    assert np.max(np.abs(s.du - du)) < 1e-6


@pytest.mark.parametrize("beta", [5.0, -0.5])
def test_real_ma_convex_with_gradient_image(beta):
    s = solve_real_ma_1d(-1, 2, beta)
    assert s.residual < 1e-8
    assert np.min(np.diff(s.u, 2)) > -1e-12
    assert s.du[0] == pytest.approx(-1, abs=1e-3) and s.du[-1] == pytest.approx(2, abs=1e-3)


def test_ke_needs_centred_body():
    with pytest.raises(AdmissibilityError):
        solve_real_ma_1d(-1, 2, -1.0)
