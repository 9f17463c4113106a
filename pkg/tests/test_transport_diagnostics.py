import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.stats import norm

from plurilab.diagnostics import (EmpiricalMeasure, circular_w1, histogram_entropy, partition_bruteforce,
                                  partition_montecarlo, relative_entropy, sliced_w1, wasserstein1)
from plurilab.energy import EnsembleModel
from plurilab.equilibrium import preset_equilibrium
from plurilab.errors import GridError, SizeMismatchError
from plurilab.polybasis import MultiIndexBasis
from plurilab.transport import (DiscreteMeasure, monotone_map_1d, ot_cost, plan_is_monotone, transport_potential)
from plurilab.weights import BaseMeasure, Weight

# -- transport


def test_assignment_and_lp_routes_agree(rng):
    for _ in range(30):
        N, n = int(rng.integers(2, 25)), int(rng.integers(1, 4))
        a = DiscreteMeasure.uniform(rng.normal(size=(N, n)))
        b = DiscreteMeasure.uniform(rng.normal(size=(N, n)))
        assert ot_cost(a, b, "assignment").cost == pytest.approx(ot_cost(a, b, "lp").cost, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 12).flatmap(lambda N: st.tuples(
    arrays(float, (N, 2), elements=st.floats(-3, 3, allow_nan=False)),
    arrays(float, (N, 2), elements=st.floats(-3, 3, allow_nan=False)))))
def test_cost_is_symmetric_and_below_identity_coupling(xy):
    x, y = xy
    a, b = DiscreteMeasure.uniform(x), DiscreteMeasure.uniform(y)
    c = ot_cost(a, b).cost
    assert c == pytest.approx(ot_cost(b, a).cost, abs=1e-10)
    assert c <= -np.mean(np.sum(x * y, axis=1)) + 1e-10


def test_general_marginals_plan_is_monotone(rng):
    x, y = rng.normal(size=30), rng.normal(size=41)
    w = rng.uniform(size=30)
    plan = ot_cost(DiscreteMeasure(x, w / w.sum()), DiscreteMeasure.uniform(y))
    assert plan.route == "lp"
    assert plan_is_monotone(plan.plan, x, y, tol=1e-12)


def test_weights_must_be_a_probability():
    with pytest.raises(ValueError):
        DiscreteMeasure([0.0, 1.0], [0.5, 0.6])
    with pytest.raises(SizeMismatchError):
        ot_cost(DiscreteMeasure.uniform([[0.0]]), DiscreteMeasure.uniform([[0.0, 1.0]]))


def test_laplace_monotone_map():
    T = monotone_map_1d(lambda t: 0.5 * np.exp(-abs(t)), -1, 1, support=(-40, 40))
    x = np.linspace(-5, 5, 11)
    np.testing.assert_allclose(T(x), np.sign(x) * (1 - np.exp(-np.abs(x))), atol=1e-8)


def test_gaussian_map_to_unit_interval_and_potential():
    class Law:
        cdf = staticmethod(norm.cdf)
    T = monotone_map_1d(Law, 0, 1)
    x = np.linspace(-6, 6, 12001)
    np.testing.assert_allclose(T(x), norm.cdf(x), atol=1e-15)
    u = transport_potential(T, x)
    # u' = T, so u(6) - u(-6) = int Phi = 6 (by symmetry Phi(t) + Phi(-t) = 1)
    assert u[-1] == pytest.approx(6.0, abs=1e-6)


def test_empirical_map_uses_mid_quantiles():
    T = monotone_map_1d(DiscreteMeasure.uniform([3.0, 1.0, 2.0]), 0, 3)
    np.testing.assert_allclose(T([1.0, 2.0, 3.0]), [0.5, 1.5, 2.5])

# -- diagnostics


def test_circular_w1_of_equidistant_points():
    N = 13
    th = 2 * np.pi * np.arange(N) / N + 0.3
    assert circular_w1(th) == pytest.approx(math.pi / (2 * N), rel=1e-9)


def test_w1_to_closed_form_laws(rng):
    arc = preset_equilibrium("arcsine")
    assert wasserstein1(arc.sample(rng, 40000)[:, None], arc) < 0.01
    disc = preset_equilibrium("uniform-disc")
    r = np.sqrt(rng.uniform(size=20000)) * np.exp(2j * np.pi * rng.uniform(size=20000))
    assert wasserstein1(r[:, None], disc) < 0.01


def test_w1_exact_for_point_mass():
    # W1(delta_0, uniform[-1,1]) on the line = 1/2; here the arcsine law has E|x| = 2/pi
    assert wasserstein1(np.zeros((1, 1)), preset_equilibrium("arcsine")) == pytest.approx(2 / math.pi, rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(arrays(float, 20, elements=st.floats(-5, 5, allow_nan=False)),
       arrays(float, 15, elements=st.floats(-5, 5, allow_nan=False)),
       arrays(float, 10, elements=st.floats(-5, 5, allow_nan=False)))
def test_w1_is_a_metric_on_the_line(a, b, c):
    a, b, c = a[:, None], b[:, None], c[:, None]
    assert wasserstein1(a, a) == 0
    assert wasserstein1(a, b) == pytest.approx(wasserstein1(b, a), abs=1e-12)
    assert wasserstein1(a, c) <= wasserstein1(a, b) + wasserstein1(b, c) + 1e-9


def test_sliced_w1_of_translate(rng):
    z = rng.normal(size=(500, 1)) + 1j * rng.normal(size=(500, 1))
    # every projection shifts by the projected translation; the mean of |cos| over angles is 2/pi
    assert sliced_w1(z, z + 1.0) == pytest.approx(2 / math.pi, rel=0.02)


def test_relative_entropy_cases():
    assert relative_entropy([1, 1], [1, 1]) == 0
    assert relative_entropy([1, 1, 0, 0], [1, 1, 1, 1]) == pytest.approx(math.log(2))
    assert math.isinf(relative_entropy([1, 1], [1, 0]))


def test_histogram_entropy_small_for_true_law(rng):
    x = rng.normal(size=50000)
    assert histogram_entropy(x, norm.cdf, edges=np.linspace(-4, 4, 33)) < 1e-3


def test_empirical_measure_moments():
    e = EmpiricalMeasure(np.array([[1 + 1j], [-1 + 0j]]))
    assert e.moment(2) == pytest.approx(1.5)


def test_partition_function_oracle():
    # N = 2, phi = |z|^2, beta = 1, Lebesgue: Z = int |z - w|^2 e^{-|z|^2 - |w|^2} = 2 pi^2
    m = EnsembleModel(MultiIndexBasis(1, 1), Weight.quadratic(), BaseMeasure.lebesgue(), 1.0)
    P = partition_bruteforce(m)
    assert P.Z == pytest.approx(2 * math.pi**2, rel=1e-9)
    assert partition_bruteforce(m, order=[1, 0]).Z == pytest.approx(P.Z, rel=1e-14)
    mc = partition_montecarlo(m, 400_000, seed=2)
    assert abs(mc.value - P.Z) < 4 * mc.stderr


def test_partition_on_the_circle():
    # uniform probability on the unit circle: E|z - w|^2 = 2
    m = EnsembleModel(MultiIndexBasis(1, 1), Weight.indicator(1.0), BaseMeasure.circle(), 1.0)
    assert partition_bruteforce(m).Z == pytest.approx(2.0, rel=1e-12)


def test_partition_truncation_error():
    # admissible but the one-point integrand only decays like r^-3
    m = EnsembleModel(MultiIndexBasis(1, 1), Weight.fubini_study(scale=3.0), BaseMeasure.lebesgue(), 1.0)
    with pytest.raises(GridError):
        partition_bruteforce(m)
