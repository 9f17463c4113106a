import math

import numpy as np
import pytest

from plurilab.energy import (EnsembleModel, determinantal_energy, green_formula_estimate, log_gibbs_density,
                             pair_energy, weighted_hamiltonian)
from plurilab.errors import AdmissibilityError, InsufficientSamplesError
from plurilab.polybasis import MultiIndexBasis
from plurilab.sampler import Carrier, Schedule, discrete_metropolis, fekete_search, run_chain
from plurilab.weights import BaseMeasure, Weight


def quad_model(k, beta=1.0, base=None):
    return EnsembleModel(MultiIndexBasis(1, k), Weight.quadratic(), base or BaseMeasure.lebesgue(), beta)


def test_hamiltonian_frozen_value():
    # N=2 at (1, -1): |D|^2 = 4, sum phi = 2, H = -log 4 + 2
    m = quad_model(1)
    assert weighted_hamiltonian(m, [1.0, -1.0]) == pytest.approx(2 - math.log(4), abs=1e-14)


def test_determinantal_energy_normalization():
    m = quad_model(2)
    z = np.exp(2j * np.pi * np.arange(3) / 3)
    # E = -(1/(N k)) log|D|^2 with |D|^2 = 27
    assert determinantal_energy(m, z) == pytest.approx(-math.log(27) / 6, abs=1e-14)


def test_pair_energy_of_roots_of_unity():
    z = np.exp(2j * np.pi * np.arange(5) / 5)
    # sum over ordered pairs of log|z_i - z_j|^2 is 2 N log N
    assert pair_energy(z) == pytest.approx(-math.log(5) / 4, rel=1e-12)


def test_coincident_points_have_infinite_energy():
    m = quad_model(1)
    assert math.isinf(weighted_hamiltonian(m, [0.3, 0.3]))
    assert log_gibbs_density(m, [0.3, 0.3]) == -math.inf


def test_inadmissible_model_is_refused():
    with pytest.raises(AdmissibilityError):
        EnsembleModel(MultiIndexBasis(1, 2), Weight.fubini_study(), BaseMeasure.lebesgue(), 1.0)
    with pytest.raises(ValueError):
        quad_model(2, beta=-1.0)


def test_single_particle_gaussian_law():
    # N = 1 (k = 0): density e^{-beta |z|^2}, so E|z|^2 = 1/beta
    m = quad_model(0, beta=2.0)
    S = run_chain(m, Schedule.fixed(2.0), 6000, chains=2, seed=3)
    assert np.mean(np.abs(S.pooled()) ** 2) == pytest.approx(0.5, rel=0.08)
    assert np.all((S.acceptance > 0.4) & (S.acceptance < 0.75))


def test_chains_are_reproducible_and_worker_independent():
    m = quad_model(3, beta=4.0)
    a = run_chain(m, Schedule.fixed(4.0), 300, chains=3, seed=11)
    b = run_chain(m, Schedule.fixed(4.0), 300, chains=3, seed=11, workers=3)
    np.testing.assert_array_equal(a.samples, b.samples)
    c = run_chain(m, Schedule.fixed(4.0), 300, chains=3, seed=12)
    assert not np.array_equal(a.samples, c.samples)


def test_rwm_targets_the_same_law():
    m = quad_model(0, beta=1.0)
    S = run_chain(m, Schedule.fixed(1.0), 8000, chains=2, seed=5, method="rwm")
    assert S.method == "rwm"
    assert np.mean(np.abs(S.pooled()) ** 2) == pytest.approx(1.0, rel=0.1)


def test_schedule_validation():
    with pytest.raises(ValueError):
        Schedule.geometric(1.0, 0.9)
    assert Schedule.ramp(2.0, 4.0).beta_at(0, 4) == 4.0
    assert Schedule.geometric(1.0, 2.0, 10.0).beta_at(10, 3) == 10.0


def test_discrete_metropolis_stationary_law():
    lw = np.log(np.array([1.0, 2.0, 3.0, 4.0]))
    path = discrete_metropolis(lw, 200_000, seed=1)
    freq = np.bincount(path, minlength=4) / len(path)
    np.testing.assert_allclose(freq, np.exp(lw) / np.exp(lw).sum(), atol=0.01)


def test_fekete_interval_n4_is_legendre_lobatto():
    # Fekete points of [-1, 1] are the Gauss-Lobatto nodes: +-1 and +-1/sqrt(5)
    m = EnsembleModel(MultiIndexBasis(1, 3), Weight.indicator(1.0), BaseMeasure.interval(), math.inf)
    res = fekete_search(m, Carrier.from_measure(BaseMeasure.interval()), restarts=1, seed=0)
    x = np.sort(res.config.points[:, 0].real)
    np.testing.assert_allclose(x, [-1, -1 / math.sqrt(5), 1 / math.sqrt(5), 1], atol=1e-6)


def test_green_formula_is_centred_and_reproducible():
    m = quad_model(2, beta=1.0, base=BaseMeasure.gaussian())
    grid = np.linspace(0, 2, 5).astype(complex)[:, None]
    a = green_formula_estimate(m, grid, 200, seed=1)
    b = green_formula_estimate(m, grid, 200, seed=1, workers=2)
    np.testing.assert_array_equal(a.values, b.values)
    assert abs(a.values.mean()) < 1e-12
    with pytest.raises(InsufficientSamplesError):
        green_formula_estimate(m, grid, 10, seed=1)
