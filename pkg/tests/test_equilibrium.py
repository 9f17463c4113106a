import math

import numpy as np
import pytest
from scipy.interpolate import CubicSpline

from plurilab.equilibrium import (default_grid, normalization_residual, preset_equilibrium, radial_second_moment,
                                  solve_cy_radial, solve_mfe_radial, temperature_sweep)
from plurilab.errors import GridError
from plurilab.radial import RadialProfile
from plurilab.weights import BaseMeasure, Weight


def test_mfe_satisfies_the_planar_equation():
    # independent check of the radial reduction: 5-point Laplacian of psi(log|z|^2) on a 2D grid
    beta = 2.0
    prof = solve_mfe_radial(Weight.quadratic(), BaseMeasure.lebesgue(), beta)
    spline = CubicSpline(prof.s, prof.psi)
    h = 2e-3
    x = np.arange(-1.6, 1.6 + h / 2, h)
    X, Y = np.meshgrid(x, x, indexing="ij")
    r2 = X**2 + Y**2
    with np.errstate(divide="ignore"):
        u = spline(np.log(np.where(r2 > 0, r2, 1e-300)))
    lap = (u[2:, 1:-1] + u[:-2, 1:-1] + u[1:-1, 2:] + u[1:-1, :-2] - 4 * u[1:-1, 1:-1]) / h**2
    inner = r2[1:-1, 1:-1]
    rhs = 4 * math.pi * np.exp(beta * (u[1:-1, 1:-1] - inner))
    mask = (inner > 0.3**2) & (inner < 1.5**2)
    rel = np.max(np.abs(lap[mask] / rhs[mask] - 1))
    assert rel < 1e-4


def test_mfe_mass_is_one_and_profile_convex():
    prof = solve_mfe_radial(Weight.quadratic(), BaseMeasure.lebesgue(), 4.0)
    assert prof.m[0] == pytest.approx(0.0, abs=1e-6)
    assert prof.m[-1] == pytest.approx(1.0, abs=1e-6)
    assert np.all(np.diff(prof.m) >= -1e-12)


def test_gaussian_beta_small_frozen_moment():
    # phi = |z|^2 with the standard complex gaussian: fixed point iteration on a fine grid gives 21/22
    prof = solve_mfe_radial(Weight.quadratic(), BaseMeasure.gaussian(), 0.1)
    assert radial_second_moment(prof) == pytest.approx(21 / 22, abs=5e-5)


def test_cy_unit_disc_closed_form():
    # MA(psi) = uniform disc measure with log+ growth: psi = |z|^2 - 1 inside, log|z|^2 outside, up to a constant
    cy = solve_cy_radial(BaseMeasure.ball(1.0), Weight.torus_log())
    ex = np.where(cy.s <= 0, np.exp(cy.s) - 1, cy.s)
    d = cy.psi - ex
    assert np.max(np.abs(d - d.mean())) < 1e-10
    assert abs(normalization_residual(cy, BaseMeasure.ball(1.0), Weight.torus_log())) < 1e-6


def test_cy_gaussian_second_moment():
    cy = solve_cy_radial(BaseMeasure.gaussian(), Weight.quadratic())
    assert radial_second_moment(cy) == pytest.approx(1.0, abs=1e-5)


def test_sweep_approaches_envelope_and_cy():
    rows = temperature_sweep(Weight.quadratic(), BaseMeasure.gaussian(), [0.1, 0.2, 0.4, 8.0, 16.0, 32.0])
    assert all(r.status == "ok" for r in rows)
    env = [r.envelope_gap for r in rows[3:]]
    cy = [r.cy_gap for r in rows[:3]]
    assert env[0] > env[1] > env[2]
    assert cy[0] < cy[1] < cy[2]


def test_sweep_is_worker_independent():
    a = temperature_sweep(Weight.quadratic(), BaseMeasure.lebesgue(), [2.0, 4.0])
    b = temperature_sweep(Weight.quadratic(), BaseMeasure.lebesgue(), [2.0, 4.0], workers=2)
    assert a == b


def test_grid_too_narrow_is_reported():
    with pytest.raises(GridError):
        solve_mfe_radial(Weight.quadratic(), BaseMeasure.lebesgue(), 2.0, s_grid=np.linspace(-1, 0.5, 200))


def test_default_grid_is_uniform():
    s = default_grid()
    assert np.allclose(np.diff(s), s[1] - s[0])


def test_profile_validation():
    with pytest.raises(GridError):
        RadialProfile([0.0, 1.0, 0.5], [0, 0, 0], [0, 0, 0])


@pytest.mark.parametrize("name,m2", [("arcsine", 0.5), ("semicircle", 0.25), ("uniform-disc", 0.5)])
def test_closed_form_moments(name, m2):
    law = preset_equilibrium(name)
    assert law.second_moment == pytest.approx(m2, rel=1e-12)
    assert law.cdf(law.hi) == pytest.approx(1.0)
    u = np.linspace(0.01, 0.99, 9)
    np.testing.assert_allclose(law.cdf(law.quantile(u)), u, atol=1e-10)
