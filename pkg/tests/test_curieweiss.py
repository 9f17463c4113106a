import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from plurilab.curieweiss import (cw_finite_n, cw_free_energy, cw_log_partition, cw_magnetization, cw_mean_energy,
                                 cw_phase_table, global_minimizer, stable_points)


def test_fixed_point_at_beta_two_against_brentq():
    ref = brentq(lambda m: m - math.tanh(2 * m), 0.5, 1.0, xtol=1e-15)
    m = max(p.m for p in stable_points(2.0))
    assert m == pytest.approx(ref, abs=1e-11)
    assert m == pytest.approx(0.9575040240776724, abs=1e-11)


@pytest.mark.parametrize("beta", [0.1, 0.5, 0.99, 1.0])
def test_high_temperature_unique_zero(beta):
    pts = cw_magnetization(beta)
    assert [p.m for p in pts] == [0.0]


def test_low_temperature_three_points():
    pts = cw_magnetization(2.0)
    assert [p.stability for p in pts] == ["minimum", "maximum", "minimum"]
    assert pts[0].m == pytest.approx(-pts[2].m)


def test_antiferro_unique():
    for beta in (0.5, 2.0, 5.0):
        assert [p.m for p in cw_magnetization(beta, sign="antiferro")] == [0.0]


def test_free_energy_special_values():
    assert cw_free_energy(0.0, 2.0) == pytest.approx(-math.log(2) / 2)
    assert cw_free_energy(1.0, 2.0) == pytest.approx(-0.5)
    with pytest.raises(ValueError):
        cw_free_energy(1.5, 1.0)


def test_field_selects_the_positive_branch():
    assert global_minimizer(2.0, 0.01).m > 0.9


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 4.0), st.floats(-0.5, 0.5))
def test_fixed_points_solve_the_equation(beta, h):
    for p in cw_magnetization(beta, h):
        assert abs(p.m - math.tanh(beta * (p.m + h))) < 1e-9


@settings(max_examples=20, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(-0.3, 0.3), st.integers(5, 300))
def test_log_partition_derivative_is_minus_mean_energy(beta, h, N):
    e = 1e-5
    d = (cw_log_partition(beta + e, h, N) - cw_log_partition(beta - e, h, N)) / (2 * e)
    assert d == pytest.approx(-cw_mean_energy(beta, h, N), rel=1e-5, abs=1e-5)


def test_finite_n_law_is_normalized_and_symmetric():
    law = cw_finite_n(2.0, 0.0, 100, (-1, 1))
    assert np.exp(law.log_p).sum() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(law.log_p, law.log_p[::-1], atol=1e-10)
    assert law.rate == pytest.approx(0.0, abs=1e-12)


def test_rate_approaches_free_energy_gap():
    gaps = [abs(cw_finite_n(2.0, 0.0, N, (-0.05, 0.05)).rate / cw_finite_n(2.0, 0.0, N, (-0.05, 0.05)).f_gap - 1)
            for N in (200, 2000)]
    assert gaps[1] < gaps[0] < 0.2


def test_window_outside_range():
    with pytest.raises(ValueError):
        cw_finite_n(1.0, 0.0, 10, (1.5, 2.0))


def test_phase_table_rows():
    rows = cw_phase_table([0.5, 2.0], [0.0])
    assert len(rows) == 4
