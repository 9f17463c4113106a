"""Equilibrium measures and radial mean-field Monge-Ampere solvers (n = 1).

With MA = (1/4pi) Laplacian and s = log r^2, a radial psi has Monge-Ampere
mass m(s) = psi'(s) inside the disc of radius e^{s/2}.  The mean-field
equation MA(psi) = e^{beta(psi - phi)} dV becomes

    psi''(s) = pi e^s rho(e^{s/2}) exp(beta (psi(s) - phihat(s))),

with m(-inf) = 0 and m(+inf) = 1.  It is discretized by finite volumes on a
uniform s grid: fluxes live on cell interfaces, the right-hand side is
integrated by the midpoint rule over dual cells (half cells at the ends).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg
from scipy.special import roots_legendre

from .errors import ConvergenceError, GridError
from .radial import RadialProfile
from .weights import BaseMeasure, Weight, weighted_extremal_radial

__all__ = [
    "RadialProfile",
    "ClosedFormMeasure",
    "preset_equilibrium",
    "default_grid",
    "solve_mfe_radial",
    "solve_cy_radial",
    "normalization_residual",
    "radial_second_moment",
    "temperature_sweep",
]

S_MIN, S_MAX, S_NODES = -12.0, 12.0, 4001
NEWTON_MAX_ITER = 200
MAX_HALVINGS = 30
RESIDUAL_TOL = 1e-8
# Newton keeps iterating a little below the contract tolerance
NEWTON_TOL = 1e-11
EXP_CAP = 700.0


def default_grid(s_min=S_MIN, s_max=S_MAX, nodes=S_NODES) -> np.ndarray:
    return np.linspace(s_min, s_max, nodes)


# ---------------------------------------------------------------------------
# closed forms


@dataclass(frozen=True)
class ClosedFormMeasure:
    """A probability law on R (kind "line") or a radial law on C (kind "radial").

    For radial laws the variable is the radius r and ``density`` is the
    density of the radius, so that cdf(r) is the mass of the disc of radius r.
    ``partial_moment(x)`` is the integral of t dF(t) up to x, used for exact
    Wasserstein distances.
    """

    name: str
    kind: str
    lo: float
    hi: float
    density: Callable
    cdf: Callable
    quantile: Callable
    partial_moment: Callable
    second_moment: float

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.quantile(rng.uniform(size=size))


def _arcsine():
    return ClosedFormMeasure(
        "arcsine",
        "line",
        -1.0,
        1.0,
        lambda x: np.where(np.abs(x) < 1, 1.0 / (math.pi * np.sqrt(np.clip(1 - np.asarray(x) ** 2, 1e-300, None))), 0.0),
        lambda x: np.clip(0.5 + np.arcsin(np.clip(x, -1, 1)) / math.pi, 0.0, 1.0),
        lambda u: np.sin(math.pi * (np.asarray(u) - 0.5)),
        lambda x: -np.sqrt(1 - np.clip(x, -1, 1) ** 2) / math.pi,
        0.5,
    )


def _semicircle(R: float = 1.0):
    def cdf(x):
        t = np.clip(np.asarray(x, dtype=float) / R, -1, 1)
        return 0.5 + (t * np.sqrt(1 - t * t) + np.arcsin(t)) / math.pi

    def quantile(u):
        u = np.asarray(u, dtype=float)
        lo, hi = np.full(u.shape, -R), np.full(u.shape, R)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            below = cdf(mid) < u
            lo, hi = np.where(below, mid, lo), np.where(below, hi, mid)
        return 0.5 * (lo + hi)

    def partial(x):
        t = np.clip(np.asarray(x, dtype=float) / R, -1, 1)
        return -2.0 * R * (1 - t * t) ** 1.5 / (3 * math.pi)

    return ClosedFormMeasure(
        "semicircle",
        "line",
        -R,
        R,
        lambda x: np.where(np.abs(x) < R, 2 / (math.pi * R * R) * np.sqrt(np.clip(R * R - np.asarray(x) ** 2, 0, None)), 0.0),
        cdf,
        quantile,
        partial,
        R * R / 4,
    )


def _uniform_disc(R: float = 1.0):
    return ClosedFormMeasure(
        "uniform-disc",
        "radial",
        0.0,
        R,
        lambda r: np.where((np.asarray(r) >= 0) & (np.asarray(r) <= R), 2 * np.asarray(r) / R**2, 0.0),
        lambda r: np.clip((np.asarray(r, dtype=float) / R) ** 2, 0.0, 1.0),
        lambda u: R * np.sqrt(np.asarray(u, dtype=float)),
        lambda r: 2 * np.clip(np.asarray(r, dtype=float), 0, R) ** 3 / (3 * R**2),
        R * R / 2,
    )


def _fubini_study_sphere():
    # MA of log(1 + |z|^2): radial cdf r^2 / (1 + r^2)
    def partial(r):
        r = np.asarray(r, dtype=float)
        return np.arctan(r) - r / (1 + r * r)

    return ClosedFormMeasure(
        "fubini-study-sphere",
        "radial",
        0.0,
        math.inf,
        lambda r: 2 * np.asarray(r) / (1 + np.asarray(r) ** 2) ** 2,
        lambda r: np.asarray(r, dtype=float) ** 2 / (1 + np.asarray(r, dtype=float) ** 2),
        lambda u: np.sqrt(np.asarray(u, dtype=float) / (1 - np.asarray(u, dtype=float))),
        partial,
        math.inf,
    )


def preset_equilibrium(name: str, radius: float = 1.0) -> ClosedFormMeasure:
    """arcsine, semicircle(radius), uniform-disc(radius) or fubini-study-sphere."""
    if name == "arcsine":
        return _arcsine()
    if name == "semicircle":
        return _semicircle(radius)
    if name == "uniform-disc":
        return _uniform_disc(radius)
    if name == "fubini-study-sphere":
        return _fubini_study_sphere()
    raise ValueError(f"unknown equilibrium measure {name!r}")


# ---------------------------------------------------------------------------
# radial mean-field equation


def _check_grid(s: np.ndarray) -> float:
    s = np.asarray(s, dtype=float)
    if s.ndim != 1 or len(s) < 5:
        raise GridError("need at least 5 grid nodes")
    h = np.diff(s)
    if np.any(h <= 0) or np.max(np.abs(h - h[0])) > 1e-9 * abs(h[0]):
        raise GridError("the radial solvers need a uniform increasing s grid")
    return float(h[0])


def _log_rhs_weights(weight: Weight, base: BaseMeasure, beta: float, s: np.ndarray, h: float) -> np.ndarray:
    """log of (cell width) * pi e^s rho(e^{s/2}) e^{-beta phi} at the nodes."""
    if base.n != 1 or base.real_line:
        raise ValueError("radial solvers need a planar base measure in one variable")
    rho = base.radial_density(np.exp(0.5 * s))
    w = np.full(len(s), h)
    w[0] = w[-1] = 0.5 * h
    phi = weight.radial(s)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(w * math.pi * rho) + s - beta * phi
    return np.where(np.isnan(out), -math.inf, out)


def _residual(psi, logw, beta, h):
    flux = np.diff(psi) / h
    div = np.empty_like(psi)
    div[0] = flux[0]
    div[1:-1] = flux[1:] - flux[:-1]
    div[-1] = 1.0 - flux[-1]
    expo = np.minimum(logw + beta * psi, EXP_CAP)
    rhs = np.exp(expo)
    return div - rhs, rhs


def _newton(psi, logw, beta, h, tol=NEWTON_TOL, max_iter=NEWTON_MAX_ITER):
    M = len(psi)
    R, rhs = _residual(psi, logw, beta, h)
    norm = np.max(np.abs(R))
    it = 0
    for it in range(max_iter):
        if norm < tol:
            break
        ab = np.zeros((3, M))
        ab[0, 1:] = 1.0 / h
        ab[2, :-1] = 1.0 / h
        diag = np.full(M, -2.0 / h)
        diag[0] = diag[-1] = -1.0 / h
        ab[1] = diag - beta * rhs
        try:
            step = scipy.linalg.solve_banded((1, 1), ab, -R, check_finite=False)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise ConvergenceError(f"singular Newton system: {exc}") from exc
        t = 1.0
        for _ in range(MAX_HALVINGS + 1):
            trial = psi + t * step
            Rt, rhst = _residual(trial, logw, beta, h)
            nt = np.max(np.abs(Rt))
            if nt < norm:
                break
            t *= 0.5
        else:
            return psi, norm, it, False
        psi, R, rhs, norm = trial, Rt, rhst, nt
    return psi, norm, it, norm < tol


def _mass_shift(psi, logw, beta):
    """Constant c with sum exp(logw + beta (psi + c)) = 1."""
    lse = np.logaddexp.reduce(logw + beta * psi)
    return -lse / beta


def _profile_from_fluxes(s, psi, h) -> RadialProfile:
    flux = np.diff(psi) / h
    m = np.empty_like(psi)
    m[0], m[-1] = 0.0, 1.0
    m[1:-1] = 0.5 * (flux[1:] + flux[:-1])
    return RadialProfile(s, psi, m)


@dataclass(frozen=True)
class MFESolution:
    profile: RadialProfile
    residual: float
    iterations: int
    rhs_mass: np.ndarray
    beta: float


def _solve_mfe(weight, base, beta, s, guess=None) -> MFESolution:
    h = _check_grid(s)
    logw = _log_rhs_weights(weight, base, beta, s, h)
    if not np.any(np.isfinite(logw)):
        raise GridError("the right-hand side vanishes on the whole grid")
    guesses = []
    if guess is not None:
        guesses.append(np.asarray(guess, dtype=float))
    try:
        guesses.append(weighted_extremal_radial(weight, s).psi)
    except GridError:
        pass
    guesses.append(np.maximum(s, 0.0))
    last = None
    for g in guesses:
        psi0 = g + _mass_shift(g, logw, beta)
        psi, norm, it, ok = _newton(psi0, logw, beta, h)
        if not ok and norm < RESIDUAL_TOL:
            ok = True
        if ok:
            _, rhs = _residual(psi, logw, beta, h)
            return MFESolution(_profile_from_fluxes(s, psi, h), norm, it, rhs, beta)
        last = (norm, it)
    raise ConvergenceError(f"Newton did not converge at beta={beta} (residual {last[0]:.3e} after {last[1]} iterations)")


def solve_mfe_radial(weight: Weight, base: BaseMeasure, beta: float, s_grid=None, guess=None, full: bool = False):
    """Radial solution of MA(psi) = e^{beta(psi - phi)} dV by damped Newton.

    Falls back to continuation in beta (from beta/2, recursively) when the
    direct solve from the shifted envelope does not converge.  Returns the
    RadialProfile, or the full MFESolution when ``full`` is set.
    """
    if not beta > 0 or math.isinf(beta):
        raise ValueError("solve_mfe_radial needs a finite positive beta")
    s = default_grid() if s_grid is None else np.asarray(s_grid, dtype=float)
    try:
        sol = _solve_mfe(weight, base, beta, s, guess)
    except ConvergenceError:
        sol = None
        path = [beta / 2**j for j in range(1, 9)][::-1]
        g = guess
        for b in path + [beta]:
            try:
                sol = _solve_mfe(weight, base, b, s, g)
                g = sol.profile.psi
            except ConvergenceError:
                sol = None
        if sol is None or sol.beta != beta:
            raise
    tails = sol.rhs_mass[[0, -1]]
    if np.max(tails) > 1e-6:
        raise GridError(f"mass leaks through the grid ends ({tails.tolist()}); widen the s grid")
    return sol if full else sol.profile


# ---------------------------------------------------------------------------
# beta -> 0: Calabi-Yau type equation MA(psi) = dV

_GL_X, _GL_W = roots_legendre(8)


def _cells_gauss(s: np.ndarray):
    a, b = s[:-1], s[1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    nodes = mid[:, None] + half[:, None] * _GL_X[None, :]
    weights = half[:, None] * _GL_W[None, :]
    return nodes, weights


def _radial_cdf_s(base: BaseMeasure, s: np.ndarray) -> np.ndarray:
    return base.radial_cdf(np.exp(0.5 * np.asarray(s, dtype=float)))


def _integrate_against(base: BaseMeasure, fn: Callable, s: np.ndarray) -> float:
    """Integral of fn(s) dV over the plane for a radial base measure, s grid as support."""
    if base.kind == "circle":
        return float(fn(np.array([2 * math.log(base.radius)]))[0])
    nodes, wts = _cells_gauss(s)
    dens = base.radial_density(np.exp(0.5 * nodes)) * math.pi * np.exp(nodes)
    vals = np.where(dens > 0, fn(nodes), 0.0)
    inner = float(np.sum(vals * dens * wts))
    # tails outside the grid, with fn frozen at the end values
    left = float(_radial_cdf_s(base, s[:1])[0])
    right = 1.0 - float(_radial_cdf_s(base, s[-1:])[0])
    return inner + left * float(fn(s[:1])[0]) + right * float(fn(s[-1:])[0])


def _hermite(profile: RadialProfile, x: np.ndarray) -> np.ndarray:
    """Cubic Hermite interpolation of psi using the node slopes m."""
    s, psi, m = profile.s, profile.psi, profile.m
    x = np.asarray(x, dtype=float)
    i = np.clip(np.searchsorted(s, x, side="right") - 1, 0, len(s) - 2)
    h = s[i + 1] - s[i]
    t = (x - s[i]) / h
    h00 = 2 * t**3 - 3 * t**2 + 1
    h10 = t**3 - 2 * t**2 + t
    h01 = -2 * t**3 + 3 * t**2
    h11 = t**3 - t**2
    out = h00 * psi[i] + h10 * h * m[i] + h01 * psi[i + 1] + h11 * h * m[i + 1]
    return np.where(x < s[0], psi[0], np.where(x > s[-1], psi[-1] + (x - s[-1]), out))


def normalization_residual(profile: RadialProfile, base: BaseMeasure, weight: Weight) -> float:
    """Integral of (psi - phi) dV, evaluated with a Hermite interpolant of psi."""
    return _integrate_against(base, lambda x: _hermite(profile, x) - weight.radial(x), profile.s)


def solve_cy_radial(base: BaseMeasure, weight: Weight, s_grid=None) -> RadialProfile:
    """Radial solution of MA(psi_0) = dV normalized by the integral of (psi_0 - phi) dV = 0.

    The slope psi_0' is the radial cdf of dV, integrated exactly cell by cell
    with Gauss-Legendre; the end nodes carry the boundary values m = 0 and 1.
    """
    if not base.probability:
        raise ValueError("the Calabi-Yau equation needs a probability base measure")
    s = default_grid() if s_grid is None else np.asarray(s_grid, dtype=float)
    _check_grid(s)
    nodes, wts = _cells_gauss(s)
    incr = np.sum(_radial_cdf_s(base, nodes) * wts, axis=1)
    psi = np.concatenate([[0.0], np.cumsum(incr)])
    m = _radial_cdf_s(base, s).astype(float)
    m[0], m[-1] = 0.0, 1.0
    prof = RadialProfile(s, psi, m)
    shift = -normalization_residual(prof, base, weight)
    return RadialProfile(s, psi + shift, m)


def radial_second_moment(profile: RadialProfile) -> float:
    """Integral of |z|^2 against the Monge-Ampere measure of the profile."""
    dm = np.diff(profile.m)
    mid = 0.5 * (profile.s[1:] + profile.s[:-1])
    return float(np.sum(dm * np.exp(mid)))


# ---------------------------------------------------------------------------
# temperature sweep


@dataclass(frozen=True)
class SweepRow:
    beta: float
    envelope_gap: float
    cy_gap: float
    normalization: float
    support_radius: float
    residual: float
    status: str


def temperature_sweep(weight: Weight, base: BaseMeasure, beta_list, s_grid=None, workers: int = 1):
    """Solve the mean-field equation for each beta and report distances to both limits.

    envelope_gap is the sup over the grid of |psi_beta - psi_phi|; cy_gap the
    sup of |psi_beta - psi_0| (only when dV is a probability measure).
    """
    s = default_grid() if s_grid is None else np.asarray(s_grid, dtype=float)
    env = weighted_extremal_radial(weight, s).psi
    cy = solve_cy_radial(base, weight, s).psi if base.probability else None

    def row(beta):
        try:
            sol = solve_mfe_radial(weight, base, beta, s, full=True)
        except (ConvergenceError, GridError) as exc:
            return SweepRow(beta, math.nan, math.nan, math.nan, math.nan, math.nan, f"failed: {exc}")
        p = sol.profile
        gap = float(np.max(np.abs(p.psi - env)))
        cyg = float(np.max(np.abs(p.psi - cy))) if cy is not None else math.nan
        norm = normalization_residual(p, base, weight) if base.probability else math.nan
        return SweepRow(beta, gap, cyg, norm, p.support_radius(1e-6), sol.residual, "ok")

    betas = list(beta_list)
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            return list(ex.map(row, betas))
    return [row(b) for b in betas]
