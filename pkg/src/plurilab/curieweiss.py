"""The Curie-Weiss model: free energy, mean-field fixed points and exact finite-N laws.

With s = +1 (ferro) or -1 (antiferro) the free energy per spin is

    F(m) = -s m^2/2 - h m + beta^{-1} [((1+m)/2) log((1+m)/2) + ((1-m)/2) log((1-m)/2)],

and its critical points solve m = tanh(beta (s m + h)).  The law of the
magnetization at finite N is proportional to binom(N, j) exp(beta N (s m^2/2 + h m)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp, xlogy

from .io import write_csv

SCAN_POINTS = 4001
BISECT_TOL = 1e-12
MAX_N = 10**6


@dataclass(frozen=True)
class CWParams:
    beta: float
    h: float = 0.0
    N: int = 1
    sign: str = "ferro"

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be at least 1")
        if self.sign not in ("ferro", "antiferro"):
            raise ValueError(f"sign must be ferro or antiferro, got {self.sign!r}")

    @property
    def s(self) -> float:
        return 1.0 if self.sign == "ferro" else -1.0


def _sign(sign: str) -> float:
    return CWParams(1.0, sign=sign).s


def entropy_term(m) -> np.ndarray:
    """((1+m)/2) log((1+m)/2) + ((1-m)/2) log((1-m)/2) with 0 log 0 = 0."""
    m = np.asarray(m, dtype=float)
    p, q = 0.5 * (1 + m), 0.5 * (1 - m)
    return xlogy(p, p) + xlogy(q, q)


def cw_free_energy(m, beta: float, h: float = 0.0, sign: str = "ferro") -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if np.any(np.abs(m) > 1):
        raise ValueError("magnetization must lie in [-1, 1]")
    s = _sign(sign)
    out = -s * m * m / 2 - h * m + entropy_term(m) / beta
    return out if out.ndim else float(out)


def _free_energy_curvature(m, beta, s):
    return -s + 1.0 / (beta * (1 - m * m))


@dataclass(frozen=True)
class FixedPoint:
    m: float
    free_energy: float
    stability: str  # "minimum", "maximum" or "degenerate"


def cw_magnetization(beta: float, h: float = 0.0, sign: str = "ferro") -> list:
    """All solutions of m = tanh(beta (s m + h)) in [-1, 1], sorted, with stability labels.

    Roots are bracketed on a symmetric grid and refined by bisection to 1e-12.
    A point is a minimum when beta F'' > 0, i.e. a mode of the finite-N law.
    """
    s = _sign(sign)
    g = lambda m: m - np.tanh(beta * (s * m + h))  # noqa: E731
    grid = np.linspace(-1.0, 1.0, SCAN_POINTS)
    vals = g(grid)
    roots = []
    for i in range(len(grid) - 1):
        a, b = grid[i], grid[i + 1]
        fa, fb = vals[i], vals[i + 1]
        if fa == 0.0:
            roots.append(float(a))
            continue
        if fa * fb < 0:
            for _ in range(200):
                mid = 0.5 * (a + b)
                fm = g(mid)
                if fm == 0.0 or b - a < BISECT_TOL:
                    break
                if fa * fm < 0:
                    b, fb = mid, fm
                else:
                    a, fa = mid, fm
            roots.append(float(0.5 * (a + b)))
    if vals[-1] == 0.0:
        roots.append(1.0)
    out = []
    for m in roots:
        if abs(m) >= 1:
            continue
        c = beta * _free_energy_curvature(m, beta, s)
        label = "minimum" if c > 1e-12 else ("maximum" if c < -1e-12 else "degenerate")
        out.append(FixedPoint(m, float(cw_free_energy(m, beta, h, sign)), label))
    return out


def global_minimizer(beta: float, h: float = 0.0, sign: str = "ferro") -> FixedPoint:
    """The stable fixed point of least free energy (first one on exact ties)."""
    pts = stable_points(beta, h, sign)
    return min(pts, key=lambda p: p.free_energy)


def stable_points(beta: float, h: float = 0.0, sign: str = "ferro") -> list:
    return [p for p in cw_magnetization(beta, h, sign) if p.stability == "minimum"]


@dataclass(frozen=True)
class CWLaw:
    params: CWParams
    m: np.ndarray
    log_p: np.ndarray
    window: tuple
    window_log_p: float
    rate: float  # -(1/(beta N)) log P(m_N in window)
    f_gap: float  # inf over the window of F - min F

    @property
    def p(self) -> np.ndarray:
        return np.exp(self.log_p)

    def rows(self):
        return zip(self.m.tolist(), self.log_p.tolist())

    def to_csv(self, path):
        return write_csv(path, ["m", "log_p"], self.rows())


def cw_log_weights(beta: float, h: float, N: int, sign: str = "ferro"):
    """(m_j, unnormalized log weights) for j = 0..N."""
    if N > MAX_N:
        raise ValueError(f"N = {N} exceeds {MAX_N}")
    s = _sign(sign)
    j = np.arange(N + 1)
    m = (2 * j - N) / N
    logb = gammaln(N + 1) - gammaln(j + 1) - gammaln(N - j + 1)
    return m, logb + beta * N * (s * m * m / 2 + h * m)


def cw_log_partition(beta: float, h: float, N: int, sign: str = "ferro") -> float:
    return float(logsumexp(cw_log_weights(beta, h, N, sign)[1]))


def cw_mean_energy(beta: float, h: float, N: int, sign: str = "ferro") -> float:
    """E[H] with H = -N (s m^2/2 + h m), so that d log Z / d beta = -E[H]."""
    s = _sign(sign)
    m, lw = cw_log_weights(beta, h, N, sign)
    p = np.exp(lw - logsumexp(lw))
    return float(np.sum(p * -N * (s * m * m / 2 + h * m)))


def _f_gap(window, beta, h, sign) -> float:
    lo, hi = window
    m = np.linspace(-1, 1, 200001)
    F = cw_free_energy(m, beta, h, sign)
    fixed = cw_magnetization(beta, h, sign)
    fmin = min([F.min()] + [p.free_energy for p in fixed])
    inside = (m >= lo) & (m <= hi)
    cands = list(F[inside])
    # the exact fixed points refine the grid minimum inside the window
    cands += [p.free_energy for p in fixed if lo <= p.m <= hi]
    cands += [float(cw_free_energy(lo, beta, h, sign)), float(cw_free_energy(hi, beta, h, sign))]
    return float(max(min(cands) - fmin, 0.0))


def cw_finite_n(beta: float, h: float, N: int, window, sign: str = "ferro") -> CWLaw:
    """Exact law of m_N and the window rate compared with the free-energy gap."""
    lo, hi = map(float, window)
    if not lo <= hi or hi < -1 or lo > 1:
        raise ValueError("window must meet [-1, 1]")
    # windows reaching past +-1 are cut to the attainable range
    lo, hi = max(lo, -1.0), min(hi, 1.0)
    m, lw = cw_log_weights(beta, h, N, sign)
    log_p = lw - logsumexp(lw)
    inside = (m >= lo - 1e-12) & (m <= hi + 1e-12)
    if not np.any(inside):
        raise ValueError("window contains no attainable magnetization value")
    wlp = float(logsumexp(log_p[inside]))
    rate = -wlp / (beta * N)
    return CWLaw(CWParams(beta, h, N, sign), m, log_p, (lo, hi), wlp, rate, _f_gap((lo, hi), beta, h, sign))


def cw_phase_table(betas, hs, sign: str = "ferro"):
    """Rows (beta, h, m, F, stability) over a parameter grid."""
    rows = []
    for b in betas:
        for h in hs:
            for p in cw_magnetization(b, h, sign):
                rows.append((b, h, p.m, p.free_energy, p.stability))
    return rows


def write_phase_table(path, rows):
    return write_csv(path, ["beta", "h", "m", "F", "stability"], rows)
