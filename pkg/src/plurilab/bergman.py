"""Weighted Bergman kernels, Christoffel functions and projection DPP sampling.

The Gram matrix G_ij = int e_i conj(e_j) e^{-k phi} dV is computed on a
quadrature that is refined by doubling.  For numerical stability the Gram
matrix is formed in a working basis: by default the orthonormal polynomials
of the coarse quadrature produced by an Arnoldi recurrence (a fixed
triangular recombination of the monomials), so that G is close to the
identity and its Cholesky factor is well conditioned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg
from scipy.special import roots_legendre

from .errors import ConditionError, ConvergenceError, ProposalFailureError
from .io import write_csv
from .polybasis import Configuration, MultiIndexBasis, _arnoldi
from .weights import BaseMeasure, Weight

MAX_CONDITION = 1e14
ORTHO_TOL = 1e-12
MAX_DOUBLINGS = 12
# truncation of unbounded carriers: drop where the integrand is e^-70 below its peak
TRUNCATION_DEPTH = 70.0
MIN_EFFICIENCY = 1e-6
# safety factor on the grid maximum of the one-point intensity
ENVELOPE_SAFETY = 1.05


# ---------------------------------------------------------------------------
# quadrature


@dataclass(frozen=True)
class Quadrature:
    """Nodes (M, n) complex and weights (M,) for the measure e^{-k phi} dV."""

    nodes: np.ndarray
    weights: np.ndarray
    level: int


def _truncation_radius(weight: Weight, base: BaseMeasure, k: int, real: bool, n: int = 1) -> float:
    """Radius beyond which r^(2k) e^{-k phi} rho (times r for planar) is negligible.

    In dimension n the probe points are (r, 0, ..., 0) and the Jacobian r^(2n-1).
    """
    s = np.linspace(-30.0, 2 * math.log(1e6), 20001)
    r = np.exp(0.5 * s)
    z = np.zeros((len(r), n), dtype=complex)
    z[:, 0] = r
    jac = 0.0 if real else (2 * n - 1) * 0.5 * s
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        logf = k * s - k * weight(z) + base.log_density(z) + jac
    logf = np.where(np.isnan(logf), -np.inf, logf)
    peak = int(np.argmax(logf))
    if not np.isfinite(logf[peak]):
        raise ConvergenceError("weighted measure vanishes on every probe radius")
    tail = np.flatnonzero(logf[peak:] < logf[peak] - TRUNCATION_DEPTH)
    if len(tail) == 0:
        raise ConvergenceError("weighted measure does not decay; cannot truncate the carrier")
    return float(r[peak + tail[0]])


def _legendre(a: float, b: float, m: int):
    x, w = roots_legendre(m)
    return 0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w


def _rule_1d(base: BaseMeasure, weight: Weight, k: int, level: int, R: Optional[float] = None):
    """Nodes and raw weights in one complex variable (dV density included, e^{-k phi} not)."""
    kind = base.kind
    m = 2 ** level
    # every supported weight and density depends on the moduli only, so the
    # trapezoid rule with 2k + 2 angles is already exact and only radii refine
    if kind == "circle":
        M = max(2 * k + 2, 4)
        th = 2 * math.pi * np.arange(M) / M
        return base.radius * np.exp(1j * th), np.full(M, 1.0 / M)
    if kind == "arcsine":
        M = max(k + 2, 4) * m
        t = np.cos((2 * np.arange(1, M + 1) - 1) * math.pi / (2 * M))
        x = base.low + (base.high - base.low) * 0.5 * (t + 1)
        return x + 0j, np.full(M, 1.0 / M)
    if base.real_line:
        if kind == "interval":
            a, b = base.low, base.high
        else:
            R = _truncation_radius(weight, base, k, real=True) if R is None else R
            a, b = -R, R
        x, w = _legendre(a, b, max(k + 2, 8) * m)
        z = x + 0j
        return z, w * np.exp(base.log_density(z))
    # planar, radial: Gauss-Legendre in r times the trapezoid rule in angle
    if kind == "ball":
        R = base.radius
    elif R is None:
        R = _truncation_radius(weight, base, k, real=False)
    r, wr = _legendre(0.0, R, max(k + 2, 16) * m)
    M = max(2 * k + 2, 8)
    th = 2 * math.pi * np.arange(M) / M
    z = (r[:, None] * np.exp(1j * th[None, :])).ravel()
    w = (wr[:, None] * r[:, None] * np.full((1, M), 2 * math.pi / M)).ravel()
    return z, w * np.exp(base.log_density(z))


def build_quadrature(base: BaseMeasure, weight: Weight, k: int, level: int) -> Quadrature:
    """Quadrature for e^{-k phi} dV at refinement ``level`` (node count doubles per level)."""
    n = base.n
    if base.kind == "box":
        x, w = _legendre(base.low, base.high, max(k + 2, 8) * 2**level)
        d = base.real_dim
        grids = np.meshgrid(*([x] * d), indexing="ij")
        wgrid = np.prod(np.meshgrid(*([w] * d), indexing="ij"), axis=0).ravel()
        coords = np.stack([g.ravel() for g in grids], axis=1)
        nodes = coords[:, :n] + 1j * coords[:, n:] if not base.real_line else coords + 0j
        raw = wgrid * np.exp(base.log_density(nodes))
    elif n == 1:
        z, raw = _rule_1d(base, weight, k, level)
        nodes = z[:, None]
    else:
        if base.kind not in ("gaussian", "lebesgue"):
            raise ValueError(f"no quadrature for a {base.kind} measure in dimension {n}")
        # tensor product of one-variable polar rules; dV density applied jointly
        R = _truncation_radius(weight, base, k, real=False, n=n)
        z1, w1 = _rule_1d(BaseMeasure.lebesgue(n=1), weight, k, level, R=R)
        idx = np.stack(np.meshgrid(*([np.arange(len(z1))] * n), indexing="ij"), axis=-1).reshape(-1, n)
        nodes = z1[idx]
        raw = np.prod(w1[idx], axis=1) * np.exp(base.log_density(nodes))
    with np.errstate(over="ignore", invalid="ignore"):
        phi = weight(nodes)
        wts = raw * np.exp(-k * phi)
    wts = np.where(np.isfinite(wts), wts, 0.0)
    return Quadrature(nodes, wts, level)


# ---------------------------------------------------------------------------
# working basis


@dataclass(frozen=True)
class _Recurrence:
    """Orthonormal polynomials of a discrete measure, evaluable anywhere."""

    basis: MultiIndexBasis
    p0: float
    coef: np.ndarray
    h: np.ndarray
    parent: np.ndarray
    axis: np.ndarray

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=complex).reshape(-1, self.basis.n)
        size = self.basis.size
        out = np.zeros((len(x), size), dtype=complex)
        out[:, 0] = self.p0
        for m in range(1, size):
            a, p = self.axis[m], self.parent[m]
            out[:, m] = (x[:, a] * out[:, p] - out[:, :m] @ self.coef[:m, m]) / self.h[m]
        return out


def _recurrence(basis: MultiIndexBasis, quad: Quadrature) -> _Recurrence:
    keep = quad.weights > 0
    if np.count_nonzero(keep) < basis.size:
        raise ConvergenceError("quadrature has fewer support nodes than basis functions")
    fac = _arnoldi(basis, quad.nodes[keep], start=np.sqrt(quad.weights[keep]))
    if fac.singular:
        raise ConditionError("Arnoldi recurrence broke down on the quadrature nodes")
    return _Recurrence(basis, math.exp(-fac.log_r[0]), fac.coef, fac.h, fac.parent, fac.axis)


@dataclass(frozen=True)
class GramFactorization:
    """Gram matrix of the working basis on the final quadrature and its Cholesky factor."""

    basis: MultiIndexBasis
    weight: Weight
    base: BaseMeasure
    k: int
    quadrature: Quadrature
    gram: np.ndarray
    chol: np.ndarray
    condition: float
    working: str
    recombination: Optional[np.ndarray] = field(default=None, repr=False)
    _rec: Optional[_Recurrence] = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.basis.size

    def working_values(self, z) -> np.ndarray:
        """Working basis evaluated at points, shape (M, N)."""
        z = np.asarray(z, dtype=complex).reshape(-1, self.basis.n)
        u = self._rec(z) if self.working == "orthogonal" else self.basis.evaluate(z)
        if self.recombination is not None:
            u = u @ self.recombination.T
        return u

    def orthonormal_values(self, z) -> np.ndarray:
        """Orthonormal polynomials p = L^{-1} u at the points, shape (M, N)."""
        u = self.working_values(z)
        return scipy.linalg.solve_triangular(self.chol, u.T, lower=True, check_finite=False).T

    def features(self, z) -> np.ndarray:
        """p_i(z) e^{-k phi(z)/2}: rows whose squared norm is the weighted kernel diagonal."""
        z = np.asarray(z, dtype=complex).reshape(-1, self.basis.n)
        with np.errstate(over="ignore"):
            damp = np.exp(-0.5 * self.k * self.weight(z))
        return self.orthonormal_values(z) * damp[:, None]


def _gram(u: np.ndarray, w: np.ndarray) -> np.ndarray:
    G = (u.T * w) @ np.conj(u)
    return 0.5 * (G + G.conj().T)


def gram_factorization(
    basis: MultiIndexBasis,
    weight: Weight,
    base: BaseMeasure,
    k: Optional[int] = None,
    working: str = "orthogonal",
    recombination: Optional[np.ndarray] = None,
) -> GramFactorization:
    """Factor the weighted Gram matrix, doubling the quadrature until it has converged.

    Convergence means the working basis built on the coarse rule is
    orthonormal to 1e-12 on the doubled rule (for monomials: normalized Gram
    entries stop changing to 1e-12).  Refuses condition numbers above 1e14.
    """
    if working not in ("orthogonal", "monomial"):
        raise ValueError(f"unknown working basis {working!r}")
    k = basis.k if k is None else k
    T = None if recombination is None else np.asarray(recombination, dtype=complex)
    coarse = build_quadrature(base, weight, k, 0)
    rec = None
    for level in range(1, MAX_DOUBLINGS + 1):
        fine = build_quadrature(base, weight, k, level)
        if working == "orthogonal":
            rec = _recurrence(basis, coarse)
            uf = rec(fine.nodes)
            Gf = _gram(uf, fine.weights)
            change = np.max(np.abs(Gf - np.eye(basis.size)))
        else:
            Gc = _gram(basis.evaluate(coarse.nodes), coarse.weights)
            Gf = _gram(basis.evaluate(fine.nodes), fine.weights)
            d = np.sqrt(np.abs(np.diag(Gf)))
            change = np.max(np.abs(Gf - Gc) / np.outer(d, d))
        if change <= ORTHO_TOL:
            break
        coarse = fine
    else:
        raise ConvergenceError(f"quadrature did not converge after {MAX_DOUBLINGS} doublings (change {change:.2e})")
    if T is not None:
        Gf = T @ Gf @ T.conj().T
        Gf = 0.5 * (Gf + Gf.conj().T)
    cond = float(np.linalg.cond(Gf))
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise ConditionError(f"Gram matrix condition {cond:.3e} exceeds {MAX_CONDITION:.0e}")
    try:
        L = np.linalg.cholesky(Gf)
    except np.linalg.LinAlgError as exc:
        raise ConditionError(f"Gram matrix is not positive definite: {exc}") from exc
    return GramFactorization(basis, weight, base, k, fine, Gf, L, cond, working, T, rec)


def factorization_residual(gram: GramFactorization) -> float:
    G, L = gram.gram, gram.chol
    return float(np.linalg.norm(G - L @ L.conj().T) / np.linalg.norm(G))


# ---------------------------------------------------------------------------
# Christoffel function


@dataclass(frozen=True)
class ChristoffelValue:
    weighted: np.ndarray  # K_k(z, z) e^{-k phi(z)}
    psi: np.ndarray  # k^{-1} log K_k(z, z)
    kernel: np.ndarray  # K_k(z, z)
    variational: np.ndarray  # |K_z(z)|^2 / ||K_z||^2 for the reproducing element


def christoffel(gram: GramFactorization, z) -> ChristoffelValue:
    """Christoffel function K_k(z, z) = sum |p_i(z)|^2 and its variational value.

    The variational value evaluates the reproducing element K_k(., z) as an
    explicit polynomial in the working basis and divides |K_z(z)|^2 by its
    norm computed from the Gram matrix.
    """
    z = np.asarray(z, dtype=complex).reshape(-1, gram.basis.n)
    u = gram.working_values(z)
    p = scipy.linalg.solve_triangular(gram.chol, u.T, lower=True, check_finite=False)
    K = np.sum(np.abs(p) ** 2, axis=0)
    # K_z = sum_i conj(p_i(z)) p_i(.) has working coefficients c = L^{-T} conj(p(z))
    c = scipy.linalg.solve_triangular(gram.chol.T, np.conj(p), lower=False, check_finite=False)
    value = np.sum(c * u.T, axis=0)
    norm2 = np.real(np.sum(c * (gram.gram.T @ np.conj(c)), axis=0))
    variational = (np.abs(value) / np.sqrt(norm2)) ** 2
    with np.errstate(over="ignore"):
        damp = np.exp(-gram.k * gram.weight(z))
    with np.errstate(divide="ignore"):
        psi = np.log(K) / gram.k if gram.k > 0 else np.log(K)
    return ChristoffelValue(K * damp, psi, K, variational)


def polynomial_ratio(gram: GramFactorization, coeffs: np.ndarray, z) -> np.ndarray:
    """|p(z)|^2 e^{-k phi(z)} / ||p||^2 for working-basis coefficient vectors (one per row)."""
    z = np.asarray(z, dtype=complex).reshape(-1, gram.basis.n)
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=complex))
    u = gram.working_values(z)
    vals = coeffs @ u.T
    norm2 = np.real(np.einsum("ai,ij,aj->a", coeffs, gram.gram, np.conj(coeffs)))
    damp = np.exp(-gram.k * gram.weight(z))
    return np.abs(vals) ** 2 * damp[None, :] / norm2[:, None]


def bergman_density(gram: GramFactorization, z) -> np.ndarray:
    """rho_k = N^{-1} K_k(z, z) e^{-k phi(z)}, the one-point density relative to dV."""
    return christoffel(gram, z).weighted / gram.size


def trace_integral(gram: GramFactorization) -> float:
    """Integral of K_k(z, z) e^{-k phi} dV on the quadrature; equals N for a rank-N projection."""
    q = gram.quadrature
    keep = q.weights > 0
    p = gram.orthonormal_values(q.nodes[keep])
    return float(np.sum(np.sum(np.abs(p) ** 2, axis=1) * q.weights[keep]))


# ---------------------------------------------------------------------------
# projection DPP sampling


class _Proposal:
    """Uniform proposal on the carrier (or on a truncation domain) with intensity bound."""

    def __init__(self, gram: GramFactorization, base: BaseMeasure, grid_size: int = 4096):
        self.gram, self.base = gram, base
        n = gram.basis.n
        if n != 1:
            raise ValueError("DPP sampling is implemented for n = 1")
        self.own = base.is_compact and base.kind in ("circle", "interval", "arcsine", "ball")
        if self.own:
            grid = self._grid_compact(grid_size)
        else:
            real = base.real_line
            self.R = _truncation_radius(gram.weight, base, gram.k, real=real)
            grid = self._grid_box(grid_size, real)
        # intensity of the first point relative to the proposal law
        self.M0 = ENVELOPE_SAFETY * float(np.max(self.intensity(grid)))

    def _grid_compact(self, m):
        b = self.base
        if b.kind == "circle":
            return b.radius * np.exp(2j * math.pi * np.arange(m) / m)
        if b.kind in ("interval", "arcsine"):
            return np.linspace(b.low, b.high, m) + 0j
        r = np.linspace(0, b.radius, 256)
        th = 2 * math.pi * np.arange(64) / 64
        return (r[:, None] * np.exp(1j * th[None, :])).ravel()

    def _grid_box(self, m, real):
        if real:
            return np.linspace(-self.R, self.R, m) + 0j
        r = np.linspace(0, self.R, 512)
        th = 2 * math.pi * np.arange(64) / 64
        return (r[:, None] * np.exp(1j * th[None, :])).ravel()

    def rel_density(self, z):
        """Density of dV relative to the proposal law."""
        if self.own:
            return np.ones(len(z))
        vol = 2 * self.R if self.base.real_line else math.pi * self.R**2
        return np.exp(self.base.log_density(z)) * vol

    def intensity(self, z):
        f = self.gram.features(z)
        return np.sum(np.abs(f) ** 2, axis=1) * self.rel_density(z) / self.gram.size

    def draw(self, rng, size):
        if self.own:
            return self.base.sample(rng, size)[:, 0]
        if self.base.real_line:
            return rng.uniform(-self.R, self.R, size) + 0j
        r = self.R * np.sqrt(rng.uniform(size=size))
        return r * np.exp(2j * math.pi * rng.uniform(size=size))


def _dpp_once(prop: _Proposal, rng: np.random.Generator, batch: int = 64):
    gram = prop.gram
    N = gram.size
    E = np.zeros((N, 0), dtype=complex)  # orthonormal basis of chosen feature vectors
    pts = []
    proposals = 0
    for i in range(N):
        bound = prop.M0 * N / (N - i)
        while True:
            x = prop.draw(rng, batch)
            u = rng.uniform(size=batch)
            proposals += batch
            f = gram.features(x)
            if E.shape[1]:
                f = f - (f @ np.conj(E)) @ E.T
            dens = np.sum(np.abs(f) ** 2, axis=1) * prop.rel_density(x) / (N - i)
            hit = np.flatnonzero(u * bound < dens)
            if len(hit):
                j = hit[0]
                break
            if proposals > 1e4 and (len(pts) + 1) / proposals < MIN_EFFICIENCY:
                raise ProposalFailureError(f"rejection efficiency below {MIN_EFFICIENCY}")
        pts.append(x[j])
        v = f[j]
        v = v / np.linalg.norm(v)
        # features are rows; keep E's columns as conj-orthonormal directions of rows
        E = np.concatenate([E, np.conj(v)[:, None]], axis=1)
    eff = N / proposals
    if eff < MIN_EFFICIENCY:
        raise ProposalFailureError(f"rejection efficiency {eff:.2e} below {MIN_EFFICIENCY}")
    return np.array(pts), eff


def dpp_sample(gram: GramFactorization, base: Optional[BaseMeasure] = None, seed: int = 0, samples: int = 1):
    """Exact samples of the projection DPP with kernel K_k(x, y) e^{-k(phi(x)+phi(y))/2}.

    Points are drawn one at a time from the conditional intensity
    |P_perp f(x)|^2 / (N - i) by rejection from a uniform proposal.
    Returns a list of Configurations.
    """
    base = gram.base if base is None else base
    prop = _Proposal(gram, base)
    seeds = np.random.SeedSequence(seed).spawn(samples)
    mode = "real-line" if base.real_line else "complex"
    out = []
    for sq in seeds:
        rng = np.random.default_rng(sq)
        pts, _ = _dpp_once(prop, rng)
        if base.real_line:
            pts = pts.real + 0j
        out.append(Configuration(pts[:, None], mode).canonical())
    return out


def gue_tridiagonal_sample(N: int, k: float, rng: np.random.Generator) -> np.ndarray:
    """Eigenvalues with density |Delta|^2 e^{-k sum x^2/2} from the tridiagonal Hermite model.

    Dumitriu-Edelman at Dyson index 2: diagonal N(0, 1), off-diagonal
    chi_{2j}/sqrt(2), then rescaled by 1/sqrt(k).
    """
    diag = rng.normal(size=N)
    off = np.sqrt(rng.chisquare(2 * np.arange(N - 1, 0, -1))) / math.sqrt(2)
    ev = scipy.linalg.eigvalsh_tridiagonal(diag, off)
    return ev / math.sqrt(k)


# ---------------------------------------------------------------------------
# Bernstein-Markov diagnostic


@dataclass(frozen=True)
class BMRow:
    k: int
    sup_rho: float
    exponent: float


def bernstein_markov_diag(weight: Weight, base: BaseMeasure, grid, k_list, n: int = 1):
    """sup over the grid of rho_k for each k, with log(sup rho_k)/k and a fitted slope.

    Returns (rows, fitted exponent); the fit is the least-squares slope of
    log sup rho_k against k.  Sub-exponential growth means the slope stays
    below 0.05.
    """
    grid = np.asarray(grid, dtype=complex).reshape(-1, n)
    rows = []
    for k in k_list:
        gram = gram_factorization(MultiIndexBasis(n, int(k)), weight, base)
        sup = float(np.max(bergman_density(gram, grid)))
        rows.append(BMRow(int(k), sup, math.log(sup) / k if k > 0 else math.nan))
    ks = np.array([r.k for r in rows], dtype=float)
    logs = np.log([r.sup_rho for r in rows])
    slope = float(np.polyfit(ks, logs, 1)[0]) if len(ks) > 1 else math.nan
    return rows, slope


def write_profile_csv(path, points, values):
    pts = np.asarray(points, dtype=complex).ravel()
    return write_csv(path, ["re", "im", "value"], zip(pts.real.tolist(), pts.imag.tolist(), np.asarray(values).tolist()))
