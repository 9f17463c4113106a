"""Convex bodies, lattice clouds, tropical energies and the real Monge-Ampere problem.

A convex body P is given by its vertices.  Its support function is
phi_P(x) = max_v x.v.  The tropical energy of N points against a lattice
cloud is an assignment value, and the tropical Gibbs density is

    exp(beta * max_sigma sum_i x_i . p_sigma(i) - (1 + beta) * sum_i phi(x_i)).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy.integrate import simpson
from scipy.linalg import solve_banded
from scipy.optimize import linear_sum_assignment
from scipy.spatial import ConvexHull, Delaunay
from scipy.special import logsumexp, ndtr

from .errors import (
    AdmissibilityError,
    ConvergenceError,
    DegreeTooLargeError,
    GeometryError,
    GridError,
    SizeMismatchError,
)
from .io import write_csv

MEMBERSHIP_TOL = 1e-12
MAX_CLOUD = 1_000_000
TIE_TOL = 1e-12
DIAG_RADII = (5.0, 10.0, 20.0)
STAGNATION_TOL = 1e-9


# ---------------------------------------------------------------------------
# convex bodies


@dataclass(frozen=True)
class ConvexBody:
    """Convex hull of finitely many vertices in R^n."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or len(v) < 2 or not np.all(np.isfinite(v)):
            raise GeometryError("vertices must be a finite (V, n) array with V >= 2")
        n = v.shape[1]
        if n == 1:
            v = np.array([[v.min()], [v.max()]])
            if v[1, 0] - v[0, 0] <= 0:
                raise GeometryError("interval has zero length")
        else:
            try:
                hull = ConvexHull(v)
            except Exception as exc:  # qhull raises for flat input
                raise GeometryError(f"vertices do not span R^{n}: {exc}") from exc
            v = v[np.sort(hull.vertices)]
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @classmethod
    def interval(cls, a: float, b: float) -> "ConvexBody":
        return cls(np.array([[a], [b]], dtype=float))

    @classmethod
    def cube(cls, n: int, half: float = 1.0) -> "ConvexBody":
        return cls(np.array(list(itertools.product([-half, half], repeat=n)), dtype=float))

    @classmethod
    def simplex(cls, n: int) -> "ConvexBody":
        return cls(np.vstack([np.zeros(n), np.eye(n)]))

    @classmethod
    def from_json(cls, source) -> "ConvexBody":
        """Load {"n": int, "vertices": [[...], ...]} from a path, a JSON string or a dict."""
        if isinstance(source, dict):
            doc = source
        elif isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
            doc = json.loads(Path(source).read_text())
        else:
            doc = json.loads(source)
        v = np.asarray(doc["vertices"], dtype=float)
        if v.ndim != 2 or v.shape[1] != int(doc["n"]):
            raise GeometryError("vertex list does not match the stated dimension n")
        return cls(v)

    def to_json(self) -> dict:
        return {"n": self.n, "vertices": self.vertices.tolist()}

    def scaled(self, lam: float) -> "ConvexBody":
        return ConvexBody(lam * self.vertices)

    @property
    def n(self) -> int:
        return self.vertices.shape[1]

    @cached_property
    def _facets(self):
        """(A, c) with P = {x : A x <= c}; rows of A are unit outer normals."""
        if self.n == 1:
            a, b = self.vertices[:, 0]
            return np.array([[-1.0], [1.0]]), np.array([-a, b])
        eq = ConvexHull(self.vertices).equations
        return eq[:, :-1], -eq[:, -1]

    @cached_property
    def volume(self) -> float:
        if self.n == 1:
            return float(np.ptp(self.vertices))
        return float(ConvexHull(self.vertices).volume)

    @cached_property
    def barycenter(self) -> np.ndarray:
        if self.n == 1:
            return np.array([self.vertices.mean()])
        tri = Delaunay(self.vertices)
        simp = self.vertices[tri.simplices]
        vols = np.abs(np.linalg.det(simp[:, 1:] - simp[:, :1])) / math.factorial(self.n)
        return (vols[:, None] * simp.mean(axis=1)).sum(axis=0) / vols.sum()

    @cached_property
    def origin_interior(self) -> bool:
        A, c = self._facets
        return bool(np.all(c > MEMBERSHIP_TOL))

    def support(self, x) -> np.ndarray:
        """phi_P(x) = max over vertices of x . v for points x of shape (..., n)."""
        x = np.asarray(x, dtype=float)
        if self.n == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        return np.max(x @ self.vertices.T, axis=-1)

    def support_grad(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.vertices[np.argmax(x @ self.vertices.T, axis=-1)]

    def contains(self, x, tol: float = MEMBERSHIP_TOL) -> np.ndarray:
        """x.y <= phi_P(y) for every facet normal y."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        A, c = self._facets
        return np.all(x @ A.T <= c + tol, axis=1)

    def require_origin(self):
        if not self.origin_interior:
            raise GeometryError("the origin is not an interior point of P")


def r_invariant(P: ConvexBody) -> float:
    """R_P = |q| / |q - b_P| where q is the boundary point on the ray from b_P through 0."""
    P.require_origin()
    b = P.barycenter
    nb = float(np.linalg.norm(b))
    if nb < 1e-14:
        return 1.0
    d = -b / nb
    lo, hi = 0.0, 1.0
    while P.contains(hi * d, tol=0.0)[0]:
        hi *= 2.0
    # bisection to machine resolution on the exact membership predicate
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if P.contains(mid * d, tol=0.0)[0]:
            lo = mid
        else:
            hi = mid
    t = lo
    return t / (t + nb)


@dataclass(frozen=True)
class LatticeCloud:
    body: ConvexBody
    k: int
    points: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.points)


def lattice_cloud(P: ConvexBody, k: int) -> LatticeCloud:
    """P intersected with (Z/k)^n by a bounding-box scan."""
    if k < 1:
        raise ValueError("k must be at least 1")
    lo = np.floor(P.vertices.min(axis=0) * k - 1e-9).astype(int)
    hi = np.ceil(P.vertices.max(axis=0) * k + 1e-9).astype(int)
    box = int(np.prod(hi - lo + 1))
    if box > 50 * MAX_CLOUD:
        raise DegreeTooLargeError(f"bounding box of {box} lattice points is too large")
    axes = [np.arange(a, b + 1) for a, b in zip(lo, hi)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, P.n) / k
    pts = grid[P.contains(grid)]
    if len(pts) > MAX_CLOUD:
        raise DegreeTooLargeError(f"lattice cloud has {len(pts)} > {MAX_CLOUD} points")
    pts.setflags(write=False)
    return LatticeCloud(P, k, pts)


def support_and_lattice(P: ConvexBody, k: int):
    return P.support, lattice_cloud(P, k)


# ---------------------------------------------------------------------------
# assignment


def _scores(x: np.ndarray, p: np.ndarray) -> np.ndarray:
    return x @ p.T


def _as_2d(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return a[:, None] if a.ndim == 1 else a


def _lsa_value(S: np.ndarray) -> float:
    r, c = linear_sum_assignment(S, maximize=True)
    return float(S[r, c].sum())


def _lexicographic(S: np.ndarray, perm: np.ndarray, opt: float) -> np.ndarray:
    """Smallest permutation (as a tuple) among the optimal ones, row by row."""
    N = len(S)
    perm = perm.copy()
    tol = TIE_TOL * max(1.0, abs(opt))
    rows = np.arange(N)
    for i in range(N - 1):
        free_rows = rows[i + 1:]
        used = set(perm[:i].tolist())
        cols = np.array([j for j in range(N) if j not in used])
        # value already committed by rows < i
        fixed = float(S[rows[:i], perm[:i]].sum()) if i else 0.0
        choice = perm[i]
        for j in cols:
            if j >= choice:
                break
            rest = cols[cols != j]
            val = fixed + S[i, j] + (_lsa_value(S[np.ix_(free_rows, rest)]) if len(rest) else 0.0)
            if val >= opt - tol:
                choice = j
                break
        if choice != perm[i]:
            rest = cols[cols != choice]
            r, c = linear_sum_assignment(S[np.ix_(free_rows, rest)], maximize=True)
            perm[i] = choice
            perm[i + 1:] = rest[c[np.argsort(r)]]
    return perm


def assignment(x, p, lexicographic: bool = True):
    """Maximize sum_i x_i . p_sigma(i); returns (value, sigma)."""
    x, p = _as_2d(x), _as_2d(p)
    if len(x) != len(p):
        raise SizeMismatchError(f"{len(x)} points against a cloud of {len(p)}")
    N = len(x)
    if x.shape[1] == 1 and len(np.unique(p[:, 0])) == N:
        # monotone matching; within tied x the smallest cloud indices go first
        ix = np.argsort(x[:, 0], kind="stable")
        ip = np.argsort(p[:, 0], kind="stable")
        perm = np.empty(N, dtype=int)
        perm[ix] = ip
        if lexicographic:
            xs = x[ix, 0]
            start = 0
            for end in range(1, N + 1):
                if end == N or xs[end] != xs[start]:
                    grp = ix[start:end]
                    perm[np.sort(grp)] = np.sort(perm[grp])
                    start = end
    else:
        S = _scores(x, p)
        r, c = linear_sum_assignment(S, maximize=True)
        perm = c[np.argsort(r)]
        if lexicographic:
            perm = _lexicographic(S, perm, float(S[np.arange(N), perm].sum()))
    value = float(np.sum(np.einsum("ij,ij->i", x, p[perm])))
    return value, perm


def assignment_bruteforce(x, p):
    """Exhaustive maximum over all N! permutations; first maximizer in lexicographic order."""
    x, p = _as_2d(x), _as_2d(p)
    N = len(x)
    best, arg = -math.inf, None
    for perm in itertools.permutations(range(N)):
        perm = np.array(perm)
        v = float(np.sum(np.einsum("ij,ij->i", x, p[perm])))
        if v > best:
            best, arg = v, perm
    return best, arg


def e_trop(x, cloud, lexicographic: bool = True):
    """(1/N) max_sigma sum_i x_i . p_sigma(i) and the optimal assignment."""
    p = cloud.points if isinstance(cloud, LatticeCloud) else cloud
    value, perm = assignment(x, p, lexicographic)
    return value / len(perm), perm


# ---------------------------------------------------------------------------
# tropical Gibbs measure


def tropical_log_density(x: np.ndarray, cloud: np.ndarray, beta: float, phi: Callable) -> float:
    x = _as_2d(x)
    val = -(1 + beta) * float(np.sum(phi(x)))
    if beta != 0:
        val += beta * assignment(x, cloud, lexicographic=False)[0]
    return val


@dataclass(frozen=True)
class TruncationDiagnostic:
    """Importance-sampling estimates of the partition mass on boxes |x_i|_inf <= R."""

    radii: tuple
    log_mass: np.ndarray
    stderr_log: np.ndarray
    ratios: np.ndarray
    samples: int

    @property
    def stabilizes(self) -> bool:
        """The ratio sequence settles: non-increasing and the last step below 1.05."""
        return bool(self.ratios[-1] < 1.05 and np.all(np.diff(self.ratios) <= 0))

    @property
    def diverges(self) -> bool:
        return bool(np.all(self.ratios > 1.2))


@dataclass
class TropicalGibbsResult:
    beta: float
    r_invariant: float
    samples: Optional[np.ndarray]  # (chains, kept, N, n)
    acceptance: Optional[np.ndarray]
    steps: Optional[np.ndarray]
    diagnostic: Optional[TruncationDiagnostic]

    @property
    def refused(self) -> bool:
        return self.samples is None

    def pooled(self) -> np.ndarray:
        return self.samples.reshape(-1, self.samples.shape[-1])


def _log_proposal(x: np.ndarray, Rmax: float, s0: float, s1: float, weights) -> np.ndarray:
    """Log density of the defensive mixture for rows x of shape (M, N, n)."""
    M, N, n = x.shape
    w_box, w_prod, w_coll = weights
    inside = np.all(np.abs(x) <= Rmax, axis=(1, 2))
    box = np.where(inside, -N * n * math.log(2 * Rmax), -np.inf)
    prod = np.sum(-0.5 * (x / s0) ** 2, axis=(1, 2)) - N * n * math.log(s0 * math.sqrt(2 * math.pi))
    # collective: shared centre t ~ U[-R, R]^n, x_i = t + s1 * xi_i
    xb = x.mean(axis=1)
    S = np.sum((x - xb[:, None, :]) ** 2, axis=(1, 2))
    a = math.sqrt(N) / s1
    span = np.log(np.maximum(ndtr((Rmax - xb) * a) - ndtr((-Rmax - xb) * a), 1e-300))
    coll = (
        -0.5 * S / s1**2
        - N * n * math.log(s1 * math.sqrt(2 * math.pi))
        + n * 0.5 * math.log(2 * math.pi * s1**2 / N)
        + np.sum(span, axis=1)
        - n * math.log(2 * Rmax)
    )
    return logsumexp(np.stack([box + math.log(w_box), prod + math.log(w_prod), coll + math.log(w_coll)]), axis=0)


def truncation_diagnostic(P: ConvexBody, k: int, beta: float, phi: Optional[Callable] = None,
                          radii=DIAG_RADII, samples: int = 20000, seed: int = 0) -> TruncationDiagnostic:
    """Masses Z_R of the unnormalized tropical density on boxes of half-width R.

    All radii share the same proposal draws, so the ratios Z_{R'}/Z_R have
    correlated errors.  The proposal mixes a uniform box, a product Gaussian
    and a collective component that moves all points together.
    """
    cloud = lattice_cloud(P, k).points
    phi = P.support if phi is None else phi
    N, n = cloud.shape
    radii = tuple(float(r) for r in radii)
    Rmax = max(radii)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    weights = (0.1, 0.45, 0.45)
    s0, s1 = 2.0, 1.0
    comp = rng.choice(3, size=samples, p=weights)
    x = np.empty((samples, N, n))
    m = comp == 0
    x[m] = rng.uniform(-Rmax, Rmax, size=(m.sum(), N, n))
    m = comp == 1
    x[m] = s0 * rng.normal(size=(m.sum(), N, n))
    m = comp == 2
    t = rng.uniform(-Rmax, Rmax, size=(m.sum(), 1, n))
    x[m] = t + s1 * rng.normal(size=(m.sum(), N, n))
    logq = _log_proposal(x, Rmax, s0, s1, weights)
    logf = np.array([tropical_log_density(xi, cloud, beta, phi) for xi in x])
    logw = logf - logq
    log_mass, se = [], []
    for R in radii:
        inside = np.all(np.abs(x) <= R, axis=(1, 2))
        lw = np.where(inside, logw, -np.inf)
        lm = logsumexp(lw) - math.log(samples)
        w = np.exp(lw - lm)
        log_mass.append(lm)
        se.append(float(np.std(w) / math.sqrt(samples)))
    log_mass = np.array(log_mass)
    return TruncationDiagnostic(radii, log_mass, np.array(se), np.exp(np.diff(log_mass)), samples)


def _tropical_chain(cloud, beta, phi, sweeps, burn, thin, rng, step0):
    N, n = cloud.shape
    x = rng.normal(size=(N, n))
    logp = tropical_log_density(x, cloud, beta, phi)
    log_step = math.log(step0)
    kept, acc, total = [], 0, 0
    for sweep in range(sweeps):
        a_sweep = 0
        for i in range(N):
            y = x.copy()
            y[i] += math.exp(log_step) * rng.normal(size=n)
            lp = tropical_log_density(y, cloud, beta, phi)
            u = rng.uniform()
            if math.log(u) < lp - logp:
                x, logp = y, lp
                a_sweep += 1
        rate = a_sweep / N
        if sweep < burn:
            log_step += (rate - 0.3) / (1 + sweep) ** 0.6
        else:
            acc += a_sweep
            total += N
            if (sweep - burn) % thin == 0:
                kept.append(x.copy())
    return np.array(kept), acc / max(total, 1), math.exp(log_step)


def tropical_gibbs(P: ConvexBody, k: int, beta: float, phi: Optional[Callable] = None, sweeps: int = 2000,
                   chains: int = 1, seed: int = 0, diagnostic_samples: int = 20000) -> TropicalGibbsResult:
    """Component-wise random-walk Metropolis for the tropical Gibbs measure.

    For beta <= -R_P the partition function is infinite; no chain is run and
    the truncation diagnostic is returned instead.
    """
    P.require_origin()
    R = r_invariant(P)
    if beta <= -R:
        diag = truncation_diagnostic(P, k, beta, phi, samples=diagnostic_samples, seed=seed)
        return TropicalGibbsResult(beta, R, None, None, None, diag)
    cloud = lattice_cloud(P, k).points
    if len(cloud) > 300:
        raise DegreeTooLargeError(f"N_k = {len(cloud)} exceeds 300")
    phi = P.support if phi is None else phi
    burn = sweeps // 5
    thin = max(1, (sweeps - burn) * len(cloud) // 200_000)
    out, accs, steps = [], [], []
    for sq in np.random.SeedSequence(seed).spawn(chains):
        kept, a, s = _tropical_chain(cloud, beta, phi, sweeps, burn, thin, np.random.default_rng(sq), 1.0)
        out.append(kept)
        accs.append(a)
        steps.append(s)
    return TropicalGibbsResult(beta, R, np.array(out), np.array(accs), np.array(steps), None)


# ---------------------------------------------------------------------------
# real Monge-Ampere in one dimension


@dataclass(frozen=True)
class RealMASolution:
    x: np.ndarray
    u: np.ndarray
    du: np.ndarray
    beta: float
    constant: float
    residual: float
    iterations: int

    def rows(self):
        return zip(self.x.tolist(), self.u.tolist(), self.du.tolist())

    def to_csv(self, path):
        return write_csv(path, ["x", "u", "du"], self.rows())


def default_ma_grid(a: float, b: float, h: float = 1e-3, depth: float = 12.0) -> np.ndarray:
    """Uniform grid with a node at 0 reaching where e^{-phi_P} < 10^{-depth}."""
    L = depth * math.log(10)
    lo = -math.ceil(L / abs(a) / h)
    hi = math.ceil(L / b / h)
    return h * np.arange(lo, hi + 1, dtype=float)


def _check_ma_grid(x: np.ndarray) -> float:
    if x.ndim != 1 or len(x) < 5:
        raise GridError("need a 1d grid with at least 5 nodes")
    h = np.diff(x)
    if np.any(h <= 0) or np.max(np.abs(h - h[0])) > 1e-9 * h[0]:
        raise GridError("grid must be uniform and increasing")
    return float(h[0])


def _fv_weights(M: int, h: float) -> np.ndarray:
    w = np.full(M, h)
    w[0] = w[-1] = 0.5 * h
    return w


def _node_slopes(u: np.ndarray, h: float) -> np.ndarray:
    f = np.diff(u) / h
    du = np.empty_like(u)
    du[1:-1] = 0.5 * (f[:-1] + f[1:])
    du[0], du[-1] = f[0], f[-1]
    return du


def _solve_beta0(x, h, a, b, phi):
    """u'' = C e^{-phi} with exact cell integrals of e^{-phi} for piecewise-linear phi."""
    g = np.exp(-phi)
    d = np.diff(phi)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(np.abs(d) > 1e-8, -np.expm1(-d) / d, 1 - d / 2 + d * d / 6)
    cells = h * g[:-1] * ratio
    # tails beyond the grid, where phi_P is linear with slopes a and b
    left = g[0] / abs(a)
    right = g[-1] / b
    mass = left + cells.sum() + right
    C = (b - a) / mass
    du = a + C * (left + np.concatenate([[0.0], np.cumsum(cells)]))
    # cubic Hermite rule for int u' using u'' = C g
    upp = C * g
    inc = 0.5 * h * (du[:-1] + du[1:]) + h * h * (upp[:-1] - upp[1:]) / 12
    u = np.concatenate([[0.0], np.cumsum(inc)])
    # gauge: int (u - phi) e^{-phi} dx = 0, Simpson on each side of the node at 0
    f = (u - phi) * g
    z = int(np.argmin(np.abs(x)))
    num = simpson(f[: z + 1], x=x[: z + 1]) + simpson(f[z:], x=x[z:])
    den = simpson(g[: z + 1], x=x[: z + 1]) + simpson(g[z:], x=x[z:])
    u = u - num / den
    return u, du, C


def _newton_ma(x, h, a, b, beta, phi, u0, flux_left, fixed_mass=None, max_iter=200, tol=1e-11):
    """Finite-volume Newton for u'' = e^{beta u - (1+beta) phi} with end fluxes a, b."""
    M = len(x)
    w = _fv_weights(M, h)
    if flux_left is not None:
        a = flux_left

    def residual(u):
        f = np.diff(u) / h
        lap = np.empty(M)
        lap[1:-1] = f[1:] - f[:-1]
        lap[0] = f[0] - a
        lap[-1] = b - f[-1]
        src = w * np.exp(np.minimum(beta * u - (1 + beta) * phi, 700.0))
        return lap - src, src

    u = u0.copy()
    F, src = residual(u)
    norm = np.max(np.abs(F))
    for it in range(1, max_iter + 1):
        ab = np.zeros((3, M))
        ab[0, 1:] = 1.0 / h
        ab[2, :-1] = 1.0 / h
        diag = np.full(M, -2.0 / h)
        diag[0] = diag[-1] = -1.0 / h
        ab[1] = diag - beta * src
        du = solve_banded((1, 1), ab, -F)
        t = 1.0
        for _ in range(30):
            un = u + t * du
            Fn, srcn = residual(un)
            nn = np.max(np.abs(Fn))
            if np.isfinite(nn) and nn < norm * (1 - 1e-4 * t) or nn < tol:
                break
            t *= 0.5
        else:
            if norm < STAGNATION_TOL:
                # no further decrease possible at rounding level
                return u, norm, it
            raise ConvergenceError(f"line search failed in the Monge-Ampere Newton at residual {norm:.2e}")
        u, F, src, norm = un, Fn, srcn, nn
        if norm < tol:
            return u, norm, it
    raise ConvergenceError(f"Monge-Ampere Newton did not converge (residual {norm:.2e})")


def solve_real_ma_1d(a: float, b: float, beta: float, x_grid=None) -> RealMASolution:
    """Convex u on the grid with u'' = C e^{beta(u - phi_P)} e^{-phi_P} and u'(R) = (a, b).

    For beta != 0 the constant is C = 1 (the additive gauge of u carries the
    normalization); for beta = 0, C = (b - a) / int e^{-phi_P} and u is
    normalized by int (u - phi_P) e^{-phi_P} dx = 0.  beta = -1 is the
    Kahler-Einstein case: allowed only for a centred interval, where the
    solution is unique up to translation and the even one is returned.
    """
    if not a < 0 < b:
        raise GeometryError("need a < 0 < b")
    P = ConvexBody.interval(a, b)
    R = r_invariant(P)
    x = default_ma_grid(a, b) if x_grid is None else np.asarray(x_grid, dtype=float)
    h = _check_ma_grid(x)
    phi = np.maximum(a * x, b * x)
    ke = beta == -1 and abs(a + b) < 1e-14
    if beta <= -R and not ke:
        raise AdmissibilityError(f"beta = {beta} is not above -R_P = {-R}")
    if beta == 0:
        u, du, C = _solve_beta0(x, h, a, b, phi)
        res = _ma_residual(x, h, a, b, 0.0, phi, u, C)
        return RealMASolution(x, u, du, 0.0, C, res, 0)
    if ke:
        z = int(np.argmin(np.abs(x)))
        if abs(x[z]) > 1e-12 * h or 2 * z + 1 != len(x):
            raise GridError("the beta = -1 case needs a grid symmetric about a node at 0")
        xs, ps = x[z:], phi[z:]
        # even solution: zero flux at the centre and half the mass on each side
        u_half = ke_closed_form(xs, b)
        u_half, res, it = _newton_ma(xs, h, 0.0, b, -1.0, ps, u_half, flux_left=0.0)
        u = np.concatenate([u_half[:0:-1], u_half])
        return RealMASolution(x, u, _node_slopes(u, h), beta, 1.0, res, it)
    # start from the beta = 0 profile shifted to carry the right mass, then continue in beta
    u0, _, _ = _solve_beta0(x, h, a, b, phi)
    w = _fv_weights(len(x), h)
    last = None
    betas = [beta]
    for attempt in range(12):
        try:
            u = u0
            for bt in betas:
                lm = logsumexp(bt * u - (1 + bt) * phi, b=w)
                u = u + (math.log(b - a) - lm) / bt
                u, res, it = _newton_ma(x, h, a, b, bt, phi, u, None)
            return RealMASolution(x, u, _node_slopes(u, h), beta, 1.0, res, it)
        except ConvergenceError as exc:
            last = exc
            m = len(betas) + 1
            betas = [beta * j / m for j in range(1, m + 1)]
    raise last


def _ma_residual(x, h, a, b, beta, phi, u, C) -> float:
    M = len(x)
    w = _fv_weights(M, h)
    f = np.diff(u) / h
    lap = np.empty(M)
    lap[1:-1] = f[1:] - f[:-1]
    lap[0] = f[0] - a
    lap[-1] = b - f[-1]
    src = C * w * np.exp(beta * u - (1 + beta) * phi)
    return float(np.max(np.abs(lap - src)))


def ma_closed_form_beta0(x) -> tuple:
    """u and u' for P = [-1, 1] at beta = 0: u = |x| + e^{-|x|} - 1/2."""
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    return ax + np.exp(-ax) - 0.5, np.sign(x) * (1 - np.exp(-ax))


def ke_closed_form(x, b: float = 1.0) -> np.ndarray:
    """Even solution of u'' = e^{-u} with u' tending to -b and b: log(1 + cosh(b x)) - 2 log b."""
    x = np.asarray(x, dtype=float)
    return np.log1p(np.cosh(b * x)) - 2 * math.log(b)
