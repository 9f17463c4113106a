"""Empirical measures, Wasserstein distances, relative entropy and brute-force partition functions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
from scipy.special import logsumexp, roots_legendre

from .energy import EnsembleModel
from .equilibrium import ClosedFormMeasure
from .errors import GridError, SizeMismatchError
from .io import write_csv

SLICES = 64
HIST_BINS = 64
TAIL_TOL = 1e-10
# the integrand is truncated where it is this many e-folds below its peak
TRUNCATION_DEPTH = 40.0


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Uniform weights 1/N on the atoms; atoms are real (N,) / (N, 1) or complex (N,) / (N, n)."""

    atoms: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.atoms)
        if a.ndim == 1:
            a = a[:, None]
        if len(a) == 0:
            raise ValueError("empirical measure needs at least one atom")
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "atoms", a)

    @property
    def size(self) -> int:
        return len(self.atoms)

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.atoms) and bool(np.any(self.atoms.imag != 0))

    @cached_property
    def radii(self) -> np.ndarray:
        return np.sort(np.sqrt(np.sum(np.abs(self.atoms) ** 2, axis=1)))

    @cached_property
    def line(self) -> np.ndarray:
        return np.sort(np.real(self.atoms[:, 0]))

    def radial_cdf(self, r) -> np.ndarray:
        return np.searchsorted(self.radii, np.asarray(r, dtype=float), side="right") / self.size

    def moment(self, p: int = 2) -> float:
        return float(np.mean(np.sum(np.abs(self.atoms) ** p, axis=1)))


def _w1_sorted_vs_law(x: np.ndarray, law: ClosedFormMeasure) -> float:
    """int_0^1 |Q_emp(u) - Q(u)| du, exact through partial moments of the law."""
    x = np.sort(np.asarray(x, dtype=float))
    N = len(x)
    u = np.arange(N + 1) / N
    M = lambda v: law.partial_moment(law.quantile(v))  # noqa: E731 - int_0^v Q
    u0, u1 = u[:-1], u[1:]
    us = np.clip(np.asarray(law.cdf(x), dtype=float), u0, u1)
    M0, M1, Ms = M(u0), M(u1), M(us)
    left = x * (us - u0) - (Ms - M0)
    right = (M1 - Ms) - x * (u1 - us)
    return float(np.sum(np.maximum(left, 0.0) + np.maximum(right, 0.0)))


def _w1_samples(x: np.ndarray, y: np.ndarray) -> float:
    """int |F_x - F_y| for two empirical laws on R."""
    x, y = np.sort(np.asarray(x, dtype=float)), np.sort(np.asarray(y, dtype=float))
    if len(x) == len(y):
        return float(np.mean(np.abs(x - y)))
    t = np.sort(np.concatenate([x, y]))
    Fx = np.searchsorted(x, t[:-1], side="right") / len(x)
    Fy = np.searchsorted(y, t[:-1], side="right") / len(y)
    return float(np.sum(np.abs(Fx - Fy) * np.diff(t)))


def circular_w1(angles, reference=None) -> float:
    """Arc-length W1 on the unit circle against the uniform law (or another angle sample).

    W1 = 2 pi min_c int_0^1 |G(t) - H(t) - c| dt with c the median of G - H.
    """
    a = np.sort(np.mod(np.asarray(angles, dtype=float), 2 * math.pi) / (2 * math.pi))
    if reference is None:
        # G - t is piecewise linear with slope -1 between atoms; integrate on a fine split
        knots = np.concatenate([[0.0], a, [1.0]])
        steps = np.arange(len(a) + 1) / len(a)
        # on [knots[i], knots[i+1]] the difference is steps[i] - t
        return 2 * math.pi * _median_abs_linear(knots, steps)
    b = np.sort(np.mod(np.asarray(reference, dtype=float), 2 * math.pi) / (2 * math.pi))
    t = np.unique(np.concatenate([[0.0], a, b, [1.0]]))
    mid = 0.5 * (t[:-1] + t[1:])
    d = np.searchsorted(a, mid, side="right") / len(a) - np.searchsorted(b, mid, side="right") / len(b)
    w = np.diff(t)
    c = _weighted_median(d, w)
    return 2 * math.pi * float(np.sum(np.abs(d - c) * w))


def _weighted_median(v, w):
    order = np.argsort(v)
    cw = np.cumsum(w[order])
    return float(v[order][np.searchsorted(cw, 0.5 * cw[-1])])


def _median_abs_linear(knots, steps) -> float:
    """min_c int_0^1 |d(t) - c| dt for d(t) = steps[i] - t on [knots[i], knots[i+1]]."""
    lo, hi, st = knots[:-1], knots[1:], np.asarray(steps, dtype=float)

    def mass_below(c):
        # d < c  <=>  t > steps - c
        return float(np.sum(np.maximum(0.0, hi - np.maximum(lo, st - c))))

    a, b = -1.0, 1.0
    for _ in range(100):
        mid = 0.5 * (a + b)
        if mass_below(mid) < 0.5:
            a = mid
        else:
            b = mid
    c = 0.5 * (a + b)
    A = st - lo - c
    B = st - hi - c
    same = A * B >= 0
    # d has slope -1, so a sign change contributes two triangles
    parts = np.where(same, 0.5 * (hi - lo) * np.abs(A + B), 0.5 * (A * A + B * B))
    return float(np.sum(parts))


def sliced_w1(x, y, slices: int = SLICES) -> float:
    """Mean over equiangular directions of the 1D W1 of projections (an estimate of planar W1)."""
    x = np.asarray(x, dtype=complex).ravel()
    y = np.asarray(y, dtype=complex).ravel()
    total = 0.0
    for j in range(slices):
        th = math.pi * j / slices
        e = complex(math.cos(th), math.sin(th))
        total += _w1_samples((x * np.conj(e)).real, (y * np.conj(e)).real)
    return total / slices


def wasserstein1(emp, ref, mode: str = "auto") -> float:
    """W1 between an empirical measure and a closed-form law or another empirical measure.

    mode "line" compares real parts, "radial" compares radii, "circle" uses
    arc length on angles, "sliced" averages 64 planar projections.  "auto"
    picks radial for radial closed-form laws, sliced for complex samples
    and line otherwise.
    """
    emp = emp if isinstance(emp, EmpiricalMeasure) else EmpiricalMeasure(emp)
    if mode == "auto":
        if isinstance(ref, ClosedFormMeasure):
            mode = "radial" if ref.kind == "radial" else "line"
        else:
            ref = ref if isinstance(ref, EmpiricalMeasure) else EmpiricalMeasure(ref)
            if emp.atoms.shape[1] != ref.atoms.shape[1]:
                raise SizeMismatchError("empirical measures in different dimensions")
            mode = "sliced" if (emp.is_complex or ref.is_complex) else "line"
    if isinstance(ref, ClosedFormMeasure):
        if mode == "radial":
            if ref.kind != "radial":
                raise SizeMismatchError("radial comparison needs a radial law")
            return _w1_sorted_vs_law(emp.radii, ref)
        if mode == "line":
            if ref.kind != "line" or emp.atoms.shape[1] != 1:
                raise SizeMismatchError("line comparison needs a law on R and one-dimensional atoms")
            return _w1_sorted_vs_law(emp.line, ref)
        raise ValueError(f"mode {mode!r} is not available against a closed-form law")
    if mode == "circle":
        if ref is None or (isinstance(ref, str) and ref == "uniform"):
            return circular_w1(np.angle(emp.atoms[:, 0]))
        ref = ref if isinstance(ref, EmpiricalMeasure) else EmpiricalMeasure(ref)
        return circular_w1(np.angle(emp.atoms[:, 0]), np.angle(ref.atoms[:, 0]))
    ref = ref if isinstance(ref, EmpiricalMeasure) else EmpiricalMeasure(ref)
    if emp.atoms.shape[1] != ref.atoms.shape[1]:
        raise SizeMismatchError("empirical measures in different dimensions")
    if mode == "line":
        return _w1_samples(emp.line, ref.line)
    if mode == "radial":
        return _w1_samples(emp.radii, ref.radii)
    if mode == "sliced":
        if emp.atoms.shape[1] != 1:
            raise SizeMismatchError("sliced W1 is implemented for one complex variable")
        return sliced_w1(emp.atoms[:, 0], ref.atoms[:, 0])
    raise ValueError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# relative entropy


def relative_entropy(mu, mu0) -> float:
    """sum mu log(mu / mu0) over bins; +inf when mu charges a bin of zero mu0-mass.

    Both inputs are bin masses on the same bins and are renormalized to 1.
    """
    p = np.asarray(mu, dtype=float).ravel()
    q = np.asarray(mu0, dtype=float).ravel()
    if p.shape != q.shape:
        raise SizeMismatchError("histograms have different bins")
    if p.sum() <= 0:
        raise ValueError("empty histogram")
    if q.sum() <= 0:
        raise ValueError("reference histogram has no mass")
    p, q = p / p.sum(), q / q.sum()
    on = p > 0
    if np.any(q[on] == 0):
        return math.inf
    return float(max(np.sum(p[on] * np.log(p[on] / q[on])), 0.0))


def histogram_entropy(samples, cdf, edges=None, bins: int = HIST_BINS) -> float:
    """Relative entropy of a histogram of 1D samples (or radii) against a law given by its cdf.

    Default bins: ``bins`` equal bins over the central 99.9% of the samples.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if len(x) == 0:
        raise ValueError("empty histogram")
    if edges is None:
        lo, hi = np.quantile(x, [0.0005, 0.9995])
        edges = np.linspace(lo, hi, bins + 1)
    counts, _ = np.histogram(x, bins=edges)
    ref = np.diff(np.asarray(cdf(np.asarray(edges)), dtype=float))
    return relative_entropy(counts, ref)


# ---------------------------------------------------------------------------
# brute-force partition functions


@dataclass(frozen=True)
class PartitionResult:
    Z: float
    log_Z: float
    free_energy: float  # -(1/(k N)) log Z
    radius: float
    nodes: int


def _one_point_log_profile(model: EnsembleModel, r: np.ndarray) -> np.ndarray:
    """log of a single-point bound r^{2 beta (N-1)/k} e^{-beta phi} rho on the probe radii."""
    N, k, beta = model.size, model.k, model.beta
    z = r.astype(complex)[:, None]
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        out = 2 * beta * (N - 1) / max(k, 1) * np.log(np.maximum(r, 1.0)) - beta * model.weight(z) + model.base.log_density(z)
        if not model.real_line:
            out = out + np.log(r)
    return np.where(np.isnan(out), -np.inf, out)


def _truncation(model: EnsembleModel) -> float:
    base = model.base
    if base.is_compact:
        return float(base.radius if base.kind in ("ball", "circle") else max(abs(base.low), abs(base.high)))
    r = np.exp(np.linspace(-10, math.log(1e4), 20001))
    lp = _one_point_log_profile(model, r)
    peak = int(np.argmax(lp))
    below = np.flatnonzero(lp[peak:] < lp[peak] - TRUNCATION_DEPTH)
    if len(below) == 0:
        raise GridError("one-point integrand does not decay; truncation tail above tolerance")
    R = float(r[peak + below[0]])
    # crude tail bound: remaining mass relative to the peak mass
    tail = np.exp(logsumexp(lp[peak + below[0]:] + np.log(np.gradient(r)[peak + below[0]:])) - logsumexp(lp + np.log(np.gradient(r))))
    if tail > TAIL_TOL:
        raise GridError(f"truncation tail {tail:.2e} exceeds {TAIL_TOL:.0e}")
    return R


def _log_abs_vandermonde(z: np.ndarray) -> np.ndarray:
    """log prod_{i<j} |z_i - z_j|^2 for rows of z (monomial basis, n = 1)."""
    N = z.shape[1]
    out = np.zeros(len(z))
    with np.errstate(divide="ignore"):
        for i in range(N):
            for j in range(i + 1, N):
                out += np.log(np.abs(z[:, i] - z[:, j]) ** 2)
    return out


def partition_bruteforce(model: EnsembleModel, radial_nodes: int = 40, angle_nodes: int = 24, order=None) -> PartitionResult:
    """Z = int |D|^{2 beta/k} e^{-beta sum phi} dV^N by nested tensor quadrature (n = 1, N <= 3).

    Planar carriers use Gauss-Legendre in the radius times the trapezoid rule
    in angle; the common rotation is integrated out by fixing the first
    angle (the integrand only depends on the moduli through phi and dV).
    ``order`` permutes the integration variables.
    """
    if model.n != 1:
        raise ValueError("brute-force partition functions are for n = 1")
    N, k, beta = model.size, model.k, model.beta
    if N > 3:
        raise ValueError("brute-force partition functions are limited to N <= 3")
    base = model.base
    if base.kind == "circle":
        th = 2 * math.pi * np.arange(angle_nodes) / angle_nodes
        nodes = [base.radius * np.exp(1j * th) for _ in range(N)]
        weights = [np.full(angle_nodes, 1.0 / angle_nodes) for _ in range(N)]
        R = base.radius
    elif base.real_line:
        R = _truncation(model)
        a, b = (base.low, base.high) if base.kind in ("interval", "arcsine") else (-R, R)
        x, w = roots_legendre(radial_nodes)
        x = 0.5 * (b - a) * x + 0.5 * (a + b)
        w = 0.5 * (b - a) * w * np.exp(base.log_density(x.astype(complex)[:, None]))
        nodes = [x.astype(complex) for _ in range(N)]
        weights = [w for _ in range(N)]
    else:
        R = _truncation(model)
        r, wr = roots_legendre(radial_nodes)
        r = 0.5 * R * (r + 1)
        wr = 0.5 * R * wr * r * np.exp(base.log_density(r.astype(complex)[:, None]))
        th = 2 * math.pi * np.arange(angle_nodes) / angle_nodes
        full = (r[:, None] * np.exp(1j * th[None, :])).ravel()
        wfull = (wr[:, None] * np.full((1, angle_nodes), 2 * math.pi / angle_nodes)).ravel()
        nodes = [r.astype(complex)] + [full] * (N - 1)
        weights = [2 * math.pi * wr] + [wfull] * (N - 1)
    if order is not None:
        nodes = [nodes[i] for i in order]
        weights = [weights[i] for i in order]
    # loop over the first variable so memory stays at one slab of the tensor grid
    rest = np.meshgrid(*nodes[1:], indexing="ij")
    zr = np.stack([g.ravel() for g in rest], axis=1)
    wr = np.sum(np.stack([np.log(g).ravel() for g in np.meshgrid(*weights[1:], indexing="ij")], axis=1), axis=1)
    phir = np.sum(model.weight(zr.reshape(-1, 1)).reshape(zr.shape), axis=1)
    z0, w0 = nodes[0], np.log(weights[0])
    phi0 = model.weight(z0[:, None])
    parts = np.empty(len(z0))
    for i in range(len(z0)):
        z = np.concatenate([np.full((len(zr), 1), z0[i]), zr], axis=1)
        logf = w0[i] + wr - beta * (phi0[i] + phir)
        if k > 0 and beta != 0:
            logf = logf + beta / k * _log_abs_vandermonde(z)
        parts[i] = logsumexp(logf)
    logZ = float(logsumexp(parts))
    count = len(z0) * len(zr)
    return PartitionResult(math.exp(logZ), logZ, -logZ / (k * N) if k > 0 else math.nan, R, count)


@dataclass(frozen=True)
class MonteCarloEstimate:
    value: float
    stderr: float
    samples: int


def partition_montecarlo(model: EnsembleModel, samples: int, seed: int = 0, sigma: Optional[float] = None,
                         block: int = 250_000) -> MonteCarloEstimate:
    """Importance-sampling estimate of Z with i.i.d. complex (or real) Gaussian proposals."""
    if model.n != 1:
        raise ValueError("n = 1 only")
    N, k, beta = model.size, model.k, model.beta
    real = model.real_line
    if sigma is None:
        sigma = max(_truncation(model) / 3.0, 0.5)
    seeds = np.random.SeedSequence(seed).spawn(-(-samples // block))
    total = 0.0
    total_sq = 0.0
    done = 0
    for sq in seeds:
        rng = np.random.default_rng(sq)
        m = min(block, samples - done)
        if real:
            z = rng.normal(scale=sigma, size=(m, N)) + 0j
            logq = np.sum(-0.5 * (z.real / sigma) ** 2, axis=1) - N * math.log(sigma * math.sqrt(2 * math.pi))
        else:
            g = rng.normal(scale=sigma / math.sqrt(2), size=(m, 2 * N))
            z = g[:, :N] + 1j * g[:, N:]
            logq = np.sum(-np.abs(z) ** 2 / sigma**2, axis=1) - N * math.log(math.pi * sigma**2)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            logf = -beta * np.sum(model.weight(z.reshape(-1, 1)).reshape(z.shape), axis=1)
            logf += np.sum(model.base.log_density(z.reshape(-1, 1)).reshape(z.shape), axis=1)
            if k > 0 and beta != 0:
                logf += beta / k * _log_abs_vandermonde(z)
        w = np.exp(logf - logq)
        w = np.where(np.isfinite(w), w, 0.0)
        total += float(np.sum(w))
        total_sq += float(np.sum(w * w))
        done += m
    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0)
    return MonteCarloEstimate(mean, math.sqrt(var / samples), samples)


def write_report(path, header, rows):
    return write_csv(path, header, rows)
