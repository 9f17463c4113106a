"""Determinantal energy, weighted Hamiltonian and the Green's-formula estimator."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    AdmissibilityError,
    DegenerateDegreeError,
    InsufficientSamplesError,
    SingularConfigurationError,
)
from .polybasis import (
    Configuration,
    MultiIndexBasis,
    canonical_order,
    grad_log_abs_det2_complex,
    log_abs_det2,
)
from .weights import AdmissibilityVerdict, BaseMeasure, Weight, admissibility_check

MIN_GREEN_SAMPLES = 100
GREEN_BLOCK = 512


@dataclass(frozen=True)
class EnsembleModel:
    """(basis, phi, dV, beta); beta = math.inf selects zero temperature."""

    basis: MultiIndexBasis
    weight: Weight
    base: BaseMeasure
    beta: float
    verdict: Optional[AdmissibilityVerdict] = field(default=None, compare=False)

    def __post_init__(self):
        if not (self.beta > 0):
            raise ValueError(f"beta must be positive (or inf) in complex mode, got {self.beta}")
        if self.base.n != self.basis.n:
            raise ValueError("base measure and basis live in different dimensions")
        if math.isfinite(self.beta):
            verdict = admissibility_check(self.weight, self.base, self.beta, self.basis.n)
            if not verdict.ok:
                raise AdmissibilityError(f"model is not admissible at beta={self.beta}: {verdict.status}")
            object.__setattr__(self, "verdict", verdict)

    @property
    def k(self) -> int:
        return self.basis.k

    @property
    def n(self) -> int:
        return self.basis.n

    @property
    def size(self) -> int:
        return self.basis.size

    @property
    def real_line(self) -> bool:
        return self.base.real_line

    def with_beta(self, beta: float) -> "EnsembleModel":
        return EnsembleModel(self.basis, self.weight, self.base, beta)


def _points(model: EnsembleModel, config) -> np.ndarray:
    z = config.points if isinstance(config, Configuration) else np.asarray(config)
    return np.asarray(z, dtype=complex).reshape(-1, model.n)


def determinantal_energy(model: EnsembleModel, config) -> float:
    """-(1/(N k)) log|D|^2; +inf on singular configurations."""
    if model.k == 0:
        raise DegenerateDegreeError("the determinantal energy needs k >= 1")
    ld = log_abs_det2(model.basis, _points(model, config))
    if ld == -math.inf:
        return math.inf
    return -ld / (model.size * model.k)


def pair_energy(z) -> float:
    """(1/(N(N-1))) * (1/2) sum_{i != j} g(z_i, z_j) with g(z, w) = -log|z - w|^2 (n = 1)."""
    z = np.asarray(z, dtype=complex).ravel()
    z = z[canonical_order(z[:, None])]
    N = len(z)
    d2 = np.abs(z[:, None] - z[None, :]) ** 2
    np.fill_diagonal(d2, 1.0)
    if np.any(d2 == 0.0):
        return math.inf
    g = -np.log(d2)
    return float(0.5 * g.sum() / (N * (N - 1)))


def _weight_sum(model: EnsembleModel, z: np.ndarray) -> float:
    phi = model.weight(z)
    # canonical order keeps the summation bitwise permutation invariant
    return float(np.sum(np.sort(phi)))


def weighted_hamiltonian(model: EnsembleModel, config) -> float:
    """H = -(1/k) log|D|^2 + sum_i phi(z_i); for k = 0 (a single point) H = phi."""
    z = _points(model, config)
    wsum = _weight_sum(model, z)
    if math.isinf(wsum):
        return math.inf
    if model.k == 0:
        return wsum
    ld = log_abs_det2(model.basis, z)
    if ld == -math.inf:
        return math.inf
    return -ld / model.k + wsum


def hamiltonian_grad_complex(model: EnsembleModel, config) -> np.ndarray:
    """Gradient of H packed as d/dRe + i d/dIm, shape (N, n).

    Raises SingularConfigurationError where H is infinite.
    """
    z = _points(model, config)
    g = model.weight.grad_complex(z)
    if not np.all(np.isfinite(g)):
        raise SingularConfigurationError("weight is infinite at some point")
    if model.k > 0:
        g = g - grad_log_abs_det2_complex(model.basis, z) / model.k
    if model.real_line:
        g = g.real + 0j
    return g


def weighted_hamiltonian_grad(model: EnsembleModel, config) -> np.ndarray:
    """Real gradient of H, shape (N, 2n) ordered (re..., im...)."""
    g = hamiltonian_grad_complex(model, config)
    return np.concatenate([g.real, g.imag], axis=1)


def hamiltonian_and_grad(model: EnsembleModel, config):
    """(H, gradient) with gradient None when H is +inf."""
    H = weighted_hamiltonian(model, config)
    if math.isinf(H):
        return H, None
    return H, hamiltonian_grad_complex(model, config)


def log_gibbs_density(model: EnsembleModel, config) -> float:
    """Unnormalized log density -beta H + sum log(dV/dlambda) of the Gibbs ensemble."""
    z = _points(model, config)
    ld = np.sort(model.base.log_density(z))
    if np.any(ld == -math.inf):
        return -math.inf
    H = weighted_hamiltonian(model, z)
    if math.isinf(H):
        return -math.inf
    return -model.beta * H + float(np.sum(ld))


def log_product_density(model: EnsembleModel, config) -> float:
    """The same density written as |D|^{2 beta/k} e^{-beta sum phi} prod dV."""
    z = _points(model, config)
    ld = model.base.log_density(z)
    phi = model.weight(z)
    if model.k == 0:
        return float(-model.beta * np.sum(phi) + np.sum(ld))
    return float(model.beta / model.k * log_abs_det2(model.basis, z) - model.beta * np.sum(phi) + np.sum(ld))


@dataclass(frozen=True)
class GreenEstimate:
    """Centered Monte-Carlo estimate of psi^(k) on a grid with standard errors."""

    points: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    raw_mean: np.ndarray
    samples: int


def _green_block(model: EnsembleModel, grid: np.ndarray, seed_seq: np.random.SeedSequence, count: int):
    rng = np.random.default_rng(seed_seq)
    N = model.size
    total = np.zeros(len(grid))
    total_sq = np.zeros(len(grid))
    for _ in range(count):
        rest = model.base.sample(rng, N - 1)
        if model.n == 1:
            # the pairs among the other points only add a z-independent constant
            d2 = np.abs(grid[:, 0][:, None] - rest[:, 0][None, :]) ** 2
            with np.errstate(divide="ignore"):
                vals = np.sum(np.log(d2), axis=1)
        else:
            vals = np.array(
                [log_abs_det2(model.basis, np.vstack([g[None, :], rest])) for g in grid]
            )
        vals = vals / model.k
        total += vals
        total_sq += vals * vals
    return total, total_sq


def green_formula_estimate(model: EnsembleModel, eval_grid, samples: int, seed: int, workers: int = 1) -> GreenEstimate:
    """Estimate psi^(k)(z) = (1/k) E[log|D(z, z_2, ..., z_N)|^2] over z_j ~ dV.

    The same draws are used at every grid point.  Sample blocks of fixed size
    get their own child seed, so results do not depend on ``workers``.
    """
    if samples < MIN_GREEN_SAMPLES:
        raise InsufficientSamplesError(f"need at least {MIN_GREEN_SAMPLES} samples, got {samples}")
    if model.k == 0:
        raise DegenerateDegreeError("the Green's-formula estimator needs k >= 1")
    grid = np.asarray(eval_grid, dtype=complex).reshape(-1, model.n)
    nblocks = -(-samples // GREEN_BLOCK)
    counts = [min(GREEN_BLOCK, samples - b * GREEN_BLOCK) for b in range(nblocks)]
    seeds = np.random.SeedSequence(seed).spawn(nblocks)
    jobs = list(zip(seeds, counts))
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(lambda j: _green_block(model, grid, *j), jobs))
    else:
        parts = [_green_block(model, grid, *j) for j in jobs]
    total = sum(p[0] for p in parts)
    total_sq = sum(p[1] for p in parts)
    mean = total / samples
    var = np.maximum(total_sq / samples - mean**2, 0.0)
    stderr = np.sqrt(var / samples)
    return GreenEstimate(grid, mean - mean.mean(), stderr, mean, samples)
