"""Discrete optimal transport for the cost c(x, y) = -x.y and monotone maps in one dimension."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad
from scipy.optimize import linprog
from scipy.sparse import coo_matrix

from .errors import GeometryError, SizeMismatchError, SolverFailureError
from .io import write_csv
from .tropical import assignment

MAX_LP_SIZE = 500
MARGINAL_TOL = 1e-10
WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finitely supported probability measure on R^n."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.points, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        w = np.asarray(self.weights, dtype=float).ravel()
        if len(w) != len(x):
            raise SizeMismatchError(f"{len(x)} points but {len(w)} weights")
        if np.any(w < 0) or abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError("weights must be non-negative and sum to 1")
        x.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", x)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, points) -> "DiscreteMeasure":
        x = np.asarray(points, dtype=float)
        return cls(x, np.full(len(x), 1.0 / len(x)))

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def n(self) -> int:
        return self.points.shape[1]

    @property
    def is_uniform(self) -> bool:
        return bool(np.all(self.weights == self.weights[0]))


@dataclass(frozen=True)
class TransportPlan:
    cost: float
    plan: np.ndarray = field(repr=False)
    route: str

    def rows(self):
        i, j = np.nonzero(self.plan)
        return zip(i.tolist(), j.tolist(), self.plan[i, j].tolist())

    def to_csv(self, path):
        return write_csv(path, ["i", "j", "mass"], self.rows())


def _lp_plan(C: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    m, n = C.shape
    rows = np.concatenate([np.repeat(np.arange(m), n), m + np.tile(np.arange(n), m)])
    cols = np.concatenate([np.arange(m * n), np.arange(m * n)])
    A = coo_matrix((np.ones(2 * m * n), (rows, cols)), shape=(m + n, m * n)).tocsr()
    # the last marginal row is implied by the others; interior point plus crossover
    # is much faster than dual simplex on these dense transportation problems
    res = linprog(C.ravel(), A_eq=A[:-1], b_eq=np.concatenate([a, b])[:-1], bounds=(0, None), method="highs-ipm")
    if res.status != 0:
        raise SolverFailureError(f"LP solver failed: {res.message}")
    return np.maximum(res.x.reshape(m, n), 0.0)


def ot_cost(mu0: DiscreteMeasure, mu1: DiscreteMeasure, route: str = "auto") -> TransportPlan:
    """Minimal int -x.y dgamma over couplings of mu0 and mu1.

    Equal-size uniform measures use the assignment solver; other pairs go
    to a linear program (HiGHS).  The returned plan is checked against both
    marginals.
    """
    if mu0.n != mu1.n:
        raise SizeMismatchError("measures live in different dimensions")
    C = -mu0.points @ mu1.points.T
    if route == "auto":
        route = "assignment" if (mu0.size == mu1.size and mu0.is_uniform and mu1.is_uniform) else "lp"
    if route == "assignment":
        if mu0.size != mu1.size or not (mu0.is_uniform and mu1.is_uniform):
            raise SizeMismatchError("the assignment route needs equal-size uniform measures")
        N = mu0.size
        _, perm = assignment(mu0.points, mu1.points)
        plan = np.zeros((N, N))
        plan[np.arange(N), perm] = 1.0 / N
    elif route == "lp":
        if max(mu0.size, mu1.size) > MAX_LP_SIZE:
            raise SizeMismatchError(f"LP path is capped at {MAX_LP_SIZE} atoms per side")
        plan = _lp_plan(C, mu0.weights, mu1.weights)
    else:
        raise ValueError(f"unknown route {route!r}")
    r0 = np.max(np.abs(plan.sum(axis=1) - mu0.weights))
    r1 = np.max(np.abs(plan.sum(axis=0) - mu1.weights))
    if max(r0, r1) > MARGINAL_TOL:
        raise SolverFailureError(f"plan marginals off by {max(r0, r1):.2e}")
    return TransportPlan(float(np.sum(plan * C)), plan, route)


def plan_is_monotone(plan: np.ndarray, x: np.ndarray, y: np.ndarray, tol: float = 0.0) -> bool:
    """No crossing pairs in the support: x_i < x_j implies y_a <= y_b for charged (i, a), (j, b)."""
    i, j = np.nonzero(plan > tol)
    xs, ys = np.asarray(x).ravel()[i], np.asarray(y).ravel()[j]
    order = np.lexsort((ys, xs))
    xs, ys = xs[order], ys[order]
    # after sorting by x (ties by y) the y sequence must be non-decreasing across distinct x
    run_max = -math.inf
    k = 0
    while k < len(xs):
        e = k
        while e < len(xs) and xs[e] == xs[k]:
            e += 1
        if ys[k] < run_max:
            return False
        run_max = ys[e - 1]
        k = e
    return True


@dataclass(frozen=True)
class MonotoneMap:
    """T = F_P^{-1} o F_mu pushing mu to the uniform law on [a, b]."""

    cdf: Callable
    a: float
    b: float

    def __call__(self, x) -> np.ndarray:
        return self.a + (self.b - self.a) * np.asarray(self.cdf(np.asarray(x, dtype=float)), dtype=float)

    def target_cdf(self, y) -> np.ndarray:
        return np.clip((np.asarray(y, dtype=float) - self.a) / (self.b - self.a), 0.0, 1.0)


def _empirical_mid_cdf(mu: DiscreteMeasure) -> Callable:
    x = mu.points[:, 0]
    if len(np.unique(x)) != len(x):
        raise ValueError("empirical measure needs distinct atoms")
    order = np.argsort(x)
    xs, ws = x[order], mu.weights[order]
    cum = np.concatenate([[0.0], np.cumsum(ws)])

    def cdf(t):
        t = np.asarray(t, dtype=float)
        lo = np.searchsorted(xs, t, side="left")
        hi = np.searchsorted(xs, t, side="right")
        return 0.5 * (cum[lo] + cum[hi])

    return cdf


def _density_cdf(density: Callable, support) -> Callable:
    lo, hi = support
    total = quad(density, lo, hi, limit=200)[0]

    def cdf(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.array([quad(density, lo, min(max(v, lo), hi), limit=200)[0] for v in t]) / total
        return out

    return cdf


def monotone_map_1d(mu, a: float, b: float, support: Optional[tuple] = None) -> MonotoneMap:
    """Quantile map from mu to the uniform measure on [a, b].

    ``mu`` may be a one-dimensional DiscreteMeasure (atoms are sent to the
    midpoint of their quantile cell), any object with a ``cdf`` method, or a
    density callable together with ``support``.
    """
    if not b > a:
        raise GeometryError("degenerate target interval")
    if isinstance(mu, DiscreteMeasure):
        if mu.n != 1:
            raise SizeMismatchError("monotone maps are one-dimensional")
        return MonotoneMap(_empirical_mid_cdf(mu), a, b)
    if hasattr(mu, "cdf"):
        return MonotoneMap(mu.cdf, a, b)
    if callable(mu):
        if support is None:
            raise ValueError("a density callable needs a support interval")
        return MonotoneMap(_density_cdf(mu, support), a, b)
    raise TypeError(f"cannot build a monotone map from {type(mu).__name__}")


def transport_potential(T: MonotoneMap, x) -> np.ndarray:
    """u(x) = int_{x_0}^x T by the trapezoid rule on the given increasing grid."""
    x = np.asarray(x, dtype=float)
    t = T(x)
    return np.concatenate([[0.0], np.cumsum(0.5 * np.diff(x) * (t[:-1] + t[1:]))])
