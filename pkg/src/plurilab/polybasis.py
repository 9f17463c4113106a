"""Multi-index polynomial bases on C^n and log-magnitude Vandermonde determinants.

Points are stored as complex arrays of shape ``(N, n)``.  Real gradients are
returned with shape ``(N, 2n)`` laid out as ``(re_1..re_n, im_1..im_n)``,
i.e. derivatives with respect to the real and imaginary parts of every
coordinate.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    DegreeTooLargeError,
    SingularConfigurationError,
    SizeMismatchError,
)

MAX_BASIS_SIZE = 1_000_000
# pivots below this fraction of the largest pivot count as exact zeros
PIVOT_FLOOR = 1e-300

MODES = ("complex", "real-line", "real-tropical")


def basis_size(n: int, k: int) -> int:
    """Dimension of the space of polynomials of degree <= k on C^n."""
    if n < 1 or k < 0:
        raise ValueError(f"need n >= 1 and k >= 0, got n={n}, k={k}")
    size = math.comb(n + k, n)
    if size > MAX_BASIS_SIZE:
        raise DegreeTooLargeError(f"basis of size {size} for n={n}, k={k} is too large")
    return size


def _grlex_exponents(n: int, k: int) -> np.ndarray:
    out = []
    for d in range(k + 1):
        # all n-tuples of total degree d in descending lexicographic order
        level = [
            t for t in itertools.product(range(d, -1, -1), repeat=n) if sum(t) == d
        ]
        out.extend(level)
    return np.array(out, dtype=np.int64).reshape(-1, n)


@dataclass(frozen=True)
class MultiIndexBasis:
    """Monomial basis z^m, |m| <= k, of P_k(C^n) in graded-lex order."""

    n: int
    k: int
    exponents: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        size = basis_size(self.n, self.k)
        exps = _grlex_exponents(self.n, self.k)
        assert len(exps) == size
        exps.setflags(write=False)
        object.__setattr__(self, "exponents", exps)

    @property
    def size(self) -> int:
        return len(self.exponents)

    def evaluate(self, z: np.ndarray) -> np.ndarray:
        """Evaluation matrix ``E[j, i] = e_i(z_j)`` for points of shape (M, n)."""
        z = np.asarray(z, dtype=complex).reshape(-1, self.n)
        # 0**0 == 1 in numpy, which is what the constant monomial needs
        return np.prod(z[:, None, :] ** self.exponents[None, :, :], axis=2)

    def evaluate_derivative(self, z: np.ndarray, axis: int) -> np.ndarray:
        """Holomorphic derivative d e_i / d z_axis evaluated at the points."""
        z = np.asarray(z, dtype=complex).reshape(-1, self.n)
        exps = self.exponents.copy()
        coef = exps[:, axis].astype(float)
        exps[:, axis] = np.maximum(exps[:, axis] - 1, 0)
        vals = np.prod(z[:, None, :] ** exps[None, :, :], axis=2)
        return vals * coef[None, :]


@dataclass(frozen=True)
class Configuration:
    """An ordered list of points in C^n (or R^n in tropical mode)."""

    points: np.ndarray
    mode: str = "complex"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        dtype = float if self.mode == "real-tropical" else complex
        pts = np.array(self.points, dtype=dtype)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2:
            raise ValueError("points must have shape (N, n)")
        if not np.all(np.isfinite(pts)):
            raise ValueError("configuration has non-finite coordinates")
        if self.mode == "real-line" and np.any(pts.imag != 0):
            raise ValueError("real-line configuration has nonzero imaginary parts")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_real(cls, coords, n: int, mode: str = "complex") -> "Configuration":
        """Build from real coordinates of shape (N, 2n): (re_1..re_n, im_1..im_n)."""
        coords = np.asarray(coords, dtype=float).reshape(-1, 2 * n)
        return cls(coords[:, :n] + 1j * coords[:, n:], mode)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def real_coords(self) -> np.ndarray:
        p = self.points
        if self.mode == "real-tropical":
            return p.copy()
        return np.concatenate([p.real, p.imag], axis=1)

    def canonical(self) -> "Configuration":
        return Configuration(self.points[canonical_order(self.points)], self.mode)


def canonical_order(z: np.ndarray) -> np.ndarray:
    """Permutation sorting points lexicographically by (re_1, im_1, re_2, ...)."""
    z = np.asarray(z).reshape(len(z), -1)
    keys = []
    for a in range(z.shape[1] - 1, -1, -1):
        keys.append(np.imag(z[:, a]))
        keys.append(np.real(z[:, a]))
    return np.lexsort(keys)


def _as_points(config, n: int) -> np.ndarray:
    z = config.points if isinstance(config, Configuration) else np.asarray(config)
    return np.asarray(z, dtype=complex).reshape(-1, n)


def pairwise_log_abs_det2(z: np.ndarray) -> float:
    """sum_{i<j} log|z_i - z_j|^2 for points in C (shape (N,) or (N, 1))."""
    z = np.asarray(z, dtype=complex).ravel()
    z = z[canonical_order(z[:, None])]
    iu = np.triu_indices(len(z), k=1)
    d2 = np.abs(z[iu[0]] - z[iu[1]]) ** 2
    if np.any(d2 == 0.0):
        return -math.inf
    return float(np.sum(np.log(d2)))


def _scaled_evaluation(basis: MultiIndexBasis, z: np.ndarray):
    A = basis.evaluate(z)
    scale = np.max(np.abs(A), axis=0)
    if np.any(scale == 0.0):
        return A, None
    return A / scale[None, :], scale


def _has_repeated_point(z: np.ndarray) -> bool:
    zs = z[canonical_order(z)]
    return bool(np.any(np.all(zs[1:] == zs[:-1], axis=1)))


@dataclass
class _ArnoldiFactor:
    """V = Q R for the monomial evaluation matrix, built without forming z^m.

    Column m is obtained as z_a * q_parent followed by two passes of classical
    Gram-Schmidt, so Q is unitary and R is triangular with R_mm = R_pp * h_m.
    """

    q: np.ndarray
    log_r: np.ndarray
    h: np.ndarray
    coef: np.ndarray
    parent: np.ndarray
    axis: np.ndarray
    singular: bool


def _parents(basis: MultiIndexBasis):
    index = {tuple(e): i for i, e in enumerate(basis.exponents)}
    parent = np.full(basis.size, -1)
    axis = np.full(basis.size, -1)
    for i, e in enumerate(basis.exponents):
        nz = np.flatnonzero(e)
        if len(nz):
            a = nz[0]
            pe = e.copy()
            pe[a] -= 1
            parent[i], axis[i] = index[tuple(pe)], a
    return parent, axis


def _arnoldi(basis: MultiIndexBasis, z: np.ndarray, start: np.ndarray | None = None) -> _ArnoldiFactor:
    """Arnoldi on the points z; ``start`` (default all ones) plays the role of the constant."""
    npts, size = len(z), basis.size
    parent, axis = _parents(basis)
    q = np.zeros((npts, size), dtype=complex)
    coef = np.zeros((size, size), dtype=complex)
    h = np.ones(size)
    log_r = np.zeros(size)
    start = np.ones(npts) if start is None else np.asarray(start, dtype=complex)
    norm0 = float(np.linalg.norm(start))
    q[:, 0] = start / norm0
    log_r[0] = math.log(norm0)
    singular = False
    for m in range(1, size):
        v = z[:, axis[m]] * q[:, parent[m]]
        ref = np.linalg.norm(v)
        for _ in range(2):
            c = q[:, :m].conj().T @ v
            v -= q[:, :m] @ c
            coef[:m, m] += c
        hm = np.linalg.norm(v)
        if ref == 0.0 or hm <= PIVOT_FLOOR * ref:
            singular = True
            break
        h[m] = hm
        q[:, m] = v / hm
        log_r[m] = log_r[parent[m]] + math.log(hm)
    return _ArnoldiFactor(q, log_r, h, coef, parent, axis, singular)


def matrix_log_abs_det2(basis: MultiIndexBasis, z: np.ndarray) -> float:
    """log|det(e_i(z_j))|^2 from the triangular factor of an Arnoldi QR."""
    z = z[canonical_order(z)]
    if _has_repeated_point(z):
        return -math.inf
    fac = _arnoldi(basis, z)
    if fac.singular:
        return -math.inf
    return float(2.0 * np.sum(fac.log_r))


def lu_log_abs_det2(basis: MultiIndexBasis, z: np.ndarray) -> float:
    """log|det(e_i(z_j))|^2 through a column-scaled pivoted LU factorization.

    Kept for comparison; it loses several digits once the monomial matrix is
    badly conditioned (random points, N beyond about 30).
    """
    z = z[canonical_order(z)]
    A, scale = _scaled_evaluation(basis, z)
    if scale is None:
        return -math.inf
    with warnings.catch_warnings():
        # exact zero pivots are reported below as -inf
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, _piv = scipy.linalg.lu_factor(A, check_finite=False)
    pivots = np.abs(np.diag(lu))
    top = pivots.max()
    if top == 0.0 or pivots.min() <= PIVOT_FLOOR * top:
        return -math.inf
    return float(2.0 * (np.sum(np.log(pivots)) + np.sum(np.log(scale))))


def log_abs_det2(basis: MultiIndexBasis, config, method: str = "auto") -> float:
    """log|D(z_1..z_N)|^2 for the evaluation matrix of ``basis`` at ``config``.

    ``method`` is ``"auto"`` (pairwise product for n=1, matrix otherwise),
    ``"pairwise"``, ``"matrix"`` (Arnoldi QR) or ``"lu"``.  Singular
    configurations give ``-inf``.
    """
    z = _as_points(config, basis.n)
    if len(z) != basis.size:
        raise SizeMismatchError(f"{len(z)} points for a basis of size {basis.size}")
    if method == "auto":
        method = "pairwise" if basis.n == 1 else "matrix"
    if method == "pairwise":
        if basis.n != 1:
            raise ValueError("the pairwise product formula only holds for n=1")
        return pairwise_log_abs_det2(z)
    if method == "matrix":
        return matrix_log_abs_det2(basis, z)
    if method == "lu":
        return lu_log_abs_det2(basis, z)
    raise ValueError(f"unknown method {method!r}")


def _pairwise_grad_complex(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex).ravel()
    d = z[:, None] - z[None, :]
    d2 = np.abs(d) ** 2
    np.fill_diagonal(d2, np.inf)
    if np.any(d2 == 0.0):
        raise SingularConfigurationError("coincident points")
    return np.sum(2.0 * d / d2, axis=1)


def _matrix_grad_complex(basis: MultiIndexBasis, z: np.ndarray) -> np.ndarray:
    if _has_repeated_point(z):
        raise SingularConfigurationError("coincident points")
    fac = _arnoldi(basis, z)
    if fac.singular:
        raise SingularConfigurationError("evaluation matrix is singular")
    q, size = fac.q, basis.size
    out = np.empty(z.shape, dtype=complex)
    for b in range(basis.n):
        # derivatives of the frozen orthonormal polynomials, same recurrence
        dq = np.zeros_like(q)
        for m in range(1, size):
            a, p = fac.axis[m], fac.parent[m]
            v = z[:, a] * dq[:, p] - dq[:, :m] @ fac.coef[:m, m]
            if a == b:
                v += q[:, p]
            dq[:, m] = v / fac.h[m]
        # Jacobi with Q^-1 = Q^H
        w = np.sum(np.conj(q) * dq, axis=1)
        out[:, b] = 2.0 * np.conj(w)
    return out


def grad_log_abs_det2_complex(basis: MultiIndexBasis, config, method: str = "auto") -> np.ndarray:
    """Gradient of log|D|^2 packed as d/dRe + i d/dIm, shape (N, n)."""
    z = _as_points(config, basis.n)
    if len(z) != basis.size:
        raise SizeMismatchError(f"{len(z)} points for a basis of size {basis.size}")
    if method == "auto":
        method = "pairwise" if basis.n == 1 else "matrix"
    if method == "pairwise":
        if basis.n != 1:
            raise ValueError("the pairwise formula only holds for n=1")
        return _pairwise_grad_complex(z)[:, None]
    if method == "matrix":
        return _matrix_grad_complex(basis, z)
    raise ValueError(f"unknown method {method!r}")


def grad_log_abs_det2(basis: MultiIndexBasis, config, method: str = "auto") -> np.ndarray:
    """Real gradient of log|D|^2, shape (N, 2n) ordered (re_1..re_n, im_1..im_n)."""
    g = grad_log_abs_det2_complex(basis, config, method)
    return np.concatenate([g.real, g.imag], axis=1)
