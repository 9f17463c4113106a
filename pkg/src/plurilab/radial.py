"""Radial potentials psi(s) in the variable s = log r^2 (n = 1).

For a radial subharmonic psi in the Lelong class, psi is convex in s with
slope m(s) = psi'(s) increasing from 0 to 1, and m(log r^2) is the
Monge-Ampere (normalized Laplacian) mass of the disc of radius r.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridError


@dataclass(frozen=True)
class RadialProfile:
    """Values psi on an increasing s grid together with node slopes m."""

    s: np.ndarray
    psi: np.ndarray
    m: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        if s.ndim != 1 or len(s) < 3 or np.any(np.diff(s) <= 0):
            raise GridError("s grid must be strictly increasing with at least 3 nodes")
        for name in ("s", "psi", "m"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != s.shape:
                raise GridError(f"{name} has shape {arr.shape}, expected {s.shape}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def mass(self) -> float:
        """Total Monge-Ampere mass carried by the grid."""
        return float(self.m[-1] - self.m[0])

    def cell_slopes(self) -> np.ndarray:
        return np.diff(self.psi) / np.diff(self.s)

    def node_mass(self) -> np.ndarray:
        """Mass at each node: jump of the piecewise-linear slope, with m=0 and m=1 outside."""
        slopes = np.concatenate([[self.m[0]], self.cell_slopes(), [self.m[-1]]])
        return np.diff(slopes)

    def __call__(self, s) -> np.ndarray:
        """psi at arbitrary s, extended linearly with the end slopes."""
        s = np.asarray(s, dtype=float)
        out = np.interp(s, self.s, self.psi)
        lo, hi = s < self.s[0], s > self.s[-1]
        out = np.where(lo, self.psi[0] + self.m[0] * (s - self.s[0]), out)
        out = np.where(hi, self.psi[-1] + self.m[-1] * (s - self.s[-1]), out)
        return out

    def of_z(self, z) -> np.ndarray:
        """psi as a function of complex points; the origin takes the left-end value."""
        r2 = np.abs(np.asarray(z, dtype=complex).ravel()) ** 2
        with np.errstate(divide="ignore"):
            s = np.log(r2)
        return self(np.where(np.isfinite(s), s, self.s[0]))

    def cdf_radius(self, r) -> np.ndarray:
        """Monge-Ampere mass of the disc of radius r, interpolated from node slopes."""
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            s = np.log(r * r)
        val = np.interp(s, self.s, self.m, left=self.m[0], right=self.m[-1])
        return np.clip(val, 0.0, 1.0)

    def support_radius(self, tol: float = 1e-8) -> float:
        """Smallest radius whose disc carries all but ``tol`` of the mass."""
        idx = np.flatnonzero(self.m >= self.m[-1] - tol)[0]
        return float(np.exp(0.5 * self.s[idx]))

    def rows(self):
        return zip(self.s.tolist(), self.psi.tolist(), self.m.tolist())


def node_slopes_from_values(s: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """Central-difference slopes with the boundary convention m(s_0)=0, m(s_M)=1."""
    m = np.empty_like(psi)
    m[1:-1] = (psi[2:] - psi[:-2]) / (s[2:] - s[:-2])
    m[0], m[-1] = 0.0, 1.0
    return np.clip(m, 0.0, 1.0)
