"""Weights phi, base measures dV, admissibility and radial weighted extremal functions.

Everything radial is expressed in s = log |z|^2.  A radial weight phi has
profile phihat(s) = phi(e^{s/2}), and the weighted extremal function is the
largest convex minorant of phihat whose slope stays in [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ClassificationError, GridError
from .radial import RadialProfile, node_slopes_from_values

WEIGHT_KINDS = ("quadratic", "half-quadratic", "fubini-study", "torus-log", "indicator", "custom-radial")
MEASURE_KINDS = ("lebesgue", "gaussian", "ball", "box", "interval", "arcsine", "circle", "radial-density")

# radii at which custom tails are classified, with the relative consistency band
TAIL_PROBES = (1e2, 1e4, 1e8)
TAIL_BAND = 0.01
MARGINS = (0.5, 0.1, 0.01)
# slack in log|z|^2 when testing membership of an indicator carrier
CARRIER_TOL = 1e-12


def _as_points(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    return z[:, None] if z.ndim == 1 else z


def _log_r2(r2: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(r2)


@dataclass(frozen=True)
class Weight:
    """A weight phi = scale * base(z) + shift.

    ``carrier`` is an (r_in, r_out) annulus for indicator weights (0 inside,
    +inf outside).  Custom radial weights carry a sampled profile on
    ``profile_s`` which is interpolated linearly; outside the grid the profile
    is held constant on the left and continued with ``tail_slope`` (or the
    last segment slope) on the right.
    """

    kind: str
    scale: float = 1.0
    shift: float = 0.0
    carrier: Optional[tuple] = None
    profile_s: Optional[np.ndarray] = field(default=None, repr=False)
    profile_values: Optional[np.ndarray] = field(default=None, repr=False)
    tail_slope: Optional[float] = None

    def __post_init__(self):
        if self.kind not in WEIGHT_KINDS:
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if self.kind == "indicator":
            if self.carrier is None:
                raise ValueError("indicator weight needs a carrier (r_in, r_out)")
            r_in, r_out = map(float, self.carrier)
            if not 0.0 <= r_in < r_out < math.inf:
                raise ValueError(f"bad carrier annulus {self.carrier}")
            object.__setattr__(self, "carrier", (r_in, r_out))
        if self.kind == "custom-radial":
            s = np.array(self.profile_s, dtype=float)
            v = np.array(self.profile_values, dtype=float)
            if s.ndim != 1 or s.shape != v.shape or len(s) < 2:
                raise GridError("custom profile needs matching 1d arrays s and values")
            if np.any(np.diff(s) <= 0):
                raise GridError("custom profile s values must be strictly increasing")
            if not np.all(np.isfinite(v)):
                raise GridError("custom profile values must be finite")
            s.setflags(write=False)
            v.setflags(write=False)
            object.__setattr__(self, "profile_s", s)
            object.__setattr__(self, "profile_values", v)

    # -- constructors --------------------------------------------------
    @classmethod
    def quadratic(cls, scale=1.0, shift=0.0):
        return cls("quadratic", scale, shift)

    @classmethod
    def half_quadratic(cls, scale=1.0, shift=0.0):
        return cls("half-quadratic", scale, shift)

    @classmethod
    def fubini_study(cls, scale=1.0, shift=0.0):
        return cls("fubini-study", scale, shift)

    @classmethod
    def torus_log(cls, scale=1.0, shift=0.0):
        return cls("torus-log", scale, shift)

    @classmethod
    def indicator(cls, r_out=1.0, r_in=0.0, shift=0.0):
        return cls("indicator", 1.0, shift, carrier=(r_in, r_out))

    @classmethod
    def custom_radial(cls, s, values, tail_slope=None, scale=1.0, shift=0.0):
        return cls("custom-radial", scale, shift, profile_s=s, profile_values=values, tail_slope=tail_slope)

    @classmethod
    def from_profile_file(cls, path, tail_slope=None, scale=1.0, shift=0.0):
        """Load a two-column text file (s, phihat(s))."""
        data = np.loadtxt(path, dtype=float, ndmin=2)
        if data.shape[1] != 2:
            raise GridError(f"{path}: expected two columns, got {data.shape[1]}")
        return cls.custom_radial(data[:, 0], data[:, 1], tail_slope, scale, shift)

    # -- properties ----------------------------------------------------
    @property
    def is_radial(self) -> bool:
        return True

    @property
    def growth_slope(self) -> float:
        """lim sup phi / log|z|^2 (numerically classified for custom profiles)."""
        if self.kind == "indicator":
            return math.inf
        if self.kind in ("quadratic", "half-quadratic"):
            return math.inf if self.scale > 0 else 0.0
        if self.kind in ("fubini-study", "torus-log"):
            return self.scale * 1.0
        return self.scale * _custom_tail_slope(self)

    # -- evaluation ----------------------------------------------------
    def _base_radial(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if self.kind == "quadratic":
            return np.exp(s)
        if self.kind == "half-quadratic":
            return 0.5 * np.exp(s)
        if self.kind == "fubini-study":
            return np.logaddexp(0.0, s)
        if self.kind == "torus-log":
            return np.maximum(s, 0.0)
        if self.kind == "indicator":
            lo, hi = (2 * math.log(r) if r > 0 else -math.inf for r in self.carrier)
            # points projected onto a circle carrier land within rounding of it
            tol = CARRIER_TOL
            return np.where((s >= lo - tol) & (s <= hi + tol), 0.0, math.inf)
        return _custom_eval(self, s)

    def radial(self, s) -> np.ndarray:
        """phihat(s) = phi at |z| = e^{s/2}; s = -inf is the origin."""
        base = self._base_radial(s)
        if self.kind == "indicator":
            return base + self.shift
        return self.scale * base + self.shift

    def __call__(self, z) -> np.ndarray:
        z = _as_points(z)
        if self.kind == "torus-log":
            r2 = np.abs(z) ** 2
            val = np.max(np.maximum(_log_r2(r2), 0.0), axis=1)
            return self.scale * val + self.shift
        r2 = np.sum(np.abs(z) ** 2, axis=1)
        if self.kind == "quadratic":
            return self.scale * r2 + self.shift
        if self.kind == "half-quadratic":
            return 0.5 * self.scale * r2 + self.shift
        if self.kind == "fubini-study":
            return self.scale * np.log1p(r2) + self.shift
        return self.radial(_log_r2(r2))

    def grad_complex(self, z) -> np.ndarray:
        """Gradient packed as d/dRe + i d/dIm per coordinate, shape (N, n).

        Infinite weights have no gradient; those entries are returned as NaN
        and it is up to the caller to reject such points.
        """
        z = _as_points(z)
        r2 = np.sum(np.abs(z) ** 2, axis=1)
        if self.kind == "quadratic":
            return 2.0 * self.scale * z
        if self.kind == "half-quadratic":
            return self.scale * z
        if self.kind == "fubini-study":
            return 2.0 * self.scale * z / (1.0 + r2)[:, None]
        if self.kind == "torus-log":
            a2 = np.abs(z) ** 2
            idx = np.argmax(a2, axis=1)
            out = np.zeros_like(z)
            rows = np.arange(len(z))
            top = a2[rows, idx]
            active = top > 1.0
            out[rows[active], idx[active]] = 2.0 * z[rows[active], idx[active]] / top[active]
            return self.scale * out
        if self.kind == "indicator":
            inside = np.isfinite(self(z))
            return np.where(inside[:, None], 0.0 + 0.0j, np.nan)
        # custom radial: central difference of the profile in s, then chain rule
        s = _log_r2(r2)
        h = 1e-6
        ss = np.where(np.isfinite(s), s, 0.0)
        dphi = (self.radial(ss + h) - self.radial(ss - h)) / (2 * h)
        safe = np.where(r2 > 0, r2, 1.0)
        coef = np.where(np.isfinite(s), dphi * 2.0 / safe, 0.0)
        return coef[:, None] * z

    def grad(self, z) -> np.ndarray:
        """Real gradient, shape (N, 2n) ordered (re..., im...)."""
        g = self.grad_complex(z)
        return np.concatenate([g.real, g.imag], axis=1)


def _custom_eval(w: Weight, s: np.ndarray) -> np.ndarray:
    ps, pv = w.profile_s, w.profile_values
    s = np.asarray(s, dtype=float)
    out = np.interp(s, ps, pv)
    if w.tail_slope is not None and math.isinf(w.tail_slope):
        right = pv[-1] + (pv[-1] - pv[-2]) / (ps[-1] - ps[-2]) * (s - ps[-1])
    else:
        slope = w.tail_slope if w.tail_slope is not None else (pv[-1] - pv[-2]) / (ps[-1] - ps[-2])
        right = pv[-1] + slope * (s - ps[-1])
    return np.where(s > ps[-1], right, out)


def _probe_slopes(fn: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    s = np.array([2.0 * math.log(r) for r in TAIL_PROBES])
    h = 1e-3
    with np.errstate(over="ignore", invalid="ignore"):
        return (fn(s + h) - fn(s - h)) / (2 * h)


def classify_tail(fn: Callable[[np.ndarray], np.ndarray]) -> float:
    """Asymptotic slope in s of a radial profile from the three probe radii.

    Slopes that agree within the band give that slope; slopes that keep
    growing past the band give +inf; anything else cannot be classified.
    """
    sl = _probe_slopes(fn)
    if not np.all(np.isfinite(sl)):
        return math.inf
    lo, hi = sl.min(), sl.max()
    if hi - lo <= TAIL_BAND * max(abs(hi), 1e-12):
        return float(sl[-1])
    if np.all(np.diff(sl) > 0) and sl[-1] > (1 + TAIL_BAND) * sl[-2] and sl[-1] > 1e3:
        return math.inf
    raise ClassificationError(f"tail slopes {sl.tolist()} are not consistent within {TAIL_BAND:.0%}")


def _custom_tail_slope(w: Weight) -> float:
    if w.tail_slope is not None:
        return float(w.tail_slope)
    if w.profile_s[-1] < 2.0 * math.log(TAIL_PROBES[-1]) + 1e-3:
        raise ClassificationError(
            "custom weight profile does not reach the tail probes and declares no tail slope"
        )
    return classify_tail(lambda s: _custom_eval(w, s))


@dataclass(frozen=True)
class BaseMeasure:
    """Reference measure dV on C^n (or on R for real-line models).

    ``kind`` selects the family: lebesgue, gaussian (parameter ``sigma``),
    uniform on a ball, box, interval or circle (``radius`` / ``low``, ``high``)
    or a radial density ``density(r)`` with respect to Lebesgue measure.
    ``probability`` normalizes compact and gaussian measures to mass one.

    The complex gaussian has density (pi sigma^2)^{-n} exp(-|z|^2/sigma^2)
    so each coordinate has E|z_i|^2 = sigma^2; on the real line it is the
    usual N(0, sigma^2).
    """

    kind: str
    n: int = 1
    real_line: bool = False
    sigma: float = 1.0
    radius: float = 1.0
    low: float = -1.0
    high: float = 1.0
    density: Optional[Callable] = field(default=None, compare=False, repr=False)
    density_tail_slope: Optional[float] = None
    probability: bool = True

    def __post_init__(self):
        if self.kind not in MEASURE_KINDS:
            raise ValueError(f"unknown measure kind {self.kind!r}")
        if self.kind in ("interval", "arcsine") and not self.real_line:
            object.__setattr__(self, "real_line", True)
        if self.kind == "radial-density" and self.density is None:
            raise ValueError("radial-density measure needs a density callable")
        if self.kind in ("gaussian",) and self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.kind in ("interval", "arcsine") and not self.low < self.high:
            raise ValueError("interval needs low < high")
        if self.kind in ("ball", "circle") and self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.kind == "lebesgue" and self.probability:
            object.__setattr__(self, "probability", False)

    # -- constructors --------------------------------------------------
    @classmethod
    def lebesgue(cls, n=1, real_line=False):
        return cls("lebesgue", n=n, real_line=real_line, probability=False)

    @classmethod
    def gaussian(cls, sigma=1.0, n=1, real_line=False):
        return cls("gaussian", n=n, real_line=real_line, sigma=sigma)

    @classmethod
    def ball(cls, radius=1.0, n=1, probability=True):
        return cls("ball", n=n, radius=radius, probability=probability)

    @classmethod
    def box(cls, low=-1.0, high=1.0, n=1, probability=True):
        return cls("box", n=n, low=low, high=high, probability=probability)

    @classmethod
    def interval(cls, low=-1.0, high=1.0, probability=True):
        return cls("interval", n=1, real_line=True, low=low, high=high, probability=probability)

    @classmethod
    def arcsine(cls, low=-1.0, high=1.0):
        """Equilibrium (Chebyshev) measure of the interval [low, high]."""
        return cls("arcsine", n=1, real_line=True, low=low, high=high)

    @classmethod
    def circle(cls, radius=1.0):
        return cls("circle", n=1, radius=radius)

    @classmethod
    def radial_density(cls, density, tail_slope=None, probability=True):
        return cls("radial-density", n=1, density=density, density_tail_slope=tail_slope, probability=probability)

    # -- geometry --------------------------------------------------------
    @property
    def carrier(self) -> str:
        """plane, line, interval, circle, ball or box; decides the sampler parametrization."""
        if self.kind == "circle":
            return "circle"
        if self.kind in ("interval", "arcsine"):
            return "interval"
        if self.real_line:
            return "line"
        if self.kind in ("ball", "box"):
            return self.kind
        return "plane"

    @property
    def is_compact(self) -> bool:
        return self.kind in ("ball", "box", "interval", "arcsine", "circle")

    @property
    def real_dim(self) -> int:
        if self.kind == "circle":
            return 1
        return self.n if self.real_line else 2 * self.n

    def _volume(self) -> float:
        if self.kind == "ball":
            d = 2 * self.n
            return math.pi ** (d / 2) / math.gamma(d / 2 + 1) * self.radius**d
        if self.kind == "box":
            return (self.high - self.low) ** self.real_dim
        if self.kind == "interval":
            return self.high - self.low
        if self.kind == "circle":
            return 2 * math.pi * self.radius
        return 1.0

    def contains(self, z) -> np.ndarray:
        z = _as_points(z)
        if self.kind == "ball":
            return np.sum(np.abs(z) ** 2, axis=1) <= self.radius**2 * (1 + CARRIER_TOL)
        if self.kind == "box":
            c = np.concatenate([z.real, z.imag], axis=1)
            return np.all((c >= self.low) & (c <= self.high), axis=1)
        if self.kind in ("interval", "arcsine"):
            x = z.real[:, 0]
            return (x >= self.low) & (x <= self.high) & (z.imag[:, 0] == 0)
        if self.kind == "circle":
            return np.isclose(np.abs(z[:, 0]), self.radius, rtol=1e-12, atol=0)
        if self.real_line:
            return np.all(z.imag == 0, axis=1)
        return np.ones(len(z), dtype=bool)

    def log_density(self, z) -> np.ndarray:
        """log of the density of dV: against Lebesgue measure on C^n (or R,
        or arc length on the circle).  -inf off the carrier."""
        z = _as_points(z)
        r2 = np.sum(np.abs(z) ** 2, axis=1)
        if self.kind == "lebesgue":
            out = np.zeros(len(z))
        elif self.kind == "gaussian":
            if self.real_line:
                x2 = np.sum(z.real**2, axis=1)
                out = -x2 / (2 * self.sigma**2) - 0.5 * self.n * math.log(2 * math.pi * self.sigma**2)
            else:
                out = -r2 / self.sigma**2 - self.n * math.log(math.pi * self.sigma**2)
        elif self.kind == "radial-density":
            with np.errstate(divide="ignore"):
                out = np.log(np.asarray(self.density(np.sqrt(r2)), dtype=float))
        elif self.kind == "arcsine":
            x = np.clip(z.real[:, 0], self.low, self.high)
            with np.errstate(divide="ignore"):
                out = -np.log(math.pi * np.sqrt((x - self.low) * (self.high - x)))
        else:
            norm = -math.log(self._volume()) if self.probability else 0.0
            out = np.full(len(z), norm)
        return np.where(self.contains(z), out, -math.inf)

    def grad_log_density_complex(self, z) -> np.ndarray:
        """Gradient of log density packed as d/dRe + i d/dIm; zero for uniform measures."""
        z = _as_points(z)
        if self.kind == "gaussian":
            if self.real_line:
                return -z.real / self.sigma**2 + 0j
            return -2.0 * z / self.sigma**2
        if self.kind == "radial-density":
            r = np.sqrt(np.sum(np.abs(z) ** 2, axis=1))
            h = 1e-6 * np.maximum(r, 1.0)
            with np.errstate(divide="ignore", invalid="ignore"):
                dl = (np.log(self.density(r + h)) - np.log(self.density(np.abs(r - h)))) / (2 * h)
            coef = np.where(r > 0, dl / np.where(r > 0, r, 1.0), 0.0)
            return coef[:, None] * z
        if self.kind == "arcsine":
            x = z.real
            with np.errstate(divide="ignore"):
                return -0.5 * (1.0 / (x - self.low) - 1.0 / (self.high - x)) + 0j
        return np.zeros_like(z)

    def radial_density(self, r) -> np.ndarray:
        """Density with respect to Lebesgue measure on C as a function of |z| (planar, n=1)."""
        if self.n != 1 or self.real_line or self.kind in ("circle", "box"):
            raise ValueError(f"{self.kind} measure has no planar radial density")
        r = np.asarray(r, dtype=float)
        flat = np.atleast_1d(r).astype(complex).ravel()
        return np.exp(self.log_density(flat)).reshape(r.shape)

    def radial_cdf(self, r) -> np.ndarray:
        """Mass of the closed disc of radius r (n=1, planar or circle)."""
        r = np.asarray(r, dtype=float)
        if self.kind == "circle":
            return np.where(r >= self.radius, 1.0, 0.0)
        if self.kind == "gaussian" and not self.real_line:
            return -np.expm1(-r * r / self.sigma**2)
        if self.kind == "ball" and self.probability:
            return np.clip((r / self.radius) ** 2, 0.0, 1.0)
        if self.kind == "radial-density":
            from scipy.integrate import quad

            def one(x):
                return quad(lambda t: 2 * math.pi * t * float(self.density(np.array([t]))[0]), 0, x, limit=200)[0]

            return np.vectorize(one)(r)
        raise ValueError(f"{self.kind} measure has no radial cdf")

    @property
    def neglog_slope(self) -> float:
        """Asymptotic slope of -log(dV/dlambda) against log|z|^2."""
        if self.kind == "lebesgue":
            return 0.0
        if self.kind in ("gaussian",) or self.is_compact:
            return math.inf
        if self.density_tail_slope is not None:
            return float(self.density_tail_slope)

        def neglog(s):
            with np.errstate(divide="ignore"):
                return -np.log(np.asarray(self.density(np.exp(0.5 * s)), dtype=float))

        return classify_tail(neglog)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """i.i.d. draws, complex array of shape (size, n)."""
        n = self.n
        if self.kind == "gaussian":
            if self.real_line:
                return rng.normal(scale=self.sigma, size=(size, n)) + 0j
            g = rng.normal(scale=self.sigma / math.sqrt(2), size=(size, 2 * n))
            return g[:, :n] + 1j * g[:, n:]
        if self.kind == "interval":
            return rng.uniform(self.low, self.high, size=(size, 1)) + 0j
        if self.kind == "arcsine":
            u = rng.uniform(size=(size, 1))
            return self.low + (self.high - self.low) * 0.5 * (1 - np.cos(math.pi * u)) + 0j
        if self.kind == "circle":
            return (self.radius * np.exp(2j * math.pi * rng.uniform(size=size)))[:, None]
        if self.kind == "box":
            c = rng.uniform(self.low, self.high, size=(size, self.real_dim))
            return c[:, :n] + 1j * c[:, n:] if not self.real_line else c + 0j
        if self.kind == "ball":
            d = 2 * n
            g = rng.normal(size=(size, d))
            g /= np.linalg.norm(g, axis=1, keepdims=True)
            g *= self.radius * rng.uniform(size=(size, 1)) ** (1.0 / d)
            return g[:, :n] + 1j * g[:, n:]
        raise ValueError(f"cannot draw samples from a {self.kind} measure")


@dataclass(frozen=True)
class AdmissibilityVerdict:
    status: str  # "ok", "fails-growth" or "fails-iterated-exponential"
    margin: Optional[float]
    effective_slope: float
    required_slope: float

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def admissibility_check(weight: Weight, base: BaseMeasure, beta: float, n: int = 1) -> AdmissibilityVerdict:
    """Compare the tail slope of phi - log(dV/dlambda)/beta with 1 + n/beta.

    The margin is the largest eps in (0.5, 0.1, 0.01) with a strict
    inequality slope > 1 + n/beta + eps.
    """
    if not beta > 0:
        raise ValueError(f"admissibility needs beta > 0, got {beta}")
    required = 1.0 + n / beta
    if weight.kind == "custom-radial" and weight.tail_slope is None:
        probes = weight.radial(np.array([2.0 * math.log(r) for r in TAIL_PROBES]))
        if not np.all(np.isfinite(probes)):
            return AdmissibilityVerdict("fails-iterated-exponential", None, math.inf, required)
    slope = weight.growth_slope + base.neglog_slope / beta
    for eps in MARGINS:
        if slope - required > eps:
            return AdmissibilityVerdict("ok", eps, slope, required)
    return AdmissibilityVerdict("fails-growth", None, slope, required)


# ---------------------------------------------------------------------------
# radial weighted extremal function


def _lower_hull(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Indices of the lower convex hull (monotone chain), x increasing."""
    hull: list[int] = []
    for i in range(len(x)):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # drop b if it lies on or above the chord a-i
            if (y[b] - y[a]) * (x[i] - x[a]) >= (y[i] - y[a]) * (x[b] - x[a]):
                hull.pop()
            else:
                break
        hull.append(i)
    return np.array(hull, dtype=int)


SLOPE_TOL = 1e-3


def constrained_envelope(s: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Largest convex function with slopes in [0, 1] lying below f on the grid.

    f may contain +inf (outside an indicator carrier).  Raises GridError when
    the minorant does not exist on the grid (unbounded below on the left or
    no slope-one tangent on the right).
    """
    s = np.asarray(s, dtype=float)
    f = np.asarray(f, dtype=float)
    fin = np.flatnonzero(np.isfinite(f))
    if len(fin) == 0:
        raise GridError("weight is +inf on the whole grid")
    if np.any(np.isnan(f)):
        raise GridError("weight has NaN values on the grid")
    xs, ys = s[fin], f[fin]
    i_lo = int(np.argmin(ys))
    g = xs - ys
    i_hi = int(np.argmax(g))
    last = len(s) - 1
    if i_lo == 0 and fin[0] == 0 and len(xs) > 1:
        if (ys[1] - ys[0]) / (xs[1] - xs[0]) > SLOPE_TOL:
            raise GridError("weight still decreases towards the left end of the grid (unbounded below, or grid too short)")
    if i_hi == len(xs) - 1 and fin[-1] == last and len(xs) > 1:
        if (ys[-1] - ys[-2]) / (xs[-1] - xs[-2]) < 1.0 - SLOPE_TOL:
            raise GridError("grid too short: the slope-one tangent does not appear")
    if i_hi < i_lo:
        # can only happen when the slope-one line is below the minimum level
        raise GridError("inconsistent weight profile: max(s - f) left of min f")
    hull = _lower_hull(xs[i_lo : i_hi + 1], ys[i_lo : i_hi + 1]) + i_lo
    psi = np.interp(s, xs[hull], ys[hull])
    psi = np.where(s < xs[i_lo], ys[i_lo], psi)
    psi = np.where(s > xs[i_hi], s - g[i_hi], psi)
    return psi


def weighted_extremal_radial(weight: Weight, s_grid) -> RadialProfile:
    """Radial weighted extremal function psi_phi as a profile in s = log r^2."""
    s = np.asarray(s_grid, dtype=float)
    if s.ndim != 1 or len(s) < 3 or np.any(np.diff(s) <= 0):
        raise GridError("s grid must be strictly increasing with at least 3 nodes")
    f = weight.radial(s)
    psi = constrained_envelope(s, f)
    return RadialProfile(s, psi, node_slopes_from_values(s, psi))


def orthogonality_defect(profile: RadialProfile, f, tol: float = 1e-8) -> float:
    """Largest node mass sitting where psi differs from phi by more than tol."""
    f = np.asarray(f, dtype=float)
    with np.errstate(invalid="ignore"):
        off = ~(np.abs(profile.psi - f) <= tol)
    mass = profile.node_mass()
    return float(np.max(np.where(off, np.abs(mass), 0.0), initial=0.0))
