"""MCMC for the Gibbs ensembles and a Fekete point search.

Chains move in parameter space: angles on a circle, real coordinates on a
line or interval, and (re, im) pairs in the plane, ball or box.  The target
is log pi = -beta H + sum_i log(dV/dlambda)(z_i) in those coordinates.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .energy import EnsembleModel, determinantal_energy, hamiltonian_grad_complex, weighted_hamiltonian
from .errors import (
    AdmissibilityError,
    BadInitError,
    ConvergenceError,
    SearchFailureError,
    SingularConfigurationError,
    StepSizeError,
)
from .io import write_csv
from .polybasis import Configuration
from .weights import BaseMeasure, admissibility_check

TARGET_ACCEPT = {"mala": 0.574, "rwm": 0.234}
BURN_FRACTION = 0.2
MAX_KEPT = 10_000
MIN_ACCEPT = 0.05
# the cached energy is compared with a fresh evaluation this often
RECHECK_EVERY = 1000
INIT_WELL_DEPTH = 20.0


@dataclass(frozen=True)
class Schedule:
    """Inverse temperature as a function of the sweep (and of N for ramps).

    fixed: beta.  ramp: beta_N = beta * (1 + offset / N), which tends to beta.
    geometric: beta_t = beta0 * ratio**t, capped at beta_max.
    """

    kind: str = "fixed"
    beta: float = 1.0
    beta0: float = 1.0
    ratio: float = 1.01
    beta_max: float = math.inf
    offset: float = 0.0

    def __post_init__(self):
        if self.kind not in ("fixed", "ramp", "geometric"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.kind == "geometric" and not (self.ratio > 1 and self.beta0 > 0):
            raise ValueError("geometric annealing needs ratio > 1 and beta0 > 0")
        if self.kind != "geometric" and not self.beta > 0:
            raise ValueError("beta must be positive")

    @classmethod
    def fixed(cls, beta):
        return cls("fixed", beta=beta)

    @classmethod
    def ramp(cls, beta, offset):
        return cls("ramp", beta=beta, offset=offset)

    @classmethod
    def geometric(cls, beta0, ratio, beta_max=math.inf):
        return cls("geometric", beta0=beta0, ratio=ratio, beta_max=beta_max)

    @property
    def annealing(self) -> bool:
        return self.kind == "geometric"

    def beta_at(self, sweep: int, N: int) -> float:
        if self.kind == "fixed":
            return self.beta
        if self.kind == "ramp":
            return self.beta * (1.0 + self.offset / N)
        return min(self.beta0 * self.ratio**sweep, self.beta_max)


@dataclass(frozen=True)
class Carrier:
    """Where the particles live: circle, interval, line, disc, box or plane."""

    kind: str
    radius: float = 1.0
    low: float = -1.0
    high: float = 1.0

    @classmethod
    def from_measure(cls, base: BaseMeasure) -> "Carrier":
        c = base.carrier
        if c == "circle":
            return cls("circle", radius=base.radius)
        if c == "interval":
            return cls("interval", low=base.low, high=base.high)
        if c == "ball":
            return cls("disc", radius=base.radius)
        if c == "box":
            return cls("box", low=base.low, high=base.high)
        return cls(c)

    @property
    def real(self) -> bool:
        return self.kind in ("interval", "line")

    def project(self, p: np.ndarray) -> np.ndarray:
        if self.kind in ("interval", "box"):
            return np.clip(p, self.low, self.high)
        if self.kind == "disc":
            r = np.sqrt(np.sum(p**2, axis=1))
            f = np.where(r > self.radius, self.radius / np.where(r > 0, r, 1.0), 1.0)
            return p * f[:, None]
        return p

    def inside(self, p: np.ndarray) -> bool:
        if self.kind in ("interval", "box"):
            return bool(np.all((p >= self.low) & (p <= self.high)))
        if self.kind == "disc":
            return bool(np.all(np.sum(p**2, axis=1) <= self.radius**2))
        return True


class _Target:
    """log pi and its gradient in the carrier's parameters."""

    def __init__(self, model: EnsembleModel, carrier: Carrier, use_base: bool = True):
        self.model = model
        self.carrier = carrier
        self.n = model.n
        self.use_base = use_base

    def points(self, p: np.ndarray) -> np.ndarray:
        c = self.carrier
        if c.kind == "circle":
            return (c.radius * np.exp(1j * p[:, 0]))[:, None]
        if c.real:
            return p + 0j
        n = self.n
        return p[:, :n] + 1j * p[:, n:]

    def params(self, z: np.ndarray) -> np.ndarray:
        c = self.carrier
        if c.kind == "circle":
            return np.angle(z[:, :1])
        if c.real:
            return z.real.copy()
        return np.concatenate([z.real, z.imag], axis=1)

    def energy(self, p: np.ndarray) -> float:
        if not self.carrier.inside(p):
            return math.inf
        return weighted_hamiltonian(self.model, self.points(p))

    def log_base(self, z: np.ndarray) -> float:
        if not self.use_base or self.carrier.kind == "circle":
            return 0.0
        ld = self.model.base.log_density(z)
        return float(np.sum(np.sort(ld)))

    def grad_energy(self, p: np.ndarray, z: np.ndarray) -> np.ndarray:
        g = hamiltonian_grad_complex(self.model, z)
        return self._chain(g, z)

    def _chain(self, g: np.ndarray, z: np.ndarray) -> np.ndarray:
        c = self.carrier
        if c.kind == "circle":
            # dH/dtheta = Re(conj(g) * i z)
            return np.real(np.conj(g) * 1j * z)
        if c.real:
            return g.real
        return np.concatenate([g.real, g.imag], axis=1)

    def grad_log_base(self, z: np.ndarray) -> np.ndarray:
        if not self.use_base or self.carrier.kind == "circle":
            return 0.0
        return self._chain(self.model.base.grad_log_density_complex(z), z)

    def evaluate(self, p: np.ndarray, beta: float, need_grad: bool):
        """(H, log pi, grad log pi or None) at p."""
        if not self.carrier.inside(p):
            return math.inf, -math.inf, None
        z = self.points(p)
        H = weighted_hamiltonian(self.model, z)
        lb = self.log_base(z)
        if math.isinf(H) or lb == -math.inf:
            return H, -math.inf, None
        lp = -beta * H + lb
        if not need_grad:
            return H, lp, None
        try:
            g = -beta * self.grad_energy(p, z) + self.grad_log_base(z)
        except SingularConfigurationError:
            return H, lp, None
        if not np.all(np.isfinite(g)):
            return H, lp, None
        return H, lp, g


def _accept(log_ratio: float, rng: np.random.Generator) -> bool:
    if log_ratio >= 0:
        rng.random()  # keep the stream aligned whatever the outcome
        return True
    return bool(math.log(rng.random()) < log_ratio)


def _well_radius(model: EnsembleModel, depth: float = INIT_WELL_DEPTH) -> float:
    """Radius of the ball on which phi <= min phi + depth, along the first axis."""
    w = model.weight
    if w.kind == "indicator":
        return w.carrier[1]
    s = np.linspace(-20.0, 2 * math.log(1e4), 4001)
    e1 = np.zeros((len(s), model.n), dtype=complex)
    e1[:, 0] = np.exp(0.5 * s)
    vals = w(e1)
    phi_min = np.min(vals)
    ok = np.flatnonzero(vals <= phi_min + depth)
    return float(np.exp(0.5 * s[ok[-1]]))


def initial_configuration(model: EnsembleModel, carrier: Carrier, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. draws from dV truncated to the potential well; returns parameters."""
    N, n = model.size, model.n
    if carrier.kind == "circle":
        return rng.uniform(-math.pi, math.pi, size=(N, 1))
    if carrier.kind in ("interval", "box"):
        d = n if carrier.real else 2 * n
        return rng.uniform(carrier.low, carrier.high, size=(N, d))
    R = _well_radius(model)
    if carrier.kind == "disc":
        R = min(R, carrier.radius)
    base = model.base
    d = n if carrier.real else 2 * n
    out = np.empty((N, d))
    filled = 0
    can_draw = base.kind == "gaussian"
    attempts = 0
    while filled < N:
        attempts += 1
        if can_draw and attempts < 1000:
            z = base.sample(rng, N)
            p = z.real if carrier.real else np.concatenate([z.real, z.imag], axis=1)
        else:
            g = rng.normal(size=(N, d))
            g /= np.linalg.norm(g, axis=1, keepdims=True)
            p = g * R * rng.uniform(size=(N, 1)) ** (1.0 / d)
        keep = p[np.sum(p**2, axis=1) <= R * R]
        take = min(len(keep), N - filled)
        out[filled : filled + take] = keep[:take]
        filled += take
    return out


@dataclass
class ChainState:
    params: np.ndarray
    H: float
    logp: float
    grad: Optional[np.ndarray]
    step: float
    stream: int
    sweep: int = 0
    accepted: int = 0
    proposed: int = 0
    accepted_post: int = 0
    proposed_post: int = 0


@dataclass
class SampleSet:
    """Kept configurations, shape (chains, kept, N, n), with acceptance report."""

    samples: np.ndarray
    sweeps: np.ndarray
    acceptance: np.ndarray
    steps: np.ndarray
    method: str
    final_energy: np.ndarray = field(default=None)

    @property
    def chains(self) -> int:
        return self.samples.shape[0]

    def pooled(self) -> np.ndarray:
        """All particles of all kept configurations as one complex array (M, n)."""
        return self.samples.reshape(-1, self.samples.shape[-1])

    def rows(self):
        C, K, N, n = self.samples.shape
        for c in range(C):
            for t in range(K):
                for i in range(N):
                    z = self.samples[c, t, i]
                    yield [c, int(self.sweeps[t]), i, *z.real.tolist(), *z.imag.tolist()]

    def to_csv(self, path):
        n = self.samples.shape[-1]
        header = ["chain", "sweep", "particle"] + [f"re_{a + 1}" for a in range(n)] + [f"im_{a + 1}" for a in range(n)]
        return write_csv(path, header, self.rows())


def _mala_step(target: _Target, st: ChainState, beta: float, rng: np.random.Generator, method: str) -> bool:
    p, h = st.params, st.step
    xi = rng.standard_normal(p.shape)
    use_grad = method == "mala" and st.grad is not None
    if use_grad:
        mean = p + h * st.grad
        prop = mean + math.sqrt(2 * h) * xi
    else:
        prop = p + math.sqrt(2 * h) * xi
    H, lp, g = target.evaluate(prop, beta, need_grad=use_grad)
    if lp == -math.inf:
        rng.random()
        return False
    log_ratio = lp - st.logp
    if use_grad:
        if g is None:
            rng.random()
            return False
        back = p - prop - h * g
        fwd = prop - mean
        log_ratio += (np.sum(fwd * fwd) - np.sum(back * back)) / (4 * h)
    if _accept(log_ratio, rng):
        st.params, st.H, st.logp = prop, H, lp
        if use_grad:
            st.grad = g
        elif method == "mala":
            st.grad = target.evaluate(prop, beta, True)[2]
        return True
    return False


def _initial_step(model: EnsembleModel, beta: float, dim_params: int) -> float:
    return 0.1 / (max(beta, 1.0) * (2.0 + model.size)) / max(1.0, math.sqrt(dim_params) / 4)


def _run_one(model, target, schedule, sweeps, stream_seed, stream, method, step0, adapt_always):
    rng = np.random.default_rng(stream_seed)
    N = model.size
    burn = int(BURN_FRACTION * sweeps)
    thin = max(1, sweeps // MAX_KEPT)
    beta = schedule.beta_at(0, N)
    p0 = initial_configuration(model, target.carrier, rng)
    H, lp, g = target.evaluate(p0, beta, need_grad=method == "mala")
    if not math.isfinite(H) or lp == -math.inf:
        raise BadInitError("non-finite energy at the initial configuration")
    chosen = method
    if method == "mala" and g is None:
        chosen = "rwm"
    step = step0 if step0 is not None else _initial_step(model, beta, p0.size)
    st = ChainState(p0, H, lp, g, step, stream)
    target_acc = TARGET_ACCEPT[chosen]
    kept, kept_sweeps, energies = [], [], []
    for t in range(sweeps):
        new_beta = schedule.beta_at(t, N)
        if new_beta != beta:
            beta = new_beta
            st.H, st.logp, st.grad = target.evaluate(st.params, beta, need_grad=chosen == "mala")
        acc = _mala_step(target, st, beta, rng, chosen)
        st.sweep = t + 1
        st.proposed += 1
        st.accepted += acc
        if t < burn or adapt_always:
            # Robbins-Monro on log step, frozen after burn-in
            gain = 1.0 / (1.0 + t) ** 0.6
            st.step *= math.exp(gain * ((1.0 if acc else 0.0) - target_acc))
            if chosen == "mala":
                st.step = min(st.step, 1e6)
        else:
            st.proposed_post += 1
            st.accepted_post += acc
        if (t + 1) % RECHECK_EVERY == 0:
            fresh = target.energy(st.params)
            if abs(fresh - st.H) > 1e-10 * max(1.0, abs(fresh)):
                raise ConvergenceError(f"cached energy drifted: {st.H} vs {fresh}")
        if t >= burn and (t - burn) % thin == 0:
            kept.append(target.points(st.params))
            kept_sweeps.append(t)
            energies.append(st.H)
    if st.proposed_post and st.accepted_post / st.proposed_post < MIN_ACCEPT:
        raise StepSizeError(
            f"chain {stream}: acceptance {st.accepted_post / st.proposed_post:.3f} after adaptation"
        )
    rate = st.accepted_post / st.proposed_post if st.proposed_post else st.accepted / max(st.proposed, 1)
    return np.array(kept), np.array(kept_sweeps), rate, st.step, chosen, st.H


def _check_schedule(model: EnsembleModel, schedule: Schedule):
    if schedule.annealing:
        return
    beta = schedule.beta_at(0, model.size)
    verdict = admissibility_check(model.weight, model.base, beta, model.n)
    if not verdict.ok:
        raise AdmissibilityError(f"schedule beta={beta} is not admissible: {verdict.status}")


def run_chain(
    model: EnsembleModel,
    schedule: Schedule,
    sweeps: int,
    chains: int = 1,
    seed: int = 0,
    method: str = "mala",
    workers: int = 1,
    carrier: Optional[Carrier] = None,
    step0: Optional[float] = None,
) -> SampleSet:
    """Run independent chains and keep thinned post-burn-in configurations.

    Each chain draws from its own child of SeedSequence(seed), so the output
    is the same for any number of workers.  Annealing schedules keep adapting
    the step after burn-in, since they have no invariant law to preserve.
    """
    if method not in TARGET_ACCEPT:
        raise ValueError(f"unknown method {method!r}")
    if sweeps < 1 or chains < 1:
        raise ValueError("need at least one sweep and one chain")
    _check_schedule(model, schedule)
    carrier = carrier or Carrier.from_measure(model.base)
    target = _Target(model, carrier)
    seeds = np.random.SeedSequence(seed).spawn(chains)

    def job(c):
        return _run_one(model, target, schedule, sweeps, seeds[c], c, method, step0, schedule.annealing)

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(job, range(chains)))
    else:
        results = [job(c) for c in range(chains)]
    samples = np.stack([r[0] for r in results])
    methods = {r[4] for r in results}
    return SampleSet(
        samples=samples,
        sweeps=results[0][1],
        acceptance=np.array([r[2] for r in results]),
        steps=np.array([r[3] for r in results]),
        method="mala" if methods == {"mala"} else "rwm" if methods == {"rwm"} else "mixed",
        final_energy=np.array([r[5] for r in results]),
    )


def discrete_metropolis(log_weights, steps: int, seed: int = 0) -> np.ndarray:
    """Metropolis on the states 0..K-1 of a ring with symmetric +-1 proposals.

    Uses the same acceptance rule as the continuous chains; returns the path.
    """
    lw = np.asarray(log_weights, dtype=float)
    K = len(lw)
    rng = np.random.default_rng(seed)
    path = np.empty(steps + 1, dtype=int)
    x = 0
    path[0] = x
    for t in range(steps):
        y = (x + (1 if rng.random() < 0.5 else -1)) % K
        if _accept(lw[y] - lw[x], rng):
            x = y
        path[t + 1] = x
    return path


# ---------------------------------------------------------------------------
# Fekete search


@dataclass
class FeketeResult:
    config: Configuration
    energy: float
    weighted_energy: float
    history: list
    restarts: int


def _polish(target: _Target, p: np.ndarray, max_iter: int, history: list):
    """Projected gradient descent on H with backtracking; only improvements are accepted."""
    H = target.energy(p)
    t = 1e-2
    for _ in range(max_iter):
        z = target.points(p)
        try:
            g = target.grad_energy(p, z)
        except SingularConfigurationError:
            break
        improved = False
        while t > 1e-18:
            q = target.carrier.project(p - t * g)
            Hq = target.energy(q)
            if Hq < H:
                improved = True
                break
            t *= 0.5
        if not improved:
            break
        moved = np.max(np.abs(q - p))
        p, H = q, Hq
        history.append(H)
        t *= 2.0
        if moved < 1e-15:
            break
    return p, H


def _pair_moves(target: _Target, p: np.ndarray, rng: np.random.Generator, tries: int, scale: float, history: list):
    H = target.energy(p)
    N = len(p)
    for _ in range(tries):
        i, j = rng.choice(N, size=2, replace=False)
        q = p.copy()
        q[[i, j]] += scale * rng.standard_normal((2, p.shape[1]))
        q = target.carrier.project(q)
        Hq = target.energy(q)
        if Hq < H:
            p, H = q, Hq
            history.append(H)
    return p, H


def fekete_search(
    model: EnsembleModel,
    carrier: Carrier,
    anneal: Optional[Schedule] = None,
    restarts: int = 4,
    seed: int = 0,
    anneal_sweeps: int = 2000,
    polish_iter: int = 20000,
    pair_tries: int = 200,
) -> FeketeResult:
    """Approximate weighted Fekete points (maximizers of |D|^2 e^{-k sum phi}) on a carrier.

    Each restart runs annealed Metropolis-adjusted Langevin on H, then
    alternates projected-gradient polishing with random pair moves.
    """
    if carrier.kind not in ("circle", "interval", "disc", "box"):
        raise ValueError(f"Fekete search needs a compact carrier, got {carrier.kind}")
    anneal = anneal or Schedule.geometric(1.0, 1.005, 1e4)
    target = _Target(model, carrier, use_base=False)
    seeds = np.random.SeedSequence(seed).spawn(restarts)
    best = None
    for r in range(restarts):
        rng = np.random.default_rng(seeds[r])
        try:
            p = initial_configuration(model, carrier, rng)
            st_H, st_lp, st_g = target.evaluate(p, anneal.beta_at(0, model.size), True)
            if not math.isfinite(st_H):
                continue
            st = ChainState(p, st_H, st_lp, st_g, 1e-3, r)
            beta = anneal.beta_at(0, model.size)
            for t in range(anneal_sweeps):
                b = anneal.beta_at(t, model.size)
                if b != beta:
                    beta = b
                    st.H, st.logp, st.grad = target.evaluate(st.params, beta, True)
                acc = _mala_step(target, st, beta, rng, "mala" if st.grad is not None else "rwm")
                gain = 1.0 / (1.0 + t) ** 0.6
                st.step *= math.exp(gain * ((1.0 if acc else 0.0) - TARGET_ACCEPT["mala"]))
            history = [st.H]
            p, H = _polish(target, st.params, polish_iter, history)
            spacing = 1.0 / model.size
            for scale in (spacing * 0.1, spacing * 0.01):
                p, H = _pair_moves(target, p, rng, pair_tries, scale, history)
                p, H = _polish(target, p, polish_iter, history)
        except SingularConfigurationError:
            continue
        if not math.isfinite(H):
            continue
        if best is None or H < best[1]:
            best = (p, H, history)
    if best is None:
        raise SearchFailureError("every restart ended in a singular configuration")
    p, H, history = best
    z = target.points(p)
    mode = "real-line" if carrier.real else "complex"
    config = Configuration(z, mode).canonical()
    energy = determinantal_energy(model, z) if model.k > 0 else 0.0
    return FeketeResult(config, energy, H / model.size, history, restarts)
