"""
Proportionate-type LMS weight update and the system-identification loop.

The update is ``w <- w + mu * g(w) * u * e`` with ``e = d - u @ w``; the
gain ``g`` comes from :mod:`ptlms.gains` and is evaluated on the pre-update
weights.  Unlike PNLMS there is no ``u' G u`` normalisation.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .gains import GainRule, _gains, gain_vector

#: Any weight magnitude above this ends a run as diverged.
DIVERGENCE_THRESHOLD = 1e12

#: Upper bound on iterations drawn per random-number call.
CHUNK = 1024

REGRESSOR_MODELS = ("tapped_delay_line", "independent")


class DivergenceError(RuntimeError):
    """Raised when a filter's weights blow up."""

    def __init__(self, iteration: int, message: str | None = None):
        self.iteration = int(iteration)
        super().__init__(message or f"filter diverged at iteration {self.iteration}")


@dataclass(frozen=True)
class SystemSpec:
    """Unknown system ``d(n) = u(n) @ w_opt + v(n)``."""

    w_opt: np.ndarray
    sigma_u2: float = 1.0
    sigma_v2: float = 0.01

    def __post_init__(self):
        w = np.array(self.w_opt, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("w_opt must be a non-empty 1-D vector")
        if not np.all(np.isfinite(w)):
            raise ValueError("w_opt must be finite")
        if not self.sigma_u2 > 0:
            raise ValueError("sigma_u2 must be positive")
        if not self.sigma_v2 >= 0:
            raise ValueError("sigma_v2 must be nonnegative")
        w.setflags(write=False)
        object.__setattr__(self, "w_opt", w)
        object.__setattr__(self, "sigma_u2", float(self.sigma_u2))
        object.__setattr__(self, "sigma_v2", float(self.sigma_v2))

    @property
    def L(self) -> int:
        return self.w_opt.size


@dataclass(frozen=True)
class FilterState:
    w: np.ndarray
    mu: float
    rule: GainRule = field(default_factory=GainRule)
    n: int = 0

    def __post_init__(self):
        w = np.array(self.w, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("w must be a non-empty 1-D vector")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)
        if not (math.isfinite(self.mu) and self.mu >= 0):
            raise ValueError("mu must be a nonnegative finite number")

    @classmethod
    def zeros(cls, L: int, mu: float, rule: GainRule | None = None) -> "FilterState":
        return cls(np.zeros(L), mu, rule or GainRule())

    @property
    def L(self) -> int:
        return self.w.size


def filter_error(state: FilterState, u, d: float) -> float:
    """A priori output error ``d - u @ w``."""
    u = np.asarray(u, dtype=float)
    if u.shape != state.w.shape:
        raise ValueError(f"regressor has shape {u.shape}, filter has {state.w.shape}")
    return float(d - u @ state.w)


def step(state: FilterState, u, d: float) -> FilterState:
    """Advance the filter by one sample and return the new state."""
    u = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u)):
        raise ValueError("regressor contains non-finite entries")
    e = filter_error(state, u, d)
    g = gain_vector(state.w, state.rule)
    w_new = state.w + state.mu * g * u * e
    if not np.all(np.isfinite(w_new)) or np.max(np.abs(w_new)) > DIVERGENCE_THRESHOLD:
        raise DivergenceError(state.n)
    return dataclasses.replace(state, w=w_new, n=state.n + 1)


class _Source:
    """Per-run input and noise streams.

    Input and noise come from separate child generators, so the values seen
    at iteration ``n`` do not depend on how the run is chunked.
    """

    def __init__(self, seed, L, sigma_u2, sigma_v2, regressor_model):
        if regressor_model not in REGRESSOR_MODELS:
            raise ValueError(f"unknown regressor model {regressor_model!r}")
        if isinstance(seed, np.random.SeedSequence):
            # spawn() mutates its receiver; work on a copy so a seed is reusable
            seed = np.random.SeedSequence(seed.entropy, spawn_key=seed.spawn_key,
                                          pool_size=seed.pool_size)
        else:
            seed = np.random.SeedSequence(seed)
        u_seed, v_seed = seed.spawn(2)
        self.u_rng = np.random.default_rng(u_seed)
        self.v_rng = np.random.default_rng(v_seed)
        self.L = L
        self.su = math.sqrt(sigma_u2)
        self.sv = math.sqrt(sigma_v2)
        self.model = regressor_model
        self.tail = None

    def inputs(self, size):
        """Independent mode: regressors ``(size, L)``.  Delay-line mode: the
        scalar stream ``x(n-L+1), ..., x(n+size-1)`` of length ``size+L-1``."""
        if self.model == "independent":
            return self.su * self.u_rng.standard_normal((size, self.L))
        fresh = self.su * self.u_rng.standard_normal(size if self.tail is not None else size + self.L - 1)
        x = fresh if self.tail is None else np.concatenate([self.tail, fresh])
        self.tail = x[size:]
        return x

    def noise(self, size):
        return self.sv * self.v_rng.standard_normal(size)


def _chunk_size(R, L):
    # bound the per-chunk draw to roughly 4M doubles
    return max(1, min(CHUNK, (1 << 22) // max(1, R * L)))


def simulate_batch(spec: SystemSpec, rule: GainRule, mu: float, n_iters: int, seeds,
                   regressor_model: str = "tapped_delay_line", return_weights: bool = False):
    """Run one independent identification per seed, vectorised over runs.

    Returns
    -------
    dev : ndarray, shape (n_runs, n_iters)
        Squared deviation ``||w_opt - w(n)||^2`` recorded before each update.
        Entries from the divergence index onward are NaN.
    diverged_at : ndarray of int, shape (n_runs,)
        Iteration at which each run diverged, ``-1`` if it did not.
    weights : ndarray, shape (n_runs, L)
        Final weights, only when ``return_weights`` is true.
    """
    if n_iters < 1:
        raise ValueError("n_iters must be at least 1")
    if not (math.isfinite(mu) and mu >= 0):
        raise ValueError("mu must be a nonnegative finite number")
    seeds = list(seeds)
    R, L = len(seeds), spec.L
    w_opt = spec.w_opt
    sources = [_Source(s, L, spec.sigma_u2, spec.sigma_v2, regressor_model) for s in seeds]

    W = np.zeros((R, L))
    dev = np.full((R, n_iters), np.nan)
    diverged_at = np.full(R, -1)
    alive = np.ones(R, dtype=bool)

    chunk = _chunk_size(R, L)
    delay_line = regressor_model == "tapped_delay_line"
    for start in range(0, n_iters, chunk):
        size = min(chunk, n_iters - start)
        X = np.stack([src.inputs(size) for src in sources])
        V = np.stack([src.noise(size) for src in sources], axis=1)  # (size, R)
        if delay_line:
            # reverse time so a forward window reads [x(n), x(n-1), ...]
            X = X[:, ::-1].copy()
            last = X.shape[1] - L
        for k in range(size):
            n = start + k
            u = X[:, last - k:last - k + L] if delay_line else X[:, k]
            err = w_opt - W
            dev[:, n] = np.einsum("ij,ij->i", err, err)
            e = V[k] + np.einsum("ij,ij->i", u, err)
            W = W + (mu * alive)[:, None] * _gains(W, rule) * u * e[:, None]
            bad = ~np.all(np.isfinite(W) & (np.abs(W) <= DIVERGENCE_THRESHOLD), axis=1)
            if bad.any():
                diverged_at[bad & alive] = n
                alive &= ~bad
                # dead runs are frozen at zero; their deviations stay NaN
                W[bad] = 0.0
    for r in np.flatnonzero(~alive):
        dev[r, diverged_at[r] + 1:] = np.nan
    if return_weights:
        return dev, diverged_at, W
    return dev, diverged_at


def run_identification(spec: SystemSpec, rule: GainRule, mu: float, n_iters: int, seed,
                       regressor_model: str = "tapped_delay_line") -> np.ndarray:
    """Squared-deviation sequence of a single identification run from ``w(0) = 0``."""
    dev, diverged_at = simulate_batch(spec, rule, mu, n_iters, [seed], regressor_model)
    if diverged_at[0] >= 0:
        raise DivergenceError(diverged_at[0])
    return dev[0]
