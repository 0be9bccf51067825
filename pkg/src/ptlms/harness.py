"""
Monte-Carlo system-identification experiments.

Builds sparse test systems, runs seeded ensembles of independent
identifications, and reduces them to normalised-MSD learning curves and
step-size sweeps that sit next to the theoretical predictions.
"""
from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import theory
from .filters import REGRESSOR_MODELS, DivergenceError, SystemSpec, simulate_batch
from .gains import GainRule

log = logging.getLogger(__name__)

#: Runs simulated together; bounds memory of the per-run deviation buffer.
RUN_BATCH = 256


class NotConvergedError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    L: int
    n_active: int
    mu: float
    rule: GainRule = field(default_factory=GainRule)
    sigma_u2: float = 1.0
    sigma_v2: float = 0.01
    n_iters: int = 1000
    n_runs: int = 200
    seed: int = 0
    regressor_model: str = "tapped_delay_line"

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("L must be at least 1")
        if not 1 <= self.n_active <= self.L:
            raise ValueError(f"n_active must lie in [1, L={self.L}], got {self.n_active}")
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if not self.sigma_u2 > 0 or not self.sigma_v2 >= 0:
            raise ValueError("sigma_u2 must be positive and sigma_v2 nonnegative")
        if self.n_iters < 1 or self.n_runs < 1:
            raise ValueError("n_iters and n_runs must be at least 1")
        if self.regressor_model not in REGRESSOR_MODELS:
            raise ValueError(f"regressor_model must be one of {REGRESSOR_MODELS}")

    def system(self, w_opt) -> SystemSpec:
        return SystemSpec(w_opt, self.sigma_u2, self.sigma_v2)


@dataclass
class LearningCurve:
    msd_db: np.ndarray
    n_runs_averaged: int
    diverged_runs: int = 0

    @property
    def n_iters(self) -> int:
        return len(self.msd_db)


def generate_sparse_system(L: int, n_active: int, seed) -> np.ndarray:
    """Length-``L`` vector with ``n_active`` standard-Gaussian taps at random positions."""
    if not 1 <= n_active <= L:
        raise ValueError(f"n_active must lie in [1, L={L}], got {n_active}")
    rng = np.random.default_rng(seed)
    pos = rng.choice(L, size=n_active, replace=False)
    w = np.zeros(L)
    while True:
        w[pos] = rng.standard_normal(n_active)
        if np.all(w[pos] != 0.0):
            return w


def run_seeds(seed, n_runs: int) -> list[np.random.SeedSequence]:
    """Per-run seeds derived from the master seed."""
    return np.random.SeedSequence(seed).spawn(n_runs)


def run_ensemble(config: ExperimentConfig, w_opt, mu: float | None = None) -> LearningCurve:
    """Average ``config.n_runs`` independent runs into a normalised-MSD curve.

    Diverged runs are left out of the average and counted.
    """
    mu = config.mu if mu is None else mu
    spec = config.system(w_opt)
    seeds = run_seeds(config.seed, config.n_runs)
    total = np.zeros(config.n_iters)
    kept = diverged = 0
    for start in range(0, len(seeds), RUN_BATCH):
        dev, diverged_at = simulate_batch(spec, config.rule, mu, config.n_iters,
                                          seeds[start:start + RUN_BATCH], config.regressor_model)
        ok = diverged_at < 0
        for row in dev[ok]:
            total += row
        kept += int(ok.sum())
        diverged += int((~ok).sum())
    if kept == 0:
        raise DivergenceError(-1, f"all {config.n_runs} runs diverged at mu={mu:g}")
    if diverged:
        log.warning("%d of %d runs diverged at mu=%g and were excluded", diverged, config.n_runs, mu)
    msd_db = theory.to_normalized_db(total / kept, spec.w_opt)
    return LearningCurve(msd_db, kept, diverged)


def empirical_steady_state_msd(curve: LearningCurve, tail_fraction: float = 0.1,
                               max_drift_db: float = 1.0, check: bool = True) -> float:
    """Mean of the last ``tail_fraction`` of the curve, in dB.

    With ``check`` the curve must be flat over its last quarter: a linear fit
    may not drift by more than ``max_drift_db`` across that stretch.
    """
    if not 0 < tail_fraction <= 1:
        raise ValueError("tail_fraction must lie in (0, 1]")
    y = np.asarray(curve.msd_db, dtype=float)
    if check and not is_converged(curve, max_drift_db):
        raise NotConvergedError(f"learning curve still drifts over its last quarter "
                                f"(more than {max_drift_db} dB)")
    k = max(1, int(round(tail_fraction * y.size)))
    return float(np.mean(y[-k:]))


def is_converged(curve: LearningCurve, max_drift_db: float = 1.0) -> bool:
    y = np.asarray(curve.msd_db, dtype=float)
    q = y[-max(2, y.size // 4):]
    if q.size < 2 or not np.all(np.isfinite(q)):
        return bool(q.size >= 1 and np.all(np.isfinite(q)))
    slope = np.polyfit(np.arange(q.size), q, 1)[0]
    return abs(slope * (q.size - 1)) <= max_drift_db


@dataclass(frozen=True)
class SweepRow:
    mu: float
    sim_msd_db: float
    theory_msd_db: float
    stable: bool
    diverged_runs: int = 0
    converged: bool = True


def theory_model(config: ExperimentConfig, w_opt, mu: float | None = None,
                 max_L: int = theory.DEFAULT_MAX_L) -> theory.TheoryModel:
    if config.L > max_L:
        raise ValueError(f"L={config.L} exceeds the theory size cap of {max_L}; use simulation only")
    return theory.TheoryModel.from_system(w_opt, config.rule, config.mu if mu is None else mu,
                                          config.sigma_u2, config.sigma_v2)


def sweep_mu(base: ExperimentConfig, mu_values, w_opt, tail_fraction: float = 0.1,
             n_iters_mu_product: float = 0.0, max_L: int = theory.DEFAULT_MAX_L) -> list[SweepRow]:
    """Simulated and predicted steady-state normalised MSD for each step size.

    ``n_iters_mu_product`` lengthens runs at small step sizes: each run uses
    ``max(base.n_iters, ceil(n_iters_mu_product / mu))`` iterations.
    """
    mu_values = [float(m) for m in mu_values]
    if any(not m > 0 for m in mu_values):
        raise ValueError("step sizes must be positive")
    if not mu_values:
        return []
    model = theory_model(base, w_opt, mu_values[0], max_L)
    rows = []
    for mu in mu_values:
        m = model.with_mu(mu)
        th_stable = theory.is_ms_stable(m)
        th_db = theory.steady_state_msd_db(m) if th_stable else math.nan
        n_iters = base.n_iters
        if n_iters_mu_product > 0:
            n_iters = max(n_iters, math.ceil(n_iters_mu_product / mu))
        cfg = dataclasses.replace(base, n_iters=n_iters)
        try:
            curve = run_ensemble(cfg, w_opt, mu)
        except DivergenceError:
            rows.append(SweepRow(mu, math.nan, th_db, False, base.n_runs, False))
            continue
        converged = is_converged(curve)
        if not converged:
            log.warning("learning curve at mu=%g has not settled after %d iterations", mu, n_iters)
        sim_db = empirical_steady_state_msd(curve, tail_fraction, check=False)
        stable = th_stable and curve.diverged_runs == 0
        rows.append(SweepRow(mu, sim_db, th_db, stable, curve.diverged_runs, converged))
    return rows


def matched_step_size(config: ExperimentConfig, w_opt, target_db: float, mu0: float | None = None,
                      tol_db: float = 0.25, max_rounds: int = 4, tail_fraction: float = 0.1):
    """Step size whose simulated plateau lands within ``tol_db`` of ``target_db``.

    Relies on the plateau scaling roughly linearly with ``mu``.
    Returns ``(mu, curve)``.
    """
    mu = config.mu if mu0 is None else mu0
    for round_ in range(max_rounds):
        curve = run_ensemble(config, w_opt, mu)
        level = empirical_steady_state_msd(curve, tail_fraction, check=False)
        if abs(level - target_db) <= tol_db:
            return mu, curve
        next_mu = mu * 10 ** ((target_db - level) / 10)
        if round_ == max_rounds - 1:
            break
        mu = next_mu
    return mu, curve
