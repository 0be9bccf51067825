"""
First- and second-order convergence theory for proportionate-type LMS.

Mean behaviour follows ``E w~(n+1) = (I - mu Gbar R) E w~(n)``.  Second-order
behaviour is the vectorised weighted-variance recursion

    E||w~(n+1)||^2_sigma = E||w~(n)||^2_{F sigma} + mu^2 sigma_v^2 gamma' sigma

with the ``L^2 x L^2`` matrix ``F = I - mu C + mu^2 D``.  Vectorisation is
column-major throughout, so ``vec(Q S P) = kron(P.T, Q) @ vec(S)``.

Dense ``L^2 x L^2`` algebra limits practical use to ``L`` of a few dozen.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.linalg as la

from .gains import GainRule, gain_vector

DEFAULT_MAX_L = 64


class InstabilityError(ArithmeticError):
    """The requested quantity does not exist because ``F`` is not stable."""


def vec(A) -> np.ndarray:
    return np.asarray(A).reshape(-1, order="F")


def unvec(a, L: int) -> np.ndarray:
    return np.asarray(a).reshape((L, L), order="F")


def commutation_matrix(L: int) -> np.ndarray:
    """Permutation ``K`` with ``K @ vec(A) == vec(A.T)`` for ``L x L`` A."""
    idx = np.arange(L * L).reshape((L, L), order="F")
    K = np.zeros((L * L, L * L))
    K[idx.T.reshape(-1, order="F"), idx.reshape(-1, order="F")] = 1.0
    return K


def build_pi(L: int, sigma_u2: float) -> np.ndarray:
    """Fourth-moment matrix ``E[(u u') kron (u u')]`` for white Gaussian ``u``.

    Uses the Gaussian identity ``sigma_u^4 (I + K + vec(I) vec(I)')``.

    >>> build_pi(1, 1.0)
    array([[3.]])
    """
    if L < 1:
        raise ValueError("L must be at least 1")
    if not sigma_u2 > 0:
        raise ValueError("sigma_u2 must be positive")
    vi = vec(np.eye(L))
    return sigma_u2 ** 2 * (np.eye(L * L) + commutation_matrix(L) + np.outer(vi, vi))


def empirical_pi(U) -> np.ndarray:
    """Sample estimate of ``E[(u u') kron (u u')]`` from regressors ``U`` (rows)."""
    U = np.atleast_2d(np.asarray(U, dtype=float))
    n, L = U.shape
    if n == 0:
        raise ValueError("need at least one regressor sample")
    # (u u') kron (u u') = z z' with z = kron(u, u)
    Z = np.einsum("ni,nj->nij", U, U).reshape(n, L * L)
    return Z.T @ Z / n


def estimate_gain_moments(w_opt, rule: GainRule, mode: str = "plugin", samples=None):
    """Moments ``(Gbar, E[G kron G])`` of the gain matrix.

    ``plugin`` evaluates the gains once at ``w_opt`` (the converged point).
    ``empirical`` averages over ``samples``, an ``(N, L)`` array of weight
    vectors, typically steady-state weights from a pilot simulation.
    """
    if mode == "plugin":
        g = gain_vector(w_opt, rule)
        return np.diag(g), np.diag(np.kron(g, g))
    if mode == "empirical":
        if samples is None or len(samples) == 0:
            raise ValueError("empirical mode needs a non-empty sample set")
        S = np.atleast_2d(np.asarray(samples, dtype=float))
        g = gain_vector(S, rule)
        L = S.shape[1]
        # diag of G kron G is kron(g, g); column-major vec index is i + j L
        gg = np.einsum("ni,nj->nji", g, g).reshape(len(S), L * L)
        return np.diag(_centred_mean(g)), np.diag(_centred_mean(gg))
    raise ValueError(f"unknown gain-moment mode {mode!r}")


def _centred_mean(X):
    # exact when all rows agree
    return X[0] + (X - X[0]).mean(axis=0)


@dataclass
class TheoryModel:
    """Analysis objects for one (system, rule, step size) configuration.

    ``C``, ``D``, ``F`` and ``gamma_vec`` are derived on construction.
    ``w_opt`` is only used to normalise MSD values.
    """

    R: np.ndarray
    G_bar: np.ndarray
    G_kron: np.ndarray
    Pi: np.ndarray
    mu: float
    sigma_v2: float
    w_opt: np.ndarray | None = None
    C: np.ndarray = field(init=False, repr=False)
    D: np.ndarray = field(init=False, repr=False)
    F: np.ndarray = field(init=False, repr=False)
    gamma_vec: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.R = np.atleast_2d(np.asarray(self.R, dtype=float))
        self.G_bar = np.atleast_2d(np.asarray(self.G_bar, dtype=float))
        self.G_kron = np.atleast_2d(np.asarray(self.G_kron, dtype=float))
        self.Pi = np.atleast_2d(np.asarray(self.Pi, dtype=float))
        L = self.R.shape[0]
        for name, shape in (("R", (L, L)), ("G_bar", (L, L)),
                            ("G_kron", (L * L, L * L)), ("Pi", (L * L, L * L))):
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")
        if self.mu < 0 or self.sigma_v2 < 0:
            raise ValueError("mu and sigma_v2 must be nonnegative")
        self.mu = float(self.mu)
        self.sigma_v2 = float(self.sigma_v2)
        I = np.eye(L)
        RG = self.R @ self.G_bar
        self.C = np.kron(I, RG) + np.kron(RG, I)
        self.D = self.Pi @ self.G_kron
        self.F = build_f_matrix(self)
        self.gamma_vec = noise_gamma(self)

    @classmethod
    def from_system(cls, w_opt, rule: GainRule, mu: float, sigma_u2: float = 1.0,
                    sigma_v2: float = 0.01, mode: str = "plugin", samples=None) -> "TheoryModel":
        """White Gaussian input model with gain moments from ``estimate_gain_moments``."""
        w_opt = np.asarray(w_opt, dtype=float)
        L = w_opt.size
        G_bar, G_kron = estimate_gain_moments(w_opt, rule, mode, samples)
        return cls(sigma_u2 * np.eye(L), G_bar, G_kron, build_pi(L, sigma_u2), mu, sigma_v2, w_opt)

    @property
    def L(self) -> int:
        return self.R.shape[0]

    def with_mu(self, mu: float) -> "TheoryModel":
        """Same model at another step size (``C`` and ``D`` are reused)."""
        new = object.__new__(TheoryModel)
        new.__dict__.update(self.__dict__)
        new.mu = float(mu)
        new.F = np.eye(self.L ** 2) - mu * self.C + mu ** 2 * self.D
        return new


def mean_recursion_matrix(model: TheoryModel) -> np.ndarray:
    """``B = I - mu Gbar R``; the mean weight error evolves as ``B^n w~(0)``."""
    return np.eye(model.L) - model.mu * model.G_bar @ model.R


def mean_stability_bound(model: TheoryModel, sharp: bool = False) -> float:
    """Largest step size for convergence in the mean.

    By default the norm-inequality bound ``2 / (max(gbar) lambda_max(R))``;
    with ``sharp=True`` the eigenvalue bound ``2 / lambda_max(Gbar R)``.
    """
    if sharp:
        lam = np.max(np.real(la.eigvals(model.G_bar @ model.R)))
        if not lam > 0:
            raise ValueError("Gbar R has no positive eigenvalue")
        return 2.0 / lam
    lam_r = np.max(la.eigvalsh(model.R))
    if not lam_r > 0:
        raise ValueError("degenerate input correlation: lambda_max(R) <= 0")
    return 2.0 / (np.max(np.diag(model.G_bar)) * lam_r)


def build_f_matrix(model: TheoryModel) -> np.ndarray:
    L = model.L
    I = np.eye(L)
    mu = model.mu
    return (np.eye(L * L)
            - mu * np.kron(I, model.R) @ np.kron(I, model.G_bar)
            - mu * np.kron(model.R, I) @ np.kron(model.G_bar, I)
            + mu ** 2 * model.Pi @ model.G_kron)


def noise_gamma(model: TheoryModel) -> np.ndarray:
    """``gamma = E[G kron G] vec(R) = vec(E[G u u' G])``."""
    return model.G_kron @ vec(model.R)


def spectral_radius(A) -> float:
    return float(np.max(np.abs(la.eigvals(A))))


def _symmetrised_d(model: TheoryModel):
    """``S D S^-1`` with ``S = sqrt(E[G kron G])`` when that makes F symmetric."""
    C = model.C
    gk = np.diag(model.G_kron)
    if not (np.allclose(C, np.diag(np.diag(C))) and np.allclose(model.G_kron, np.diag(gk))
            and np.allclose(model.Pi, model.Pi.T) and np.all(gk > 0)):
        return None
    s = np.sqrt(gk)
    return s[:, None] * model.Pi * s[None, :]


def f_spectral_radius(model: TheoryModel) -> float:
    Ds = _symmetrised_d(model)
    if Ds is None:
        return spectral_radius(model.F)
    Fs = np.diag(1.0 - model.mu * np.diag(model.C)) + model.mu ** 2 * Ds
    return float(np.max(np.abs(la.eigvalsh(Fs))))


def is_ms_stable(model: TheoryModel) -> bool:
    return f_spectral_radius(model) < 1.0


def transient_curve(model: TheoryModel, w0_error, n_iters: int) -> np.ndarray:
    """Predicted ``E||w~(n)||^2`` for ``n = 0 .. n_iters - 1``.

    Propagates ``sigma_n = F sigma_{n-1}`` from ``sigma_0 = vec(I)`` and
    accumulates the noise term; ``F^n`` is never formed.
    """
    w0 = np.asarray(w0_error, dtype=float)
    if w0.shape != (model.L,):
        raise ValueError("w0_error must have length L")
    if n_iters < 1:
        raise ValueError("n_iters must be at least 1")
    if not is_ms_stable(model):
        warnings.warn("F is not stable; the predicted curve grows without bound", RuntimeWarning)
    a = vec(np.outer(w0, w0))
    noise = model.mu ** 2 * model.sigma_v2
    sig = vec(np.eye(model.L))
    out = np.empty(n_iters)
    acc = 0.0
    for n in range(n_iters):
        out[n] = a @ sig + noise * acc
        acc += model.gamma_vec @ sig
        sig = model.F @ sig
    if not np.all(np.isfinite(out)):
        raise InstabilityError("predicted MSD overflowed; F is unstable")
    return out


def steady_state_msd(model: TheoryModel) -> float:
    """``mu^2 sigma_v^2 gamma' (I - F)^-1 vec(I)``."""
    if not is_ms_stable(model):
        raise InstabilityError(f"F is not stable at mu={model.mu:g}; no steady state exists")
    L = model.L
    try:
        x = la.solve(np.eye(L * L) - model.F, vec(np.eye(L)))
    except la.LinAlgError as exc:
        raise InstabilityError("I - F is singular") from exc
    return float(model.mu ** 2 * model.sigma_v2 * model.gamma_vec @ x)


def to_normalized_db(msd, w_opt) -> np.ndarray | float:
    """``10 log10(msd / ||w_opt||^2)``."""
    ref = float(np.dot(w_opt, w_opt))
    if ref <= 0:
        raise ValueError("normalisation needs a nonzero w_opt")
    out = 10.0 * np.log10(np.asarray(msd, dtype=float) / ref)
    return float(out) if np.ndim(out) == 0 else out


def steady_state_msd_db(model: TheoryModel) -> float:
    if model.w_opt is None:
        raise ValueError("model has no w_opt to normalise by")
    return to_normalized_db(steady_state_msd(model), model.w_opt)


class MSStabilityRange(NamedTuple):
    mu_max: float
    cd_bound: float  # 1 / lambda_max(C^-1 D)
    h_bound: float   # 1 / max real positive eigenvalue of H; inf if none


def _max_real_positive(eigs, tol=1e-9) -> float:
    eigs = np.asarray(eigs)
    scale = max(1.0, float(np.max(np.abs(eigs)))) if eigs.size else 1.0
    real = eigs[np.abs(eigs.imag) <= tol * scale].real
    real = real[real > tol * scale]
    return float(real.max()) if real.size else 0.0


def ms_stability_range(model: TheoryModel) -> MSStabilityRange:
    """Step-size range guaranteeing mean-square stability.

    ``min(1 / lambda_max(C^-1 D), 1 / max(lambda(H)))`` with
    ``H = [[C/2, -D/2], [I, 0]]``.  Only real positive eigenvalues bound the
    step size; a candidate with none is ``inf``.
    """
    C, D = model.C, model.D
    n = C.shape[0]
    if np.linalg.cond(C) > 1e14:
        raise np.linalg.LinAlgError("C is singular")
    lam_cd = _max_real_positive(la.eigvals(D, C))
    cd = 1.0 / lam_cd if lam_cd > 0 else math.inf
    H = np.block([[0.5 * C, -0.5 * D], [np.eye(n), np.zeros((n, n))]])
    lam_h = _max_real_positive(la.eigvals(H))
    hb = 1.0 / lam_h if lam_h > 0 else math.inf
    return MSStabilityRange(min(cd, hb), cd, hb)


def f_stability_boundary(model: TheoryModel, rtol: float = 1e-6) -> float:
    """Smallest step size at which ``F`` stops being stable, by bisection."""
    lo, hi = 0.0, mean_stability_bound(model, sharp=True)
    while is_ms_stable(model.with_mu(hi)):
        lo, hi = hi, 2 * hi
        if hi > 1e12:
            return math.inf
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if is_ms_stable(model.with_mu(mid)):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
