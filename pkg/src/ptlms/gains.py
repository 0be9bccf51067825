"""
Gain rules for the proportionate-type LMS family.

Each rule maps the current weight vector to a strictly positive per-tap gain
vector ``g`` (the diagonal of the gain matrix).  All functions broadcast over
leading axes, so a batch of weight vectors with shape ``(..., L)`` yields
gains of the same shape.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np


class Variant(str, enum.Enum):
    STANDARD_LMS = "StandardLMS"
    PLMS = "PLMS"
    IPLMS = "IPLMS"
    MU_LAW_PLMS = "MuLawPLMS"


@dataclass(frozen=True)
class GainRule:
    """Selected gain rule and its parameters.

    Parameters
    ----------
    variant : Variant or str
        One of ``StandardLMS``, ``PLMS``, ``IPLMS`` or ``MuLawPLMS``.
    rho : float
        Floor fraction applied to the largest activation.
    delta : float
        Start-up floor; keeps gains nonzero when all weights are zero.
    alpha : float
        IPLMS mixing constant in ``[-1, 1]``.
    delta_i : float
        IPLMS regulariser added to the l1 norm.
    epsilon : float
        mu-law compression constant.

    Parameters that do not apply to ``variant`` are stored but ignored.
    """

    variant: Variant = Variant.STANDARD_LMS
    rho: float = 0.01
    delta: float = 0.01
    alpha: float = 0.0
    delta_i: float = 0.01
    epsilon: float = 1000.0

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        for name in ("rho", "delta", "delta_i", "epsilon"):
            value = float(getattr(self, name))
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")
            object.__setattr__(self, name, value)
        alpha = float(self.alpha)
        if not -1.0 <= alpha <= 1.0:
            raise ValueError(f"alpha must lie in [-1, 1], got {alpha!r}")
        object.__setattr__(self, "alpha", alpha)

    @property
    def name(self) -> str:
        return self.variant.value

    @property
    def normalized(self) -> bool:
        """True for rules whose gains sum to the filter length."""
        return self.variant is not Variant.IPLMS


def activation(w_abs, rule: GainRule):
    """Per-tap activation ``F(|w|)`` used by the normalised rules.

    Examples
    --------
    >>> float(activation(0.5, GainRule("PLMS")))
    0.5
    >>> float(activation(7.0, GainRule("StandardLMS")))
    1.0
    """
    w_abs = np.asarray(w_abs, dtype=float)
    if np.any(w_abs < 0):
        raise ValueError("activation expects nonnegative magnitudes")
    v = rule.variant
    if v is Variant.STANDARD_LMS:
        return np.ones_like(w_abs)
    if v is Variant.PLMS:
        return w_abs.copy()
    if v is Variant.MU_LAW_PLMS:
        # normalised mu-law: zero at 0, one at |w| = 1
        return np.log1p(rule.epsilon * w_abs) / math.log1p(rule.epsilon)
    raise ValueError("IPLMS defines its gains directly and has no activation")


def gain_vector(w, rule: GainRule) -> np.ndarray:
    """Gain vector for weights ``w`` (shape ``(..., L)``)."""
    w = np.asarray(w, dtype=float)
    if w.ndim == 0 or w.shape[-1] == 0:
        raise ValueError("weight vector must have at least one tap")
    if not np.all(np.isfinite(w)):
        raise ValueError("weight vector contains non-finite entries")
    return _gains(w, rule)


def _gains(w: np.ndarray, rule: GainRule) -> np.ndarray:
    # hot path of the simulator: no validation
    L = w.shape[-1]
    w_abs = np.abs(w)

    if rule.variant is Variant.STANDARD_LMS:
        return np.ones_like(w_abs)

    if rule.variant is Variant.IPLMS:
        l1 = w_abs.sum(axis=-1, keepdims=True)
        return (1.0 - rule.alpha) / (2.0 * L) + 0.5 * (1.0 + rule.alpha) * w_abs / (l1 + rule.delta_i)

    if rule.variant is Variant.PLMS:
        act = w_abs
    else:
        act = activation(w_abs, rule)
    gamma_min = np.maximum(rule.delta, act.max(axis=-1, keepdims=True))
    gamma = np.maximum(rule.rho * gamma_min, act)
    return gamma / gamma.mean(axis=-1, keepdims=True)
