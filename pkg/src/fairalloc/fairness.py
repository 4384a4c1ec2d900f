"""The alpha-fairness family and the price-of-fairness / price-of-efficiency ratios."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

NEG_INF = -math.inf

# alpha values this close to 1 take the log branch
LOG_WINDOW = 1e-9


@dataclass(frozen=True)
class FairnessParam:
    kind: str = "alpha"
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in ("alpha", "maxmin"):
            raise ValueError(f"unknown fairness kind {self.kind!r}")
        if self.kind == "maxmin":
            object.__setattr__(self, "value", math.inf)
        elif not (self.value >= 0 and math.isfinite(self.value)):
            raise ValueError(f"alpha must be finite and >= 0, got {self.value}")
        elif abs(self.value - 1.0) <= LOG_WINDOW:
            object.__setattr__(self, "value", 1.0)

    @classmethod
    def alpha(cls, value: float) -> "FairnessParam":
        return cls("alpha", float(value))

    @classmethod
    def maxmin(cls) -> "FairnessParam":
        return cls("maxmin")

    @classmethod
    def parse(cls, text) -> "FairnessParam":
        """``"inf"`` (or ``"maxmin"``) is max-min; anything else is an alpha value."""
        if isinstance(text, FairnessParam):
            return text
        t = str(text).strip().lower()
        if t in ("inf", "infinity", "maxmin", "max-min"):
            return cls.maxmin()
        try:
            v = float(t)
        except ValueError:
            raise ValueError(f"cannot parse fairness parameter {text!r}") from None
        if math.isinf(v) and v > 0:
            return cls.maxmin()
        return cls.alpha(v)

    @property
    def is_maxmin(self) -> bool:
        return self.kind == "maxmin"

    @property
    def is_log(self) -> bool:
        return self.kind == "alpha" and self.value == 1.0

    @property
    def needs_positive(self) -> bool:
        """True when a zero surplus sends the objective to -inf."""
        return self.is_maxmin or self.value >= 1.0

    def label(self) -> str:
        return "inf" if self.is_maxmin else repr(self.value)

    def __str__(self):
        return self.label()


def phi(s, f: FairnessParam):
    """Fairness objective of a surplus profile (or of each row of a 2-D array)."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("surplus profile has negative entries")
    out = _phi_unchecked(s, f)
    return float(out) if np.ndim(out) == 0 else out


def _phi_unchecked(s: np.ndarray, f: FairnessParam):
    if f.is_maxmin:
        return np.min(s, axis=-1)
    a = f.value
    if a == 0.0:
        return np.sum(s, axis=-1)
    zero = np.any(s <= 0, axis=-1)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        if f.is_log:
            terms = np.log(s)
        else:
            terms = np.power(s, 1.0 - a) / (1.0 - a)
        total = np.sum(terms, axis=-1)
    if a >= 1.0:
        total = np.where(zero, NEG_INF, total)
    return total


def phi_gradient(s, f: FairnessParam) -> np.ndarray:
    """Componentwise derivative ``s_i ** -alpha``."""
    if f.is_maxmin:
        raise ValueError("max-min objective is not differentiable")
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("surplus profile has negative entries")
    if f.value == 0.0:
        return np.ones_like(s)
    if f.value >= 1.0 and np.any(s == 0):
        raise ValueError("gradient undefined at zero surplus for alpha >= 1")
    with np.errstate(divide="ignore"):
        return np.power(s, -f.value)


def price_of_fairness(system_value: float, fair_total: float) -> float:
    """Relative loss of total surplus against the social-welfare optimum."""
    if not system_value > 0:
        raise ValueError(f"social-welfare total must be > 0, got {system_value}")
    return (system_value - fair_total) / system_value


def price_of_efficiency(maxmin_value: float, min_surplus_at_alpha: float) -> float:
    """Relative loss of the worst-off surplus against the max-min optimum."""
    if not maxmin_value > 0:
        raise ValueError(f"max-min value must be > 0, got {maxmin_value}")
    return (maxmin_value - min_surplus_at_alpha) / maxmin_value
