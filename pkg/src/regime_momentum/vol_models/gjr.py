"""One-step asymmetric conditional-variance recursion used as the allocation state."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .._validation import NumericalError


@dataclass(frozen=True)
class GjrStateParams:
    """``h' = omega + beta*h + (alpha + leverage*1{z<0}) * h * z**2``.

    A negative ``beta`` lets ``h'`` cross zero for small ``|z|``; such
    parameter sets are only accepted together with a positive ``floor``,
    which then bounds every step from below.
    """

    omega: float
    beta: float
    alpha: float
    leverage: float = 0.0
    floor: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.omega, self.beta, self.alpha, self.leverage)):
            raise ValueError("variance recursion parameters must be finite")
        if self.omega <= 0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        if self.alpha < 0 or self.leverage < 0:
            raise ValueError("alpha and leverage must be non-negative")
        if self.floor < 0:
            raise ValueError("floor must be non-negative")
        if self.beta < 0 and self.floor <= 0:
            raise ValueError(
                f"beta={self.beta} < 0 lets the variance turn negative; pass a positive floor"
            )

    @property
    def persistence(self):
        return self.beta + self.alpha + 0.5 * self.leverage

    def unconditional_variance(self):
        """Stationary mean of ``h`` or ``None`` when ``persistence >= 1``."""
        if self.persistence >= 1:
            return None
        return self.omega / (1.0 - self.persistence)

    def to_dict(self):
        return asdict(self)


def gjr_state_step(h, z, params):
    """Next-period conditional variance; broadcasts over ``h`` and ``z``."""
    h = np.asarray(h, dtype=float)
    if np.any(h <= 0):
        raise NumericalError("conditional variance must be positive")
    z = np.asarray(z, dtype=float)
    arch = params.alpha + params.leverage * (z < 0)
    out = params.omega + params.beta * h + arch * h * z * z
    if params.floor > 0:
        out = np.maximum(out, params.floor)
    if out.ndim == 0:
        return float(out)
    return out
