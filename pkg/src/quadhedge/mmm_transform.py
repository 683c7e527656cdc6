"""Change of measure to the minimal (here also variance-optimal) martingale measure.

For an exponential Levy model the measure change multiplies the Levy measure by
``1 - c0 (e^z - 1)`` with the constant ``c0 = mu^S / (sigma^2 + Gamma)`` and
shifts the Brownian drift by ``-c0 sigma^2``.  Because ``e^z nu(dz)`` is again
a member of the same jump family (VG: decays ``G+1, M-1``; Gaussian jumps: a
tilted normal), the transformed measure is the sum of two components of the
original family with weights ``1 + c0`` and ``-c0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import MeasurePositivityError
from .levy_model import LevyModel, _check_strip, levy_moments, validate

__all__ = ["MMMTransform", "char_exponent_Pstar", "gamma_hat"]


@dataclass(frozen=True)
class MMMTransform:
    base: LevyModel
    mu_S: float
    Gamma: float
    denom: float
    c0: float
    jumps_star: tuple

    @classmethod
    def from_model(cls, model: LevyModel) -> "MMMTransform":
        report = validate(model)
        if not report.ok:
            names = ", ".join(v.name for v in report.violations)
            raise MeasurePositivityError(
                f"model fails the standing assumptions ({names}); the minimal measure is not "
                "an equivalent probability measure")
        mom = levy_moments(model)
        c0 = mom.mu_S / mom.denom
        star = []
        for j in model.jumps:
            if 1.0 + c0 != 0.0:
                star.append(j.scale(1.0 + c0))
            if c0 != 0.0:
                star.append(j.tilt().scale(-c0))
        return cls(model, mom.mu_S, mom.Gamma, mom.denom, c0, tuple(star))

    @property
    def sigma(self):
        return self.base.sigma

    def density_factor(self, z):
        """d nu* / d nu at jump size ``z``."""
        return 1.0 - self.c0 * np.expm1(np.asarray(z, dtype=float))

    @property
    def strip_star(self):
        lo, hi = -math.inf, math.inf
        for j in self.jumps_star:
            lo, hi = max(lo, j.strip[0]), min(hi, j.strip[1])
        return lo, hi

    @property
    def gamma_hat_strip(self):
        lo, hi = -math.inf, math.inf
        for j in self.base.jumps:
            a, b = j.gamma_hat_strip()
            lo, hi = max(lo, a), min(hi, b)
        return lo, hi

    def drift_star(self):
        """Drift of log S under P* in the ``int (e^{wz}-1) nu*`` form."""
        return -0.5 * self.sigma ** 2 - sum(float(np.real(j.laplace(1.0))) for j in self.jumps_star)

    def to_dict(self):
        return {"mu_S": self.mu_S, "Gamma": self.Gamma, "denom": self.denom, "c0": self.c0}


def char_exponent_Pstar(tr: MMMTransform, w):
    """``psi*(w)`` with ``E*[(S_T/S_t)^w | F_t] = exp((T-t) psi*(w))``.

    The drift is solved from ``psi*(1) = 0``.
    """
    w = np.asarray(w, dtype=complex)
    _check_strip(tr.strip_star, w, "char_exponent_Pstar")
    s2 = tr.sigma ** 2
    out = 0.5 * s2 * w * (w - 1.0)
    for j in tr.jumps_star:
        out = out + (j.laplace(w) - w * j.laplace(1.0))
    return out


def gamma_hat(tr: MMMTransform, w):
    """``int (e^{wz} - 1)(e^z - 1) nu(dz)`` under the original measure."""
    w = np.asarray(w, dtype=complex)
    _check_strip(tr.gamma_hat_strip, w, "gamma_hat")
    out = np.zeros_like(w)
    for j in tr.base.jumps:
        out = out + j.gamma_hat(w)
    return out
