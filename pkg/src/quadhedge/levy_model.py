"""Exponential Levy model families.

``log(S_t / S_0) = mu_log * t + sigma * W_t + (compensated jumps)`` with a
Levy measure built from one or more jump components.  Each component knows its
cumulant-type integrals in closed form::

    laplace(a)   = int (e^{az} - 1) nu(dz)
    mean()       = int z nu(dz)
    gamma_hat(w) = int (e^{wz} - 1)(e^z - 1) nu(dz)

Everything downstream (moments, exponents under both measures, the Fourier
kernels) is assembled from these three.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Union

import numpy as np

from .errors import MomentDivergenceError, StripError

__all__ = [
    "VGJumps",
    "GaussianJumps",
    "VarianceGamma",
    "JumpDiffusion",
    "PureDiffusion",
    "LevyModel",
    "LevyMoments",
    "Violation",
    "ValidationReport",
    "validate",
    "levy_moments",
    "char_exponent_P",
    "cgm_to_vg",
    "vg_to_cgm",
    "model_from_dict",
    "model_to_dict",
]


# --------------------------------------------------------------------------- #
# Jump components
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class VGJumps:
    """Levy density ``C e^{-G|z|}/|z|`` for z < 0 and ``C e^{-Mz}/z`` for z > 0."""

    C: float
    G: float
    M: float

    @property
    def strip(self):
        return (-self.G, self.M)

    def laplace(self, a):
        a = np.asarray(a)
        return -self.C * (np.log1p(-a / self.M) + np.log1p(a / self.G))

    def mean(self):
        return self.C * (1.0 / self.M - 1.0 / self.G)

    def gamma_hat(self, w):
        # (M-w)(M-1)/(M(M-1-w)) = 1 + w/(M(M-1-w)); same on the G side.
        w = np.asarray(w)
        M, G = self.M, self.G
        return self.C * (np.log1p(w / (M * (M - 1.0 - w))) + np.log1p(w / (G * (G + 1.0 + w))))

    def gamma_hat_strip(self):
        return (-self.G, self.M - 1.0)

    def tilt(self):
        """The measure ``e^z nu(dz)``."""
        return VGJumps(self.C, self.G + 1.0, self.M - 1.0)

    def scale(self, c):
        return VGJumps(c * self.C, self.G, self.M)

    def density(self, z):
        z = np.asarray(z, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            out = np.where(z > 0, self.C * np.exp(-self.M * z) / z,
                           self.C * np.exp(-self.G * np.abs(z)) / np.abs(z))
        return np.where(z == 0, np.inf, out)

    def support(self):
        return (-math.inf, math.inf)

    def tail_bounds(self, growth=2.0, tol_exp=40.0):
        """Finite window carrying all but ~e^-40 of ``e^{growth z} nu(dz)``."""
        return (-tol_exp / self.G, tol_exp / max(self.M - growth, 0.5))

    def quadrature(self, n=64):
        """Nodes/weights for ``int f(z) nu(dz)`` with f(0) = 0 and f smooth off 0.

        Gauss-Laguerre on each half line in the decay variable, so the
        ``1/|z|`` singularity is absorbed into ``f(z)/|z|``.
        """
        x, wl = np.polynomial.laguerre.laggauss(n)
        zp = x / self.M
        zn = -x / self.G
        wp = self.C * wl / x
        wn = self.C * wl / x
        return np.concatenate([zn[::-1], zp]), np.concatenate([wn[::-1], wp])

    def fourth_moment_finite(self):
        return self.M > 4.0

    def sample(self, dt, size, rng):
        kappa, m, delta = cgm_to_vg(self.C, self.G, self.M)
        g = rng.gamma(dt / kappa, kappa, size=size)
        return m * g + delta * np.sqrt(g) * rng.standard_normal(size)


@dataclass(frozen=True)
class GaussianJumps:
    """Compound Poisson jumps: ``rate * N(mean, sd^2)`` as a Levy measure."""

    rate: float
    jump_mean: float
    jump_sd: float

    @property
    def strip(self):
        return (-math.inf, math.inf)

    def laplace(self, a):
        a = np.asarray(a)
        return self.rate * np.expm1(a * self.jump_mean + 0.5 * a * a * self.jump_sd ** 2)

    def mean(self):
        return self.rate * self.jump_mean

    def gamma_hat(self, w):
        w = np.asarray(w)
        return self.laplace(w + 1.0) - self.laplace(w) - self.laplace(1.0)

    def gamma_hat_strip(self):
        return (-math.inf, math.inf)

    def tilt(self):
        m, s = self.jump_mean, self.jump_sd
        return GaussianJumps(self.rate * math.exp(m + 0.5 * s * s), m + s * s, s)

    def scale(self, c):
        return GaussianJumps(c * self.rate, self.jump_mean, self.jump_sd)

    def density(self, z):
        z = np.asarray(z, dtype=float)
        s = self.jump_sd
        return self.rate * np.exp(-0.5 * ((z - self.jump_mean) / s) ** 2) / (s * math.sqrt(2 * math.pi))

    def support(self):
        return (-math.inf, math.inf)

    def tail_bounds(self, growth=2.0, tol_exp=40.0):
        s = self.jump_sd
        k = math.sqrt(2 * tol_exp)
        return (self.jump_mean - k * s, self.jump_mean + k * s + growth * s * s)

    def quadrature(self, n=64):
        x, wh = np.polynomial.hermite.hermgauss(n)
        z = self.jump_mean + math.sqrt(2.0) * self.jump_sd * x
        return z, self.rate * wh / math.sqrt(math.pi)

    def fourth_moment_finite(self):
        return True

    def sample(self, dt, size, rng):
        n = rng.poisson(self.rate * dt, size=size)
        return n * self.jump_mean + self.jump_sd * np.sqrt(n) * rng.standard_normal(size)


JumpComponent = Union[VGJumps, GaussianJumps]


def cgm_to_vg(C, G, M):
    """(C, G, M) -> (kappa, m, delta) for ``m*Gamma_t + delta*B(Gamma_t)``."""
    if not (C > 0 and G > 0 and M > 0):
        raise ValueError(f"VG parameters must be positive, got C={C}, G={G}, M={M}")
    kappa = 1.0 / C
    delta = math.sqrt(2.0 * C / (G * M))
    m = C * (G - M) / (G * M)
    return kappa, m, delta


def vg_to_cgm(kappa, m, delta):
    if not (kappa > 0 and delta > 0):
        raise ValueError(f"need kappa > 0 and delta > 0, got kappa={kappa}, delta={delta}")
    root = math.sqrt(m * m + 2.0 * delta * delta / kappa)
    d2 = delta * delta
    return 1.0 / kappa, (root + m) / d2, (root - m) / d2


# --------------------------------------------------------------------------- #
# Model variants
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class VarianceGamma:
    C: float
    G: float
    M: float

    name = "VarianceGamma"
    sigma = 0.0

    def __post_init__(self):
        if not (self.C > 0 and self.G > 0 and self.M > 0):
            raise ValueError(f"VarianceGamma needs C, G, M > 0, got {self}")

    def jumps(self):
        return (VGJumps(self.C, self.G, self.M),)


@dataclass(frozen=True)
class JumpDiffusion:
    sigma: float
    jump_rate: float
    jump_mean: float
    jump_sd: float

    name = "JumpDiffusion"

    def __post_init__(self):
        if self.sigma < 0 or self.jump_rate < 0 or self.jump_sd <= 0:
            raise ValueError(f"JumpDiffusion needs sigma >= 0, jump_rate >= 0, jump_sd > 0, got {self}")

    def jumps(self):
        if self.jump_rate == 0:
            return ()
        return (GaussianJumps(self.jump_rate, self.jump_mean, self.jump_sd),)


@dataclass(frozen=True)
class PureDiffusion:
    sigma: float

    name = "PureDiffusion"

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"PureDiffusion needs sigma > 0, got {self.sigma}")

    def jumps(self):
        return ()


Variant = Union[VarianceGamma, JumpDiffusion, PureDiffusion]


@dataclass(frozen=True)
class LevyModel:
    """An exponential Levy underlier.

    ``mu_log`` is the drift of ``log(S/S_0)`` in the compensated representation.
    Left as ``None`` it is set to ``int z nu(dz)``, i.e. the log-price is the raw
    sum of jumps plus ``sigma W`` with no further drift (for VG this is the
    time-changed Brownian motion ``m Gamma_t + delta B(Gamma_t)`` itself).
    """

    variant: Variant
    mu_log: float | None = None
    S0: float = 1.0
    T: float = 1.0
    jumps: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.S0 > 0:
            raise ValueError(f"S0 must be positive, got {self.S0}")
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T}")
        jumps = tuple(self.variant.jumps())
        object.__setattr__(self, "jumps", jumps)
        if self.mu_log is None:
            object.__setattr__(self, "mu_log", float(sum(j.mean() for j in jumps)))

    @property
    def sigma(self):
        return float(self.variant.sigma)

    @property
    def strip(self):
        lo, hi = -math.inf, math.inf
        for j in self.jumps:
            lo, hi = max(lo, j.strip[0]), min(hi, j.strip[1])
        return lo, hi

    def drift_correction(self):
        """``mu^S - mu_log = sigma^2/2 + int (e^z - 1 - z) nu(dz)``."""
        return 0.5 * self.sigma ** 2 + sum(float(j.laplace(1.0)) - j.mean() for j in self.jumps)

    def with_martingale_drift(self):
        """Copy with ``mu^S == 0`` exactly (S is already a P-martingale)."""
        return replace(self, mu_log=-self.drift_correction())

    def with_mu_S(self, mu_S):
        """Copy whose stock drift rate ``mu^S`` equals ``mu_S``."""
        return replace(self, mu_log=mu_S - self.drift_correction())


@dataclass(frozen=True)
class LevyMoments:
    mu_S: float
    Gamma: float
    denom: float


@dataclass(frozen=True)
class Violation:
    name: str
    quantity: float | None
    message: str


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    epsilon: float | None
    violations: tuple = ()

    def to_dict(self):
        return {
            "ok": self.ok,
            "epsilon": self.epsilon,
            "violations": [asdict(v) for v in self.violations],
        }


def _check_moments(model: LevyModel, order: int):
    for j in model.jumps:
        if isinstance(j, VGJumps) and not j.M > order:
            raise MomentDivergenceError(
                f"int (e^z-1)^{order} nu(dz) diverges for M={j.M} (needs M > {order})")


def levy_moments(model: LevyModel) -> LevyMoments:
    """Stock drift rate ``mu^S``, jump variance rate ``Gamma`` and ``sigma^2 + Gamma``."""
    _check_moments(model, 2)
    mu_S = model.mu_log + model.drift_correction()
    Gamma = float(sum(float(np.real(j.gamma_hat(1.0))) for j in model.jumps))
    return LevyMoments(mu_S=float(mu_S), Gamma=Gamma, denom=model.sigma ** 2 + Gamma)


def _check_strip(interval, w, what):
    re = np.real(np.asarray(w))
    lo, hi = interval
    bad = (re <= lo) | (re >= hi)
    if np.any(bad):
        raise StripError(what, interval, float(np.atleast_1d(re)[np.argmax(np.atleast_1d(bad))]))


def char_exponent_P(model: LevyModel, w):
    """``psi(w)`` with ``E[(S_T/S_0)^w] = exp(T psi(w))``; vectorised over ``w``."""
    w = np.asarray(w, dtype=complex)
    _check_strip(model.strip, w, "char_exponent_P")
    b = model.mu_log - sum(j.mean() for j in model.jumps)
    out = b * w + 0.5 * model.sigma ** 2 * w * w
    for j in model.jumps:
        out = out + j.laplace(w)
    return out


# --------------------------------------------------------------------------- #
# Assumption checks
# --------------------------------------------------------------------------- #

def _sup_jump_factor(model: LevyModel, c0: float) -> float:
    """sup over the jump support of ``c0 (e^z - 1)``."""
    if not model.jumps:
        return 0.0
    # every shipped family has unbounded jumps on both sides: e^z - 1 ranges over (-1, inf)
    if c0 > 0:
        return math.inf
    return -c0


def validate(model: LevyModel) -> ValidationReport:
    """Check the standing assumptions on an exponential Levy model.

    Never raises for a well-typed model; failures land in ``violations``.
    """
    violations = []
    # (a) gamma = e^z - 1 > -1 holds for every real z.
    for j in model.jumps:
        if not j.fourth_moment_finite():
            violations.append(Violation(
                "fourth_moment", getattr(j, "M", None),
                "int (e^z-1)^4 nu(dz) is infinite (VG needs M > 4)"))
    try:
        mom = levy_moments(model)
    except MomentDivergenceError as exc:
        violations.append(Violation("second_moment", None, str(exc)))
        return ValidationReport(False, None, tuple(violations))

    if not mom.denom > 0:
        violations.append(Violation("nondegenerate_variance", mom.denom,
                                    "sigma^2 + Gamma must be bounded away from zero"))
        return ValidationReport(False, None, tuple(violations))

    c0 = mom.mu_S / mom.denom
    sup = _sup_jump_factor(model, c0)
    if not sup < 1.0:
        if math.isinf(sup):
            msg = (f"mu^S = {mom.mu_S:.6g} > 0 with unbounded positive jumps: "
                   "lambda S gamma is unbounded above")
        else:
            msg = f"sup lambda S gamma = {sup:.6g} is not below 1"
        violations.append(Violation("jump_bound", sup, msg))

    eps = None
    if not violations:
        eps = 0.5 * min(mom.denom, 1.0 - sup)
    return ValidationReport(not violations and eps is not None and eps > 0, eps, tuple(violations))


# --------------------------------------------------------------------------- #
# Serialisation
# --------------------------------------------------------------------------- #

_VARIANT_KEYS = {
    "VarianceGamma": ("C", "G", "M"),
    "JumpDiffusion": ("sigma", "jump_rate", "jump_mean", "jump_sd"),
    "PureDiffusion": ("sigma",),
}


def model_from_dict(d: dict) -> LevyModel:
    """Build a model from the config schema (keys documented in the README)."""
    from .errors import ConfigError

    if "variant" not in d:
        raise ConfigError("model: missing key 'variant'")
    name = d["variant"]
    if name not in _VARIANT_KEYS:
        raise ConfigError(f"model.variant: unknown variant {name!r}; expected one of {sorted(_VARIANT_KEYS)}")
    allowed = set(_VARIANT_KEYS[name]) | {"variant", "mu_log", "S0", "T"}
    if name == "VarianceGamma":
        allowed.add("sigma")
    for key in d:
        if key not in allowed:
            raise ConfigError(f"model.{key}: unexpected key for variant {name}")

    def num(key, default=None):
        if key not in d:
            if default is None:
                raise ConfigError(f"model.{key}: required for variant {name}")
            return default
        v = d[key]
        if v is None:
            return None
        try:
            return float(v)
        except (TypeError, ValueError):
            raise ConfigError(f"model.{key}: expected a number, got {v!r}") from None

    if name == "VarianceGamma":
        if num("sigma", 0.0) not in (0.0, None):
            raise ConfigError("model.sigma: VarianceGamma has no Brownian part; sigma must be 0")
        cls = VarianceGamma
    else:
        cls = JumpDiffusion if name == "JumpDiffusion" else PureDiffusion
    try:
        variant = cls(*(num(k) for k in _VARIANT_KEYS[name]))
        return LevyModel(variant, mu_log=num("mu_log", None) if "mu_log" in d else None,
                         S0=num("S0", 1.0), T=num("T", 1.0))
    except ValueError as exc:
        raise ConfigError(f"model: {exc}") from None


def model_to_dict(model: LevyModel) -> dict:
    v = model.variant
    out = {"variant": v.name}
    for key in _VARIANT_KEYS[v.name]:
        out[key] = getattr(v, key)
    out.update(mu_log=model.mu_log, S0=model.S0, T=model.T)
    return out
