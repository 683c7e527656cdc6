"""Damped Fourier evaluation of the call-payoff conditional expectations under P*.

With ``x = log(K/S)`` and ``w = alpha + iu`` every quantity is ``S`` times::

    f(x) = e^{(1-alpha)x} / pi * Re int_0^inf e^{-iux} e^{tau psi*(w)} kernel(w) du

    H (call value)     kernel = 1 / (w (w-1))
    I / sigma          kernel = 1 / (w - 1)
    K (jump term)      kernel = gamma_hat(w) / (w (w-1))

The u-integral is a Simpson sum on ``u_j = j*eta``.  At a single log-strike the
sum is evaluated directly; a whole log-strike grid comes out of one FFT.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, asdict

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from .errors import ConvergenceWarning, GridError
from .mmm_transform import MMMTransform, char_exponent_Pstar, gamma_hat

__all__ = [
    "FourierGrid",
    "ClaimSpec",
    "StrikeBatch",
    "StrikeCurves",
    "call_value",
    "put_value",
    "compute_I",
    "compute_K",
    "batch_over_strikes",
    "strike_curves",
    "jump_payoff_integral",
]

KERNELS = ("call", "asset", "jump")


@dataclass(frozen=True)
class FourierGrid:
    alpha: float = 1.5
    N: int = 2 ** 14
    eta: float = 0.05
    interpolation: str = "cubic"
    tol: float = 1e-7
    pad: int = 4
    x_max: float = 2.0

    def __post_init__(self):
        if not self.alpha > 1:
            raise GridError(f"damping alpha must exceed 1, got {self.alpha}")
        if self.N < 4 or self.N & (self.N - 1):
            raise GridError(f"N must be a power of two, got {self.N}")
        if not self.eta > 0:
            raise GridError(f"eta must be positive, got {self.eta}")
        if self.pad < 1 or self.pad & (self.pad - 1):
            raise GridError(f"pad must be a power of two, got {self.pad}")
        if not self.x_max > 0:
            raise GridError(f"x_max must be positive, got {self.x_max}")
        if self.interpolation not in ("cubic", "exact"):
            raise GridError(f"interpolation must be 'cubic' or 'exact', got {self.interpolation!r}")

    @property
    def u_max(self):
        return self.N * self.eta

    @property
    def dx(self):
        """Log-strike spacing of the FFT output (the spectrum is zero-padded ``pad`` times)."""
        return 2.0 * math.pi / (self.N * self.pad * self.eta)

    @property
    def half_width(self):
        """Log-moneyness window ``|x| < half_width`` kept for interpolation.

        The FFT output covers ``|x| < pi / eta``; the outer half is aliased, and
        ``x_max`` trims the rest to the strikes of practical interest.
        """
        return min(0.5 * math.pi / self.eta, self.x_max)

    def nodes(self):
        u = self.eta * np.arange(self.N)
        wts = np.where(np.arange(self.N) % 2 == 1, 4.0, 2.0)
        wts[0] = 1.0
        return u, wts * self.eta / 3.0

    def refined(self):
        return FourierGrid(self.alpha, 2 * self.N, self.eta / 2.0, self.interpolation, self.tol, self.pad,
                           self.x_max)

    def check(self, tr: MMMTransform):
        hi = min(tr.strip_star[1], tr.gamma_hat_strip[1])
        if tr.base.jumps and not self.alpha + 1.0 < hi:
            raise GridError(
                f"alpha={self.alpha} leaves the analyticity strip: need alpha + 1 < {hi:g}")

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class ClaimSpec:
    strike: float
    maturity: float | None = None
    kind: str = "call"

    def __post_init__(self):
        if self.kind not in ("call", "linear"):
            raise ValueError(f"unsupported claim kind {self.kind!r}")
        if self.kind == "call" and not self.strike > 0:
            raise ValueError(f"strike must be positive, got {self.strike}")

    def to_dict(self):
        return asdict(self)


def _kernel(tr, name, w):
    if name == "call":
        return 1.0 / (w * (w - 1.0))
    if name == "asset":
        return 1.0 / (w - 1.0)
    if name == "jump":
        return gamma_hat(tr, w) / (w * (w - 1.0))
    raise ValueError(name)


def _spectrum(tr, grid, tau, name, alpha=None):
    alpha = grid.alpha if alpha is None else alpha
    u, wts = grid.nodes()
    w = alpha + 1j * u
    return np.exp(tau * char_exponent_Pstar(tr, w)) * _kernel(tr, name, w) * wts, u


def _direct(tr, grid, tau, name, x, alpha=None):
    """Normalised transform at arbitrary log-moneyness ``x`` (no interpolation)."""
    alpha = grid.alpha if alpha is None else alpha
    phi, u = _spectrum(tr, grid, tau, name, alpha)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty(x.shape)
    flat, res = x.ravel(), out.reshape(-1)
    for i in range(0, flat.size, 64):
        xs = flat[i:i + 64]
        res[i:i + 64] = np.real(np.exp(-1j * np.outer(xs, u)) @ phi)
    return np.exp((1.0 - alpha) * x) * out / math.pi


def _quad(tr, grid, tau, name, x, alpha=None):
    alpha = grid.alpha if alpha is None else alpha

    def integrand(u):
        w = alpha + 1j * u
        v = np.exp(-1j * u * x + tau * char_exponent_Pstar(tr, w)) * _kernel(tr, name, w)
        return float(np.real(v))

    val, _ = integrate.quad(integrand, 0.0, np.inf, limit=2000, epsabs=1e-14, epsrel=1e-12)
    return math.exp((1.0 - alpha) * x) * val / math.pi


def _evaluate(tr, grid, tau, name, S, K, method, check_convergence, alpha=None):
    grid.check(tr)
    S = np.asarray(S, dtype=float)
    K = np.asarray(K, dtype=float)
    x = np.log(K / S)
    if method == "direct":
        f = _direct(tr, grid, tau, name, x, alpha).reshape(x.shape)
    elif method == "quad":
        f = np.vectorize(lambda xi: _quad(tr, grid, tau, name, xi, alpha))(x)
    elif method == "fft":
        f = StrikeCurves.build(tr, grid, tau, (name,)).normalised(name, x)
    else:
        raise ValueError(f"unknown method {method!r}")
    if check_convergence and method != "quad":
        f2 = _direct(tr, grid.refined(), tau, name, x, alpha).reshape(x.shape)
        gap = np.max(np.abs(f2 - f) / np.maximum(np.abs(f2), 1e-300))
        if gap > grid.tol:
            warnings.warn(f"{name} transform moved by {gap:.2e} (> {grid.tol:g}) under grid refinement",
                          ConvergenceWarning, stacklevel=3)
    return S * f


def _scalar(v):
    return float(v) if np.ndim(v) == 0 else v


def call_value(tr, grid, S, tau, K, method="direct", check_convergence=False):
    """``E*[(S_T - K)^+ | S_t = S]`` with ``tau = T - t``."""
    if tau < 0:
        raise ValueError(f"tau must be non-negative, got {tau}")
    if tau == 0:
        return _scalar(np.maximum(np.asarray(S, float) - K, 0.0))
    return _scalar(_evaluate(tr, grid, tau, "call", S, K, method, check_convergence))


def put_value(tr, grid, S, tau, K, method="direct"):
    """Same transform machinery on the contour ``Re w = 1 - alpha < 0``."""
    if tau == 0:
        return _scalar(np.maximum(K - np.asarray(S, float), 0.0))
    return _scalar(_evaluate(tr, grid, tau, "call", S, K, method, False, alpha=1.0 - grid.alpha))


def compute_I(tr, grid, S, tau, K, method="direct", check_convergence=False):
    """``sigma E*[S_T 1{S_T > K} | S_{t-} = S]``; identically zero without a Brownian part."""
    if tr.sigma == 0:
        return _scalar(np.zeros(np.broadcast(np.asarray(S), np.asarray(K)).shape))
    if tau == 0:
        S = np.asarray(S, float)
        return _scalar(tr.sigma * S * (S > K))
    return _scalar(tr.sigma * _evaluate(tr, grid, tau, "asset", S, K, method, check_convergence))


def compute_K(tr, grid, S, tau, K, method="direct", check_convergence=False):
    """``int J_{t,z} (e^z - 1) nu(dz)`` for the call, folded into one transform."""
    if not tr.base.jumps:
        return _scalar(np.zeros(np.broadcast(np.asarray(S), np.asarray(K)).shape))
    if tau == 0:
        return _scalar(jump_payoff_integral(tr.base.jumps, S, K))
    return _scalar(_evaluate(tr, grid, tau, "jump", S, K, method, check_convergence))


# --------------------------------------------------------------------------- #
# Batched evaluation
# --------------------------------------------------------------------------- #

@dataclass
class StrikeCurves:
    """Normalised kernel values on the FFT log-moneyness grid for one ``tau``."""

    x: np.ndarray
    values: dict
    tau: float
    sigma: float
    half_width: float

    @classmethod
    def build(cls, tr, grid, tau, kernels=KERNELS):
        grid.check(tr)
        n_out, dx = grid.N * grid.pad, grid.dx
        b = 0.5 * n_out * dx
        x = -b + dx * np.arange(n_out)
        keep = np.abs(x) <= grid.half_width + 8 * dx
        values = {}
        for name in kernels:
            if name == "asset" and tr.sigma == 0:
                continue
            if name == "jump" and not tr.base.jumps:
                continue
            phi, u = _spectrum(tr, grid, tau, name)
            raw = np.real(np.fft.fft(np.exp(1j * u * b) * phi, n=n_out))
            values[name] = (np.exp((1.0 - grid.alpha) * x) * raw / math.pi)[keep]
        return cls(x[keep], values, tau, tr.sigma, grid.half_width)

    def normalised(self, name, x):
        x = np.asarray(x, dtype=float)
        if np.any(np.abs(x) > self.half_width):
            raise GridError(
                f"log-moneyness {float(np.max(np.abs(x))):.3g} outside the covered window "
                f"+/-{self.half_width:.3g}; enlarge N or reduce eta")
        if name not in self.values:
            return np.zeros_like(x)
        spline = self._splines().get(name)
        return spline(x)

    def _splines(self):
        if not hasattr(self, "_cache"):
            self._cache = {k: CubicSpline(self.x, v) for k, v in self.values.items()}
        return self._cache

    def evaluate(self, S, K):
        """``(H, I, K)`` arrays at spots ``S`` and strikes ``K`` (broadcast)."""
        S = np.asarray(S, dtype=float)
        x = np.log(np.asarray(K, dtype=float) / S)
        H = S * self.normalised("call", x)
        I = self.sigma * S * self.normalised("asset", x)
        Kt = S * self.normalised("jump", x)
        return H, I, Kt


def strike_curves(tr, grid, tau):
    return StrikeCurves.build(tr, grid, tau)


@dataclass(frozen=True)
class StrikeBatch:
    strikes: np.ndarray
    H: np.ndarray
    I: np.ndarray
    K: np.ndarray


def batch_over_strikes(tr, grid, S, tau, strikes, interpolation=None, kernels=KERNELS):
    """H, I, K for every strike at one spot and one time-to-maturity.

    ``interpolation='cubic'`` uses one FFT pass per kernel and a cubic spline in
    log-strike; ``'exact'`` evaluates the Simpson sum at each strike directly.
    """
    strikes = np.asarray(strikes, dtype=float)
    if strikes.ndim != 1 or strikes.size == 0 or np.any(strikes <= 0):
        raise ValueError("strikes must be a non-empty 1-d array of positive values")
    if np.any(np.diff(strikes) <= 0):
        raise ValueError("strikes must be strictly ascending")
    interpolation = grid.interpolation if interpolation is None else interpolation
    if tau == 0:
        return StrikeBatch(strikes, np.asarray(call_value(tr, grid, S, 0.0, strikes)),
                           np.asarray(compute_I(tr, grid, S, 0.0, strikes)),
                           np.asarray(compute_K(tr, grid, S, 0.0, strikes)))
    if interpolation == "cubic":
        H, I, K = StrikeCurves.build(tr, grid, tau, kernels).evaluate(S, strikes)
        return StrikeBatch(strikes, H, I, K)
    if interpolation != "exact":
        raise ValueError(f"unknown interpolation {interpolation!r}")
    x = np.log(strikes / S)
    if np.any(np.abs(x) > grid.half_width):
        raise GridError("strikes outside the covered log-strike window")
    H = np.asarray(call_value(tr, grid, S, tau, strikes))
    I = np.asarray(compute_I(tr, grid, S, tau, strikes))
    K = np.asarray(compute_K(tr, grid, S, tau, strikes))
    return StrikeBatch(strikes, H, I, K)


# --------------------------------------------------------------------------- #
# tau = 0 jump term
# --------------------------------------------------------------------------- #

def jump_payoff_integral(jumps, S, K, n=48):
    """``int [(S e^z - K)^+ - (S - K)^+] (e^z - 1) nu(dz)``, vectorised over ``S``, ``K``.

    Gauss-Legendre on the pieces between the kink ``log(K/S)``, the origin and
    the tail bounds, so every piece is smooth.
    """
    S, K = np.broadcast_arrays(np.asarray(S, dtype=float), np.asarray(K, dtype=float))
    xg, wg = np.polynomial.legendre.leggauss(n)
    total = np.zeros(S.shape)
    kink = np.log(K / S)
    for j in jumps:
        lo, hi = j.tail_bounds()
        k = np.clip(kink, lo, hi)
        a, b = np.minimum(k, 0.0), np.maximum(k, 0.0)
        for left, right in ((np.full_like(k, lo), a), (a, b), (b, np.full_like(k, hi))):
            half = 0.5 * (right - left)
            z = (0.5 * (right + left))[..., None] + half[..., None] * xg
            Sx, Kx = S[..., None], K[..., None]
            f = (np.maximum(Sx * np.exp(z) - Kx, 0.0) - np.maximum(Sx - Kx, 0.0)) * np.expm1(z)
            with np.errstate(invalid="ignore"):
                dens = j.density(z)
            total = total + half * np.sum(np.where(half[..., None] > 0, f * dens, 0.0) * wg, axis=-1)
    return total
