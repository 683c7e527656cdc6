"""LRM and MVH hedge ratios from discretely observed prices.

Observation dates ``0 = t_0 < t_1 < ... < t_n`` carry prices ``S_{t_k}``; the
ratio is posted at ``t = t_{n+1}``.  With ``c0 = mu^S / (sigma^2 + Gamma)``::

    xi_{t_k}    = (sigma I_{t_k} + K_{t_k}) / (S_{t_{k-1}} (sigma^2 + Gamma))
    E_{t_k}     = E_{t_{k-1}} (1 - c0 dS_{t_k} / S_{t_{k-1}}),  E_{t_0} = 1
    theta_t     = xi_t + c0 E_{t_n} / S_{t_n} * (sum_main + sum_drift)
    sum_main   += (dH_{t_k} - xi_{t_k} dS_{t_k}) / E_{t_k}
    sum_drift  += mu^S sigma (Gamma I_{t_k} - sigma K_{t_k}) dt_k / (E_{t_{k-1}} (sigma^2+Gamma)^2)

``H_{t_k}`` is conditioned on ``S_{t_k}`` with ``H_{t_0} = E*[H]``; ``I``, ``K``
and ``xi`` at ``t_k`` are conditioned on ``S_{t_{k-1}}``, all with
time-to-maturity ``T - t_k``.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateExponentialWarning, InsufficientDataError
from .fourier_engine import ClaimSpec, FourierGrid, batch_over_strikes, call_value, compute_I, compute_K
from .levy_model import model_to_dict
from .mmm_transform import MMMTransform

__all__ = [
    "ObservedPath",
    "HedgeState",
    "HedgeReport",
    "lrm_ratio",
    "advance_state",
    "mvh_strategy",
    "mvh_strategies",
    "claim_quantities",
]


@dataclass(frozen=True)
class ObservedPath:
    """Observation times (years) and prices.

    ``times`` ends with the posting date ``t``.  ``prices`` may either stop one
    short of it or include ``S_t``; a price at ``t`` itself is never used.
    """

    times: np.ndarray
    prices: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        prices = np.asarray(self.prices, dtype=float)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "prices", prices)
        if times.ndim != 1 or prices.ndim != 1:
            raise ValueError("times and prices must be 1-d")
        if len(times) not in (len(prices), len(prices) + 1):
            raise ValueError(f"{len(times)} times for {len(prices)} prices: need equal length "
                             "or one extra posting time")
        if len(times) < 2:
            raise ValueError("need at least one observation and a posting time")
        if np.any(np.diff(times) <= 0):
            i = int(np.argmax(np.diff(times) <= 0)) + 1
            raise ValueError(f"times must be strictly increasing (index {i})")
        if times[0] != 0.0:
            raise ValueError(f"first observation must be at time 0, got {times[0]}")
        if np.any(~(prices > 0)):
            i = int(np.argmax(~(prices > 0)))
            raise ValueError(f"prices must be positive (index {i}: {prices[i]})")

    @property
    def t(self):
        return float(self.times[-1])

    @property
    def observed(self):
        """``(t_0..t_n, S_{t_0}..S_{t_n})`` strictly before the posting date."""
        n1 = len(self.times) - 1
        return self.times[:n1], self.prices[:n1]

    @property
    def n(self):
        return len(self.times) - 2

    def at(self, t):
        """The same data posted at an earlier date ``t``; later observations are dropped."""
        keep = self.times < t
        times = np.append(self.times[keep], t)
        return ObservedPath(times, self.prices[:int(keep.sum())])


@dataclass(frozen=True)
class HedgeState:
    E: float | np.ndarray = 1.0
    sum_main: float | np.ndarray = 0.0
    sum_drift: float | np.ndarray = 0.0
    k: int = 0
    degenerate: bool | np.ndarray = False


@dataclass
class HedgeReport:
    strike: float
    c_tilde: float
    theta_tilde: float
    xi_tilde: float
    t: float
    records: list = field(default_factory=list)
    sum_main: float = 0.0
    sum_drift: float = 0.0
    drift_sum_zero: bool = False
    degenerate_E: bool = False
    transform: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "strike": self.strike,
            "t": self.t,
            "c_tilde": self.c_tilde,
            "theta_tilde": self.theta_tilde,
            "xi_tilde": self.xi_tilde,
            "mvh_minus_lrm": self.theta_tilde - self.xi_tilde,
            "sum_main": self.sum_main,
            "sum_drift": self.sum_drift,
            "drift_sum_zero": self.drift_sum_zero,
            "degenerate_E": self.degenerate_E,
            "transform": self.transform,
            "config": self.config,
            "records": self.records,
        }

    CSV_FIELDS = ("k", "t", "S", "H", "I", "K", "xi", "E")

    def csv_rows(self):
        return [[r[f] for f in self.CSV_FIELDS] for r in self.records]


def claim_quantities(tr, grid, S, tau, strikes, kind="call", kernels=("call", "asset", "jump")):
    """``(H, I, K)`` for each strike; the linear claim ``S_T`` is in closed form.

    Kernels left out of ``kernels`` come back as zeros.
    """
    strikes = np.atleast_1d(np.asarray(strikes, dtype=float))
    if kind == "linear":
        S = float(S)
        one = np.ones_like(strikes)
        return S * one, tr.sigma * S * one, S * tr.Gamma * one
    b = batch_over_strikes(tr, grid, S, tau, strikes, kernels=kernels)
    return b.H, b.I, b.K


def lrm_ratio(tr: MMMTransform, grid: FourierGrid, S_prev, tau, K, method="direct"):
    """LRM hedge ratio for a call, conditioned on the previous observed price."""
    I = compute_I(tr, grid, S_prev, tau, K, method=method)
    Kt = compute_K(tr, grid, S_prev, tau, K, method=method)
    return (tr.sigma * I + Kt) / (S_prev * tr.denom)


def advance_state(state: HedgeState, tr: MMMTransform, dt, S_prev, S_now, dH, xi, I, K):
    """One observation step of the discretised MVH correction.

    Works elementwise when the per-step inputs are arrays (strikes or paths).
    """
    dS = S_now - S_prev
    factor = 1.0 - tr.c0 * dS / S_prev
    E_new = state.E * factor
    bad = np.asarray(factor <= 0)
    if np.any(bad):
        warnings.warn(f"stochastic exponential factor {np.min(factor):.4g} <= 0 at step {state.k + 1}",
                      DegenerateExponentialWarning, stacklevel=2)
    s2 = tr.sigma ** 2
    main = state.sum_main + (dH - xi * dS) / E_new
    drift = state.sum_drift + tr.mu_S * tr.sigma * (tr.Gamma * I - tr.sigma * K) * dt / (state.E * tr.denom ** 2)
    if s2 == 0:
        drift = state.sum_drift
    return HedgeState(E_new, main, drift, state.k + 1, np.logical_or(state.degenerate, bad))


def _correction(tr, state, S_last):
    return tr.c0 * state.E / S_last * (state.sum_main + state.sum_drift)


def mvh_strategies(tr: MMMTransform, grid: FourierGrid, path: ObservedPath, strikes,
                   maturity=None, kind="call", threads=1):
    """MVH reports for every strike, sharing the per-date transform work."""
    times, prices = path.observed
    n = len(prices) - 1
    if n < 1:
        raise InsufficientDataError("need at least one interior observation (n >= 1)")
    T = tr.base.T if maturity is None else float(maturity)
    t = path.t
    if not t < T:
        raise ValueError(f"posting date t={t} must precede maturity T={T}")
    strikes = np.atleast_1d(np.asarray(strikes, dtype=float))
    grid.check(tr)

    # H at (S_{t_k}, T - t_k) for k = 0..n; I, K at (S_{t_{k-1}}, T - t_k) for k = 1..n+1.
    all_t = np.append(times, t)

    def h_job(k):
        return claim_quantities(tr, grid, prices[k], T - all_t[k], strikes, kind, ("call",))[0]

    def ik_job(k):
        _, I, K = claim_quantities(tr, grid, prices[k - 1], T - all_t[k], strikes, kind, ("asset", "jump"))
        return I, K

    with ThreadPoolExecutor(max_workers=max(1, int(threads))) as pool:
        H = list(pool.map(h_job, range(n + 1)))
        IK = list(pool.map(ik_job, range(1, n + 2)))

    H = np.array(H)
    if kind == "call":
        # H_{t_0} is E*[H] itself, evaluated without interpolation.
        H[0] = call_value(tr, grid, prices[0], T, strikes)
    I = np.array([a for a, _ in IK])
    K = np.array([b for _, b in IK])
    S_prev = prices[np.arange(0, n + 1)]
    xi = (tr.sigma * I + K) / (S_prev[:, None] * tr.denom)

    state = HedgeState(np.ones_like(strikes), np.zeros_like(strikes), np.zeros_like(strikes), 0,
                       np.zeros(strikes.shape, dtype=bool))
    Es = [state.E]
    for k in range(1, n + 1):
        state = advance_state(state, tr, all_t[k] - all_t[k - 1], prices[k - 1], prices[k],
                              H[k] - H[k - 1], xi[k - 1], I[k - 1], K[k - 1])
        Es.append(state.E)
    xi_t = xi[n]
    theta = xi_t + _correction(tr, state, prices[n])

    reports = []
    base_cfg = {"model": model_to_dict(tr.base), "grid": grid.to_dict()}
    for j, strike in enumerate(strikes):
        records = []
        for k in range(n + 2):
            rec = {"k": k, "t": float(all_t[k]), "S": float(prices[k]) if k <= n else None,
                   "H": float(H[k, j]) if k <= n else None,
                   "I": float(I[k - 1, j]) if k >= 1 else None,
                   "K": float(K[k - 1, j]) if k >= 1 else None,
                   "xi": float(xi[k - 1, j]) if k >= 1 else None,
                   "E": float(Es[k][j]) if k <= n else None}
            records.append(rec)
        claim = ClaimSpec(float(strike) if kind == "call" else 0.0, T, kind)
        reports.append(HedgeReport(
            strike=float(strike), c_tilde=float(H[0, j]), theta_tilde=float(theta[j]),
            xi_tilde=float(xi_t[j]), t=t, records=records,
            sum_main=float(state.sum_main[j]), sum_drift=float(state.sum_drift[j]),
            drift_sum_zero=tr.sigma == 0, degenerate_E=bool(state.degenerate[j]),
            transform=tr.to_dict(), config=dict(base_cfg, claim=claim.to_dict())))
    return reports


def mvh_strategy(tr: MMMTransform, grid: FourierGrid, path: ObservedPath, claim: ClaimSpec):
    """MVH initial capital and hedge ratio at ``path.t`` for a single claim."""
    return mvh_strategies(tr, grid, path, [claim.strike], claim.maturity, claim.kind)[0]
