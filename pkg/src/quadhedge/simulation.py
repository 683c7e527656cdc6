"""Monte Carlo engine: paths under P or P*, the density process, hedging errors,
and conditional estimators for path-dependent claims.

Random streams: paths are generated in fixed blocks of ``BLOCK`` paths, block
``i`` drawing from ``SeedSequence(seed).spawn(n_blocks)[i]``.  The ensemble is
therefore identical whether blocks run serially or on a thread pool.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import DensityError
from .fourier_engine import ClaimSpec, FourierGrid, StrikeCurves, call_value, compute_I, compute_K
from .levy_model import LevyModel
from .mmm_transform import MMMTransform
from .strategies import HedgeState, advance_state

__all__ = [
    "BLOCK",
    "PathEnsemble",
    "simulate_paths",
    "density_process",
    "HedgeErrorResult",
    "hedging_error",
    "ZeroHedge",
    "LRMHedge",
    "MVHHedge",
    "BSDeltaHedge",
    "european_IJ",
    "asian_IJ",
    "lookback_IJ",
    "ensemble_stats",
]

BLOCK = 1 << 15


@dataclass
class PathEnsemble:
    times: np.ndarray
    log_increments: np.ndarray
    S0: float
    measure: str
    seed: int
    Z_T: np.ndarray | None = None

    @property
    def n_paths(self):
        return self.log_increments.shape[0]

    @property
    def n_steps(self):
        return self.log_increments.shape[1]

    def log_prices(self):
        x = np.zeros((self.n_paths, self.n_steps + 1))
        np.cumsum(self.log_increments, axis=1, out=x[:, 1:])
        return x

    def prices(self):
        return self.S0 * np.exp(self.log_prices())

    def terminal(self):
        return self.S0 * np.exp(self.log_increments.sum(axis=1))


def _increment_sampler(model: LevyModel, measure: str):
    """(drift, sigma, jump components) of log S under the requested measure."""
    if measure == "P":
        drift = model.mu_log - sum(j.mean() for j in model.jumps)
        return drift, model.sigma, model.jumps
    if measure == "Pstar":
        tr = MMMTransform.from_model(model)
        return tr.drift_star(), tr.sigma, tr.jumps_star
    raise ValueError(f"measure must be 'P' or 'Pstar', got {measure!r}")


def _block(seq, n, dts, drift, sigma, jumps):
    rng = np.random.default_rng(seq)
    n_steps = len(dts)
    out = np.empty((n, n_steps))
    for k, dt in enumerate(dts):
        inc = drift * dt
        if sigma > 0:
            inc = inc + sigma * math.sqrt(dt) * rng.standard_normal(n)
        for j in jumps:
            inc = inc + j.sample(dt, n, rng)
        out[:, k] = inc
    return out


def simulate_paths(model: LevyModel, n_paths, n_steps, seed, measure="P", T=None,
                   times=None, threads=1, S0=None, with_density=True):
    """Exact-increment paths of the log price on an equally spaced (or given) grid.

    VG increments come from the gamma time change; Gaussian compound-Poisson
    increments from a Poisson count and a normal mixture.  Under ``P`` (and
    ``with_density``) the ensemble also carries ``Z_T`` from
    :func:`density_process` when the model admits the measure change.
    """
    if times is None:
        T = model.T if T is None else float(T)
        times = np.linspace(0.0, T, n_steps + 1)
    times = np.asarray(times, dtype=float)
    dts = np.diff(times)
    if np.any(dts < 0):
        raise ValueError("times must be non-decreasing")
    drift, sigma, jumps = _increment_sampler(model, measure)
    n_blocks = max(1, -(-int(n_paths) // BLOCK))
    seqs = np.random.SeedSequence(int(seed)).spawn(n_blocks)
    sizes = [min(BLOCK, n_paths - i * BLOCK) for i in range(n_blocks)]
    jobs = [(seqs[i], sizes[i], dts, drift, sigma, jumps) for i in range(n_blocks)]
    if threads > 1 and n_blocks > 1:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            parts = list(pool.map(lambda a: _block(*a), jobs))
    else:
        parts = [_block(*a) for a in jobs]
    inc = np.concatenate(parts, axis=0) if parts else np.empty((0, len(dts)))
    ens = PathEnsemble(times, inc, float(model.S0 if S0 is None else S0), measure, int(seed))
    if measure == "P" and with_density:
        try:
            tr = MMMTransform.from_model(model)
        except ValueError:
            tr = None
        if tr is not None:
            ens.Z_T = density_process(model, ens, tr)[:, -1]
    return ens


def density_process(model: LevyModel, ens: PathEnsemble, tr: MMMTransform | None = None):
    """Density process ``Z`` of P* w.r.t. P along simulated P-paths.

    Per increment ``Z_k = Z_{k-1} (1 - c0 (R_k - e^{mu^S dt} + 1))`` with the
    simple return ``R_k = e^{dX} - 1``.  Each factor has P-mean exactly one, so
    ``E[Z_t] = 1`` at every date; as a weighting of the terminal law it is
    weak order one in the step size.
    """
    if ens.measure != "P":
        raise ValueError("density_process needs paths simulated under P")
    tr = MMMTransform.from_model(model) if tr is None else tr
    dts = np.diff(ens.times)
    factors = 1.0 - tr.c0 * (np.exp(ens.log_increments) - np.exp(tr.mu_S * dts))
    if np.any(factors <= 0):
        raise DensityError(f"density factor {factors.min():.4g} <= 0: model assumptions breached")
    Z = np.ones((ens.n_paths, ens.n_steps + 1))
    np.cumprod(factors, axis=1, out=Z[:, 1:])
    return Z


def ensemble_stats(model: LevyModel, n_paths, n_steps, seed, threads=1):
    """Martingale and normalisation checks, as plain numbers for JSON export."""
    out = {"n_paths": int(n_paths), "n_steps": int(n_steps), "seed": int(seed)}
    P = simulate_paths(model, n_paths, n_steps, seed, "P", threads=threads)
    r = P.terminal() / P.S0
    out["P"] = {"mean_ST_over_S0": float(r.mean()), "se": float(r.std(ddof=1) / math.sqrt(n_paths))}
    if P.Z_T is not None:
        z = P.Z_T
        out["P"]["mean_Z_T"] = float(z.mean())
        out["P"]["se_Z_T"] = float(z.std(ddof=1) / math.sqrt(n_paths))
        Q = simulate_paths(model, n_paths, n_steps, seed + 1, "Pstar", threads=threads)
        q = Q.terminal() / Q.S0
        out["Pstar"] = {"mean_ST_over_S0": float(q.mean()), "se": float(q.std(ddof=1) / math.sqrt(n_paths))}
    return out


# --------------------------------------------------------------------------- #
# Hedging error
# --------------------------------------------------------------------------- #

@dataclass
class HedgeErrorResult:
    mse: float
    se: float
    errors: np.ndarray = field(repr=False)

    def paired_diff(self, other: "HedgeErrorResult"):
        """Mean and standard error of ``sq_err(self) - sq_err(other)`` on common paths."""
        d = self.errors ** 2 - other.errors ** 2
        return float(d.mean()), float(d.std(ddof=1) / math.sqrt(d.size))


def _payoff(claim: ClaimSpec, ST):
    if claim.kind == "linear":
        return ST
    return np.maximum(ST - claim.strike, 0.0)


def hedging_error(model: LevyModel, strategy, claim: ClaimSpec, c, n_paths, n_steps, seed,
                  threads=1):
    """``E[(H - c - sum_k theta_k (S_{t_k} - S_{t_{k-1}}))^2]`` under P.

    ``strategy(k, times, prices)`` returns the holding over ``(t_{k-1}, t_k]``
    given observed prices ``prices[:, :k]`` (dates ``t_0..t_{k-1}``); it is
    called for ``k = 1..n_steps`` in order.
    """
    T = model.T if claim.maturity is None else claim.maturity
    ens = simulate_paths(model, n_paths, n_steps, seed, "P", T=T, threads=threads)
    S = ens.prices()
    gains = np.zeros(ens.n_paths)
    for k in range(1, ens.n_steps + 1):
        hold = strategy(k, ens.times, S[:, :k])
        gains += hold * (S[:, k] - S[:, k - 1])
    err = _payoff(claim, S[:, -1]) - c - gains
    sq = err ** 2
    return HedgeErrorResult(float(sq.mean()), float(sq.std(ddof=1) / math.sqrt(sq.size)), err)


class ZeroHedge:
    def __call__(self, k, times, prices):
        return np.zeros(prices.shape[0])


class BSDeltaHedge:
    """Black-Scholes delta of a call at the last observed price and ``T - t_{k-1}``."""

    def __init__(self, sigma, strike, T):
        self.sigma, self.strike, self.T = sigma, strike, T

    def __call__(self, k, times, prices):
        from scipy.stats import norm

        S = prices[:, -1]
        tau = self.T - times[k - 1]
        d1 = (np.log(S / self.strike) + 0.5 * self.sigma ** 2 * tau) / (self.sigma * math.sqrt(tau))
        return norm.cdf(d1)


class _CurveCache:
    def __init__(self, tr, grid):
        self.tr, self.grid, self._c = tr, grid, {}

    def quantities(self, S, tau, strike):
        """``(H, I, K)`` at spots ``S`` (array) for one ``tau``."""
        if tau <= 0:
            return (call_value(self.tr, self.grid, S, 0.0, strike),
                    compute_I(self.tr, self.grid, S, 0.0, strike),
                    compute_K(self.tr, self.grid, S, 0.0, strike))
        key = round(float(tau), 14)
        if key not in self._c:
            self._c = {key: StrikeCurves.build(self.tr, self.grid, tau)}
        return self._c[key].evaluate(S, strike)


class LRMHedge:
    """LRM ratio ``xi_{t_k}`` from ``S_{t_{k-1}}`` with time-to-maturity ``T - t_k``."""

    def __init__(self, tr: MMMTransform, grid: FourierGrid, claim: ClaimSpec):
        self.tr, self.grid, self.claim = tr, grid, claim
        self.T = tr.base.T if claim.maturity is None else claim.maturity
        self.curves = _CurveCache(tr, grid)

    def _IK(self, S, tau):
        if self.claim.kind == "linear":
            return self.tr.sigma * S, self.tr.Gamma * S
        _, I, K = self.curves.quantities(S, tau, self.claim.strike)
        return I, K

    def _H(self, S, tau):
        if self.claim.kind == "linear":
            return S
        return self.curves.quantities(S, tau, self.claim.strike)[0]

    def _xi(self, k, times, S_prev):
        I, K = self._IK(S_prev, self.T - times[k])
        return I, K, (self.tr.sigma * I + K) / (S_prev * self.tr.denom)

    def __call__(self, k, times, prices):
        return self._xi(k, times, prices[:, -1])[2]


class MVHHedge(LRMHedge):
    """Discretised MVH ratio, carried forward incrementally along every path."""

    def __call__(self, k, times, prices):
        tr = self.tr
        S_last = prices[:, -1]
        if k == 1:
            n = prices.shape[0]
            self.state = HedgeState(np.ones(n), np.zeros(n), np.zeros(n), 0, np.zeros(n, dtype=bool))
            if self.claim.kind == "linear":
                self.H_prev = S_last.copy()
            else:
                self.H_prev = np.full(n, call_value(tr, self.grid, float(S_last[0]), self.T - times[0],
                                                    self.claim.strike))
        else:
            H_now = self._H(S_last, self.T - times[k - 1])
            self.state = advance_state(self.state, tr, times[k - 1] - times[k - 2], prices[:, -2], S_last,
                                       H_now - self.H_prev, self.xi_prev, self.I_prev, self.K_prev)
            self.H_prev = H_now
        I, K, xi = self._xi(k, times, S_last)
        self.I_prev, self.K_prev, self.xi_prev = I, K, xi
        s = self.state
        return xi + tr.c0 * s.E / S_last * (s.sum_main + s.sum_drift)


# --------------------------------------------------------------------------- #
# Conditional estimators
# --------------------------------------------------------------------------- #

def _nu_nodes(model: LevyModel, n):
    zs, ws = [], []
    for j in model.jumps:
        z, w = j.quadrature(n)
        zs.append(z)
        ws.append(w)
    if not zs:
        return np.empty(0), np.empty(0)
    return np.concatenate(zs), np.concatenate(ws)


def _mean_se(y):
    y = np.asarray(y, dtype=float)
    return float(y.mean()), float(y.std(ddof=1) / math.sqrt(y.size)) if y.size > 1 else 0.0


def _jump_term(model, n_nodes, f):
    """Per-path ``int f(z) (e^z - 1) nu(dz)`` on fixed nodes; ``f(z)`` -> per-path array."""
    z, w = _nu_nodes(model, n_nodes)
    total = 0.0
    for zi, wi in zip(z, w):
        total = total + wi * math.expm1(zi) * f(zi)
    return total


def _jump_term_kinked(model, f, kinks, n=48):
    """``int f(z) (e^z - 1) nu(dz)`` for a deterministic ``f`` with known kinks.

    Gauss-Legendre between the tail bounds, the origin and each kink.
    """
    xg, wg = np.polynomial.legendre.leggauss(n)
    total = 0.0
    for j in model.jumps:
        lo, hi = j.tail_bounds()
        pts = sorted({lo, hi, 0.0, *(min(max(k, lo), hi) for k in kinks)})
        for a, b in zip(pts[:-1], pts[1:]):
            if b <= a:
                continue
            z = 0.5 * (a + b) + 0.5 * (b - a) * xg
            vals = np.array([f(zi) for zi in z]) * np.expm1(z) * j.density(z)
            total += 0.5 * (b - a) * float(np.dot(wg, vals))
    return total


def _chunks(n, size=1 << 16):
    for i in range(0, n, size):
        yield i, min(size, n - i)


def european_IJ(model: LevyModel, S, tau, strike, n_paths, seed, n_nodes=64):
    """MC oracle under P* for the call: ``H``, ``I``, ``K`` with standard errors.

    ``K`` is the nu-quadrature (fixed nodes) of MC-estimated jump differences
    ``J(z) = E*[(S_T e^z - K)^+ - (S_T - K)^+]``, all on common samples.
    """
    ens = simulate_paths(model, n_paths, 1, seed, "Pstar", times=np.array([0.0, tau]), S0=S)
    ST = ens.terminal()
    sigma = model.sigma
    hs, iss, ks = [], [], []
    for i, m in _chunks(ST.size):
        s = ST[i:i + m]
        base = np.maximum(s - strike, 0.0)
        hs.append(base)
        iss.append(sigma * s * (s > strike))
        if model.jumps:
            ks.append(_jump_term(model, n_nodes, lambda z: np.maximum(s * math.exp(z) - strike, 0.0) - base))
        else:
            ks.append(np.zeros(m))
    out = {}
    for name, parts in (("H", hs), ("I", iss), ("K", ks)):
        out[name], out[name + "_se"] = _mean_se(np.concatenate(parts))
    return out


def _forward_paths(model, S_prev, t, T, n_paths, n_steps, seed):
    times = t + (T - t) * np.linspace(0.0, 1.0, n_steps + 1)
    ens = simulate_paths(model, n_paths, n_steps, seed, "Pstar", times=times, S0=S_prev)
    return times, ens.prices()


def asian_IJ(model: LevyModel, t, S_prev, prefix_average, strike, n_paths, seed,
             n_steps=50, T=None, n_nodes=64):
    """``I_t`` and ``K_t`` for ``H = (1/T int_0^T S_u du - K)^+`` given ``F_{t-}``.

    ``prefix_average`` is the average of S over ``[0, t]`` (trapezoid on the
    observed dates); the remaining average ``V_t`` uses the trapezoid on the
    simulated grid.
    """
    T = model.T if T is None else float(T)
    times, S = _forward_paths(model, S_prev, t, T, n_paths, n_steps, seed)
    if T > t:
        Vt = integrate.trapezoid(S, times, axis=1) / T
    else:
        Vt = np.zeros(S.shape[0])
    V0 = prefix_average * t / T + Vt
    base = np.maximum(V0 - strike, 0.0)
    res = {}
    res["H"], res["H_se"] = _mean_se(base)
    res["I"], res["I_se"] = _mean_se(model.sigma * Vt * (V0 > strike))
    if model.jumps:
        y = _jump_term(model, n_nodes, lambda z: np.maximum(V0 + math.expm1(z) * Vt - strike, 0.0) - base)
    else:
        y = np.zeros_like(base)
    res["K"], res["K_se"] = _mean_se(y)
    res["V_t"], res["V_t_se"] = _mean_se(Vt)
    return res


def lookback_IJ(model: LevyModel, t, S_prev, running_max, strike, n_paths, seed,
                n_steps=50, T=None, n_nodes=64):
    """``I_t`` and ``K_t`` for ``H = (sup_{[0,T]} S - K)^+`` given ``F_{t-}``.

    The future supremum is the maximum over the simulation grid (biased low by
    the grid spacing).  ``I_t`` carries the indicator that the overall maximum
    is attained at or after ``t``.
    """
    T = model.T if T is None else float(T)
    if not T > t:
        # nothing left to simulate: the payoff is a known function of the jump at t
        M = max(running_max, S_prev)
        base = max(M - strike, 0.0)
        I = model.sigma * M * (M > strike) * (S_prev >= running_max)
        Kt = 0.0
        if model.jumps:
            Kt = _jump_term_kinked(
                model, lambda z: max(max(running_max, math.exp(z) * S_prev) - strike, 0.0) - base,
                [math.log(running_max / S_prev), math.log(strike / S_prev)])
        return {"H": base, "H_se": 0.0, "I": float(I), "I_se": 0.0, "K": Kt, "K_se": 0.0}
    _, S = _forward_paths(model, S_prev, t, T, n_paths, max(n_steps, 1), seed)
    M_fut = S.max(axis=1)
    M = np.maximum(running_max, M_fut)
    base = np.maximum(M - strike, 0.0)
    res = {}
    res["H"], res["H_se"] = _mean_se(base)
    res["I"], res["I_se"] = _mean_se(model.sigma * M * (M > strike) * (M_fut >= running_max))
    if model.jumps:
        y = _jump_term(model, n_nodes,
                       lambda z: np.maximum(np.maximum(running_max, math.exp(z) * M_fut) - strike, 0.0) - base)
    else:
        y = np.zeros_like(base)
    res["K"], res["K_se"] = _mean_se(y)
    return res
