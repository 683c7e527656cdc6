"""Acceptance criteria 1-8.  Each test carries an ``acceptance`` marker; the
terminal summary prints one PASS/FAIL line per criterion."""

import hashlib
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

import oracles
from helpers import STRIKES_21, random_point, random_valid_models, spx_vg
from quadhedge import (ClaimSpec, FourierGrid, JumpDiffusion, LevyModel, MMMTransform, PureDiffusion,
                       char_exponent_P, char_exponent_Pstar, gamma_hat, levy_moments, mvh_strategies)
from quadhedge.cli import main, synthetic_path
from quadhedge.fourier_engine import call_value, compute_I, compute_K
from quadhedge.simulation import LRMHedge, MVHHedge, ZeroHedge, european_IJ, hedging_error

ROOT = Path(__file__).resolve().parents[1]
EXPERIMENT = ROOT / "configs" / "vg_experiment.json"


@pytest.mark.acceptance(1, "martingale normalisation |psi*(0)|, |psi*(1)| < 1e-12")
def test_martingale_normalisation(record_property):
    models = [spx_vg()] + random_valid_models(101, 100)
    worst = 0.0
    for m in models:
        tr = MMMTransform.from_model(m)
        v = char_exponent_Pstar(tr, np.array([0.0, 1.0]))
        worst = max(worst, float(np.max(np.abs(v))))
    record_property("detail", f"{len(models)} models, max |psi*| = {worst:.2e}")
    assert worst < 1e-12


@pytest.mark.acceptance(2, "closed forms vs adaptive quadrature to 1e-8 relative")
def test_closed_forms_vs_quadrature(record_property):
    rng = np.random.default_rng(202)
    models = random_valid_models(202, 100)
    worst = {}

    def rel(name, got, ref, scale=None):
        scale = abs(ref) if scale is None else scale
        e = abs(got - ref) / scale
        worst[name] = max(worst.get(name, 0.0), e)

    for m in models:
        tr = MMMTransform.from_model(m)
        mom = levy_moments(m)
        if m.jumps:
            # mu^S = mu_log + sigma^2/2 + int (e^z-1-z) nu; the integral carries the closed form
            jp = oracles.jump_drift_part(m)
            rel("mu_S", mom.mu_S - m.mu_log - 0.5 * m.sigma ** 2, jp)
            rel("mu_S_total", mom.mu_S, oracles.mu_S(m), max(abs(jp), abs(mom.mu_S)))
            rel("Gamma", mom.Gamma, oracles.Gamma(m))
            lo, hi = tr.gamma_hat_strip
            w = random_point(rng, lo, hi)
            rel("gamma_hat", complex(gamma_hat(tr, w)), oracles.gamma_hat(m, w))
        w = random_point(rng, *m.strip)
        rel("psi", complex(char_exponent_P(m, w)), oracles.psi(m, w))
        w = random_point(rng, *tr.strip_star)
        rel("psi_star", complex(char_exponent_Pstar(tr, w)), oracles.psi_star(m, w))
    record_property("detail", ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))
    assert max(worst.values()) < 1e-8


@pytest.mark.acceptance(3, "Fourier call and K within 3 combined SE of 10^6-path MC")
def test_fourier_vs_monte_carlo(record_property):
    m = spx_vg()
    tr = MMMTransform.from_model(m)
    grid = FourierGrid()
    zmax = 0.0
    seed = 3000
    for tau in (0.25, 0.5, 1.0):
        for K in (1800.0, 2000.0, 2200.0):
            seed += 1
            mc = european_IJ(m, 2000.0, tau, K, 10 ** 6, seed)
            h = call_value(tr, grid, 2000.0, tau, K)
            k = compute_K(tr, grid, 2000.0, tau, K)
            # combined SE: MC error plus the Fourier tolerance
            zh = abs(h - mc["H"]) / math.hypot(mc["H_se"], grid.tol * 2000.0)
            zk = abs(k - mc["K"]) / math.hypot(mc["K_se"], grid.tol * 2000.0)
            zmax = max(zmax, zh, zk)
            assert zh < 3.0, (tau, K, h, mc["H"], mc["H_se"])
            assert zk < 3.0, (tau, K, k, mc["K"], mc["K_se"])
    record_property("detail", f"max |z| = {zmax:.2f} over 18 comparisons")


@pytest.mark.acceptance(4, "degeneration suite (mu^S=0, linear claim, pure diffusion)")
def test_degeneration_suite(record_property):
    grid = FourierGrid()
    path = synthetic_path(spx_vg(), 40, 11)

    # mu^S = 0: the correction vanishes identically
    tr0 = MMMTransform.from_model(spx_vg().with_martingale_drift())
    assert tr0.c0 == 0.0
    for r in mvh_strategies(tr0, grid, path, [1800.0, 2000.0, 2200.0]):
        assert r.theta_tilde == r.xi_tilde

    # linear claim: exact for VG, rounding-level for the Brownian families
    for m, tol in ((spx_vg(), 0.0),
                   (LevyModel(JumpDiffusion(0.2, 1.0, -0.05, 0.1), S0=2000.0), 1e-12),
                   (LevyModel(PureDiffusion(0.2), mu_log=0.05, S0=2000.0), 1e-12)):
        tr = MMMTransform.from_model(m)
        p = synthetic_path(m, 40, 12)
        r = mvh_strategies(tr, grid, p, [0.0], kind="linear")[0]
        assert abs(r.xi_tilde - 1.0) <= tol and abs(r.theta_tilde - 1.0) <= tol
        assert abs(r.sum_main) <= tol * 2000 and abs(r.sum_drift) <= tol * 2000
        assert r.c_tilde == p.prices[0]

    # pure diffusion: xi equals the Black-Scholes delta
    sigma = 0.25
    trp = MMMTransform.from_model(LevyModel(PureDiffusion(sigma), mu_log=0.08, S0=100.0))
    gd = FourierGrid(N=2 ** 14)
    worst = 0.0
    for S in (80.0, 100.0, 120.0):
        for tau in (0.1, 0.5, 1.0):
            for K in (90.0, 100.0, 110.0):
                I = compute_I(trp, gd, S, tau, K)
                xi = I / (S * sigma)
                worst = max(worst, abs(xi - oracles.bs_delta(S, K, sigma, tau)))
    record_property("detail", f"BS delta max error {worst:.1e}")
    assert worst < 1e-4


@pytest.mark.acceptance(5, "hedging-error dominance on 10^4 daily VG paths")
def test_hedging_error_dominance(record_property):
    m = spx_vg()
    tr = MMMTransform.from_model(m)
    grid = FourierGrid()
    claim = ClaimSpec(2000.0, 1.0)
    c = call_value(tr, grid, 2000.0, 1.0, 2000.0)
    args = (claim, c, 10_000, 250, 555)
    zero = hedging_error(m, ZeroHedge(), *args)
    lrm = hedging_error(m, LRMHedge(tr, grid, claim), *args)
    mvh = hedging_error(m, MVHHedge(tr, grid, claim), *args)
    d, se = mvh.paired_diff(lrm)
    dz, sez = lrm.paired_diff(zero)
    dz2, sez2 = mvh.paired_diff(zero)
    record_property("detail", f"MSE zero {zero.mse:.0f}, LRM {lrm.mse:.1f}, MVH {mvh.mse:.1f}; "
                              f"MVH-LRM {d:.2f} (se {se:.2f})")
    assert d <= 3 * se
    assert -dz > 3 * sez and -dz2 > 3 * sez2


@pytest.mark.acceptance(6, "synthetic rerun: |theta - xi| < 0.01 across 21 strikes")
def test_experiment_rerun(record_property):
    cfg = json.loads(EXPERIMENT.read_text())
    m = spx_vg()
    path = synthetic_path(m, cfg["path"]["synthetic"]["n_obs"], cfg["seed"])
    assert path.t == pytest.approx(121 / 250) and len(path.observed[0]) == 121
    reports = mvh_strategies(MMMTransform.from_model(m), FourierGrid(), path, STRIKES_21)
    diff = np.array([abs(r.theta_tilde - r.xi_tilde) for r in reports])
    record_property("detail", f"max |theta-xi| = {diff.max():.4f} at K={STRIKES_21[diff.argmax()]:g}")
    assert diff.max() < 0.01


@pytest.mark.acceptance(7, "21-strike, 121-date mvh CLI run under 60 s")
def test_runtime_budget(tmp_path, record_property):
    t0 = time.perf_counter()
    assert main(["mvh", "--config", str(EXPERIMENT), "--out", str(tmp_path)]) == 0
    wall = time.perf_counter() - t0
    rows = (tmp_path / "strategy_vs_strike.csv").read_text().strip().splitlines()
    assert len(rows) == 22
    record_property("detail", f"{wall:.1f} s")
    assert wall < 60.0


def _digests(d):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(Path(d).iterdir()) if p.name != "manifest.json"}


@pytest.mark.acceptance(8, "bitwise determinism of outputs for identical config and seed")
def test_determinism(tmp_path, record_property):
    cfg = json.loads(EXPERIMENT.read_text())
    cfg["mc"] = {"paths": 70_000, "steps": 4}
    small = dict(cfg, claims=[{"kind": "call", "maturity": 1.0, "strikes": [1900.0, 2100.0]}])
    cfg_file = tmp_path / "c.json"
    cfg_file.write_text(json.dumps(small))
    he = dict(small, mc={"paths": 300, "steps": 25})
    he_file = tmp_path / "he.json"
    he_file.write_text(json.dumps(he))
    checked = 0
    for sub, f, threads in (("mvh", cfg_file, (1, 3)), ("lrm", cfg_file, (1, 1)),
                            ("simulate", cfg_file, (1, 4)), ("hedge-error", he_file, (1, 1)),
                            ("price", cfg_file, (1, 1))):
        outs = []
        for i, th in enumerate(threads):
            o = tmp_path / f"{sub}{i}"
            assert main([sub, "--config", str(f), "--out", str(o), "--seed", "7", "--threads", str(th)]) == 0
            outs.append(_digests(o))
        # rerun from the manifest of the first run
        o = tmp_path / f"{sub}m"
        assert main([sub, "--config", str(tmp_path / f"{sub}0" / "manifest.json"), "--out", str(o)]) == 0
        outs.append(_digests(o))
        assert outs[0] and outs[0] == outs[1] == outs[2], sub
        checked += len(outs[0])
    record_property("detail", f"{checked} files identical across reruns, thread counts and manifest replay")
