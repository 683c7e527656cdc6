import math

import numpy as np
import pytest

import oracles
from helpers import SPX_VG, spx_vg, with_c0
from quadhedge import (JumpDiffusion, LevyModel, PureDiffusion, VarianceGamma, char_exponent_P, levy_moments,
                       model_from_dict, validate)
from quadhedge.errors import ConfigError, MomentDivergenceError, StripError
from quadhedge.levy_model import GaussianJumps, VGJumps, cgm_to_vg, model_to_dict, vg_to_cgm


def test_spx_vg_moments_match_quadrature():
    m = spx_vg()
    mom = levy_moments(m)
    # raw jump-sum log price: mu^S is int (e^z - 1) nu(dz)
    assert mom.mu_S == pytest.approx(oracles.nu_integral(m, math.expm1).real, rel=1e-10)
    assert mom.Gamma == pytest.approx(oracles.Gamma(m), rel=1e-10)
    assert mom.mu_S == pytest.approx(-0.0133583, abs=5e-7)
    assert mom.Gamma == pytest.approx(0.0135615, abs=5e-7)
    assert mom.denom == mom.Gamma


def test_psi_at_zero_and_one():
    m = spx_vg()
    assert char_exponent_P(m, 0.0) == 0
    mom = levy_moments(m)
    # E[S_1/S_0] = exp(psi(1)) and S has drift rate mu^S
    assert char_exponent_P(m, 1.0).real == pytest.approx(mom.mu_S, rel=1e-13)


def test_psi_matches_time_changed_brownian_mgf():
    m = spx_vg()
    kappa, mm, delta = cgm_to_vg(**SPX_VG)
    # closed form VG mgf: (1 - kappa (m w + delta^2 w^2/2))^{-1/kappa}
    for w in (-3.0, 0.5, 2.0, 1.0 + 2.0j):
        ref = -np.log(1 - kappa * (mm * w + 0.5 * delta ** 2 * w * w)) / kappa
        assert complex(char_exponent_P(m, w)) == pytest.approx(complex(ref), rel=1e-12, abs=1e-14)


def test_parameter_maps_round_trip():
    k, mm, d = cgm_to_vg(**SPX_VG)
    C, G, M = vg_to_cgm(k, mm, d)
    assert (C, G, M) == pytest.approx((SPX_VG["C"], SPX_VG["G"], SPX_VG["M"]), rel=1e-12)


def test_strip_violation_is_named():
    m = spx_vg()
    with pytest.raises(StripError, match="char_exponent_P"):
        char_exponent_P(m, SPX_VG["M"] + 0.1)
    with pytest.raises(StripError):
        char_exponent_P(m, -SPX_VG["G"] - 1.0)


def test_validate_calibrated_parameters():
    rep = validate(spx_vg())
    assert rep.ok and rep.violations == ()
    c0 = levy_moments(spx_vg()).mu_S / levy_moments(spx_vg()).denom
    assert c0 == pytest.approx(-0.985, abs=1e-3)
    assert rep.epsilon == pytest.approx(0.5 * min(levy_moments(spx_vg()).denom, 1 + c0))


def test_validate_rejects_positive_drift_with_unbounded_jumps():
    m = with_c0(spx_vg(), 0.1)
    rep = validate(m)
    assert not rep.ok
    assert rep.violations[0].name == "jump_bound"
    assert math.isinf(rep.violations[0].quantity)


def test_validate_rejects_c0_below_minus_one():
    rep = validate(with_c0(spx_vg(), -1.2))
    assert not rep.ok and rep.violations[0].quantity == pytest.approx(1.2)


def test_validate_moment_checks():
    rep = validate(LevyModel(VarianceGamma(1.0, 10.0, 3.5)))
    assert [v.name for v in rep.violations][0] == "fourth_moment"
    rep = validate(LevyModel(VarianceGamma(1.0, 10.0, 1.5)))
    assert "second_moment" in [v.name for v in rep.violations]
    with pytest.raises(MomentDivergenceError):
        levy_moments(LevyModel(VarianceGamma(1.0, 10.0, 1.5)))


def test_moment_check_monotone_in_M():
    # once the fourth moment is finite it stays finite for larger M
    flags = [validate(LevyModel(VarianceGamma(1.0, 10.0, M)).with_martingale_drift())
             for M in (3.0, 3.9, 4.1, 8.0, 50.0)]
    fourth = ["fourth_moment" not in [v.name for v in r.violations] for r in flags]
    assert fourth == sorted(fourth)


def test_with_martingale_drift_is_exact():
    for m in (spx_vg(), LevyModel(JumpDiffusion(0.2, 1.0, -0.1, 0.15)), LevyModel(PureDiffusion(0.3))):
        assert levy_moments(m.with_martingale_drift()).mu_S == pytest.approx(0.0, abs=1e-17)


def test_pure_diffusion_has_no_jumps():
    m = LevyModel(PureDiffusion(0.2), mu_log=0.03)
    mom = levy_moments(m)
    assert mom.Gamma == 0.0 and mom.denom == pytest.approx(0.04)
    assert mom.mu_S == pytest.approx(0.03 + 0.02)
    assert validate(m).ok


def test_jump_diffusion_closed_forms_vs_quadrature():
    m = LevyModel(JumpDiffusion(0.15, 2.0, -0.08, 0.12), mu_log=0.01)
    mom = levy_moments(m)
    assert mom.mu_S == pytest.approx(oracles.mu_S(m), rel=1e-10)
    assert mom.Gamma == pytest.approx(oracles.Gamma(m), rel=1e-10)
    w = 0.7 - 1.3j
    assert complex(char_exponent_P(m, w)) == pytest.approx(oracles.psi(m, w), rel=1e-10)


@pytest.mark.parametrize("comp", [VGJumps(**SPX_VG), GaussianJumps(1.5, -0.05, 0.1)])
def test_component_quadrature_integrates_smooth_functions(comp):
    z, w = comp.quadrature(96)
    assert np.sum(w * np.expm1(z)) == pytest.approx(float(comp.laplace(1.0)), rel=1e-9)
    assert np.sum(w * np.expm1(z) ** 2) == pytest.approx(float(comp.gamma_hat(1.0)), rel=1e-9)
    assert np.sum(w * np.expm1(0.5 * z)) == pytest.approx(float(comp.laplace(0.5)), rel=1e-9)


@pytest.mark.parametrize("comp", [VGJumps(**SPX_VG), GaussianJumps(1.5, -0.05, 0.1)])
def test_tilt_is_exponentially_weighted_measure(comp):
    t = comp.tilt()
    for a in (0.3, -0.7, 1.5):
        # int (e^{az}-1) e^z nu = laplace(a+1) - laplace(1)
        assert float(t.laplace(a)) == pytest.approx(float(comp.laplace(a + 1) - comp.laplace(1.0)), rel=1e-12)


def test_sampler_moments():
    comp = VGJumps(**SPX_VG)
    rng = np.random.default_rng(0)
    x = comp.sample(0.5, 400_000, rng)
    assert x.mean() == pytest.approx(0.5 * comp.mean(), abs=4 * x.std() / math.sqrt(x.size))
    mgf = np.exp(x).mean()
    assert mgf == pytest.approx(math.exp(0.5 * comp.laplace(1.0)), abs=4 * np.exp(x).std() / math.sqrt(x.size))


def test_config_round_trip_and_errors():
    m = spx_vg()
    assert model_from_dict(model_to_dict(m)) == m
    with pytest.raises(ConfigError, match="model.G"):
        model_from_dict({"variant": "VarianceGamma", "C": 1.0, "M": 5.0})
    with pytest.raises(ConfigError, match="unknown variant"):
        model_from_dict({"variant": "Heston"})
    with pytest.raises(ConfigError, match="model.C"):
        model_from_dict({"variant": "VarianceGamma", "C": "x", "G": 1.0, "M": 5.0})
    with pytest.raises(ConfigError, match="model"):
        model_from_dict({"variant": "VarianceGamma", "C": -1.0, "G": 1.0, "M": 5.0})


def test_report_serialises():
    d = validate(with_c0(spx_vg(), 0.2)).to_dict()
    assert d["ok"] is False and d["violations"][0]["name"] == "jump_bound"
