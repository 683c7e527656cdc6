"""Shared model factories for the tests."""

import numpy as np

from quadhedge import JumpDiffusion, LevyModel, PureDiffusion, VarianceGamma, levy_moments, validate

SPX_VG = dict(C=6.7910, G=30.1807, M=33.1507)
STRIKES_21 = np.arange(1500.0, 2501.0, 50.0)


def spx_vg(S0=2000.0, T=1.0, **kw):
    return LevyModel(VarianceGamma(**SPX_VG), S0=S0, T=T, **kw)


def with_c0(model, c0):
    """Same jumps with drift chosen so that ``mu^S / (sigma^2 + Gamma) == c0``."""
    return model.with_mu_S(c0 * levy_moments(model).denom)


def random_valid_models(seed, n):
    """``n`` random models across the three families, all passing ``validate``."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        kind = len(out) % 3
        if kind == 0:
            base = LevyModel(VarianceGamma(rng.uniform(1, 10), rng.uniform(5, 40), rng.uniform(6, 45)))
        elif kind == 1:
            base = LevyModel(JumpDiffusion(rng.uniform(0.05, 0.5), rng.uniform(0.1, 5.0),
                                           rng.uniform(-0.2, 0.1), rng.uniform(0.02, 0.3)))
        else:
            base = LevyModel(PureDiffusion(rng.uniform(0.05, 0.6)))
        c0 = rng.uniform(-2.0, 2.0) if kind == 2 else rng.uniform(-0.9, 0.0)
        m = with_c0(base, c0)
        if validate(m).ok:
            out.append(m)
    return out


def random_point(rng, lo, hi, re_cap=3.0, im_cap=5.0):
    """A complex point strictly inside the strip ``(lo, hi)``, away from the edges."""
    a = max(lo, -re_cap / 0.8) * 0.8
    b = min(hi, re_cap / 0.8) * 0.8
    return complex(rng.uniform(a, b), rng.uniform(-im_cap, im_cap))
