"""Seeded random draws shared by the test modules."""
import numpy as np

from openxxz import ModelParams, SpectralSets


def params(L, seed, **kw):
    return ModelParams.random_generic(L, np.random.default_rng([L, seed]), **kw)


def draw(n, L, seed):
    rng = np.random.default_rng([n, L, seed, 99])
    p = ModelParams.random_generic(L, rng)
    return p, SpectralSets.random(n, rng, params=p)


def cpoint(rng, r=1.0):
    return complex(rng.uniform(-r, r), rng.uniform(-r, r))
