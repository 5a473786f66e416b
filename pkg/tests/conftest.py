import math
from types import SimpleNamespace

import numpy as np
import pytest

from anidecay.config import parse_config
from anidecay.duhamel import DuhamelAccumulator
from anidecay.initial_data import SpectralEnvelope, generate
from anidecay.solver import run
from anidecay.spectral import Grid3, SpectralVectorField, _leray_coeffs, vector_from_samples


@pytest.fixture(scope="session")
def desk():
    """The desk configuration run once, with Duhamel accumulators at cadences 0.1 and 0.05."""
    cfg = parse_config()
    coarse = DuhamelAccumulator(cfg.grid, 0.1)
    fine = DuhamelAccumulator(cfg.grid, 0.05)
    record = run(cfg, observers=[coarse, fine])
    return SimpleNamespace(config=cfg, record=record, coarse=coarse, fine=fine)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_div_free(grid, rng, dealias=True, scale=1.0):
    v = vector_from_samples(rng.standard_normal((3,) + grid.shape), grid)
    c = _leray_coeffs(grid, np.asarray(v.coeffs)) * scale
    if dealias:
        c = c * grid.dealias_mask
    return SpectralVectorField(grid, c, div_free=True)


def small_field(n_h=16, n_v=16, l_h=8 * math.pi, l_v=4 * math.pi, sigma=0.8, c0=0.05, seed=0):
    grid = Grid3(n_h, n_v, l_h, l_v)
    v0, _ = generate(SpectralEnvelope(0.0, 1.0, sigma, seed=seed), grid, c0=c0)
    return v0
