import math

import numpy as np
import pytest

from anidecay.errors import EnvelopeError
from anidecay.initial_data import SpectralEnvelope, generate, rescale_to_smallness, scaling_transform
from anidecay.norms import b0half_norm, divergence_sup
from anidecay.spectral import Grid3, expand_half_spectrum


GRID = Grid3(16, 16, 8 * math.pi, 4 * math.pi)


class TestEnvelope:
    def test_membership_conditions(self):
        with pytest.raises(EnvelopeError, match="a_h > s - 1"):
            SpectralEnvelope(a_h=-0.6).check_memberships(0.5)
        with pytest.raises(EnvelopeError, match="b_v > s/2 - 1/4"):
            SpectralEnvelope(b_v=-0.1).check_memberships(0.5)
        with pytest.raises(EnvelopeError, match="a_h > -1/2"):
            SpectralEnvelope(a_h=-0.55).check_memberships(0.4)
        SpectralEnvelope(a_h=-0.45, b_v=0.01).check_memberships(0.5)

    def test_invalid_parameters(self):
        with pytest.raises(EnvelopeError):
            SpectralEnvelope(sigma=0)
        with pytest.raises(EnvelopeError):
            SpectralEnvelope(amplitude=-1)


class TestGenerate:
    def test_structure(self):
        v0, rep = generate(SpectralEnvelope(0.0, 1.0, 0.8), GRID, c0=0.05)
        c = np.asarray(v0.coeffs)
        assert divergence_sup(v0) < 1e-14
        assert np.all(c[:, ~GRID.dealias_mask] == 0)
        assert np.all(c[:, GRID.kh2 == 0] == 0)
        assert np.all(c[..., 0] == 0)
        assert all(comp.hermitian_defect() < 1e-15 for comp in v0.components)
        assert rep.c0_norm == pytest.approx(0.05, rel=1e-12)
        assert rep.excluded_energy == 0

    def test_real_field(self):
        v0, _ = generate(SpectralEnvelope(0.0, 1.0, 0.8), GRID)
        full = expand_half_spectrum(np.asarray(v0.coeffs), GRID.n_v)
        phys = np.fft.ifftn(full, axes=(1, 2, 3)) * np.prod(GRID.shape)
        assert np.max(np.abs(phys.imag)) < 1e-13 * np.max(np.abs(phys.real))

    def test_seeded_determinism(self):
        env = SpectralEnvelope(0.0, 1.0, 0.8, seed=7)
        a, _ = generate(env, GRID)
        b, _ = generate(env, GRID)
        c, _ = generate(SpectralEnvelope(0.0, 1.0, 0.8, seed=8), GRID)
        assert np.array_equal(a.coeffs, b.coeffs)
        assert not np.array_equal(a.coeffs, c.coeffs)

    def test_resolution_independent_modes(self):
        env = SpectralEnvelope(0.0, 1.0, 0.8, seed=3)
        fine_grid = Grid3(32, 32, GRID.l_h, GRID.l_v)
        coarse, _ = generate(env, GRID, c0=None)
        fine, _ = generate(env, fine_grid, c0=None)
        cf = np.asarray(fine.coeffs)
        cc = np.asarray(coarse.coeffs)
        m = GRID.m1.ravel()
        keep = 3 * np.abs(m) < GRID.n_h
        idx = np.flatnonzero(keep)
        fine_idx = m[idx] % fine_grid.n_h
        nz = GRID.n_v // 2 + 1
        sub = cf[:, fine_idx][:, :, fine_idx][..., :nz]
        ref = cc[:, idx][:, :, idx]
        mask3 = 3 * np.arange(nz) < GRID.n_v
        assert np.array_equal(sub[..., mask3], ref[..., mask3])

    def test_functionals_stable_under_refinement(self):
        env = SpectralEnvelope(0.0, 1.0, 0.2, seed=1)
        a = generate(env, GRID, c0=None)[1]
        b = generate(env, Grid3(32, 32, GRID.l_h, GRID.l_v), c0=None)[1]
        for name in ("l2_sq", "hneg_s_sq", "a_s", "b_s", "e0"):
            assert getattr(b, name) == pytest.approx(getattr(a, name), rel=1e-8)

    def test_membership_violation_raises(self):
        with pytest.raises(EnvelopeError):
            generate(SpectralEnvelope(-0.6, 1.0, 0.8), GRID, s=0.5)


class TestScaling:
    def test_rescale(self):
        v0, _ = generate(SpectralEnvelope(0.0, 1.0, 0.8), GRID, c0=None)
        v = rescale_to_smallness(v0, 0.01)
        assert b0half_norm(v) == pytest.approx(0.01, rel=1e-13)
        with pytest.raises(ValueError):
            rescale_to_smallness(v0 * 0.0, 0.01)

    @pytest.mark.parametrize("m", [-1, 1, 2])
    def test_scaling_transform(self, m):
        v0, _ = generate(SpectralEnvelope(0.0, 1.0, 0.8), GRID, c0=0.05)
        lam = 2.0**m
        w = scaling_transform(v0, lam)
        assert w.grid.l_h == pytest.approx(GRID.l_h / lam)
        # L^2 scales like lam^-1/2, B^{0,1/2} is invariant
        assert w.energy() == pytest.approx(v0.energy() / lam, rel=1e-13)
        assert b0half_norm(w) == pytest.approx(b0half_norm(v0), rel=1e-12)

    def test_scaling_requires_power_of_two(self):
        v0, _ = generate(SpectralEnvelope(0.0, 1.0, 0.8), GRID)
        with pytest.raises(ValueError):
            scaling_transform(v0, 3.0)
        with pytest.raises(ValueError):
            scaling_transform(v0, -2.0)
