import math

import numpy as np
import pytest

from anidecay.errors import IntegrabilityError, SnapshotDensityError
from anidecay.duhamel import (
    DivFreeProfile,
    DuhamelAccumulator,
    GaussianProfile,
    advection_coeffs,
    cone_oracle,
    duhamel_kernels,
    linear_decay_quadrature,
    pressure_field,
    reconstruct_v3,
    required_cadence,
    v3_linear_norm_sq,
)
from anidecay.initial_data import SpectralEnvelope
from anidecay.solver import RunConfig, run
from anidecay.spectral import (
    Grid3,
    SpectralVectorField,
    forward_transform,
    inverse_transform,
    nonlinear_term,
    vector_from_samples,
)

from conftest import random_div_free

SMALL = Grid3(16, 16, 8 * math.pi, 4 * math.pi)


def taylor_green(g):
    x1, x2, _ = g.coordinates
    return vector_from_samples(
        np.stack([np.sin(x1) * np.cos(x2), -np.cos(x1) * np.sin(x2), np.zeros(g.shape)]), g
    )


class TestKernels:
    def test_taylor_green_pressure(self):
        g = Grid3(16, 16)
        x1, x2, _ = g.coordinates
        p = inverse_transform(pressure_field(taylor_green(g)))
        assert np.max(np.abs(p - (np.cos(2 * x1) + np.cos(2 * x2)) / 4)) < 1e-10

    def test_kernels_sum_to_third_component(self, rng):
        g = Grid3(16, 16)
        v = random_div_free(g, rng)
        f1, f2 = duhamel_kernels(v)
        n3 = np.asarray(nonlinear_term(v).coeffs[2])
        scale = np.max(np.abs(n3))
        assert np.max(np.abs(f1.coeffs + f2.coeffs - n3)) <= 1e-10 * scale

    def test_pressure_consistency(self, rng):
        g = Grid3(16, 16)
        v = random_div_free(g, rng)
        n = np.asarray(nonlinear_term(v).coeffs)
        p = pressure_field(v).coeffs
        ref = np.stack([-advection_coeffs(v)[i] - 1j * g.dk[i] * p for i in range(3)])
        ref[:, 0, 0, 0] = 0
        assert np.max(np.abs(n - ref)) <= 1e-10 * np.max(np.abs(n))

    def test_planar_flow_has_no_f1(self):
        f1, _ = duhamel_kernels(taylor_green(Grid3(16, 16)))
        assert np.max(np.abs(f1.coeffs)) < 1e-14

    def test_zero_field(self):
        f1, f2 = duhamel_kernels(SpectralVectorField.zeros(SMALL))
        assert not np.any(f1.coeffs) and not np.any(f2.coeffs)


def small_config(mode="anisotropic", t_end=2.0):
    return RunConfig(
        SMALL,
        dt=0.025,
        t_end=t_end,
        viscosity_mode=mode,
        cadence=0.05,
        envelope=SpectralEnvelope(0.0, 1.0, 0.8),
        c0=0.05,
    )


class TestSplit:
    def test_linear_only_reconstruction_exact(self):
        cfg = small_config("linear-only")
        acc = DuhamelAccumulator(SMALL, 0.1, mode="linear-only")
        run(cfg, observers=[acc])
        sp = acc.split()
        assert sp.residual <= 1e-12
        assert np.max(np.abs(sp.v3_n1.coeffs)) < 1e-15

    def test_residual_and_halving(self):
        cfg = small_config()
        coarse = DuhamelAccumulator(SMALL, 0.1)
        fine = DuhamelAccumulator(SMALL, 0.05)
        run(cfg, observers=[coarse, fine])
        r1, r2 = coarse.split().residual, fine.split().residual
        assert r1 <= 1e-4
        assert 3.0 <= r1 / r2 <= 5.0

    def test_split_sums_to_total(self):
        cfg = small_config(t_end=1.0)
        acc = DuhamelAccumulator(SMALL, 0.1)
        run(cfg, observers=[acc])
        sp = acc.split()
        total = sp.total().coeffs
        assert np.allclose(total, sp.v3_l.coeffs + sp.v3_n1.coeffs + sp.v3_n2.coeffs)

    def test_reconstruct_from_snapshots(self):
        cfg = RunConfig(
            SMALL, dt=0.025, t_end=1.0, cadence=0.05, envelope=SpectralEnvelope(0.0, 1.0, 0.8),
            c0=0.05, snapshot_cadence=0.1,
        )
        rec = run(cfg)
        acc = DuhamelAccumulator(SMALL, 0.1)
        run(cfg, observers=[acc])
        sp = reconstruct_v3(rec.snapshots, 1.0)
        assert sp.residual == pytest.approx(acc.split().residual, rel=1e-10)
        first = reconstruct_v3(rec.snapshots, 0.0)
        assert first.residual == 0.0

    def test_density_rule(self):
        need = required_cadence(SMALL)
        with pytest.raises(SnapshotDensityError) as exc:
            DuhamelAccumulator(SMALL, 2 * need)
        assert exc.value.required_cadence == pytest.approx(need)
        DuhamelAccumulator(SMALL, need)

    def test_isotropic_density_is_stricter(self):
        assert required_cadence(SMALL, "isotropic") < required_cadence(SMALL)

    def test_uneven_observation_rejected(self):
        acc = DuhamelAccumulator(SMALL, 0.1)
        z = SpectralVectorField.zeros(SMALL)
        acc.observe(0.0, z)
        with pytest.raises(ValueError):
            acc.observe(0.15, z)


class TestQuadrature:
    @pytest.mark.parametrize("a", [-0.5, 0.0, 1.0])
    @pytest.mark.parametrize("t", [0.0, 1.0, 100.0])
    def test_gaussian_closed_form(self, a, t):
        p = GaussianProfile(a)
        assert v3_linear_norm_sq(p, t) == pytest.approx(p.exact(t), rel=1e-9)

    def test_all_region_closed_form(self):
        p = DivFreeProfile(0.0, 1.5, region="all")
        for t in (0.0, 3.0, 300.0):
            assert v3_linear_norm_sq(p, t) == pytest.approx(p.exact(t), rel=1e-9)

    def test_cone_matches_oracle(self):
        p = DivFreeProfile(-0.45, -0.3, region="cone")
        for t in (0.0, 10.0, 1000.0):
            assert v3_linear_norm_sq(p, t) == pytest.approx(cone_oracle(p, t), rel=1e-8)

    def test_gaussian_fit(self):
        times = np.geomspace(10, 1000, 20)
        res = linear_decay_quadrature(GaussianProfile(0.5), times)
        assert res.fit.exponent == pytest.approx(-1.5, abs=0.02)

    def test_integrability_messages(self):
        with pytest.raises(IntegrabilityError, match="beta > 1/2"):
            DivFreeProfile(0.0, 0.4, region="all").check()
        with pytest.raises(IntegrabilityError, match="alpha > -1"):
            DivFreeProfile(-1.2, 2.0).check()
        with pytest.raises(IntegrabilityError, match="alpha \\+ beta > 3s/2 - 5/4"):
            DivFreeProfile(-0.45, -0.45).check(0.5)
        with pytest.raises(IntegrabilityError, match="a > -1"):
            GaussianProfile(-1.0).check()
        with pytest.raises(ValueError):
            DivFreeProfile(0.0, 1.0, region="half")

    def test_negative_time_rejected(self):
        with pytest.raises(ValueError):
            linear_decay_quadrature(GaussianProfile(0.0), [-1.0, 1.0])
