import math
from types import SimpleNamespace

import numpy as np
import pytest

from anidecay.decay import (
    acceptance,
    bracket,
    compare_modes,
    decay_targets,
    fit_power_law,
    fourier_splitting_check,
    gap_bound,
    infrared_bound,
)
from anidecay.errors import FitError
from anidecay.initial_data import SpectralEnvelope, scaling_transform
from anidecay.solver import MONITOR_COLUMNS, RunConfig, run
from anidecay.spectral import Grid3, SpectralVectorField, forward_transform

from conftest import small_field

SMALL = Grid3(16, 16, 8 * math.pi, 4 * math.pi)


class TestFit:
    def test_exact_power(self):
        t = np.geomspace(1, 100, 40)
        fit = fit_power_law(t, 3 * t**-1.0)
        assert fit.exponent == pytest.approx(-1.0, abs=1e-12)
        assert fit.r2 == pytest.approx(1.0)
        assert fit.n_samples == 40

    def test_noisy_power(self):
        rng = np.random.default_rng(7)
        t = np.geomspace(1, 100, 200)
        y = t**-0.6 * (1 + 1e-3 * rng.standard_normal(t.size))
        fit = fit_power_law(t, y, (2, 80))
        assert abs(fit.exponent + 0.6) <= 0.01
        assert fit.window == (2.0, 80.0)

    def test_constant(self):
        t = np.linspace(1, 10, 20)
        fit = fit_power_law(t, np.full(t.size, 2.5))
        assert fit.exponent == pytest.approx(0.0, abs=1e-14)
        assert fit.r2 == 1.0

    def test_errors(self):
        t = np.linspace(1, 10, 20)
        with pytest.raises(FitError):
            fit_power_law(t[:5], t[:5])
        with pytest.raises(FitError):
            fit_power_law(t, -t)
        with pytest.raises(FitError):
            fit_power_law(t, t[:-1])
        with pytest.raises(FitError):
            fit_power_law(np.linspace(0, 10, 20), np.ones(20))

    def test_excluded_fraction(self):
        t = np.linspace(1, 10, 20)
        fit = fit_power_law(t, np.ones(20), excluded=np.full(20, 0.25))
        assert fit.excluded_fraction == pytest.approx(0.25)


class TestTargets:
    def test_primary_half(self):
        tg = decay_targets(0.5)
        assert tg["l2_sq"] == -0.5
        assert tg["v3_l2_sq"] == -1.0
        assert tg["d3v_l2_sq"] == -0.5
        assert tg["t_grad_h_l2_sq"] == -0.5
        assert gap_bound(0.5, 0.0) == -0.5

    def test_alternate(self):
        assert decay_targets(0.5, "alternate")["v3_l2_sq"] == -0.75
        with pytest.raises(ValueError):
            decay_targets(0.5, "other")

    def test_bracket_and_infrared(self):
        assert bracket(0.0) == 1.0
        assert infrared_bound(Grid3(8, 8, 64 * math.pi, 2 * math.pi)) == pytest.approx(256.0)


def synthetic_record(p_scale=1.0):
    t = np.linspace(0, 50, 501)
    tb = 1 + t
    s = 0.5
    series = {name: np.zeros(t.size) for name in MONITOR_COLUMNS}
    series["t"] = t
    series["l2_sq"] = tb ** (-s * p_scale)
    series["vh_l2_sq"] = 0.9 * tb ** (-s * p_scale)
    series["v3_l2_sq"] = 0.1 * tb ** (-(1.5 * s + 0.25) * p_scale)
    series["grad_h_l2_sq"] = tb ** (-(s + 1) * p_scale)
    series["grad_h_v3_l2_sq"] = tb ** (-(1.5 * s + 1.25) * p_scale)
    series["d3v_l2_sq"] = tb ** (-0.5 * p_scale)
    return SimpleNamespace(series=series, config=None)


class TestAcceptance:
    def test_exact_targets_pass(self):
        rep = acceptance(synthetic_record(), 0.5, 4, window=(5, 50))
        assert rep.passed
        for e in rep.entries:
            assert e.fitted <= e.target + 0.15

    def test_slow_decay_fails(self):
        rep = acceptance(synthetic_record(0.3), 0.5, 4, window=(5, 50))
        assert not rep.passed
        assert not rep.entries[0].passed

    def test_faster_decay_passes(self):
        assert acceptance(synthetic_record(1.5), 0.5, 4, window=(5, 50)).passed

    def test_missing_series(self):
        rec = synthetic_record()
        del rec.series["d3v_l2_sq"]
        with pytest.raises(FitError):
            acceptance(rec, 0.5, 4, window=(5, 50))

    def test_infrared_window_rejected(self):
        cfg = RunConfig(SMALL, dt=0.05, t_end=1.0, cadence=0.1, c0=0.05,
                        envelope=SpectralEnvelope(0.0, 1.0, 0.8))
        rec = synthetic_record()
        rec.config = cfg
        with pytest.raises(FitError, match="infrared"):
            acceptance(rec, 0.5, 4, window=(5, 50))

    def test_report_text_and_json(self):
        rep = acceptance(synthetic_record(), 0.5, 4, window=(5, 50))
        assert rep.to_text().count("PASS") == 6
        assert '"variant": "primary"' in rep.to_json()


def _splitting_record(v):
    cfg = RunConfig(v.grid, dt=0.05, t_end=0.2, cadence=0.1, c0=None,
                    envelope=SpectralEnvelope(0.0, 1.0, 0.8))
    return run(cfg, v)


class TestFourierSplitting:
    def test_single_mode_equality(self):
        g = SMALL
        x1, x2, _ = g.coordinates
        c = forward_transform(np.cos(2 * math.pi * (x1 + x2) / g.l_h), g).coeffs
        v = SpectralVectorField(g, np.stack([np.zeros_like(c), np.zeros_like(c), c]), div_free=True)
        fs = fourier_splitting_check(_splitting_record(v), 0.5)
        assert fs.ratio == pytest.approx(1.0, rel=1e-10)
        assert fs.all_hold

    def test_random_field_strict(self):
        fs = fourier_splitting_check(_splitting_record(small_field()), 0.5)
        assert fs.all_hold
        assert fs.ratio.max() < 1

    def test_scaling_invariant(self):
        v = small_field()
        r1 = fourier_splitting_check(_splitting_record(v), 0.5).ratio[0]
        r2 = fourier_splitting_check(_splitting_record(scaling_transform(v, 2)), 0.5).ratio[0]
        assert r2 == pytest.approx(r1, rel=1e-10)

    def test_s_mismatch(self):
        with pytest.raises(ValueError):
            fourier_splitting_check(_splitting_record(small_field()), 0.6)


class TestCompare:
    def test_linear_single_mode_ratio(self):
        g = Grid3(8, 8, 2 * math.pi, 2 * math.pi)
        x1, _, x3 = g.coordinates
        c = forward_transform(np.cos(x1 + x3), g).coeffs
        z = np.zeros_like(c)
        v = SpectralVectorField(g, np.stack([z, c, z]), div_free=True)
        base = RunConfig(g, dt=0.01, t_end=1.0, viscosity_mode="linear-only", cadence=0.1, c0=None)
        lin = run(base, v)
        from dataclasses import replace

        iso = run(replace(base, viscosity_mode="isotropic"), v)
        # kh^2 = 1 and |k|^2 = 2 for this mode; the nonlinearity of a shear wave vanishes
        e0 = lin.ledger.energy[0]
        assert lin.ledger.energy[-1] == pytest.approx(e0 * math.exp(-2.0), rel=1e-10)
        assert iso.ledger.energy[-1] == pytest.approx(e0 * math.exp(-4.0), rel=1e-10)

    def test_compare_modes(self):
        cfg = RunConfig(SMALL, dt=0.05, t_end=4.0, cadence=0.1, c0=0.05,
                        envelope=SpectralEnvelope(0.0, 1.0, 0.8))
        cmp = compare_modes(cfg, window=(1.0, 4.0))
        assert cmp.energy_end["isotropic"] < cmp.energy_end["anisotropic"]
        d = cmp.as_dict()
        assert set(d["fits"]) == {"anisotropic", "isotropic"}
        assert d["fits"]["isotropic"]["l2_sq"]["exponent"] < d["fits"]["anisotropic"]["l2_sq"]["exponent"]
