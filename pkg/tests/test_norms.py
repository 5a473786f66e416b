import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anidecay.errors import ParameterGateError
from anidecay.littlewood_paley import phi_cutoff
from anidecay.norms import (
    aniso_sobolev_norm,
    aniso_sobolev_sq,
    as_rational,
    b0half_norm,
    check_parameter_gate,
    data_functionals,
    gate_lower_bound,
    l2_norm,
    mixed_lebesgue_norm,
)
from anidecay.spectral import Grid3, forward_transform

from conftest import random_div_free, small_field


def _mode(g, m1, m3, amp=1.0):
    x1, _, x3 = g.coordinates
    return forward_transform(amp * np.cos(2 * math.pi * (m1 * x1 / g.l_h + m3 * x3 / g.l_v)), g)


class TestSobolev:
    def test_single_mode_closed_form(self):
        g = Grid3(16, 16, 4 * math.pi, 2 * math.pi)
        a = _mode(g, 3, 2)
        kh, k3 = 2 * math.pi * 3 / g.l_h, 2.0
        # cos has energy V / 2
        for sh, sv in [(0, 0), (-0.5, 0), (1, 0.5), (-0.3, -0.4)]:
            val = aniso_sobolev_sq(a, sh, sv)
            assert val.value == pytest.approx(g.volume / 2 * kh ** (2 * sh) * k3 ** (2 * sv), rel=1e-13)
            assert val.excluded_energy <= 1e-20 * g.volume

    def test_l2_matches_physical(self, rng):
        g = Grid3(8, 8, 3.0, 2.0)
        x = rng.standard_normal(g.shape)
        a = forward_transform(x, g)
        assert l2_norm(a) == pytest.approx(math.sqrt(np.sum(x**2) * g.cell_volume), rel=1e-13)
        assert aniso_sobolev_norm(a, 0, 0).value == pytest.approx(l2_norm(a), rel=1e-14)

    def test_excluded_plane_reported(self):
        g = Grid3(8, 8)
        a = _mode(g, 0, 1, 2.0)
        val = aniso_sobolev_sq(a, -0.5, 0.0)
        assert val.value == 0
        assert val.excluded_energy == pytest.approx(2 * g.volume)

    def test_vector_sums_components(self, rng):
        g = Grid3(8, 8)
        v = random_div_free(g, rng)
        total = sum(aniso_sobolev_sq(c, 0.5, 0.25).value for c in v.components)
        assert aniso_sobolev_sq(v, 0.5, 0.25).value == pytest.approx(total, rel=1e-13)


class TestBesov:
    def test_single_vertical_mode(self):
        g = Grid3(8, 32, 2 * math.pi, 2 * math.pi)
        a = _mode(g, 1, 2)
        # k3 = 2 is shared by block 1 (weight phi(1)) and block 0 (weight phi(2))
        p1 = 1 / (1 + math.exp(7 / 12))
        amp = math.sqrt(g.volume / 2)
        expected = 2**0.5 * p1 * amp + 1.0 * (1 - p1) * amp
        assert b0half_norm(a) == pytest.approx(expected, rel=1e-13)

    def test_homogeneity(self, rng):
        g = Grid3(8, 16)
        v = random_div_free(g, rng)
        assert b0half_norm(v * 3.0) == pytest.approx(3 * b0half_norm(v), rel=1e-14)


class TestLebesgue:
    def test_l2_l2_is_l2(self, rng):
        g = Grid3(8, 8, 2.0, 3.0)
        a = forward_transform(rng.standard_normal(g.shape), g)
        assert mixed_lebesgue_norm(a, 2, 2) == pytest.approx(l2_norm(a), rel=1e-13)

    def test_cos_fourth_power(self):
        g = Grid3(16, 8)
        a = _mode(g, 1, 0)
        assert mixed_lebesgue_norm(a, 4, 4) == pytest.approx((3 * g.volume / 8) ** 0.25, rel=1e-13)
        assert mixed_lebesgue_norm(a, math.inf, math.inf) == pytest.approx(1.0)
        # sup in x3 of |cos x1| is |cos x1|; its L^2 over the horizontal plane
        assert mixed_lebesgue_norm(a, 2, math.inf) == pytest.approx(math.sqrt(g.l_h**2 / 2), rel=1e-13)

    def test_rejects_other_exponents(self):
        g = Grid3(8, 8)
        with pytest.raises(ValueError):
            mixed_lebesgue_norm(_mode(g, 1, 1), 3, 2)


class TestGate:
    def test_lower_bound_at_s1_4(self):
        assert gate_lower_bound(4) == Fraction(13, 30)

    def test_boundary_probes(self):
        for s in (13 / 30, Fraction(13, 30), 1, 1.0, 0.4):
            with pytest.raises(ParameterGateError):
                check_parameter_gate(s, 4)
        check_parameter_gate(13 / 30 + 1e-6, 4)
        check_parameter_gate("0.5", 4)

    def test_s1_must_exceed_two(self):
        with pytest.raises(ParameterGateError):
            check_parameter_gate(0.9, 2)

    def test_rationalisation(self):
        assert as_rational(13 / 30) == Fraction(13, 30)
        assert as_rational("13/30") == Fraction(13, 30)

    @settings(max_examples=100, deadline=None)
    @given(num=st.integers(1, 10**6), s1=st.integers(3, 50))
    def test_interior_accepted(self, num, s1):
        lower = gate_lower_bound(s1)
        s = lower + (1 - lower) * Fraction(num, 10**6 + 1)
        check_parameter_gate(s, s1)


class TestDataFunctionals:
    def test_recompute_matches(self):
        v0 = small_field()
        rep = data_functionals(v0, 0.5, 4)
        a_s, b_s, e0 = rep.recompute()
        assert (a_s, b_s, e0) == pytest.approx((rep.a_s, rep.b_s, rep.e0), rel=1e-14)
        assert rep.c0_norm == pytest.approx(0.05, rel=1e-12)
        assert rep.excluded_energy == 0
        assert rep.a_s == pytest.approx(rep.l2_sq + rep.hneg_s_sq)

    def test_gate_enforced(self):
        with pytest.raises(ParameterGateError):
            data_functionals(small_field(), 0.4, 4)
