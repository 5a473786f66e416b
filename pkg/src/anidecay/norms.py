"""
Norms and initial-data functionals on the lattice.

Every Sobolev-type norm is a weighted lattice sum
``V * sum_m |k_h|^{2 s_h} |k_3|^{2 s_v} |c_m|^2`` (see :mod:`.spectral`).
Negative exponents exclude the singular plane (``k_h = 0`` or ``k_3 = 0``);
the energy removed that way is always returned with the value.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .errors import ParameterGateError
from .littlewood_paley import build_filter_bank
from .spectral import (
    SpectralScalarField,
    SpectralVectorField,
    _divergence_coeffs,
    inverse_transform,
)


class NormValue(NamedTuple):
    value: float
    excluded_energy: float


def l2_norm(a):
    return math.sqrt(a.grid.lattice_sum(1.0, a.coeffs))


def sobolev_weight(grid, s_h, s_v):
    """Returns ``(weight, excluded_mask)`` for the Hdot^{s_h, s_v} sum."""
    if not (math.isfinite(s_h) and math.isfinite(s_v)):
        raise ValueError(f"Sobolev exponents must be finite, got ({s_h}, {s_v})")
    excluded = np.zeros(grid.spectral_shape, bool)
    if s_h < 0:
        excluded |= grid.kh2 == 0
    if s_v < 0:
        excluded |= grid.abs_k3 == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        w = grid.kh2**s_h * grid.abs_k3 ** (2 * s_v)
    w = np.where(excluded, 0.0, w)
    return w, excluded


def aniso_sobolev_sq(a, s_h, s_v):
    """Squared Hdot^{s_h, s_v} norm and excluded energy (scalar or vector)."""
    w, excluded = sobolev_weight(a.grid, s_h, s_v)
    value = a.grid.lattice_sum(w, a.coeffs)
    lost = a.grid.lattice_sum(excluded.astype(float), a.coeffs) if excluded.any() else 0.0
    return NormValue(value, lost)


def aniso_sobolev_norm(a, s_h, s_v):
    sq = aniso_sobolev_sq(a, s_h, s_v)
    return NormValue(math.sqrt(sq.value), sq.excluded_energy)


def b0half_norm(a, bank=None):
    """Critical vertical Besov norm sum_l 2^{l/2} ||Delta_l^v a||.

    The low block ``S_{j_min}`` enters with weight ``2^{j_min/2}``.
    """
    return b0half_from_coeffs(a.grid, a.coeffs, bank)


def b0half_from_coeffs(grid, coeffs, bank=None):
    """B^{0,1/2} norm of raw coefficients (leading component axes allowed)."""
    if bank is None:
        bank = build_filter_bank(grid, "v")
    low, blocks = bank.block_energies(coeffs)
    total = 2.0 ** (bank.j_min / 2) * math.sqrt(low)
    for j, e in blocks.items():
        total += 2.0 ** (j / 2) * math.sqrt(e)
    return total


def _lp(values, p, axes, measure):
    if p == math.inf:
        return np.max(np.abs(values), axis=axes)
    return (np.sum(np.abs(values) ** p, axis=axes) * measure) ** (1.0 / p)


def mixed_lebesgue_norm(a, p_h, q_v):
    """L^p_h(L^q_v) norm by quadrature on the grid; L^inf is the grid max.

    Vector fields use the pointwise Euclidean length.
    """
    for e in (p_h, q_v):
        if e not in (2, 4, math.inf):
            raise ValueError(f"mixed Lebesgue exponents must be 2, 4 or inf, got {e}")
    g = a.grid
    if isinstance(a, SpectralVectorField):
        x = np.sqrt(sum(inverse_transform(c) ** 2 for c in a.components))
    else:
        x = inverse_transform(a)
    dx_h = (g.l_h / g.n_h) ** 2
    dx_v = g.l_v / g.n_v
    inner = _lp(x, q_v, 2, dx_v)
    return float(_lp(inner, p_h, (0, 1), dx_h))


def component(v, i):
    return SpectralScalarField(v.grid, v.coeffs[i])


def vertical_derivative(v):
    """d/dx3 of a vector field as a plain coefficient array."""
    return 1j * v.grid.dk[2] * v.coeffs


# ---------------------------------------------------------------- gate


def as_rational(x):
    """Rational value of ``x``; floats are read as the nearest simple fraction.

    Accepts ints, Fractions and strings such as ``"13/30"``.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, str)):
        return Fraction(x)
    return Fraction(float(x)).limit_denominator(10**9)


def gate_lower_bound(s1):
    s1 = as_rational(s1)
    return (1 + 3 * s1) / (10 * (s1 - 1))


def check_parameter_gate(s, s1):
    """Raise unless s1 > 2 and (1 + 3 s1) / (10 (s1 - 1)) < s < 1."""
    s_r, s1_r = as_rational(s), as_rational(s1)
    if not s1_r > 2:
        raise ParameterGateError(f"s1 must exceed 2, got s1 = {s1}")
    lower = gate_lower_bound(s1_r)
    if not (lower < s_r < 1):
        raise ParameterGateError(
            f"s = {s} is outside the admissible interval ({lower}, 1) for s1 = {s1}"
        )
    return lower


@dataclass(frozen=True)
class InitialDataReport:
    s: float
    s1: float
    l2_sq: float
    hneg_s_sq: float
    v3_l2_sq: float
    hneg_s_sv_sq: float
    d3v_hneg_half_sq: float
    h0s1_sq: float
    c0_norm: float
    a_s: float
    b_s: float
    e0: float
    excluded_energy: float

    def recompute(self):
        """(A_s, B_s, E_0) rebuilt from the stored component norms."""
        a_s = self.l2_sq + self.hneg_s_sq
        b_s = self.v3_l2_sq + self.hneg_s_sv_sq + a_s**1.5
        e0 = self.d3v_hneg_half_sq + self.h0s1_sq * (a_s * b_s) ** (
            (self.s1 - 1) / (3 * self.s1 - 2)
        )
        return a_s, b_s, e0

    def as_dict(self):
        return asdict(self)


def data_functionals(v0, s, s1, bank=None):
    """A_s, B_s, E_0 and the B^{0,1/2} norm of ``v0``."""
    check_parameter_gate(s, s1)
    s, s1 = float(s), float(s1)
    l2 = aniso_sobolev_sq(v0, 0.0, 0.0)
    hneg = aniso_sobolev_sq(v0, -s, 0.0)
    hmix = aniso_sobolev_sq(v0, -s, -s / 2 - 0.25)
    v3 = v0.grid.lattice_sum(1.0, v0.coeffs[2])
    d3v = SpectralVectorField(v0.grid, vertical_derivative(v0))
    d3 = aniso_sobolev_sq(d3v, -0.5, 0.0)
    h0s1 = aniso_sobolev_sq(v0, 0.0, s1)
    a_s = l2.value + hneg.value
    b_s = v3 + hmix.value + a_s**1.5
    e0 = d3.value + h0s1.value * (a_s * b_s) ** ((s1 - 1) / (3 * s1 - 2))
    return InitialDataReport(
        s=s,
        s1=s1,
        l2_sq=l2.value,
        hneg_s_sq=hneg.value,
        v3_l2_sq=v3,
        hneg_s_sv_sq=hmix.value,
        d3v_hneg_half_sq=d3.value,
        h0s1_sq=h0s1.value,
        c0_norm=b0half_norm(v0, bank),
        a_s=a_s,
        b_s=b_s,
        e0=e0,
        excluded_energy=hneg.excluded_energy + hmix.excluded_energy + d3.excluded_energy,
    )


def divergence_sup(v):
    """max |k.v(k)| relative to max |v(k)| (0 for the zero field)."""
    scale = float(np.max(np.abs(v.coeffs)))
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(_divergence_coeffs(v.grid, v.coeffs)))) / scale
