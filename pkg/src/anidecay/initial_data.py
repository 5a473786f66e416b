"""Divergence-free random initial fields with anisotropic spectral envelopes."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EnvelopeError
from .norms import b0half_norm, data_functionals
from .spectral import Grid3, SpectralVectorField, _leray_coeffs

# Envelope amplitudes below exp(-72) relative to the Gaussian peak are dropped.
_CUTOFF_SIGMAS = 12.0


@dataclass(frozen=True)
class SpectralEnvelope:
    """Amplitude ``amplitude * |k_h|^a_h * |k_3|^b_v * exp(-|k|^2 / (2 sigma^2))``.

    The envelope vanishes on the planes ``k_h = 0`` and ``k_3 = 0``.
    """

    a_h: float = 0.0
    b_v: float = 1.0
    sigma: float = 0.3
    amplitude: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not self.sigma > 0:
            raise EnvelopeError(f"sigma must be positive, got {self.sigma}")
        if not self.amplitude >= 0:
            raise EnvelopeError(f"amplitude must be nonnegative, got {self.amplitude}")
        if self.a_h <= -1 or self.b_v <= -0.5:
            raise EnvelopeError(
                f"envelope not square integrable: need a_h > -1 and b_v > -1/2, "
                f"got a_h = {self.a_h}, b_v = {self.b_v}"
            )

    def check_memberships(self, s):
        """Raise unless the data lie in Hdot^{-s,0}, Hdot^{-s,-s/2-1/4} and d3 v in Hdot^{-1/2,0}."""
        if not self.a_h > s - 1:
            raise EnvelopeError(
                f"Hdot^(-s,0) membership needs a_h > s - 1 = {s - 1:.6g}, got a_h = {self.a_h}"
            )
        if not self.b_v > s / 2 - 0.25:
            raise EnvelopeError(
                f"Hdot^(-s,-s/2-1/4) membership needs b_v > s/2 - 1/4 = {s / 2 - 0.25:.6g}, "
                f"got b_v = {self.b_v}"
            )
        if not self.a_h > -0.5:
            raise EnvelopeError(
                f"d3 v0 in Hdot^(-1/2,0) needs a_h > -1/2, got a_h = {self.a_h}"
            )

    def values(self, grid):
        with np.errstate(divide="ignore"):
            env = (
                self.amplitude
                * grid.kh ** self.a_h
                * grid.abs_k3 ** self.b_v
                * np.exp(-grid.kk / (2 * self.sigma**2))
            )
        env = np.where((grid.kh2 == 0) | (grid.abs_k3 == 0), 0.0, env)
        return env

    def box(self, grid):
        """Grid-independent half-widths (M_h, M_v) of the mode box that is drawn."""
        k_cut = _CUTOFF_SIGMAS * self.sigma
        return (
            int(math.ceil(k_cut * grid.l_h / (2 * math.pi))),
            int(math.ceil(k_cut * grid.l_v / (2 * math.pi))),
        )


def _random_phases(envelope, grid):
    """Per-mode phases that do not depend on the grid resolution.

    Each (component, m3, m1) row has its own generator seeded from the
    envelope seed, so refining the grid at fixed box size keeps every
    shared mode's phase.
    """
    m_h, m_v = envelope.box(grid)
    theta = np.zeros((3,) + grid.spectral_shape)
    m1s = grid.m1.ravel()
    m2s = grid.m2.ravel()
    cols = np.flatnonzero(np.abs(m2s) <= m_h)
    keep = grid.dealias_mask
    for m3 in range(min(m_v, grid.n_v // 2) + 1):
        if 3 * m3 >= grid.n_v:
            break
        for i1, m1 in enumerate(m1s):
            if abs(m1) > m_h or 3 * abs(m1) >= grid.n_h:
                continue
            for c in range(3):
                rng = np.random.default_rng([envelope.seed, c, m3, m1 + m_h])
                row = rng.uniform(0.0, 2 * np.pi, 2 * m_h + 1)
                theta[c, i1, cols, m3] = row[m2s[cols] + m_h]
    # Hermitian symmetry on the m3 = 0 plane: fundamental half is m2 > 0 or (m2 = 0, m1 > 0).
    n = grid.n_h
    idx = (-np.arange(n)) % n
    fundamental = (grid.m2[0, :, 0][None, :] > 0) | (
        (grid.m2[0, :, 0][None, :] == 0) & (grid.m1[:, 0, 0][:, None] > 0)
    )
    for c in range(3):
        plane = theta[c, :, :, 0]
        theta[c, :, :, 0] = np.where(fundamental, plane, -plane[idx][:, idx])
    return theta * keep


def generate(envelope, grid, s=0.5, s1=4, c0=None):
    """Random-phase divergence-free field under ``envelope``.

    Returns ``(field, report)``; with ``c0`` the field is rescaled to that
    B^{0,1/2} norm first.
    """
    envelope.check_memberships(float(s))
    env = envelope.values(grid) * grid.dealias_mask
    theta = _random_phases(envelope, grid)
    coeffs = _leray_coeffs(grid, env * np.exp(1j * theta))
    v0 = SpectralVectorField(grid, coeffs, div_free=True)
    if c0 is not None and envelope.amplitude > 0:
        v0 = rescale_to_smallness(v0, c0)
    report = data_functionals(v0, s, s1)
    if report.excluded_energy != 0:
        raise EnvelopeError(f"generated field has energy {report.excluded_energy} on excluded planes")
    return v0, report


def rescale_to_smallness(v0, target_c0, bank=None):
    """Scalar multiple of ``v0`` with B^{0,1/2} norm ``target_c0``."""
    norm = b0half_norm(v0, bank)
    if norm == 0:
        raise ValueError("cannot rescale the zero field")
    return v0 * (target_c0 / norm)


def scaling_transform(v0, lam):
    """``lam * v0(lam x)`` for ``lam = 2^m``.

    The box shrinks by ``lam``; mode indices are unchanged, so mode ``k``
    moves to wavenumber ``lam k`` and its coefficient is multiplied by
    ``lam``.
    """
    lam = float(lam)
    if not lam > 0:
        raise ValueError(f"scaling factor must be positive, got {lam}")
    mant, _ = math.frexp(lam)
    if mant != 0.5:
        raise ValueError(f"scaling factor must be a power of 2, got {lam}")
    g = v0.grid
    grid = Grid3(g.n_h, g.n_v, g.l_h / lam, g.l_v / lam)
    return SpectralVectorField(grid, lam * np.asarray(v0.coeffs), v0.div_free)
