"""
Anisotropic dyadic decomposition on the periodic lattice.

The low-pass cutoff ``chi`` equals 1 on ``[0, 3/4]``, vanishes beyond
``4/3`` and is C-infinity, built from the ``exp(-1/x)`` smooth step.  The
annulus cutoff is ``phi(tau) = chi(tau / 2) - chi(tau)``, supported in
``[3/4, 8/3]``; the dyadic sums telescope, so the partitions of unity hold
to round-off.

Horizontal blocks localise ``|k_h|``, vertical blocks localise ``|k_3|``.
A bank keeps blocks ``j_min .. j_max`` plus the low block ``S_{j_min}``;
the default ``j_min`` makes the low block contain only ``k = 0`` in the
chosen direction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import BandError, FilterBankError, GridMismatchError
from .spectral import SpectralScalarField, _irfftn, _rfftn, derivative, inverse_transform

PHI_INNER = 0.75
PHI_OUTER = 8.0 / 3.0
CHI_OUTER = 4.0 / 3.0


def _smooth_step(x):
    x = np.asarray(x, dtype=float)
    a = np.clip(x, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        f0 = np.where(a > 0, np.exp(-1.0 / np.where(a > 0, a, 1.0)), 0.0)
        f1 = np.where(a < 1, np.exp(-1.0 / np.where(a < 1, 1.0 - a, 1.0)), 0.0)
    return f0 / (f0 + f1)


def chi_cutoff(tau):
    """Smooth low-pass: 1 on |tau| <= 3/4, 0 on |tau| >= 4/3."""
    tau = np.abs(np.asarray(tau, dtype=float))
    return 1.0 - _smooth_step((tau - PHI_INNER) / (CHI_OUTER - PHI_INNER))


def phi_cutoff(tau):
    """Dyadic annulus cutoff supported in 3/4 <= |tau| <= 8/3."""
    tau = np.asarray(tau, dtype=float)
    return chi_cutoff(tau / 2.0) - chi_cutoff(tau)


def _radial(grid, direction):
    if direction == "h":
        return grid.kh
    if direction == "v":
        return grid.abs_k3
    raise ValueError(f"direction must be 'h' or 'v', got {direction!r}")


def _radial_extent(grid, direction):
    if direction == "h":
        kmax = math.hypot(*(2 * [grid.n_h / 2 * 2 * math.pi / grid.l_h]))
        kmin = 2 * math.pi / grid.l_h
    else:
        kmax = grid.n_v / 2 * 2 * math.pi / grid.l_v
        kmin = 2 * math.pi / grid.l_v
    return kmin, kmax


@dataclass(frozen=True)
class DyadicFilterBank:
    direction: str
    j_min: int
    j_max: int
    grid: object
    chi: Callable = chi_cutoff
    phi: Callable = phi_cutoff

    @property
    def indices(self):
        return range(self.j_min, self.j_max + 1)

    def radial(self):
        return _radial(self.grid, self.direction)

    def delta_symbol(self, j):
        return self.phi(self.radial() / 2.0**j)

    def low_symbol(self, j):
        """Symbol of ``S_j`` (any integer ``j``)."""
        return self.chi(self.radial() / 2.0**j)

    @property
    def covers_grid(self):
        _, kmax = _radial_extent(self.grid, self.direction)
        return kmax <= PHI_INNER * 2.0 ** (self.j_max + 1)

    def _check_index(self, j):
        if j not in self.indices:
            raise FilterBankError(
                f"block index {j} outside bank range [{self.j_min}, {self.j_max}]",
                max_feasible=self.j_max,
            )

    def block(self, a, j):
        self._check_index(j)
        return SpectralScalarField(a.grid, self.delta_symbol(j) * a.coeffs)

    def low(self, a, j=None):
        j = self.j_min if j is None else j
        return SpectralScalarField(a.grid, self.low_symbol(j) * a.coeffs)

    def block_energies(self, coeffs):
        """Squared L^2 norms of the low block and every Delta_j block.

        ``coeffs`` may carry leading component axes.  Returns
        ``(low_energy, {j: energy})``.
        """
        g = self.grid
        low = g.lattice_sum(self.low_symbol(self.j_min) ** 2, coeffs)
        return low, {j: g.lattice_sum(self.delta_symbol(j) ** 2, coeffs) for j in self.indices}

    def partition_residual(self, n_samples=10_000, tau_max=None):
        """max |chi(tau) + sum_{j>=0} phi(2^-j tau) - 1| over samples of [0, tau_max]."""
        if tau_max is None:
            tau_max = PHI_OUTER * 2.0 ** max(self.j_max, 4)
        tau = np.linspace(0.0, tau_max, n_samples)
        top = max(0, math.ceil(math.log2(tau_max / PHI_INNER)))
        total = self.chi(tau) + sum(self.phi(tau / 2.0**j) for j in range(top + 1))
        return float(np.max(np.abs(total - 1.0)))

    def homogeneous_residual(self, j_lo, j_hi, n_samples=10_000):
        """max |sum_{j_lo}^{j_hi} phi(2^-j tau) - 1| over the covered dyadic range."""
        tau = np.geomspace(CHI_OUTER * 2.0**j_lo, PHI_INNER * 2.0 ** (j_hi + 1), n_samples)
        total = sum(self.phi(tau / 2.0**j) for j in range(j_lo, j_hi + 1))
        return float(np.max(np.abs(total - 1.0)))


def max_feasible_index(grid, direction):
    """Largest j whose annulus 2^j [3/4, 8/3] still meets the lattice."""
    _, kmax = _radial_extent(grid, direction)
    j = math.floor(math.log2(kmax / PHI_INNER))
    while PHI_INNER * 2.0**j >= kmax:
        j -= 1
    return j


def default_min_index(grid, direction):
    """Largest j whose low block S_j holds only the zero wavenumber."""
    kmin, _ = _radial_extent(grid, direction)
    j = math.ceil(math.log2(kmin / CHI_OUTER))
    while CHI_OUTER * 2.0**j >= kmin:
        j -= 1
    return j


def build_filter_bank(grid, direction, j_min=None, j_max=None):
    """Dyadic bank for ``direction`` in {'h', 'v'} on ``grid``.

    Defaults cover the whole lattice: ``j_max`` is the maximal feasible index
    and ``j_min`` isolates the zero wavenumber in the low block.
    """
    if direction not in ("h", "v"):
        raise ValueError(f"direction must be 'h' or 'v', got {direction!r}")
    feasible = max_feasible_index(grid, direction)
    j_min = default_min_index(grid, direction) if j_min is None else int(j_min)
    j_max = feasible if j_max is None else int(j_max)
    if j_max > feasible:
        raise FilterBankError(
            f"grid too coarse for block {j_max} in direction {direction!r}; "
            f"maximal feasible j_max is {feasible}",
            max_feasible=feasible,
        )
    if j_min >= j_max:
        raise FilterBankError(f"need j_min < j_max, got {j_min} >= {j_max}", max_feasible=feasible)
    return DyadicFilterBank(direction, j_min, j_max, grid)


def _bank_for(a, direction, bank):
    if bank is None:
        return build_filter_bank(a.grid, direction)
    if bank.grid != a.grid or bank.direction != direction:
        raise GridMismatchError("filter bank built for another grid or direction")
    return bank


def dyadic_block(a, direction, kind, j, bank=None):
    """``Delta_j`` (kind='delta') or ``S_j`` (kind='s_low') in ``direction``."""
    bank = _bank_for(a, direction, bank)
    if kind == "delta":
        return bank.block(a, j)
    if kind == "s_low":
        bank._check_index(j)
        return bank.low(a, j)
    raise ValueError(f"kind must be 'delta' or 's_low', got {kind!r}")


@dataclass(frozen=True)
class BonySplit:
    t_fg: SpectralScalarField
    t_gf: SpectralScalarField
    remainder: SpectralScalarField
    low_block: SpectralScalarField

    def total(self):
        return self.t_fg + self.t_gf + self.remainder + self.low_block


def _paraproduct(fa, ga, bank, shape):
    """sum_{k > j_min} S_{k-1} f * Delta_k g in physical space."""
    out = np.zeros(shape)
    for k in range(bank.j_min + 1, bank.j_max + 1):
        lo = _irfftn(bank.low_symbol(k - 1) * fa, shape)
        out += lo * _irfftn(bank.delta_symbol(k) * ga, shape)
    return out


def bony_decompose(f, g, direction, bank=None):
    """Paraproduct split ``f g = T_f g + T_g f + R(f, g) + low``.

    The low block collects the products that involve ``S_{j_min}`` with an
    adjacent block; every product is formed on the grid in physical space.
    """
    if f.grid != g.grid:
        raise GridMismatchError("f and g live on different grids")
    bank = _bank_for(f, direction, bank)
    if not bank.covers_grid:
        raise FilterBankError(
            "Bony decomposition needs a bank covering the whole lattice",
            max_feasible=max_feasible_index(f.grid, direction),
        )
    shape = f.grid.shape
    fc, gc = f.coeffs, g.coeffs
    fb = {j: _irfftn(bank.delta_symbol(j) * fc, shape) for j in bank.indices}
    gb = {j: _irfftn(bank.delta_symbol(j) * gc, shape) for j in bank.indices}
    f_low = _irfftn(bank.low_symbol(bank.j_min) * fc, shape)
    g_low = _irfftn(bank.low_symbol(bank.j_min) * gc, shape)

    t_fg = _paraproduct(fc, gc, bank, shape)
    t_gf = _paraproduct(gc, fc, bank, shape)
    rem = np.zeros(shape)
    for k in bank.indices:
        near = sum(gb[q] for q in (k - 1, k, k + 1) if q in gb)
        rem += fb[k] * near
    j0 = bank.j_min
    low = f_low * g_low + f_low * gb[j0] + fb[j0] * g_low

    def wrap(x):
        return SpectralScalarField(f.grid, _rfftn(x))

    return BonySplit(wrap(t_fg), wrap(t_gf), wrap(rem), wrap(low))


def dyadic_commutator(ell, f, g, direction="v", bank=None):
    """``[Delta_ell; f] g = Delta_ell(f g) - f Delta_ell g``.

    ``f`` is shifted by its value at the origin first; the commutator is
    unchanged and vanishes identically for constant ``f``.
    """
    if f.grid != g.grid:
        raise GridMismatchError("f and g live on different grids")
    bank = _bank_for(f, direction, bank)
    bank._check_index(ell)
    shape = f.grid.shape
    fx = inverse_transform(f)
    fx = fx - fx.flat[0]
    gx = inverse_transform(g)
    sym = bank.delta_symbol(ell)
    first = _irfftn(sym * _rfftn(fx * gx), shape)
    second = fx * _irfftn(sym * g.coeffs, shape)
    return SpectralScalarField(f.grid, _rfftn(first - second))


def commutator_ratios(f, g_of_ell, ells, direction="v", bank=None):
    """Ratios ||[Delta_l; f] g_l|| / (2^-l ||grad f||_inf ||g_l||) over ``ells``.

    ``grad`` is the derivative in the commuted direction (d/dx3 for 'v',
    the horizontal gradient for 'h').  ``g_of_ell(ell)`` returns the test
    field used at scale ``ell``.
    """
    bank = _bank_for(f, direction, bank)
    if direction == "v":
        grad_sup = float(np.max(np.abs(inverse_transform(derivative(f, 2)))))
    else:
        d1 = inverse_transform(derivative(f, 0))
        d2 = inverse_transform(derivative(f, 1))
        grad_sup = float(np.sqrt(np.max(d1**2 + d2**2)))
    ratios = {}
    for ell in ells:
        g = g_of_ell(ell)
        comm = dyadic_commutator(ell, f, g, direction, bank)
        denom = 2.0**-ell * grad_sup * math.sqrt(g.energy())
        ratios[ell] = math.sqrt(comm.energy()) / denom if denom > 0 else 0.0
    return ratios


@dataclass(frozen=True)
class BernsteinReport:
    band: int
    order: int
    ratio: float
    lower: float
    upper: float

    @property
    def within(self):
        eps = 1e-12
        return self.lower * (1 - eps) <= self.ratio <= self.upper * (1 + eps)


def _derivative_tensor_energy(a, order, axes):
    """Sum of ||d_{i1}...d_{in} a||^2 over all index tuples from ``axes``."""
    if order == 0:
        return a.energy()
    return sum(_derivative_tensor_energy(derivative(a, ax), order - 1, axes) for ax in axes)


def bernstein_check(a, band, order, direction="h", rtol=1e-12):
    """Ratio ||nabla^order a|| / ||a|| for a field banded at dyadic index ``band``.

    ``nabla`` is the horizontal gradient (direction 'h') or d/dx3 ('v'); the
    ratio must lie in [(3/4 2^j)^n, (8/3 2^j)^n].
    """
    if int(order) != order or order < 0:
        raise ValueError(f"derivative order must be a nonnegative integer, got {order}")
    order = int(order)
    c = a.coeffs
    scale = float(np.max(np.abs(c)))
    if scale == 0:
        raise BandError("Bernstein check needs a nonzero field")
    radial = _radial(a.grid, direction)
    present = np.abs(c) > 1e-13 * scale
    lo, hi = PHI_INNER * 2.0**band, PHI_OUTER * 2.0**band
    r = radial[present]
    if np.any(r < lo * (1 - rtol)) or np.any(r > hi * (1 + rtol)):
        raise BandError(
            f"spectrum spans |k| in [{r.min():.4g}, {r.max():.4g}], outside band "
            f"{band} = [{lo:.4g}, {hi:.4g}]"
        )
    axes = (0, 1) if direction == "h" else (2,)
    ratio = math.sqrt(_derivative_tensor_energy(a, order, axes) / a.energy())
    return BernsteinReport(band, order, ratio, lo**order, hi**order)
