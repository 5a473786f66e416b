"""Self-check suite over the exact identities the numerics rely on."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .decay import fourier_splitting_check
from .duhamel import advection_coeffs, duhamel_kernels, pressure_field
from .initial_data import SpectralEnvelope
from .littlewood_paley import bernstein_check, bony_decompose, build_filter_bank
from .solver import RunConfig, energy_budget, run
from .spectral import (
    Grid3,
    SpectralScalarField,
    SpectralVectorField,
    _leray_coeffs,
    forward_transform,
    inner,
    inverse_transform,
    leray_project,
    nonlinear_term,
    vector_from_samples,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    tolerance: float
    passed: bool
    seconds: float

    def line(self):
        mark = "PASS" if self.passed else "FAIL"
        return f"{mark}  {self.name:<28} {self.value:.3e}  (tol {self.tolerance:.0e}, {self.seconds:.2f} s)"


def _rel_max(a, b):
    scale = float(np.max(np.abs(b)))
    return float(np.max(np.abs(a - b))) / scale if scale else float(np.max(np.abs(a)))


def _random_div_free(grid, rng, dealias=True):
    v = vector_from_samples(rng.standard_normal((3,) + grid.shape), grid)
    c = _leray_coeffs(grid, np.asarray(v.coeffs))
    if dealias:
        c = c * grid.dealias_mask
    return SpectralVectorField(grid, c, div_free=True)


def check_plancherel(grid, rng):
    a = rng.standard_normal(grid.shape)
    phys = float(np.sum(a**2)) * grid.cell_volume
    fourier = forward_transform(a, grid).energy()
    return abs(phys - fourier) / phys


def check_leray(grid, rng):
    v = vector_from_samples(rng.standard_normal((3,) + grid.shape), grid)
    p = leray_project(v)
    pp = leray_project(p)
    return _rel_max(np.asarray(pp.coeffs), np.asarray(p.coeffs))


def check_partition(grid, bank_factory=None):
    worst = 0.0
    for d in ("h", "v"):
        bank = (bank_factory or build_filter_bank)(grid, d)
        worst = max(worst, bank.partition_residual())
        # the lattice symbols must sum to one as well
        total = bank.low_symbol(bank.j_min) + sum(bank.delta_symbol(j) for j in bank.indices)
        worst = max(worst, float(np.max(np.abs(total - 1.0))))
    return worst


def check_paraproduct(grid, rng):
    f = forward_transform(rng.standard_normal(grid.shape), grid)
    g = forward_transform(rng.standard_normal(grid.shape), grid)
    fg = forward_transform(inverse_transform(f) * inverse_transform(g), grid)
    worst = 0.0
    for d in ("h", "v"):
        split = bony_decompose(f, g, d)
        worst = max(worst, _rel_max(np.asarray(split.total().coeffs), np.asarray(fg.coeffs)))
    return worst


def check_bernstein(grid, rng):
    """Worst relative excursion of banded ratios outside [(3/4 2^j)^n, (8/3 2^j)^n]."""
    # Nyquist modes have no odd symbol, so they are kept out of the bands
    nyq = (
        (np.abs(grid.m1) == grid.n_h // 2)
        | (np.abs(grid.m2) == grid.n_h // 2)
        | (grid.m3 == grid.n_v // 2)
    )
    worst = 0.0
    for d in ("h", "v"):
        bank = build_filter_bank(grid, d)
        radial = bank.radial()
        for j in bank.indices:
            lo, hi = 0.75 * 2.0**j, 8 / 3 * 2.0**j
            band = (radial >= lo) & (radial <= hi) & (radial > 0) & ~nyq
            if not band.any():
                continue
            shape = grid.spectral_shape
            c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
            a = forward_transform(inverse_transform(SpectralScalarField(grid, c * band)), grid)
            c = np.where(band, a.coeffs, 0.0)
            if not np.any(c):
                continue
            a = SpectralScalarField(grid, c)
            for n in (1, 2):
                rep = bernstein_check(a, j, n, direction=d)
                excess = max(rep.lower - rep.ratio, rep.ratio - rep.upper, 0.0) / rep.lower
                worst = max(worst, excess)
    return worst


def check_kernel_identity(grid, rng):
    v = _random_div_free(grid, rng)
    f1, f2 = duhamel_kernels(v)
    adv = advection_coeffs(v)
    p = pressure_field(v)
    ref = -(adv[2] + 1j * grid.dk[2] * p.coeffs)
    ref[0, 0, 0] = 0.0
    return _rel_max(f1.coeffs + f2.coeffs, ref)


def check_pressure_consistency(grid, rng):
    v = _random_div_free(grid, rng)
    n = np.asarray(nonlinear_term(v).coeffs)
    adv = advection_coeffs(v)
    p = pressure_field(v).coeffs
    ref = np.stack([-adv[i] - 1j * grid.dk[i] * p for i in range(3)])
    ref[:, 0, 0, 0] = 0.0
    return _rel_max(n, ref)


def check_skew(grid, rng):
    v = _random_div_free(grid, rng)
    n = nonlinear_term(v)
    return abs(inner(v, n)) / (math.sqrt(v.energy() * n.energy()) or 1.0)


def check_energy_run(n):
    grid = Grid3(n, n, 8 * math.pi, 4 * math.pi)
    cfg = RunConfig(
        grid,
        dt=0.05,
        t_end=2.0,
        cadence=0.1,
        envelope=SpectralEnvelope(0.0, 1.0, 0.8),
        c0=0.05,
    )
    rec = run(cfg)
    b = energy_budget(rec)
    fs = fourier_splitting_check(rec, cfg.s)
    div = float(np.max(rec.series["div_max"]))
    return max(float(np.max(b.corrected_residual)), div, 0.0 if fs.all_hold else math.inf)


def verify_identities(n=16, seed=0, bank_factory=None):
    """Run every identity check on an ``n^3`` grid; returns a list of :class:`CheckResult`."""
    grid = Grid3(n, n, 2 * math.pi, 2 * math.pi)
    rng = np.random.default_rng(seed)
    checks = [
        ("plancherel", lambda: check_plancherel(grid, rng), 1e-12),
        ("leray_idempotence", lambda: check_leray(grid, rng), 1e-12),
        ("partition_of_unity", lambda: check_partition(grid, bank_factory), 1e-12),
        ("paraproduct_reconstruction", lambda: check_paraproduct(grid, rng), 1e-10),
        ("bernstein_bands", lambda: check_bernstein(grid, rng), 1e-12),
        ("kernel_identity", lambda: check_kernel_identity(grid, rng), 1e-10),
        ("pressure_consistency", lambda: check_pressure_consistency(grid, rng), 1e-10),
        ("nonlinear_skew_symmetry", lambda: check_skew(grid, rng), 1e-12),
        ("energy_identity_short_run", lambda: check_energy_run(n), 1e-6),
    ]
    results = []
    for name, fn, tol in checks:
        t0 = time.perf_counter()
        try:
            value = float(fn())
        except Exception:  # a crashing check is a failed check
            value = math.inf
        results.append(CheckResult(name, value, tol, value <= tol, time.perf_counter() - t0))
    return results

