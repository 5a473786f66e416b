"""Acceptance gate: one PASS/FAIL line per criterion, each at its stated tolerance."""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from anidecay.cli import linear_tier_error
from anidecay.decay import acceptance, fourier_splitting_check, infrared_bound
from anidecay.duhamel import DivFreeProfile, GaussianProfile, linear_decay_quadrature
from anidecay.errors import ParameterGateError
from anidecay.identities import verify_identities
from anidecay.norms import check_parameter_gate
from anidecay.solver import energy_budget


@pytest.fixture
def verdict(capsys):
    def emit(n, text, ok):
        with capsys.disabled():
            print(f"\nCRITERION {n} {'PASS' if ok else 'FAIL'}  {text}")
        assert ok, text

    return emit


def test_criterion_1_linear_tier(verdict):
    t0 = time.perf_counter()
    err = linear_tier_error(n=32, steps=1000, dt=1e-3)
    secs = time.perf_counter() - t0
    verdict(1, f"linear tier rel err {err:.2e} (tol 1e-12) in {secs:.1f} s", err <= 1e-12 and secs < 5)


def test_criterion_2_gaussian_oracle(verdict):
    times = np.geomspace(10, 1000, 30)
    worst_val, worst_exp = 0.0, 0.0
    for a in (0.5, 1.0, 1.5):
        p = GaussianProfile(a)
        res = linear_decay_quadrature(p, np.concatenate([[0.0, 1.0], times]), window=(10, 1000))
        exact = np.array([p.exact(t) for t in res.times])
        worst_val = max(worst_val, float(np.max(np.abs(res.values / exact - 1))))
        worst_exp = max(worst_exp, abs(res.fit.exponent / p.exponent() - 1))
    ok = worst_val <= 1e-6 and worst_exp <= 0.01
    verdict(2, f"Gaussian oracle rel err {worst_val:.2e}, exponent rel err {worst_exp:.2e}", ok)


def test_criterion_3_linear_v3_bound(verdict):
    times = np.geomspace(10, 1000, 30)
    lines, ok = [], True
    for s in (0.5, 0.6, 0.8):
        delta = 0.05
        p = DivFreeProfile(s - 1 + delta, s / 2 - 0.25 + delta, region="cone")
        res = linear_decay_quadrature(p, times, s=s, window=(10, 1000))
        bound = res.target + 0.05
        ok &= res.fit.exponent <= bound + 1e-9
        lines.append(f"s={s}: {res.fit.exponent:+.3f} <= {bound:+.3f}")
    verdict(3, "linear v3 exponents " + "; ".join(lines), ok)


def test_criterion_4_energy_identity(desk, verdict):
    cfg = desk.config
    assert (cfg.grid.n_h, cfg.grid.n_v) == (64, 32)
    assert cfg.grid.l_h == pytest.approx(64 * math.pi) and cfg.dt == 0.01 and cfg.t_end == 50
    b = energy_budget(desk.record)
    slack = float(np.max(b.residual - (1e-6 + b.quadrature_term)))
    div = float(np.max(desk.record.series["div_max"]))
    ok = slack <= 0 and div <= 1e-12
    verdict(
        4,
        f"energy residual {b.residual.max():.2e} vs 1e-6 + q (max q {b.quadrature_term.max():.2e}); "
        f"div {div:.1e}",
        ok,
    )


def test_criterion_5_fourier_splitting(desk, verdict):
    fs = fourier_splitting_check(desk.record, desk.config.s)
    verdict(5, f"Fourier splitting on {fs.ratio.size} samples, max ratio {fs.ratio.max():.6f}", fs.all_hold)


def test_criterion_6_duhamel(desk, verdict):
    r1, r2 = desk.coarse.split().residual, desk.fine.split().residual
    ratio = r1 / r2
    ok = r1 <= 1e-4 and 3.0 <= ratio <= 5.0
    verdict(6, f"Duhamel residual {r1:.2e} at 0.1, {r2:.2e} at 0.05 (ratio {ratio:.2f})", ok)


def test_criterion_7_ordering(desk, verdict):
    cfg = desk.config
    assert cfg.fit_window[1] <= infrared_bound(cfg.grid)
    rep = acceptance(desk.record, 0.5, cfg.s1, window=cfg.fit_window)
    print(rep.to_text())
    g = rep.gap
    verdict(
        7,
        f"gap p(v3) - p(vh) = {g.gap:+.3f} (v3 {g.v3_exponent:+.3f}, vh {g.vh_exponent:+.3f}) "
        f"<= -0.25 on [{rep.window[0]:g}, {rep.window[1]:g}]",
        g.gap <= -0.25 + 1e-9,
    )


def test_criterion_8_identities(verdict):
    t0 = time.perf_counter()
    results = verify_identities()
    secs = time.perf_counter() - t0
    failed = [r.name for r in results if not r.passed]
    verdict(8, f"{len(results) - len(failed)}/{len(results)} identities in {secs:.1f} s {failed or ''}",
            not failed and secs < 30)


def test_criterion_9_gate(verdict):
    def admitted(s):
        try:
            check_parameter_gate(s, 4)
            return True
        except ParameterGateError:
            return False

    lo = Fraction(13, 30)
    probes = {"13/30": (lo, False), "1": (1, False), "13/30+1e-6": (float(lo) + 1e-6, True),
              "0.5": (0.5, True), "1-1e-6": (1 - 1e-6, True)}
    bad = [k for k, (s, want) in probes.items() if admitted(s) != want]
    verdict(9, f"gate probes at s1 = 4 {'all as expected' if not bad else bad}", not bad)
