"""
Integrating-factor RK4 time stepping for the anisotropic Navier-Stokes system

    d_t v - Delta_h v + P(v . grad v) = 0,   div v = 0

on a periodic box, with an isotropic (Delta) comparison mode and a
linear-only mode.  The viscous semigroup is applied exactly through the
diagonal symbol ``exp(-t nu(k))``.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import asdict, dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .errors import BlowUpError, ConfigError, GridMismatchError
from .initial_data import SpectralEnvelope, generate
from .littlewood_paley import build_filter_bank
from .norms import b0half_from_coeffs, check_parameter_gate, sobolev_weight
from .spectral import Grid3, SpectralVectorField, _divergence_coeffs, _irfftn, _leray_coeffs, nonlinear_coeffs

log = logging.getLogger(__name__)

VISCOSITY_MODES = ("anisotropic", "isotropic", "linear-only")
C_CFL = 1.0
BLOWUP_FACTOR = 1e6


class CflWarning(RuntimeWarning):
    """The time step exceeds the advective CFL advisory at t = 0."""


def _ratio_steps(x, dt, what):
    n = x / dt
    r = round(n)
    if r < 0 or abs(n - r) > 1e-9 * max(1.0, abs(n)):
        raise ConfigError(f"{what} = {x} is not a nonnegative integer multiple of dt = {dt}")
    return int(r)


@dataclass(frozen=True)
class RunConfig:
    grid: Grid3
    dt: float = 1e-2
    t_end: float = 1.0
    viscosity_mode: str = "anisotropic"
    cadence: float = 0.1
    envelope: SpectralEnvelope = field(default_factory=SpectralEnvelope)
    s: float = 0.5
    s1: float = 4.0
    c0: float | None = 0.05
    fit_window: tuple | None = None
    seed: int = 0
    snapshot_cadence: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ConfigError(f"dt must be positive and finite, got {self.dt}")
        if not (math.isfinite(self.t_end) and self.t_end >= 0):
            raise ConfigError(f"t_end must be nonnegative and finite, got {self.t_end}")
        if self.viscosity_mode not in VISCOSITY_MODES:
            raise ConfigError(
                f"viscosity_mode must be one of {VISCOSITY_MODES}, got {self.viscosity_mode!r}"
            )
        _ratio_steps(self.t_end, self.dt, "t_end")
        if _ratio_steps(self.cadence, self.dt, "cadence") == 0:
            raise ConfigError("cadence must be at least one time step")
        if self.snapshot_cadence is not None and _ratio_steps(
            self.snapshot_cadence, self.dt, "snapshot_cadence"
        ) == 0:
            raise ConfigError("snapshot_cadence must be at least one time step")
        if self.c0 is not None and not self.c0 >= 0:
            raise ConfigError(f"c0 must be nonnegative, got {self.c0}")
        if self.fit_window is not None:
            t0, t1 = self.fit_window
            if not 0 < t0 < t1:
                raise ConfigError(f"fit window must satisfy 0 < t0 < t1, got {self.fit_window}")
            object.__setattr__(self, "fit_window", (float(t0), float(t1)))
        check_parameter_gate(self.s, self.s1)

    @property
    def n_steps(self):
        return _ratio_steps(self.t_end, self.dt, "t_end")

    def stride(self, cadence):
        return _ratio_steps(cadence, self.dt, "cadence")

    def initial_data(self):
        """``(v0, InitialDataReport)`` generated from the envelope and seed."""
        env = replace(self.envelope, seed=self.seed)
        return generate(env, self.grid, self.s, self.s1, self.c0)

    def as_dict(self):
        d = asdict(self)
        d["fit_window"] = list(self.fit_window) if self.fit_window else None
        return d


def viscous_symbol(grid, mode):
    """nu(k) with the semigroup exp(-t nu)."""
    if mode == "isotropic":
        return grid.kk
    if mode in ("anisotropic", "linear-only"):
        return grid.kh2
    raise ValueError(f"unknown viscosity mode {mode!r}")


class _Stepper:
    """Lawson (integrating-factor) RK4 for fixed ``dt``."""

    def __init__(self, grid, dt, mode):
        self.grid = grid
        self.dt = dt
        self.mode = mode
        self.nu = viscous_symbol(grid, mode)
        self.e_half = np.exp(-0.5 * dt * self.nu)
        self.e_full = np.exp(-dt * self.nu)
        self.linear = mode == "linear-only"

    def rhs(self, c):
        """``(N(c), sup|v|)``; the sup is None in linear-only mode."""
        if self.linear:
            return np.zeros_like(c), None
        return nonlinear_coeffs(self.grid, c, return_sup=True)

    def advance(self, c, k1):
        e, eh, h = self.e_full, self.e_half, self.dt
        if self.linear:
            return _leray_coeffs(self.grid, e * c)
        k2, _ = self.rhs(eh * (c + 0.5 * h * k1))
        k3, _ = self.rhs(eh * c + 0.5 * h * k2)
        k4, _ = self.rhs(e * c + h * (eh * k3))
        out = e * c + (h / 6.0) * (e * k1 + 2.0 * eh * (k2 + k3) + k4)
        return _leray_coeffs(self.grid, out)


def _check_finite(c, t):
    if not np.all(np.isfinite(c)):
        raise BlowUpError("non-finite Fourier coefficients", t)


def step(v, dt, mode="anisotropic", t=0.0):
    """One IF-RK4 step of size ``dt``; ``t`` only labels blow-up errors."""
    if not (math.isfinite(dt) and dt > 0):
        raise ValueError(f"dt must be positive, got {dt}")
    st = _Stepper(v.grid, dt, mode)
    _check_finite(v.coeffs, t)
    k1, _ = st.rhs(np.asarray(v.coeffs))
    out = st.advance(np.asarray(v.coeffs), k1)
    _check_finite(out, t + dt)
    return SpectralVectorField._projected(v.grid, out)


MONITOR_COLUMNS = (
    "t",
    "l2_sq",
    "vh_l2_sq",
    "grad_h_l2_sq",
    "lap_h_l2_sq",
    "v3_l2_sq",
    "grad_h_v3_l2_sq",
    "d3v_l2_sq",
    "d3v_hneg_half_sq",
    "d3v_hpos_half_sq",
    "hneg_s_sq",
    "grad_h_hneg_s_sq",
    "h0s1_sq",
    "b0half",
    "grad_h_b0half",
    "divh_vh_l2_sq",
    "d33v_l2_sq",
    "khzero_energy",
    "div_max",
)


class Monitor:
    """Evaluates every monitored norm of a coefficient array."""

    def __init__(self, grid, s, s1):
        self.grid = grid
        self.bank = build_filter_bank(grid, "v")
        kh2 = grid.kh2
        k3sq = grid.dk[2] ** 2 * np.ones(grid.spectral_shape)
        self.kh2 = kh2
        self.k3sq = k3sq
        self.w_hneg_half = sobolev_weight(grid, -0.5, 0.0)[0]
        self.w_hpos_half = sobolev_weight(grid, 0.5, 0.0)[0]
        self.w_hneg_s = sobolev_weight(grid, -float(s), 0.0)[0]
        self.w_h0s1 = sobolev_weight(grid, 0.0, float(s1))[0]
        self.khzero = (kh2 == 0).astype(float)

    def row(self, t, c):
        g = self.grid
        ls = g.lattice_sum
        kd1, kd2, _ = g.dk
        grad_h = np.concatenate([1j * kd1 * c, 1j * kd2 * c])
        scale = float(np.max(np.abs(c)))
        div = float(np.max(np.abs(_divergence_coeffs(g, c)))) / scale if scale else 0.0
        return {
            "t": t,
            "l2_sq": ls(1.0, c),
            "vh_l2_sq": ls(1.0, c[:2]),
            "grad_h_l2_sq": ls(self.kh2, c),
            "lap_h_l2_sq": ls(self.kh2**2, c),
            "v3_l2_sq": ls(1.0, c[2]),
            "grad_h_v3_l2_sq": ls(self.kh2, c[2]),
            "d3v_l2_sq": ls(self.k3sq, c),
            "d3v_hneg_half_sq": ls(self.k3sq * self.w_hneg_half, c),
            "d3v_hpos_half_sq": ls(self.k3sq * self.w_hpos_half, c),
            "hneg_s_sq": ls(self.w_hneg_s, c),
            "grad_h_hneg_s_sq": ls(self.kh2 * self.w_hneg_s, c),
            "h0s1_sq": ls(self.w_h0s1, c),
            "b0half": b0half_from_coeffs(g, c, self.bank),
            "grad_h_b0half": b0half_from_coeffs(g, grad_h, self.bank),
            "divh_vh_l2_sq": ls(1.0, 1j * (kd1 * c[0] + kd2 * c[1])),
            "d33v_l2_sq": ls(self.k3sq**2, c),
            "khzero_energy": ls(self.khzero, c),
            "div_max": div,
        }


def _frozen(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class EnergyLedger:
    """Energy ``E = |v|^2``, dissipation ``D`` and ``dD/dt`` at every step."""

    times: np.ndarray
    energy: np.ndarray
    dissipation: np.ndarray
    dissipation_rate: np.ndarray


@dataclass(frozen=True)
class TrajectoryRecord:
    config: RunConfig
    times: np.ndarray
    series: dict
    ledger: EnergyLedger
    snapshots: tuple = ()
    initial_report: object = None

    def __post_init__(self):
        t = np.asarray(self.times)
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("record times must be strictly increasing")

    def column(self, name):
        if name not in self.series:
            raise KeyError(f"record has no series {name!r}")
        return self.series[name]

    def rows(self):
        """Monitor rows as tuples in :data:`MONITOR_COLUMNS` order."""
        cols = [self.series[c] for c in MONITOR_COLUMNS]
        return [tuple(float(col[i]) for col in cols) for i in range(len(self.times))]


def _cfl_check(grid, dt, sup):
    dx = min(grid.l_h / grid.n_h, grid.l_v / grid.n_v)
    if sup and dt > C_CFL * dx / sup:
        warnings.warn(
            CflWarning(
                f"dt = {dt:.3g} exceeds the CFL advisory {C_CFL * dx / sup:.3g} "
                f"(dx = {dx:.3g}, sup|v0| = {sup:.3g})"
            ),
            stacklevel=3,
        )


def run(config, v0=None, observers=()):
    """Integrate to ``config.t_end`` and return the :class:`TrajectoryRecord`.

    ``observers`` are objects with a ``cadence`` attribute and an
    ``observe(t, v)`` method; they are called on the step grid every
    ``cadence`` time units, starting at t = 0.
    """
    grid = config.grid
    report = None
    if v0 is None:
        v0, report = config.initial_data()
    elif v0.grid != grid:
        raise GridMismatchError("initial field does not live on the configured grid")
    st = _Stepper(grid, config.dt, config.viscosity_mode)
    mon = Monitor(grid, config.s, config.s1)
    stride = config.stride(config.cadence)
    snap_stride = config.stride(config.snapshot_cadence) if config.snapshot_cadence else 0
    obs = [(o, config.stride(o.cadence)) for o in observers]
    n_steps = config.n_steps
    nu = st.nu
    w = grid.weights
    vol = grid.volume

    c = np.array(v0.coeffs)
    e_list, d_list, dp_list = [], [], []
    rows = []
    snaps = []
    sup0 = None
    for n in range(n_steps + 1):
        t = n * config.dt
        _check_finite(c, t)
        k1, sup = st.rhs(c)
        if sup is None and n == 0:
            sup = float(np.sqrt(np.max(np.sum([_irfftn(ci, grid.shape) ** 2 for ci in c], axis=0))))
        if n == 0:
            sup0 = sup
            _cfl_check(grid, config.dt, sup0)
        elif sup is not None and sup0 and sup > BLOWUP_FACTOR * sup0:
            raise BlowUpError(f"sup|v| = {sup:.3e} exceeds {BLOWUP_FACTOR:g} x initial", t)
        p = np.abs(c) ** 2
        pw = (w * p).sum(axis=0)
        e_list.append(vol * float(np.sum(pw)))
        d_list.append(vol * float(np.sum(nu * pw)))
        cross = (w * np.real(np.conj(c) * k1)).sum(axis=0)
        dp_list.append(-2 * vol * float(np.sum(nu**2 * pw)) + 2 * vol * float(np.sum(nu * cross)))
        if n % stride == 0:
            rows.append(mon.row(t, c))
        if snap_stride and n % snap_stride == 0:
            snaps.append((t, SpectralVectorField._projected(grid, c.copy())))
        if obs:
            field_ = SpectralVectorField._projected(grid, c)
            for o, o_stride in obs:
                if n % o_stride == 0:
                    o.observe(t, field_)
        if n == n_steps:
            break
        c = st.advance(c, k1)
        if n % 500 == 0:
            log.debug("step %d / %d, t = %.4g, E = %.6e", n, n_steps, t, e_list[-1])

    series = {name: _frozen([r[name] for r in rows]) for name in MONITOR_COLUMNS}
    ledger = EnergyLedger(
        times=_frozen(np.arange(n_steps + 1) * config.dt),
        energy=_frozen(e_list),
        dissipation=_frozen(d_list),
        dissipation_rate=_frozen(dp_list),
    )
    return TrajectoryRecord(
        config=config,
        times=series["t"],
        series=series,
        ledger=ledger,
        snapshots=tuple(snaps),
        initial_report=report,
    )


class EnergyBudget(NamedTuple):
    times: np.ndarray
    residual: np.ndarray
    quadrature_term: np.ndarray
    corrected_residual: np.ndarray


def energy_budget(record):
    """Relative residual of ``E(t) + 2 int_0^t D - E(0)`` on the step grid.

    ``residual`` uses the trapezoid rule.  ``quadrature_term`` is the leading
    trapezoid error ``2 (h^2/12) |D'(t) - D'(0)| / E(0)`` and
    ``corrected_residual`` applies that end correction (Euler-Maclaurin), so
    ``residual <= corrected_residual + quadrature_term``.
    """
    lg = record.ledger
    t, e, d, dp = lg.times, lg.energy, lg.dissipation, lg.dissipation_rate
    if t.size == 0:
        z = np.zeros(0)
        return EnergyBudget(z, z, z, z)
    e0 = e[0]
    h = np.diff(t)
    trap = np.concatenate([[0.0], np.cumsum(0.5 * h * (d[1:] + d[:-1]))])
    hh = h[0] if h.size else 0.0
    corr = hh**2 / 12.0 * (dp - dp[0])
    if e0 == 0:
        z = np.zeros_like(t)
        return EnergyBudget(t, z, z, z)
    residual = np.abs(e + 2 * trap - e0) / e0
    corrected = np.abs(e + 2 * (trap - corr) - e0) / e0
    quad = 2 * np.abs(corr) / e0
    return EnergyBudget(t, residual, quad, corrected)


def apriori_monitor(record):
    """Left- and right-hand-side factors of the three differential inequalities.

    Time derivatives use second-order finite differences on the output
    grid.  ``ratio_*`` is the empirical constant lhs / rhs (NaN where the
    right-hand side vanishes).  Nothing here is asserted.
    """
    s = record.series
    t = np.asarray(s["t"], float)

    def ddt(x):
        x = np.asarray(x, float)
        if x.size < 2:
            return np.zeros_like(x)
        return np.gradient(x, t, edge_order=2 if x.size > 2 else 1)

    gb2 = s["grad_h_b0half"] ** 2
    lhs1 = ddt(s["grad_h_l2_sq"]) + s["lap_h_l2_sq"]
    rhs1 = (gb2 + s["d3v_hpos_half_sq"]) * s["grad_h_l2_sq"]
    lhs2 = ddt(s["d3v_hneg_half_sq"]) + s["d3v_hpos_half_sq"]
    rhs2 = gb2 * s["d3v_hneg_half_sq"] + (
        s["grad_h_v3_l2_sq"] ** 0.25
        * s["divh_vh_l2_sq"] ** 0.25
        * np.sqrt(s["d33v_l2_sq"])
        * np.sqrt(s["d3v_hneg_half_sq"])
    )
    lhs3 = ddt(s["hneg_s_sq"]) + s["grad_h_hneg_s_sq"]
    rhs3 = ((1 + s["b0half"] ** 2) * gb2 + s["d3v_hpos_half_sq"]) * s["hneg_s_sq"]

    def ratio(a, b):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(b > 0, a / np.where(b > 0, b, 1.0), np.nan)

    return {
        "t": t,
        "lhs_grad_h": lhs1,
        "rhs_grad_h": rhs1,
        "ratio_grad_h": ratio(lhs1, rhs1),
        "lhs_d3v": lhs2,
        "rhs_d3v": rhs2,
        "ratio_d3v": ratio(lhs2, rhs2),
        "lhs_hneg_s": lhs3,
        "rhs_hneg_s": rhs3,
        "ratio_hneg_s": ratio(lhs3, rhs3),
        "linear_grad_h_balance": ddt(s["grad_h_l2_sq"]) + 2 * s["lap_h_l2_sq"],
    }
