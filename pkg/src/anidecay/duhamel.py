"""
Pressure, the two nonlinear kernels of the third velocity component, and
the mild-solution split

    v3(t) = e^{t Delta_h} v3(0) + int_0^t e^{(t - tau) Delta_h} (F1 + F2)(tau) dtau.

The kernels are built from the same 2/3-truncated products as the solver,
so ``F1 + F2`` equals the third component of the solver's nonlinear term.

The quadrature tier evaluates ``|v3_L(t)|^2`` for analytic data on R^3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .decay import fit_power_law
from .errors import IntegrabilityError, SnapshotDensityError
from .spectral import SpectralScalarField, product_coeffs


def _symbols(grid):
    kd = grid.dk
    kk = kd[0] ** 2 + kd[1] ** 2 + kd[2] ** 2
    inv = np.divide(1.0, kk, out=np.zeros(np.broadcast(kk).shape), where=kk > 0)
    return kd, kk, inv


def pressure_field(v):
    """p with -Delta p = sum_jm d_j d_m (v^j v^m); zero mode 0."""
    grid = v.grid
    prods, _ = product_coeffs(grid, v.coeffs)
    kd, _, inv = _symbols(grid)
    acc = np.zeros(grid.spectral_shape, complex)
    for j in range(3):
        for m in range(3):
            acc += kd[j] * kd[m] * prods[j, m]
    return SpectralScalarField(grid, -acc * inv)


def advection_coeffs(v):
    """(v . grad v)^ in conservative form with truncated products, shape (3, ...)."""
    grid = v.grid
    prods, _ = product_coeffs(grid, v.coeffs)
    kd = grid.dk
    return np.stack(
        [1j * (kd[0] * prods[0, i] + kd[1] * prods[1, i] + kd[2] * prods[2, i]) for i in range(3)]
    )


def duhamel_kernels(v):
    """``(F1, F2)`` for the third component.

    F1 = -i |k_h|^2 / |k|^2 sum_j k_j (v^j v^3)^
    F2 =  i k_3 / |k|^2 sum_j sum_{m<=2} k_j k_m (v^j v^m)^
    """
    grid = v.grid
    prods, _ = product_coeffs(grid, v.coeffs)
    return _kernels_from_products(grid, prods)


def _kernels_from_products(grid, prods):
    kd, _, inv = _symbols(grid)
    kh2 = kd[0] ** 2 + kd[1] ** 2
    s1 = kd[0] * prods[0, 2] + kd[1] * prods[1, 2] + kd[2] * prods[2, 2]
    f1 = -1j * kh2 * inv * s1
    s2 = np.zeros(grid.spectral_shape, complex)
    for j in range(3):
        for m in range(2):
            s2 += kd[j] * kd[m] * prods[j, m]
    f2 = 1j * kd[2] * inv * s2
    f1[0, 0, 0] = 0.0
    f2[0, 0, 0] = 0.0
    return SpectralScalarField(grid, f1), SpectralScalarField(grid, f2)


def _semigroup_symbol(grid, mode):
    return grid.kk if mode == "isotropic" else grid.kh2


def required_cadence(grid, mode="anisotropic"):
    """Largest snapshot spacing h with h * max nu <= 1 over the resolved modes."""
    nu = _semigroup_symbol(grid, mode) * grid.dealias_mask
    top = float(np.max(nu))
    return math.inf if top == 0 else 1.0 / top


def _check_density(grid, h, mode):
    need = required_cadence(grid, mode)
    if h > need * (1 + 1e-12):
        raise SnapshotDensityError(
            f"snapshot spacing {h:.4g} too coarse for the trapezoid rule; "
            f"need spacing <= {need:.4g}",
            need,
        )


@dataclass(frozen=True)
class DuhamelSplit:
    t: float
    v3_l: SpectralScalarField
    v3_n1: SpectralScalarField
    v3_n2: SpectralScalarField
    residual: float

    def total(self):
        return self.v3_l + self.v3_n1 + self.v3_n2


def _relative_residual(grid, total, v3):
    den = grid.lattice_sum(1.0, v3)
    num = grid.lattice_sum(1.0, total - v3)
    if den == 0:
        return math.sqrt(num)
    return math.sqrt(num / den)


class DuhamelAccumulator:
    """Streaming trapezoid accumulation of the two Duhamel integrals.

    Pass as a solver observer; ``observe`` must be called on an equispaced
    time grid starting at the initial time.
    """

    def __init__(self, grid, cadence, mode="anisotropic"):
        if not cadence > 0:
            raise ValueError(f"cadence must be positive, got {cadence}")
        _check_density(grid, cadence, mode)
        self.grid = grid
        self.cadence = cadence
        self.mode = mode
        self._decay = np.exp(-cadence * _semigroup_symbol(grid, mode))
        self._nu = _semigroup_symbol(grid, mode)
        self.t0 = None
        self.t = None
        self.v3_0 = None
        self.v3 = None
        self._j1 = self._j2 = None
        self._f1 = self._f2 = None

    def observe(self, t, v):
        if v.grid != self.grid:
            raise ValueError("observed field lives on a different grid")
        if self.mode == "linear-only":
            # the linear flow carries no forcing
            f1 = f2 = np.zeros(self.grid.spectral_shape, complex)
        else:
            f1, f2 = duhamel_kernels(v)
            f1, f2 = f1.coeffs, f2.coeffs
        if self.t is None:
            self.t0 = t
            self.v3_0 = np.array(v.coeffs[2])
            self._j1 = np.zeros_like(f1)
            self._j2 = np.zeros_like(f2)
        else:
            h = t - self.t
            if abs(h - self.cadence) > 1e-9 * self.cadence:
                raise ValueError(f"observation spacing {h} differs from cadence {self.cadence}")
            e, hh = self._decay, 0.5 * self.cadence
            self._j1 = e * self._j1 + hh * (e * self._f1 + f1)
            self._j2 = e * self._j2 + hh * (e * self._f2 + f2)
        self._f1, self._f2 = f1, f2
        self.t = t
        self.v3 = np.array(v.coeffs[2])

    def split(self):
        """:class:`DuhamelSplit` at the latest observed time."""
        if self.t is None:
            raise ValueError("no observations yet")
        g = self.grid
        v3_l = np.exp(-(self.t - self.t0) * self._nu) * self.v3_0
        total = v3_l + self._j1 + self._j2
        return DuhamelSplit(
            t=self.t,
            v3_l=SpectralScalarField(g, v3_l),
            v3_n1=SpectralScalarField(g, self._j1.copy()),
            v3_n2=SpectralScalarField(g, self._j2.copy()),
            residual=_relative_residual(g, total, self.v3),
        )


def reconstruct_v3(snapshots, t, mode="anisotropic"):
    """Duhamel split at time ``t`` from equispaced ``(time, field)`` snapshots.

    The snapshots must start at the initial time and include ``t``.
    """
    snaps = sorted(snapshots, key=lambda p: p[0])
    if not snaps:
        raise ValueError("no snapshots")
    times = np.array([p[0] for p in snaps])
    used = [p for p in snaps if p[0] <= t + 1e-12 * max(1.0, abs(t))]
    if abs(used[-1][0] - t) > 1e-9 * max(1.0, abs(t)):
        raise ValueError(f"t = {t} is not a snapshot time")
    if len(used) == 1:
        g = used[0][1].grid
        v3 = SpectralScalarField(g, used[0][1].coeffs[2])
        zero = SpectralScalarField.zeros(g)
        return DuhamelSplit(t, v3, zero, zero, 0.0)
    steps = np.diff(times[: len(used)])
    h = float(steps[0])
    if np.any(np.abs(steps - h) > 1e-9 * h):
        raise ValueError("snapshots must be equispaced")
    acc = DuhamelAccumulator(used[0][1].grid, h, mode)
    for tau, v in used:
        acc.observe(tau, v)
    return acc.split()


# ---------------------------------------------------------------- R^3 quadrature tier


@dataclass(frozen=True)
class GaussianProfile:
    """|v0^3(xi)|^2 = |xi_h|^{2a} exp(-|xi|^2)."""

    a: float
    div_free = False
    region = "all"

    def check(self, s=None):
        if not self.a > -1:
            raise IntegrabilityError(f"Gaussian profile needs a > -1, got a = {self.a}")

    def v3_density(self, r, z):
        return r ** (2 * self.a) * math.exp(-r * r - z * z)

    def exact(self, t):
        return math.pi**1.5 * math.gamma(self.a + 1) * (1 + 2 * t) ** (-(self.a + 1))

    def exponent(self):
        return -(self.a + 1)


@dataclass(frozen=True)
class DivFreeProfile:
    """Divergence-free data with v0^h parallel to xi_h.

    |v0^h|^2 = |xi_h|^{2 alpha} |xi_3|^{2 beta} exp(-|xi|^2) and
    v0^3 = -xi_h . v0^h / xi_3, so |v0^3|^2 = |xi_h|^2 |v0^h|^2 / xi_3^2.
    ``region`` is ``"all"`` or ``"cone"`` (support in |xi_h| <= |xi_3|).
    """

    alpha: float
    beta: float
    region: str = "cone"
    div_free = True

    def __post_init__(self):
        if self.region not in ("all", "cone"):
            raise ValueError(f"region must be 'all' or 'cone', got {self.region!r}")

    def check(self, s=None):
        al, be = self.alpha, self.beta
        conds = [("alpha > -1", al > -1)]
        if self.region == "all":
            conds += [("beta > 1/2", be > 0.5)]
        else:
            conds += [("alpha + beta > -3/2", al + be > -1.5)]
        if s is not None:
            conds.append((f"alpha > s - 1 = {s - 1:.6g}", al > s - 1))
            if self.region == "all":
                conds.append((f"beta > s/2 + 3/4 = {s / 2 + 0.75:.6g}", be > s / 2 + 0.75))
            else:
                conds.append(
                    (f"alpha + beta > 3s/2 - 5/4 = {1.5 * s - 1.25:.6g}", al + be > 1.5 * s - 1.25)
                )
        for text, ok in conds:
            if not ok:
                raise IntegrabilityError(
                    f"profile (alpha = {al}, beta = {be}, region = {self.region}) "
                    f"violates {text}"
                )

    def v3_density(self, r, z):
        return r ** (2 * self.alpha + 2) * abs(z) ** (2 * self.beta - 2) * math.exp(-r * r - z * z)

    def exact(self, t):
        """Closed form for region 'all' (separable); None for the cone."""
        if self.region != "all":
            return None
        al, be = self.alpha, self.beta
        return math.pi * math.gamma(al + 2) * math.gamma(be - 0.5) * (1 + 2 * t) ** (-(al + 2))


def cone_oracle(profile, t):
    """Cone-region value with the inner integral in closed form (incomplete gamma)."""
    al, be = profile.alpha, profile.beta
    c = 1 + 2 * t

    def outer(z):
        return (
            z ** (2 * be - 2)
            * math.exp(-z * z)
            * special.gammainc(al + 2, c * z * z)
            * math.gamma(al + 2)
        )

    val, _ = integrate.quad(outer, 0, np.inf, epsabs=0, epsrel=1e-12, limit=400)
    return 2 * math.pi * val * c ** (-(al + 2))


def v3_linear_norm_sq(profile, t, epsrel=1e-10):
    """|e^{t Delta_h} v0^3|^2_{L^2(R^3)} by nested adaptive quadrature.

    Cylindrical coordinates (r = |xi_h|, z = xi_3); the horizontal radius is
    rescaled by sqrt(1 + 2t) so the inner integrand keeps unit width.
    """
    c = 1 + 2 * t
    sc = math.sqrt(c)
    cone = profile.region == "cone"

    def inner(z):
        upper = z * sc if cone else np.inf

        def f(u):
            r = u / sc
            return r * profile.v3_density(r, z) * math.exp(-2 * t * r * r)

        val, _ = integrate.quad(f, 0, upper, epsabs=0, epsrel=epsrel, limit=200)
        return val / sc

    val, _ = integrate.quad(inner, 0, np.inf, epsabs=0, epsrel=epsrel, limit=200)
    return 2 * 2 * math.pi * val


@dataclass(frozen=True)
class QuadratureDecay:
    times: np.ndarray
    values: np.ndarray
    fit: object
    target: float | None


def linear_decay_quadrature(profile, times, s=None, window=None):
    """Squared L^2 norm of the linear v3 evolution at ``times`` and its power-law fit.

    With ``s`` and a divergence-free profile the data are checked to lie in
    Hdot^{-s,-s/2-1/4}; the returned target is -(3s/2 + 1/4).
    """
    profile.check(s if profile.div_free else None)
    times = np.asarray(times, float)
    if np.any(times < 0):
        raise ValueError("times must be nonnegative")
    values = np.array([v3_linear_norm_sq(profile, float(t)) for t in times])
    fit = None
    mask = times >= 1 if window is None else (times >= window[0]) & (times <= window[1])
    if mask.sum() >= 10:
        w = window or (float(times[mask].min()), float(times[mask].max()))
        fit = fit_power_law(times, values, w, quantity="v3_linear_l2_sq")
    target = -(1.5 * s + 0.25) if (s is not None and profile.div_free) else None
    return QuadratureDecay(times, values, fit, target)
