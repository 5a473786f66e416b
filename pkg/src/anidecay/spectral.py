"""
Spectral representation of fields on a periodic box.

Conventions (used everywhere, including the checkpoint format):

* Physical samples have shape ``(n_h, n_h, n_v)`` and live at
  ``x_i = j_i * L_i / N_i``; axis order is ``(x1, x2, x3)``.
* Coefficients are stored in the half-spectrum layout of ``rfftn``:
  shape ``(n_h, n_h, n_v // 2 + 1)``, mode indices ``m1, m2`` in FFT order
  (``0, 1, ..., N/2-1, -N/2, ..., -1``) and ``m3 >= 0``.  Modes with
  ``m3 < 0`` are implied by Hermitian symmetry ``c(-m) = conj(c(m))``.
* Normalisation: ``c_m = (1/N) sum_x a(x) exp(-i k.x)`` so that
  ``a(x) = sum_m c_m exp(i k.x)`` with ``k_i = 2 pi m_i / L_i``.
* Plancherel: ``sum_x |a(x)|^2 * dV = V * sum_{all m} |c_m|^2``, where ``V``
  is the box volume and ``dV = V / N``.  In the half layout the sum over all
  modes is ``sum_half w_m |c_m|^2`` with multiplicity ``w_m = 1`` on the
  planes ``m3 = 0`` and ``m3 = n_v/2`` and ``w_m = 2`` elsewhere.

All weighted lattice sums in the package (Sobolev, Besov, energy) carry the
factor ``V`` so that the ``(0, 0)`` Sobolev norm is exactly the L^2 norm.

Odd-order symbols (derivatives, divergence, Leray projection) use the
wavenumber with the Nyquist entry set to zero; even symbols (heat kernels,
``|k|`` powers, dyadic cutoffs) use the signed FFT wavenumber.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft

from .errors import GridMismatchError

_WORKERS = 1


def set_threads(n: int) -> None:
    """Number of worker threads used by the FFTs."""
    global _WORKERS
    _WORKERS = max(1, int(n))


def get_threads() -> int:
    return _WORKERS


def _rfftn(a):
    return scipy.fft.rfftn(a, norm="forward", workers=_WORKERS)


def _irfftn(c, shape):
    return scipy.fft.irfftn(c, s=shape, norm="forward", workers=_WORKERS)


@dataclass(frozen=True)
class Grid3:
    """Triply periodic box with ``n_h x n_h x n_v`` points.

    Both horizontal axes share ``n_h`` and ``l_h``.
    """

    n_h: int
    n_v: int
    l_h: float = 2 * np.pi
    l_v: float = 2 * np.pi

    def __post_init__(self):
        for name in ("n_h", "n_v"):
            n = getattr(self, name)
            if int(n) != n or n < 8 or n % 2:
                raise ValueError(f"{name} must be an even integer >= 8, got {n}")
            object.__setattr__(self, name, int(n))
        for name in ("l_h", "l_v"):
            length = float(getattr(self, name))
            if not np.isfinite(length) or length <= 0:
                raise ValueError(f"{name} must be positive and finite, got {length}")
            object.__setattr__(self, name, length)

    @property
    def shape(self):
        return (self.n_h, self.n_h, self.n_v)

    @property
    def spectral_shape(self):
        return (self.n_h, self.n_h, self.n_v // 2 + 1)

    @property
    def volume(self):
        return self.l_h * self.l_h * self.l_v

    @property
    def cell_volume(self):
        return self.volume / (self.n_h * self.n_h * self.n_v)

    @cached_property
    def m1(self):
        return np.rint(np.fft.fftfreq(self.n_h, 1.0 / self.n_h)).astype(int)[:, None, None]

    @cached_property
    def m2(self):
        return np.rint(np.fft.fftfreq(self.n_h, 1.0 / self.n_h)).astype(int)[None, :, None]

    @cached_property
    def m3(self):
        return np.arange(self.n_v // 2 + 1)[None, None, :]

    @cached_property
    def k1(self):
        return 2 * np.pi / self.l_h * self.m1

    @cached_property
    def k2(self):
        return 2 * np.pi / self.l_h * self.m2

    @cached_property
    def k3(self):
        return 2 * np.pi / self.l_v * self.m3

    @cached_property
    def dk(self):
        """Derivative wavenumbers (Nyquist entries zeroed), one per axis."""
        kd1 = np.where(self.m1 == -self.n_h // 2, 0.0, self.k1)
        kd2 = np.where(self.m2 == -self.n_h // 2, 0.0, self.k2)
        kd3 = np.where(self.m3 == self.n_v // 2, 0.0, self.k3)
        return (kd1, kd2, kd3)

    @cached_property
    def kh2(self):
        """|k_h|^2 on the half lattice."""
        return np.broadcast_to(self.k1**2 + self.k2**2 + 0.0 * self.k3, self.spectral_shape)

    @cached_property
    def kh(self):
        return np.sqrt(self.kh2)

    @cached_property
    def kk(self):
        """|k|^2 on the half lattice."""
        return self.kh2 + self.k3**2

    @cached_property
    def abs_k3(self):
        return np.broadcast_to(np.abs(self.k3), self.spectral_shape)

    @cached_property
    def weights(self):
        """Mode multiplicity of the half layout (1 or 2)."""
        w = np.full(self.n_v // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        return np.broadcast_to(w[None, None, :], self.spectral_shape)

    @cached_property
    def dealias_mask(self):
        """2/3 rule: keep |m_i| < N_i / 3 on every axis."""
        keep = (
            (3 * np.abs(self.m1) < self.n_h)
            & (3 * np.abs(self.m2) < self.n_h)
            & (3 * self.m3 < self.n_v)
        )
        return np.broadcast_to(keep, self.spectral_shape)

    @cached_property
    def coordinates(self):
        x1 = np.arange(self.n_h) * self.l_h / self.n_h
        x3 = np.arange(self.n_v) * self.l_v / self.n_v
        return np.meshgrid(x1, x1, x3, indexing="ij")

    def lattice_sum(self, weight, coeffs):
        """V * sum over all modes of ``weight * |coeffs|^2``.

        ``coeffs`` may carry leading component axes, which are summed too.
        """
        power = np.abs(coeffs) ** 2
        if power.ndim > 3:
            power = power.reshape((-1,) + self.spectral_shape).sum(axis=0)
        return float(self.volume * np.sum(self.weights * weight * power))


def _readonly(a, dtype=np.complex128):
    a = np.asarray(a, dtype=dtype).view()
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class SpectralScalarField:
    """Fourier coefficients of a real scalar field (half layout)."""

    grid: Grid3
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs)
        if c.shape != self.grid.spectral_shape:
            raise GridMismatchError(
                f"coefficient shape {c.shape} does not match grid {self.grid.spectral_shape}"
            )
        object.__setattr__(self, "coeffs", _readonly(c))

    def _check(self, other):
        if other.grid != self.grid:
            raise GridMismatchError("fields live on different grids")

    def __add__(self, other):
        self._check(other)
        return SpectralScalarField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check(other)
        return SpectralScalarField(self.grid, self.coeffs - other.coeffs)

    def __neg__(self):
        return SpectralScalarField(self.grid, -self.coeffs)

    def __mul__(self, scalar):
        return SpectralScalarField(self.grid, scalar * self.coeffs)

    __rmul__ = __mul__

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.spectral_shape, complex))

    def energy(self):
        """Squared L^2 norm."""
        return self.grid.lattice_sum(1.0, self.coeffs)

    def full_coeffs(self):
        """Expand to the full ``(n_h, n_h, n_v)`` lattice in FFT order."""
        return expand_half_spectrum(self.coeffs, self.grid.n_v)

    def hermitian_defect(self):
        """Largest violation of c(-m) = conj(c(m)) on the self-conjugate planes."""
        n1 = self.grid.n_h
        idx = (-np.arange(n1)) % n1
        defect = 0.0
        for p in {0, self.grid.n_v // 2}:
            plane = self.coeffs[:, :, p]
            mirrored = np.conj(plane[idx][:, idx])
            defect = max(defect, float(np.max(np.abs(plane - mirrored))))
        return defect


def expand_half_spectrum(half, n_v):
    """Full-lattice coefficients from the half layout (last axis ``m3 >= 0``)."""
    n1, n2, nh = half.shape[-3:]
    full = np.empty(half.shape[:-1] + (n_v,), dtype=complex)
    full[..., :nh] = half
    i1 = (-np.arange(n1)) % n1
    i2 = (-np.arange(n2)) % n2
    for m3 in range(nh, n_v):
        plane = half[..., n_v - m3]
        full[..., m3] = np.conj(plane[..., i1, :][..., i2])
    return full


@dataclass(frozen=True)
class SpectralVectorField:
    """Three-component real vector field, coefficients of shape ``(3, ...)``."""

    grid: Grid3
    coeffs: np.ndarray = field(repr=False)
    div_free: bool = False

    def __post_init__(self):
        c = np.asarray(self.coeffs)
        if c.shape != (3,) + self.grid.spectral_shape:
            raise GridMismatchError(
                f"vector coefficient shape {c.shape} does not match grid "
                f"{(3,) + self.grid.spectral_shape}"
            )
        scale = float(np.max(np.abs(c))) if c.size else 0.0
        if np.any(np.abs(c[:, 0, 0, 0]) > 1e-14 * scale):
            raise ValueError("vector fields are mean-free: the zero mode must vanish")
        if self.div_free:
            div = _divergence_coeffs(self.grid, c)
            if np.max(np.abs(div)) > 1e-12 * max(scale, np.finfo(float).tiny):
                raise ValueError("field flagged div_free but k.v != 0")
        object.__setattr__(self, "coeffs", _readonly(c))

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros((3,) + grid.spectral_shape, complex), div_free=True)

    @classmethod
    def _projected(cls, grid, c):
        # div-free by construction; a relative check would reject roundoff output
        out = cls(grid, c)
        object.__setattr__(out, "div_free", True)
        return out

    @classmethod
    def from_components(cls, components, div_free=False):
        grid = components[0].grid
        for comp in components:
            if comp.grid != grid:
                raise GridMismatchError("components live on different grids")
        return cls(grid, np.stack([c.coeffs for c in components]), div_free=div_free)

    @property
    def components(self):
        return tuple(SpectralScalarField(self.grid, c) for c in self.coeffs)

    def __getitem__(self, i):
        return SpectralScalarField(self.grid, self.coeffs[i])

    def __add__(self, other):
        if other.grid != self.grid:
            raise GridMismatchError("fields live on different grids")
        return SpectralVectorField(
            self.grid, self.coeffs + other.coeffs, self.div_free and other.div_free
        )

    def __mul__(self, scalar):
        return SpectralVectorField(self.grid, scalar * self.coeffs, self.div_free)

    __rmul__ = __mul__

    def energy(self):
        return self.grid.lattice_sum(1.0, self.coeffs)


def forward_transform(samples, grid):
    """Real samples of shape ``grid.shape`` to a spectral scalar field."""
    samples = np.asarray(samples)
    if samples.shape != grid.shape:
        raise GridMismatchError(f"samples of shape {samples.shape} on grid {grid.shape}")
    if np.iscomplexobj(samples):
        raise TypeError("forward_transform expects real samples")
    return SpectralScalarField(grid, _rfftn(samples))


def inverse_transform(a):
    """Physical samples of a spectral scalar field."""
    return _irfftn(a.coeffs, a.grid.shape)


def vector_from_samples(samples, grid, remove_mean=True):
    """Vector field from samples of shape ``(3,) + grid.shape``."""
    coeffs = np.stack([forward_transform(s, grid).coeffs for s in samples])
    if remove_mean:
        coeffs[:, 0, 0, 0] = 0.0
    return SpectralVectorField(grid, coeffs)


def vector_to_samples(v):
    return np.stack([_irfftn(c, v.grid.shape) for c in v.coeffs])


def derivative(a, axis):
    """Exact spectral derivative along ``axis`` (0, 1 or 2)."""
    return SpectralScalarField(a.grid, 1j * a.grid.dk[axis] * a.coeffs)


def _divergence_coeffs(grid, c):
    kd1, kd2, kd3 = grid.dk
    return 1j * (kd1 * c[0] + kd2 * c[1] + kd3 * c[2])


def divergence(v):
    return SpectralScalarField(v.grid, _divergence_coeffs(v.grid, v.coeffs))


def gradient(a):
    return SpectralVectorField.from_components([derivative(a, i) for i in range(3)])


def _leray_coeffs(grid, c):
    kd1, kd2, kd3 = grid.dk
    kd = (kd1, kd2, kd3)
    kk = kd1**2 + kd2**2 + kd3**2
    inv = np.divide(1.0, kk, out=np.zeros(np.broadcast(kk).shape), where=kk > 0)
    kdotc = (kd1 * c[0] + kd2 * c[1] + kd3 * c[2]) * inv
    out = np.empty_like(c)
    for i in range(3):
        out[i] = c[i] - kd[i] * kdotc
    out[:, 0, 0, 0] = 0.0
    return out


def leray_project(v):
    """Orthogonal projection onto divergence-free fields, mode by mode."""
    return SpectralVectorField._projected(v.grid, _leray_coeffs(v.grid, v.coeffs))


class SingularMultiplierWarning(RuntimeWarning):
    """A negative-power multiplier met nonzero mass on its singular set."""

    def __init__(self, message, excluded_energy):
        super().__init__(message)
        self.excluded_energy = excluded_energy


_MULTIPLIER_KINDS = ("horizontal-heat", "full-heat", "abs-dh-power", "inv-laplacian", "derivative")


@dataclass(frozen=True)
class MultiplierSpec:
    """A diagonal Fourier multiplier.

    kinds: ``horizontal-heat`` (symbol exp(-t|k_h|^2)), ``full-heat``
    (exp(-t|k|^2)), ``abs-dh-power`` (|k_h|^sigma), ``inv-laplacian``
    (|k|^-2) and ``derivative`` (i k_axis).
    """

    kind: str
    t: float = 0.0
    sigma: float = 0.0
    axis: int = 0

    def __post_init__(self):
        if self.kind not in _MULTIPLIER_KINDS:
            raise ValueError(f"unknown multiplier kind {self.kind!r}; expected one of {_MULTIPLIER_KINDS}")
        if not (np.isfinite(self.t) and np.isfinite(self.sigma)):
            raise ValueError("multiplier parameters must be finite")
        if self.kind.endswith("heat") and self.t < 0:
            raise ValueError(f"heat multipliers need t >= 0, got {self.t}")
        if self.kind == "derivative" and self.axis not in (0, 1, 2):
            raise ValueError(f"axis must be 0, 1 or 2, got {self.axis}")

    def symbol(self, grid):
        """Returns ``(symbol, singular_mask)``; the symbol is 0 on the mask."""
        singular = np.zeros(grid.spectral_shape, bool)
        if self.kind == "horizontal-heat":
            sym = np.exp(-self.t * grid.kh2)
        elif self.kind == "full-heat":
            sym = np.exp(-self.t * grid.kk)
        elif self.kind == "abs-dh-power":
            if self.sigma < 0:
                singular = grid.kh2 == 0
            with np.errstate(divide="ignore"):
                sym = np.where(singular, 0.0, grid.kh ** self.sigma)
        elif self.kind == "inv-laplacian":
            singular = grid.kk == 0
            with np.errstate(divide="ignore"):
                sym = np.where(singular, 0.0, 1.0 / grid.kk)
        else:
            sym = np.broadcast_to(1j * grid.dk[self.axis], grid.spectral_shape)
        return sym, singular


def apply_multiplier(a, m):
    """Pointwise product with the symbol of ``m``.

    Modes on the singular set of a negative power are mapped to zero; if they
    carry mass a :class:`SingularMultiplierWarning` reports the excluded
    energy.
    """
    sym, singular = m.symbol(a.grid)
    if singular.any():
        excluded = a.grid.lattice_sum(singular.astype(float), a.coeffs)
        # roundoff on the singular set is not mass
        if excluded > 1e-24 * a.grid.lattice_sum(1.0, a.coeffs):
            warnings.warn(
                SingularMultiplierWarning(
                    f"{m.kind} is singular on {int(singular.sum())} modes carrying "
                    f"energy {excluded:.3e}; those modes were set to zero",
                    excluded,
                ),
                stacklevel=2,
            )
    return SpectralScalarField(a.grid, sym * a.coeffs)


_PAIRS = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))


def product_coeffs(grid, c, dealias=True):
    """Coefficients of the six products ``v^j v^k`` (j <= k), keyed by pair.

    Products are formed in physical space; with ``dealias`` the result is
    truncated by the 2/3 rule.
    """
    u = [_irfftn(ci, grid.shape) for ci in c]
    mask = grid.dealias_mask
    out = {}
    for j, k in _PAIRS:
        p = _rfftn(u[j] * u[k])
        if dealias:
            p *= mask
        out[j, k] = out[k, j] = p
    return out, u


def nonlinear_coeffs(grid, c, dealias=True, return_sup=False):
    """Coefficients of ``-P(v.grad v)`` for div-free ``c`` of shape (3, ...).

    Uses the conservative form ``div(v (x) v)``, which equals the advective
    form for divergence-free band-limited fields.
    """
    prods, u = product_coeffs(grid, c, dealias)
    kd = grid.dk
    adv = np.empty_like(c)
    for i in range(3):
        adv[i] = 1j * (kd[0] * prods[0, i] + kd[1] * prods[1, i] + kd[2] * prods[2, i])
    out = -_leray_coeffs(grid, adv)
    if return_sup:
        sup = float(np.sqrt(np.max(u[0] ** 2 + u[1] ** 2 + u[2] ** 2)))
        return out, sup
    return out


def nonlinear_term(v, dealias="2/3"):
    """``-P(v.grad v)`` computed pseudo-spectrally.

    ``dealias`` is ``"2/3"`` (sharp per-axis truncation of the products) or
    ``None``.
    """
    if dealias not in ("2/3", None):
        raise ValueError(f"unsupported dealiasing rule {dealias!r}")
    coeffs = nonlinear_coeffs(v.grid, v.coeffs, dealias=dealias is not None)
    return SpectralVectorField._projected(v.grid, coeffs)


def inner(a, b):
    """Real L^2 inner product of two scalar or vector fields."""
    if a.grid != b.grid:
        raise GridMismatchError("fields live on different grids")
    grid = a.grid
    prod = np.real(np.conj(a.coeffs) * b.coeffs)
    if prod.ndim > 3:
        prod = prod.sum(axis=0)
    return float(grid.volume * np.sum(grid.weights * prod))
