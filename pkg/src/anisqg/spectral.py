"""Fourier representation of real scalars on a doubly periodic rectangle.

Normalization
-------------
Coefficients are stored in FFT index order (``k = 0, 1, ..., n/2-1, -n/2, ..., -1``
on each axis, axis 0 is x1) and scaled so that Parseval holds with unit
constant against the uniform-grid quadrature of the physical field::

    c_k = sqrt(l1 * l2) / (n1 * n2) * FFT(f)_k
    sum_k |c_k|^2 = sum_{grid} |f|^2 * dx1 * dx2

Every norm in the package uses this convention, so physical L2 norms and
spectral l2 sums agree to rounding.  The Nyquist row/column (index -n/2) is
its own mirror image; odd symbols (Riesz transforms, derivatives) are zeroed
there to keep fields real.
"""
from __future__ import annotations

import enum
import io
import struct
from dataclasses import dataclass, field
from typing import BinaryIO

import numpy as np
import scipy.fft as sfft

from .errors import EmptyBand, InvalidParameters, SingularSymbol

__all__ = [
    "GridSpec",
    "SpectralField",
    "SymbolKind",
    "MultiplierSymbol",
    "apply_multiplier",
    "riesz_velocity",
    "gradient",
    "sobolev_norm",
    "anisotropic_norm",
    "mixed_norm",
    "lp_norm",
    "inner_product",
    "dealias",
    "random_band_limited",
    "single_mode",
    "resample",
    "write_snapshot",
    "read_snapshot",
]

TWO_PI = 2.0 * np.pi


def _readonly(a):
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GridSpec:
    """Uniform periodic grid with ``n1 x n2`` points on ``[0,l1) x [0,l2)``."""

    n1: int
    n2: int
    l1: float = TWO_PI
    l2: float = TWO_PI
    dealias_fraction: float = 2.0 / 3.0
    # derived arrays, filled in __post_init__
    k1: np.ndarray = field(init=False, repr=False)
    k2: np.ndarray = field(init=False, repr=False)
    xi1: np.ndarray = field(init=False, repr=False)
    xi2: np.ndarray = field(init=False, repr=False)
    xi_abs: np.ndarray = field(init=False, repr=False)
    mask: np.ndarray = field(init=False, repr=False)
    nyquist: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        for name in ("n1", "n2"):
            n = getattr(self, name)
            if int(n) != n or n < 2 or n % 2:
                raise InvalidParameters(f"{name} must be a positive even integer, got {n}")
            object.__setattr__(self, name, int(n))
        for name in ("l1", "l2"):
            if not getattr(self, name) > 0:
                raise InvalidParameters(f"{name} must be positive")
        if not 0.0 < self.dealias_fraction <= 1.0:
            raise InvalidParameters("dealias_fraction must lie in (0, 1]")

        k1 = np.fft.fftfreq(self.n1, 1.0 / self.n1)[:, None]
        k2 = np.fft.fftfreq(self.n2, 1.0 / self.n2)[None, :]
        xi1 = np.broadcast_to(k1 * (TWO_PI / self.l1), (self.n1, self.n2)).copy()
        xi2 = np.broadcast_to(k2 * (TWO_PI / self.l2), (self.n1, self.n2)).copy()
        mask = (np.abs(k1) <= self.dealias_fraction * (self.n1 / 2)) & (
            np.abs(k2) <= self.dealias_fraction * (self.n2 / 2)
        )
        nyq = (k1 == -self.n1 // 2) | (k2 == -self.n2 // 2)
        set_ = object.__setattr__
        set_(self, "k1", _readonly(np.broadcast_to(k1, (self.n1, self.n2)).copy()))
        set_(self, "k2", _readonly(np.broadcast_to(k2, (self.n1, self.n2)).copy()))
        set_(self, "xi1", _readonly(xi1))
        set_(self, "xi2", _readonly(xi2))
        set_(self, "xi_abs", _readonly(np.hypot(xi1, xi2)))
        set_(self, "mask", _readonly(np.broadcast_to(mask, (self.n1, self.n2)).copy()))
        set_(self, "nyquist", _readonly(np.broadcast_to(nyq, (self.n1, self.n2)).copy()))

    @property
    def shape(self):
        return (self.n1, self.n2)

    @property
    def area(self):
        return self.l1 * self.l2

    @property
    def dx1(self):
        return self.l1 / self.n1

    @property
    def dx2(self):
        return self.l2 / self.n2

    @property
    def scale(self):
        """Factor mapping raw FFT output to unit-Parseval coefficients."""
        return np.sqrt(self.area) / (self.n1 * self.n2)

    def coords(self):
        x1 = np.arange(self.n1) * self.dx1
        x2 = np.arange(self.n2) * self.dx2
        return np.meshgrid(x1, x2, indexing="ij")

    def key(self):
        return (self.n1, self.n2, float(self.l1), float(self.l2), float(self.dealias_fraction))

    def __eq__(self, other):
        return isinstance(other, GridSpec) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())


def _mirror(c):
    """Array whose entry at k is ``c[-k]`` (FFT index order)."""
    return np.roll(c[::-1, ::-1], 1, axis=(0, 1))


@dataclass(frozen=True, eq=False)
class SpectralField:
    grid: GridSpec
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.complex128, copy=True)
        if c.shape != self.grid.shape:
            raise InvalidParameters(f"coeff shape {c.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "coeffs", _readonly(c))

    @classmethod
    def zeros(cls, grid: GridSpec) -> "SpectralField":
        return cls(grid, np.zeros(grid.shape, dtype=np.complex128))

    @classmethod
    def from_physical(cls, grid: GridSpec, values) -> "SpectralField":
        values = np.asarray(values, dtype=np.float64)
        return cls(grid, sfft.fft2(values) * grid.scale)

    def to_physical(self, real=True):
        v = sfft.ifft2(self.coeffs / self.grid.scale)
        return v.real if real else v

    def with_coeffs(self, coeffs) -> "SpectralField":
        return SpectralField(self.grid, coeffs)

    def hermitian_defect(self) -> float:
        """Max |c(-k) - conj(c(k))|; zero for a real field."""
        return float(np.max(np.abs(_mirror(self.coeffs) - np.conj(self.coeffs)), initial=0.0))

    @property
    def mean_mode(self):
        return self.coeffs[0, 0]

    def __add__(self, other):
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return SpectralField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__


class SymbolKind(str, enum.Enum):
    AXIS_POWER = "AXIS_POWER"
    ISOTROPIC_POWER = "ISOTROPIC_POWER"
    DISSIPATION = "DISSIPATION"
    HEAT_KERNEL = "HEAT_KERNEL"


@dataclass(frozen=True)
class MultiplierSymbol:
    """A real, even Fourier multiplier.

    Use the constructors: ``axis_power(axis, gamma)``, ``isotropic_power(s)``,
    ``dissipation(alpha, beta)``, ``heat_kernel(alpha, beta, t)``.
    """

    kind: SymbolKind
    axis: int = 0
    exponent: float = 0.0
    alpha: float = 0.0
    beta: float = 0.0
    t: float = 0.0

    @classmethod
    def axis_power(cls, axis: int, gamma: float):
        if axis not in (1, 2):
            raise InvalidParameters("axis must be 1 or 2")
        return cls(SymbolKind.AXIS_POWER, axis=axis, exponent=gamma)

    @classmethod
    def isotropic_power(cls, s: float):
        return cls(SymbolKind.ISOTROPIC_POWER, exponent=s)

    @classmethod
    def dissipation(cls, alpha: float, beta: float):
        return cls(SymbolKind.DISSIPATION, alpha=alpha, beta=beta)

    @classmethod
    def heat_kernel(cls, alpha: float, beta: float, t: float):
        return cls(SymbolKind.HEAT_KERNEL, alpha=alpha, beta=beta, t=t)

    def evaluate(self, grid: GridSpec) -> np.ndarray:
        """Symbol on the grid; singular points of negative powers are ``inf``."""
        with np.errstate(divide="ignore"):
            if self.kind is SymbolKind.AXIS_POWER:
                xi = grid.xi1 if self.axis == 1 else grid.xi2
                return np.abs(xi) ** self.exponent
            if self.kind is SymbolKind.ISOTROPIC_POWER:
                return grid.xi_abs ** self.exponent
            lam = np.abs(grid.xi1) ** (2 * self.alpha) + np.abs(grid.xi2) ** (2 * self.beta)
            if self.kind is SymbolKind.DISSIPATION:
                return lam
            return np.exp(-self.t * lam)


def apply_multiplier(f: SpectralField, m: MultiplierSymbol) -> SpectralField:
    sym = m.evaluate(f.grid)
    singular = ~np.isfinite(sym)
    if singular.any():
        if np.any(f.coeffs[singular] != 0):
            raise SingularSymbol(f"{m.kind.value} with negative exponent hits a nonzero mode at xi=0")
        sym = np.where(singular, 0.0, sym)
    return SpectralField(f.grid, f.coeffs * sym)


def _odd_symbol(grid: GridSpec, xi):
    # Nyquist modes are self-mirrored; an odd symbol there would make the field complex.
    return np.where(grid.nyquist, 0.0, xi)


def gradient(f: SpectralField):
    g = f.grid
    return (
        SpectralField(g, 1j * _odd_symbol(g, g.xi1) * f.coeffs),
        SpectralField(g, 1j * _odd_symbol(g, g.xi2) * f.coeffs),
    )


def riesz_velocity(theta: SpectralField):
    """u = (-R2 theta, R1 theta) with R_j having symbol i xi_j / |xi|, zero at xi = 0."""
    g = theta.grid
    absxi = np.where(g.xi_abs == 0.0, 1.0, g.xi_abs)
    r1 = 1j * _odd_symbol(g, g.xi1) / absxi
    r2 = 1j * _odd_symbol(g, g.xi2) / absxi
    c = theta.coeffs
    return SpectralField(g, -r2 * c), SpectralField(g, r1 * c)


def _weighted_sum(f: SpectralField, weight) -> float:
    return float(np.sqrt(np.sum(weight * (f.coeffs.real**2 + f.coeffs.imag**2))))


def sobolev_norm(f: SpectralField, s: float) -> float:
    """Homogeneous norm ||Lambda^s f||_{L2}."""
    return _weighted_sum(f, f.grid.xi_abs ** (2.0 * s))


def anisotropic_norm(f: SpectralField, axis: int, gamma: float) -> float:
    """||Lambda_{x_axis}^gamma f||_{L2}."""
    xi = f.grid.xi1 if axis == 1 else f.grid.xi2
    return _weighted_sum(f, np.abs(xi) ** (2.0 * gamma))


def mixed_norm(f: SpectralField, gamma1: float, gamma2: float) -> float:
    """||Lambda_{x1}^gamma1 Lambda_{x2}^gamma2 f||_{L2}."""
    g = f.grid
    return _weighted_sum(f, np.abs(g.xi1) ** (2.0 * gamma1) * np.abs(g.xi2) ** (2.0 * gamma2))


def lp_norm(f: SpectralField, p: float) -> float:
    """Uniform-grid quadrature of the physical-space L^p norm, p in [1, inf]."""
    v = np.abs(f.to_physical())
    if np.isinf(p):
        return float(v.max())
    if p < 1:
        raise InvalidParameters("p must be >= 1")
    w = f.grid.dx1 * f.grid.dx2
    vmax = v.max()
    if vmax == 0.0:
        return 0.0
    # scaled to avoid overflow for large p
    return float(vmax * (np.sum((v / vmax) ** p) * w) ** (1.0 / p))


def inner_product(f: SpectralField, g: SpectralField) -> float:
    """Real L2 inner product <f, g>."""
    return float(np.sum((f.coeffs * np.conj(g.coeffs)).real))


def dealias(f: SpectralField) -> SpectralField:
    return SpectralField(f.grid, np.where(f.grid.mask, f.coeffs, 0.0))


def single_mode(grid: GridSpec, k1: int, k2: int, amplitude: complex = 1.0) -> SpectralField:
    """Real field with coefficient ``amplitude`` at (k1, k2) and its conjugate at -(k1, k2)."""
    c = np.zeros(grid.shape, dtype=np.complex128)
    idx = (k1 % grid.n1, k2 % grid.n2)
    mirror = (-k1 % grid.n1, -k2 % grid.n2)
    if idx == mirror:
        c[idx] = complex(amplitude).real
    else:
        c[idx] = amplitude
        c[mirror] = np.conj(amplitude)
    return SpectralField(grid, c)


def random_band_limited(seed: int, grid: GridSpec, band=(1.0, 8.0), spectrum_slope: float = -1.0,
                        amplitude: float = 1.0) -> SpectralField:
    """Seeded random real field with |c(k)| ~ |xi|^spectrum_slope on band[0] <= |xi| <= band[1].

    The field is mean-free, free of Nyquist modes and normalized to L2 norm
    ``amplitude``.
    """
    lo, hi = float(band[0]), float(band[1])
    inband = (grid.xi_abs >= lo) & (grid.xi_abs <= hi) & ~grid.nyquist & (grid.xi_abs > 0)
    if lo > hi or not inband.any():
        raise EmptyBand(f"no retained wavenumbers with {lo} <= |xi| <= {hi}")
    rng = np.random.default_rng(seed)
    phase = rng.uniform(0.0, 2.0 * np.pi, size=grid.shape)
    mag = np.where(inband, np.where(inband, grid.xi_abs, 1.0) ** spectrum_slope, 0.0)
    z = mag * np.exp(1j * phase)
    upper = (grid.k1 > 0) | ((grid.k1 == 0) & (grid.k2 > 0))
    c = np.where(upper, z, np.conj(_mirror(z)))
    norm = np.sqrt(np.sum(np.abs(c) ** 2))
    return SpectralField(grid, c * (amplitude / norm))


# -- binary snapshots ---------------------------------------------------------
#
# Layout (all multi-byte values in the byte order named by the tag):
#   offset 0   4s  magic b"ASQG"
#   offset 4   c   endianness tag, b"<" little or b">" big
#   offset 5   B   format version (1)
#   offset 6   2x  padding
#   offset 8   I   n1
#   offset 12  I   n2
#   offset 16  d   l1
#   offset 24  d   l2
#   offset 32  n1*n2 complex128 coefficients (real, imag interleaved),
#              row-major with k1 the slow index, FFT index order.

SNAPSHOT_MAGIC = b"ASQG"
SNAPSHOT_VERSION = 1
_HEADER_TAIL = "IIdd"


def write_snapshot(f: SpectralField, fh: BinaryIO, byteorder: str = "<") -> None:
    if byteorder not in ("<", ">"):
        raise InvalidParameters("byteorder must be '<' or '>'")
    g = f.grid
    fh.write(SNAPSHOT_MAGIC + byteorder.encode() + struct.pack("B2x", SNAPSHOT_VERSION))
    fh.write(struct.pack(byteorder + _HEADER_TAIL, g.n1, g.n2, g.l1, g.l2))
    fh.write(np.ascontiguousarray(f.coeffs, dtype=np.dtype(byteorder + "c16")).tobytes())


def read_snapshot(fh: BinaryIO, dealias_fraction: float = 2.0 / 3.0) -> SpectralField:
    head = fh.read(8)
    if len(head) != 8 or head[:4] != SNAPSHOT_MAGIC:
        raise InvalidParameters("not a field snapshot (bad magic)")
    order = head[4:5].decode()
    if order not in ("<", ">"):
        raise InvalidParameters(f"bad endianness tag {order!r}")
    if head[5] != SNAPSHOT_VERSION:
        raise InvalidParameters(f"unsupported snapshot version {head[5]}")
    n1, n2, l1, l2 = struct.unpack(order + _HEADER_TAIL, fh.read(struct.calcsize(_HEADER_TAIL)))
    grid = GridSpec(n1, n2, l1, l2, dealias_fraction)
    raw = fh.read(16 * n1 * n2)
    if len(raw) != 16 * n1 * n2:
        raise InvalidParameters("truncated snapshot payload")
    data = np.frombuffer(raw, dtype=np.dtype(order + "c16")).reshape(n1, n2)
    return SpectralField(grid, data.astype(np.complex128))


def snapshot_bytes(f: SpectralField, byteorder: str = "<") -> bytes:
    buf = io.BytesIO()
    write_snapshot(f, buf, byteorder)
    return buf.getvalue()


def resample(f: SpectralField, grid: GridSpec) -> SpectralField:
    """Same trigonometric polynomial on another grid of the same periods (pad or truncate).

    Modes that do not exist on the target grid are dropped; Nyquist content is
    not carried over.
    """
    if (f.grid.l1, f.grid.l2) != (grid.l1, grid.l2):
        raise InvalidParameters("resample needs equal periods")
    out = np.zeros(grid.shape, dtype=np.complex128)
    src = f.grid
    keep = ~src.nyquist & (np.abs(src.k1) < grid.n1 // 2) & (np.abs(src.k2) < grid.n2 // 2)
    i1 = (src.k1[keep] % grid.n1).astype(int)
    i2 = (src.k2[keep] % grid.n2).astype(int)
    out[i1, i2] = f.coeffs[keep]
    return SpectralField(grid, out)
