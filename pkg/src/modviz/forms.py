"""Truncated q-expansions on the upper halfplane.

A :class:`FourierSeries` holds a_1..a_M and evaluates

    f(z) = sum_{n=1}^{M} a_n exp(2 pi i n z / h)

for z in the upper halfplane. The Ramanujan Delta function has a built-in
coefficient generator and an independent eta-product evaluator used as an
oracle. Disk pictures go through the Cayley-type map (1 - i w) / (w - i).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import DomainError, ValidationError

TWO_PI = 2.0 * math.pi
RESIDUAL_FLOOR = 1e-300

ArrayLike = Union[complex, float, np.ndarray, Sequence[complex]]


@dataclass(frozen=True, eq=False)
class FourierSeries:
    """Immutable truncated q-expansion.

    ``coefficients[n - 1]`` is a_n; the constant term is never stored.
    """

    coefficients: np.ndarray
    weight: int
    level: int = 1
    period: float = 1.0
    label: Optional[str] = None

    def __post_init__(self):
        coefs = np.array(self.coefficients, dtype=np.complex128).reshape(-1)
        if coefs.size < 1:
            raise ValidationError("a FourierSeries needs at least one coefficient")
        if not np.all(np.isfinite(coefs)):
            raise ValidationError("coefficients must be finite")
        coefs.setflags(write=False)
        object.__setattr__(self, "coefficients", coefs)
        for name in ("weight", "level"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value or value < 1:
                raise ValidationError(f"{name} must be a positive integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        period = float(self.period)
        if not math.isfinite(period) or period <= 0:
            raise ValidationError(f"period must be positive, got {self.period!r}")
        object.__setattr__(self, "period", period)

    def __len__(self):
        return self.coefficients.size

    def __eq__(self, other):
        if not isinstance(other, FourierSeries):
            return NotImplemented
        return (
            self.weight == other.weight
            and self.level == other.level
            and self.period == other.period
            and self.label == other.label
            and np.array_equal(self.coefficients, other.coefficients)
        )

    __hash__ = None

    def truncated(self, count: int) -> "FourierSeries":
        """First ``count`` coefficients (all of them if fewer are stored)."""
        if count < 1:
            raise ValidationError("count must be at least 1")
        return FourierSeries(self.coefficients[:count], self.weight, self.level,
                             self.period, self.label)

    def __call__(self, z):
        return eval_series(self, z)


@dataclass(frozen=True)
class GammaElement:
    """Integer matrix [[a, b], [c, d]] with determinant 1."""

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if self.a * self.d - self.b * self.c != 1:
            raise ValidationError(f"det must be 1: {self}")

    def apply(self, z):
        z = np.asarray(z, dtype=np.complex128)
        return (self.a * z + self.b) / (self.c * z + self.d)

    def factor(self, z, weight: int):
        """Automorphy factor (cz + d)^k."""
        z = np.asarray(z, dtype=np.complex128)
        return (self.c * z + self.d) ** weight


T_SHIFT = GammaElement(1, 1, 0, 1)
S_INVERSION = GammaElement(0, -1, 1, 0)
IDENTITY = GammaElement(1, 0, 0, 1)


@dataclass(frozen=True)
class HalfplaneBox:
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        vals = (self.x_min, self.x_max, self.y_min, self.y_max)
        if not all(math.isfinite(v) for v in vals):
            raise ValidationError("box bounds must be finite")
        if not self.x_min < self.x_max:
            raise ValidationError(f"need x_min < x_max, got {self.x_min}, {self.x_max}")
        if not 0 <= self.y_min < self.y_max:
            raise ValidationError(f"need 0 <= y_min < y_max, got {self.y_min}, {self.y_max}")


@dataclass(frozen=True)
class Disk:
    """The open unit disk, mapped to the halfplane by :func:`mobius_to_halfplane`."""


DomainSpec = Union[HalfplaneBox, Disk]


def _check_halfplane(z: np.ndarray):
    if not np.all(np.isfinite(z)):
        raise DomainError("evaluation point is not finite")
    if np.any(z.imag <= 0):
        raise DomainError("evaluation point must have positive imaginary part")


def eval_series_array(f: FourierSeries, z) -> np.ndarray:
    """Vectorized q-expansion; one exp per point, Horner in q."""
    z = np.asarray(z, dtype=np.complex128)
    _check_halfplane(z)
    q = np.exp((1j * TWO_PI / f.period) * z)
    coefs = f.coefficients
    acc = np.full(z.shape, coefs[-1], dtype=np.complex128)
    for a in coefs[-2::-1]:
        acc *= q
        acc += a
    acc *= q
    return acc


def eval_series(f: FourierSeries, z):
    """f(z) for a scalar or array of halfplane points.

    Raises DomainError if any point has imaginary part <= 0.
    """
    out = eval_series_array(f, z)
    return complex(out) if out.ndim == 0 else out


def eval_delta_eta(z, truncation: int = 400):
    """Delta(z) = q * prod_{n<=truncation} (1 - q^n)^24 with q = exp(2 pi i z)."""
    if truncation < 1:
        raise ValueError("truncation must be >= 1")
    z = np.asarray(z, dtype=np.complex128)
    _check_halfplane(z)
    q = np.exp(1j * TWO_PI * z)
    prod = np.ones_like(q)
    qn = np.ones_like(q)
    for _ in range(truncation):
        qn = qn * q
        prod = prod * (1.0 - qn)
    p2 = prod * prod
    p4 = p2 * p2
    p8 = p4 * p4
    out = q * ((p8 * p8) * p8)
    return complex(out) if out.ndim == 0 else out


def _euler_function(count: int) -> list[int]:
    """Coefficients of prod (1 - q^n) up to q^(count-1) via pentagonal numbers."""
    coefs = [0] * count
    k = 0
    while True:
        sign = -1 if k % 2 else 1
        hit = False
        for m in ((k * (3 * k - 1)) // 2, (k * (3 * k + 1)) // 2):
            if m < count:
                coefs[m] = sign
                hit = True
        if not hit:
            break
        k += 1
    return coefs


def ramanujan_tau(count: int) -> list[int]:
    """Exact tau(1)..tau(count).

    Raises the Euler function to the 24th power with the J.C.P. Miller
    recurrence for powers of power series, which stays in exact integers.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    p = _euler_function(count)
    support = [k for k in range(1, count) if p[k]]
    g = [0] * count
    g[0] = 1
    for n in range(1, count):
        total = 0
        for k in support:
            if k > n:
                break
            total += (25 * k - n) * p[k] * g[n - k]
        g[n], rem = divmod(total, n)
        assert rem == 0
    return g


def delta_coefficients(count: int = 400) -> FourierSeries:
    """The Delta function as a weight 12, level 1 series with ``count`` terms."""
    return FourierSeries([float(t) for t in ramanujan_tau(count)], weight=12,
                         level=1, period=1.0, label="1.12.a.a.1.1")


def _disk_to_halfplane(w: np.ndarray) -> np.ndarray:
    # (1 - i w) / (w - i) with the denominator made real:
    # (2u + i(1 - |w|^2)) / (u^2 + (1 - v)^2)
    u, v = w.real, w.imag
    denom = u * u + (1.0 - v) ** 2
    return (2.0 * u + 1j * (1.0 - (u * u + v * v))) / denom


def mobius_boundary(w):
    """The disk-to-halfplane map without the |w| < 1 check.

    Only the pole w = i is rejected; boundary points map to the real axis.
    """
    w = np.asarray(w, dtype=np.complex128)
    if np.any(w == 1j):
        raise DomainError("w = i is the pole of the map")
    out = _disk_to_halfplane(w)
    return complex(out) if out.ndim == 0 else out


def mobius_to_halfplane(w):
    """Map the open unit disk onto the upper halfplane.

    -i, 0 and i go to 0, i and i*infinity. Raises DomainError for |w| >= 1.
    """
    w = np.asarray(w, dtype=np.complex128)
    if np.any(w.real ** 2 + w.imag ** 2 >= 1.0):
        raise DomainError("point is not inside the open unit disk")
    out = _disk_to_halfplane(w)
    return complex(out) if out.ndim == 0 else out


def sample_domain(domain: DomainSpec, width: int, height: int):
    """Halfplane points at pixel centers plus a boolean mask.

    Returns ``(grid, mask)`` with shape ``(height, width)``. Row 0 is the top of
    the region. Masked entries of ``grid`` are NaN and must not be evaluated.
    """
    if width < 1 or height < 1:
        raise ValueError("width and height must be >= 1")
    cols = (np.arange(width) + 0.5) / width
    rows = (np.arange(height) + 0.5) / height
    if isinstance(domain, HalfplaneBox):
        x = domain.x_min + cols * (domain.x_max - domain.x_min)
        y = domain.y_max - rows * (domain.y_max - domain.y_min)
        grid = x[None, :] + 1j * y[:, None]
        return grid, np.zeros((height, width), dtype=bool)
    if isinstance(domain, Disk):
        u = -1.0 + 2.0 * cols
        v = 1.0 - 2.0 * rows
        w = u[None, :] + 1j * v[:, None]
        mask = (w.real ** 2 + w.imag ** 2) >= 1.0
        grid = np.full(w.shape, np.nan, dtype=np.complex128)
        grid[~mask] = _disk_to_halfplane(w[~mask])
        return grid, mask
    raise TypeError(f"unsupported domain {domain!r}")


def automorphy_residual(f: FourierSeries, g: GammaElement, z) -> float:
    """|f(gz) - (cz+d)^k f(z)| / max(|f(gz)|, 1e-300)."""
    z = complex(z)
    gz = complex(g.apply(z))
    lhs = eval_series(f, gz)
    rhs = complex(g.factor(z, f.weight)) * eval_series(f, z)
    return abs(lhs - rhs) / max(abs(lhs), RESIDUAL_FLOOR)


def periodicity_residual(f: FourierSeries, z) -> float:
    """Relative change under z -> z + h, h being the expansion period."""
    z = complex(z)
    lhs = eval_series(f, z + f.period)
    rhs = eval_series(f, z)
    return abs(lhs - rhs) / max(abs(lhs), RESIDUAL_FLOOR)


def tail_bound(f: FourierSeries, y: float) -> float:
    """sum |a_n| exp(-2 pi n y / h), an upper bound for |f| on Im z = y."""
    n = np.arange(1, len(f) + 1)
    return float(np.sum(np.abs(f.coefficients) * np.exp(-TWO_PI * n * y / f.period)))
