"""Per-pixel coloring schemes for complex values.

Every function here is vectorized: scalars in, scalars out; arrays in, arrays
out. Colors come back with a trailing axis of three channels.

Magnitudes that are not finite are treated as the +inf sentinel. Schemes with
a limit at infinity (the brightness maps) use it; the periodic hue maps have
no limit and show the anchor hue, and contours leave such pixels unadjusted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Union

import numpy as np

from .colormap import Colormap, builtin, hsl_to_rgb, lookup, rgb_to_hsl
from .errors import ValidationError

TWO_PI = 2.0 * math.pi
EPS_MAG = 1e-300
BLUE_HUE = 2.0 / 3.0


class PhaseMag(NamedTuple):
    phase: np.ndarray
    magnitude: np.ndarray

    @classmethod
    def of(cls, values) -> "PhaseMag":
        """Split complex values into phase in (-pi, pi] and magnitude."""
        values = np.asarray(values, dtype=np.complex128)
        phase = np.angle(values)
        phase = np.where(phase == -math.pi, math.pi, phase)
        mag = np.abs(values)
        finite = np.isfinite(values)
        phase = np.where(finite, phase, 0.0)
        mag = np.where(finite, mag, np.inf)
        return cls(phase, mag)


def _wrap_unit(x):
    u = np.mod(x, 1.0)
    return np.where(u >= 1.0, 0.0, u)


def phase_to_unit(theta, offset=0.0):
    """(theta / 2 pi + offset) mod 1, always in [0, 1)."""
    return _wrap_unit(np.asarray(theta, dtype=float) / TWO_PI + offset)


def brightness_arctan(m, alpha=0.25):
    """arctan(log(m^alpha + 1)) scaled by 2/pi: 0 at m = 0, tending to 1."""
    m = np.asarray(m, dtype=float)
    return np.arctan(np.log1p(m ** alpha)) / (math.pi / 2.0)


def _log_base(m, base):
    m = np.maximum(np.asarray(m, dtype=float), EPS_MAG)
    return np.log2(m) / math.log2(base)


def mag_linear_hue(m):
    """Hue for magnitude mod 1: blue at 0, rising through purple, red, orange."""
    m = np.asarray(m, dtype=float)
    finite = np.isfinite(m)
    frac = np.mod(np.where(finite, m, 0.0), 1.0)
    return _wrap_unit(BLUE_HUE + frac)


def mag_log_hue(m, base=7.0):
    """Like :func:`mag_linear_hue` but for log_base(m) mod 1."""
    m = np.asarray(m, dtype=float)
    finite = np.isfinite(m)
    frac = np.mod(_log_base(np.where(finite, m, 1.0), base), 1.0)
    return _wrap_unit(BLUE_HUE + frac)


def contour_lightness_delta(m, base=2.0, strength=0.5):
    """strength * (s - 1/2) with s = log_base(m) mod 1.

    s drops from just under 1 to 0 as m crosses a power of ``base``: pixels
    just below a contour are lightened and pixels just above are darkened.
    """
    m = np.asarray(m, dtype=float)
    finite = np.isfinite(m)
    s = _wrap_unit(_log_base(np.where(finite, m, 1.0), base))
    return np.where(finite, strength * (s - 0.5), 0.0)


def apply_lightness(hsl, delta):
    """Shift lightness by ``delta`` and clamp to [0, 1]."""
    hsl = np.asarray(hsl, dtype=float)
    out = hsl.copy()
    out[..., 2] = np.clip(hsl[..., 2] + delta, 0.0, 1.0)
    return out


def _adjust_rgb_lightness(rgb, delta):
    hsl = rgb_to_hsl(rgb)
    adjusted = apply_lightness(hsl, delta)
    same = (adjusted[..., 2] == hsl[..., 2])[..., None]
    # untouched lightness keeps the exact input color
    return np.where(same, rgb, hsl_to_rgb(adjusted))


def _check_positive(name, value):
    if not (math.isfinite(value) and value > 0):
        raise ValidationError(f"{name} must be > 0, got {value}")


def _check_base(name, value):
    if not (math.isfinite(value) and value > 1):
        raise ValidationError(f"{name} must be > 1, got {value}")


def _check_offset(value):
    if not math.isfinite(value):
        raise ValidationError(f"offset must be finite, got {value}")


def _default_cmap():
    return builtin("legacy-hue")


@dataclass(frozen=True)
class StandardDomain:
    """Hue from phase through ``cm``, lightness from the arctan brightness map."""

    cm: Colormap = field(default_factory=_default_cmap)
    offset: float = 0.0
    brightness_alpha: float = 0.25

    def __post_init__(self):
        _check_offset(self.offset)
        _check_positive("brightness_alpha", self.brightness_alpha)

    def colorize(self, pm: PhaseMag):
        rgb = lookup(self.cm, phase_to_unit(pm.phase, self.offset))
        hsl = rgb_to_hsl(rgb)
        hsl[..., 2] = brightness_arctan(pm.magnitude, self.brightness_alpha)
        return hsl_to_rgb(hsl)


@dataclass(frozen=True)
class MagnitudeGrey:
    alpha: float = 0.25

    def __post_init__(self):
        _check_positive("alpha", self.alpha)

    def colorize(self, pm: PhaseMag):
        grey = brightness_arctan(pm.magnitude, self.alpha)
        return np.repeat(np.asarray(grey, dtype=float)[..., None], 3, axis=-1)


@dataclass(frozen=True)
class MagLinearPeriodic:
    def colorize(self, pm: PhaseMag):
        return lookup(builtin("legacy-hue"), mag_linear_hue(pm.magnitude))


@dataclass(frozen=True)
class MagLogPeriodic:
    base: float = 7.0

    def __post_init__(self):
        _check_base("base", self.base)

    def colorize(self, pm: PhaseMag):
        return lookup(builtin("legacy-hue"), mag_log_hue(pm.magnitude, self.base))


@dataclass(frozen=True)
class PurePhase:
    cm: Colormap = field(default_factory=_default_cmap)
    offset: float = 0.0

    def __post_init__(self):
        _check_offset(self.offset)

    def colorize(self, pm: PhaseMag):
        return lookup(self.cm, phase_to_unit(pm.phase, self.offset))


@dataclass(frozen=True)
class PhaseContour:
    """Phase plot with lightness contours at powers of ``contour_base``.

    ``strength`` 0 turns the contours off and reproduces :class:`PurePhase`.
    """

    cm: Colormap = field(default_factory=_default_cmap)
    offset: float = 0.0
    contour_base: float = 2.0
    strength: float = 0.5

    def __post_init__(self):
        _check_offset(self.offset)
        _check_base("contour_base", self.contour_base)
        if not 0.0 <= self.strength <= 1.0:
            raise ValidationError(f"strength must lie in [0, 1], got {self.strength}")

    def colorize(self, pm: PhaseMag):
        rgb = lookup(self.cm, phase_to_unit(pm.phase, self.offset))
        delta = contour_lightness_delta(pm.magnitude, self.contour_base, self.strength)
        return _adjust_rgb_lightness(rgb, delta)


SchemeSpec = Union[StandardDomain, MagnitudeGrey, MagLinearPeriodic, MagLogPeriodic,
                   PurePhase, PhaseContour]

SCHEMES = {
    "standard": StandardDomain,
    "mag-grey": MagnitudeGrey,
    "mag-linear": MagLinearPeriodic,
    "mag-log": MagLogPeriodic,
    "phase": PurePhase,
    "phase-contour": PhaseContour,
}


def colorize(scheme: SchemeSpec, pm) -> np.ndarray:
    """RGB for a :class:`PhaseMag` (or raw complex values) under ``scheme``."""
    if not isinstance(pm, PhaseMag):
        pm = PhaseMag.of(pm)
    return scheme.colorize(pm)
