"""Colormaps as RGB tables, plus vectorized RGB <-> HSL conversion.

Colors are numpy arrays whose last axis holds three channels in [0, 1]:
(r, g, b) or (h, s, l) with hue measured in turns.

Lookup semantics:

* cyclic maps wrap ``t`` mod 1; stop j sits at j/K and the last stop
  interpolates back to the first across the wrap;
* non-cyclic maps clamp ``t`` to [0, 1]; stop j sits at j/(K-1);
* discrete maps pick a stop from K equal-width bins, no interpolation.

An offset (see :func:`with_offset`) shifts the input before any of the above.
For a non-cyclic map a nonzero offset wraps first and clamps afterwards, which
moves the seam between the two ends of the map to another phase.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ParseError, UnknownColormap

BUILTIN_NAMES = ("legacy-hue", "viridis", "cividis", "twilight", "inferno",
                 "plasma", "coolwarm", "paired")
_CYCLIC = {"legacy-hue", "twilight"}
_DISCRETE = {"paired"}


@dataclass(frozen=True, eq=False)
class Colormap:
    name: str
    stops: np.ndarray
    cyclic: bool = False
    discrete: bool = False
    offset: float = 0.0

    def __post_init__(self):
        stops = np.array(self.stops, dtype=float)
        if stops.ndim != 2 or stops.shape[1] != 3 or stops.shape[0] < 2:
            raise ValueError(f"{self.name}: stops must be a (K>=2, 3) table")
        if not np.all((stops >= 0) & (stops <= 1)):
            raise ValueError(f"{self.name}: stop values must lie in [0, 1]")
        stops.setflags(write=False)
        object.__setattr__(self, "stops", stops)
        object.__setattr__(self, "offset", float(self.offset))

    def __len__(self):
        return self.stops.shape[0]

    def __call__(self, t):
        return lookup(self, t)

    def __repr__(self):
        flags = [f for f in ("cyclic", "discrete") if getattr(self, f)]
        extra = f", offset={self.offset}" if self.offset else ""
        return f"Colormap({self.name!r}, {len(self)} stops{', ' if flags else ''}{', '.join(flags)}{extra})"


def _wrap_unit(t):
    u = np.mod(t, 1.0)
    # np.mod(-tiny, 1.0) rounds to 1.0
    return np.where(u >= 1.0, 0.0, u)


def lookup(cm: Colormap, t) -> np.ndarray:
    """RGB for each value in ``t``; output shape is ``np.shape(t) + (3,)``."""
    t = np.asarray(t, dtype=float)
    if cm.cyclic or cm.offset != 0.0:
        u = _wrap_unit(t + cm.offset)
    else:
        u = np.clip(t, 0.0, 1.0)
    stops = cm.stops
    k = stops.shape[0]
    if cm.discrete:
        idx = np.minimum(np.floor(u * k).astype(np.intp), k - 1)
        return stops[idx]
    if cm.cyclic:
        x = u * k
        lo = np.floor(x)
        frac = x - lo
        i0 = lo.astype(np.intp) % k
        i1 = (i0 + 1) % k
    else:
        x = u * (k - 1)
        i0 = np.minimum(np.floor(x).astype(np.intp), k - 2)
        frac = x - i0
        i1 = i0 + 1
    frac = frac[..., None]
    return stops[i0] * (1.0 - frac) + stops[i1] * frac


def with_offset(cm: Colormap, offset: float) -> Colormap:
    """A map whose lookup(t) is the original's at (t + offset) mod 1."""
    offset = float(offset)
    if not np.isfinite(offset):
        raise ValueError("offset must be finite")
    return replace(cm, offset=cm.offset + offset)


# -- HSL -------------------------------------------------------------------

def rgb_to_hsl(rgb) -> np.ndarray:
    """Hexcone HSL. Achromatic colors get hue 0 and saturation 0."""
    rgb = np.asarray(rgb, dtype=float)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    mx = np.maximum(np.maximum(r, g), b)
    mn = np.minimum(np.minimum(r, g), b)
    chroma = mx - mn
    light = (mx + mn) / 2.0
    chromatic = chroma > 0
    safe_c = np.where(chromatic, chroma, 1.0)
    denom = 1.0 - np.abs(2.0 * light - 1.0)
    sat = np.where(chromatic, chroma / np.where(denom > 0, denom, 1.0), 0.0)
    sat = np.minimum(sat, 1.0)
    hue6 = np.where(
        mx == r, np.mod((g - b) / safe_c, 6.0),
        np.where(mx == g, (b - r) / safe_c + 2.0, (r - g) / safe_c + 4.0))
    hue = np.where(chromatic, _wrap_unit(hue6 / 6.0), 0.0)
    return np.stack([hue, sat, light], axis=-1)


def hsl_to_rgb(hsl) -> np.ndarray:
    hsl = np.asarray(hsl, dtype=float)
    h, s, l = hsl[..., 0], hsl[..., 1], hsl[..., 2]
    a = s * np.minimum(l, 1.0 - l)
    out = []
    for n in (0.0, 8.0, 4.0):
        k = np.mod(n + 12.0 * h, 12.0)
        out.append(l - a * np.maximum(-1.0, np.minimum(np.minimum(k - 3.0, 9.0 - k), 1.0)))
    return np.clip(np.stack(out, axis=-1), 0.0, 1.0)


# -- tables ----------------------------------------------------------------

def parse_colormap_text(text: str, name: str, cyclic=False, discrete=False) -> Colormap:
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ParseError(f"{name}:{lineno}: expected 'r g b'")
        try:
            rgb = [float(p) for p in parts]
        except ValueError:
            raise ParseError(f"{name}:{lineno}: non-numeric channel") from None
        if not all(0.0 <= c <= 1.0 for c in rgb):
            raise ParseError(f"{name}:{lineno}: channel outside [0, 1]")
        rows.append(rgb)
    if len(rows) < 2:
        raise ParseError(f"{name}: need at least two stops")
    return Colormap(name, np.array(rows), cyclic=cyclic, discrete=discrete)


def load_colormap_file(path, cyclic=False, discrete=False) -> Colormap:
    """Read a table of ``r g b`` lines; the map is named after the file."""
    path = Path(path)
    return parse_colormap_text(path.read_text(), path.stem, cyclic, discrete)


def legacy_hue() -> Colormap:
    """Full-saturation hue wheel starting at red.

    The wheel is piecewise linear in RGB with corners every 1/6 turn, so six
    cyclic stops reproduce it exactly under linear interpolation.
    """
    stops = [(1, 0, 0), (1, 1, 0), (0, 1, 0), (0, 1, 1), (0, 0, 1), (1, 0, 1)]
    return Colormap("legacy-hue", np.array(stops, dtype=float), cyclic=True)


@lru_cache(maxsize=None)
def builtin(name: str) -> Colormap:
    """One of :data:`BUILTIN_NAMES` (case-insensitive)."""
    key = name.strip().lower() if isinstance(name, str) else ""
    if key not in BUILTIN_NAMES:
        raise UnknownColormap(
            f"unknown colormap {name!r}; choose from: {', '.join(BUILTIN_NAMES)}")
    if key == "legacy-hue":
        return legacy_hue()
    text = (resources.files("modviz") / "data" / "colormaps" / f"{key}.txt").read_text()
    return parse_colormap_text(text, key, cyclic=key in _CYCLIC, discrete=key in _DISCRETE)
