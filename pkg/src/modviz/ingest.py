"""Loading q-expansion coefficients from files, the bundled set, or a remote API.

Two on-disk formats are understood:

* JSON: ``{"label", "weight", "level", "period", "coefficients"}`` where each
  coefficient is a number or an ``[re, im]`` pair. Cache files additionally
  carry a ``sha256`` of the coefficient list.
* Text: a header line ``weight level period`` followed by ``n re [im]`` lines.
  Blank lines and ``#`` comments are ignored; missing indices are zero.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import re
import tempfile
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from filelock import FileLock

from .errors import (NetworkError, NotFound, OfflineMiss, ParseError,
                     PayloadError, ValidationError)
from .forms import FourierSeries

log = logging.getLogger(__name__)

DEFAULT_URL_TEMPLATE = (
    "https://www.lmfdb.org/api/mf_hecke_cc/"
    "?label={label}&_format=json&_fields=label,an_normalized"
)
CACHE_ENV = "MODVIZ_CACHE_DIR"
OFFLINE_ENV = "MODVIZ_OFFLINE"

_LABEL_RE = re.compile(r"^(\d+)\.(\d+)(?:\.[A-Za-z0-9]+)*$")

Transport = Callable[[str, float], bytes]


def label_metadata(label: str) -> tuple[int, int]:
    """(level, weight) from a label such as ``"105.2.a.a.1.1"``."""
    m = _LABEL_RE.match(label.strip()) if isinstance(label, str) else None
    if not m:
        raise ParseError(f"not a level.weight.* label: {label!r}")
    level, weight = int(m.group(1)), int(m.group(2))
    if level < 1 or weight < 1:
        raise ParseError(f"level and weight must be positive in {label!r}")
    return level, weight


# -- serialization ---------------------------------------------------------

def _encode_coefficients(coefficients) -> list:
    out = []
    for c in coefficients:
        if isinstance(c, (int, np.integer)) and not isinstance(c, bool):
            out.append(int(c))
            continue
        c = complex(c)
        if c.imag == 0:
            re_ = c.real
            out.append(int(re_) if re_.is_integer() and abs(re_) < 2 ** 53 else re_)
        else:
            out.append([c.real, c.imag])
    return out


def _checksum(encoded: list) -> str:
    blob = json.dumps(encoded, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def _atomic_write_text(path: Path, text: str):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def write_coeff_json(path, *, weight, level, coefficients, period=1.0, label=None):
    encoded = _encode_coefficients(coefficients)
    doc = {
        "label": label,
        "weight": int(weight),
        "level": int(level),
        "period": float(period),
        "coefficients": encoded,
        "sha256": _checksum(encoded),
    }
    _atomic_write_text(Path(path), json.dumps(doc, indent=1) + "\n")


def save_coeff_file(series: FourierSeries, path, fmt: str = "json"):
    """Write ``series`` as JSON or as the plain text format."""
    if fmt == "json":
        write_coeff_json(path, weight=series.weight, level=series.level,
                         period=series.period, label=series.label,
                         coefficients=series.coefficients)
        return
    if fmt != "text":
        raise ValueError(f"unknown format {fmt!r}")
    lines = [f"{series.weight} {series.level} {series.period!r}"]
    if series.label:
        lines.insert(0, f"# label: {series.label}")
    for n, c in enumerate(series.coefficients, start=1):
        re_, im_ = float(c.real), float(c.imag)
        lines.append(f"{n} {re_!r} {im_!r}" if im_ else f"{n} {re_!r}")
    _atomic_write_text(Path(path), "\n".join(lines) + "\n")


# -- parsing ---------------------------------------------------------------

def _number(token, where):
    if isinstance(token, bool):
        raise ParseError(f"{where}: expected a number, got {token!r}")
    try:
        value = float(token)
    except (TypeError, ValueError):
        raise ParseError(f"{where}: expected a number, got {token!r}") from None
    if not math.isfinite(value):
        raise ParseError(f"{where}: value must be finite, got {token!r}")
    return value


def _integer(token, where):
    value = _number(token, where)
    if not value.is_integer():
        raise ParseError(f"{where}: expected an integer, got {token!r}")
    return int(value)


def _coefficient(item, where) -> complex:
    if isinstance(item, (list, tuple)):
        if len(item) not in (1, 2):
            raise ParseError(f"{where}: expected [re, im], got {item!r}")
        re_ = _number(item[0], where)
        im_ = _number(item[1], where) if len(item) == 2 else 0.0
        return complex(re_, im_)
    if isinstance(item, int) and not isinstance(item, bool):
        return complex(float(item), 0.0)
    return complex(_number(item, where), 0.0)


def _series_from_doc(doc, source, verify_checksum=True) -> FourierSeries:
    if not isinstance(doc, dict):
        raise ParseError(f"{source}: top level must be an object")
    for key in ("weight", "level", "coefficients"):
        if key not in doc:
            raise ParseError(f"{source}: missing field {key!r}")
    weight = _integer(doc["weight"], f"{source}: field 'weight'")
    level = _integer(doc["level"], f"{source}: field 'level'")
    period = _number(doc.get("period", 1.0), f"{source}: field 'period'")
    label = doc.get("label")
    if label is not None and not isinstance(label, str):
        raise ParseError(f"{source}: field 'label' must be a string")
    raw = doc["coefficients"]
    if not isinstance(raw, list):
        raise ParseError(f"{source}: field 'coefficients' must be a list")
    if verify_checksum and "sha256" in doc and doc["sha256"] != _checksum(raw):
        raise ValidationError(f"{source}: checksum mismatch")
    coefs = [_coefficient(c, f"{source}: coefficient {i + 1}") for i, c in enumerate(raw)]
    return FourierSeries(coefs, weight=weight, level=level, period=period, label=label)


def _series_from_text(text: str, source) -> FourierSeries:
    header = None
    label = None
    entries = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith("#"):
            m = re.match(r"#\s*label:\s*(\S+)", stripped)
            if m:
                label = m.group(1)
            continue
        if not stripped:
            continue
        tokens = stripped.split()
        where = f"{source}:{lineno}"
        if header is None:
            if len(tokens) not in (2, 3):
                raise ParseError(f"{where}: header must be 'weight level period'")
            weight = _integer(tokens[0], f"{where} weight")
            level = _integer(tokens[1], f"{where} level")
            period = _number(tokens[2], f"{where} period") if len(tokens) == 3 else 1.0
            header = (weight, level, period)
            continue
        if len(tokens) not in (2, 3):
            raise ParseError(f"{where}: expected 'n re [im]'")
        n = _integer(tokens[0], f"{where} index")
        if n < 1:
            raise ParseError(f"{where}: index must be >= 1")
        if n in entries:
            raise ParseError(f"{where}: duplicate index {n}")
        im_ = _number(tokens[2], f"{where} im") if len(tokens) == 3 else 0.0
        entries[n] = complex(_number(tokens[1], f"{where} re"), im_)
    if header is None:
        raise ParseError(f"{source}: missing header line")
    if not entries:
        raise ParseError(f"{source}: no coefficients")
    coefs = np.zeros(max(entries), dtype=np.complex128)
    for n, c in entries.items():
        coefs[n - 1] = c
    weight, level, period = header
    return FourierSeries(coefs, weight=weight, level=level, period=period, label=label)


def load_coeff_file(path) -> FourierSeries:
    """Read a coefficient file in either supported format."""
    path = Path(path)
    text = path.read_text()
    if text.lstrip().startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}:{exc.lineno}: {exc.msg}") from None
        return _series_from_doc(doc, str(path))
    return _series_from_text(text, str(path))


# -- remote + cache --------------------------------------------------------

def _env_flag(name) -> bool:
    return os.environ.get(name, "").strip().lower() in ("1", "true", "yes", "on")


def default_cache_dir() -> Path:
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    base = os.environ.get("XDG_CACHE_HOME") or Path.home() / ".cache"
    return Path(base) / "modviz"


@dataclass(frozen=True)
class FetchConfig:
    """Where coefficients come from.

    ``bundled`` allows the coefficient files shipped with the package to
    satisfy a request before the network is consulted.
    """

    base_url_template: str = DEFAULT_URL_TEMPLATE
    cache_dir: Path = field(default_factory=default_cache_dir)
    offline: bool = False
    timeout_seconds: float = 30.0
    bundled: bool = True

    def __post_init__(self):
        if "{label}" not in self.base_url_template:
            raise ValidationError("URL template must contain {label}")
        if not self.timeout_seconds > 0:
            raise ValidationError("timeout must be positive")
        object.__setattr__(self, "cache_dir", Path(self.cache_dir))

    @classmethod
    def from_env(cls, **overrides) -> "FetchConfig":
        kwargs = {"offline": _env_flag(OFFLINE_ENV)}
        kwargs.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**kwargs)


def count_bucket(count: int) -> int:
    """Round ``count`` up to a power of two."""
    if count < 1:
        raise ValueError("count must be >= 1")
    return 1 << (count - 1).bit_length()


def cache_path(cache_dir, label: str, count: int) -> Path:
    return Path(cache_dir) / f"{label}__{count_bucket(count)}.json"


def _read_cache(cfg: FetchConfig, label: str, count: int) -> Optional[FourierSeries]:
    candidates = []
    for path in Path(cfg.cache_dir).glob(f"{glob_escape(label)}__*.json"):
        bucket = path.stem.rsplit("__", 1)[-1]
        if bucket.isdigit():
            candidates.append((int(bucket), path))
    for _, path in sorted(candidates):
        try:
            series = load_coeff_file(path)
        except (ParseError, ValidationError, OSError) as exc:
            log.warning("ignoring unusable cache entry %s: %s", path, exc)
            continue
        if len(series) >= count:
            return series.truncated(count)
    return None


def glob_escape(text: str) -> str:
    return re.sub(r"([*?\[])", r"[\1]", text)


def bundled_labels() -> list[str]:
    root = resources.files("modviz") / "data" / "forms"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_bundled(label: str, count: Optional[int] = None) -> Optional[FourierSeries]:
    """Coefficients shipped with the package, or None if absent/too short."""
    res = resources.files("modviz") / "data" / "forms" / f"{label}.json"
    if not res.is_file():
        return None
    series = _series_from_doc(json.loads(res.read_text()), f"bundled:{label}")
    if count is None:
        return series
    return series.truncated(count) if len(series) >= count else None


def _urllib_transport(url: str, timeout: float) -> bytes:
    try:
        with urllib.request.urlopen(url, timeout=timeout) as resp:
            return resp.read()
    except urllib.error.HTTPError as exc:
        if exc.code == 404:
            raise NotFound(f"{url}: HTTP 404") from None
        raise NetworkError(f"{url}: HTTP {exc.code}") from None
    except (urllib.error.URLError, TimeoutError, OSError) as exc:
        raise NetworkError(f"{url}: {exc}") from None


def normalize_payload(payload, label: str) -> FourierSeries:
    """Turn a remote JSON document into a validated series.

    Accepts either our own document layout or an API envelope
    ``{"data": [record, ...]}``. Coefficients are read from ``coefficients``,
    ``an`` or ``an_normalized``; the last is rescaled by n^((k-1)/2).
    Level and weight default to the label's; disagreement is a ValidationError.
    """
    level, weight = label_metadata(label)
    record = payload
    if isinstance(payload, dict) and "data" in payload:
        records = payload["data"]
        if not isinstance(records, list):
            raise PayloadError(f"{label}: 'data' is not a list")
        if not records:
            raise NotFound(f"{label}: no records upstream")
        record = next((r for r in records if isinstance(r, dict) and r.get("label") == label),
                      records[0])
    if not isinstance(record, dict):
        raise PayloadError(f"{label}: record is not an object")

    for key, expected in (("level", level), ("weight", weight)):
        if key in record:
            try:
                got = int(record[key])
            except (TypeError, ValueError):
                raise PayloadError(f"{label}: bad {key} {record[key]!r}") from None
            if got != expected:
                raise ValidationError(
                    f"{label}: payload {key} {got} disagrees with label ({expected})")

    normalized = False
    for key in ("coefficients", "an", "an_normalized"):
        if key in record:
            raw = record[key]
            normalized = key == "an_normalized"
            break
    else:
        raise PayloadError(f"{label}: no coefficient field in payload")
    if not isinstance(raw, list) or not raw:
        raise PayloadError(f"{label}: coefficient field is empty or not a list")
    try:
        coefs = np.array([_coefficient(c, f"{label} coefficient {i + 1}")
                          for i, c in enumerate(raw)], dtype=np.complex128)
    except ParseError as exc:
        raise PayloadError(str(exc)) from None
    if normalized:
        n = np.arange(1, coefs.size + 1, dtype=float)
        coefs = coefs * n ** ((weight - 1) / 2.0)
    period = record.get("period", 1.0)
    try:
        return FourierSeries(coefs, weight=weight, level=level, period=period, label=label)
    except ValidationError as exc:
        raise PayloadError(f"{label}: {exc}") from None


def fetch_remote(cfg: FetchConfig, label: str, count: int,
                 transport: Optional[Transport] = None) -> FourierSeries:
    """Coefficients for ``label``: cache, then bundled data, then one HTTP GET.

    A successful download is written to the cache atomically under a per-label
    file lock. ``cfg.offline`` never touches the network.
    """
    label_metadata(label)
    if count < 1:
        raise ValueError("count must be >= 1")
    cache_dir = Path(cfg.cache_dir)
    series = _read_cache(cfg, label, count) if cache_dir.is_dir() else None
    if series is not None:
        return series
    if cfg.bundled:
        series = load_bundled(label, count)
        if series is not None:
            return series
    if cfg.offline:
        raise OfflineMiss(f"{label}: no cached coefficients in {cache_dir} (offline)")

    cache_dir.mkdir(parents=True, exist_ok=True)
    with FileLock(str(cache_dir / f".{label}.lock")):
        series = _read_cache(cfg, label, count)
        if series is not None:
            return series
        bucket = count_bucket(count)
        url = cfg.base_url_template.format(label=label, count=bucket)
        body = (transport or _urllib_transport)(url, cfg.timeout_seconds)
        try:
            payload = json.loads(body)
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise PayloadError(f"{label}: malformed JSON from {url}: {exc}") from None
        series = normalize_payload(payload, label)
        if len(series) < count:
            raise PayloadError(f"{label}: upstream returned {len(series)} "
                               f"coefficients, need {count}")
        keep = series.truncated(bucket)
        write_coeff_json(cache_path(cache_dir, label, count), weight=keep.weight,
                         level=keep.level, period=keep.period, label=label,
                         coefficients=keep.coefficients)
    return series.truncated(count)
