"""Command line front end.

Exit codes: 0 success, 2 usage error, 3 ingest failure, 4 render or I/O
failure, 5 partially failed figure suite.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .colormap import BUILTIN_NAMES, builtin
from .coloring import (SCHEMES, MagLinearPeriodic, MagLogPeriodic, MagnitudeGrey,
                       PhaseContour, PurePhase, StandardDomain)
from .errors import (FetchError, IoError, ModvizError, ParseError, SizeError,
                     UnknownColormap, ValidationError)
from .forms import (S_INVERSION, Disk, FourierSeries, HalfplaneBox, automorphy_residual,
                    delta_coefficients, periodicity_residual, sample_domain, tail_bound)
from .ingest import FetchConfig, fetch_remote, label_metadata, load_coeff_file
from .render import RenderJob, render, write_png

log = logging.getLogger("modviz")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INGEST = 3
EXIT_RENDER = 4
EXIT_PARTIAL = 5

COMMANDS = ("render", "render-suite", "list-cmaps", "fetch", "check")
BUILTIN_FORMS = ("delta",)

# name, form source, natural box
SUITE_FORMS = (
    ("g", "5.4.a.a.1.1", (-2.5, 2.5, 0.0, 2.0)),
    ("delta", "builtin:delta", (-1.0, 1.0, 0.0, 2.0)),
    ("f105", "105.2.a.a.1.1", (-1.0, 1.0, 0.0, 1.0)),
    ("f10", "10.20.a.a.1.1", (-1.0, 1.0, 0.0, 2.0)),
)
ZOOM_BOX = (0.1, 0.4, 0.0, 0.25)


class UsageError(ModvizError):
    exit_code = EXIT_USAGE


class HelpShown(UsageError):
    """--help was printed; not an error."""

    exit_code = EXIT_OK


@dataclass
class CliConfig:
    command: str
    builtin: Optional[str] = None
    label: Optional[str] = None
    file: Optional[str] = None
    domain: str = "disk"
    scheme: str = "phase-contour"
    cmap: Optional[str] = None
    offset: float = 0.0
    alpha: Optional[float] = None
    base: Optional[float] = None
    strength: float = 0.5
    width: int = 600
    height: int = 600
    coeffs: int = 400
    output: Optional[str] = None
    offline: bool = False
    cache_dir: Optional[str] = None
    bundled: bool = True
    workers: int = 1
    masked_color: str = "#ffffff"
    save_config: Optional[str] = field(default=None, compare=False)

    def to_dict(self) -> dict:
        """Flag values as a config-file document (``command`` excluded)."""
        doc = dataclasses.asdict(self)
        doc.pop("command")
        doc.pop("save_config")
        return doc

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @property
    def domain_spec(self):
        return parse_domain(self.domain)

    @property
    def masked_rgb(self):
        return parse_color(self.masked_color)


CONFIG_KEYS = tuple(f.name for f in dataclasses.fields(CliConfig)
                    if f.name not in ("command", "save_config"))


# -- argument helpers ------------------------------------------------------

def parse_domain(text: str):
    """``disk`` or ``box:x0,x1,y0,y1``."""
    if not isinstance(text, str):
        raise UsageError(f"bad domain {text!r}")
    text = text.strip()
    if text.lower() == "disk":
        return Disk()
    kind, _, rest = text.partition(":")
    if kind.lower() != "box" or not rest:
        raise UsageError(f"domain must be 'disk' or 'box X0,X1,Y0,Y1', got {text!r}")
    parts = rest.split(",")
    if len(parts) != 4:
        raise UsageError(f"box needs four comma-separated bounds, got {rest!r}")
    try:
        bounds = [float(p) for p in parts]
    except ValueError:
        raise UsageError(f"box bounds must be numbers, got {rest!r}") from None
    try:
        return HalfplaneBox(*bounds)
    except ValidationError as exc:
        raise UsageError(f"invalid box: {exc}") from None


def parse_color(text: str):
    s = text.strip().lstrip("#") if isinstance(text, str) else ""
    if len(s) != 6:
        raise UsageError(f"color must be #RRGGBB, got {text!r}")
    try:
        return tuple(int(s[i:i + 2], 16) / 255.0 for i in (0, 2, 4))
    except ValueError:
        raise UsageError(f"color must be #RRGGBB, got {text!r}") from None


def _merge_box_tokens(argv):
    # "--domain box -1,1,0,2" would make argparse read "-1,1,0,2" as a flag
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok == "--domain" and i + 2 < len(argv) and argv[i + 1].lower() == "box":
            out.append(f"--domain=box:{argv[i + 2]}")
            i += 3
            continue
        if tok.lower() == "--domain=box" and i + 1 < len(argv):
            out.append(f"--domain=box:{argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")

    def exit(self, status=0, message=None):
        if message:
            sys.stderr.write(message)
        if status == 0:
            raise HelpShown("help shown")
        raise UsageError(message or f"exit {status}")


def _positive_int(text):
    try:
        value = int(text)
    except (TypeError, ValueError):
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def _finite_float(text):
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"expected a finite number, got {text!r}")
    return value


def _add_form_source(p):
    group = p.add_mutually_exclusive_group()
    group.add_argument("--builtin", choices=BUILTIN_FORMS, help="built-in form")
    group.add_argument("--label", help="LMFDB-style label, e.g. 5.4.a.a.1.1")
    group.add_argument("--file", help="coefficient file (JSON or text)")


def _add_common(p):
    p.add_argument("--config", help="JSON file mirroring these flags; flags win")
    p.add_argument("--save-config", metavar="PATH", help="write the effective flags as JSON")
    p.add_argument("--coeffs", type=_positive_int, help="number of coefficients (400)")
    p.add_argument("--offline", action="store_true", default=None,
                   help="never use the network (also MODVIZ_OFFLINE=1)")
    p.add_argument("--cache-dir", dest="cache_dir", help="coefficient cache (MODVIZ_CACHE_DIR)")
    p.add_argument("--no-bundled", dest="bundled", action="store_false", default=None,
                   help="ignore the coefficient files shipped with modviz")
    p.add_argument("-v", "--verbose", action="store_true")


def _add_render_opts(p, with_domain=True):
    if with_domain:
        p.add_argument("--domain", help="'disk' (default) or 'box X0,X1,Y0,Y1'")
    p.add_argument("--scheme", help=f"one of: {', '.join(SCHEMES)}")
    p.add_argument("--cmap", help=f"one of: {', '.join(BUILTIN_NAMES)}")
    p.add_argument("--offset", type=_finite_float, help="phase offset in turns")
    p.add_argument("--alpha", type=_finite_float, help="brightness exponent (0.25)")
    p.add_argument("--base", type=_finite_float, help="log base: mag-log (7), phase-contour (2)")
    p.add_argument("--strength", type=_finite_float, help="contour strength in [0, 1] (0.5)")
    p.add_argument("--width", type=_positive_int)
    p.add_argument("--height", type=_positive_int)
    p.add_argument("--workers", type=_positive_int, help="render threads")
    p.add_argument("--masked-color", dest="masked_color", help="#RRGGBB outside the disk")
    p.add_argument("-o", "--output", help="output PNG (render) or directory (render-suite)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="modviz", description="Domain-coloring plots of modular forms.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("render", help="render one form to a PNG")
    _add_form_source(p)
    _add_render_opts(p)
    _add_common(p)

    p = sub.add_parser("render-suite",
                       help="render the four forms on disk, natural box and zoom box")
    _add_render_opts(p, with_domain=False)
    _add_common(p)

    p = sub.add_parser("list-cmaps", help="list colormaps and schemes")
    p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("fetch", help="download coefficients into the cache")
    p.add_argument("--label", required=True)
    _add_common(p)

    p = sub.add_parser("check", help="numerical automorphy audit")
    _add_form_source(p)
    p.add_argument("--domain", help="region whose lowest point sets the tail bound")
    p.add_argument("--width", type=_positive_int)
    p.add_argument("--height", type=_positive_int)
    _add_common(p)
    return parser


def _load_config_file(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    unknown = sorted(set(doc) - set(CONFIG_KEYS))
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    return doc


def _validate(cfg: CliConfig):
    for name in ("builtin", "label", "file", "cmap", "output", "cache_dir"):
        value = getattr(cfg, name)
        if value is not None and not isinstance(value, str):
            raise UsageError(f"{name} must be a string, got {value!r}")
    for name in ("scheme", "domain", "masked_color"):
        if not isinstance(getattr(cfg, name), str):
            raise UsageError(f"{name} must be a string, got {getattr(cfg, name)!r}")
    for name in ("offline", "bundled"):
        if not isinstance(getattr(cfg, name), bool):
            raise UsageError(f"{name} must be true or false, got {getattr(cfg, name)!r}")
    sources = [s for s in (cfg.builtin, cfg.label, cfg.file) if s is not None]
    if cfg.command in ("render", "check"):
        if len(sources) != 1:
            raise UsageError("give exactly one of --builtin, --label, --file")
    if cfg.builtin is not None and cfg.builtin not in BUILTIN_FORMS:
        raise UsageError(f"unknown built-in form {cfg.builtin!r}; choose from: "
                         f"{', '.join(BUILTIN_FORMS)}")
    if cfg.label is not None:
        try:
            label_metadata(cfg.label)
        except ParseError as exc:
            raise UsageError(str(exc)) from None
    parse_domain(cfg.domain)
    parse_color(cfg.masked_color)
    if cfg.scheme not in SCHEMES:
        raise UsageError(f"unknown scheme {cfg.scheme!r}; choose from: {', '.join(SCHEMES)}")
    if cfg.cmap is not None:
        try:
            builtin(cfg.cmap)
        except UnknownColormap as exc:
            raise UsageError(str(exc)) from None
    for name in ("width", "height", "coeffs", "workers"):
        value = getattr(cfg, name)
        if isinstance(value, bool) or not isinstance(value, int) or value < 1:
            raise UsageError(f"{name} must be a positive integer, got {value!r}")
    for name in ("offset", "alpha", "base", "strength"):
        value = getattr(cfg, name)
        if value is not None and (isinstance(value, bool) or not isinstance(value, (int, float))
                                  or not math.isfinite(value)):
            raise UsageError(f"{name} must be a finite number, got {value!r}")
    try:
        build_scheme(cfg)
    except ValidationError as exc:
        raise UsageError(str(exc)) from None


def parse_args(argv) -> CliConfig:
    """Parse ``argv`` (without the program name) into a validated config.

    Raises UsageError for anything invalid and HelpShown after printing help.
    """
    argv = _merge_box_tokens([str(a) for a in argv])
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.command is None:
        raise UsageError(f"missing command; choose from: {', '.join(COMMANDS)}")
    values = {}
    config_path = getattr(ns, "config", None)
    if config_path:
        values.update(_load_config_file(config_path))
    for key in CONFIG_KEYS:
        flag = getattr(ns, key, None)
        if flag is not None:
            values[key] = flag
    if values.get("domain") is not None and isinstance(values["domain"], str):
        values["domain"] = _normalize_domain_text(values["domain"])
    try:
        cfg = CliConfig(command=ns.command, **values)
    except TypeError as exc:
        raise UsageError(str(exc)) from None
    _validate(cfg)
    cfg.save_config = getattr(ns, "save_config", None)
    if getattr(ns, "verbose", False):
        logging.basicConfig(level=logging.INFO)
    return cfg


def _normalize_domain_text(text):
    text = text.strip()
    if text.lower().startswith("box ") and ":" not in text:
        return "box:" + text[4:].strip()
    return text


# -- building blocks -------------------------------------------------------

def build_scheme(cfg: CliConfig):
    cm = builtin(cfg.cmap) if cfg.cmap else builtin("legacy-hue")
    if cfg.scheme == "standard":
        return StandardDomain(cm, cfg.offset, 0.25 if cfg.alpha is None else cfg.alpha)
    if cfg.scheme == "mag-grey":
        return MagnitudeGrey(0.25 if cfg.alpha is None else cfg.alpha)
    if cfg.scheme == "mag-linear":
        return MagLinearPeriodic()
    if cfg.scheme == "mag-log":
        return MagLogPeriodic(7.0 if cfg.base is None else cfg.base)
    if cfg.scheme == "phase":
        return PurePhase(cm, cfg.offset)
    if cfg.scheme == "phase-contour":
        return PhaseContour(cm, cfg.offset, 2.0 if cfg.base is None else cfg.base,
                            cfg.strength)
    raise UsageError(f"unknown scheme {cfg.scheme!r}")


def fetch_config(cfg: CliConfig) -> FetchConfig:
    return FetchConfig.from_env(cache_dir=cfg.cache_dir,
                                offline=True if cfg.offline else None,
                                bundled=cfg.bundled)


def resolve_form(cfg: CliConfig, source: Optional[str] = None) -> FourierSeries:
    """Load the configured form (or ``source``: ``builtin:NAME`` or a label)."""
    if source is not None:
        if source.startswith("builtin:"):
            return delta_coefficients(cfg.coeffs)
        return fetch_remote(fetch_config(cfg), source, cfg.coeffs)
    if cfg.builtin is not None:
        return delta_coefficients(cfg.coeffs)
    if cfg.label is not None:
        return fetch_remote(fetch_config(cfg), cfg.label, cfg.coeffs)
    return load_coeff_file(cfg.file).truncated(cfg.coeffs)


def make_job(cfg: CliConfig, form: FourierSeries, domain=None) -> RenderJob:
    return RenderJob(form=form, domain=domain or cfg.domain_spec, scheme=build_scheme(cfg),
                     width=cfg.width, height=cfg.height, masked_color=cfg.masked_rgb)


@dataclass
class SuiteResult:
    paths: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    @property
    def exit_code(self):
        if not self.failures:
            return EXIT_OK
        return EXIT_PARTIAL if self.paths else EXIT_INGEST


def run_render_suite(cfg: CliConfig) -> SuiteResult:
    """Render every suite form on the disk, its natural box and the zoom box.

    Failures for one form are recorded and the remaining forms still render.
    """
    outdir = Path(cfg.output or "suite")
    outdir.mkdir(parents=True, exist_ok=True)
    result = SuiteResult()
    for name, source, box in SUITE_FORMS:
        try:
            form = resolve_form(cfg, source)
        except (FetchError, ModvizError, OSError) as exc:
            result.failures.append(f"{name}: {exc}")
            log.error("skipping %s: %s", name, exc)
            continue
        regions = (("disk", Disk()), ("box", HalfplaneBox(*box)),
                   ("zoom", HalfplaneBox(*ZOOM_BOX)))
        for region, domain in regions:
            path = outdir / f"{name}_{region}_{cfg.scheme}.png"
            try:
                buf = render(make_job(cfg, form, domain), workers=cfg.workers)
                result.paths.append(write_png(buf, path))
            except (IoError, SizeError, OSError) as exc:
                result.failures.append(f"{name}/{region}: {exc}")
    return result


@dataclass
class CheckReport:
    description: str
    periodicity_max: float
    s_inversion_max: Optional[float]
    y_min: float
    tail_bound: float
    last_term: float

    def format(self) -> str:
        lines = [
            self.description,
            f"T-shift  z -> z + h     max relative residual {self.periodicity_max:.3e}"
            " (50 points, Im z in [1, 2])",
        ]
        if self.s_inversion_max is None:
            lines.append("S-invert z -> -1/z      skipped (level != 1)")
        else:
            lines.append(f"S-invert z -> -1/z      max relative residual "
                         f"{self.s_inversion_max:.3e} (50 points, Im z in [0.9, 1.2])")
        lines.append(f"tail bound at y_min={self.y_min:.6g}: "
                     f"sum |a_n| exp(-2 pi n y/h) = {self.tail_bound:.6e}")
        lines.append(f"last retained term |a_M| exp(-2 pi M y/h) = {self.last_term:.6e}")
        return "\n".join(lines)


def _region_y_min(cfg: CliConfig) -> float:
    domain = cfg.domain_spec
    if isinstance(domain, HalfplaneBox):
        return domain.y_min
    grid, mask = sample_domain(domain, cfg.width, cfg.height)
    return float(np.min(grid[~mask].imag))


def run_check(cfg: CliConfig, form: Optional[FourierSeries] = None) -> CheckReport:
    if form is None:
        form = resolve_form(cfg)
    rng = np.random.default_rng(0)
    h = form.period
    tz = rng.uniform(-h / 2, h / 2, 50) + 1j * rng.uniform(1.0, 2.0, 50)
    t_max = max(periodicity_residual(form, z) for z in tz)
    s_max = None
    if form.level == 1 and h == 1.0:
        sz = rng.uniform(-0.5, 0.5, 50) + 1j * rng.uniform(0.9, 1.2, 50)
        s_max = max(automorphy_residual(form, S_INVERSION, z) for z in sz)
    y_min = _region_y_min(cfg)
    m = len(form)
    last = abs(form.coefficients[-1]) * math.exp(-2 * math.pi * m * y_min / h)
    desc = (f"form {form.label or '(unlabeled)'}: weight {form.weight}, level {form.level}, "
            f"period {h:g}, {m} coefficients")
    return CheckReport(desc, t_max, s_max, y_min, tail_bound(form, y_min), last)


def _list_cmaps() -> str:
    lines = ["colormaps:"]
    for name in BUILTIN_NAMES:
        cm = builtin(name)
        kind = "cyclic" if cm.cyclic else "discrete" if cm.discrete else "non-cyclic"
        lines.append(f"  {name:<11} {kind:<11} {len(cm)} stops")
    lines.append("schemes:")
    lines.extend(f"  {name}" for name in SCHEMES)
    return "\n".join(lines)


def run(cfg: CliConfig) -> int:
    if cfg.save_config:
        try:
            cfg.save(cfg.save_config)
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_RENDER
    if cfg.command == "list-cmaps":
        print(_list_cmaps())
        return EXIT_OK
    if cfg.command == "render-suite":
        result = run_render_suite(cfg)
        print(f"wrote {len(result.paths)} files to {cfg.output or 'suite'}")
        for failure in result.failures:
            print(f"FAILED {failure}", file=sys.stderr)
        return result.exit_code
    try:
        if cfg.command == "fetch":
            series = fetch_remote(fetch_config(cfg), cfg.label, cfg.coeffs)
            print(f"{cfg.label}: weight {series.weight}, level {series.level}, "
                  f"{len(series)} coefficients")
            return EXIT_OK
        form = resolve_form(cfg)
    except (FetchError, ParseError, ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INGEST
    if cfg.command == "check":
        print(run_check(cfg, form).format())
        return EXIT_OK
    output = cfg.output or "modviz.png"
    try:
        buf = render(make_job(cfg, form), workers=cfg.workers)
        write_png(buf, output)
    except (IoError, SizeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RENDER
    print(output)
    return EXIT_OK


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_args(argv)
    except HelpShown:
        return EXIT_OK
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
