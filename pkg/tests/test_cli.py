import json
import math
import subprocess
import sys

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from modviz import cli
from modviz.cli import (EXIT_INGEST, EXIT_OK, EXIT_PARTIAL, EXIT_RENDER, EXIT_USAGE,
                        CliConfig, HelpShown, UsageError, build_scheme, main, parse_args,
                        run_check, run_render_suite)
from modviz.coloring import MagnitudeGrey, PhaseContour
from modviz.forms import Disk, HalfplaneBox, delta_coefficients, tail_bound


class TestParse:
    def test_cividis_disk_recipe(self):
        cfg = parse_args("render --builtin delta --domain disk --scheme phase-contour "
                         "--cmap cividis -o delta.png".split())
        assert cfg.command == "render" and cfg.builtin == "delta"
        assert isinstance(cfg.domain_spec, Disk)
        assert (cfg.width, cfg.height, cfg.coeffs) == (600, 600, 400)
        scheme = build_scheme(cfg)
        assert isinstance(scheme, PhaseContour) and scheme.cm.name == "cividis"
        assert cfg.output == "delta.png"

    @pytest.mark.parametrize("argv", [
        ["render", "--builtin", "delta", "--domain", "box", "0.1,0.4,0,0.25"],
        ["render", "--builtin", "delta", "--domain=box", "0.1,0.4,0,0.25"],
        ["render", "--builtin", "delta", "--domain", "box:0.1,0.4,0,0.25"],
    ])
    def test_zoom_box(self, argv):
        assert parse_args(argv).domain_spec == HalfplaneBox(0.1, 0.4, 0.0, 0.25)

    def test_negative_bounds(self):
        cfg = parse_args(["render", "--builtin", "delta", "--domain", "box", "-2.5,2.5,0,2"])
        assert cfg.domain_spec == HalfplaneBox(-2.5, 2.5, 0.0, 2.0)

    @pytest.mark.parametrize("argv", [
        ["render", "--builtin", "delta", "--domain", "box", "1,0,0,1"],
        ["render", "--builtin", "delta", "--domain", "box", "0,1,-1,1"],
        ["render", "--builtin", "delta", "--domain", "box", "0,1,1"],
        ["render", "--builtin", "delta", "--domain", "square"],
        ["render"],
        ["render", "--builtin", "delta", "--label", "1.12.a.a.1.1"],
        ["render", "--label", "abc"],
        ["render", "--builtin", "delta", "--width", "0"],
        ["render", "--builtin", "delta", "--offset", "nan"],
        ["render", "--builtin", "delta", "--strength", "2"],
        ["render", "--builtin", "delta", "--masked-color", "white"],
        ["frobnicate"],
        [],
    ])
    def test_usage_errors(self, argv):
        with pytest.raises(UsageError):
            parse_args(argv)

    def test_unknown_names_list_candidates(self):
        with pytest.raises(UsageError, match="phase-contour"):
            parse_args(["render", "--builtin", "delta", "--scheme", "rainbow"])
        with pytest.raises(UsageError, match="cividis"):
            parse_args(["render", "--builtin", "delta", "--cmap", "jet"])

    def test_help(self, capsys):
        with pytest.raises(HelpShown):
            parse_args(["render", "--help"])
        assert "--scheme" in capsys.readouterr().out
        assert main(["--help"]) == EXIT_OK

    @settings(max_examples=300, suppress_health_check=[HealthCheck.too_slow], deadline=None)
    @given(st.lists(st.one_of(
        st.sampled_from(["render", "render-suite", "check", "fetch", "list-cmaps", "--builtin",
                         "delta", "--label", "--file", "--domain", "box", "disk", "--scheme",
                         "--cmap", "--offset", "--width", "-o", "--config", "--strength",
                         "--masked-color", "1,0,0,1", "0,1,0,1", "-1", "nan", "inf", "--"]),
        st.text(max_size=12)), max_size=8))
    def test_total(self, argv):
        try:
            cfg = parse_args(argv)
        except UsageError:
            return
        assert isinstance(cfg, CliConfig)


class TestConfigFile:
    def test_round_trip_byte_identical(self, tmp_path):
        saved = tmp_path / "recipe.json"
        first = tmp_path / "a.png"
        second = tmp_path / "b.png"
        argv = ["render", "--builtin", "delta", "--domain", "box", "-1,1,0,2",
                "--scheme", "phase-contour", "--cmap", "twilight", "--offset", "0.5",
                "--width", "90", "--height", "70", "--coeffs", "120"]
        assert main(argv + ["-o", str(first), "--save-config", str(saved)]) == EXIT_OK
        a = parse_args(argv + ["-o", str(first)])
        b = parse_args(["render", "--config", str(saved)])
        assert a == b
        assert main(["render", "--config", str(saved), "-o", str(second)]) == EXIT_OK
        assert first.read_bytes() == second.read_bytes()

    def test_flags_override_file(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"builtin": "delta", "width": 50, "scheme": "phase"}))
        cfg = parse_args(["render", "--config", str(path), "--width", "70"])
        assert cfg.width == 70 and cfg.scheme == "phase" and cfg.builtin == "delta"

    @pytest.mark.parametrize("content", ["{", "[]", '{"colour": 1}', '{"width": "big"}',
                                         '{"offline": "yes"}', '{"builtin": "delta", "domain": 3}'])
    def test_bad_config(self, tmp_path, content):
        path = tmp_path / "c.json"
        path.write_text(content)
        with pytest.raises(UsageError):
            parse_args(["render", "--builtin", "delta", "--config", str(path)])

    def test_missing_config(self, tmp_path):
        with pytest.raises(UsageError):
            parse_args(["render", "--config", str(tmp_path / "nope.json")])


def suite_cfg(tmp_path, cache, *extra):
    return parse_args(["render-suite", "--scheme", "mag-grey", "--width", "48", "--height", "40",
                       "--cache-dir", str(cache), "--offline", "-o", str(tmp_path / "out"),
                       *extra])


class TestSuite:
    def test_twelve_files(self, tmp_path, warm_cache):
        result = run_render_suite(suite_cfg(tmp_path, warm_cache, "--no-bundled"))
        assert result.exit_code == EXIT_OK and not result.failures
        names = sorted(p.name for p in result.paths)
        assert len(names) == 12
        for form in ("g", "delta", "f105", "f10"):
            for region in ("disk", "box", "zoom"):
                assert f"{form}_{region}_mag-grey.png" in names

    def test_missing_form_is_partial(self, tmp_path, warm_cache, capsys):
        (warm_cache / "105.2.a.a.1.1__512.json").unlink()
        cfg = suite_cfg(tmp_path, warm_cache, "--no-bundled")
        result = run_render_suite(cfg)
        assert len(result.paths) == 9 and result.exit_code == EXIT_PARTIAL
        assert any(f.startswith("f105") for f in result.failures)
        assert cli.run(cfg) == EXIT_PARTIAL
        assert "f105" in capsys.readouterr().err

    def test_bundled_data_fills_cold_cache(self, tmp_path):
        result = run_render_suite(suite_cfg(tmp_path, tmp_path / "cold"))
        assert len(result.paths) == 12

    def test_suite_regions(self, tmp_path, warm_cache, monkeypatch):
        seen = []
        real = cli.make_job

        def spy(cfg, form, domain=None):
            seen.append((form.label, domain))
            return real(cfg, form, domain)

        monkeypatch.setattr(cli, "make_job", spy)
        run_render_suite(suite_cfg(tmp_path, warm_cache))
        boxes = {label: d for label, d in seen if isinstance(d, HalfplaneBox)
                 and d != HalfplaneBox(0.1, 0.4, 0, 0.25)}
        assert boxes["5.4.a.a.1.1"] == HalfplaneBox(-2.5, 2.5, 0, 2)
        assert boxes["1.12.a.a.1.1"] == HalfplaneBox(-1, 1, 0, 2)
        assert boxes["105.2.a.a.1.1"] == HalfplaneBox(-1, 1, 0, 1)
        assert boxes["10.20.a.a.1.1"] == HalfplaneBox(-1, 1, 0, 2)
        assert sum(isinstance(d, Disk) for _, d in seen) == 4


class TestCheck:
    def test_delta(self):
        cfg = parse_args(["check", "--builtin", "delta", "--domain", "box", "-1,1,0.2,2"])
        report = run_check(cfg)
        assert report.periodicity_max <= 1e-10
        assert report.s_inversion_max is not None and report.s_inversion_max <= 1e-6
        assert report.y_min == 0.2
        assert report.tail_bound == tail_bound(delta_coefficients(400), 0.2)
        text = report.format()
        assert "tail bound" in text and "S-invert" in text

    def test_zero_file(self, tmp_path):
        path = tmp_path / "zero.txt"
        path.write_text("12 1 1\n" + "".join(f"{n} 0\n" for n in range(1, 11)))
        report = run_check(parse_args(["check", "--file", str(path)]))
        assert report.periodicity_max == 0.0 and report.s_inversion_max == 0.0
        assert report.tail_bound == 0.0 and report.last_term == 0.0

    def test_higher_level_skips_s(self, tmp_path):
        cfg = parse_args(["check", "--label", "5.4.a.a.1.1", "--cache-dir", str(tmp_path)])
        report = run_check(cfg)
        assert report.s_inversion_max is None
        assert report.periodicity_max <= 1e-10
        assert "skipped" in report.format()

    def test_disk_y_min(self):
        report = run_check(parse_args(["check", "--builtin", "delta", "--width", "100",
                                       "--height", "100"]))
        assert 0 < report.y_min < 0.02
        assert math.isfinite(report.tail_bound)


class TestExitCodes:
    def test_render_ok(self, tmp_path, capsys):
        out = tmp_path / "d.png"
        argv = ["render", "--builtin", "delta", "--width", "30", "--height", "30", "-o", str(out)]
        assert main(argv) == EXIT_OK
        assert out.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    def test_usage(self, capsys):
        assert main(["render", "--domain", "box", "1,0,0,1", "--builtin", "delta"]) == EXIT_USAGE
        assert "usage error" in capsys.readouterr().err

    def test_ingest(self, tmp_path):
        assert main(["render", "--label", "7.3.b.a", "--offline", "--no-bundled",
                     "--cache-dir", str(tmp_path)]) == EXIT_INGEST
        assert main(["render", "--file", str(tmp_path / "none.txt")]) == EXIT_INGEST
        bad = tmp_path / "bad.txt"
        bad.write_text("12 1 1\n1 x\n")
        assert main(["render", "--file", str(bad)]) == EXIT_INGEST

    def test_render_io(self, tmp_path):
        assert main(["render", "--builtin", "delta", "--width", "10", "--height", "10",
                     "-o", str(tmp_path / "no" / "such" / "dir.png")]) == EXIT_RENDER

    def test_fetch_offline(self, tmp_path, warm_cache, capsys):
        assert main(["fetch", "--label", "10.20.a.a.1.1", "--offline", "--no-bundled",
                     "--cache-dir", str(warm_cache)]) == EXIT_OK
        assert "weight 20, level 10" in capsys.readouterr().out
        assert main(["fetch", "--label", "10.20.a.a.1.1", "--offline", "--no-bundled",
                     "--cache-dir", str(tmp_path / "cold")]) == EXIT_INGEST

    def test_list_cmaps(self, capsys):
        assert main(["list-cmaps"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "twilight" in out and "cyclic" in out and "phase-contour" in out

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "modviz", "list-cmaps"],
                              capture_output=True, text=True)
        assert proc.returncode == 0 and "paired" in proc.stdout
        proc = subprocess.run([sys.executable, "-m", "modviz", "nope"],
                              capture_output=True, text=True)
        assert proc.returncode == EXIT_USAGE


def test_scheme_defaults():
    assert build_scheme(parse_args(["render", "--builtin", "delta", "--scheme", "mag-grey"])) \
        == MagnitudeGrey(0.25)
    s = build_scheme(parse_args(["render", "--builtin", "delta"]))
    assert isinstance(s, PhaseContour) and s.contour_base == 2.0 and s.strength == 0.5
