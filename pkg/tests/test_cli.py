import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dampwave.cli import EXIT_CONFIG, EXIT_OK, Report, fmt, main, run
from dampwave.config import (
    ANALYSIS_DEFAULTS,
    ConfigError,
    compile_expression,
    load_config,
    parse_config,
)
from dampwave.errors import InvalidArgument

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"

SMALL = {
    "version": 1,
    "name": "small",
    "seed": 3,
    "domain": {"type": "interval", "length": "pi"},
    "damping": {"kelvin_voigt": [{"lo": [1.0], "hi": [1.5], "value": 1.0, "taper": 0.25}]},
    "analysis": {"k_max": 40, "dense_modes": 40, "truncation": 10, "omega_points": 20,
                 "modes": 16, "t_end": 200.0, "dt": 0.05, "samples": 300},
    "output": {"directory": "unused"},
}


def write_config(tmp_path, raw, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(raw))
    return p


def summary(directory):
    lines = (Path(directory) / "summary.txt").read_text().splitlines()
    return dict(line.split(" = ", 1) for line in lines)


class TestSubcommands:
    def test_predict_square_kelvin_voigt(self, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["predict", str(SCENARIOS / "square-kelvin-voigt-strip.json"), "--output", str(out)]) == EXIT_OK
        text = (out / "summary.txt").read_text()
        assert "m = 5" in text and "rate = 2/5" in text
        assert "m = 5" in capsys.readouterr().out
        assert (out / "predictions.tsv").exists()

    def test_gaps_three_halves(self, tmp_path):
        out = tmp_path / "out"
        assert main(["gaps", str(SCENARIOS / "rectangle-three-halves.json"), "--output", str(out)]) == EXIT_OK
        s = summary(out)
        assert s["gaps.rational_bound"] == "1/2"

    def test_missing_lengths(self, tmp_path, capsys):
        raw = json.loads((SCENARIOS / "square-kelvin-voigt-strip.json").read_text())
        del raw["domain"]["lengths"]
        out = tmp_path / "out"
        status = main(["gaps", str(write_config(tmp_path, raw)), "--output", str(out)])
        assert status == EXIT_CONFIG
        assert "domain.lengths" in capsys.readouterr().err
        assert not out.exists()
        assert list(tmp_path.iterdir()) == [tmp_path / "cfg.json"]

    def test_full_report_small(self, tmp_path):
        out = tmp_path / "out"
        assert main(["report", str(write_config(tmp_path, SMALL)), "--output", str(out)]) == EXIT_OK
        names = {p.name for p in out.iterdir()}
        assert {"summary.txt", "spectrum.tsv", "beta.tsv", "profile.tsv", "trajectory.tsv"} <= names
        s = summary(out)
        assert s["decay.bounded"] == "1"

    def test_console_script(self, tmp_path):
        out = tmp_path / "out"
        proc = subprocess.run([sys.executable, "-m", "dampwave", "spectrum", str(write_config(tmp_path, SMALL)),
                               "--output", str(out)], capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        assert (out / "spectrum.tsv").exists()


class TestDeterminism:
    def test_byte_identical(self, tmp_path):
        cfg = write_config(tmp_path, SMALL)
        for d in ("a", "b"):
            assert main(["report", str(cfg), "--output", str(tmp_path / d)]) == EXIT_OK
        a, b = sorted((tmp_path / "a").iterdir()), sorted((tmp_path / "b").iterdir())
        assert [p.name for p in a] == [p.name for p in b]
        for pa, pb in zip(a, b):
            assert pa.read_bytes() == pb.read_bytes(), pa.name

    def test_seed_changes_trajectory(self, tmp_path):
        raw = dict(SMALL, seed=4)
        main(["simulate", str(write_config(tmp_path, SMALL, "a.json")), "--output", str(tmp_path / "a")])
        main(["simulate", str(write_config(tmp_path, raw, "b.json")), "--output", str(tmp_path / "b")])
        assert (tmp_path / "a" / "trajectory.tsv").read_bytes() != (tmp_path / "b" / "trajectory.tsv").read_bytes()


class TestAtomicity:
    def test_failed_write_leaves_nothing(self, tmp_path):
        rep = Report()
        rep.table("bad", ("x",), [(object(),)])
        rep.lines.append("ok")

        class Boom:
            def __str__(self):
                raise RuntimeError("boom")

        rep.table("worse", ("x",), [(Boom(),)])
        with pytest.raises(RuntimeError):
            rep.write(tmp_path / "out")
        assert list(tmp_path.iterdir()) == []

    def test_failed_run_keeps_previous(self, tmp_path):
        out = tmp_path / "out"
        cfg = write_config(tmp_path, SMALL)
        assert main(["spectrum", str(cfg), "--output", str(out)]) == EXIT_OK
        before = {p.name: p.read_bytes() for p in out.iterdir()}
        raw = json.loads(json.dumps(SMALL))
        raw["analysis"]["m_pred"] = -1
        bad = write_config(tmp_path, raw, "bad.json")
        assert main(["simulate", str(bad), "--output", str(out)]) != EXIT_OK
        assert {p.name: p.read_bytes() for p in out.iterdir()} == before
        assert sorted(p.name for p in tmp_path.iterdir()) == ["bad.json", "cfg.json", "out"]

    def test_replace_existing(self, tmp_path):
        out = tmp_path / "out"
        cfg = write_config(tmp_path, SMALL)
        main(["spectrum", str(cfg), "--output", str(out)])
        main(["predict", str(cfg), "--output", str(out)])
        assert not (out / "spectrum.tsv").exists()
        assert (out / "predictions.tsv").exists()


class TestConfig:
    def test_all_scenarios_parse(self):
        files = sorted(SCENARIOS.glob("*.json"))
        assert len(files) >= 10
        for f in files:
            cfg = load_config(f)
            assert cfg.name == json.loads(f.read_text())["name"]

    @pytest.mark.parametrize("mutate, field", [
        (lambda r: r["analysis"].update(bogus=1), "analysis.bogus"),
        (lambda r: r["analysis"].update(dt=-1), "analysis.dt"),
        (lambda r: r["analysis"].update(modes=0), "analysis.modes"),
        (lambda r: r.update(version=2), "version"),
        (lambda r: r.pop("output"), "output.directory"),
        (lambda r: r["domain"].update(type="disc"), "domain.type"),
        (lambda r: r["damping"]["kelvin_voigt"][0].update(hi=[9.0]), "damping"),
        (lambda r: r["analysis"].update(initial_data="wild"), "analysis.initial_data"),
        (lambda r: r.update(seed=-1), "seed"),
    ])
    def test_rejection_names_field(self, mutate, field):
        raw = json.loads(json.dumps(SMALL))
        mutate(raw)
        with pytest.raises(ConfigError) as info:
            parse_config(raw)
        assert info.value.path.startswith(field)

    def test_rectangle_needs_cap(self):
        raw = json.loads((SCENARIOS / "square-kelvin-voigt-strip.json").read_text())
        del raw["analysis"]["lambda_cap"]
        with pytest.raises(ConfigError, match="lambda_cap"):
            parse_config(raw)

    def test_inconsistent_ratio(self):
        raw = json.loads((SCENARIOS / "square-kelvin-voigt-strip.json").read_text())
        raw["domain"]["ratios"] = ["2"]
        with pytest.raises(ConfigError, match=r"domain.ratios\[0\]"):
            parse_config(raw)

    def test_defaults_complete(self):
        cfg = parse_config(dict(SMALL))
        assert set(cfg.analysis) == set(ANALYSIS_DEFAULTS)


class TestExpressions:
    def test_values(self):
        assert compile_expression("pi/2")() == pytest.approx(math.pi / 2)
        assert compile_expression("sqrt(2)*arctan(1)")() == pytest.approx(math.sqrt(2) * math.pi / 4)
        f = compile_expression("(1 + x/pi)**2", ("x",))
        np.testing.assert_allclose(f(np.array([0.0, math.pi])), [1.0, 4.0])

    def test_mpmath_backend(self):
        import mpmath
        v = compile_expression("pi*sqrt(2/3)", backend="mpmath")()
        assert isinstance(v, mpmath.mpf)
        assert abs(v - mpmath.pi * mpmath.sqrt(mpmath.mpf(2) / 3)) < mpmath.mpf(10) ** -14

    @pytest.mark.parametrize("text", [
        "__import__('os')", "x.real", "open('f')", "[1, 2]", "lambda: 1", "sqrt", "y + 1", "pi if 1 else 2",
        "sin(1, 2)", "().__class__",
    ])
    def test_rejects_unsafe(self, text):
        with pytest.raises(InvalidArgument):
            compile_expression(text, ("x",))

    @given(st.integers(-1000, 1000), st.integers(1, 1000))
    def test_rational_arithmetic(self, p, q):
        assert compile_expression(f"{p}/{q}")() == pytest.approx(p / q)


def test_fmt():
    from fractions import Fraction
    assert fmt(Fraction(2, 5)) == "2/5"
    assert fmt(True) == "1"
    assert fmt(0.1) == "0.1"
    assert fmt(float("inf")) == "inf"
    assert fmt(np.float64(1 / 3)) == "0.333333333333"
