import json

import numpy as np
import pytest

from hetdiff.cli import (EXIT_ACCURACY, EXIT_IO, EXIT_OK, EXIT_USAGE, UsageError, build_parser,
                         compile_expr, main, parse_init)
from hetdiff.io import RunManifest, load_table
from hetdiff.model import Dirac, Sampled, Step

WALK = ["walk", "--eps", "0.25", "--q", "0.9", "--delta", "0.04", "--n", "5000",
        "--seed", "7"]


def run(tmp_path, argv, name):
    out = tmp_path / name
    code = main(argv + ["--out", str(out)], _quiet=True)
    return code, out


class TestParsing:
    def test_init_kinds(self):
        assert parse_init("dirac:1.5") == Dirac(1.5)
        assert parse_init("step:1:0.5") == Step(1.0, 0.5)
        phi = parse_init("expr:1+sin(x)")
        assert isinstance(phi, Sampled)
        assert phi.bound >= 2.0

    @pytest.mark.parametrize("text", ["dirac:a", "step:1", "gauss:1", "expr:-1",
                                      "expr:1/x", "expr:x**"])
    def test_bad_init(self, text):
        with pytest.raises(UsageError):
            parse_init(text)

    @pytest.mark.parametrize("src", ["__import__('os')", "x.real", "open", "(lambda: 1)()",
                                     "[1][0]", "'a'", "globals()"])
    def test_expression_whitelist(self, src):
        with pytest.raises(UsageError):
            compile_expr(src)

    def test_expression_values(self):
        f = compile_expr("exp(-x**2) + pi")
        x = np.array([0.0, 1.0])
        assert np.allclose(f(x), np.exp(-x ** 2) + np.pi)
        assert compile_expr("2")(x).shape == (2,)

    def test_help_documents_every_flag(self, capsys):
        parser = build_parser()
        subs = next(a for a in parser._actions if a.choices and "walk" in a.choices).choices
        for name, sp in subs.items():
            assert main([name, "--help"]) == EXIT_OK
            text = capsys.readouterr().out
            for action in sp._actions:
                assert action.help, (name, action.dest)
                for flag in action.option_strings:
                    assert flag in text, (name, flag)


class TestExitCodes:
    def test_usage(self, tmp_path):
        assert main(["solve", "--bogus"], _quiet=True) == EXIT_USAGE
        assert main(["frobnicate"], _quiet=True) == EXIT_USAGE
        code, _ = run(tmp_path, ["solve", "--init", "expr:__import__('os')", "--eps", "0.25",
                                 "--q", "0.5", "--t", "0.01"], "a.csv")
        assert code == EXIT_USAGE
        code, _ = run(tmp_path, ["solve", "--init", "dirac:1", "--eps", "-1", "--q", "0.5",
                                 "--t", "0.01"], "b.csv")
        assert code == EXIT_USAGE

    def test_numerical_failure(self, tmp_path):
        code, out = run(tmp_path, ["solve", "--init", "dirac:1", "--eps", "1e-11", "--q", "40",
                                   "--t", "0.1"], "c.csv")
        assert code == EXIT_ACCURACY and not out.exists()

    def test_io_failure(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        code, _ = run(tmp_path, ["solve", "--init", "dirac:1", "--eps", "0.25", "--q", "0.5",
                                 "--t", "0.01"], "file/sub.csv")
        assert code == EXIT_IO
        assert main(["rerun", str(tmp_path / "none.manifest.json"), "--out-dir",
                     str(tmp_path)], _quiet=True) == EXIT_IO


class TestSolve:
    def test_heat_kernel_snapshot(self, tmp_path):
        code, out = run(tmp_path, ["solve", "--source", "closed", "--init", "dirac:1",
                                   "--eps", "0.25", "--q", "0.5", "--t", "0.01"], "s.csv")
        assert code == EXIT_OK
        tab = load_table(out)
        assert tab.columns == ("t", "x", "u")
        x, u = tab.column("x"), tab.column("u")
        # sigma = 1: the pressure is the heat kernel in y, u = eps**-q p on the left
        y = np.where(x < 0, 0.25 ** -0.5 * x, x)
        p = np.exp(-(y - 1) ** 2 / 0.04) / np.sqrt(0.04 * np.pi)
        assert np.allclose(u, np.where(x < 0, 0.25 ** -0.5, 1.0) * p, rtol=1e-12, atol=1e-300)

    def test_fd_snapshot_and_manifest(self, tmp_path):
        code, out = run(tmp_path, ["solve", "--source", "fd-x", "--init", "step:1:1",
                                   "--eps", "0.0625", "--q", "0.9", "--t", "0.01",
                                   "--dx", "0.01"], "f.json")
        assert code == EXIT_OK
        tab = load_table(out)
        assert tab.columns == ("t", "x", "u") and len(tab.rows) > 100
        man = RunManifest.load(tmp_path / "f.json.manifest.json")
        assert man.params["source"] == "fd-x" and "f.json" in man.outputs
        assert json.loads(out.read_text())["manifest"]["command"][0] == "solve"

    def test_pressure_in_y(self, tmp_path):
        code, out = run(tmp_path, ["solve", "--init", "step:1:1", "--eps", "0.0625", "--q",
                                   "0.9", "--t", "0.01", "0.02", "--space", "y", "--quantity",
                                   "p"], "p.csv")
        tab = load_table(out)
        assert code == EXIT_OK and tab.columns == ("t", "y", "p")
        assert set(tab.column("t")) == {0.01, 0.02}


class TestSweep:
    def test_value_sweep_and_fit(self, tmp_path):
        code, out = run(tmp_path, ["sweep", "--observable", "value", "--q", "0.9",
                                   "--eps-range", "1e-6:1e-3:20"], "w.csv")
        assert code == EXIT_OK
        tab = load_table(out)
        assert tab.columns == ("eps", "log10_eps", "value", "log10_value")
        assert np.allclose(tab.column("log10_eps"), np.log10(tab.column("eps")))
        fit = load_table(tmp_path / "w.fit.csv")
        assert fit.column("k")[0] == pytest.approx(0.4, abs=0.02)

    def test_curve(self, tmp_path):
        code, out = run(tmp_path, ["sweep", "--curve", "--q-range", "0.5:1:5"], "c.csv")
        assert code == EXIT_OK
        tab = load_table(out)
        assert tab.columns[:3] == ("q", "abs_q_minus_half", "k")
        assert len(tab.rows) == 5
        assert np.all(np.diff(tab.column("k")) > 0)


class TestWalk:
    def test_byte_identical(self, tmp_path):
        _, a = run(tmp_path, WALK, "a.csv")
        _, b = run(tmp_path, WALK, "b.csv")
        assert a.read_bytes() == b.read_bytes()

    def test_columns(self, tmp_path):
        code, out = run(tmp_path, WALK, "w.csv")
        tab = load_table(out)
        assert code == EXIT_OK
        for col in ("density", "exact", "l1_distance", "left_mass_fraction"):
            assert col in tab.columns
        assert 0 < tab.column("left_mass_fraction")[0] < 1

    def test_thread_cap_does_not_change_output(self, tmp_path, monkeypatch):
        _, a = run(tmp_path, WALK[:-4] + ["--n", "70000", "--seed", "7"], "a.csv")
        monkeypatch.setenv("HETDIFF_THREADS", "1")
        _, b = run(tmp_path, WALK[:-4] + ["--n", "70000", "--seed", "7"], "b.csv")
        assert a.read_bytes() == b.read_bytes()


class TestRerun:
    @pytest.mark.parametrize("fmt", ["csv", "json"])
    def test_reproduces(self, tmp_path, fmt):
        code, out = run(tmp_path, WALK + ["--format", fmt], f"w.{fmt}")
        assert code == EXIT_OK
        again = tmp_path / "again"
        assert main(["rerun", str(tmp_path / f"w.{fmt}.manifest.json"), "--out-dir",
                     str(again)], _quiet=True) == EXIT_OK
        assert load_table(again / f"w.{fmt}") == load_table(out)

    def test_detects_tampering(self, tmp_path):
        _, out = run(tmp_path, WALK, "w.csv")
        out.write_text(out.read_text().replace("\n0", "\n1", 1))
        assert main(["rerun", str(tmp_path / "w.csv.manifest.json"), "--out-dir",
                     str(tmp_path / "again")], _quiet=True) == EXIT_ACCURACY
