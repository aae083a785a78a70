import csv
import io
import math
import subprocess
import sys

import pytest

from ldps import __version__
from ldps.cli import main
from ldps.config import load_preset


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def parse_csv(text):
    comments = [ln for ln in text.splitlines() if ln.startswith("#")]
    body = "\n".join(ln for ln in text.splitlines() if not ln.startswith("#"))
    return comments, list(csv.DictReader(io.StringIO(body)))


class TestMlEval:
    def test_exponential(self, capsys):
        code, out, _ = run(["ml-eval", "--alpha", "1", "--beta", "1", "--gamma", "1", "--u", "1"], capsys)
        assert code == 0
        value, method, est = out.split()
        assert float(value) == pytest.approx(math.e, rel=1e-15)
        assert method == "method=Series"
        assert est.startswith("est_rel_error=")

    def test_log_output(self, capsys):
        code, out, _ = run(["ml-eval", "--alpha", "0.5", "--beta", "1", "--gamma", "1", "--u", "100", "--log"], capsys)
        assert code == 0
        assert float(out.split()[0]) == pytest.approx(10000 + math.log(2), rel=1e-14)
        assert "method=Asymptotic" in out

    def test_overflow_hint(self, capsys):
        code, out, err = run(["ml-eval", "--alpha", "0.5", "--beta", "1", "--gamma", "1", "--u", "100"], capsys)
        assert code == 0 and out.startswith("inf") and "--log" in err

    def test_invalid_parameter(self, capsys):
        code, _, err = run(["ml-eval", "--alpha", "2", "--beta", "1", "--gamma", "1", "--u", "1"], capsys)
        assert code == 2
        assert "alpha must lie in (0,1]" in err

    def test_numeric_failure(self, capsys, monkeypatch):
        from ldps import cli
        from ldps.errors import NonConvergence

        def boom(*a, **k):
            raise NonConvergence("no")

        monkeypatch.setattr(cli, "prabhakar_eval", boom)
        code, _, err = run(["ml-eval", "--alpha", "1", "--beta", "1", "--gamma", "1", "--u", "1"], capsys)
        assert code == 3
        assert "NonConvergence" in err


class TestCsvCommands:
    def test_pmf(self, capsys):
        code, out, _ = run(["pmf", "--config", "poisson", "--t-grid", "3"], capsys)
        assert code == 0
        comments, rows = parse_csv(out)
        cfg = load_preset("poisson").with_overrides(t_grid=[3.0])
        assert comments[0] == f"# ldps {__version__} config_sha256={cfg.sha256()} seed=20240 command=pmf"
        assert math.fsum(float(r["pmf"]) for r in rows) == pytest.approx(1.0, abs=1e-12)
        assert float(rows[0]["log_pmf"]) == pytest.approx(-3.0, abs=1e-14)

    def test_cgf_converge(self, capsys):
        code, out, _ = run(["cgf-converge", "--config", "p1", "--theta", "1", "--t-grid", "100,1000,10000"], capsys)
        assert code == 0
        comments, rows = parse_csv(out)
        assert "# verdict theta=1.0=Decaying" in comments
        errs = [float(r["abs_err"]) for r in rows]
        assert errs[0] > errs[1] > errs[2]

    def test_rate(self, capsys):
        code, out, _ = run(["rate", "--config", "p1", "--x", "0.5,2,9"], capsys)
        assert code == 0
        _, rows = parse_csv(out)
        assert max(float(r["abs_diff"]) for r in rows) <= 1e-10

    def test_md_check(self, capsys):
        code, out, _ = run(["md-check", "--config", "poisson", "--theta", "1", "--rho", "0.5", "--t-grid", "100,1000,10000"], capsys)
        assert code == 0
        comments, rows = parse_csv(out)
        assert "# verdict rho=0.5,theta=1.0=Decaying" in comments
        assert float(rows[-1]["md_target"]) == 0.5

    def test_tail_rate(self, capsys):
        code, out, _ = run(["tail-rate", "--config", "poisson", "--x", "2", "--t-grid", "100,1000,10000"], capsys)
        assert code == 0
        comments, rows = parse_csv(out)
        assert "# verdict x=2.0=Decaying" in comments
        assert [int(r["threshold"]) for r in rows] == [200, 2000, 20000]

    def test_diagnostics(self, capsys):
        code, out, _ = run(["diagnostics", "--config", "p2", "--t-grid", "100,1000,10000"], capsys)
        assert code == 0
        comments, rows = parse_csv(out)
        assert "# verdict H3=Decaying" in comments
        assert len(rows) == 3

    def test_counterexample(self, capsys, tmp_path):
        psi = tmp_path / "psi.csv"
        code, out, _ = run(["counterexample", "--config", "p3", "--t", "1e4", "--theta=-1,0,1", "--psi-out", str(psi)], capsys)
        assert code == 0
        _, rows = parse_csv(out)
        assert float(rows[0]["right_quotient"]) == pytest.approx(1.0, rel=0.1)
        _, prow = parse_csv(psi.read_text())
        assert [float(r["theta"]) for r in prow] == [-1.0, 0.0, 1.0]

    def test_counterexample_wrong_regime(self, capsys):
        code, _, err = run(["counterexample", "--config", "p2"], capsys)
        assert code == 3 and "RegimeMismatch" in err

    def test_sample_and_mc(self, capsys):
        code, out, _ = run(["sample", "--config", "poisson", "--t", "5", "--n", "4", "--streams", "2"], capsys)
        assert code == 0
        _, rows = parse_csv(out)
        assert [(r["stream_id"], r["index"]) for r in rows] == [("0", "0"), ("0", "1"), ("0", "2"), ("0", "3"), ("1", "0"), ("1", "1"), ("1", "2"), ("1", "3")]
        code, out, _ = run(["mc-report", "--config", "poisson", "--n", "1000", "--streams", "2"], capsys)
        assert code == 0
        comments, rows = parse_csv(out)
        assert len(rows) == 2 * 2 * 3
        assert any(c.startswith("# verdict x=1.2,t=5.0=") for c in comments)

    def test_out_file(self, capsys, tmp_path):
        target = tmp_path / "o.csv"
        code, out, _ = run(["rate", "--config", "p1", "--x", "1", "--out", str(target)], capsys)
        assert code == 0 and out == ""
        assert target.read_text().startswith("# ldps ")


class TestExitCodes:
    def test_missing_config_file(self, capsys, tmp_path):
        code, _, err = run(["pmf", "--config", str(tmp_path / "x.json")], capsys)
        assert code == 2 and "not found" in err

    def test_invalid_config_field(self, capsys, tmp_path):
        path = tmp_path / "c.json"
        path.write_text('{"model": "P1", "gamma": -1}')
        code, _, err = run(["pmf", "--config", str(path)], capsys)
        assert code == 2 and "field gamma" in err

    def test_usage_error(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["rate"])
        assert info.value.code == 2
        with pytest.raises(SystemExit) as info:
            main(["sample", "--config", "p1", "--n", "0"])
        assert info.value.code == 2

    def test_console_script(self):
        proc = subprocess.run(
            [sys.executable, "-m", "ldps.cli", "ml-eval", "--alpha", "1", "--beta", "2", "--gamma", "1", "--u", "1"],
            capture_output=True,
            text=True,
            check=False,
        )
        assert proc.returncode == 0
        assert float(proc.stdout.split()[0]) == pytest.approx(math.e - 1, rel=1e-15)
