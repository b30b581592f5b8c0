"""Command-line interface: parsing, exit codes, CSV/JSON contracts."""

import json
import math

import pytest

from simplexleb.cli import main
from simplexleb.core import DilationVector
from simplexleb.norms import l1_norm


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestNormCommand:
    def test_matches_library(self, capsys):
        code, out, _ = run(capsys, "norm", "--kernel", "D", "--n", "2,3",
                           "--tol", "1e-4")
        assert code == 0
        doc = json.loads(out)
        want = l1_norm("D", DilationVector((2, 3)), tol=1e-4)
        assert doc["value"] == pytest.approx(want.value, rel=1e-12)
        assert doc["normalized"] == pytest.approx(want.normalized, rel=1e-12)

    def test_zero_kernel(self, capsys):
        code, out, _ = run(capsys, "norm", "--kernel", "F", "--n", "2,4")
        assert code == 0
        assert json.loads(out)["value"] == 0.0

    def test_malformed_tuple_exits_1(self, capsys):
        code, _, err = run(capsys, "norm", "--kernel", "D", "--n", "2,x")
        assert code == 1
        assert "malformed" in err

    def test_missing_n_exits_1(self, capsys):
        code, _, _ = run(capsys, "norm", "--kernel", "D")
        assert code == 1

    def test_nonconvergence_exits_2_with_value(self, capsys, tmp_path):
        cfgfile = tmp_path / "run.cfg"
        cfgfile.write_text("tol = 1e-16\n")
        code, out, _ = run(capsys, "norm", "--kernel", "D", "--n", "5",
                           "--config", str(cfgfile))
        assert code == 2
        doc = json.loads(out)
        assert doc["converged"] is False
        assert doc["value"] > 0

    def test_output_embeds_config_and_conventions(self, capsys):
        _, out, _ = run(capsys, "norm", "--kernel", "D", "--n", "2,3")
        doc = json.loads(out)
        assert doc["config"]["n"] == "2,3"
        assert doc["conventions"]["normalization"] == "plain"
        assert doc["conventions"]["zero_dim_norm"] == "modulus"


class TestVerifyCommand:
    def test_passes_on_exact_identity(self, capsys):
        code, out, _ = run(capsys, "verify", "--n", "2,3", "--points", "50",
                           "--seed", "7")
        assert code == 0
        assert json.loads(out)["passed"] is True

    def test_3d_noninteger(self, capsys):
        code, out, _ = run(capsys, "verify", "--n", "5,9.5,23",
                           "--points", "20")
        assert code == 0

    def test_1d_rejected(self, capsys):
        code, _, err = run(capsys, "verify", "--n", "2")
        assert code == 1
        assert "d >= 2" in err


class TestSweepCommand:
    def test_single_point_matches_norm(self, capsys):
        code, out, _ = run(capsys, "sweep", "--n1", "list(16)",
                           "--n2", "list(64)", "--t-nodes", "8")
        assert code == 0
        data_rows = [l for l in out.splitlines()
                     if l and not l.startswith("#")]
        header, row = data_rows[0].split(","), data_rows[1].split(",")
        cells = dict(zip(header, row))
        want = l1_norm("D", DilationVector((16, 64)))
        assert float(cells["norm_D"]) == pytest.approx(want.value, rel=1e-12)

    def test_envelope_column(self, capsys):
        _, out, _ = run(capsys, "sweep", "--n1", "list(16)",
                        "--n2", "list(64)", "--t-nodes", "8")
        data_rows = [l for l in out.splitlines()
                     if l and not l.startswith("#")]
        cells = dict(zip(data_rows[0].split(","), data_rows[1].split(",")))
        want = math.log(math.log(16.0)) * math.log(64.0)
        assert float(cells["envelope"]) == pytest.approx(want, rel=1e-12)

    def test_expression_axis(self, capsys):
        code, out, _ = run(capsys, "sweep", "--n1", "list(4,5)",
                           "--n2", "pow(n1,2)", "--t-nodes", "8")
        assert code == 0
        rows = [l for l in out.splitlines() if l and not l.startswith("#")]
        assert rows[1].split(",")[1:3] == ["4", "16"]
        assert rows[2].split(",")[1:3] == ["5", "25"]

    def test_geom_axis_count(self, capsys):
        code, out, _ = run(capsys, "sweep", "--n1", "geom(4,8,5)",
                           "--n2", "pow(n1,2)", "--t-nodes", "4")
        assert code == 0
        rows = [l for l in out.splitlines() if l and not l.startswith("#")]
        assert len(rows) == 6  # header + 5 points

    def test_descending_rows_yield_nan_predictors(self, capsys):
        code, out, _ = run(capsys, "sweep", "--n1", "list(64)",
                           "--n2", "list(17)", "--t-nodes", "4")
        assert code == 0
        rows = [l for l in out.splitlines() if l and not l.startswith("#")]
        cells = dict(zip(rows[0].split(","), rows[1].split(",")))
        assert math.isnan(float(cells["main_term"]))
        assert float(cells["norm_D"]) > 0

    def test_grammar_error_exits_1(self, capsys):
        code, _, err = run(capsys, "sweep", "--n1", "geom(16,)")
        assert code == 1

    def test_mismatched_lengths_exit_1(self, capsys):
        code, _, err = run(capsys, "sweep", "--n1", "list(4,5)",
                           "--n2", "list(9)")
        assert code == 1

    def test_byte_identical_outputs(self, tmp_path):
        args = ["sweep", "--n1", "list(4,5)", "--n2", "pow(n1,2)",
                "--t-nodes", "8", "--output", str(tmp_path / "out.csv")]
        main(args)
        first = (tmp_path / "out.csv").read_bytes()
        main(args)
        assert (tmp_path / "out.csv").read_bytes() == first

    def test_seconds_zero_without_timings(self, capsys):
        _, out, _ = run(capsys, "sweep", "--n1", "list(4)",
                        "--n2", "list(9)", "--t-nodes", "4")
        rows = [l for l in out.splitlines() if l and not l.startswith("#")]
        assert rows[1].split(",")[-1] == "0"


class TestIrrationalCommand:
    def test_hand_value_row(self, capsys):
        code, out, _ = run(capsys, "irrational", "--alpha", "rational:1/2",
                           "--n", "4", "--tol", "1e-6", "--rho", "512")
        assert code == 0
        rows = [l for l in out.splitlines() if l and not l.startswith("#")]
        assert rows[0] == "n,I_n,ratio,is_convergent_q"
        n, value, _, _ = rows[1].split(",")
        assert n == "4"
        assert float(value) == pytest.approx(4.0, abs=1e-4)

    def test_integer_alpha_all_zero(self, capsys):
        code, out, _ = run(capsys, "irrational", "--alpha", "rational:3/1",
                           "--n", "8,16")
        assert code == 0
        rows = [l for l in out.splitlines() if l and not l.startswith("#")]
        assert all(float(r.split(",")[1]) == 0.0 for r in rows[1:])

    def test_golden_monotone_grid(self, capsys):
        code, out, err = run(capsys, "irrational", "--alpha", "golden",
                             "--nmax", "64")
        assert code == 0
        rows = [l for l in out.splitlines() if l and not l.startswith("#")]
        ns = [int(r.split(",")[0]) for r in rows[1:]]
        assert ns == sorted(ns)
        summary = json.loads(err)
        assert summary["running_min_ratio"] > 0

    def test_unparsable_alpha_exits_1(self, capsys):
        code, _, err = run(capsys, "irrational", "--alpha", "sqrt2")
        assert code == 1


class TestConfigFile:
    def test_flags_override_file(self, capsys, tmp_path):
        cfgfile = tmp_path / "run.cfg"
        cfgfile.write_text("n = 2,4\nkernel = F\n# comment line\n")
        _, out, _ = run(capsys, "norm", "--config", str(cfgfile),
                        "--n", "2,3")
        doc = json.loads(out)
        assert doc["kernel"] == "F"      # from file
        assert doc["n"] == [2.0, 3.0]    # flag wins

    def test_bad_config_line_exits_1(self, capsys, tmp_path):
        cfgfile = tmp_path / "run.cfg"
        cfgfile.write_text("tol 1e-4\n")
        code, _, _ = run(capsys, "norm", "--n", "2,3",
                         "--config", str(cfgfile))
        assert code == 1

    def test_unknown_key_exits_1(self, capsys, tmp_path):
        cfgfile = tmp_path / "run.cfg"
        cfgfile.write_text("wibble = 3\n")
        code, _, _ = run(capsys, "norm", "--n", "2,3",
                         "--config", str(cfgfile))
        assert code == 1


def test_usage_error_exits_1(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["norm", "--bogus"])
    assert exc.value.code == 1
