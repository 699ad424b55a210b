import json

import pytest

from ssfourier.cli import (
    EXIT_BUDGET,
    EXIT_DOMAIN,
    EXIT_OK,
    EXIT_USAGE,
    parse_complex,
    run,
)


def run_cli(capsys, *argv):
    code = run(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestParsing:
    def test_complex_forms(self):
        assert parse_complex("0.5+0.5i") == 0.5 + 0.5j
        assert parse_complex("-0.3i") == -0.3j
        assert parse_complex("1") == 1.0
        assert parse_complex("0.7-0.2i") == 0.7 - 0.2j


class TestBounds:
    def test_delta_complex_json(self, capsys):
        code, out, err = run_cli(
            capsys, "bounds", "--lambda", "0.5+0.5i", "--p", "0.5,0.5",
            "--epsilon", "0.05",
        )
        assert code == EXIT_OK
        doc = json.loads(out)
        assert doc["branching"] == 4
        assert doc["regime"] == "complex"
        meta = json.loads(err.strip().splitlines()[-1])
        assert meta["tool"] == "ssfourier" and "config_hash" in meta

    def test_sweep_csv(self, capsys):
        code, out, _ = run_cli(
            capsys, "bounds", "--lambda", "0.5+0.5i", "--p", "0.5,0.5",
            "--sweep", "1e-4:1e-2:5",
        )
        assert code == EXIT_OK
        lines = out.strip().splitlines()
        assert lines[0] == "lambda_re,lambda_im,epsilon,delta,valid"
        assert len(lines) == 6

    def test_regime_error_exit_code(self, capsys):
        code, out, _ = run_cli(
            capsys, "bounds", "--lambda", "0.5", "--p", "0.5,0.5",
            "--regime", "complex", "--epsilon", "0.01",
        )
        assert code == EXIT_DOMAIN
        assert "error" in json.loads(out)


class TestEval:
    def test_xi_zero(self, capsys):
        code, out, _ = run_cli(
            capsys, "eval", "--lambda", "0.5+0.5i", "--xi", "0",
        )
        assert code == EXIT_OK
        doc = json.loads(out)
        assert doc["results"][0]["mu_hat"] == [1.0, 0.0]


class TestEK:
    def test_verify_clean(self, capsys):
        code, out, _ = run_cli(
            capsys, "ek", "verify", "--lambda", "0.5+0.5i",
            "--samples", "2000", "--N", "12", "--seed", "4",
        )
        assert code == EXIT_OK
        assert json.loads(out)["violations"] == 0

    def test_trace(self, capsys):
        code, out, _ = run_cli(
            capsys, "ek", "trace", "--lambda", "0.5+0.5i",
            "--t", "0.3+0.4i", "--N", "5",
        )
        assert code == EXIT_OK
        assert json.loads(out)["r"] == [0, 1, 1, 0, -1]

    def test_enumerate_budget_exit(self, capsys):
        code, out, _ = run_cli(
            capsys, "ek", "enumerate", "--lambda", "0.5+0.5i",
            "--eps-tilde", "0.1", "--N", "20",
        )
        assert code == EXIT_BUDGET
        assert json.loads(out)["error"]["kind"] == "budget"

    def test_missing_subcommand_usage(self, capsys):
        code, _, err = run_cli(capsys, "ek", "--lambda", "1")
        assert code == EXIT_USAGE


class TestUsageErrors:
    def test_unknown_flag(self, capsys):
        code, _, _ = run_cli(capsys, "bounds", "--nonsense", "1")
        assert code == EXIT_USAGE

    def test_no_subcommand(self, capsys):
        assert run_cli(capsys)[0] == EXIT_USAGE

    def test_bad_complex(self, capsys):
        code, _, _ = run_cli(capsys, "eval", "--lambda", "zzz", "--xi", "0")
        assert code == EXIT_USAGE


class TestOutputsAndConfig:
    def test_out_file_and_metadata_separated(self, capsys, tmp_path):
        out_path = tmp_path / "bound.json"
        code, out, err = run_cli(
            capsys, "--out", str(out_path), "bounds", "--lambda", "0.5+0.5i",
            "--p", "0.5,0.5", "--epsilon", "0.01",
        )
        assert code == EXIT_OK and out == ""
        doc = json.loads(out_path.read_text())
        assert doc["branching"] == 4
        assert "wall_time_s" in json.loads(err.strip().splitlines()[-1])

    def test_config_file_defaults(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"epsilon": 0.015}))
        code, out, _ = run_cli(
            capsys, "--config", str(cfg), "bounds", "--lambda", "0.5+0.5i",
            "--p", "0.5,0.5",
        )
        assert code == EXIT_OK
        assert json.loads(out)["epsilon"] == 0.015

    def test_scan_formats(self, capsys, tmp_path):
        for fmt, checker in (
            ("csv", lambda b: b.startswith(b"i,j,max_abs_muhat")),
            ("bin", lambda b: b.startswith(b"SSFGRID1")),
        ):
            path = tmp_path / f"scan.{fmt}"
            code, _, _ = run_cli(
                capsys, "--format", fmt, "--out", str(path), "scan",
                "--lambda", "0.5+0.5i", "--T", "2", "--subgrid-k", "2",
            )
            assert code == EXIT_OK
            assert checker(path.read_bytes())

    def test_bernoulli(self, capsys):
        code, out, _ = run_cli(
            capsys, "bernoulli", "--lambda", "0.92+0.1i",
        )
        doc = json.loads(out)
        assert code == EXIT_OK and doc["dim2_lower"] <= 2.0

    def test_dim_subcommand(self, capsys):
        code, out, _ = run_cli(
            capsys, "dim", "--lambda", "0.5", "--digits", "0,1,i",
            "--depth", "8", "--n-min", "1", "--n-max", "6",
        )
        assert code == EXIT_OK
        doc = json.loads(out)
        assert abs(doc["dim_q"]["estimate"] - 1.585) < 0.1

    def test_dim_from_measure_csv(self, capsys, tmp_path):
        from ssfourier import IFSDescriptor, finite_approximation, measure_to_csv

        ifs = IFSDescriptor(0.5, (0.0, 1.0, 1j), (1 / 3, 1 / 3, 1 / 3))
        path = tmp_path / "mu.csv"
        path.write_text(measure_to_csv(finite_approximation(ifs, 8)))
        code, out, _ = run_cli(
            capsys, "dim", "--measure-csv", str(path),
            "--n-min", "1", "--n-max", "6",
        )
        assert code == EXIT_OK
        assert abs(json.loads(out)["dim_q"]["estimate"] - 1.585) < 0.1


class TestWorkerDeterminism:
    def test_scan_bytes_identical(self, capsys, tmp_path):
        paths = []
        for workers in (1, 8):
            path = tmp_path / f"scan_w{workers}.csv"
            code, _, _ = run_cli(
                capsys, "--format", "csv", "--out", str(path),
                "--workers", str(workers), "scan",
                "--lambda", "0.5+0.5i", "--T", "4",
            )
            assert code == EXIT_OK
            paths.append(path.read_bytes())
        assert paths[0] == paths[1]
