import io
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from polariton_bh.cli import main
from polariton_bh.experiment import (
    EXIT_ERROR,
    EXIT_OK,
    EXIT_VALIDITY,
    ConfigError,
    parse_config,
    parse_graph,
    params_report,
    read_csv_table,
    run_experiment,
)
from polariton_bh.polariton_params import effective_parameters, toroidal_2005


def write(tmp_path, text, name="exp.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestConfig:
    def test_empty_config_is_preset(self):
        cfg = parse_config("", "params")
        assert cfg.physical == toroidal_2005()
        assert cfg.omega_l_end == 1.1e12 and cfg.ramp_duration == 1e-6
        assert cfg.initial == (1, 1, 1) and cfg.n_max == 3

    def test_override_and_comments(self):
        cfg = parse_config("# comment\ndelta_cap = 2e10  # flipped\n\nsamples = 5\n", "ramp")
        assert cfg.physical.delta_cap == 2e10 and cfg.samples == 5
        assert effective_parameters(cfg.physical).kappa < 0

    def test_unknown_key_reports_line(self):
        with pytest.raises(ConfigError, match="line 2: unknown key 'bogus'"):
            parse_config("g13 = 1e9\nbogus = 3\n", "params")

    def test_bad_value_reports_line(self):
        with pytest.raises(ConfigError, match="line 3"):
            parse_config("\n\nn_atoms = 2.5\n", "params")

    def test_duplicate_key(self):
        with pytest.raises(ConfigError, match="already set on line 1"):
            parse_config("g13 = 1e9\ng13 = 2e9\n", "params")

    def test_missing_line_syntax(self):
        with pytest.raises(ConfigError, match="line 1"):
            parse_config("g13 1e9\n", "params")

    def test_none_preset_requires_keys(self):
        with pytest.raises(ConfigError, match="missing required"):
            parse_config("g13 = 1e9\n", "params", preset="none")

    def test_pbg_preset_loss_ratio(self):
        cfg = parse_config("omega_l_start = 1e8\n", "params", preset="pbg")
        assert effective_parameters(cfg.physical).kappa_over_gamma == pytest.approx(5.2, rel=1e-3)

    def test_initial_exceeds_cap(self):
        with pytest.raises(ConfigError, match="n_max"):
            parse_config("initial = 2 2 2\n", "ramp")

    def test_unknown_kind(self):
        with pytest.raises(ConfigError):
            parse_config("", "fly")


class TestGraphSpec:
    def test_cycle(self):
        assert parse_graph("cycle:3").edges == ((0, 1), (1, 2), (2, 0))

    def test_chain(self):
        assert parse_graph("chain:3").edges == ((0, 1), (1, 2))

    def test_explicit(self):
        g = parse_graph("4: 0-1, 1-2, 2-3, 3-0, 0-2")
        assert g.site_count == 4 and len(g.edges) == 5

    def test_bad(self):
        with pytest.raises(ValueError):
            parse_graph("triangle")


def test_feasibility_ratio_toroidal():
    cfg = parse_config("omega_l_start = 1e8\n", "params")
    assert effective_parameters(cfg.physical).kappa_over_gamma >= 1e3


def test_params_report_flags_threshold():
    ok = params_report(parse_config("", "params"))
    assert ok["start"]["validity"]["passed"] and ok["end"]["validity"]["passed"]
    bad = params_report(parse_config("n_p = 3\n", "params"))
    assert bad["start"]["validity"]["level"] == "marginal"
    assert not bad["start"]["validity"]["passed"]
    loose = params_report(parse_config("n_p = 3\nvalidity_threshold = 0.5\n", "params"))
    assert loose["start"]["validity"]["passed"]


class TestRampOutput:
    def test_single_sample_rejected(self):
        with pytest.raises(ConfigError):
            parse_config("samples = 1\n", "ramp")

    def test_two_samples_csv(self, tmp_path):
        out = tmp_path / "r.csv"
        cfg = parse_config(f"samples = 2\nramp_duration = 1e-8\noutput = {out}\n", "ramp")
        assert run_experiment(cfg) == EXIT_OK
        lines = out.read_text().splitlines()
        assert len(lines) == 3
        assert lines[0] == "t,omega_l,kappa,j,gamma,n_1,n_2,n_3,f_1,f_2,f_3,trace,purity"

    def test_default_rows_and_roundtrip(self, tmp_path):
        out = tmp_path / "ramp.csv"
        assert main(["ramp", "--out", str(out)]) == EXIT_OK
        header, data = read_csv_table(str(out))
        assert data.shape == (200, 13)
        n1 = data[:, header.index("n_1")]
        f1 = data[:, header.index("f_1")]
        assert np.all((n1 >= 0.9) & (n1 <= 1.02))
        assert f1[-1] > 0.5
        # repr floats survive a write/read cycle exactly
        again = tmp_path / "again.csv"
        from polariton_bh.experiment import write_table

        write_table(header, data, "csv", str(again))
        assert again.read_text() == out.read_text()

    def test_reruns_are_byte_identical(self, tmp_path):
        cfg = write(tmp_path, "samples = 11\nramp_duration = 1e-7\n")
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["ramp", "--config", cfg, "--out", str(a)]) == EXIT_OK
        assert main(["ramp", "--config", cfg, "--out", str(b)]) == EXIT_OK
        assert a.read_bytes() == b.read_bytes()

    def test_json(self, tmp_path):
        out = tmp_path / "r.json"
        cfg = write(tmp_path, "samples = 3\nramp_duration = 1e-8\n")
        assert main(["ramp", "--config", cfg, "--out", str(out), "--format", "json"]) == EXIT_OK
        records = json.loads(out.read_text())
        assert len(records) == 3 and records[0]["t"] == 0.0 and records[0]["n_1"] == 1.0


class TestGroundScan:
    def test_columns_and_monotone(self, tmp_path):
        out = tmp_path / "scan.csv"
        cfg = write(tmp_path, "scan_points = 9\n")
        assert main(["ground-scan", "--config", cfg, "--out", str(out)]) == EXIT_OK
        header, data = read_csv_table(str(out))
        assert header == ["j_over_kappa", "f_1", "n_1"]
        assert data.shape == (9, 3)
        assert np.all(np.diff(data[:, 1]) > 0)
        np.testing.assert_allclose(data[:, 2], 1.0, atol=1e-12)

    def test_thread_count_does_not_change_output(self, tmp_path):
        cfg = write(tmp_path, "scan_points = 7\n")
        outs = []
        for threads in ("1", "4"):
            out = tmp_path / f"s{threads}.csv"
            env = dict(os.environ, POLARITON_BH_THREADS=threads)
            subprocess.run([sys.executable, "-m", "polariton_bh", "ground-scan", "--config", cfg,
                            "--out", str(out)], env=env, check=True)
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]


class TestExitCodes:
    def test_params_ok(self):
        buf = io.StringIO()
        assert run_experiment(parse_config("", "params"), stream=buf) == EXIT_OK
        assert "kappa_over_gamma" in buf.getvalue()

    def test_strict_validity(self, tmp_path, capsys):
        cfg = write(tmp_path, "delta_small = 0\n")
        assert main(["params", "--config", cfg]) == EXIT_OK
        assert "pair_resonance" in capsys.readouterr().err
        assert main(["params", "--config", cfg, "--strict-validity"]) == EXIT_VALIDITY

    def test_config_error(self, tmp_path, capsys):
        cfg = write(tmp_path, "nope = 1\n")
        assert main(["params", "--config", cfg]) == EXIT_ERROR
        assert "line 1" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["params", "--config", str(tmp_path / "absent.cfg")]) == EXIT_ERROR

    def test_validate_micro(self, tmp_path):
        out = tmp_path / "micro.json"
        assert main(["validate-micro", "--out", str(out)]) == EXIT_OK
        report = json.loads(out.read_text())
        assert report["relative_error"] < 0.1
        assert report["one_excitation_max_deviation"] < 1e-10

    def test_invalid_regime_is_an_error(self, tmp_path):
        cfg = write(tmp_path, "g24 = 3e10\n")
        assert main(["validate-micro", "--config", cfg]) == EXIT_ERROR
