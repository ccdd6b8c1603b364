"""Command line interface: outputs, config precedence, byte determinism."""

from pathlib import Path

import pytest

from ou_drift_bench import OuParams, clear_caches, exact_var_fn_z
from ou_drift_bench.cli import CSV_SCHEMA_LINE, main, read_bench_csv
from ou_drift_bench.errors import ConfigError


def _run(argv):
    clear_caches()
    return main(argv)


def _rows(path: Path):
    header, rows = read_bench_csv(path)
    return header, rows


def test_simulate_row_count_and_schema(tmp_path):
    out = tmp_path / "sim"
    assert _run(["simulate", "--n", "4", "--delta", "0.25", "--seed", "5",
                 "--out", str(out)]) == 0
    target = out / "paths.csv"
    text = target.read_text()
    assert text.splitlines()[0] == CSV_SCHEMA_LINE
    header, rows = _rows(target)
    assert header[:2] == ["t", "x"]
    assert len(rows) == 5
    assert float(rows[0]["x"]) == 0.0
    assert float(rows[-1]["t"]) == pytest.approx(1.0, rel=1e-15)


def test_simulate_variant_columns(tmp_path):
    out = tmp_path / "stat"
    assert _run(["simulate", "--n", "3", "--variant", "stationary",
                 "--out", str(out)]) == 0
    header, _ = _rows(out / "paths.csv")
    assert header == ["t", "z"]

    out2 = tmp_path / "coupled"
    assert _run(["simulate", "--n", "3", "--variant", "stationary", "--coupled",
                 "--out", str(out2)]) == 0
    header2, rows2 = _rows(out2 / "paths.csv")
    assert header2 == ["t", "z", "x"]
    # coupled pair shares the stationary path minus the decayed start
    assert float(rows2[0]["x"]) == 0.0


def test_simulate_byte_identical_rerun(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert _run(["simulate", "--n", "16", "--seed", "9", "--out", str(out)]) == 0
    assert (a / "paths.csv").read_bytes() == (b / "paths.csv").read_bytes()


def test_estimate_outputs_records(tmp_path):
    out = tmp_path / "est"
    assert _run(["estimate", "--n", "200", "--delta", "0.05", "--reps", "8",
                 "--seed", "3", "--out", str(out)]) == 0
    header, rows = _rows(out / "estimates.csv")
    assert header == ["estimator", "path", "estimate", "denominator", "normalized_error"]
    # both estimators on each of the 8 paths
    assert len(rows) == 16
    assert {r["estimator"] for r in rows} == {"amce", "amle"}


def test_oracle_values_round_trip(tmp_path):
    out = tmp_path / "orc"
    assert _run(["oracle", "--theta", "3.0", "--n", "64", "--delta", "0.1",
                 "--out", str(out)]) == 0
    header, rows = _rows(out / "oracle.csv")
    assert header == ["quantity", "exact", "asymptotic", "bound"]
    by_name = {r["quantity"]: r for r in rows}
    expected = exact_var_fn_z(OuParams(theta=3.0, delta=0.1, n=64))
    # repr formatting must round-trip the float exactly
    assert float(by_name["var_fn_z"]["exact"]) == expected


def test_oracle_dense_cap_is_reported_not_fatal(tmp_path, capsys):
    out = tmp_path / "orc-big"
    assert _run(["oracle", "--n", "1000", "--delta", "0.05", "--out", str(out)]) == 0
    err = capsys.readouterr().err
    assert "n <= 512" in err
    _, rows = _rows(out / "oracle.csv")
    by_name = {r["quantity"]: r for r in rows}
    assert by_name["k3_fn_z"]["exact"] == ""
    assert by_name["var_fn_z"]["exact"] != ""


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "bench.yaml"
    cfg.write_text("theta_true: 2.0\nn: 64\ndelta: 0.2\n")
    out = tmp_path / "cfg"
    # flag overrides the file value for theta, file wins for delta
    assert _run(["oracle", "--config", str(cfg), "--theta", "3.0", "--n", "32",
                 "--out", str(out)]) == 0
    _, rows = _rows(out / "oracle.csv")
    by_name = {r["quantity"]: r for r in rows}
    expected = exact_var_fn_z(OuParams(theta=3.0, delta=0.2, n=32))
    assert float(by_name["var_fn_z"]["exact"]) == expected


def test_config_unknown_key_exits_2(tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("thetaa: 2.0\n")
    assert _run(["oracle", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "config error" in capsys.readouterr().err


def test_invalid_theta_exits_2(tmp_path, capsys):
    assert _run(["oracle", "--theta", "-1.0", "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert "config error" in err and "theta" in err


def test_unknown_preset_rejected(tmp_path, capsys):
    # the flag is constrained by argparse choices
    with pytest.raises(SystemExit) as exc:
        _run(["rates", "--preset", "no-such", "--out", str(tmp_path / "o")])
    assert exc.value.code == 2
    # a bad schedule name in the config file goes through RunConfig validation
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("schedule: no-such\n")
    assert _run(["rates", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "schedule" in capsys.readouterr().err


def test_read_bench_csv_rejects_foreign_schema(tmp_path):
    alien = tmp_path / "alien.csv"
    alien.write_text("# some other tool v9\na,b\n1,2\n")
    with pytest.raises(ConfigError):
        read_bench_csv(alien)


def test_verify_passes_at_moderate_cell(tmp_path, capsys):
    out = tmp_path / "ver"
    code = _run(["verify", "--reps", "2000", "--n", "256", "--delta", "0.05",
                 "--out", str(out)])
    captured = capsys.readouterr()
    assert code == 0, captured.out + captured.err
    assert "VERIFY PASS" in captured.out
    assert (out / "verify.md").exists()
    # the known first-order rows are reported, not gated
    assert "DISCREPANT" in captured.out


def test_rates_coupling_sweep_outputs(tmp_path):
    out = tmp_path / "sweep"
    assert _run(["rates", "--preset", "coupling-sweep", "--reps", "300",
                 "--estimator", "amce", "--out", str(out)]) == 0
    header, rows = _rows(out / "cells.csv")
    assert len(rows) == 3
    for col in ("estimator", "n", "delta", "T", "w1", "w1_se", "kolmogorov"):
        assert col in header
    _, crows = _rows(out / "coupling.csv")
    assert len(crows) == 3
    assert (out / "report.md").exists()
    # no rate fit on a non-CLT schedule
    _, rrows = _rows(out / "rates.csv")
    assert rrows == []


def test_rates_clt_preset_emits_fits_and_plotdata(tmp_path):
    out = tmp_path / "clt"
    assert _run(["rates", "--preset", "amce-gamma-half", "--reps", "120",
                 "--estimator", "amce", "--out", str(out)]) == 0
    _, rrows = _rows(out / "rates.csv")
    assert len(rrows) == 2
    kinds = {r["predictor"] for r in rrows}
    assert "delta^2 + (n delta)^(-1/2)" in kinds
    for r in rrows:
        assert float(r["slope"]) > 0.0
    header, prows = _rows(out / "plotdata.csv")
    assert len(prows) == 7
    assert header == ["estimator", "n", "delta", "T", "bound_term_1",
                      "bound_term_2", "w1", "w1_se", "kolmogorov"]
    report = (out / "report.md").read_text()
    assert "w1" in report.lower()


def test_rates_byte_identical_across_reruns_and_workers(tmp_path, monkeypatch):
    def run_into(out, threads):
        monkeypatch.setenv("OU_BENCH_THREADS", str(threads))
        assert _run(["rates", "--preset", "coupling-sweep", "--reps", "300",
                     "--estimator", "amle", "--out", str(out)]) == 0

    a, b = tmp_path / "w1", tmp_path / "wmax"
    run_into(a, 1)
    run_into(b, 8)
    for name in ("cells.csv", "rates.csv", "plotdata.csv", "coupling.csv", "report.md"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
