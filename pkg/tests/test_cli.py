import json
import os

import pytest

from pdssdc import cli, fixtures
from pdssdc.construction import construct_dostbc, construct_rspdssdc
from pdssdc.design import CodeSpec
from pdssdc.simulator import SimConfig, curve_csv, run_ser
from pdssdc.verification import SignalSet, verify_all


def run(argv, capsys):
    try:
        code = cli.main(argv)
    except SystemExit as exc:
        code = exc.code
    out = capsys.readouterr()
    return code, out.out, out.err


def test_construct_rate_one_code(tmp_path, capsys):
    path = tmp_path / "x.json"
    code, out, _ = run(["construct", "--n", "4", "--k", "4", "--out", str(path)], capsys)
    assert code == 0
    assert "rate=1 bound=1 achieved=yes" in out
    spec = CodeSpec.from_json(path.read_text())
    assert spec.design() == fixtures.design(fixtures.X_4_4)
    assert path.read_text() == construct_rspdssdc(4, 4)[1].to_json()


def test_construct_dostbc(tmp_path, capsys):
    path = tmp_path / "d.json"
    code, out, _ = run(["construct", "--n", "4", "--k", "4", "--family", "dostbc", "--out", str(path)], capsys)
    assert code == 0 and "rate=1/2" in out
    assert CodeSpec.from_json(path.read_text()) == construct_dostbc(4, 4)[1]


def test_construct_rejects_small_N(tmp_path, capsys):
    code, _, err = run(["construct", "--n", "2", "--k", "4", "--family", "rs_pdssdc", "--out", str(tmp_path / "z")],
                       capsys)
    assert code == 2 and "use dostbc for N < 4" in err
    assert not list(tmp_path.iterdir())


def test_default_output_directory(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv(cli.OUT_DIR_ENV, str(tmp_path))
    assert run(["construct", "--n", "4", "--k", "6"], capsys)[0] == 0
    assert (tmp_path / "rs_pdssdc_N4_K6.json").exists()


def test_unknown_flag_is_usage_error(capsys):
    code, _, err = run(["construct", "--n", "4", "--k", "4", "--bogus"], capsys)
    assert code == 2 and "usage" in err


def test_verify_generated_code(tmp_path, capsys):
    spec_path = tmp_path / "x46.json"
    spec_path.write_text(construct_rspdssdc(4, 6)[1].to_json())
    report_path = tmp_path / "r.json"
    code, out, _ = run(["verify", str(spec_path), "--json", str(report_path)] +
                       [f"--require={r}" for r in cli.REQUIREMENTS], capsys)
    assert code == 0 and "FAIL" not in out
    report = json.loads(report_path.read_text())
    direct = verify_all(construct_rspdssdc(4, 6)[1])
    for key, value in direct.items():
        assert report[key] == (json.loads(json.dumps(value, default=float)))


def test_verify_two_relay_fixture(tmp_path, capsys):
    path = tmp_path / "dssdc.json"
    path.write_text(fixtures.dssdc_spec().to_json())
    code, out, _ = run(["verify", str(path), "--require", "ssd"], capsys)
    assert code == 0
    code, out, _ = run(["verify", str(path), "--require", "pdssdc"], capsys)
    assert code == 1 and "required checks failed: pdssdc" in out


def test_verify_corrupted_code(tmp_path, capsys):
    spec = construct_rspdssdc(4, 4)[1]
    d = spec.to_dict()
    d["B"][1][0][1] = "-1"
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(d))
    code, out, _ = run(["verify", str(path), "--require", "lemma3"], capsys)
    assert code == 1 and "FAIL  covariance-weighted orthogonality" in out


def test_verify_malformed_json(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "N": 4,\n  oops\n}')
    code, _, err = run(["verify", str(path)], capsys)
    assert code == 2 and "line 3" in err


def test_rate_bound_and_table(capsys):
    assert run(["rate-bound", "--n", "5", "--k", "5"], capsys)[1].strip() == "10/17"
    code, out, _ = run(["rate-table", "--n", "4,5", "--k", "4,5,7"], capsys)
    rows = out.splitlines()
    assert rows[0] == "N,K,T_rspdssdc,T_dostbc,rate_rspdssdc,rate_dostbc,bound,achieved"
    assert "4,4,4,8,1,1/2,1,yes" in rows
    assert "4,7,8,16,1/2,1/4,1/2,yes" in rows
    assert "5,5,13,15,5/13,1/3,10/17,no" in rows
    assert cli.rate_table_csv([4, 5], [4, 5, 7]) == out


def test_simulate_matches_library_and_is_repeatable(tmp_path, capsys):
    args = ["simulate", "--trials", "300", "--snr", "0:10:5", "--seed", "4", "--label", "demo"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(args + ["--out", str(a), "--plot", str(tmp_path / "p.png"), "--plot-data", str(tmp_path / "p.dat")],
               capsys)[0] == 0
    assert run(args + ["--out", str(b), "--workers", "2"], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    cfg = SimConfig(construct_rspdssdc(4, 4)[1], SignalSet.qpsk(22.5), (0.0, 5.0, 10.0), 300, 4, label="demo")
    assert a.read_text() == curve_csv(run_ser(cfg))
    assert (tmp_path / "p.png").read_bytes()[:4] == b"\x89PNG"
    assert (tmp_path / "p.dat").read_text().startswith("# demo")


def test_simulate_usage_errors(tmp_path, capsys):
    assert run(["simulate", "--trials", "0"], capsys)[0] == 2
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"trials": 0}))
    assert run(["simulate", "--config", str(cfg)], capsys)[0] == 2
    cfg.write_text(json.dumps({"nonsense": 1}))
    assert run(["simulate", "--config", str(cfg)], capsys)[0] == 2


def test_simulate_config_file(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"family": "dostbc", "constellation": "16qam", "trials": 100,
                               "snr_grid_db": [5, 15], "relay_factor": 2.0}))
    out = tmp_path / "s.csv"
    code, text, _ = run(["simulate", "--config", str(cfg), "--out", str(out)], capsys)
    assert code == 0 and "over the relay phase" in text
    assert len(out.read_text().splitlines()) == 4


def test_simulate_refuses_per_symbol_on_coupled_code(tmp_path, capsys):
    from pdssdc.design import spec_from_design
    from pdssdc.precoding import identity_precoders

    spec = spec_from_design(fixtures.design(fixtures.renumbered(fixtures.DOSTBC_2_8_MISSING_SIGN)), identity_precoders(2))
    path = tmp_path / "missing_sign.json"
    path.write_text(spec.to_json())
    out = tmp_path / "s.csv"
    code, _, err = run(["simulate", "--spec", str(path), "--constellation", "qpsk", "--trials", "10",
                        "--out", str(out)], capsys)
    assert code == 2 and "couples" in err
    assert not out.exists()


def test_fig3_small_run(tmp_path, capsys):
    out = tmp_path / "fig3.csv"
    code, text, _ = run(["simulate", "--fig3", "--trials", "500", "--snr", "0:12:4", "--out", str(out)], capsys)
    assert code == 0 and "matched-rate slopes" in text
    for label in ("rs_pdssdc_rotated_qpsk", "dostbc_16qam", "rs_pdssdc_qpsk"):
        assert (tmp_path / f"fig3_{label}.csv").exists()


def test_fixtures_are_deterministic(tmp_path, capsys):
    first, second = tmp_path / "a", tmp_path / "b"
    assert run(["fixtures", "--out-dir", str(first)], capsys)[0] == 0
    assert run(["fixtures", "--out-dir", str(second)], capsys)[0] == 0
    names = sorted(p.name for p in first.iterdir())
    assert "pciod.json" in names and "dssdc_2x2.json" in names
    for name in names:
        assert (first / name).read_bytes() == (second / name).read_bytes()
    pciod = CodeSpec.from_json((first / "pciod.json").read_text())
    assert pciod.P.to_strings() == fixtures.PCIOD_P


def test_atomic_write_leaves_no_temp_files(tmp_path):
    target = tmp_path / "f.txt"
    cli.write_atomic(target, "hello")
    assert target.read_text() == "hello"
    assert os.listdir(tmp_path) == ["f.txt"]
