import csv

import pytest

from coopisac.cli import main

TUPLES = """# sign_convention: paper
# d_B,v_B,theta_B_deg,d_U,v_U
64.54,-9.20,22.60,105.43,6.13
70.78,17.45,12.1,117.59,-11.46
95.77,7.90,18.50,126.08,7.90
"""

SMALL_SCENE = """
scenario:
  targets:
    - {position: [59.92, 25.06], velocity: [-15.0, 12.0]}
  n_scatterers: 20
processing:
  snr_bs_db: 20
  snr_ue_db: 20
"""


@pytest.fixture
def tuples(tmp_path):
    p = tmp_path / "tuples.csv"
    p.write_text(TUPLES)
    return p


def test_fuse_writes_records(tuples, tmp_path, capsys):
    assert main(["fuse", "--tuples", str(tuples), "--out", str(tmp_path / "o")]) == 0
    rows = list(csv.DictReader(open(tmp_path / "o" / "fused.csv")))
    assert len(rows) == 3
    assert abs(float(rows[0]["x"]) - 59.92) < 0.5
    assert len(capsys.readouterr().out.splitlines()) == 3


def test_fuse_sign_flag_overrides_directive(tuples, tmp_path):
    main(["fuse", "--tuples", str(tuples), "--out", str(tmp_path / "p")])
    main(["fuse", "--tuples", str(tuples), "--sign", "internal", "--out", str(tmp_path / "i")])
    p = list(csv.DictReader(open(tmp_path / "p" / "fused.csv")))
    i = list(csv.DictReader(open(tmp_path / "i" / "fused.csv")))
    assert p[0]["vx"] != i[0]["vx"]


def test_fuse_single_tuple(tmp_path):
    p = tmp_path / "one.csv"
    p.write_text("64.54,-9.20,22.60,105.43,-6.13\n")
    assert main(["fuse", "--tuples", str(p), "--ue", "80.5588,59.7814", "--out", str(tmp_path)]) == 0
    assert len((tmp_path / "fused.csv").read_text().splitlines()) == 2


def test_fuse_rejects_short_bistatic_range(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    p.write_text("# ok\n64.54,-9.20,22.60,50.0,6.13\n")
    assert main(["fuse", "--tuples", str(p)]) == 1
    assert "bad.csv:2" in capsys.readouterr().err


def test_fuse_malformed_names_line(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    p.write_text("64.54,-9.20,22.60,105.43,6.13\n1,2\n")
    assert main(["fuse", "--tuples", str(p)]) == 1
    assert "bad.csv:2" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    [], ["simulate"], ["fuse", "--tuples", "x", "--ue", "1"], ["fuse", "--tuples", "x", "--sign", "up"],
    ["montecarlo", "--config", "c", "--runs", "many"],
])
def test_usage_errors_exit_1(argv):
    with pytest.raises(SystemExit) as err:
        main(argv)
    assert err.value.code == 1


def test_missing_config_exit_1(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "none.yaml")]) == 1
    assert main(["montecarlo", "--config", str(tmp_path / "none.yaml"), "--runs", "1"]) == 1


def test_montecarlo_zero_runs_exit_1(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(SMALL_SCENE)
    assert main(["montecarlo", "--config", str(cfg), "--runs", "0"]) == 1


def test_runtime_failure_exit_2(tmp_path, monkeypatch):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(SMALL_SCENE)

    def boom(*a, **k):
        raise RuntimeError("solver exploded")

    monkeypatch.setattr("coopisac.cli.run_pipeline", boom)
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_simulate_deterministic(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(SMALL_SCENE)
    for d in ("a", "b"):
        assert main(["simulate", "--config", str(cfg), "--seed", "4", "--out", str(tmp_path / d),
                     "--dump-maps"]) == 0
    for name in ("estimates.csv", "metrics.csv", "map_ue.pgm"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_simulate_dump_cubes(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(SMALL_SCENE)
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path), "--dump-cubes"]) == 0
    assert (tmp_path / "bs_cube.bin").stat().st_size == 16 + 16 * 617 * 512 * 8
