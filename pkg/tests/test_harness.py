import numpy as np
import pytest

from coopisac import io as fio
from coopisac.harness import (
    ESTIMATES_HEADER, SUMMARY_HEADER, build_scenario, run_montecarlo, run_pipeline, run_seed, write_run,
)
from coopisac.ofdm import OfdmConfig


@pytest.fixture(scope="module")
def bench_run():
    cfg = OfdmConfig()
    sc = build_scenario({"preset": "benchmark", "n_scatterers": 50}, cfg, seed=1)
    return cfg, run_pipeline(sc, cfg)


def test_benchmark_run_detects_all(bench_run):
    _, res = bench_run
    assert len(res.pairs) == 3
    assert not any(f.bs_only for f in res.fused)
    assert res.fused_metrics.rmse < res.bs_metrics.rmse


def test_estimates_schema(bench_run, tmp_path):
    cfg, res = bench_run
    write_run(res, cfg, tmp_path, dump_maps=True)
    lines = (tmp_path / "estimates.csv").read_text().splitlines()
    assert lines[0] == ",".join(ESTIMATES_HEADER)
    assert lines[0] == ("target_id,x_true,y_true,vx_true,vy_true,x_bs,y_bs,vr_bs,"
                        "x_fused,y_fused,vx_fused,vy_fused,iters,converged")
    assert len(lines) == 4
    assert (tmp_path / "map_ue.pgm").read_bytes().startswith(b"P5\n")
    last = (tmp_path / "metrics.csv").read_text().splitlines()[-1]
    assert last.startswith("rmse,")


def test_zero_targets_gives_empty_estimates(tmp_path):
    cfg = OfdmConfig()
    sc = build_scenario({"targets": [], "n_scatterers": 20}, cfg, seed=0)
    res = run_pipeline(sc, cfg)
    assert res.pairs == []
    write_run(res, cfg, tmp_path)
    assert (tmp_path / "estimates.csv").read_text().splitlines()[0] == ",".join(ESTIMATES_HEADER)


def test_build_scenario_rejects_unknown_preset(cfg):
    with pytest.raises(ValueError):
        build_scenario({"preset": "mystery"}, cfg, 0)


def test_run_seed_independent_streams():
    seeds = {run_seed(0, i) for i in range(100)}
    assert len(seeds) == 100
    assert run_seed(3, 7) == run_seed(3, 7)
    assert run_seed(3, 7) != run_seed(4, 7)


@pytest.mark.slow
def test_montecarlo_single_run_summary(tmp_path):
    conf = fio.parse_config({"scenario": {"preset": "random", "n_scatterers": 30}})
    rows, summary = run_montecarlo(conf, 1, tmp_path)
    assert summary[0] == 1
    assert summary[1] == rows[0][5] and summary[2] == rows[0][6]
    assert summary[7] == float(rows[0][7])
    assert (tmp_path / "summary.csv").read_text().splitlines()[0] == ",".join(SUMMARY_HEADER)
    assert (tmp_path / "runs" / "run_0000_estimates.csv").exists()


@pytest.mark.slow
def test_montecarlo_reproducible_and_parallel_consistent(tmp_path):
    conf = fio.parse_config({"scenario": {"preset": "random", "n_scatterers": 30}, "montecarlo": {"base_seed": 5}})
    _, a = run_montecarlo(conf, 2, tmp_path / "a")
    _, b = run_montecarlo(conf, 2, tmp_path / "b", jobs=2)
    np.testing.assert_array_equal(a, b)
    assert (tmp_path / "a" / "summary.csv").read_bytes() == (tmp_path / "b" / "summary.csv").read_bytes()


def test_montecarlo_rejects_zero_runs():
    with pytest.raises(ValueError):
        run_montecarlo(fio.RunConfig(), 0)
