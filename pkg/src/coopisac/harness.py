"""End-to-end runs: scenario -> radio front end -> sensing -> fusion -> metrics."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import geometry as geo
from . import io as fio
from .channel import synth_bs_cube, synth_ue_grid
from .estimators import BistaticSensor, MonostaticSensor
from .fusion import FusedEstimate, FusionOptions, fuse_all
from .metrics import MetricsReport, associate, compute_rmse
from .ofdm import OfdmConfig, build_frame
from .scenes import benchmark_targets, benchmark_ue_position, random_scatterers, random_scenario

ESTIMATES_HEADER = [
    "target_id", "x_true", "y_true", "vx_true", "vy_true", "x_bs", "y_bs", "vr_bs",
    "x_fused", "y_fused", "vx_fused", "vy_fused", "iters", "converged",
]
METRICS_HEADER = ["target_id", "pos_err_bs", "pos_err_fused", "vx_err_fused", "vy_err_fused", "fused_mode"]
RUNS_HEADER = ["run", "seed", "n_truth", "n_detected", "n_fused", "rmse_bs", "rmse_fused", "fused_beats_bs"]
SUMMARY_HEADER = [
    "runs", "mean_rmse_bs", "mean_rmse_fused", "p50_rmse_bs", "p50_rmse_fused",
    "p90_rmse_bs", "p90_rmse_fused", "win_fraction",
]


def build_scenario(spec: dict, cfg: OfdmConfig, seed: int, randomize: bool = False) -> geo.Scenario:
    """Materialise a scenario mapping from a run config.

    Keys: ``preset`` (``benchmark`` or ``random``), ``ue_position``,
    ``targets`` (list of ``{position, velocity, rcs}``), ``scatterers`` or
    ``n_scatterers``, ``n_targets`` for the random preset.
    """
    spec = dict(spec or {})
    q_u = spec.get("ue_position")
    q_u = geo.as_vec2(benchmark_ue_position() if q_u is None else [float(v) for v in q_u])
    n_scat = int(spec.get("n_scatterers", 200))
    preset = spec.get("preset", "benchmark")
    if preset not in ("benchmark", "random"):
        raise ValueError(f"unknown scenario preset {preset!r}")

    if "targets" in spec:
        targets = [geo.TargetTruth([float(v) for v in t["position"]], [float(v) for v in t["velocity"]],
                                   float(t.get("rcs", 3.5))) for t in (spec["targets"] or [])]
    elif preset == "random" or randomize:
        sc = random_scenario(seed, q_u, int(spec.get("n_targets", 3)), n_scat, cfg)
        targets = list(sc.targets)
    else:
        targets = benchmark_targets()

    if "scatterers" in spec:
        scat = [geo.ScattererTruth([float(v) for v in s["position"]], float(s.get("coefficient", 1.0)))
                for s in (spec["scatterers"] or [])]
    else:
        scat = random_scatterers(np.random.default_rng([seed, 1]), n_scat, q_u)
    scenario = geo.Scenario(q_u, targets, scat, seed=seed)
    scenario.check_cyclic_prefix(cfg.T_cp)
    return scenario


@dataclass
class RunResult:
    scenario: geo.Scenario
    psi_b: list
    psi_u: list
    fused: list[FusedEstimate]
    pairs: list[tuple[int, int]]
    bs_metrics: MetricsReport
    fused_metrics: MetricsReport
    maps: dict = field(default_factory=dict)
    cubes: dict = field(default_factory=dict)

    @property
    def fused_beats_bs(self) -> bool:
        return self.fused_metrics.n > 0 and self.fused_metrics.rmse < self.bs_metrics.rmse


def run_pipeline(scenario: geo.Scenario, cfg: OfdmConfig, settings: fio.RunSettings | None = None,
                 fusion: FusionOptions | None = None, keep_cubes: bool = False) -> RunResult:
    st = settings or fio.RunSettings()
    frame = build_frame(cfg, [scenario.seed, 3], beam=st.beam)
    rx_bs = synth_bs_cube(scenario, cfg, frame, st.snr_bs_db)
    rx_ue = synth_ue_grid(scenario, cfg, frame, st.snr_ue_db)

    bs = MonostaticSensor(cfg, grid_step=st.music_grid_step, threshold_db=st.peak_threshold_db,
                          min_separation=st.min_separation, zero_pad=st.bs_zero_pad).fit(rx_bs, frame)
    ue = BistaticSensor(cfg, max_targets=st.ue_max_targets, threshold_db=st.peak_threshold_db,
                        min_separation=st.min_separation, zero_pad=st.ue_zero_pad,
                        dynamic_range_db=st.ue_dynamic_range_db).fit(rx_ue, frame)
    fused = fuse_all(bs.estimates_, ue.estimates_, scenario.ue_position, cfg, fusion)

    truth_p = np.array([t.position for t in scenario.targets]).reshape(-1, 2)
    truth_v = np.array([t.velocity for t in scenario.targets]).reshape(-1, 2)
    init_p = np.array([bs_position(b) for b in bs.estimates_]).reshape(-1, 2)
    pairs = associate(truth_p, init_p)
    ti = [i for i, _ in pairs]
    ei = [j for _, j in pairs]
    fused_p = np.array([fused[j].position for j in ei]).reshape(-1, 2)
    fused_v = np.array([fused[j].velocity for j in ei]).reshape(-1, 2)
    bs_m = compute_rmse(truth_p[ti], init_p[ei])
    fu_m = compute_rmse(truth_p[ti], fused_p, truth_v[ti], fused_v)

    maps = {f"bs_beam{i}": m for i, m in enumerate(bs.maps_)}
    maps["ue"] = ue.map_
    cubes = {"bs_cube": rx_bs, "ue_grid": rx_ue} if keep_cubes else {}
    return RunResult(scenario, bs.estimates_, ue.estimates_, fused, pairs, bs_m, fu_m, maps, cubes)


def bs_position(b) -> np.ndarray:
    """Range/angle position of one BS estimate."""
    d_b = b.tau * geo.C0 / 2
    t = np.radians(b.theta)
    return d_b * np.array([np.cos(t), np.sin(t)])


def estimate_rows(result: RunResult, cfg: OfdmConfig) -> list[list]:
    """Rows for ``estimates.csv``: truth targets first, then unassociated detections."""
    by_truth = dict(result.pairs)
    rows = []
    used = set()
    for i, t in enumerate(result.scenario.targets):
        row = [i, *t.position, *t.velocity]
        j = by_truth.get(i)
        if j is None:
            rows.append(row + [None] * 9)
            continue
        used.add(j)
        rows.append(row + _est_cells(result, j, cfg))
    n_truth = len(result.scenario.targets)
    extra = [j for j in range(len(result.fused)) if j not in used]
    for k, j in enumerate(extra):
        rows.append([n_truth + k, None, None, None, None] + _est_cells(result, j, cfg))
    return rows


def _est_cells(result: RunResult, j: int, cfg: OfdmConfig) -> list:
    b = result.psi_b[j]
    f = result.fused[j]
    p = bs_position(b)
    vr = float(geo.doppler_to_velocity(b.f_d, cfg.fc))
    return [p[0], p[1], vr, *f.position, *f.velocity, f.iterations, f.converged]


def metric_rows(result: RunResult) -> list[list]:
    rows = []
    for k, (i, j) in enumerate(result.pairs):
        f = result.fused[j]
        mode = "bs_only" if f.bs_only else ("angle_replaced" if f.angle_replaced else "fused")
        ve = result.fused_metrics.velocity_errors[k]
        rows.append([i, result.bs_metrics.position_errors[k], result.fused_metrics.position_errors[k],
                     ve[0], ve[1], mode])
    rows.append(["rmse", result.bs_metrics.rmse, result.fused_metrics.rmse, None, None,
                 "fused_beats_bs" if result.fused_beats_bs else "bs_not_beaten"])
    return rows


def write_run(result: RunResult, cfg: OfdmConfig, out_dir, dump_maps: bool = False,
              dump_cubes: bool = False) -> None:
    out = Path(out_dir)
    fio.write_csv(out / "estimates.csv", ESTIMATES_HEADER, estimate_rows(result, cfg))
    fio.write_csv(out / "metrics.csv", METRICS_HEADER, metric_rows(result))
    if dump_maps:
        for name, m in result.maps.items():
            fio.write_pgm(out / f"map_{name}.pgm", m.magnitude)
            fio.write_map_csv(out / f"map_{name}.csv", m.magnitude)
    if dump_cubes:
        for name, x in result.cubes.items():
            fio.dump_tensor(out / f"{name}.bin", x)


def run_seed(base_seed: int, index: int) -> int:
    """Independent per-run seed derived from ``(base_seed, index)``."""
    return int(np.random.SeedSequence([base_seed, index]).generate_state(1)[0])


def _mc_job(args):
    conf, index = args
    seed = run_seed(conf.base_seed, index)
    scenario = build_scenario(conf.scenario, conf.radio, seed, randomize=conf.randomize_targets)
    res = run_pipeline(scenario, conf.radio, conf.settings, conf.fusion)
    n_fused = sum(1 for f in res.fused if not f.bs_only)
    row = [index, seed, len(scenario.targets), len(res.psi_b), n_fused,
           res.bs_metrics.rmse, res.fused_metrics.rmse, res.fused_beats_bs]
    return row, estimate_rows(res, conf.radio)


def run_montecarlo(conf: fio.RunConfig, runs: int | None = None, out_dir=None, jobs: int = 1):
    """Independent seeded runs; returns ``(run_rows, summary_row)``."""
    n = conf.runs if runs is None else runs
    if n < 1:
        raise ValueError("need at least one run")
    tasks = [(conf, i) for i in range(n)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_mc_job, tasks))
    else:
        results = [_mc_job(t) for t in tasks]
    rows = [r for r, _ in results]
    rb = np.array([r[5] for r in rows])
    rf = np.array([r[6] for r in rows])
    summary = [n, rb.mean(), rf.mean(), np.percentile(rb, 50), np.percentile(rf, 50),
               np.percentile(rb, 90), np.percentile(rf, 90), float(np.mean([r[7] for r in rows]))]
    if out_dir is not None:
        out = Path(out_dir)
        for (row, est) in results:
            fio.write_csv(out / "runs" / f"run_{row[0]:04d}_estimates.csv", ESTIMATES_HEADER, est)
        fio.write_csv(out / "montecarlo_runs.csv", RUNS_HEADER, rows)
        fio.write_csv(out / "summary.csv", SUMMARY_HEADER, [summary])
    return rows, summary
