"""Scenario presets: the three-target benchmark layout and a randomiser."""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.optimize import least_squares

from . import geometry as geo
from .ofdm import OfdmConfig, resolutions

BENCHMARK_POSITIONS = np.array([[59.92, 25.06], [70.11, 14.95], [90.0, 30.13]])
BENCHMARK_VELOCITIES = np.array([[-15.0, 12.0], [20.0, -10.0], [0.0, 25.0]])
BENCHMARK_RCS = 3.5

# Benchmark observation rows (d_B, v_B, theta_B, d_U, v_U); the last column
# uses the opposite sign to the receding-positive convention used here.
BENCHMARK_TUPLES = np.array([
    [64.54, -9.20, 22.60, 105.43, 6.13],
    [70.78, 17.45, 12.1, 117.59, -11.46],
    [95.77, 7.90, 18.50, 126.08, 7.90],
])


@lru_cache(maxsize=1)
def benchmark_ue_position() -> tuple[float, float]:
    """UE position consistent with the benchmark targets and tuples.

    Each tuple's bistatic sum minus the true BS range is the target-to-UE
    distance; the UE is the least-squares intersection of those circles.
    """
    radii = BENCHMARK_TUPLES[:, 3] - np.hypot(*BENCHMARK_POSITIONS.T)

    def misfit(u):
        return np.hypot(*(BENCHMARK_POSITIONS - u).T) - radii

    sol = least_squares(misfit, x0=np.array([80.0, 60.0]), xtol=1e-14, ftol=1e-14, gtol=1e-14)
    return float(sol.x[0]), float(sol.x[1])


def benchmark_targets(rcs: float = BENCHMARK_RCS) -> list[geo.TargetTruth]:
    return [geo.TargetTruth(p, v, rcs) for p, v in zip(BENCHMARK_POSITIONS, BENCHMARK_VELOCITIES)]


def random_scatterers(rng, n: int, ue_position, box: float = 120.0, keep_out: float = 5.0,
                      coeff_range=(0.1, 3.5)) -> list[geo.ScattererTruth]:
    """``n`` static scatterers uniform in ``[0, box] x [-box/2, box/2]``."""
    q_u = geo.as_vec2(ue_position)
    out = []
    while len(out) < n:
        p = np.array([rng.uniform(0.0, box), rng.uniform(-box / 2, box / 2)])
        if np.hypot(*p) < keep_out or np.hypot(*(p - q_u)) < keep_out:
            continue
        out.append(geo.ScattererTruth(p, rng.uniform(*coeff_range)))
    return out


def benchmark_scenario(seed: int = 0, n_scatterers: int = 200, ue_position=None) -> geo.Scenario:
    q_u = benchmark_ue_position() if ue_position is None else ue_position
    rng = np.random.default_rng([seed, 1])
    return geo.Scenario(
        ue_position=q_u,
        targets=benchmark_targets(),
        scatterers=random_scatterers(rng, n_scatterers, q_u),
        seed=seed,
    )


def _resolvable(t: geo.TargetTruth, others, q_u, cfg: OfdmConfig, min_angle_sep: float) -> bool:
    res = resolutions(cfg)
    vbin, rbin = res["velocity_bin"], res["range_bin"]
    q, v = t.position, t.velocity
    if np.hypot(*(q - q_u)) < 10.0:
        return False
    v_r = geo.radial_velocity_bs(q, v)
    v_bi = geo.bistatic_velocity(q, v, q_u)
    # the zero-Doppler notch removes near-stationary echoes
    if abs(v_r) < 1.5 * vbin or abs(v_bi) < 1.5 * vbin:
        return False
    th = geo.aoa_from_bs(q)
    d_u = geo.bistatic_range_sum(q, q_u)
    for o in others:
        if abs(th - geo.aoa_from_bs(o.position)) < min_angle_sep:
            return False
        # UE delay-Doppler cells (bistatic range bin is twice the monostatic one)
        dn = abs(d_u - geo.bistatic_range_sum(o.position, q_u)) / (2 * rbin)
        dm = abs(v_bi - geo.bistatic_velocity(o.position, o.velocity, q_u)) / vbin
        if max(dn, dm) < 3:
            return False
    return True


def random_scenario(seed: int, ue_position=None, n_targets: int = 3, n_scatterers: int = 200,
                    cfg: OfdmConfig | None = None, r_range=(40.0, 100.0), max_azimuth: float = 45.0,
                    speed_range=(5.0, 25.0), rcs: float = BENCHMARK_RCS,
                    min_angle_sep: float = 4.0) -> geo.Scenario:
    """Random targets in an annulus in front of the array.

    Draws are rejected when a target sits within 10 m of the UE, is nearly
    stationary in either Doppler, or is not resolvable from an earlier
    target in BS azimuth or in the UE delay-Doppler plane.
    """
    cfg = cfg or OfdmConfig()
    q_u = geo.as_vec2(benchmark_ue_position() if ue_position is None else ue_position)
    rng = np.random.default_rng([seed, 2])
    targets: list[geo.TargetTruth] = []
    for _ in range(100_000):
        if len(targets) == n_targets:
            break
        r = rng.uniform(*r_range)
        az = np.radians(rng.uniform(-max_azimuth, max_azimuth))
        speed = rng.uniform(*speed_range)
        heading = rng.uniform(0, 2 * np.pi)
        t = geo.TargetTruth(r * np.array([np.cos(az), np.sin(az)]),
                            speed * np.array([np.cos(heading), np.sin(heading)]), rcs)
        if _resolvable(t, targets, q_u, cfg, min_angle_sep):
            targets.append(t)
    else:
        raise RuntimeError("could not place the requested number of targets")
    scat_rng = np.random.default_rng([seed, 1])
    return geo.Scenario(q_u, targets, random_scatterers(scat_rng, n_scatterers, q_u), seed=seed)
