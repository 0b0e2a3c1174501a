"""Error metrics and truth-to-estimate association."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment


@dataclass
class MetricsReport:
    position_errors: np.ndarray
    velocity_errors: np.ndarray | None
    rmse: float

    @property
    def n(self) -> int:
        return int(self.position_errors.size)


def compute_rmse(truth_positions, est_positions, truth_velocities=None, est_velocities=None) -> MetricsReport:
    """Position RMSE over id-aligned targets, with per-component velocity errors.

    Rows of the truth and estimate arrays must correspond one to one.
    """
    tp = np.asarray(truth_positions, dtype=float).reshape(-1, 2)
    ep = np.asarray(est_positions, dtype=float).reshape(-1, 2)
    if tp.shape != ep.shape:
        raise ValueError(f"{len(tp)} truth positions but {len(ep)} estimates")
    pos_err = np.hypot(*(ep - tp).T) if len(tp) else np.zeros(0)
    vel_err = None
    if truth_velocities is not None and est_velocities is not None:
        tv = np.asarray(truth_velocities, dtype=float).reshape(-1, 2)
        ev = np.asarray(est_velocities, dtype=float).reshape(-1, 2)
        if tv.shape != ev.shape or tv.shape != tp.shape:
            raise ValueError("velocity arrays must align with positions")
        vel_err = np.abs(ev - tv)
    rmse = float(np.sqrt(np.mean(pos_err**2))) if pos_err.size else 0.0
    return MetricsReport(pos_err, vel_err, rmse)


def associate(truth_positions, est_positions, gate: float = 10.0) -> list[tuple[int, int]]:
    """Optimal truth/estimate pairing by position distance, dropping pairs beyond ``gate`` m."""
    tp = np.asarray(truth_positions, dtype=float).reshape(-1, 2)
    ep = np.asarray(est_positions, dtype=float).reshape(-1, 2)
    if len(tp) == 0 or len(ep) == 0:
        return []
    cost = np.hypot(tp[:, None, 0] - ep[None, :, 0], tp[:, None, 1] - ep[None, :, 1])
    rows, cols = linear_sum_assignment(cost)
    return [(int(i), int(j)) for i, j in zip(rows, cols) if cost[i, j] <= gate]
