"""Fusion of BS monostatic and UE bistatic observations.

Each matched target yields an observation row ``y = (d_B, v_B, theta_B,
d_U, v_U)``: monostatic range, radial velocity, BS azimuth, bistatic range
sum and bistatic velocity, all receding-positive. The state
``s = (x, y, v_x, v_y)`` is found by iteratively reweighted least squares
with a damped Gauss-Newton inner solver.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import linear_sum_assignment
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import geometry as geo
from .estimators import BsEstimate, UeEstimate
from .ofdm import OfdmConfig, resolutions
from .validation import check_observations

# Expected accuracy of (d_B [m], v_B [m/s], theta_B [deg], d_U [m], v_U [m/s]).
# Residuals are divided by these before reweighting; the bistatic range sum
# is trusted more than the weak monostatic echo.
DEFAULT_SIGMA = (1.0, 0.5, 0.1, 0.1, 0.5)

WEIGHT_FLOOR = 1e-6


class ObservationTuple(NamedTuple):
    d_b: float
    v_b: float
    theta_b: float
    d_u: float
    v_u: float


@dataclass(frozen=True)
class FusionOptions:
    eps: float = 1e-6
    max_iter: int = 50
    sigma: tuple = DEFAULT_SIGMA
    angle_gate: float = 3.0
    match_gate_bins: float = 5.0
    lambda0: float = 1e-3
    inner_max_iter: int = 200


@dataclass
class FusedEstimate:
    """Output of one target fusion.

    ``weights`` are the IRLS weights (on sigma-normalised residuals) used in
    the final inner solve, so ``weighted_objective(state, y, q_u, weights,
    sigma)`` reproduces the last minimised objective.
    """

    state: np.ndarray
    init: np.ndarray
    final_residual: np.ndarray
    objective_trace: list
    iterations: int
    converged: bool
    weights: np.ndarray = field(default_factory=lambda: np.ones(5))
    theta_used: float = float("nan")
    angle_replaced: bool = False
    no_intersection: bool = False
    velocity_degenerate: bool = False
    bs_only: bool = False

    @property
    def position(self) -> np.ndarray:
        return self.state[:2]

    @property
    def velocity(self) -> np.ndarray:
        return self.state[2:]


# ---------------------------------------------------------------------------
# observation model


def convert_units(bs: BsEstimate, ue: UeEstimate, cfg: OfdmConfig) -> ObservationTuple:
    """Delays and Dopplers to ranges and velocities.

    ``d_U`` is the full bistatic path length ``tau_U * c0``.
    """
    if bs.tau < 0 or ue.tau < 0:
        raise geo.GeometryError("delays must be non-negative")
    return ObservationTuple(
        d_b=bs.tau * geo.C0 / 2,
        v_b=float(geo.doppler_to_velocity(bs.f_d, cfg.fc)),
        theta_b=float(bs.theta),
        d_u=ue.tau * geo.C0,
        v_u=float(geo.doppler_to_velocity(ue.f_d, cfg.fc)),
    )


def _frames(q, q_u):
    p_b = q
    p_u = q - q_u
    r_b = np.hypot(*p_b)
    r_u = np.hypot(*p_u)
    if r_b == 0.0 or r_u == 0.0:
        raise geo.GeometryError("state position coincides with a station")
    return p_b / r_b, r_b, p_u / r_u, r_u


def predict_observation(state, q_u) -> np.ndarray:
    """Noise-free observation row for a state."""
    s = np.asarray(state, dtype=float)
    q, v = s[:2], s[2:]
    u_b, r_b, u_u, r_u = _frames(q, np.asarray(q_u, float))
    return np.array([
        r_b,
        v @ u_b,
        np.degrees(np.arctan2(q[1], q[0])),
        r_b + r_u,
        0.5 * (v @ u_b + v @ u_u),
    ])


def residuals(state, y, q_u) -> np.ndarray:
    """``y - f(state)`` with the angle entry wrapped to (-180, 180]."""
    e = np.asarray(y, dtype=float) - predict_observation(state, q_u)
    e[2] = geo.wrap_degrees(e[2])
    return e


def jacobian(state, y, q_u) -> np.ndarray:
    """Analytic ``d residuals / d (x, y, v_x, v_y)``; angle row in degrees per meter."""
    s = np.asarray(state, dtype=float)
    q, v = s[:2], s[2:]
    u_b, r_b, u_u, r_u = _frames(q, np.asarray(q_u, float))
    # d(v . u)/dq = (v - (v . u) u) / r
    dvb_dq = (v - (v @ u_b) * u_b) / r_b
    dvu_dq = (v - (v @ u_u) * u_u) / r_u
    J = np.zeros((5, 4))
    J[0, :2] = -u_b
    J[1, :2] = -dvb_dq
    J[1, 2:] = -u_b
    J[2, :2] = -np.degrees(np.array([-q[1], q[0]]) / r_b**2)
    J[3, :2] = -(u_b + u_u)
    J[4, :2] = -0.5 * (dvb_dq + dvu_dq)
    J[4, 2:] = -0.5 * (u_b + u_u)
    return J


def weighted_objective(state, y, q_u, weights, sigma=DEFAULT_SIGMA) -> float:
    """``F = 1/2 r^T W r`` on sigma-normalised residuals ``r = e / sigma``."""
    r = residuals(state, y, q_u) / np.asarray(sigma, float)
    return float(0.5 * np.sum(np.asarray(weights) * r**2))


# ---------------------------------------------------------------------------
# initialisation


def correct_angle(d_b: float, d_u: float, theta_raw: float, q_u, tol: float = 1e-6) -> tuple[float, bool]:
    """Pick the circle/ellipse intersection whose azimuth is nearest ``theta_raw``.

    The circle has radius ``d_b`` around the BS; the ellipse has foci BS and
    UE and path-length sum ``d_u``. Returns ``(theta, intersects)``; without
    an intersection ``theta_raw`` is passed through.
    """
    q_u = geo.as_vec2(q_u)
    base = float(np.hypot(*q_u))
    if d_b <= 0 or base == 0.0:
        raise geo.GeometryError("need d_b > 0 and a UE away from the BS")
    cos_psi = (2 * d_b * d_u - d_u**2 + base**2) / (2 * d_b * base)
    if abs(cos_psi) > 1 + tol or d_u <= base:
        return float(theta_raw), False
    psi = np.degrees(np.arccos(np.clip(cos_psi, -1.0, 1.0)))
    az = np.degrees(np.arctan2(q_u[1], q_u[0]))
    cands = [geo.wrap_degrees(az + psi), geo.wrap_degrees(az - psi)]
    best = min(cands, key=lambda a: abs(geo.wrap_degrees(a - theta_raw)))
    return float(best), True


def initial_position(d_b: float, theta: float, q_b=geo.BS_POSITION) -> np.ndarray:
    if d_b <= 0:
        raise geo.GeometryError("d_b must be positive")
    t = np.radians(theta)
    return geo.as_vec2(q_b) + d_b * np.array([np.cos(t), np.sin(t)])


def initial_velocity(q0, v_b: float, v_u: float, q_u, max_cond: float = 1e8) -> tuple[np.ndarray, bool]:
    """Solve the radial and bistatic velocity equations at ``q0``.

    Returns ``(v, degenerate)``. On the BS-UE baseline the two projections
    are parallel and only the radial component is recovered.
    """
    u_b, _, u_u, _ = _frames(geo.as_vec2(q0), geo.as_vec2(q_u))
    A = np.vstack([u_b, 0.5 * (u_b + u_u)])
    if np.linalg.cond(A) > max_cond:
        return v_b * u_b, True
    return np.linalg.solve(A, [v_b, v_u]), False


# ---------------------------------------------------------------------------
# solver


def _gauss_newton(s, y, q_u, w, lam, max_iter):
    """Levenberg-damped Gauss-Newton on ``1/2 sum w e^2``; returns (state, F, lam, ok)."""
    e = residuals(s, y, q_u)
    F = 0.5 * np.sum(w * e**2)
    for _ in range(max_iter):
        J = jacobian(s, y, q_u)
        A = J.T @ (w[:, None] * J)
        g = J.T @ (w * e)
        while True:
            try:
                step = -np.linalg.solve(A + lam * np.eye(4), g)
                s_new = s + step
                e_new = residuals(s_new, y, q_u)
                F_new = 0.5 * np.sum(w * e_new**2)
            except (geo.GeometryError, np.linalg.LinAlgError):
                F_new = np.inf
            if np.isfinite(F_new) and F_new <= F:
                break
            lam *= 10
            if lam > 1e12:
                return s, F, lam, False
        done = F - F_new <= 1e-15 * max(F, 1.0) or np.max(np.abs(step)) < 1e-12
        s, e, F = s_new, e_new, F_new
        lam = max(lam / 10, 1e-15)
        if done:
            break
    return s, F, lam, True


def irls_fuse(y, q_u, init, options: FusionOptions | None = None) -> FusedEstimate:
    """Reweighted least-squares fusion of one observation row.

    Each outer pass minimises ``1/2 r^T W r`` from the current state, then
    resets ``W_ii = 1 / (|r_i| + 1e-6)`` and re-evaluates ``F``. Iteration
    stops once ``|F' - F| <= eps`` or after ``max_iter`` passes.
    """
    opts = options or FusionOptions()
    y = np.asarray(y, dtype=float)
    q_u = geo.as_vec2(q_u)
    sigma = np.asarray(opts.sigma, dtype=float)
    init = np.asarray(init, dtype=float)

    W = np.ones(5)
    s = init.copy()
    try:
        F = weighted_objective(s, y, q_u, W, sigma)
    except geo.GeometryError:
        F = np.inf
    trace = [F]
    visited = [s]
    lam = opts.lambda0
    converged = False
    W_used = W
    it = 0
    for it in range(1, opts.max_iter + 1):
        s_new, _, lam, ok = _gauss_newton(s, y, q_u, W / sigma**2, lam, opts.inner_max_iter)
        if not ok and it == 1 and np.array_equal(s_new, init):
            break
        s = s_new
        W_used = W
        visited.append(s)
        r = residuals(s, y, q_u) / sigma
        W = 1.0 / (np.abs(r) + WEIGHT_FLOOR)
        F_new = float(0.5 * np.sum(W * r**2))
        trace.append(F_new)
        if it > 1 and abs(F_new - F) <= opts.eps:
            converged = True
            break
        F = F_new
        lam = opts.lambda0

    scores = []
    for cand in visited:
        try:
            scores.append(weighted_objective(cand, y, q_u, W_used, sigma))
        except geo.GeometryError:
            scores.append(np.inf)
    best = visited[int(np.argmin(scores))]
    try:
        final = residuals(best, y, q_u)
    except geo.GeometryError:
        final = np.full(5, np.nan)
    return FusedEstimate(
        state=best, init=init, final_residual=final, objective_trace=trace,
        iterations=it, converged=converged, weights=W_used,
    )


def fuse_observation(y, q_u, options: FusionOptions | None = None) -> FusedEstimate:
    """Angle correction, closed-form initialisation, then IRLS for one row.

    The geometric angle seeds the initial position. It replaces the
    observed angle in the fit only when the two disagree by more than
    ``angle_gate`` degrees, i.e. when the MUSIC angle is a gross outlier.
    """
    opts = options or FusionOptions()
    y = np.array(y, dtype=float)
    q_u = geo.as_vec2(q_u)
    theta, hit = correct_angle(y[0], y[3], y[2], q_u)
    replaced = hit and abs(geo.wrap_degrees(theta - y[2])) > opts.angle_gate
    if replaced:
        y[2] = theta
    q0 = initial_position(y[0], theta)
    try:
        v0, degenerate = initial_velocity(q0, y[1], y[4], q_u)
    except geo.GeometryError:
        v0, degenerate = np.zeros(2), True
    out = irls_fuse(y, q_u, np.r_[q0, v0], opts)
    out.theta_used = theta
    out.angle_replaced = bool(replaced)
    out.no_intersection = not hit
    out.velocity_degenerate = degenerate
    return out


def bs_only_state(d_b: float, v_b: float, theta: float) -> np.ndarray:
    """Position from range and angle, velocity along the line of sight only."""
    q0 = initial_position(d_b, theta)
    return np.r_[q0, v_b * q0 / np.hypot(*q0)]


# ---------------------------------------------------------------------------
# matching and batch fusion


def match_targets(psi_b, psi_u, q_u, cfg: OfdmConfig | None = None, gate_bins: float = 5.0) -> list[tuple[int, int]]:
    """Pair BS and UE estimates by expected versus measured bistatic delay.

    The expected UE delay comes from the BS range/angle position. Pairs
    whose delay mismatch exceeds ``gate_bins`` monostatic range bins (as
    delay) are dropped.
    """
    if len(psi_b) == 0 or len(psi_u) == 0:
        return []
    cfg = cfg or OfdmConfig()
    q_u = geo.as_vec2(q_u)
    gate = gate_bins * resolutions(cfg)["range_bin"] / geo.C0
    expected = []
    for b in psi_b:
        q0 = initial_position(b.tau * geo.C0 / 2, b.theta)
        expected.append(geo.path_delay_bi(q0, q_u))
    measured = np.array([u.tau for u in psi_u])
    cost = np.abs(np.asarray(expected)[:, None] - measured[None, :])
    rows, cols = linear_sum_assignment(cost)
    return [(int(i), int(j)) for i, j in zip(rows, cols) if cost[i, j] <= gate]


def fuse_all(psi_b, psi_u, q_u, cfg: OfdmConfig | None = None,
             options: FusionOptions | None = None) -> list[FusedEstimate]:
    """Fuse every BS estimate; unmatched ones come back as flagged BS-only states.

    Output order follows ``psi_b``.
    """
    cfg = cfg or OfdmConfig()
    opts = options or FusionOptions()
    pairs = dict(match_targets(psi_b, psi_u, q_u, cfg, opts.match_gate_bins))
    out = []
    for i, b in enumerate(psi_b):
        if i in pairs:
            y = convert_units(b, psi_u[pairs[i]], cfg)
            out.append(fuse_observation(y, q_u, opts))
            continue
        d_b = b.tau * geo.C0 / 2
        v_b = float(geo.doppler_to_velocity(b.f_d, cfg.fc))
        s = bs_only_state(d_b, v_b, b.theta)
        out.append(FusedEstimate(
            state=s, init=s, final_residual=np.full(5, np.nan), objective_trace=[],
            iterations=0, converged=False, theta_used=float(b.theta), bs_only=True,
        ))
    return out


class CooperativeFusion(BaseEstimator):
    """Estimator wrapper around the per-row fusion.

    ``fit(Y)`` takes an ``(n, 5)`` observation array and stores one
    :class:`FusedEstimate` per row in ``results_``; ``predict(Y)`` returns
    the ``(n, 4)`` fused states. ``sign_convention="paper"`` negates the
    bistatic-velocity column on input.

    Examples
    --------
    >>> import numpy as np
    >>> from coopisac.fusion import CooperativeFusion, predict_observation
    >>> q_u = (80.0, 60.0)
    >>> y = predict_observation([60.0, 25.0, -15.0, 12.0], q_u)
    >>> CooperativeFusion(ue_position=q_u).fit_predict(y[None]).round(6)
    array([[ 60.,  25., -15.,  12.]])
    """

    def __init__(self, ue_position=(80.0, 60.0), eps: float = 1e-6, max_iter: int = 50,
                 sigma=DEFAULT_SIGMA, angle_gate: float = 3.0, sign_convention: str = "internal"):
        self.ue_position = ue_position
        self.eps = eps
        self.max_iter = max_iter
        self.sigma = sigma
        self.angle_gate = angle_gate
        self.sign_convention = sign_convention

    def _options(self) -> FusionOptions:
        return FusionOptions(eps=self.eps, max_iter=self.max_iter, sigma=tuple(self.sigma),
                             angle_gate=self.angle_gate)

    def _prepare(self, Y) -> np.ndarray:
        Y = check_observations(Y).copy()
        if self.sign_convention == "paper":
            Y[:, 4] = -Y[:, 4]
        elif self.sign_convention != "internal":
            raise ValueError(f"unknown sign convention {self.sign_convention!r}")
        return Y

    def fit(self, Y, y=None):
        Y = self._prepare(Y)
        q_u = geo.as_vec2(self.ue_position)
        opts = self._options()
        self.results_ = [fuse_observation(row, q_u, opts) for row in Y]
        self.bs_only_ = np.array([bs_only_state(r[0], r[1], r[2]) for r in Y])
        self.n_features_in_ = Y.shape[1]
        return self

    def predict(self, Y=None) -> np.ndarray:
        if Y is not None:
            self.fit(Y)
        check_is_fitted(self, "results_")
        return np.array([r.state for r in self.results_]).reshape(-1, 4)

    def fit_predict(self, Y, y=None) -> np.ndarray:
        return self.fit(Y).predict()
