"""Planar BS/UE/target geometry and kinematics.

All positions are 2-D numpy vectors in meters, velocities in m/s. The base
station sits at the origin unless a different ``q_b`` is passed. Velocities
are reported receding-positive for both the monostatic and the bistatic path.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

C0 = 299_792_458.0

BS_POSITION = np.zeros(2)


class GeometryError(ValueError):
    """Raised when a quantity is undefined for the given geometry."""


def as_vec2(q) -> np.ndarray:
    v = np.asarray(q, dtype=float).reshape(-1)
    if v.shape != (2,):
        raise ValueError(f"expected a 2-vector, got shape {np.shape(q)}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector components must be finite")
    return v


@dataclass(frozen=True)
class TargetTruth:
    position: np.ndarray
    velocity: np.ndarray
    rcs: float = 3.5

    def __post_init__(self):
        object.__setattr__(self, "position", as_vec2(self.position))
        object.__setattr__(self, "velocity", as_vec2(self.velocity))
        if not self.rcs > 0:
            raise ValueError("rcs must be positive")


@dataclass(frozen=True)
class ScattererTruth:
    position: np.ndarray
    scatter_coefficient: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "position", as_vec2(self.position))
        if not abs(self.scatter_coefficient) > 0:
            raise ValueError("scatter coefficient magnitude must be positive")


@dataclass(frozen=True)
class Scenario:
    """Ground-truth world. The BS is fixed at the origin."""

    ue_position: np.ndarray
    targets: tuple = ()
    scatterers: tuple = ()
    seed: int = 0
    bs_position: np.ndarray = field(default_factory=lambda: BS_POSITION.copy())

    def __post_init__(self):
        object.__setattr__(self, "ue_position", as_vec2(self.ue_position))
        object.__setattr__(self, "bs_position", as_vec2(self.bs_position))
        if np.any(self.bs_position != 0.0):
            raise ValueError("the BS must be located at the origin")
        object.__setattr__(self, "targets", tuple(self.targets))
        object.__setattr__(self, "scatterers", tuple(self.scatterers))
        for t in self.targets:
            if _dist(t.position, self.bs_position) == 0 or _dist(t.position, self.ue_position) == 0:
                raise ValueError("a target may not coincide with the BS or the UE")

    def check_cyclic_prefix(self, t_cp: float) -> None:
        """Raise ValueError if any target's bistatic delay exceeds ``t_cp``."""
        for i, t in enumerate(self.targets):
            tau = path_delay_bi(t.position, self.ue_position)
            if tau > t_cp:
                raise ValueError(
                    f"target {i}: bistatic delay {tau:.3e} s exceeds the cyclic prefix {t_cp:.3e} s"
                )


def _dist(a, b) -> float:
    return float(np.hypot(*(np.asarray(a, float) - np.asarray(b, float))))


def _unit(q, origin, what: str) -> tuple[np.ndarray, float]:
    d = as_vec2(q) - as_vec2(origin)
    r = float(np.hypot(*d))
    if r == 0.0:
        raise GeometryError(f"position coincides with the {what}")
    return d / r, r


def wrap_degrees(a):
    """Wrap angles to the half-open interval (-180, 180]."""
    w = np.mod(np.asarray(a, dtype=float) + 180.0, 360.0) - 180.0
    w = np.where(w == -180.0, 180.0, w)
    return w if np.ndim(w) else float(w)


def aoa_from_bs(q, q_b=BS_POSITION) -> float:
    """Azimuth of ``q`` seen from the BS, degrees from the +x axis."""
    d = as_vec2(q) - as_vec2(q_b)
    if not np.any(d):
        raise GeometryError("angle of arrival undefined at the BS position")
    return float(wrap_degrees(np.degrees(np.arctan2(d[1], d[0]))))


def monostatic_range(q, q_b=BS_POSITION) -> float:
    return _dist(q, q_b)


def bistatic_range_sum(q, q_u, q_b=BS_POSITION) -> float:
    return _dist(q, q_b) + _dist(q, q_u)


def radial_velocity_bs(q, v, q_b=BS_POSITION) -> float:
    u_b, _ = _unit(q, q_b, "BS")
    return float(as_vec2(v) @ u_b)


def bistatic_velocity(q, v, q_u, q_b=BS_POSITION) -> float:
    """Half the sum of the velocity projections on both station lines of sight.

    Equals ``|v| cos(delta) cos(beta/2)`` with ``beta`` the bistatic angle and
    ``delta`` the angle between ``v`` and the bistatic bisector.
    """
    u_b, _ = _unit(q, q_b, "BS")
    u_u, _ = _unit(q, q_u, "UE")
    v = as_vec2(v)
    return float(0.5 * (v @ u_b + v @ u_u))


def path_delay_mono(q, q_b=BS_POSITION) -> float:
    return 2.0 * monostatic_range(q, q_b) / C0


def path_delay_bi(q, q_u, q_b=BS_POSITION) -> float:
    return bistatic_range_sum(q, q_u, q_b) / C0


def velocity_to_doppler(v, fc: float):
    return 2.0 * fc * np.asarray(v, dtype=float) / C0


def doppler_to_velocity(f, fc: float):
    return np.asarray(f, dtype=float) * C0 / (2.0 * fc)


def doppler_mono(q, v, fc: float, q_b=BS_POSITION) -> float:
    return float(velocity_to_doppler(radial_velocity_bs(q, v, q_b), fc))


def doppler_bi(q, v, q_u, fc: float, q_b=BS_POSITION) -> float:
    return float(velocity_to_doppler(bistatic_velocity(q, v, q_u, q_b), fc))
