"""OFDM numerology and transmit-frame construction."""
from __future__ import annotations

from dataclasses import dataclass, fields, replace

import numpy as np

from .geometry import C0


@dataclass(frozen=True)
class OfdmConfig:
    """Radio numerology shared by the BS and the UE.

    ``antenna_spacing`` defaults to half a wavelength at ``fc``. The cyclic
    prefix length ``N_cp`` is counted in samples at rate ``N * delta_f``.
    """

    fc: float = 24e9
    delta_f: float = 120e3
    N: int = 617
    M: int = 512
    n_guard_low: int = 9
    n_guard_high: int = 8
    N_cp: int = 149
    M_T: int = 16
    M_R: int = 16
    antenna_spacing: float | None = None

    def __post_init__(self):
        if self.antenna_spacing is None:
            object.__setattr__(self, "antenna_spacing", self.wavelength / 2)
        if self.N <= self.n_guard_low + self.n_guard_high:
            raise ValueError("no active subcarriers left after the guard bands")
        if min(self.n_guard_low, self.n_guard_high, self.N_cp) < 0:
            raise ValueError("guard and CP lengths must be non-negative")
        if self.M < 1 or self.M_T < 1 or self.M_R < 1:
            raise ValueError("M, M_T and M_R must be at least 1")
        if not (self.fc > 0 and self.delta_f > 0 and self.antenna_spacing > 0):
            raise ValueError("fc, delta_f and antenna_spacing must be positive")

    @property
    def wavelength(self) -> float:
        return C0 / self.fc

    @property
    def T(self) -> float:
        return 1.0 / self.delta_f

    @property
    def bandwidth(self) -> float:
        return self.N * self.delta_f

    @property
    def T_cp(self) -> float:
        return self.N_cp / self.bandwidth

    @property
    def T_s(self) -> float:
        return self.T + self.T_cp

    @property
    def spacing_wavelengths(self) -> float:
        return self.antenna_spacing / self.wavelength

    @property
    def active_mask(self) -> np.ndarray:
        mask = np.ones(self.N, dtype=bool)
        mask[: self.n_guard_low] = False
        mask[self.N - self.n_guard_high:] = False
        return mask

    @property
    def n_active(self) -> int:
        return self.N - self.n_guard_low - self.n_guard_high

    def with_overrides(self, **overrides) -> "OfdmConfig":
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise ValueError(f"unknown radio parameters: {sorted(unknown)}")
        if "fc" in overrides and "antenna_spacing" not in overrides:
            overrides["antenna_spacing"] = None
        return replace(self, **overrides)


def default_config() -> OfdmConfig:
    return OfdmConfig()


@dataclass(frozen=True)
class TxFrame:
    """Transmitted resource grid.

    ``data`` is ``N x M`` with unit-modulus QPSK on active subcarriers and 0
    (the null marker) on guards. ``weights`` is the ``M_T`` beamforming
    vector applied on every resource element.
    """

    data: np.ndarray
    weights: np.ndarray

    def tensor(self) -> np.ndarray:
        """Space-frequency-time transmit tensor, shape ``(M_T, N, M)``."""
        return self.weights[:, None, None] * self.data[None, :, :]


def build_frame(cfg: OfdmConfig, seed=None, beam: str = "omni") -> TxFrame:
    """Draw a seeded QPSK frame.

    ``beam="omni"`` excites a single element so every azimuth sees the same
    transmit gain. ``beam="uniform"`` uses ``ones / sqrt(M_T)``, a broadside
    beam.
    """
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 4, size=(cfg.N, cfg.M))
    data = np.exp(1j * (np.pi / 4 + np.pi / 2 * bits))
    data[~cfg.active_mask, :] = 0.0
    if beam == "omni":
        w = np.zeros(cfg.M_T, dtype=complex)
        w[0] = 1.0
    elif beam == "uniform":
        w = np.ones(cfg.M_T, dtype=complex) / np.sqrt(cfg.M_T)
    else:
        raise ValueError(f"unknown beam mode {beam!r}")
    return TxFrame(data=data, weights=w)


def resolutions(cfg: OfdmConfig, angle_step: float = 0.1) -> dict:
    """Periodogram bin sizes: range (m), velocity (m/s) and the MUSIC scan step."""
    return {
        "range_bin": C0 / (2 * cfg.N * cfg.delta_f),
        "velocity_bin": C0 / (2 * cfg.fc * cfg.M * cfg.T_s),
        "angle_grid": float(angle_step),
    }
