"""Input validation helpers shared by the estimators."""
from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array

from .ofdm import OfdmConfig

N_OBS = 5


def check_pad(zero_pad) -> tuple[int, int]:
    """Normalise a zero-pad spec to ``(range_factor, doppler_factor)``."""
    if np.ndim(zero_pad) == 0:
        pr = pd = zero_pad
    else:
        pr, pd = zero_pad
    if int(pr) != pr or int(pd) != pd or pr < 1 or pd < 1:
        raise ValueError(f"zero-pad factors must be positive integers, got {zero_pad!r}")
    return int(pr), int(pd)


def _check_complex(x, shape, what) -> np.ndarray:
    x = np.asarray(x)
    if x.shape != shape:
        raise ValueError(f"{what} has shape {x.shape}, expected {shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{what} contains non-finite entries")
    return x.astype(complex, copy=False)


def check_cube(x, cfg: OfdmConfig) -> np.ndarray:
    return _check_complex(x, (cfg.M_R, cfg.N, cfg.M), "BS cube")


def check_grid(x, cfg: OfdmConfig) -> np.ndarray:
    return _check_complex(x, (cfg.N, cfg.M), "UE grid")


def check_observations(Y) -> np.ndarray:
    """Validate an ``(n, 5)`` array of ``(d_B, v_B, theta_B, d_U, v_U)`` rows."""
    Y = check_array(np.atleast_2d(np.asarray(Y, dtype=float)), dtype=float)
    if Y.shape[1] != N_OBS:
        raise ValueError(f"observation rows need {N_OBS} entries, got {Y.shape[1]}")
    if np.any(Y[:, 0] <= 0):
        raise ValueError("monostatic range d_B must be positive")
    if np.any(np.abs(Y[:, 2]) > 90):
        raise ValueError("theta_B must lie in [-90, 90] degrees")
    return Y
