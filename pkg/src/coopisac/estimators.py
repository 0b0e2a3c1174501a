"""BS monostatic and UE bistatic parameter extraction.

The BS pipeline is data removal, zero-Doppler clutter notch, spatial
covariance, MDL model order, MUSIC angle scan, then one beam and one
range-Doppler periodogram per angle. The UE has a single antenna, so it
skips the spatial stages and picks several peaks from one periodogram.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.signal import argrelmax
from sklearn.base import BaseEstimator, TransformerMixin

from .channel import steering
from .ofdm import OfdmConfig, TxFrame, resolutions
from .validation import check_cube, check_grid, check_pad


class BsEstimate(NamedTuple):
    tau: float
    f_d: float
    theta: float


class UeEstimate(NamedTuple):
    tau: float
    f_d: float


# ---------------------------------------------------------------------------
# elementary operations


def remove_data(rx: np.ndarray, frame: TxFrame) -> np.ndarray:
    """Divide out the transmitted symbols; guard subcarriers are zeroed.

    Works on a BS cube ``(M_R, N, M)`` or a UE grid ``(N, M)``. Applying it
    twice divides by the data twice, which is a misuse.
    """
    rx = np.asarray(rx)
    d = frame.data
    if rx.shape[-2:] != d.shape:
        raise ValueError(f"received shape {rx.shape} does not match frame {d.shape}")
    active = np.abs(d) > 0
    safe = np.where(active, d, 1.0)
    return np.where(active, rx / safe, 0.0)


def clutter_filter(x: np.ndarray) -> np.ndarray:
    """Zero-Doppler notch: subtract the slow-time mean per subcarrier (and antenna).

    Exactly removes static returns. A moving target whose Doppler is an
    exact zero is removed as well.
    """
    x = np.asarray(x)
    if x.shape[-1] < 2:
        raise ValueError("clutter filtering needs at least two symbols")
    return x - x.mean(axis=-1, keepdims=True)


def spatial_covariance(cube: np.ndarray, active=None) -> np.ndarray:
    """Sample covariance over all ``(k, m)`` antenna snapshots."""
    cube = np.asarray(cube)
    if cube.ndim != 3 or cube.size == 0:
        raise ValueError("expected a non-empty (M_R, N, M) cube")
    if active is not None:
        cube = cube[:, np.asarray(active, dtype=bool), :]
    X = cube.reshape(cube.shape[0], -1)
    R = X @ X.conj().T / X.shape[1]
    return 0.5 * (R + R.conj().T)


def mdl_order(eigenvalues, n_snapshots: float) -> int:
    """Wax-Kailath minimum description length source count.

    ``eigenvalues`` are sorted descending. Returns 0 for a white spectrum.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    if np.any(np.diff(lam) > 1e-12 * max(lam[0], 1.0)):
        raise ValueError("eigenvalues must be sorted in descending order")
    p = lam.size
    lam = np.clip(lam, np.finfo(float).tiny, None)
    n = float(n_snapshots)
    scores = np.empty(p)
    for k in range(p):
        tail = lam[k:]
        q = p - k
        log_ratio = np.mean(np.log(tail)) - np.log(np.mean(tail))
        scores[k] = -n * q * log_ratio + 0.5 * k * (2 * p - k) * np.log(n)
    return int(np.argmin(scores))


def music_spectrum(R: np.ndarray, n_sources: int, grid: np.ndarray, spacing: float = 0.5) -> np.ndarray:
    """MUSIC pseudo-spectrum on ``grid`` (degrees); ``spacing`` in wavelengths."""
    p = R.shape[0]
    if not 0 <= n_sources < p:
        raise ValueError("need 0 <= n_sources < number of sensors")
    _, vecs = np.linalg.eigh(R)
    En = vecs[:, : p - n_sources]
    A = steering(grid, p, spacing, 1.0)
    proj = En.conj().T @ A
    return 1.0 / np.maximum(np.sum(np.abs(proj) ** 2, axis=0), np.finfo(float).tiny)


def music_angles(R: np.ndarray, n_sources: int, grid_step: float = 0.1, spacing: float = 0.5) -> list[float]:
    """The ``n_sources`` strongest local maxima of the pseudo-spectrum over [-90, 90]."""
    if n_sources == 0:
        return []
    grid = np.linspace(-90.0, 90.0, int(round(180.0 / grid_step)) + 1)
    spec = music_spectrum(R, n_sources, grid, spacing)
    peaks = argrelmax(np.concatenate(([-np.inf], spec, [-np.inf])))[0] - 1
    peaks = peaks[np.argsort(spec[peaks])[::-1]][:n_sources]
    return [float(grid[i]) for i in peaks]


def beamform(cube: np.ndarray, theta: float, spacing: float = 0.5) -> np.ndarray:
    """Combine the antenna axis with the conjugate steering vector toward ``theta``."""
    a = steering(theta, cube.shape[0], spacing, 1.0)
    return np.tensordot(a.conj(), cube, axes=(0, 0))


@dataclass
class RangeDopplerMap:
    """Periodogram magnitude, rows = range bins, columns = fft-shifted Doppler.

    With ``N`` subcarriers the map is ``|FFT_m(IFFT_k(F))|`` so that
    ``sum(map**2) == sum(|F|**2) * M / N`` without padding.
    """

    magnitude: np.ndarray
    delay_bin: float
    doppler_bin: float
    range_bin: float
    velocity_bin: float

    @property
    def n_doppler(self) -> int:
        return self.magnitude.shape[1]

    def signed_doppler_index(self, col):
        return np.asarray(col) - self.n_doppler // 2

    def column(self, m_hat: int) -> int:
        return int(m_hat) + self.n_doppler // 2


def range_doppler(F: np.ndarray, cfg: OfdmConfig, zero_pad=1) -> RangeDopplerMap:
    """N-point IFFT along subcarriers, M-point FFT along symbols, magnitude.

    ``zero_pad`` is an integer or ``(range, doppler)`` pair of integer
    oversampling factors; 1 gives the plain periodogram.
    """
    F = np.asarray(F)
    if F.shape != (cfg.N, cfg.M):
        raise ValueError(f"expected an ({cfg.N}, {cfg.M}) grid, got {F.shape}")
    pr, pd = check_pad(zero_pad)
    n_r, n_d = cfg.N * pr, cfg.M * pd
    C = np.fft.ifft(F, n=n_r, axis=0) * (n_r / cfg.N)
    C = np.fft.fftshift(np.fft.fft(C, n=n_d, axis=1), axes=1)
    res = resolutions(cfg)
    return RangeDopplerMap(
        magnitude=np.abs(C),
        delay_bin=1.0 / (n_r * cfg.delta_f),
        doppler_bin=1.0 / (n_d * cfg.T_s),
        range_bin=res["range_bin"] / pr,
        velocity_bin=res["velocity_bin"] / pd,
    )


def extract_peaks(rd_map: RangeDopplerMap, max_targets: int, min_separation=3,
                  threshold_db: float = 12.0, dynamic_range_db: float | None = None) -> list[tuple[int, int]]:
    """Greedy maxima with a guard zone.

    A peak is kept while it exceeds ``threshold_db`` above the median map
    level and, if ``dynamic_range_db`` is set, lies within that many dB of
    the strongest peak. Every accepted peak blanks all bins closer than
    ``min_separation`` (an int, or a ``(rows, cols)`` pair) along each axis.
    Returns ``(n_hat, m_hat)`` with signed Doppler index ``m_hat``.
    """
    if max_targets < 1:
        raise ValueError("max_targets must be >= 1")
    sep_r, sep_c = (min_separation, min_separation) if np.ndim(min_separation) == 0 else min_separation
    half_r, half_c = max(int(sep_r) - 1, 0), max(int(sep_c) - 1, 0)
    mag = np.array(rd_map.magnitude, dtype=float)
    floor = np.median(mag) * 10 ** (threshold_db / 20)
    if dynamic_range_db is not None:
        floor = max(floor, mag.max() * 10 ** (-dynamic_range_db / 20))
    n_cols = mag.shape[1]
    out = []
    while len(out) < max_targets:
        r, c = divmod(int(np.argmax(mag)), n_cols)
        if not mag[r, c] > floor:
            break
        out.append((r, int(rd_map.signed_doppler_index(c))))
        mag[max(r - half_r, 0): r + half_r + 1, max(c - half_c, 0): c + half_c + 1] = -np.inf
    return out


def peaks_to_params(peaks, rd_map: RangeDopplerMap) -> list[tuple[float, float]]:
    """Map ``(n_hat, m_hat)`` bins to delay (s) and signed Doppler (Hz)."""
    return [(n * rd_map.delay_bin, m * rd_map.doppler_bin) for n, m in peaks]


# ---------------------------------------------------------------------------
# composite pipelines


class ClutterFilter(TransformerMixin, BaseEstimator):
    """Stateless zero-Doppler notch usable in sklearn pipelines."""

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        return clutter_filter(X)


class MonostaticSensor(BaseEstimator):
    """BS sensing chain producing ``(tau, f_D, theta)`` per detected target.

    Parameters
    ----------
    cfg : OfdmConfig
    grid_step : float
        MUSIC scan step in degrees.
    threshold_db : float
        Detection threshold above the median periodogram level.
    min_separation : int
        Guard zone (Chebyshev bins) between accepted peaks.
    zero_pad : int or (int, int)
        Periodogram oversampling factors.
    max_sources : int or None
        Upper bound on the MDL estimate; ``None`` allows up to ``M_R - 1``.
    """

    def __init__(self, cfg: OfdmConfig | None = None, grid_step: float = 0.1, threshold_db: float = 12.0,
                 min_separation: int = 3, zero_pad=1, max_sources: int | None = None):
        self.cfg = cfg
        self.grid_step = grid_step
        self.threshold_db = threshold_db
        self.min_separation = min_separation
        self.zero_pad = zero_pad
        self.max_sources = max_sources

    def fit(self, rx, frame: TxFrame):
        cfg = self.cfg or OfdmConfig()
        rx = check_cube(rx, cfg)
        cube = clutter_filter(remove_data(rx, frame))
        active = cfg.active_mask
        R = spatial_covariance(cube, active)
        eig = np.sort(np.linalg.eigvalsh(R))[::-1]
        n_snap = cfg.n_active * cfg.M
        n_src = mdl_order(eig, n_snap)
        cap = cfg.M_R - 1 if self.max_sources is None else min(self.max_sources, cfg.M_R - 1)
        n_src = min(n_src, cap)
        angles = music_angles(R, n_src, self.grid_step, cfg.spacing_wavelengths)

        maps = [range_doppler(beamform(cube, th, cfg.spacing_wavelengths), cfg, self.zero_pad)
                for th in angles]
        estimates = []
        for i, (th, rd) in enumerate(zip(angles, maps)):
            peak = self._own_peak(i, maps, n_src)
            if peak is None:
                continue
            (tau, f_d), = peaks_to_params([peak], rd)
            estimates.append(BsEstimate(tau, f_d, th))

        self.eigenvalues_ = eig
        self.n_sources_ = n_src
        self.angles_ = angles
        self.maps_ = maps
        self.estimates_ = estimates
        return self

    def _own_peak(self, i, maps, n_src):
        # Beam i keeps the strongest peak that is not louder in another beam,
        # so sidelobe leakage from a neighbouring strong target is skipped.
        pr, pd = check_pad(self.zero_pad)
        sep = (self.min_separation * pr, self.min_separation * pd)
        cands = extract_peaks(maps[i], max(n_src, 1), sep, self.threshold_db)
        for n, m in cands:
            c = maps[i].column(m)
            own = maps[i].magnitude[n, c]
            if all(own >= other.magnitude[n, c] for j, other in enumerate(maps) if j != i):
                return (n, m)
        return cands[0] if cands else None

    def predict(self, rx, frame: TxFrame) -> list[BsEstimate]:
        return self.fit(rx, frame).estimates_


class BistaticSensor(BaseEstimator):
    """UE sensing chain producing ``(tau_U, f_D_U)`` per detected peak."""

    def __init__(self, cfg: OfdmConfig | None = None, max_targets: int = 8, threshold_db: float = 12.0,
                 min_separation: int = 3, zero_pad=1, dynamic_range_db: float | None = 15.0):
        self.cfg = cfg
        self.max_targets = max_targets
        self.threshold_db = threshold_db
        self.min_separation = min_separation
        self.zero_pad = zero_pad
        self.dynamic_range_db = dynamic_range_db

    def fit(self, rx, frame: TxFrame):
        cfg = self.cfg or OfdmConfig()
        rx = check_grid(rx, cfg)
        F = clutter_filter(remove_data(rx, frame))
        rd = range_doppler(F, cfg, self.zero_pad)
        pr, pd = check_pad(self.zero_pad)
        sep = (self.min_separation * pr, self.min_separation * pd)
        peaks = extract_peaks(rd, self.max_targets, sep, self.threshold_db, self.dynamic_range_db)
        self.map_ = rd
        self.peaks_ = peaks
        self.estimates_ = [UeEstimate(*p) for p in peaks_to_params(peaks, rd)]
        return self

    def predict(self, rx, frame: TxFrame) -> list[UeEstimate]:
        return self.fit(rx, frame).estimates_


def sense_bs(rx, frame: TxFrame, cfg: OfdmConfig, **params) -> list[BsEstimate]:
    return MonostaticSensor(cfg, **params).predict(rx, frame)


def sense_ue(rx, frame: TxFrame, cfg: OfdmConfig, max_targets: int = 8, **params) -> list[UeEstimate]:
    return BistaticSensor(cfg, max_targets=max_targets, **params).predict(rx, frame)


__all__ = [
    "BsEstimate", "UeEstimate", "RangeDopplerMap", "remove_data", "clutter_filter",
    "spatial_covariance", "mdl_order", "music_spectrum", "music_angles", "beamform",
    "range_doppler", "extract_peaks", "peaks_to_params", "ClutterFilter",
    "MonostaticSensor", "BistaticSensor", "sense_bs", "sense_ue",
]
