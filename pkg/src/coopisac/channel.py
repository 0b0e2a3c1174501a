"""Frequency-domain synthesis of the received BS cube and UE grid.

Signals are generated directly after OFDM demodulation: every path adds a
per-subcarrier phase ramp (delay) times a per-symbol phase ramp (Doppler) to
the resource grid. This is exact as long as all delays fit inside the cyclic
prefix and Doppler is constant over one symbol.
"""
from __future__ import annotations

import numpy as np

from . import geometry as geo
from .ofdm import OfdmConfig, TxFrame

# Independent RNG streams derived from one integer seed.
_STREAM_BS_GAIN, _STREAM_BS_NOISE, _STREAM_UE_GAIN, _STREAM_UE_NOISE = 11, 12, 21, 22


def steering(theta, n_elements: int, spacing: float, wavelength: float) -> np.ndarray:
    """ULA steering vector(s), element ``i`` = ``exp(-j 2 pi d i sin(theta) / lambda)``.

    A scalar ``theta`` (degrees) yields shape ``(n_elements,)``; an array of
    angles yields ``(n_elements, n_angles)``.
    """
    if n_elements < 1:
        raise ValueError("n_elements must be >= 1")
    th = np.radians(np.asarray(theta, dtype=float))
    i = np.arange(n_elements)
    phase = -2j * np.pi * spacing / wavelength * np.multiply.outer(i, np.sin(th))
    return np.exp(phase)


def path_amplitude(kind: str, r1: float, r2: float, strength: float, seed=None) -> complex:
    """Complex path gain with random phase.

    ``|alpha| = sqrt(rcs) / (r1 r2)`` for targets and ``coeff / (r1 r2)`` for
    static scatterers. For monostatic paths pass ``r2 = r1``.
    """
    if not (r1 > 0 and r2 > 0):
        raise geo.GeometryError("path legs must have positive length")
    if kind == "target":
        mag = np.sqrt(strength) / (r1 * r2)
    elif kind == "scatterer":
        mag = abs(strength) / (r1 * r2)
    else:
        raise ValueError(f"unknown path kind {kind!r}")
    phase = np.random.default_rng(seed).uniform(0.0, 2 * np.pi)
    return complex(mag * np.exp(1j * phase))


def _tx_gain(cfg: OfdmConfig, frame: TxFrame, theta: float) -> complex:
    a_t = steering(theta, cfg.M_T, cfg.antenna_spacing, cfg.wavelength)
    return complex(a_t @ frame.weights)


def _noise(rng, shape, power, active_mask) -> np.ndarray:
    n = np.sqrt(power / 2) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    n[..., ~active_mask, :] = 0.0
    return n


def _noise_power(ref_power: float, snr_db: float) -> float:
    return ref_power / 10 ** (snr_db / 10)


def synth_bs_cube(scenario: geo.Scenario, cfg: OfdmConfig, frame: TxFrame,
                  snr_db: float | None = 0.0, seed=None) -> np.ndarray:
    """Received BS tensor ``(M_R, N, M)`` after OFDM demodulation.

    ``snr_db`` is per receive element and resource element, referenced to
    the strongest target path; ``None`` disables noise.
    """
    seed = scenario.seed if seed is None else seed
    rng = np.random.default_rng([seed, _STREAM_BS_GAIN])
    k = np.arange(cfg.N)
    m = np.arange(cfg.M)
    H = np.zeros((cfg.M_R, cfg.N, cfg.M), dtype=complex)

    ref_power = 0.0
    for t in scenario.targets:
        r = geo.monostatic_range(t.position)
        theta = geo.aoa_from_bs(t.position)
        g = path_amplitude("target", r, r, t.rcs, rng) * _tx_gain(cfg, frame, theta)
        ref_power = max(ref_power, abs(g) ** 2)
        a_r = steering(theta, cfg.M_R, cfg.antenna_spacing, cfg.wavelength)
        tau = geo.path_delay_mono(t.position)
        f_d = geo.doppler_mono(t.position, t.velocity, cfg.fc)
        grid = np.outer(np.exp(-2j * np.pi * k * cfg.delta_f * tau),
                        np.exp(2j * np.pi * f_d * m * cfg.T_s))
        H += (g * a_r)[:, None, None] * grid[None, :, :]

    if scenario.scatterers:
        static = np.zeros((cfg.M_R, cfg.N), dtype=complex)
        for s in scenario.scatterers:
            r = geo.monostatic_range(s.position)
            theta = geo.aoa_from_bs(s.position)
            g = path_amplitude("scatterer", r, r, s.scatter_coefficient, rng) * _tx_gain(cfg, frame, theta)
            a_r = steering(theta, cfg.M_R, cfg.antenna_spacing, cfg.wavelength)
            static += np.outer(g * a_r, np.exp(-2j * np.pi * k * cfg.delta_f * 2 * r / geo.C0))
        H += static[:, :, None]

    Y = H * frame.data[None, :, :]
    if snr_db is not None:
        power = _noise_power(ref_power if ref_power > 0 else 1.0, snr_db)
        Y += _noise(np.random.default_rng([seed, _STREAM_BS_NOISE]), Y.shape, power, cfg.active_mask)
    return Y


def synth_ue_grid(scenario: geo.Scenario, cfg: OfdmConfig, frame: TxFrame,
                  snr_db: float | None = 10.0, seed=None) -> np.ndarray:
    """Received single-antenna UE grid ``(N, M)`` after OFDM demodulation."""
    seed = scenario.seed if seed is None else seed
    rng = np.random.default_rng([seed, _STREAM_UE_GAIN])
    q_u = scenario.ue_position
    k = np.arange(cfg.N)
    m = np.arange(cfg.M)
    H = np.zeros((cfg.N, cfg.M), dtype=complex)

    ref_power = 0.0
    for t in scenario.targets:
        r_b = geo.monostatic_range(t.position)
        r_u = geo.monostatic_range(t.position, q_u)
        theta = geo.aoa_from_bs(t.position)
        g = path_amplitude("target", r_b, r_u, t.rcs, rng) * _tx_gain(cfg, frame, theta)
        ref_power = max(ref_power, abs(g) ** 2)
        tau = geo.path_delay_bi(t.position, q_u)
        f_d = geo.doppler_bi(t.position, t.velocity, q_u, cfg.fc)
        H += g * np.outer(np.exp(-2j * np.pi * k * cfg.delta_f * tau),
                          np.exp(2j * np.pi * f_d * m * cfg.T_s))

    if scenario.scatterers:
        static = np.zeros(cfg.N, dtype=complex)
        for s in scenario.scatterers:
            r_b = geo.monostatic_range(s.position)
            r_u = geo.monostatic_range(s.position, q_u)
            theta = geo.aoa_from_bs(s.position)
            g = path_amplitude("scatterer", r_b, r_u, s.scatter_coefficient, rng) * _tx_gain(cfg, frame, theta)
            static += g * np.exp(-2j * np.pi * k * cfg.delta_f * (r_b + r_u) / geo.C0)
        H += static[:, None]

    Y = H * frame.data
    if snr_db is not None:
        power = _noise_power(ref_power if ref_power > 0 else 1.0, snr_db)
        Y += _noise(np.random.default_rng([seed, _STREAM_UE_NOISE]), Y.shape, power, cfg.active_mask)
    return Y
