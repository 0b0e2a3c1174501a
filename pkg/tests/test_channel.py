import numpy as np
import pytest

from coopisac import geometry as geo
from coopisac.channel import path_amplitude, steering, synth_bs_cube, synth_ue_grid
from coopisac.ofdm import OfdmConfig, build_frame

SMALL = OfdmConfig(N=64, M=32, n_guard_low=2, n_guard_high=2, M_T=4, M_R=4)
Q, V = (59.92, 25.06), (-15.0, 12.0)


def _scene(targets=((Q, V),), scatterers=(), ue=(80.8, 59.0), seed=0):
    return geo.Scenario(ue, [geo.TargetTruth(q, v) for q, v in targets],
                        [geo.ScattererTruth(p, c) for p, c in scatterers], seed=seed)


def test_steering_shapes_and_broadside():
    a = steering(0.0, 8, 0.5, 1.0)
    assert a.shape == (8,)
    np.testing.assert_allclose(a, 1.0)
    assert steering(np.array([0.0, 30.0, -10.0]), 8, 0.5, 1.0).shape == (8, 3)


def test_steering_phase_progression():
    a = steering(30.0, 4, 0.5, 1.0)
    np.testing.assert_allclose(a[1:] / a[:-1], np.exp(-1j * np.pi * 0.5))


def test_path_amplitude_magnitude():
    r = np.hypot(*Q)
    a = path_amplitude("target", r, r, 3.5, seed=0)
    assert abs(a) == pytest.approx(4.434914e-4, rel=1e-6)
    assert abs(path_amplitude("scatterer", 10.0, 20.0, 2.0, seed=0)) == pytest.approx(0.01)
    with pytest.raises(ValueError):
        path_amplitude("bird", 1.0, 1.0, 1.0)
    with pytest.raises(geo.GeometryError):
        path_amplitude("target", 0.0, 1.0, 1.0)


def test_bs_cube_phase_ramps():
    frame = build_frame(SMALL, 1)
    Y = synth_bs_cube(_scene(), SMALL, frame, snr_db=None)
    act = SMALL.active_mask
    H = Y[:, act, :] / frame.data[None, act, :]
    tau = 2 * np.hypot(*Q) / geo.C0
    f_d = 2 * SMALL.fc * geo.radial_velocity_bs(Q, V) / geo.C0
    np.testing.assert_allclose(H[:, 1:, :] / H[:, :-1, :], np.exp(-2j * np.pi * SMALL.delta_f * tau), rtol=1e-9)
    np.testing.assert_allclose(H[:, :, 1:] / H[:, :, :-1], np.exp(2j * np.pi * f_d * SMALL.T_s), rtol=1e-9)
    theta = np.radians(geo.aoa_from_bs(Q))
    np.testing.assert_allclose(H[1:] / H[:-1], np.exp(-1j * np.pi * np.sin(theta)), rtol=1e-9)


def test_ue_grid_phase_ramps():
    frame = build_frame(SMALL, 1)
    ue = (80.8, 59.0)
    Y = synth_ue_grid(_scene(), SMALL, frame, snr_db=None)
    act = SMALL.active_mask
    H = Y[act] / frame.data[act]
    tau = geo.bistatic_range_sum(Q, ue) / geo.C0
    f_d = 2 * SMALL.fc * geo.bistatic_velocity(Q, V, ue) / geo.C0
    np.testing.assert_allclose(H[1:] / H[:-1], np.exp(-2j * np.pi * SMALL.delta_f * tau), rtol=1e-9)
    np.testing.assert_allclose(H[:, 1:] / H[:, :-1], np.exp(2j * np.pi * f_d * SMALL.T_s), rtol=1e-9)


def test_scatterers_are_static():
    frame = build_frame(SMALL, 1)
    sc = _scene(targets=(), scatterers=[((30.0, 5.0), 1.0), ((50.0, -20.0), 2.0)])
    H = synth_bs_cube(sc, SMALL, frame, snr_db=None) / np.where(frame.data == 0, 1, frame.data)
    np.testing.assert_allclose(H, H[..., :1].repeat(SMALL.M, axis=-1), atol=1e-15)


def test_guards_are_empty_and_noise_level():
    frame = build_frame(SMALL, 1)
    Y0 = synth_ue_grid(_scene(), SMALL, frame, snr_db=None)
    Y = synth_ue_grid(_scene(), SMALL, frame, snr_db=0.0)
    assert not np.any(Y[~SMALL.active_mask])
    noise = (Y - Y0)[SMALL.active_mask]
    sig = np.abs(Y0[SMALL.active_mask]) ** 2
    assert np.mean(np.abs(noise) ** 2) / sig.mean() == pytest.approx(1.0, rel=0.1)


def test_seeded_determinism():
    frame = build_frame(SMALL, 1)
    a = synth_bs_cube(_scene(seed=5), SMALL, frame)
    b = synth_bs_cube(_scene(seed=5), SMALL, frame)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, synth_bs_cube(_scene(seed=6), SMALL, frame))
