import numpy as np
import pytest

from coopisac.ofdm import OfdmConfig, build_frame, resolutions


def test_default_numerology(cfg):
    assert (cfg.fc, cfg.delta_f, cfg.N, cfg.M, cfg.N_cp) == (24e9, 120e3, 617, 512, 149)
    assert (cfg.n_guard_low, cfg.n_guard_high, cfg.M_T, cfg.M_R) == (9, 8, 16, 16)
    assert cfg.antenna_spacing == pytest.approx(cfg.wavelength / 2)


def test_symbol_duration(cfg):
    assert cfg.T_s == pytest.approx(766 / (617 * 120e3), rel=1e-12)
    assert cfg.T_s * 1e6 == pytest.approx(10.345759, abs=1e-6)


def test_bin_sizes(cfg):
    res = resolutions(cfg)
    assert res["range_bin"] == pytest.approx(2.024530, abs=1e-6)
    assert res["velocity_bin"] == pytest.approx(1.179091, abs=1e-6)
    assert res["angle_grid"] == 0.1


def test_active_mask(cfg):
    mask = cfg.active_mask
    assert mask.sum() == cfg.n_active == 600
    assert not mask[:9].any() and not mask[-8:].any()


def test_frame_layout(cfg):
    f = build_frame(cfg, seed=7)
    assert f.data.shape == (cfg.N, cfg.M)
    np.testing.assert_allclose(np.abs(f.data[cfg.active_mask]), 1.0)
    assert not np.any(f.data[~cfg.active_mask])
    phases = np.angle(f.data[cfg.active_mask]) / (np.pi / 4)
    assert set(np.round(phases).astype(int).ravel()) <= {-3, -1, 1, 3}
    assert f.tensor().shape == (cfg.M_T, cfg.N, cfg.M)


def test_frame_seeded(cfg):
    a, b = build_frame(cfg, 3), build_frame(cfg, 3)
    np.testing.assert_array_equal(a.data, b.data)
    assert not np.array_equal(a.data, build_frame(cfg, 4).data)


def test_beam_modes(cfg):
    np.testing.assert_allclose(np.linalg.norm(build_frame(cfg, 0, "uniform").weights), 1.0)
    assert np.count_nonzero(build_frame(cfg, 0, "omni").weights) == 1
    with pytest.raises(ValueError):
        build_frame(cfg, 0, "pencil")


def test_config_validation():
    with pytest.raises(ValueError):
        OfdmConfig(N=10, n_guard_low=5, n_guard_high=5)
    with pytest.raises(ValueError):
        OfdmConfig().with_overrides(bogus=1)
    assert OfdmConfig().with_overrides(M=64).M == 64
