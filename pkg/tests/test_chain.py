import numpy as np
import pytest

from conftest import random_shaping, toy_config, unitary_toy
from cpsofdm.chain import (channel_frequency, equalizer_matrix, fde, frame,
                           modulate, receive_block, serialize, unbias_gains)
from cpsofdm.channel import (ChannelProfile, add_noise, awgn_profile,
                             channel_apply, draw_taps, exponential_profile,
                             load_profile)
from cpsofdm.config import WaveformConfig
from cpsofdm.dsp import QamConstellation, dft_matrix, qam_demap, qam_map
from cpsofdm.errors import ConfigError
from cpsofdm.pa import PaModel, load_pa_coeffs, pa_apply
from cpsofdm.precoder import data_columns, precode_frequency


def test_single_tone_block_layout():
    cfg = toy_config()
    s = np.zeros(8, dtype=complex)
    s[0] = 1.0
    x = modulate(s, cfg)
    n = np.arange(32)
    core_ref = np.exp(2j * np.pi * cfg.first_bin * n / 32) / np.sqrt(32)
    np.testing.assert_allclose(x[4:], core_ref, atol=1e-14)
    np.testing.assert_allclose(x[:4], x[-4:], atol=1e-15)   # prefix repeats tail


def test_zero_padded_block_tail():
    cfg = toy_config(gi_type="zp")
    x = modulate(np.ones(8, dtype=complex), cfg)
    assert np.all(x[-4:] == 0)
    assert len(x) == 36


def test_modulate_preserves_energy():
    cfg = toy_config(gi_type="none", gi_len=0)
    rng = np.random.default_rng(3)
    s = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    x = modulate(s, cfg)
    assert abs(np.sum(np.abs(x) ** 2) - np.sum(np.abs(s) ** 2)) <= 1e-12


def test_serialize_orders_blocks():
    blocks = np.array([[1, 2, 3], [4, 5, 6]])
    np.testing.assert_array_equal(serialize(blocks), [1, 2, 3, 4, 5, 6])
    np.testing.assert_array_equal(serialize(np.array([[7, 8]])), [7, 8])


def test_stream_matches_synthesis_double_sum(rng):
    # x[n] = Phi[<n - b*block_len>, :] @ d[b] with Phi = GI o IFFT o precoder
    from cpsofdm.metrics import synthesis_matrix
    cfg = toy_config()
    sh = random_shaping(rng, 2, 4)
    d = rng.standard_normal((2, 8)) + 1j * rng.standard_normal((2, 8))
    stream = serialize(modulate(np.stack([precode_frequency(v, sh) for v in d]), cfg))
    phi = synthesis_matrix(cfg, sh)
    ref = np.empty(2 * cfg.block_len, dtype=complex)
    for n in range(len(ref)):
        b, r = divmod(n, cfg.block_len)
        ref[n] = phi[r] @ d[b]
    np.testing.assert_allclose(stream, ref, atol=1e-12)


def test_frame_drops_ragged_tail():
    cfg = toy_config()
    stream = np.arange(2 * cfg.block_len + 5, dtype=float)
    blocks = frame(stream, cfg)
    assert blocks.shape == (2, cfg.block_len)
    np.testing.assert_array_equal(blocks[1, :3], [36, 37, 38])


def test_cp_removal_is_projection_matrix():
    cfg = toy_config()
    y = np.arange(36, dtype=complex)
    g_bar = np.hstack([np.zeros((32, 4)), np.eye(32)])
    ref = np.fft.fft(g_bar @ y, norm="ortho")[cfg.occupied_bins]
    np.testing.assert_allclose(receive_block(y, cfg), ref, atol=1e-12)


def test_zp_overlap_add_is_fold_matrix():
    cfg = toy_config(gi_type="zp")
    y = np.arange(36, dtype=complex) + 1j
    fold = np.hstack([np.eye(32), np.vstack([np.eye(4), np.zeros((28, 4))])])
    ref = np.fft.fft(fold @ y, norm="ortho")[cfg.occupied_bins]
    np.testing.assert_allclose(receive_block(y, cfg), ref, atol=1e-12)


def test_blocked_channel_matches_toeplitz_model(rng):
    # y[b] = T_low x[b] + T_up x[b-1] on a two-block toy stream
    h = np.array([0.8, 0.5j, -0.3])
    blk = 6
    x = rng.standard_normal(2 * blk) + 1j * rng.standard_normal(2 * blk)
    y = channel_apply(x, h, 0.0, rng)
    t_low = np.zeros((blk, blk), dtype=complex)
    for i in range(blk):
        for l in range(len(h)):
            if i - l >= 0:
                t_low[i, i - l] = h[l]
    t_up = np.zeros((blk, blk), dtype=complex)
    t_up[0, -2:] = [h[2], h[1]]
    t_up[1, -1] = h[2]
    x0, x1 = x[:blk], x[blk:]
    np.testing.assert_allclose(y[:blk], t_low @ x0, atol=1e-12)
    np.testing.assert_allclose(y[blk:], t_low @ x1 + t_up @ x0, atol=1e-12)


def test_identity_channel_passthrough(rng):
    x = rng.standard_normal(50) + 1j * rng.standard_normal(50)
    np.testing.assert_array_equal(channel_apply(x, [1.0], 0.0, rng), x)


def test_pure_delay_channel(rng):
    x = rng.standard_normal(20) + 1j * rng.standard_normal(20)
    y = channel_apply(x, [0.0, 1.0], 0.0, rng)
    np.testing.assert_allclose(y[1:], x[:-1], atol=1e-15)
    assert y[0] == 0


def test_channel_frequency_on_occupied_bins():
    cfg = toy_config()
    h = np.array([1.0, 0.4, 0.2j])
    full = np.fft.fft(np.r_[h, np.zeros(29)])
    np.testing.assert_allclose(channel_frequency(h, cfg),
                               full[cfg.occupied_bins], atol=1e-13)


def test_noise_whiteness_through_cp_receiver(rng):
    cfg = toy_config()
    n0 = 0.3
    blocks = add_noise(np.zeros((10000, cfg.block_len)), n0, rng)
    v = receive_block(blocks, cfg)
    cov = v.conj().T @ v / len(v)
    diag = np.real(np.diag(cov))
    assert np.all(np.abs(diag - n0) <= 0.05 * n0)
    off = cov - np.diag(np.diag(cov))
    assert np.abs(off).max() <= 0.05 * n0


def test_perfect_reconstruction_noiseless(rng):
    cfg, sh = unitary_toy()
    c = QamConstellation(16)
    n_blocks = 700    # > 1e4 symbols
    bits = rng.integers(0, 2, size=(n_blocks, cfg.n_active * 4))
    d = np.stack([qam_map(b, c) for b in bits])
    tx = modulate(np.stack([precode_frequency(v, sh) for v in d]), cfg)
    taps = draw_taps(exponential_profile(), rng)    # L=8 < gi_len=9
    y = frame(channel_apply(serialize(tx), taps, 0.0, rng), cfg)
    r = receive_block(y, cfg)
    cols = data_columns(sh, cfg)
    hf = channel_frequency(taps, cfg)
    dh = fde(r, hf, cols, n0=0.0, mode="zf")
    rx_bits = np.stack([qam_demap(v, c) for v in dh])
    assert np.array_equal(rx_bits, bits)


def test_zp_reconstruction_noiseless(rng):
    cfg = WaveformConfig(nfft=64, gi_len=9, gi_type="zp", n_branches=2,
                         branch_len=8, first_bin=10)
    sh = random_shaping(rng, 2, 8, energy=8.0)
    d = rng.standard_normal((40, 16)) + 1j * rng.standard_normal((40, 16))
    tx = modulate(np.stack([precode_frequency(v, sh) for v in d]), cfg)
    taps = draw_taps(exponential_profile(), rng)
    y = frame(channel_apply(serialize(tx), taps, 0.0, rng), cfg)
    r = receive_block(y, cfg)
    dh = fde(r, channel_frequency(taps, cfg), data_columns(sh, cfg), 0.0, mode="zf")
    np.testing.assert_allclose(dh, d, atol=1e-8)


def test_zf_on_flat_channel_is_adjoint(rng):
    cfg, sh = unitary_toy()
    cols = data_columns(sh, cfg)
    r = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    out = fde(r, np.ones(16, dtype=complex), cols, n0=0.0, mode="zf")
    np.testing.assert_allclose(out, cols.conj().T @ r, atol=1e-10)


def test_mmse_approaches_zf_at_vanishing_noise(rng):
    cfg, sh = unitary_toy()
    cols = data_columns(sh, cfg)
    hf = channel_frequency(draw_taps(exponential_profile(), rng), cfg)
    r = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    a = fde(r, hf, cols, n0=1e-12, mode="mmse")
    b = fde(r, hf, cols, n0=0.0, mode="zf")
    assert np.abs(a - b).max() <= 1e-6


def test_zf_inverts_effective_channel(rng):
    # D = S/2 data streams on a slot-gapped layout
    cfg = WaveformConfig(nfft=64, gi_len=9, gi_type="cp", n_branches=2,
                         branch_len=8, first_bin=10,
                         active_slots=tuple(range(4)))
    sh = random_shaping(rng, 2, 8, energy=8.0)
    cols = data_columns(sh, cfg)
    assert cols.shape == (16, 8)
    hf = channel_frequency(draw_taps(exponential_profile(), rng), cfg)
    q = equalizer_matrix(hf, cols, n0=0.0, mode="zf")
    np.testing.assert_allclose(q @ (hf[:, None] * cols), np.eye(8), atol=1e-8)


def test_zf_unbias_gains_are_unity(rng):
    cfg, sh = unitary_toy()
    hf = channel_frequency(draw_taps(exponential_profile(), rng), cfg)
    g = unbias_gains(hf, data_columns(sh, cfg), n0=0.0, mode="zf")
    np.testing.assert_allclose(g, np.ones(16), atol=1e-10)


def test_mmse_gains_shrink_toward_origin(rng):
    cfg, sh = unitary_toy()
    hf = channel_frequency(draw_taps(exponential_profile(), rng), cfg)
    g = unbias_gains(hf, data_columns(sh, cfg), n0=0.5, mode="mmse")
    assert np.all(g > 0) and np.all(g < 1)


def test_mmse_beats_zf_on_fading_draws(rng):
    cfg, sh = unitary_toy()
    cols = data_columns(sh, cfg)
    prof = exponential_profile()
    n0 = 0.1
    wins = 0
    for _ in range(100):
        taps = draw_taps(prof, rng)
        hf = channel_frequency(taps, cfg)
        d = rng.standard_normal((40, 16)) + 1j * rng.standard_normal((40, 16))
        d /= np.sqrt(2)   # unit symbol energy, matching the mmse regularizer
        tx = modulate(np.stack([precode_frequency(v, sh) for v in d]), cfg)
        y = frame(channel_apply(serialize(tx), taps, n0, rng), cfg)
        r = receive_block(y, cfg)
        errs = {mode: np.mean(np.abs(fde(r, hf, cols, n0, mode=mode) - d) ** 2)
                for mode in ("zf", "mmse")}
        wins += errs["mmse"] <= errs["zf"]
    assert wins >= 95


def test_identity_pa_is_bit_exact(rng):
    x = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    assert np.array_equal(pa_apply(x, PaModel()), x)


def test_rapp_with_huge_saturation_is_transparent(rng):
    x = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    y = pa_apply(x, PaModel(kind="rapp", smoothness=2.0, sat_amplitude=1e9))
    assert np.abs(y - x).max() <= 1e-9


def test_rapp_amam_closed_form_on_constant_envelope():
    a = 0.8
    x = a * np.exp(2j * np.pi * np.arange(32) / 32)
    y = pa_apply(x, PaModel(kind="rapp", smoothness=2.0, sat_amplitude=1.0,
                            ibo_db=3.0))
    expect = a / (1.0 + a ** 4) ** 0.25
    np.testing.assert_allclose(np.abs(y), expect, atol=1e-12)
    # phases pass through untouched
    np.testing.assert_allclose(np.angle(y), np.angle(x), atol=1e-12)


def test_rapp_compression_increases_with_drive():
    x = np.exp(2j * np.pi * np.arange(64) / 64)
    soft = pa_apply(3.0 * x, PaModel(kind="rapp", sat_amplitude=1.0))
    # deep in saturation the output amplitude pins near sat
    assert np.all(np.abs(soft) < 1.05)
    assert np.all(np.abs(soft) > 0.95)


def test_linear_polynomial_with_zero_backoff_is_identity(rng):
    x = rng.standard_normal(40) + 1j * rng.standard_normal(40)
    y = pa_apply(x, PaModel(kind="polynomial", coeffs=(1.0,), ibo_db=0.0))
    np.testing.assert_allclose(y, x, atol=1e-12)


def test_polynomial_phase_compensation_rotates_output(rng):
    x = rng.standard_normal(40) + 1j * rng.standard_normal(40)
    base = pa_apply(x, PaModel(kind="polynomial", coeffs=(1.0, -0.1), ibo_db=3.0))
    rot = pa_apply(x, PaModel(kind="polynomial", coeffs=(1.0, -0.1), ibo_db=3.0,
                              phase_comp=0.7))
    np.testing.assert_allclose(rot, base * np.exp(0.7j), atol=1e-12)


def test_pa_coeff_file_round_trip(tmp_path):
    path = tmp_path / "coeffs.json"
    path.write_text("[[1.0, 0.0], [0.0, -0.25]]")
    assert load_pa_coeffs(path) == (1.0 + 0.0j, -0.25j)
    with pytest.raises(ConfigError):
        load_pa_coeffs(tmp_path / "missing.json")


def test_unknown_pa_kind_rejected():
    with pytest.raises(ConfigError):
        PaModel(kind="saleh")


def test_profile_powers_normalized():
    prof = ChannelProfile(np.array([2.0, 1.0, 1.0]))
    np.testing.assert_allclose(prof.powers, [0.5, 0.25, 0.25])
    assert awgn_profile().n_taps == 1


def test_exponential_profile_decay():
    prof = exponential_profile(memory=2, decay_db=3.0)
    ratio = prof.powers[1] / prof.powers[0]
    np.testing.assert_allclose(ratio, 10 ** -0.3, atol=1e-12)


def test_profile_file_rounds_delays_and_merges(tmp_path):
    path = tmp_path / "prof.json"
    # 1 Msample/s: 500 ns -> tap 1 twice (merged), 2100 ns -> tap 2
    path.write_text("[[0, 0.0], [500, -3.0], [520, -3.0], [2100, -6.0]]")
    prof = load_profile(path, 1e6)
    assert prof.n_taps == 3
    lin = np.array([1.0, 2 * 10 ** -0.3, 10 ** -0.6])
    np.testing.assert_allclose(prof.powers, lin / lin.sum(), atol=1e-12)


def test_draw_taps_match_profile_statistically(rng):
    prof = exponential_profile(memory=3)
    taps = np.stack([draw_taps(prof, rng) for _ in range(4000)])
    mean_power = np.mean(np.abs(taps) ** 2, axis=0)
    np.testing.assert_allclose(mean_power, prof.powers, rtol=0.1)


def test_add_noise_variance(rng):
    x = np.zeros(200000)
    y = add_noise(x, 0.25, rng)
    assert abs(np.mean(np.abs(y) ** 2) - 0.25) <= 0.01
    assert np.array_equal(add_noise(x, 0.0, rng), x)
