import binascii

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cefura import _core_py
from cefura._kernels import BACKEND, scl_decode_paths
from cefura.polar import (CrcSpec, PolarCodeSpec, construct_frozen_set, crc_append, crc_bits,
                          crc_check, crc_register, ga_means, polar_code, polar_encode,
                          scl_decode)
from oracles import (crc_long_division, genie_bit_error_rates, ml_correlation_decode,
                     polar_encode_matrix)


# --- CRC ---------------------------------------------------------------------

def test_crc_matches_long_division():
    rng = np.random.default_rng(11)
    msgs = rng.integers(0, 2, size=(1000, 85), dtype=np.uint8)
    got = crc_bits(msgs)
    for m, c in zip(msgs, got):
        assert np.array_equal(c, crc_long_division(m))


def test_crc_matches_crc_hqx_on_bytes():
    rng = np.random.default_rng(12)
    for _ in range(50):
        data = rng.integers(0, 256, size=int(rng.integers(1, 12)), dtype=np.uint8)
        bits = np.unpackbits(data)
        value = int(crc_register(bits))
        assert value == binascii.crc_hqx(data.tobytes(), 0)


def test_crc_known_vector():
    # CRC-16/XMODEM check value over ASCII "123456789"
    bits = np.unpackbits(np.frombuffer(b"123456789", dtype=np.uint8))
    assert int(crc_register(bits)) == 0x31C3


def test_crc_zero_message_gives_zero():
    assert not crc_bits(np.zeros(85, dtype=np.uint8)).any()


def test_crc_detects_every_single_bit_flip():
    rng = np.random.default_rng(13)
    word = crc_append(rng.integers(0, 2, 85, dtype=np.uint8))
    assert crc_check(word)
    flips = np.tile(word, (len(word), 1))
    flips[np.arange(len(word)), np.arange(len(word))] ^= 1
    assert not crc_check(flips).any()


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=1, max_size=120))
def test_crc_is_linear(bits):
    a = np.array(bits, dtype=np.uint8)
    b = np.roll(a, 1)
    # init = xorout = 0, so the CRC is linear over GF(2)
    assert np.array_equal(crc_bits(a ^ b), crc_bits(a) ^ crc_bits(b))


def test_crc_spec_other_polynomial():
    spec = CrcSpec(width=8, polynomial=0x07)
    bits = np.unpackbits(np.frombuffer(b"123456789", dtype=np.uint8))
    assert int(crc_register(bits, spec)) == 0xF4  # CRC-8/SMBUS check value


# --- construction ------------------------------------------------------------

@pytest.mark.parametrize("n_c,B_c,snr,expected", [
    (8, 4, 0.0, [0, 1, 2, 4]),
    (16, 8, 2.0, [0, 1, 2, 3, 4, 5, 6, 8]),
])
def test_frozen_set_small_codes(n_c, B_c, snr, expected):
    assert construct_frozen_set(n_c, B_c, snr).tolist() == expected


@pytest.mark.parametrize("n_c,B_c,snr", [(8, 4, 0.0), (16, 8, 2.0)])
def test_frozen_set_agrees_with_genie_monte_carlo(n_c, B_c, snr):
    rates = genie_bit_error_rates(n_c, snr, 100_000, np.random.default_rng(5))
    worst = np.sort(np.argsort(-rates, kind="stable")[: n_c - B_c])
    assert worst.tolist() == construct_frozen_set(n_c, B_c, snr).tolist()


def test_ga_means_first_stage():
    # one level: check node mean below the channel mean, variable node doubles it
    m0 = 4 * 10 ** 0.2
    means = ga_means(2, 2.0)
    assert means[1] == pytest.approx(2 * m0)
    assert 0 < means[0] < m0


def test_frozen_set_size_and_reliability_monotone():
    code = polar_code(512, 101, 2.0)
    assert len(code.frozen_set) == 411
    assert 511 in code.info_set and 0 in code.frozen_set
    means = ga_means(512, 2.0)
    assert means[code.info_set].min() >= means[code.frozen_set].max()


def test_polar_code_spec_validation():
    with pytest.raises(ValueError):
        PolarCodeSpec(12, 4, np.arange(8))
    with pytest.raises(ValueError):
        PolarCodeSpec(8, 4, np.array([0, 0, 1, 2]))
    with pytest.raises(ValueError):
        construct_frozen_set(8, 9)


# --- encoder -----------------------------------------------------------------

@pytest.mark.parametrize("n_c,B_c", [(8, 4), (16, 8), (16, 11)])
def test_encoder_matches_generator_matrix(n_c, B_c):
    code = PolarCodeSpec.build(n_c, B_c, 0.0)
    rng = np.random.default_rng(n_c)
    for _ in range(200):
        info = rng.integers(0, 2, B_c, dtype=np.uint8)
        u = np.zeros(n_c, dtype=np.uint8)
        u[code.info_set] = info
        assert np.array_equal(polar_encode(info, code), polar_encode_matrix(u))


def test_encoder_batched_and_involution():
    code = polar_code(512, 101)
    rng = np.random.default_rng(3)
    info = rng.integers(0, 2, (20, 101), dtype=np.uint8)
    cw = polar_encode(info, code)
    assert cw.shape == (20, 512)
    for row, i in zip(cw, info):
        assert np.array_equal(row, polar_encode(i, code))
    # F^{(x)n} is its own inverse over GF(2)
    from cefura._kernels import polar_transform
    u = np.zeros((20, 512), dtype=np.uint8)
    u[:, code.info_set] = info
    assert np.array_equal(polar_transform(cw), u)


def test_encoder_rejects_wrong_length():
    with pytest.raises(ValueError):
        polar_encode(np.zeros(5, dtype=np.uint8), polar_code(8, 4, 0.0))


# --- SCL decoder -------------------------------------------------------------

def _bpsk_llr(cw, scale=10.0):
    return scale * (1.0 - 2.0 * np.asarray(cw, dtype=float))


def test_scl_noiseless_round_trip():
    code = polar_code(512, 101)
    rng = np.random.default_rng(21)
    msgs = rng.integers(0, 2, (1000, 85), dtype=np.uint8)
    cws = polar_encode(crc_append(msgs), code)
    for m, cw in zip(msgs, cws):
        m_hat, ok, metric = scl_decode(_bpsk_llr(cw), code)
        assert ok and metric == 0.0
        assert np.array_equal(m_hat, m)


@pytest.mark.parametrize("list_size", [1, 4])
def test_scl_matches_ml_with_full_list(list_size):
    # with list >= 2^k every path survives and min-sum metrics are exact correlation distances
    code = PolarCodeSpec.build(16, 5, 1.0)
    rng = np.random.default_rng(31)
    frozen = code.frozen_mask
    for _ in range(100):
        cw = polar_encode(rng.integers(0, 2, 5, dtype=np.uint8), code)
        llr = _bpsk_llr(cw, 2.0) + rng.normal(0, 1.5, 16)
        u_ml, d_ml, dists = ml_correlation_decode(llr, code.info_set, 16)
        u, pm = scl_decode_paths(llr, frozen, 32)
        assert np.allclose(np.sort(pm), np.sort(dists))
        assert pm[0] == pytest.approx(d_ml)
        u_small, pm_small = scl_decode_paths(llr, frozen, list_size)
        assert pm_small[0] >= d_ml - 1e-12


def test_scl_scale_invariant():
    code = polar_code(64, 20, 2.0)
    rng = np.random.default_rng(41)
    frozen = code.frozen_mask
    for _ in range(50):
        llr = rng.normal(0, 3, 64)
        u1, m1 = scl_decode_paths(llr, frozen, 8)
        u2, m2 = scl_decode_paths(4.0 * llr, frozen, 8)
        assert np.array_equal(u1, u2)
        assert np.allclose(4.0 * m1, m2)


def test_scl_zero_llr_rarely_passes_crc():
    code = polar_code(512, 101)
    # exact zeros tie towards bit 0, and the all-zero word is a valid codeword
    m_hat, ok, metric = scl_decode(np.zeros(512), code)
    assert ok and metric == 0.0 and not m_hat.any()
    rng = np.random.default_rng(51)
    hits = sum(scl_decode(rng.normal(0, 1e-3, 512), code)[1] for _ in range(300))
    # eight list paths against a 16-bit CRC: about 8 / 65536 per attempt
    assert hits <= 2


def test_scl_returns_sorted_list_and_validates():
    code = polar_code(32, 10, 2.0)
    u, pm = scl_decode_paths(np.random.default_rng(1).normal(size=32), code.frozen_mask, 8)
    assert u.shape == (8, 32) and np.all(np.diff(pm) >= 0)
    assert not u[:, code.frozen_set].any()
    with pytest.raises(ValueError):
        scl_decode(np.zeros(31), code)
    with pytest.raises(ValueError):
        scl_decode(np.zeros(32), code, list_size=0)


def test_backends_agree_bit_for_bit():
    if BACKEND != "compiled":
        pytest.skip("compiled extension not built")
    from cefura import _core
    code = polar_code(128, 40, 2.0)
    rng = np.random.default_rng(61)
    for trial in range(40):
        cw = polar_encode(rng.integers(0, 2, 40, dtype=np.uint8), code)
        llr = _bpsk_llr(cw, 1.0) + rng.normal(0, 1.2, 128)
        if trial % 7 == 0:
            llr[rng.integers(0, 128, 10)] = 0.0  # exercise ties
        for L in (1, 3, 8):
            u_c, m_c = _core.scl_decode_paths(llr, code.frozen_mask, L)
            u_p, m_p = _core_py.scl_decode_paths(llr, code.frozen_mask, L)
            assert np.array_equal(u_c, u_p)
            assert np.array_equal(m_c, m_p)
    u = rng.integers(0, 2, (5, 128), dtype=np.uint8)
    assert np.array_equal(_core.polar_transform(u), _core_py.polar_transform(u))
