import numpy as np
import pytest

from cefura.ap import ApPayload
from cefura.codec import index_bits, phi_index, qpsk_modulate
from cefura.cpu import combine, decode_all, llr_from_symbols
from cefura.polar import crc_append, polar_code, polar_encode

B_F = 6
CODE = polar_code(64, 28, 2.0)  # 12 payload bits + 16 CRC bits


def symbols(payload):
    return qpsk_modulate(polar_encode(crc_append(payload), CODE))


def payload(S, est):
    return ApPayload(np.asarray(S), np.asarray(est), np.zeros((len(S), 1)))


def test_no_payloads_give_empty_set():
    out = decode_all(combine([]), CODE, 10, B_F)
    assert len(out) == 0 and out.messages.shape == (0, B_F + 12)


def test_combine_sums_and_counts():
    a = payload([3, 7], np.ones((32, 2)))
    b = payload([7], 2 * np.ones((32, 1)))
    c = combine([a, b])
    assert np.allclose(c.estimates[7], 3.0) and np.allclose(c.estimates[3], 1.0)
    assert c.support_count == {3: 1, 7: 2}
    avg = combine([a, b], normalize=True)
    assert np.allclose(avg.estimates[7], 1.5)


def test_combine_permutation_invariant():
    rng = np.random.default_rng(0)
    pays = [payload(rng.choice(20, 3, replace=False), rng.normal(size=(32, 3))) for _ in range(6)]
    c1, c2 = combine(pays), combine(pays[::-1])
    assert c1.estimates.keys() == c2.estimates.keys()
    for j in c1.estimates:
        assert np.allclose(c1.estimates[j], c2.estimates[j], atol=1e-12)


def test_single_user_recovered():
    rng = np.random.default_rng(1)
    m = rng.integers(0, 2, B_F + 12, dtype=np.uint8)
    j = phi_index(m[:B_F])
    s = symbols(m[B_F:])
    # two APs each see half the amplitude
    out = decode_all(combine([payload([j], 0.5 * s[:, None]), payload([j], 0.5 * s[:, None])]),
                     CODE, 5, B_F)
    assert len(out) == 1 and np.array_equal(out.messages[0], m)
    assert np.array_equal(out.messages[0][:B_F], index_bits(out.indices[0], B_F))


def test_colliding_users_yield_at_most_one_message():
    rng = np.random.default_rng(2)
    for _ in range(20):
        s = symbols(rng.integers(0, 2, 12, dtype=np.uint8)) + 0.9 * symbols(
            rng.integers(0, 2, 12, dtype=np.uint8))
        out = decode_all(combine([payload([5], s[:, None])]), CODE, 5, B_F)
        assert np.sum(out.indices == 5) <= 1


def test_k_cap_keeps_lowest_metrics():
    rng = np.random.default_rng(3)
    idx = [1, 2, 3, 4]
    cols = []
    for k, j in enumerate(idx):
        s = symbols(rng.integers(0, 2, 12, dtype=np.uint8))
        noise = 0.3 * k * (rng.normal(size=32) + 1j * rng.normal(size=32))
        cols.append(s + noise * (k > 0))
    out = decode_all(combine([payload(idx, np.stack(cols, axis=1))]), CODE, 2, B_F)
    assert len(out) <= 2
    full = decode_all(combine([payload(idx, np.stack(cols, axis=1))]), CODE, 10, B_F)
    best = np.sort(full.metrics)[: len(out)]
    assert np.allclose(np.sort(out.metrics), best)
    for msg, j in zip(out.messages, out.indices):
        assert phi_index(msg[:B_F]) == j


def test_llr_layout():
    llr = llr_from_symbols(np.array([1 - 2j, -3 + 0.5j]))
    assert np.allclose(llr, np.sqrt(2) * np.array([1, -2, -3, 0.5]))


def test_unused_helper_shape_guard():
    with pytest.raises(ValueError):
        decode_all(combine([payload([0], np.ones((31, 1)))]), CODE, 1, B_F)
