import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ec_oracles import brute_oracle, rank_oracle
from imucal import ec_codec as ec
from imucal.errors import InconsistentParityError


def _payloads(n, seed=0):
    rng = np.random.default_rng(seed)
    return [bytes(rng.integers(0, 256, 6, dtype=np.uint8)) for _ in range(n)]


def _xor(*chunks):
    out = 0
    for c in chunks:
        out ^= ec.to_int(c)
    return ec.to_bytes(out)


# -- encoder -------------------------------------------------------------------


def test_window_one_repeats_previous_payload():
    g = _payloads(5)
    pk = ec.encode_stream(g, 1)
    assert pk[0].parity == bytes(6)
    assert [p.parity for p in pk[1:]] == g[:-1]


def test_window_three_example():
    A, B, C, D, E = _payloads(5)
    pk = ec.encode_stream([A, B, C, D, E], 3)
    assert [p.parity for p in pk] == [bytes(6), A, _xor(A, B), _xor(A, B, C), _xor(B, C, D)]
    assert [p.packet_index for p in pk] == list(range(5))


@pytest.mark.parametrize("window", [1, 2, 4, 8, 16])
def test_array_encoder_matches_streaming(window):
    g = _payloads(300, seed=window)
    arr = ec.encode_array(np.array([ec.to_int(p) for p in g], dtype=np.uint64), window)
    assert [ec.to_bytes(int(v)) for v in arr] == [p.parity for p in ec.encode_stream(g, window)]


@settings(max_examples=1000)
@given(st.integers(1, 16), st.lists(st.integers(0, 2**48 - 1), max_size=60))
def test_encoder_state_invariant(window, values):
    enc = ec.XorWindowEncoder(window)
    for i, v in enumerate(values):
        parity = enc.push(v)
        assert parity == ec.to_int(_xor(*[ec.to_bytes(u) for u in values[max(0, i - window) : i]])) if i else parity == 0
        # the running XOR always equals the XOR of the ring
        assert enc.running == enc.ring_xor()
        assert enc.ring[(enc.pos - 1) % window] == v


def test_window_bounds():
    for bad in (0, 17):
        with pytest.raises(ValueError):
            ec.XorWindowEncoder(bad)


# -- decoder -------------------------------------------------------------------


@pytest.mark.parametrize("window", [1, 2, 4, 8])
def test_every_single_loss_in_1000_packets(window):
    g = _payloads(1000, seed=window)
    pk = ec.encode_stream(g, window)
    for lost in range(1000):
        rx = pk[:lost] + pk[lost + 1 :]
        out, missing = ec.decode_stream(rx, window, 1000)
        if lost == 999:
            # nothing after the last packet carries it
            assert missing == [999]
        else:
            assert missing == []
            assert out[lost] == g[lost]


def test_oracles_agree():
    for n in range(1, 9):
        for window in range(1, 5):
            for pattern in range(1 << n):
                lost = {i for i in range(n) if pattern >> i & 1}
                assert rank_oracle(n, window, lost) == brute_oracle(n, window, lost)


def test_all_loss_patterns_up_to_twelve():
    for n in range(1, 13):
        g = _payloads(n, seed=n)
        for window in range(1, 5):
            pk = ec.encode_stream(g, window)
            for pattern in range(1 << n):
                lost = {i for i in range(n) if pattern >> i & 1}
                rx = [p for p in pk if p.packet_index not in lost]
                out, missing = ec.decode_stream(rx, window, n)
                recovered = lost - set(missing)
                assert recovered == rank_oracle(n, window, lost), (n, window, sorted(lost))
                assert all(out[i] == g[i] for i in out)


def test_corrupted_parity_is_detected():
    g = _payloads(20)
    pk = ec.encode_stream(g, 4)
    bad = ec.EcPacket(10, pk[10].payload, bytes(6))
    with pytest.raises(InconsistentParityError):
        ec.decode_stream(pk[:10] + [bad] + pk[11:], 4)


def test_decode_is_idempotent():
    g = _payloads(200)
    pk = ec.encode_stream(g, 4)
    rx = ec.channel_simulate(pk, ec.LossModel("iid", 0.2), seed=1)
    a = ec.decode_stream(rx, 4, 200)
    assert ec.decode_stream(rx, 4, 200) == a


# -- channel and payloads ----------------------------------------------------------


def test_lossless_channel():
    pk = ec.encode_stream(_payloads(100), 4)
    assert ec.channel_simulate(pk, ec.LossModel("iid", 0.0), seed=3) == pk


def test_iid_loss_rate():
    mask = ec.drop_mask(100_000, ec.LossModel("iid", 0.05), seed=0)
    assert mask.mean() == pytest.approx(0.05, abs=0.01)


def test_burst_loss():
    mask = ec.drop_mask(1000, ec.LossModel("burst", 0.01, 5), seed=2)
    runs = np.diff(np.flatnonzero(np.diff(np.concatenate([[0], mask, [0]]))))[::2]
    assert runs.min() >= 5


def test_channel_seed_determinism():
    m = ec.LossModel.parse("burst:3:0.05")
    assert np.array_equal(ec.drop_mask(500, m, 7), ec.drop_mask(500, m, 7))
    assert not np.array_equal(ec.drop_mask(500, m, 7), ec.drop_mask(500, m, 8))


@pytest.mark.parametrize("text", ["iid", "iid:2", "burst:0:0.1", "gauss:0.1"])
def test_bad_loss_models(text):
    with pytest.raises(ValueError):
        ec.LossModel.parse(text)


def test_gyro_payload_quantisation():
    rate = np.array([0.5, -1.25, 3.0])
    back = ec.payload_to_gyro(ec.gyro_to_payload(rate))
    np.testing.assert_allclose(back, rate, atol=0.5 / ec.GYRO_LSB_PER_RAD_S)
    assert ec.gyro_to_payload([100.0, -100.0, 0.0]) == bytes.fromhex("ff7f00800000")


def test_packet_csv_round_trip():
    pk = ec.encode_stream(_payloads(30), 4)
    assert ec.packets_from_csv(ec.packets_to_csv(pk)) == pk
    with pytest.raises(ValueError, match="line 2"):
        ec.packets_from_csv(ec.PACKET_HEADER + "\n1,zz,00\n")


def test_recovery_beyond_peeling():
    # no check has a single unknown, but E3 ^ E4 ^ G3 = G0
    g = _payloads(5, seed=9)
    pk = ec.encode_stream(g, 3)
    out, missing = ec.decode_stream(pk[3:], 3, 5)
    assert missing == [1, 2]
    assert out[0] == g[0]


def test_reencoding_is_deterministic():
    g = _payloads(50)
    for m in (1, 3, 8):
        assert ec.encode_stream(g, m) == ec.encode_stream(g, m)


def test_no_losses_is_passthrough():
    g = _payloads(40)
    out, missing = ec.decode_stream(ec.encode_stream(g, 4), 4)
    assert missing == [] and [out[i] for i in range(40)] == g


@pytest.mark.parametrize("window", [1, 2, 3, 4, 8])
def test_burst_of_window_length_followed_by_window_received(window):
    g = _payloads(40, seed=window)
    pk = ec.encode_stream(g, window)
    lost = set(range(10, 10 + window))
    out, missing = ec.decode_stream([p for p in pk if p.packet_index not in lost], window, 40)
    assert missing == []
    assert all(out[i] == g[i] for i in lost)


@settings(max_examples=300)
@given(st.integers(1, 6), st.data())
def test_guaranteed_recovery_pattern(window, data):
    # every loss is followed by `window` received packets before the next loss
    n = 80
    lost, i = set(), data.draw(st.integers(0, 5))
    while i < n - window:
        lost.add(i)
        i += window + 1 + data.draw(st.integers(0, 5))
    g = _payloads(n, seed=window)
    pk = ec.encode_stream(g, window)
    out, missing = ec.decode_stream([p for p in pk if p.packet_index not in lost], window, n)
    assert missing == [] and all(out[j] == g[j] for j in lost)


@settings(max_examples=100)
@given(st.randoms(use_true_random=False))
def test_receive_order_does_not_matter(r):
    g = _payloads(60, seed=2)
    pk = ec.channel_simulate(ec.encode_stream(g, 4), ec.LossModel("iid", 0.3), seed=4)
    shuffled = list(pk)
    r.shuffle(shuffled)
    assert ec.decode_stream(shuffled, 4, 60) == ec.decode_stream(pk, 4, 60)


def test_ten_thousand_packet_loss_rate():
    mask = ec.drop_mask(10_000, ec.LossModel("iid", 0.05), seed=0)
    assert abs(mask.mean() - 0.05) <= 0.01
