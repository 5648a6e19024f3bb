import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ncma.erasure import (CodedPacket, InsufficientPacketsError, SourceMessage, Stream,
                          decode_message, encode_packet, encode_packets, random_message,
                          xor_packets)
from ncma.galois import GF, GF256


def encode_oracle(m: SourceMessage, i: int) -> np.ndarray:
    """C_i[k] = sum_l M[k, l] * alpha_i^l, one scalar product at a time."""
    f = GF256
    a = f.alpha(i)
    out = []
    for k in range(m.K):
        acc = 0
        for l in range(m.L):
            acc ^= f.mul(int(m.symbols[k, l]), f.power(a, l))
        out.append(acc)
    return np.array(out)


def test_encode_matches_scalar_oracle(rng):
    m = random_message(6, 5, rng)
    for i in (1, 2, 77, 254, 255):
        assert np.array_equal(encode_packet(m, i).payload, encode_oracle(m, i))


def test_encode_packets_matches_single(rng):
    m = random_message(8, 4, rng, Stream.B)
    idx = [5, 1, 200]
    batch = encode_packets(m, idx)
    assert [p.index for p in batch] == idx
    for p in batch:
        assert p == encode_packet(m, p.index)
        assert p.stream is Stream.B
    assert encode_packets(m, []) == []


@pytest.mark.parametrize("i", [0, 256])
def test_encode_index_range(rng, i):
    m = random_message(4, 2, rng)
    with pytest.raises(IndexError):
        encode_packet(m, i)


@given(st.integers(1, 12), st.integers(1, 20), st.data())
def test_any_L_packets_decode(K, L, data):
    rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
    m = random_message(K, L, rng)
    idx = data.draw(st.lists(st.integers(1, 255), min_size=L, max_size=L + 3, unique=True))
    got = decode_message(encode_packets(m, idx), K, L)
    assert got == m


def test_too_few_packets(rng):
    m = random_message(4, 5, rng)
    pk = encode_packets(m, [1, 2, 3, 4])
    with pytest.raises(InsufficientPacketsError):
        decode_message(pk, 4, 5)
    # a repeated index is not a new equation
    with pytest.raises(InsufficientPacketsError):
        decode_message(pk + [pk[0]], 4, 5)


def test_decode_rejects_mixed_streams_and_bad_length(rng):
    a = random_message(4, 2, rng, Stream.A)
    b = random_message(4, 2, rng, Stream.B)
    with pytest.raises(ValueError, match="mixed"):
        decode_message([encode_packet(a, 1), encode_packet(b, 2)], 4, 2)
    with pytest.raises(ValueError, match="symbols"):
        decode_message([encode_packet(a, 1)], 5, 1)


def test_decode_uses_lowest_indices(rng):
    m = random_message(4, 2, rng)
    good = encode_packets(m, [3, 9])
    bad = CodedPacket(50, np.zeros(4, dtype=np.uint8), Stream.A)
    assert decode_message(good + [bad], 4, 2) == m


@given(st.integers(1, 255), st.integers(0, 2**32 - 1))
def test_xor_linearity(i, seed):
    rng = np.random.default_rng(seed)
    a = random_message(5, 3, rng, Stream.A)
    b = random_message(5, 3, rng, Stream.B)
    x = xor_packets(encode_packet(a, i), encode_packet(b, i))
    assert x.stream is Stream.AxorB
    assert x == encode_packet(a ^ b, i)


def test_xor_packets_errors(rng):
    m = random_message(4, 2, rng)
    with pytest.raises(ValueError, match="index"):
        xor_packets(encode_packet(m, 1), encode_packet(m, 2))
    short = CodedPacket(1, np.zeros(3, dtype=np.uint8))
    with pytest.raises(ValueError, match="length"):
        xor_packets(encode_packet(m, 1), short)
    p = encode_packet(m, 1)
    assert xor_packets(p, p).stream is None


@given(st.integers(1, 65535), st.sampled_from([None, *Stream]), st.binary(max_size=40))
def test_packet_bytes_roundtrip(i, s, payload):
    p = CodedPacket(i, np.frombuffer(payload, dtype=np.uint8), s)
    assert CodedPacket.from_bytes(p.to_bytes()) == p


def test_packet_from_short_bytes():
    with pytest.raises(ValueError):
        CodedPacket.from_bytes(b"\x00")


def test_small_field_roundtrip(rng):
    f = GF(3)
    m = random_message(3, 4, rng, field=f)
    assert m.symbols.max() < 8
    pk = encode_packets(m, [7, 2, 5, 1], field=f)
    assert decode_message(pk, 3, 4, field=f) == m


def test_encode_examples():
    zero = SourceMessage(np.zeros((4, 3), dtype=np.uint8))
    assert not encode_packet(zero, 9).payload.any()
    rng = np.random.default_rng(1)
    m1 = random_message(5, 1, rng)
    for i in (1, 100, 255):
        assert np.array_equal(encode_packet(m1, i).payload, m1.symbols[:, 0])
    # GF(4), K=2, L=2, i=1: alpha_1 = 2, payload[k] = M[k,0] + 2*M[k,1]
    f4 = GF(2)
    m = SourceMessage(np.array([[1, 3], [2, 2]], dtype=np.uint8))
    # 1 + 2*3 = 1 + 1 = 0 ; 2 + 2*2 = 2 + 3 = 1
    assert encode_packet(m, 1, f4).payload.tolist() == [0, 1]


def test_three_native_rows_decode(rng):
    m = random_message(8, 3, rng)
    assert decode_message(encode_packets(m, [1, 4, 5]), 8, 3) == m
