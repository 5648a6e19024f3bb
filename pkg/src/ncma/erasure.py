"""Vandermonde erasure code mapping source messages to indexed packets.

A message is a K x L symbol matrix. Packet ``i`` carries the K symbols
``G_i @ M.T`` where ``G_i`` is the i-th generator row; any L packets with
distinct indices recover the message.
"""

from __future__ import annotations

import enum
import functools
import struct
from dataclasses import dataclass

import numpy as np

from .galois import GF, GF256


class InsufficientPacketsError(ValueError):
    """Fewer than L distinct packet indices were supplied."""


class Stream(enum.IntEnum):
    """Packet stream tag; values are bitmasks so tags combine by XOR."""

    A = 1
    B = 2
    AxorB = 3


@dataclass(frozen=True)
class SourceMessage:
    symbols: np.ndarray  # shape (K, L)
    stream: Stream = Stream.A

    @property
    def K(self) -> int:
        return self.symbols.shape[0]

    @property
    def L(self) -> int:
        return self.symbols.shape[1]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SourceMessage):
            return NotImplemented
        return self.stream == other.stream and np.array_equal(self.symbols, other.symbols)

    def __xor__(self, other: SourceMessage) -> SourceMessage:
        return SourceMessage(self.symbols ^ other.symbols, Stream(self.stream ^ other.stream))


@dataclass(frozen=True)
class CodedPacket:
    index: int
    payload: np.ndarray  # shape (K,)
    stream: Stream | None = Stream.A

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CodedPacket):
            return NotImplemented
        return (
            self.index == other.index
            and self.stream == other.stream
            and np.array_equal(self.payload, other.payload)
        )

    def to_bytes(self) -> bytes:
        """2-byte big-endian index, 1-byte stream tag, then K payload bytes."""
        tag = 0 if self.stream is None else int(self.stream)
        return struct.pack(">HB", self.index, tag) + np.asarray(self.payload, dtype=np.uint8).tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> CodedPacket:
        if len(data) < 3:
            raise ValueError(f"packet record too short ({len(data)} bytes)")
        index, tag = struct.unpack(">HB", data[:3])
        stream = None if tag == 0 else Stream(tag)
        return cls(index, np.frombuffer(data[3:], dtype=np.uint8).copy(), stream)


def random_message(K: int, L: int, rng: np.random.Generator, stream: Stream = Stream.A,
                   field: GF = GF256) -> SourceMessage:
    symbols = rng.integers(0, field.size, size=(K, L)).astype(field.dtype)
    return SourceMessage(symbols, stream)


def _check_index(i: int, field: GF) -> None:
    if not 1 <= i <= field.order:
        raise IndexError(f"packet index {i} outside [1, {field.order}]")


def encode_packet(m: SourceMessage, i: int, field: GF = GF256) -> CodedPacket:
    _check_index(i, field)
    row = field.generator_row(i, m.L)
    return CodedPacket(i, field.matmul(m.symbols, row), m.stream)


def encode_packets(m: SourceMessage, indices, field: GF = GF256) -> list[CodedPacket]:
    indices = [int(i) for i in indices]
    for i in indices:
        _check_index(i, field)
    if not indices:
        return []
    g = field.generator_matrix(indices, m.L)
    payloads = field.matmul(g, m.symbols.T)
    return [CodedPacket(i, payloads[k], m.stream) for k, i in enumerate(indices)]


@functools.lru_cache(maxsize=4096)
def _inverse_generator(indices: tuple, L: int, field: GF) -> np.ndarray:
    inv = field.invert(field.generator_matrix(indices, L))
    inv.flags.writeable = False
    return inv


def decode_message(packets, K: int, L: int, field: GF = GF256) -> SourceMessage:
    """Recover the message from any L packets of one stream.

    When more than L packets are given, the L lowest indices are used.

    Raises:
        InsufficientPacketsError: fewer than L distinct indices.
        ValueError: mixed streams or wrong payload length.
    """
    by_index = {}
    streams = set()
    for p in packets:
        if len(p.payload) != K:
            raise ValueError(f"packet {p.index} has {len(p.payload)} symbols, expected {K}")
        by_index.setdefault(p.index, p)
        streams.add(p.stream)
    if len(streams) > 1:
        raise ValueError(f"packets from mixed streams: {sorted(s.name for s in streams)}")
    if len(by_index) < L:
        raise InsufficientPacketsError(f"need {L} distinct packets, got {len(by_index)}")
    chosen = sorted(by_index)[:L]
    c = np.stack([by_index[i].payload for i in chosen]).astype(field.dtype)
    mt = field.matmul(_inverse_generator(tuple(chosen), L, field), c)  # L x K
    return SourceMessage(np.ascontiguousarray(mt.T), streams.pop())


def xor_packets(p: CodedPacket, q: CodedPacket) -> CodedPacket:
    if p.index != q.index:
        raise ValueError(f"index mismatch: {p.index} vs {q.index}")
    if len(p.payload) != len(q.payload):
        raise ValueError("payload length mismatch")
    tag = (0 if p.stream is None else int(p.stream)) ^ (0 if q.stream is None else int(q.stream))
    return CodedPacket(p.index, p.payload ^ q.payload, Stream(tag) if tag else None)
