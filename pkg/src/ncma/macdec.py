"""MAC-layer decoding with three interacting equation systems.

The store keeps, per stream (A, B and A^B), the coded packets known at each
index. A stream is solved as soon as it holds as many distinct indices as its
threshold. Solving one stream bridges equations into the others through the
XOR packets.
"""

from __future__ import annotations

import json

import numpy as np

from .erasure import CodedPacket, SourceMessage, Stream, decode_message, encode_packets
from .galois import GF, GF256

NATIVE = (Stream.A, Stream.B)


class DuplicateIndexError(ValueError):
    """A packet index arrived twice for the same stream within one round."""


class PairingError(RuntimeError):
    pass


def next_index(j: int, N: int = 255) -> int:
    """Index sent after ``j``, cyclic over 1..N."""
    return j % N + 1


class EquationStore:
    """Equation systems for one user pair.

    Args:
        K: symbols per packet.
        L_A, L_B: decoding thresholds of the two native streams.
        use_xor: keep the A^B system and bridge through it. With False the
            store degenerates to two independent single-user decoders.
    """

    def __init__(self, K: int, L_A: int, L_B: int, use_xor: bool = True, field: GF = GF256):
        self.K = K
        self.field = field
        self.use_xor = use_xor
        self.thresholds = {Stream.A: L_A, Stream.B: L_B}
        self.packets: dict[Stream, dict[int, CodedPacket]] = {s: {} for s in Stream}
        # indices that came from the PHY layer (as opposed to bridging)
        self.received: dict[Stream, set[int]] = {s: set() for s in Stream}
        self.solved: dict[Stream, SourceMessage | None] = {s: None for s in Stream}

    @property
    def xor_threshold(self) -> int | None:
        """Threshold of the A^B system; disabled when the message shapes differ."""
        L_A, L_B = self.thresholds[Stream.A], self.thresholds[Stream.B]
        return L_A if self.use_xor and L_A == L_B else None

    def threshold(self, s: Stream) -> int | None:
        return self.xor_threshold if s is Stream.AxorB else self.thresholds[s]

    def count(self, s: Stream) -> int:
        return len(self.packets[s])

    def indices(self, s: Stream) -> list[int]:
        return sorted(self.packets[s])

    def is_solved(self, s: Stream) -> bool:
        return self.solved[s] is not None

    def ingest(self, i: int, outcome) -> None:
        """Insert the (already PHY-bridged) packets of slot ``i``."""
        for stream, p in outcome.packets().items():
            if stream is Stream.AxorB and not self.use_xor:
                continue
            if p.index != i:
                raise ValueError(f"packet index {p.index} does not match slot index {i}")
            if i in self.received[stream]:
                raise DuplicateIndexError(f"stream {stream.name} already holds index {i}")
            self.received[stream].add(i)
            # an equal packet may already be there through bridging
            self.packets[stream].setdefault(i, p)

    def _add(self, s: Stream, p: CodedPacket) -> bool:
        if p.index in self.packets[s]:
            return False
        self.packets[s][p.index] = p
        return True

    def _try_solve(self, s: Stream) -> bool:
        thr = self.threshold(s)
        if self.solved[s] is not None or thr is None or self.count(s) < thr:
            return False
        self.solved[s] = decode_message(self.packets[s].values(), self.K, thr, self.field)
        return True

    def _encode(self, s: Stream, indices) -> list[CodedPacket]:
        return encode_packets(self.solved[s], sorted(indices), self.field)

    def _bridge_from_native(self, s: Stream) -> bool:
        """With native stream ``s`` solved, turn every XOR packet into the other native."""
        other = Stream.B if s is Stream.A else Stream.A
        xors = self.packets[Stream.AxorB]
        wanted = set(xors) | set(self.packets[other])
        changed = False
        for p in self._encode(s, wanted - set(self.packets[s])):
            changed |= self._add(s, p)
        for i in sorted(set(xors) - set(self.packets[other])):
            p = self.packets[s][i]
            x = xors[i]
            changed |= self._add(other, CodedPacket(i, p.payload ^ x.payload, other))
        return changed

    def _bridge_from_xor(self) -> bool:
        """With A^B solved, every lone native packet yields its counterpart."""
        a, b = self.packets[Stream.A], self.packets[Stream.B]
        need = (set(a) ^ set(b)) - set(self.packets[Stream.AxorB])
        changed = False
        for p in self._encode(Stream.AxorB, need):
            changed |= self._add(Stream.AxorB, p)
        xors = self.packets[Stream.AxorB]
        for src, dst in ((a, Stream.B), (b, Stream.A)):
            for i in sorted(set(src) - set(self.packets[dst])):
                changed |= self._add(dst, CodedPacket(i, src[i].payload ^ xors[i].payload, dst))
        return changed

    def resolve(self) -> set[Stream]:
        """Run solving and bridging to a fixed point; returns newly solved streams."""
        before = {s for s in Stream if self.solved[s] is not None}
        changed = True
        while changed:
            changed = False
            for s in Stream:
                changed |= self._try_solve(s)
            if not self.use_xor:
                continue
            for s in NATIVE:
                if self.solved[s] is not None:
                    changed |= self._bridge_from_native(s)
            if self.solved[Stream.AxorB] is not None:
                changed |= self._bridge_from_xor()
        return {s for s in Stream if self.solved[s] is not None} - before

    def reset_stream(self, s: Stream, threshold: int | None = None) -> None:
        self.packets[s] = {}
        self.received[s] = set()
        self.solved[s] = None
        if threshold is not None and s in NATIVE:
            self.thresholds[s] = threshold

    def reset(self) -> None:
        for s in Stream:
            self.reset_stream(s)

    def rotate(self, finished: Stream, j: int, threshold: int | None = None) -> int:
        """Replace the solved stream ``finished`` by the sender's next message.

        The other native stream keeps its equations; the XOR system starts
        over for the new pair. Returns the first index the new message uses
        (the one after ``j``, the last index sent).
        """
        if finished not in NATIVE:
            raise ValueError("only a native stream can finish")
        other = Stream.B if finished is Stream.A else Stream.A
        if self.solved[finished] is None or self.solved[other] is not None:
            raise PairingError("rotate needs exactly one solved native stream")
        self.reset_stream(finished, threshold)
        self.reset_stream(Stream.AxorB)
        return next_index(j, self.field.order)

    def check_consistency(self) -> None:
        """Re-encode each solved message and compare with every stored packet."""
        for s in Stream:
            m = self.solved[s]
            if m is None:
                continue
            for p in self._encode(s, self.packets[s]):
                if not np.array_equal(p.payload, self.packets[s][p.index].payload):
                    raise AssertionError(f"stream {s.name} index {p.index} inconsistent")

    def to_json(self) -> str:
        return json.dumps({
            "K": self.K,
            "thresholds": {"A": self.thresholds[Stream.A], "B": self.thresholds[Stream.B],
                           "AxorB": self.xor_threshold},
            "streams": {
                s.name: {"indices": self.indices(s), "received": sorted(self.received[s]),
                         "solved": self.is_solved(s)}
                for s in Stream
            },
        }, sort_keys=True)
