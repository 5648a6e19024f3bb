"""Per-slot PHY decoding: RMUD, parallel SIC and PNC, CRC validation, event
classification and PHY-layer bridging.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import convcode, demod
from .channel import ChannelUse, bpsk_map
from .erasure import CodedPacket, Stream, xor_packets

MUD_MODES = ("rmud", "sic", "rmud+sic")
GROUPS = ("NONE", "X", "A|B", "AX|BX", "AB")
EVENTS = tuple(f"{m}/{p}" for m in ("i", "ii", "iii", "iv") for p in ("I", "II"))


@dataclass(frozen=True)
class DecoderConfig:
    mud: str = "rmud"
    pnc: bool = True
    alpha: float = demod.DEFAULT_ALPHA

    def __post_init__(self):
        if self.mud not in MUD_MODES:
            raise ValueError(f"unknown MUD mode {self.mud!r}; expected one of {MUD_MODES}")


def mud_event(a: bool, b: bool) -> str:
    return {(True, True): "i", (True, False): "ii", (False, True): "iii", (False, False): "iv"}[(a, b)]


def event_group(event: str) -> str:
    if event not in EVENTS:
        raise ValueError(f"unknown event label {event!r}")
    mud, pnc = event.split("/")
    if mud == "i":
        return "AB"
    if mud == "iv":
        return "X" if pnc == "I" else "NONE"
    return "AX|BX" if pnc == "I" else "A|B"


@dataclass(frozen=True)
class SlotOutcome:
    """Packets decoded in one two-user slot.

    ``event`` reflects what the PHY decoders produced; it is not changed by
    bridging, which only fills in the packet fields.
    """

    index: int
    decodedA: CodedPacket | None = None
    decodedB: CodedPacket | None = None
    decodedX: CodedPacket | None = None
    event: str = ""

    def __post_init__(self):
        if not self.event:
            mud = mud_event(self.decodedA is not None, self.decodedB is not None)
            pnc = "I" if self.decodedX is not None else "II"
            object.__setattr__(self, "event", f"{mud}/{pnc}")
        elif self.event not in EVENTS:
            raise ValueError(f"unknown event label {self.event!r}")

    @property
    def group(self) -> str:
        return event_group(self.event)

    def packets(self) -> dict:
        out = {}
        for stream, p in ((Stream.A, self.decodedA), (Stream.B, self.decodedB), (Stream.AxorB, self.decodedX)):
            if p is not None:
                out[stream] = p
        return out


def frame_bits(payload, stream: Stream) -> np.ndarray:
    """Frame bits for ``payload``: a one-byte stream tag, the payload, the CRC.

    The tag stands in for the MAC header's sender address. XORing the frames
    of A and B yields tag ``A ^ B``, so the XOR frame is self-describing too.
    """
    data = np.concatenate([[int(stream)], np.asarray(payload, dtype=np.uint8)]).astype(np.uint8)
    return convcode.build_frame(data)


def _decode_frame(q: np.ndarray, stream: Stream):
    """Viterbi, CRC and tag check; returns payload bytes or None.

    A frame with a valid CRC but a foreign tag is dropped. With nearly equal
    gains the reduced constellation of one user can lock onto the other
    user's codeword, which the CRC alone cannot catch.
    """
    bits = convcode.viterbi_decode(q)
    ok = convcode.crc_check_xor(bits) if stream is Stream.AxorB else convcode.crc_check(bits)
    if not ok:
        return None
    data = convcode.frame_payload(bits)
    return data[1:] if data[0] == int(stream) else None


def _packet(payload, index, stream):
    return None if payload is None else CodedPacket(index, payload, stream)


def _reencode(payload, stream: Stream) -> np.ndarray:
    return bpsk_map(convcode.conv_encode(frame_bits(payload, stream)))


def rmud_decode(rx, ch: ChannelUse, alpha: float = demod.DEFAULT_ALPHA):
    soft_a, soft_b = demod.rmud_soft(rx, ch.hA, ch.hB)
    pa = _decode_frame(demod.quantize(soft_a, demod.hmax2_user(ch, "A"), alpha), Stream.A)
    pb = _decode_frame(demod.quantize(soft_b, demod.hmax2_user(ch, "B"), alpha), Stream.B)
    return pa, pb


def pnc_decode(rx, ch: ChannelUse, alpha: float = demod.DEFAULT_ALPHA):
    soft = demod.pnc_soft(rx, ch.hA, ch.hB)
    return _decode_frame(demod.quantize(soft, demod.hmax2_pnc(ch), alpha), Stream.AxorB)


def sic_order(rx, ch: ChannelUse, first: str, alpha: float = demod.DEFAULT_ALPHA):
    """One SIC pass decoding ``first`` ("A" or "B") with the other as noise.

    Returns ``(payload_A, payload_B)``, either possibly None.
    """
    h1, h2 = (ch.hA, ch.hB) if first == "A" else (ch.hB, ch.hA)
    s1, s2 = (Stream.A, Stream.B) if first == "A" else (Stream.B, Stream.A)
    q1 = demod.quantize(demod.single_user_soft(rx, h1), float(np.max(np.abs(h1) ** 2)), alpha)
    p1 = _decode_frame(q1, s1)
    p2 = None
    if p1 is not None:
        y2 = (rx - h1 * _reencode(p1, s1)) / h2
        p2 = _decode_frame(demod.quantize(np.real(y2), 1.0, alpha), s2)
    return (p1, p2) if first == "A" else (p2, p1)


def sic_decode(rx, ch: ChannelUse, alpha: float = demod.DEFAULT_ALPHA):
    """Parallel SIC: both decoding orders, union of CRC-passing packets."""
    a1, b1 = sic_order(rx, ch, "A", alpha)
    a2, b2 = sic_order(rx, ch, "B", alpha)
    return (a1 if a1 is not None else a2), (b1 if b1 is not None else b2)


def decode_slot(rx, ch: ChannelUse, cfg: DecoderConfig = DecoderConfig(), index: int = 1) -> SlotOutcome:
    if not ch.two_user:
        raise ValueError("decode_slot needs a two-user channel")
    pa = pb = px = None
    soft_a, soft_b, soft_x = demod.two_user_soft(rx, ch.hA, ch.hB)
    if cfg.mud in ("rmud", "rmud+sic"):
        pa = _decode_frame(demod.quantize(soft_a, demod.hmax2_user(ch, "A"), cfg.alpha), Stream.A)
        pb = _decode_frame(demod.quantize(soft_b, demod.hmax2_user(ch, "B"), cfg.alpha), Stream.B)
    if cfg.mud in ("sic", "rmud+sic") and (pa is None or pb is None):
        sa, sb = sic_decode(rx, ch, cfg.alpha)
        pa = pa if pa is not None else sa
        pb = pb if pb is not None else sb
    if cfg.pnc:
        px = _decode_frame(demod.quantize(soft_x, demod.hmax2_pnc(ch), cfg.alpha), Stream.AxorB)
    return SlotOutcome(index, _packet(pa, index, Stream.A), _packet(pb, index, Stream.B),
                       _packet(px, index, Stream.AxorB))


def single_user_decode(rx, h, alpha: float = demod.DEFAULT_ALPHA, stream: Stream = Stream.A):
    q = demod.quantize(demod.single_user_soft(rx, h), float(np.max(np.abs(h) ** 2)), alpha)
    return _decode_frame(q, stream)


def phy_bridge(o: SlotOutcome) -> SlotOutcome:
    """Recover the missing native packet from a complementary XOR packet.

    Only events (ii)(I) and (iii)(I) change; the event label is kept.
    """
    a, b, x = o.decodedA, o.decodedB, o.decodedX
    if x is None or (a is None) == (b is None):
        return o
    if a is None:
        a = xor_packets(b, x)
    else:
        b = xor_packets(a, x)
    return replace(o, decodedA=a, decodedB=b)


def strip_xor(o: SlotOutcome) -> SlotOutcome:
    """The outcome a MUD-only receiver would have seen."""
    mud = o.event.split("/")[0]
    return replace(o, decodedX=None, event=f"{mud}/II")
