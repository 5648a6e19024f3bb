"""Rate-1/2, K=7 convolutional code (133/171 octal), Viterbi decoding and CRC.

Frames are bit arrays: payload bytes followed by the 4-byte CRC-32 field,
unpacked MSB-first. The encoder appends a 6-bit zero tail.

The encoder and decoder run in a compiled extension when available and fall
back to numpy otherwise; ``BACKEND`` names the one in use. Setting the
environment variable ``NCMA_PURE_PYTHON=1`` forces the fallback.
"""

from __future__ import annotations

import os
import zlib

import numpy as np

from . import _kernels_py

if os.environ.get("NCMA_PURE_PYTHON", "") not in ("", "0"):
    _k = _kernels_py
else:
    try:
        from . import _kernels as _k
    except ImportError:  # extension not built
        _k = _kernels_py

BACKEND = "python" if _k is _kernels_py else "cython"

CONSTRAINT_LENGTH = 7
GENERATORS = (0o133, 0o171)
TAIL_BITS = CONSTRAINT_LENGTH - 1
CRC_BITS = 32


def backends() -> dict:
    """Available kernel modules keyed by name (for cross-checks and benchmarks)."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        out["cython"] = _kernels
    return out


def conv_encode(bits) -> np.ndarray:
    bits = np.ascontiguousarray(bits, dtype=np.uint8)
    if bits.size == 0:
        raise ValueError("cannot encode an empty frame")
    return _k.conv_encode(bits)


def viterbi_decode(soft, return_metric: bool = False):
    """Decode 8-bit soft values (128 = no information, larger = bit 0 more likely).

    Returns the info bits of the terminated path maximizing
    ``sum((soft - 128) * x)`` with ``x = +1`` for a coded 0 and ``-1`` for a 1.
    Among equal-metric paths the one that is smallest when read from the last
    info bit backwards wins (an ACS tie keeps the predecessor whose oldest bit
    is 0).
    """
    soft = np.ascontiguousarray(soft, dtype=np.uint8)
    if soft.size % 2:
        raise ValueError("soft input length must be even")
    bits, metric = _k.viterbi(soft)
    return (bits, metric) if return_metric else bits


def path_metric(soft, coded_bits) -> int:
    """Correlation metric ``sum((v - 128) * x)`` of a coded bit sequence."""
    v = np.asarray(soft, dtype=np.int64) - 128
    x = 1 - 2 * np.asarray(coded_bits, dtype=np.int64)
    return int(v @ x)


def crc32(payload: bytes) -> int:
    """802.11 FCS: polynomial 0x04C11DB7, all-ones init, final complement."""
    return zlib.crc32(payload) & 0xFFFFFFFF


def build_frame(payload) -> np.ndarray:
    """Payload bytes plus CRC field, as bits."""
    data = bytes(np.asarray(payload, dtype=np.uint8))
    return np.unpackbits(np.frombuffer(data + crc32(data).to_bytes(4, "little"), dtype=np.uint8))


def _split(bits) -> tuple[bytes, int]:
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size < CRC_BITS:
        raise ValueError(f"frame of {bits.size} bits is shorter than the CRC field")
    if bits.size % 8:
        raise ValueError("frame length must be a whole number of bytes")
    raw = np.packbits(bits).tobytes()
    return raw[:-4], int.from_bytes(raw[-4:], "little")


def frame_payload(bits) -> np.ndarray:
    return np.frombuffer(_split(bits)[0], dtype=np.uint8).copy()


def crc_check(bits) -> bool:
    payload, field = _split(bits)
    return crc32(payload) == field


def crc_check_xor(bits) -> bool:
    """Check a frame that should be the XOR of two valid equal-length frames.

    CRC-32 is affine in the message: crc(m) = lin(m) ^ c(len). XORing two
    valid frames cancels the constant, so the XOR frame satisfies
    crc(p) ^ field == crc(zeros(len(p))).
    """
    payload, field = _split(bits)
    return crc32(payload) ^ field == crc32(bytes(len(payload)))


def coded_length(payload_bytes: int) -> int:
    return 2 * (8 * payload_bytes + CRC_BITS + TAIL_BITS)
