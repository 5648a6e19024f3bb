"""Soft demodulators for single-user, PNC (XOR) and reduced-constellation MUD.

All functions are vectorized over numpy arrays of samples and gains. Soft
values are positive when bit 0 (symbol +1) is more likely.

The two-user constellation points are ``a*hA + b*hB`` for ``a, b in {+1, -1}``.
For each hypothesis class only the point nearest to ``y`` is kept and the soft
value is a quarter of the squared-distance difference; this equals the
log-max LLR scaled by ``sigma2 / 2`` and reduces to a projection such as
``Re(conj(hA) * (y - hB))`` for the (+,+)/(-,+) pair.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelUse

DEFAULT_ALPHA = 0.228


@dataclass(frozen=True)
class QuantizerParams:
    alpha: float
    hmax2: float

    def __post_init__(self):
        if not 0 < self.alpha < 0.5:
            raise ValueError(f"alpha must lie in (0, 0.5), got {self.alpha}")
        if not self.hmax2 > 0:
            raise ValueError(f"hmax2 must be positive, got {self.hmax2}")


def single_user_soft(y, h):
    """Matched filter ``Re(conj(h) * y)``."""
    return np.real(np.conj(h) * y)


def _d2(y, p):
    d = y - p
    return d.real * d.real + d.imag * d.imag


def _points(y, hA, hB):
    y = np.asarray(y, dtype=complex)
    s, d = hA + hB, hA - hB
    # squared distances to (+,+), (-,-), (+,-), (-,+)
    return _d2(y, s), _d2(y, -s), _d2(y, d), _d2(y, -d)


def pnc_soft(y, hA, hB):
    """Soft value of the XOR bit (positive = XOR 0)."""
    pp, mm, pm, mp = _points(y, hA, hB)
    return 0.25 * (np.minimum(pm, mp) - np.minimum(pp, mm))


def rmud_soft(y, hA, hB):
    """Per-user soft values ``(soft_A, soft_B)`` from the reduced constellation."""
    return two_user_soft(y, hA, hB)[:2]


def two_user_soft(y, hA, hB):
    """``(soft_A, soft_B, soft_X)`` from one pass over the four points."""
    pp, mm, pm, mp = _points(y, hA, hB)
    soft_a = 0.25 * (np.minimum(mp, mm) - np.minimum(pp, pm))
    soft_b = 0.25 * (np.minimum(pm, mm) - np.minimum(pp, mp))
    soft_x = 0.25 * (np.minimum(pm, mp) - np.minimum(pp, mm))
    return soft_a, soft_b, soft_x


def pnc_case(y, hA, hB):
    """Which closed form applies per sample, as index into the case table.

    0: (+,+)&(-,+) -> Re(conj(hA)(y-hB));  1: (-,-)&(-,+) -> -Re(conj(hB)(y+hA))
    2: (+,+)&(+,-) -> Re(conj(hB)(y-hA));  3: (-,-)&(+,-) -> -Re(conj(hA)(y+hB))
    """
    pp, mm, pm, mp = _points(y, hA, hB)
    zero_is_pp = pp <= mm
    one_is_mp = mp <= pm
    return np.where(zero_is_pp, np.where(one_is_mp, 0, 2), np.where(one_is_mp, 1, 3))


def pnc_soft_cases(y, hA, hB):
    """The same XOR soft value through the explicit four-case table."""
    y = np.asarray(y, dtype=complex)
    case = pnc_case(y, hA, hB)
    hA = np.broadcast_to(hA, y.shape)
    hB = np.broadcast_to(hB, y.shape)
    forms = np.stack([
        np.real(np.conj(hA) * (y - hB)),
        -np.real(np.conj(hB) * (y + hA)),
        np.real(np.conj(hB) * (y - hA)),
        -np.real(np.conj(hA) * (y + hB)),
    ])
    return np.take_along_axis(forms, case[None, ...], axis=0)[0]


def hmax2_pnc(ch: ChannelUse) -> float:
    """``max_k min(|hA[k]|^2, |hB[k]|^2)``."""
    return float(np.max(np.minimum(np.abs(ch.hA) ** 2, np.abs(ch.hB) ** 2)))


def hmax2_user(ch: ChannelUse, user: str) -> float:
    h = {"A": ch.hA, "B": ch.hB}[user]
    return float(np.max(np.abs(h) ** 2))


def quantize_frame(soft, params: QuantizerParams) -> np.ndarray:
    """Map soft values to 0..255: ``+hmax2 -> 0.5 + alpha``, clipped, round-half-up."""
    x = np.asarray(soft, dtype=float) / params.hmax2 * params.alpha + 0.5
    return np.floor(np.clip(x, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def quantize(soft, hmax2: float, alpha: float = DEFAULT_ALPHA) -> np.ndarray:
    if not (0 < alpha < 0.5 and hmax2 > 0):
        QuantizerParams(alpha, hmax2)  # raises with the specific message
    x = np.asarray(soft, dtype=float) * (alpha / hmax2) + 0.5
    np.clip(x, 0.0, 1.0, out=x)
    return np.floor(x * 255.0 + 0.5).astype(np.uint8)
