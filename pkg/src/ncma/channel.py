"""Two-user BPSK uplink with per-bit complex gains and complex AWGN.

SNR of user u is defined as ``|h_u|^2 / (2 * sigma2)`` where ``sigma2`` is the
noise variance per real dimension.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MODELS = ("fixed-phase", "rayleigh-block")


@dataclass
class ChannelUse:
    hA: np.ndarray
    hB: np.ndarray | None
    sigma2: float

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")
        self.hA = np.asarray(self.hA, dtype=complex)
        if self.hB is not None:
            self.hB = np.asarray(self.hB, dtype=complex)
            if self.hB.shape != self.hA.shape:
                raise ValueError("gain sequences differ in length")

    @property
    def two_user(self) -> bool:
        return self.hB is not None

    def __len__(self) -> int:
        return self.hA.size

    def swapped(self) -> ChannelUse:
        """Same channel with the user roles exchanged."""
        if self.hB is None:
            raise ValueError("single-user channel has no second gain")
        return ChannelUse(self.hB, self.hA, self.sigma2)


def bpsk_map(bits) -> np.ndarray:
    """Bit 0 -> +1, bit 1 -> -1."""
    return 1.0 - 2.0 * np.asarray(bits, dtype=float)


def snr_to_gain(snr_db: float, sigma2: float) -> float:
    return float(np.sqrt(2.0 * sigma2 * 10.0 ** (snr_db / 10.0)))


def draw_channel(snr_a_db: float, snr_b_db: float | None, n_bits: int,
                 rng: np.random.Generator, model: str = "fixed-phase",
                 sigma2: float = 0.5, groups: int = 8) -> ChannelUse:
    """Draw one frame's channel realization.

    ``fixed-phase``: one gain per user per frame, magnitude set by the SNR and
    an independent uniform phase. ``rayleigh-block``: ``groups`` complex
    Gaussian gains per user with the configured mean SNR; bit k sees gain
    ``k % groups`` (an interleaved subcarrier group).
    """
    if model not in MODELS:
        raise ValueError(f"unknown channel model {model!r}; expected one of {MODELS}")
    snrs = [snr_a_db] if snr_b_db is None else [snr_a_db, snr_b_db]
    if not all(np.isfinite(snrs)):
        raise ValueError(f"SNR must be finite, got {snrs}")
    gains = []
    for snr in snrs:
        amp = snr_to_gain(snr, sigma2)
        if model == "fixed-phase":
            h = amp * np.exp(1j * rng.uniform(0.0, 2 * np.pi))
            gains.append(np.full(n_bits, h))
        else:
            g = (rng.standard_normal(groups) + 1j * rng.standard_normal(groups)) * (amp / np.sqrt(2))
            gains.append(g[np.arange(n_bits) % groups])
    return ChannelUse(gains[0], gains[1] if len(gains) > 1 else None, sigma2)


def transmit(xA, xB, ch: ChannelUse, rng: np.random.Generator | None,
             noise: bool = True) -> np.ndarray:
    """Received samples ``hA*xA (+ hB*xB) + n``; ``noise=False`` disables n."""
    xA = np.asarray(xA, dtype=float)
    if xA.shape != ch.hA.shape:
        raise ValueError(f"xA has {xA.size} symbols, channel covers {ch.hA.size}")
    y = ch.hA * xA
    if xB is not None:
        if ch.hB is None:
            raise ValueError("second user's symbols given for a single-user channel")
        xB = np.asarray(xB, dtype=float)
        if xB.shape != xA.shape:
            raise ValueError("symbol sequences differ in length")
        y = y + ch.hB * xB
    if noise:
        sd = np.sqrt(ch.sigma2)
        y = y + sd * (rng.standard_normal(y.size) + 1j * rng.standard_normal(y.size))
    return y


def perturb_csi(ch: ChannelUse, rel_error: float, rng: np.random.Generator) -> ChannelUse:
    """Receiver-side estimate: each gain times (1 + e), e ~ CN(0, rel_error)."""
    if rel_error <= 0:
        return ch

    def noisy(h):
        e = np.sqrt(rel_error / 2) * (rng.standard_normal() + 1j * rng.standard_normal())
        return h * (1 + e)

    return ChannelUse(noisy(ch.hA), None if ch.hB is None else noisy(ch.hB), ch.sigma2)
