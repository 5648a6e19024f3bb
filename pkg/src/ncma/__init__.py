"""Network-coded multiple access: two users, one access point.

PHY: reduced-constellation PNC and multiuser decoders over a BPSK uplink,
with a soft-input Viterbi decoder. MAC: Vandermonde erasure code with three
interacting equation systems bridged through XOR packets.
"""

from .convcode import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND"]
