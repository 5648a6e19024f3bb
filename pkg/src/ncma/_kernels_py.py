"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``.

Same trellis layout and tie rule; used when the extension is not built or
``NCMA_PURE_PYTHON`` is set.
"""

import numpy as np

G0 = 0o133
G1 = 0o171
NSTATES = 64

# taps as delay-ordered arrays: index 0 = current input
_TAPS0 = np.array([(G0 >> (6 - d)) & 1 for d in range(7)], dtype=np.int64)
_TAPS1 = np.array([(G1 >> (6 - d)) & 1 for d in range(7)], dtype=np.int64)


def _parity(x):
    return np.array([bin(int(v)).count("1") & 1 for v in np.ravel(x)], dtype=np.int64).reshape(np.shape(x))


def conv_encode(bits):
    bits = np.asarray(bits, dtype=np.int64)
    padded = np.concatenate([bits, np.zeros(6, dtype=np.int64)])
    n = padded.size
    out = np.empty(2 * n, dtype=np.uint8)
    out[0::2] = np.convolve(padded, _TAPS0)[:n] & 1
    out[1::2] = np.convolve(padded, _TAPS1)[:n] & 1
    return out


_NS = np.arange(NSTATES)
_B = _NS >> 5
_P0 = (_NS & 31) << 1
_P1 = _P0 | 1
_IDX0 = (_parity(((_B << 6) | _P0) & G0) << 1) | _parity(((_B << 6) | _P0) & G1)
_IDX1 = (_parity(((_B << 6) | _P1) & G0) << 1) | _parity(((_B << 6) | _P1) & G1)
_NEG = -(1 << 60)


def viterbi(soft):
    soft = np.asarray(soft, dtype=np.int64)
    T = soft.size // 2
    n = T - 6
    if n < 0:
        raise ValueError("soft input shorter than the termination tail")
    s = soft.reshape(T, 2) - 128
    pm = np.full(NSTATES, _NEG, dtype=np.int64)
    pm[0] = 0
    dec = np.empty((T, NSTATES), dtype=np.uint8)
    tail_mask = _B == 1
    for t in range(T):
        s0, s1 = s[t]
        bm = np.array([s0 + s1, s0 - s1, -s0 + s1, -s0 - s1], dtype=np.int64)
        c0 = pm[_P0] + bm[_IDX0]
        c1 = pm[_P1] + bm[_IDX1]
        pick1 = c1 > c0
        nm = np.where(pick1, c1, c0)
        dec[t] = pick1
        if t >= n:
            nm[tail_mask] = _NEG
            dec[t, tail_mask] = 0
        pm = np.maximum(nm, _NEG)
    bits = np.empty(n, dtype=np.uint8)
    st = 0
    for t in range(T - 1, -1, -1):
        if t < n:
            bits[t] = st >> 5
        st = ((st & 31) << 1) | int(dec[t, st])
    return bits, int(pm[0])
