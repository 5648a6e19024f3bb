# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled convolutional encoder and soft-input Viterbi decoder.

Trellis layout shared with ``_kernels_py``: the 6-bit state holds the previous
inputs with the most recent one in bit 5. A transition from state ``p`` on
input ``b`` uses the 7-bit register ``(b << 6) | p`` (bit 6 = current input)
and lands in ``(b << 5) | (p >> 1)``.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()

DEF NSTATES = 64
DEF G0 = 0o133
DEF G1 = 0o171


cdef inline int parity(int x) nogil:
    x ^= x >> 4
    x ^= x >> 2
    x ^= x >> 1
    return x & 1


def conv_encode(const cnp.uint8_t[:] bits):
    cdef Py_ssize_t n = bits.shape[0]
    cdef Py_ssize_t k
    cdef int reg = 0
    out = np.empty(2 * (n + 6), dtype=np.uint8)
    cdef cnp.uint8_t[:] o = out
    with nogil:
        for k in range(n + 6):
            reg >>= 1
            if k < n and bits[k]:
                reg |= 64
            o[2 * k] = parity(reg & G0)
            o[2 * k + 1] = parity(reg & G1)
    return out


def viterbi(const cnp.uint8_t[:] soft):
    """Maximize sum((v - 128) * x) over terminated codewords.

    Returns ``(info_bits, metric)``. Equal-metric merges keep the predecessor
    whose dropped (oldest) bit is 0.
    """
    cdef Py_ssize_t T = soft.shape[0] // 2
    cdef Py_ssize_t n = T - 6
    if n < 0:
        raise ValueError("soft input shorter than the termination tail")
    cdef long long NEG = -(1LL << 60)
    cdef long long buf_a[NSTATES]
    cdef long long buf_b[NSTATES]
    cdef long long *pm = buf_a
    cdef long long *nm = buf_b
    cdef long long *tmp
    cdef int idx0[NSTATES]
    cdef int idx1[NSTATES]
    cdef Py_ssize_t t
    cdef int s, ns, b, p0, reg, limit, d
    cdef long long s0, s1, c0, c1
    cdef long long bm[4]
    dec_arr = np.empty((T, NSTATES), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] dec = dec_arr
    cdef cnp.uint8_t *row
    bits_arr = np.empty(n, dtype=np.uint8)
    cdef cnp.uint8_t[:] bits = bits_arr

    for ns in range(NSTATES):
        b = ns >> 5
        p0 = (ns & 31) << 1
        reg = (b << 6) | p0
        idx0[ns] = (parity(reg & G0) << 1) | parity(reg & G1)
        reg = reg | 1
        idx1[ns] = (parity(reg & G0) << 1) | parity(reg & G1)
    for s in range(NSTATES):
        pm[s] = NEG
        nm[s] = NEG
    pm[0] = 0

    with nogil:
        for t in range(T):
            s0 = <long long>soft[2 * t] - 128
            s1 = <long long>soft[2 * t + 1] - 128
            # branch metric indexed by (o0 << 1) | o1
            bm[0] = s0 + s1
            bm[1] = s0 - s1
            bm[2] = -s0 + s1
            bm[3] = -s0 - s1
            row = &dec[t, 0]
            limit = 32 if t >= n else NSTATES
            for ns in range(limit):
                p0 = (ns & 31) << 1
                c0 = pm[p0] + bm[idx0[ns]]
                c1 = pm[p0 | 1] + bm[idx1[ns]]
                d = c1 > c0
                row[ns] = d
                nm[ns] = c1 if d else c0
            for ns in range(limit, NSTATES):
                nm[ns] = NEG
                row[ns] = 0
            for s in range(NSTATES):
                if nm[s] < NEG:
                    nm[s] = NEG
            tmp = pm
            pm = nm
            nm = tmp

        s = 0
        t = T - 1
        while t >= 0:
            if t < n:
                bits[t] = s >> 5
            s = ((s & 31) << 1) | dec[t, s]
            t -= 1
    return bits_arr, int(pm[0])
