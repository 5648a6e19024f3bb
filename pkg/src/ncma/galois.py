"""Arithmetic and linear algebra over GF(2^s).

Symbols are stored as small unsigned integers in numpy arrays. Multiplication
goes through log/antilog tables; matrix products use a full multiplication
table so they vectorize cleanly.
"""

from __future__ import annotations

import numpy as np

# Primitive polynomials, bit i = coefficient of x^i.
PRIMITIVE_POLYS = {
    2: 0x7,
    3: 0xB,
    4: 0x13,
    5: 0x25,
    6: 0x43,
    7: 0x89,
    8: 0x11D,
}


class SingularMatrixError(ValueError):
    """Raised when a matrix has no inverse over the field."""


class GF:
    """The field GF(2^s) built from a primitive polynomial.

    The element ``2`` (the polynomial ``x``) is the primitive element used to
    enumerate nonzero elements: ``alpha(i) = 2**i`` for ``1 <= i <= N``.
    """

    def __init__(self, s: int = 8, poly: int | None = None):
        if poly is None:
            if s not in PRIMITIVE_POLYS:
                raise ValueError(f"no default primitive polynomial for s={s}")
            poly = PRIMITIVE_POLYS[s]
        if poly >> s != 1:
            raise ValueError(f"polynomial {poly:#x} does not have degree {s}")
        self.s = s
        self.poly = poly
        self.size = 1 << s
        self.order = self.size - 1  # N, the number of nonzero elements

        exp = np.zeros(2 * self.order, dtype=np.int64)
        log = np.full(self.size, -1, dtype=np.int64)
        x = 1
        for k in range(self.order):
            if log[x] != -1:
                raise ValueError(f"polynomial {poly:#x} is not primitive")
            exp[k] = x
            log[x] = k
            x <<= 1
            if x & self.size:
                x ^= poly
        exp[self.order:] = exp[: self.order]
        self.exp = exp
        self.log = log

        a = np.arange(self.size)
        la, lb = np.meshgrid(log, log, indexing="ij")
        table = exp[(la + lb) % self.order]
        table[(a == 0)[:, None] | (a == 0)[None, :]] = 0
        self.mul_table = table.astype(np.uint8 if s <= 8 else np.uint16)
        self.dtype = self.mul_table.dtype
        # row i-1 holds alpha_i^0 .. alpha_i^(N-1), alpha_i = 2^i
        ij = np.outer(np.arange(1, self.order + 1), np.arange(self.order))
        self._vandermonde = exp[ij % self.order].astype(self.dtype)

    def __repr__(self) -> str:
        return f"GF(2^{self.s}, poly={self.poly:#x})"

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return int(self.exp[self.log[a] + self.log[b]])

    def inverse(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("zero has no multiplicative inverse")
        return int(self.exp[(self.order - self.log[a]) % self.order])

    def power(self, a: int, n: int) -> int:
        if n == 0:
            return 1
        if a == 0:
            return 0
        return int(self.exp[(self.log[a] * n) % self.order])

    def alpha(self, i: int) -> int:
        """The i-th nonzero element, 1 <= i <= N."""
        if not 1 <= i <= self.order:
            raise IndexError(f"element index {i} outside [1, {self.order}]")
        return int(self.exp[i % self.order])

    def generator_row(self, i: int, L: int) -> np.ndarray:
        """Row ``[1, a_i, a_i^2, ..., a_i^(L-1)]`` of the Vandermonde generator."""
        if not 1 <= L <= self.order:
            raise ValueError(f"L={L} outside [1, {self.order}]")
        if not 1 <= i <= self.order:
            raise IndexError(f"element index {i} outside [1, {self.order}]")
        return self._vandermonde[i - 1, :L].copy()

    def generator_matrix(self, indices, L: int) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.int64)
        if idx.size and (idx.min() < 1 or idx.max() > self.order):
            raise IndexError(f"element indices must lie in [1, {self.order}]")
        if not 1 <= L <= self.order:
            raise ValueError(f"L={L} outside [1, {self.order}]")
        return self._vandermonde[idx - 1, :L]

    def matmul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Matrix product with XOR accumulation."""
        a = np.asarray(a, dtype=self.dtype)
        b = np.asarray(b, dtype=self.dtype)
        squeeze = b.ndim == 1
        if squeeze:
            b = b[:, None]
        if a.shape[-1] != b.shape[0]:
            raise ValueError(f"shape mismatch {a.shape} @ {b.shape}")
        prod = self.mul_table[a[..., :, None], b[None, :, :]]
        out = np.bitwise_xor.reduce(prod, axis=-2)
        return out[..., 0] if squeeze else out

    def invert(self, m: np.ndarray) -> np.ndarray:
        """Gauss-Jordan inverse with first-nonzero pivoting."""
        m = np.asarray(m, dtype=self.dtype)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"matrix must be square, got shape {m.shape}")
        n = m.shape[0]
        aug = np.concatenate([m, np.eye(n, dtype=self.dtype)], axis=1)
        for col in range(n):
            nz = np.nonzero(aug[col:, col])[0]
            if nz.size == 0:
                raise SingularMatrixError(f"matrix is singular (column {col})")
            piv = col + nz[0]
            if piv != col:
                aug[[col, piv]] = aug[[piv, col]]
            aug[col] = self.mul_table[self.inverse(int(aug[col, col])), aug[col]]
            factors = aug[:, col].copy()
            factors[col] = 0
            rows = np.nonzero(factors)[0]
            if rows.size:
                aug[rows] ^= self.mul_table[factors[rows, None], aug[col][None, :]]
        return aug[:, n:].copy()

    def rank(self, m: np.ndarray) -> int:
        m = np.array(m, dtype=self.dtype)
        rows, cols = m.shape
        r = 0
        for col in range(cols):
            if r == rows:
                break
            nz = np.nonzero(m[r:, col])[0]
            if nz.size == 0:
                continue
            piv = r + nz[0]
            m[[r, piv]] = m[[piv, r]]
            m[r] = self.mul_table[self.inverse(int(m[r, col])), m[r]]
            factors = m[:, col].copy()
            factors[r] = 0
            m ^= self.mul_table[factors[:, None], m[r][None, :]]
            r += 1
        return r


GF256 = GF(8)


def gf_mul(a: int, b: int, field: GF = GF256) -> int:
    return field.mul(a, b)


def generator_row(i: int, L: int, field: GF = GF256) -> np.ndarray:
    return field.generator_row(i, L)


def invert(m: np.ndarray, field: GF = GF256) -> np.ndarray:
    return field.invert(m)
