"""
Prime-field arithmetic and dense linear algebra over F_q.

Matrices are plain numpy integer arrays with entries in [0, q).  All
elimination routines copy their input and reduce modulo q after every
row operation, so int64 never overflows for the field sizes used here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


@dataclass(frozen=True)
class Field:
    """The prime field F_q with elements stored as ints in [0, q)."""

    q: int

    def __post_init__(self):
        if not isinstance(self.q, (int, np.integer)) or not _is_prime(int(self.q)):
            raise ValueError(f"field modulus must be prime, got {self.q!r}")

    def _check(self, *xs: int) -> None:
        for x in xs:
            if not 0 <= x < self.q:
                raise ValueError(f"{x} is not an element of F_{self.q}")

    def add(self, a: int, b: int) -> int:
        self._check(a, b)
        return (a + b) % self.q

    def sub(self, a: int, b: int) -> int:
        self._check(a, b)
        return (a - b) % self.q

    def mul(self, a: int, b: int) -> int:
        self._check(a, b)
        return (a * b) % self.q

    def neg(self, a: int) -> int:
        self._check(a)
        return (-a) % self.q

    def inv(self, a: int) -> int:
        self._check(a)
        if a == 0:
            raise ZeroDivisionError(f"0 has no inverse in F_{self.q}")
        return pow(a, self.q - 2, self.q)

    def arith(self, a: int, b: int, op: str) -> int:
        """Dispatch ``op`` in {add, sub, mul, inv}; ``b`` is ignored for inv."""
        if op == "inv":
            return self.inv(a)
        try:
            fn = {"add": self.add, "sub": self.sub, "mul": self.mul}[op]
        except KeyError:
            raise ValueError(f"unknown field operation {op!r}") from None
        return fn(a, b)

    def matrix(self, rows, cols: int | None = None) -> np.ndarray:
        """Coerce ``rows`` to a 2-D int64 array and check every entry is in [0, q)."""
        m = np.array(rows, dtype=np.int64)
        if m.ndim == 1 and m.size == 0:
            m = m.reshape(0, cols or 0)
        if m.ndim != 2:
            raise ValueError(f"expected a 2-D matrix, got shape {m.shape}")
        if m.size and (m.min() < 0 or m.max() >= self.q):
            raise ValueError(f"matrix entries must lie in [0, {self.q})")
        return m


def matmul_mod(a: np.ndarray, b: np.ndarray, q: int) -> np.ndarray:
    """``(a @ b) % q`` for int arrays with entries in [0, q).

    numpy has no BLAS path for integer matmul, so the product goes through
    float64 whenever every partial sum stays below 2**53 and is exact.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    inner = a.shape[-1]
    if inner * (q - 1) ** 2 < 2**53:
        out = a.astype(np.float64, copy=False) @ b.astype(np.float64, copy=False)
        return np.fmod(out, q).astype(np.int64)
    if inner * (q - 1) ** 2 < 2**63:
        return (np.asarray(a, dtype=np.int64) @ np.asarray(b, dtype=np.int64)) % q
    # huge moduli: exact Python ints
    out = (a.astype(object) @ b.astype(object)) % q
    return out.astype(np.int64)


def row_echelon(field: Field, m: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row-echelon form of ``m`` over ``field``.

    Returns the reduced matrix and the list of pivot columns; the rank is
    ``len(pivots)``.
    """
    q = field.q
    r = np.array(m, dtype=np.int64, copy=True) % q
    n_rows, n_cols = r.shape
    pivots: list[int] = []
    row = 0
    for col in range(n_cols):
        if row == n_rows:
            break
        nz = np.nonzero(r[row:, col])[0]
        if nz.size == 0:
            continue
        p = row + int(nz[0])
        if p != row:
            r[[row, p]] = r[[p, row]]
        r[row] = (r[row] * pow(int(r[row, col]), q - 2, q)) % q
        factors = r[:, col].copy()
        factors[row] = 0
        mask = factors != 0
        if mask.any():
            r[mask] = (r[mask] - np.outer(factors[mask], r[row])) % q
        pivots.append(col)
        row += 1
    return r, pivots


def rank(field: Field, m: np.ndarray) -> int:
    m = np.asarray(m)
    if m.size == 0:
        return 0
    return len(row_echelon(field, m)[1])


def column_space_contains(field: Field, a: np.ndarray, b: np.ndarray) -> bool:
    """True iff every column of ``a`` lies in the column space of ``b``."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[0] != b.shape[0]:
        raise ValueError(
            f"row count mismatch: {a.shape} vs {b.shape}"
        )
    return rank(field, np.hstack([a, b])) == rank(field, b)


def solve(field: Field, a: np.ndarray, b: np.ndarray) -> np.ndarray | None:
    """One solution ``x`` of ``a @ x = b`` over ``field``, or None if inconsistent.

    ``b`` may be a vector or a matrix with one right-hand side per column.
    Free variables are set to zero.
    """
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    vec = b.ndim == 1
    if vec:
        b = b[:, None]
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"row count mismatch: {a.shape} vs {b.shape}")
    n = a.shape[1]
    red, pivots = row_echelon(field, np.hstack([a, b]))
    if any(p >= n for p in pivots):
        return None
    x = np.zeros((n, b.shape[1]), dtype=np.int64)
    for i, p in enumerate(pivots):
        x[p] = red[i, n:]
    return x[:, 0] if vec else x
