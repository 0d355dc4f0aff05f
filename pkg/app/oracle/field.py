"""Linear algebra over a prime field on numpy int64 arrays."""
import itertools
from typing import Iterator, List, Optional, Tuple

import numpy as np
from sympy import isprime

MAX_PRIME = 2**31


class PrimeField:
    """The field F_p, elements stored as canonical residues 0..p-1."""

    def __init__(self, p: int):
        """Initialise F_p; p must be a prime not exceeding 2^31."""
        if isinstance(p, bool) or not isinstance(p, (int, np.integer)):
            raise TypeError("p must be an integer")
        if not isprime(int(p)) or p > MAX_PRIME:
            raise ValueError(f"p must be a prime <= 2^31, got {p}")
        self.p = int(p)
        self._table = None
        if self.p <= 1 << 16:
            self._table = np.array([0] + [pow(x, -1, self.p) for x in range(1, self.p)], dtype=np.int64)

    def __repr__(self):
        return f"PrimeField({self.p})"

    def __eq__(self, other):
        if isinstance(other, PrimeField):
            return self.p == other.p
        return False

    def __hash__(self):
        return hash(("PrimeField", self.p))

    def reduce(self, a) -> np.ndarray:
        return np.asarray(a, dtype=np.int64) % self.p

    def inv(self, a: int) -> int:
        a = int(a) % self.p
        if a == 0:
            raise ZeroDivisionError("0 has no inverse")
        return pow(a, -1, self.p)

    def inverse_array(self, values: np.ndarray) -> np.ndarray:
        if self._table is not None:
            return self._table[values]
        return np.array([pow(int(x), -1, self.p) for x in values.ravel()], dtype=np.int64).reshape(values.shape)

    def matmul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Product reduced mod p; falls back to Python integers when int64 could overflow."""
        inner = a.shape[-1]
        if (self.p - 1) ** 2 * max(inner, 1) < 2**63:
            return (np.asarray(a, dtype=np.int64) @ np.asarray(b, dtype=np.int64)) % self.p
        product = np.asarray(a, dtype=object) @ np.asarray(b, dtype=object)
        return (product % self.p).astype(np.int64)

    def random_matrix(self, rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
        return rng.integers(0, self.p, size=(rows, cols), dtype=np.int64)

    def random_invertible(self, rng: np.random.Generator, n: int) -> np.ndarray:
        while True:
            candidate = self.random_matrix(rng, n, n)
            if self.rank(candidate) == n:
                return candidate

    def rref(self, a: np.ndarray) -> Tuple[np.ndarray, List[int]]:
        """
        Reduced row echelon form.

        Returns
        -------
        r : np.ndarray
            Row-reduced copy of a (zero rows at the bottom)
        pivot_cols : list[int]
            Indices of pivot columns; their count is the rank
        """
        r = self.reduce(a).copy()
        m, n = r.shape
        pivot_cols: List[int] = []
        row = 0
        for col in range(n):
            if row == m:
                break
            nonzero = np.nonzero(r[row:, col])[0]
            if nonzero.size == 0:
                continue
            found = row + int(nonzero[0])
            if found != row:
                r[[row, found]] = r[[found, row]]
            r[row] = (r[row] * self.inv(r[row, col])) % self.p
            factors = r[:, col].copy()
            factors[row] = 0
            r = (r - np.outer(factors, r[row])) % self.p
            pivot_cols.append(col)
            row += 1
        return r, pivot_cols

    def rank(self, a: np.ndarray) -> int:
        a = np.asarray(a)
        if a.size == 0:
            return 0
        return len(self.rref(a)[1])

    def nullspace(self, a: np.ndarray) -> np.ndarray:
        """Basis of {x : a x = 0} as the rows of a (k, n) array."""
        a = np.asarray(a, dtype=np.int64)
        n = a.shape[1]
        if a.shape[0] == 0:
            return np.eye(n, dtype=np.int64)
        r, pivots = self.rref(a)
        free = [c for c in range(n) if c not in pivots]
        basis = np.zeros((len(free), n), dtype=np.int64)
        for k, col in enumerate(free):
            basis[k, col] = 1
            for row, pivot in enumerate(pivots):
                basis[k, pivot] = (-r[row, col]) % self.p
        return basis

    def solve(self, a: np.ndarray, b: np.ndarray) -> Optional[np.ndarray]:
        """One solution X of a X = b (b may have several columns), or None."""
        a = self.reduce(a)
        b = self.reduce(b).reshape(a.shape[0], -1)
        r, pivots = self.rref(np.hstack([a, b]))
        n = a.shape[1]
        if any(col >= n for col in pivots):
            return None
        x = np.zeros((n, b.shape[1]), dtype=np.int64)
        for row, pivot in enumerate(pivots):
            x[pivot] = r[row, n:]
        return x

    def det(self, a: np.ndarray) -> int:
        a = np.asarray(a)
        if a.shape[0] != a.shape[1]:
            raise ValueError("determinant of a non-square matrix")
        if a.shape[0] == 0:
            return 1
        return int(self.batched_det(a[None, :, :])[0])

    def inverse(self, a: np.ndarray) -> np.ndarray:
        n = a.shape[0]
        x = self.solve(a, np.eye(n, dtype=np.int64))
        if x is None:
            raise ZeroDivisionError("matrix is singular")
        return x

    def batched_rank(self, stack: np.ndarray) -> np.ndarray:
        """Ranks of a stack of matrices of shape (N, m, n), eliminated in lockstep."""
        a = self.reduce(stack).copy()
        count, m, n = a.shape
        rank = np.zeros(count, dtype=np.int64)
        if m == 0 or n == 0:
            return rank
        rows = np.arange(m)
        for col in range(n):
            mask = (a[:, :, col] != 0) & (rows[None, :] >= rank[:, None])
            sel = np.nonzero(mask.any(axis=1))[0]
            if sel.size == 0:
                continue
            piv = np.argmax(mask[sel], axis=1)
            r = rank[sel]
            upper, lower = a[sel, r, :].copy(), a[sel, piv, :].copy()
            a[sel, r, :] = lower
            a[sel, piv, :] = upper
            pivot_rows = (lower * self.inverse_array(lower[:, col])[:, None]) % self.p
            a[sel, r, :] = pivot_rows
            factors = a[sel, :, col].copy()
            factors[np.arange(sel.size), r] = 0
            a[sel] = (a[sel] - factors[:, :, None] * pivot_rows[:, None, :]) % self.p
            rank[sel] += 1
        return rank

    def batched_det(self, stack: np.ndarray) -> np.ndarray:
        """Determinants of a stack of square matrices of shape (N, n, n)."""
        a = self.reduce(stack).copy()
        count, n, _ = a.shape
        det = np.ones(count, dtype=np.int64)
        rows = np.arange(n)
        for col in range(n):
            mask = (a[:, :, col] != 0) & (rows[None, :] >= col)
            has = mask.any(axis=1)
            det[~has] = 0
            sel = np.nonzero(has)[0]
            if sel.size == 0:
                break
            piv = np.argmax(mask[sel], axis=1)
            swapped = sel[piv != col]
            det[swapped] = (-det[swapped]) % self.p
            upper, lower = a[sel, col, :].copy(), a[sel, piv, :].copy()
            a[sel, col, :] = lower
            a[sel, piv, :] = upper
            pivots = lower[:, col]
            det[sel] = (det[sel] * pivots) % self.p
            factors = (a[sel, col + 1:, col] * self.inverse_array(pivots)[:, None]) % self.p
            a[sel, col + 1:, :] = (a[sel, col + 1:, :] - factors[:, :, None] * lower[:, None, :]) % self.p
        return det


def enumerate_subspaces(field: PrimeField, n: int, k: Optional[int] = None) -> Iterator[np.ndarray]:
    """
    Yields a basis (as the columns of an n x k array) of every subspace of
    F_p^n, optionally only those of dimension k. Subspaces are generated from
    their reduced row echelon forms, so each appears exactly once.
    """
    dims = range(n + 1) if k is None else [k]
    for dim in dims:
        for pivots in itertools.combinations(range(n), dim):
            free = [(row, col) for row, pivot in enumerate(pivots) for col in range(pivot + 1, n) if col not in pivots]
            for values in itertools.product(range(field.p), repeat=len(free)):
                echelon = np.zeros((dim, n), dtype=np.int64)
                for row, pivot in enumerate(pivots):
                    echelon[row, pivot] = 1
                for (row, col), value in zip(free, values):
                    echelon[row, col] = value
                yield echelon.T.copy()
