"""Exact linear algebra over F_p for p <= 64.

Compute kernels work on unpacked ``int64`` numpy arrays with delayed
reduction: products of residues are accumulated exactly and reduced once.
``FMatrix`` is the packed storage form (base-p digits in 64-bit words) used
for the binary cache.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

MAGIC = b"LLWY"
VERSION = 1
MAX_P = 64


class NotInvariantError(ValueError):
    pass


class CacheFormatError(ValueError):
    pass


def check_prime(p: int) -> None:
    if p < 2 or p > MAX_P or any(p % d == 0 for d in range(2, math.isqrt(p) + 1)):
        raise ValueError(f"p={p} must be a prime <= {MAX_P}")


_INV: dict[int, np.ndarray] = {}


def inverses(p: int) -> np.ndarray:
    """Table of multiplicative inverses mod p (entry 0 is 0)."""
    if p not in _INV:
        t = np.zeros(p, dtype=np.int64)
        for x in range(1, p):
            t[x] = pow(x, -1, p)
        _INV[p] = t
    return _INV[p]


def as_array(a, p: int) -> np.ndarray:
    if isinstance(a, FMatrix):
        return a.to_array()
    if sp.issparse(a):
        a = a.toarray()
    return np.asarray(a, dtype=np.int64) % p


def matmul(a, b, p: int) -> np.ndarray:
    """Product mod p; either factor may be scipy-sparse."""
    if sp.issparse(a) or sp.issparse(b):
        out = a @ b
        if sp.issparse(out):
            out = out.toarray()
        return np.asarray(out, dtype=np.int64) % p
    return (np.asarray(a, dtype=np.int64) @ np.asarray(b, dtype=np.int64)) % p


def rref(a, p: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form; returns (nonzero rows, pivot columns).

    Row updates are left unreduced: each step adds at most (p-1)^2 in absolute
    value per entry, so int64 cannot overflow for any realistic size. Only the
    pivot column and pivot row are reduced when they are read.
    """
    a = np.array(as_array(a, p), dtype=np.int64, copy=True)
    if a.ndim != 2:
        raise ValueError("rref expects a matrix")
    m, n = a.shape
    inv = inverses(p)
    r = 0
    piv: list[int] = []
    for c in range(n):
        if r == m:
            break
        col = a[r:, c]
        np.remainder(col, p, out=col)
        nz = np.flatnonzero(col)
        if nz.size == 0:
            continue
        k = r + nz[0]
        if k != r:
            a[[r, k]] = a[[k, r]]
        a[r, c:] = a[r, c:] * inv[a[r, c]] % p
        f = a[:, c] % p
        f[r] = 0
        rows = np.flatnonzero(f)
        if rows.size:
            a[rows, c:] -= f[rows, None] * a[r, c:]
        piv.append(c)
        r += 1
    return a[:r] % p, piv


def echelonize(m, p: int) -> tuple[np.ndarray, int, list[int]]:
    r, piv = rref(m, p)
    return r, len(piv), piv


def rank(a, p: int) -> int:
    return len(rref(a, p)[1])


def nullspace(a, p: int) -> np.ndarray:
    """Basis (as rows, in RREF) of the right kernel {x : a x = 0}."""
    a = as_array(a, p)
    n = a.shape[1]
    r, piv = rref(a, p)
    free = [c for c in range(n) if c not in set(piv)]
    out = np.zeros((len(free), n), dtype=np.int64)
    for k, f in enumerate(free):
        out[k, f] = 1
        if piv:
            out[k, piv] = (-r[:, f]) % p
    return rref(out, p)[0] if len(free) else out


def left_nullspace(a, p: int) -> np.ndarray:
    """Rows y with y a = 0."""
    return nullspace(as_array(a, p).T, p)


def solve(a, b, p: int) -> np.ndarray | None:
    """Some x with a x = b, or None when the system is inconsistent."""
    a = as_array(a, p)
    b = as_array(b, p).reshape(a.shape[0], -1)
    n = a.shape[1]
    r, piv = rref(np.hstack([a, b]), p)
    if any(c >= n for c in piv):
        return None
    x = np.zeros((n, b.shape[1]), dtype=np.int64)
    for i, c in enumerate(piv):
        x[c] = r[i, n:]
    return x[:, 0] if x.shape[1] == 1 else x


def inverse(a, p: int) -> np.ndarray:
    a = as_array(a, p)
    n = a.shape[0]
    r, piv = rref(np.hstack([a, np.eye(n, dtype=np.int64)]), p)
    if piv != list(range(n)):
        raise ZeroDivisionError("matrix is singular mod p")
    return r[:, n:]


def random_matrix(shape, p: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).integers(0, p, size=shape, dtype=np.int64)


class Echelon:
    """Incrementally maintained RREF basis of a row space in F_p^n."""

    def __init__(self, n: int, p: int):
        self.n = n
        self.p = p
        self.rows = np.zeros((0, n), dtype=np.int64)
        self.pivots: list[int] = []

    @property
    def dim(self) -> int:
        return len(self.pivots)

    def reduce(self, v: np.ndarray) -> np.ndarray:
        v = np.atleast_2d(np.asarray(v, dtype=np.int64)) % self.p
        if self.pivots:
            v = (v - v[:, self.pivots] @ self.rows) % self.p
        return v

    def add(self, v: np.ndarray) -> np.ndarray:
        """Add rows; return the new independent directions (in RREF among themselves)."""
        res = self.reduce(v)
        res = res[np.any(res != 0, axis=1)]
        if res.shape[0] == 0:
            return res
        new, piv = rref(res, self.p)
        if self.pivots:
            self.rows = (self.rows - self.rows[:, piv] @ new) % self.p
        rows = np.vstack([self.rows, new])
        pivots = self.pivots + piv
        order = np.argsort(pivots, kind="stable")
        self.rows = rows[order]
        self.pivots = [pivots[i] for i in order]
        return new

    def contains(self, v: np.ndarray) -> bool:
        return not np.any(self.reduce(v))

    def subspace(self) -> "Subspace":
        return Subspace(self.p, self.n, self.rows.copy(), list(self.pivots))


@dataclass
class Subspace:
    """Row space given by an RREF basis."""

    p: int
    ambient_dim: int
    basis: np.ndarray
    pivots: list[int]

    @classmethod
    def span(cls, vectors, p: int, n: int | None = None) -> "Subspace":
        v = as_array(vectors, p)
        if n is None:
            n = v.shape[1]
        v = v.reshape(-1, n)
        r, piv = rref(v, p)
        return cls(p, n, r, piv)

    @classmethod
    def zero(cls, n: int, p: int) -> "Subspace":
        return cls(p, n, np.zeros((0, n), dtype=np.int64), [])

    @property
    def dim(self) -> int:
        return len(self.pivots)

    def reduce(self, v: np.ndarray) -> np.ndarray:
        v = np.atleast_2d(np.asarray(v, dtype=np.int64)) % self.p
        if self.pivots:
            v = (v - v[:, self.pivots] @ self.basis) % self.p
        return v

    def contains(self, v) -> bool:
        return not np.any(self.reduce(v))

    def complement_coords(self) -> list[int]:
        piv = set(self.pivots)
        return [c for c in range(self.ambient_dim) if c not in piv]

    def __add__(self, other: "Subspace") -> "Subspace":
        return Subspace.span(np.vstack([self.basis, other.basis]), self.p, self.ambient_dim)

    def intersect(self, other: "Subspace") -> "Subspace":
        # x in both iff x = u B1 = v B2; kernel of [B1; -B2]^T
        if self.dim == 0 or other.dim == 0:
            return Subspace.zero(self.ambient_dim, self.p)
        stack = np.vstack([self.basis, (-other.basis) % self.p])
        k = left_nullspace(stack, self.p)
        if k.shape[0] == 0:
            return Subspace.zero(self.ambient_dim, self.p)
        return Subspace.span(matmul(k[:, : self.dim], self.basis, self.p), self.p, self.ambient_dim)

    def __eq__(self, other) -> bool:
        return (isinstance(other, Subspace) and self.ambient_dim == other.ambient_dim
                and self.pivots == other.pivots and np.array_equal(self.basis, other.basis))


def _apply_rows(g, rows: np.ndarray, p: int) -> np.ndarray:
    """Images g v of the row vectors v, returned as rows."""
    if sp.issparse(g):
        return np.asarray((g @ rows.T).T, dtype=np.int64) % p
    return (rows @ np.asarray(g, dtype=np.int64).T) % p


def spin(seeds, generators: Sequence, p: int, n: int | None = None) -> Subspace:
    """Smallest subspace containing the seeds and stable under all generators."""
    seeds = np.atleast_2d(as_array(seeds, p))
    if n is None:
        n = seeds.shape[1]
    ech = Echelon(n, p)
    frontier = ech.add(seeds)
    while frontier.shape[0]:
        images = np.vstack([_apply_rows(g, frontier, p) for g in generators])
        frontier = ech.add(images)
    return ech.subspace()


def quotient_action(generators: Sequence, s: Subspace) -> list[np.ndarray]:
    """Action on ambient/s in the coordinates of the non-pivot columns."""
    p = s.p
    comp = s.complement_coords()
    out = []
    for g in generators:
        if s.dim and np.any(s.reduce(_apply_rows(g, s.basis, p))):
            raise NotInvariantError("subspace is not stable under a generator")
        basis = np.zeros((len(comp), s.ambient_dim), dtype=np.int64)
        basis[np.arange(len(comp)), comp] = 1
        img = s.reduce(_apply_rows(g, basis, p)) if comp else basis
        out.append(img[:, comp].T.copy() if comp else np.zeros((0, 0), dtype=np.int64))
    return out


def submodule_action(generators: Sequence, s: Subspace) -> list[np.ndarray]:
    """Action on s in the coordinates read off at the pivot columns."""
    p = s.p
    out = []
    for g in generators:
        img = _apply_rows(g, s.basis, p) if s.dim else s.basis
        if s.dim and np.any(s.reduce(img)):
            raise NotInvariantError("subspace is not stable under a generator")
        out.append(img[:, s.pivots].T.copy())
    return out


def digits_per_word(p: int) -> int:
    d = 0
    while p ** (d + 1) <= 2**64:
        d += 1
    return d


@dataclass(frozen=True, eq=False)
class FMatrix:
    """Matrix over F_p stored column-major as base-p digits packed into uint64 words."""

    p: int
    rows: int
    cols: int
    words: np.ndarray

    @classmethod
    def from_array(cls, a, p: int) -> "FMatrix":
        check_prime(p)
        a = np.asarray(a, dtype=np.int64) % p
        rows, cols = a.shape
        d = digits_per_word(p)
        flat = a.T.reshape(-1).astype(np.uint64)
        nwords = -(-flat.size // d) if flat.size else 0
        padded = np.zeros(nwords * d, dtype=np.uint64)
        padded[: flat.size] = flat
        chunks = padded.reshape(nwords, d)
        powers = np.array([p**k for k in range(d)], dtype=np.uint64)
        words = (chunks * powers).sum(axis=1, dtype=np.uint64) if nwords else np.zeros(0, np.uint64)
        return cls(p, rows, cols, words)

    def to_array(self) -> np.ndarray:
        d = digits_per_word(self.p)
        w = self.words.copy()
        digits = np.empty((w.size, d), dtype=np.uint64)
        base = np.uint64(self.p)
        for k in range(d):
            digits[:, k] = w % base
            w //= base
        flat = digits.reshape(-1)[: self.rows * self.cols].astype(np.int64)
        return flat.reshape(self.cols, self.rows).T.copy()

    def to_bytes(self) -> bytes:
        head = MAGIC + struct.pack("<HHII", VERSION, self.p, self.rows, self.cols)
        return head + self.words.astype("<u8").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "FMatrix":
        if len(data) < 16 or data[:4] != MAGIC:
            raise CacheFormatError("bad magic in matrix header")
        version, p, rows, cols = struct.unpack("<HHII", data[4:16])
        if version != VERSION:
            raise CacheFormatError(f"unsupported cache version {version}")
        check_prime(p)
        d = digits_per_word(p)
        nwords = -(-(rows * cols) // d)
        body = data[16:]
        if len(body) != 8 * nwords:
            raise CacheFormatError("truncated matrix payload")
        return cls(p, rows, cols, np.frombuffer(body, dtype="<u8").astype(np.uint64))

    def __eq__(self, other) -> bool:
        return (isinstance(other, FMatrix) and (self.p, self.rows, self.cols) == (other.p, other.rows, other.cols)
                and np.array_equal(self.words, other.words))
