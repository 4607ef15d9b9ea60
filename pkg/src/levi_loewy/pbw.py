"""PBW straightening in U_chi(g) and induced-module action matrices.

An induced module ``U_chi(g) (x)_{U(s)} V`` has basis ``y^a (x) v_j`` where
``y^a`` runs over ordered monomials with exponents < p in a complement of the
subalgebra ``s``.  Its index is ``mono * dim V + j`` with the first
complement factor most significant, so the monomial ``1`` is the leading block.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .chevalley import LieAlgebra

Vector = dict[int, int]


@dataclass
class InductionDatum:
    """Data for U_chi(g) (x)_{U(s)} V.

    Parameters
    ----------
    lie : LieAlgebra
    chi : numpy.ndarray
        p-character values on the basis (used only for p-th power reduction).
    complement : sequence of int
        Basis indices spanning a complement of s, in PBW order.
    inner : mapping of int to array
        Action matrices of the basis elements of s on V.
    inner_dim : int
    """

    lie: LieAlgebra
    chi: np.ndarray
    complement: Sequence[int]
    inner: Mapping[int, np.ndarray]
    inner_dim: int
    inner_weights: np.ndarray | None = None
    place: list[int] = field(init=False)

    def __post_init__(self):
        k = len(self.complement)
        p = self.lie.p
        self.place = [p ** (k - 1 - i) for i in range(k)]
        self.size = p**k * self.inner_dim


class Straightener:
    """Memoized expansion of x * (y^a (x) v) in the induced basis."""

    def __init__(self, datum: InductionDatum):
        self.d = datum
        self.lie = datum.lie
        self.p = datum.lie.p
        self.pos = {x: i for i, x in enumerate(datum.complement)}
        self.memo: dict[tuple[int, int], Vector] = {}
        # elements outside complement and subalgebra are allowed (Levi modules
        # only carry the Levi action); acting by them raises KeyError
        self._inner = {x: np.asarray(m, dtype=np.int64) % self.p for x, m in datum.inner.items()}

    def exponents(self, b: int) -> list[int]:
        mono = b // self.d.inner_dim
        out = []
        for pl in self.d.place:
            out.append(mono // pl % self.p)
        return out

    def _first(self, mono: int) -> int:
        # position of the first nonzero exponent
        for i, pl in enumerate(self.d.place):
            if mono // pl % self.p:
                return i
        return len(self.d.place)

    def _prepend(self, i: int, b: int) -> Vector:
        """y_i * b when i is at or before the first factor of b."""
        d, p = self.d, self.p
        step = d.place[i] * d.inner_dim
        a_i = b // step % p
        if a_i + 1 < p:
            return {b + step: 1}
        y = d.complement[i]
        if self.lie.is_toral(y):
            # h^p = h^[p] = h
            return {b - (p - 2) * step: 1}
        c = int(d.chi[y]) % p
        return {b - a_i * step: c} if c else {}

    def _left(self, i: int, w: Vector) -> Vector:
        out: Vector = {}
        y = self.d.complement[i]
        for b, c in w.items():
            mono = b // self.d.inner_dim
            if i <= self._first(mono):
                part = self._prepend(i, b)
            else:
                part = self.act(y, b)
            _axpy(out, c, part, self.p)
        return out

    def act(self, x: int, b: int) -> Vector:
        """Expansion of b_x * (basis vector b)."""
        key = (x, b)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        d, p = self.d, self.p
        mono, j = divmod(b, d.inner_dim)
        if mono == 0:
            if x in self._inner:
                col = self._inner[x][:, j]
                res = {int(k): int(col[k]) for k in np.flatnonzero(col)}
            else:
                res = self._prepend(self.pos[x], b)
        elif x in self.pos and self.pos[x] <= self._first(mono):
            res = self._prepend(self.pos[x], b)
        else:
            i = self._first(mono)
            y = d.complement[i]
            b1 = b - d.place[i] * d.inner_dim
            res = self._left(i, self.act(x, b1))
            for z, c in self.lie.bracket(x, y).items():
                _axpy(res, c, self.act(z, b1), p)
        self.memo[key] = res
        return res

    def action_matrix(self, x: int) -> sp.csr_matrix:
        rows, cols, vals = [], [], []
        for b in range(self.d.size):
            for k, c in self.act(x, b).items():
                rows.append(k)
                cols.append(b)
                vals.append(c)
        n = self.d.size
        return sp.csr_matrix((np.array(vals, dtype=np.int64), (rows, cols)), shape=(n, n))

    def weights(self) -> np.ndarray:
        """Weight of each basis vector, from the inner weights and the monomial."""
        d = self.d
        rank = self.lie.rank
        inner = d.inner_weights if d.inner_weights is not None else np.zeros((d.inner_dim, rank), dtype=np.int64)
        out = np.zeros((d.size, rank), dtype=np.int64)
        wts = np.array([self.lie.weights[y] for y in d.complement], dtype=np.int64).reshape(-1, rank)
        for mono in range(d.size // d.inner_dim):
            a = np.array(self.exponents(mono * d.inner_dim), dtype=np.int64)
            shift = a @ wts if len(a) else np.zeros(rank, dtype=np.int64)
            out[mono * d.inner_dim:(mono + 1) * d.inner_dim] = inner + shift
        return out


def _axpy(out: Vector, c: int, v: Vector, p: int) -> None:
    for k, x in v.items():
        y = (out.get(k, 0) + c * x) % p
        if y:
            out[k] = y
        else:
            out.pop(k, None)


def induced_action(datum: InductionDatum) -> tuple[list[sp.csr_matrix], Straightener]:
    st = Straightener(datum)
    depth = len(datum.complement) * datum.lie.p + 100
    old = sys.getrecursionlimit()
    if depth * 4 > old:
        sys.setrecursionlimit(depth * 4)
    return [st.action_matrix(x) for x in range(datum.lie.dim)], st


def act_on_induced(x: int, b: int, datum: InductionDatum, straightener: Straightener | None = None) -> Vector:
    st = straightener or Straightener(datum)
    return st.act(x, b)


class PBWAlgebra:
    """U_chi(g) with its ordered monomial basis (negatives, torus, positives).

    Elements are dicts from exponent tuples to coefficients in F_p.
    """

    def __init__(self, lie: LieAlgebra, chi: np.ndarray | None = None, basis: Sequence[int] | None = None):
        self.lie = lie
        self.p = lie.p
        self.chi = lie.chi if chi is None else np.asarray(chi)
        self.basis = list(range(lie.dim)) if basis is None else list(basis)
        datum = InductionDatum(lie, self.chi, self.basis, {}, 1)
        if set(self.basis) != set(range(lie.dim)):
            # a subalgebra: the other elements never occur
            datum.inner = {x: np.zeros((1, 1), dtype=np.int64) for x in range(lie.dim) if x not in self.basis}
        self.datum = datum
        self.st = Straightener(datum)
        self.k = len(self.basis)

    def index(self, exps: Sequence[int]) -> int:
        return sum(a * pl for a, pl in zip(exps, self.datum.place))

    def exps(self, idx: int) -> tuple[int, ...]:
        return tuple(self.st.exponents(idx))

    def mul_basis(self, x: int, elem: Mapping[tuple, int]) -> dict[tuple, int]:
        """Left multiplication by a single Lie basis element."""
        out: Vector = {}
        for e, c in elem.items():
            _axpy(out, c, self.st.act(x, self.index(e)), self.p)
        return {self.exps(k): v for k, v in out.items()}

    def multiply(self, a: Mapping[tuple, int], b: Mapping[tuple, int]) -> dict[tuple, int]:
        out: dict[tuple, int] = {}
        for ea, ca in a.items():
            cur = dict(b)
            for pos in reversed(range(self.k)):
                for _ in range(ea[pos]):
                    cur = self.mul_basis(self.basis[pos], cur)
            for e, c in cur.items():
                v = (out.get(e, 0) + ca * c) % self.p
                if v:
                    out[e] = v
                else:
                    out.pop(e, None)
        return out

    def monomial(self, exps: Mapping[int, int] | Sequence[int]) -> dict[tuple, int]:
        if isinstance(exps, Mapping):
            e = [0] * self.k
            for x, a in exps.items():
                e[self.basis.index(x)] = a
            exps = e
        return {tuple(exps): 1}


def pbw_multiply(a: Mapping[tuple, int], b: Mapping[tuple, int], algebra: PBWAlgebra) -> dict[tuple, int]:
    return algebra.multiply(a, b)
