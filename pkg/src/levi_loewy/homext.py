"""Ext^1 between explicit modules via cocycles on the Lie basis.

An extension 0 -> N -> E -> M -> 0 is written with E = N (+) M and

    rho_E(x) = [[rho_N(x), c(x)], [0, rho_M(x)]].

E is a U_chi(g)-module exactly when c satisfies the linear bracket and
p-power constraints below; c and c + (rho_N f - f rho_M) give isomorphic
extensions.  All linear algebra is over F_p with column-major vectorisation
vec(A X B) = (B^T kron A) vec(X).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from . import ffla
from .modules import GradedModule, GSubspace, hom_space, quotient

DEFAULT_BUDGET = 10**5


class BudgetExceeded(RuntimeError):
    pass


@dataclass
class ExtSpace:
    """Ext^1(M, N) with a basis of representative cocycles.

    ``cocycles[i][x]`` is the dim N x dim M matrix c(x) of the i-th basis
    cocycle.
    """

    source: GradedModule
    target: GradedModule
    dim: int
    cocycles: list[dict] = field(default_factory=list)
    graded: bool = True
    cocycle_dim: int = 0
    coboundary_dim: int = 0

    def assemble(self, i: int = 0, coeffs: Sequence[int] | None = None) -> GradedModule:
        """The extension module for cocycle i (or a combination of the basis)."""
        if coeffs is None:
            c = self.cocycles[i]
        else:
            p = self.source.p
            c = {x: sum(int(a) * b[x] for a, b in zip(coeffs, self.cocycles)) % p for x in self.source.gens}
        return extension_module(self.source, self.target, c, graded=self.graded)


def _allowed(m: GradedModule, n: GradedModule, x: int | None, graded: bool) -> np.ndarray:
    """vec indices (j * dim N + i) of entries c[i, j] compatible with the grading.

    ``x = None`` asks for degree-preserving maps.
    """
    dn, dm = n.dim, m.dim
    if not graded:
        return np.arange(dn * dm, dtype=np.int64)
    out = []
    for k, cols in m.blocks.items():
        dst = k if x is None else m.target_key(k, x)
        rows = n.blocks.get(dst)
        if rows is None:
            continue
        out.append((cols[:, None] * dn + rows[None, :]).ravel())
    if not out:
        return np.zeros(0, dtype=np.int64)
    return np.sort(np.concatenate(out))


def _left(a: sp.csr_matrix, dm: int) -> sp.csr_matrix:
    """vec(A X) as a matrix acting on vec(X)."""
    return sp.kron(sp.identity(dm, dtype=np.int64, format="csr"), a, format="csr")


def _right(b: sp.csr_matrix, dn: int) -> sp.csr_matrix:
    """vec(X B) as a matrix acting on vec(X)."""
    return sp.kron(b.T.tocsr(), sp.identity(dn, dtype=np.int64, format="csr"), format="csr")


def _mod(a: sp.spmatrix, p: int) -> sp.csr_matrix:
    a = sp.csr_matrix(a, dtype=np.int64)
    a.data %= p
    a.eliminate_zeros()
    return a


def _sparse_nullspace(a: sp.csr_matrix, p: int, seed: int = 0, extra: int = 8) -> np.ndarray:
    """Right kernel of a tall sparse matrix, certified exactly.

    The rows are compressed by a random dense combination S a (whose kernel
    always contains that of a); the kernel of the compressed matrix is then
    checked against a itself and more rows are drawn if it is too large.
    """
    n = a.shape[1]
    a = _mod(a, p)
    a = a[np.flatnonzero(np.diff(a.indptr))]
    if a.shape[0] == 0:
        return np.eye(n, dtype=np.int64)
    rng = np.random.default_rng(seed)
    at = a.T.tocsr()
    comp = np.zeros((0, n), dtype=np.int64)
    want = min(n, a.shape[0]) + extra
    while True:
        rows = []
        for s in range(0, want, 256):
            k = min(256, want - s)
            sm = rng.integers(0, p, size=(a.shape[0], k), dtype=np.int64)
            rows.append(np.asarray(at @ sm).T % p)
        comp = np.vstack([comp] + rows)
        ech, _ = ffla.rref(comp, p)
        comp = ech
        z = ffla.nullspace(comp, p) if comp.shape[0] else np.eye(n, dtype=np.int64)
        if z.shape[0] == 0:
            return z
        chk = np.asarray(a @ z.T) % p
        if not np.any(chk):
            return z
        want = extra + z.shape[0]


def cocycle_constraints(m: GradedModule, n: GradedModule, graded: bool = True):
    """Sparse matrix of the bracket and p-power constraints on c.

    Returns (matrix, layout) where layout lists (x, vec indices) in the
    order the unknowns are stacked.
    """
    if m.gens != n.gens:
        raise ValueError("modules carry different Lie actions")
    ctx = m.ctx
    lie, p = ctx.lie, m.p
    dm, dn = m.dim, n.dim
    gens = m.gens
    layout = [(x, _allowed(m, n, x, graded)) for x in gens]
    offs = {}
    u = 0
    for x, idx in layout:
        offs[x] = (u, idx)
        u += len(idx)
    if u == 0:
        return sp.csr_matrix((0, 0), dtype=np.int64), layout
    full = dm * dn

    def place(mat: sp.csr_matrix, x: int) -> sp.csr_matrix:
        """Columns of mat (acting on vec c(x)) moved to x's slot among the unknowns."""
        o, idx = offs[x]
        sub = mat[:, idx].tocoo()
        return sp.csr_matrix((sub.data, (sub.row, sub.col + o)), shape=(mat.shape[0], u))

    left = {x: _left(n.ops[x], dm) for x in gens}
    right = {x: _right(m.ops[x], dn) for x in gens}
    eye = sp.identity(full, dtype=np.int64, format="csr")
    eqs = []

    def keep(eq):
        eq = _mod(eq, p)
        nz = np.flatnonzero(np.diff(eq.indptr))
        if nz.size:
            eqs.append(eq[nz])

    for a, x in enumerate(gens):
        for y in gens[a + 1:]:
            # c([x,y]) - rho_N(x)c(y) - c(x)rho_M(y) + rho_N(y)c(x) + c(y)rho_M(x) = 0
            eq = place(right[x] - left[x], y) + place(left[y] - right[y], x)
            for z, cz in lie.bracket(x, y).items():
                eq = eq + place(cz * eye, z)
            keep(eq)
        # sum_i rho_N(x)^i c(x) rho_M(x)^(p-1-i) = c(x^[p])
        lp = [eye]
        rp = [eye]
        for _ in range(p - 1):
            lp.append(_mod(lp[-1] @ left[x], p))
            rp.append(_mod(rp[-1] @ right[x], p))
        acc = sp.csr_matrix((full, full), dtype=np.int64)
        for i in range(p):
            acc = acc + lp[i] @ rp[p - 1 - i]
        eq = place(_mod(acc, p), x)
        for z, cz in lie.p_power(x).items():
            eq = eq - place(cz * eye, z)
        keep(eq)
    if not eqs:
        return sp.csr_matrix((0, u), dtype=np.int64), layout
    return sp.vstack(eqs, format="csr"), layout


def coboundaries(m: GradedModule, n: GradedModule, layout, graded: bool = True) -> np.ndarray:
    """Rows spanning {rho_N f - f rho_M} in the unknown coordinates (RREF)."""
    p = m.p
    dm, dn = m.dim, n.dim
    u = sum(len(i) for _, i in layout)
    fidx = _allowed(m, n, None, graded)
    if len(fidx) == 0:
        return np.zeros((0, u), dtype=np.int64)
    blocks = []
    for x, idx in layout:
        d = _left(n.ops[x], dm) - _right(m.ops[x], dn)
        blocks.append(d[idx][:, fidx])
    mat = _mod(sp.vstack(blocks, format="csr"), p)  # unknowns x f-entries
    return ffla.rref(mat.T.toarray(), p)[0]


def ext1(m: GradedModule, n: GradedModule, graded: bool = True, budget: int = DEFAULT_BUDGET,
         seed: int = 0) -> ExtSpace:
    """Ext^1(M, N): extensions with submodule N and quotient M.

    With ``graded`` the cocycle value c(x_alpha) shifts degrees by alpha
    (both modules must be labeled); otherwise all entries are free.
    ``budget`` bounds dim M * dim N.
    """
    if m.dim * n.dim > budget:
        raise BudgetExceeded(f"dim M * dim N = {m.dim * n.dim} exceeds budget {budget}")
    if graded and not (m.labeled and n.labeled):
        raise ValueError("graded Ext needs weight-labeled modules")
    p = m.p
    a, layout = cocycle_constraints(m, n, graded)
    u = sum(len(i) for _, i in layout)
    if u == 0:
        return ExtSpace(m, n, 0, [], graded, 0, 0)
    z = _sparse_nullspace(a, p, seed)
    b = coboundaries(m, n, layout, graded)
    bech = ffla.Echelon(u, p)
    if b.shape[0]:
        bech.add(b)
    cob_dim = bech.dim
    reps = []
    for row in z:
        if bech.add(row[None, :]).shape[0]:
            reps.append(row)
    if z.shape[0] - len(reps) != cob_dim:
        raise AssertionError("coboundaries are not cocycles")
    out = ExtSpace(m, n, len(reps), [], graded, z.shape[0], cob_dim)
    for row in reps:
        out.cocycles.append(_unpack(row, layout, m, n))
    return out


def _unpack(row: np.ndarray, layout, m: GradedModule, n: GradedModule) -> dict:
    dm, dn = m.dim, n.dim
    out = {}
    o = 0
    for x, idx in layout:
        v = np.zeros(dm * dn, dtype=np.int64)
        v[idx] = row[o:o + len(idx)]
        o += len(idx)
        out[x] = v.reshape(dm, dn).T % m.p  # column-major vec back to a matrix
    return out


def extension_module(m: GradedModule, n: GradedModule, c: dict, graded: bool = True,
                     tag: str = "") -> GradedModule:
    """E = N (+) M with the action twisted by the cocycle c (N is the submodule)."""
    ops = {}
    for x in m.gens:
        ops[x] = sp.bmat([[n.ops[x], sp.csr_matrix(c[x])], [None, m.ops[x]]], format="csr")
    w = np.vstack([n.weights, m.weights]) if (graded and m.labeled and n.labeled) else None
    return GradedModule(m.ctx, ops, n.dim + m.dim, w, m.gens, tag or f"ext({m.tag},{n.tag})")


def split_test(e: GradedModule, sub: GSubspace, quot: GradedModule | None = None) -> bool:
    """True iff the submodule ``sub`` of e has a complementary submodule.

    Equivalent to the projection e -> e/sub having a section; solved as a
    linear system in Hom(e/sub, e).  ``quot`` is only used as a sanity check
    that e/sub has the expected dimension.
    """
    p = e.p
    q = quotient(e, sub, tag="split-quotient")
    if quot is not None and quot.dim != q.dim:
        raise ValueError("quotient has the wrong dimension")
    if q.dim == 0:
        return True
    homs = hom_space(q, e)
    if not homs:
        return False
    # projection onto the quotient coordinates, blockwise
    cols = []
    for f in homs:
        parts = []
        for k in q.keys:
            d = q.block_dim(k)
            hit = f.blocks.get(k)
            if hit is None:
                parts.append(np.zeros(d * d, dtype=np.int64))
                continue
            dst, a = hit
            red = sub.part(dst).reduce(a.T % p) if sub.part(dst).dim else a.T % p
            parts.append(red[:, q.complement[dst]].T.ravel())
        cols.append(np.concatenate(parts))
    mat = np.array(cols, dtype=np.int64).T % p
    target = np.concatenate([np.eye(q.block_dim(k), dtype=np.int64).ravel() for k in q.keys])
    return ffla.solve(mat, target, p) is not None
