"""Projective indecomposables of reduced enveloping algebras given by generator matrices.

The main route works on the left regular module: the Jacobson radical is the
kernel of the Wedderburn map A -> (+) End(S), a matrix unit over S is pulled
back, lifted to an idempotent e and A e is spun.  A second route decomposes
the module induced from a torus character by random endomorphisms (Fitting
decomposition) and serves as a cross-check.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from . import ffla
from .modules import (
    Context,
    GradedModule,
    GSubspace,
    _character_inner,
    _induce,
    hom_space,
    levi_verma,
    linear_combination,
    spin,
    submodule,
)
from .pbw import PBWAlgebra


class BudgetExceeded(RuntimeError):
    pass


DEFAULT_BUDGET = 7000
FITTING_BUDGET = 4000  # largest torus-induced module split by random endomorphisms


def levi_simples(ctx: Context) -> list[tuple]:
    """Representatives (lam, Z_I(lam)) of the simple U_chi(g_I)-modules.

    Torus characters are taken mod p; two of them give isomorphic modules
    exactly when they are W_I dot-conjugate mod p.
    """
    rd, p = ctx.rd, ctx.p
    seen = set()
    out = []
    for lam in itertools.product(range(p), repeat=rd.rank):
        if lam in seen:
            continue
        orbit = {tuple(x % p for x in rd.dot(w, lam)) for w in rd.levi_weyl}
        seen |= orbit
        out.append((lam, levi_verma(ctx, lam)))
    return out


class MatAlgebra:
    """U_chi of the subalgebra spanned by ``ids`` via its left regular representation."""

    def __init__(self, ctx: Context, ids: Sequence[int] | None = None, budget: int = DEFAULT_BUDGET):
        self.ctx = ctx
        self.p = p = ctx.p
        self.ids = tuple(ctx.levi_ids if ids is None else ids)
        self.dim = p ** len(self.ids)
        if self.dim > budget:
            raise BudgetExceeded(f"regular module of dimension {self.dim} exceeds budget {budget}")
        self.pbw = PBWAlgebra(ctx.lie, ctx.chi, basis=self.ids)
        st = self.pbw.st
        self.gens = {x: st.action_matrix(x) for x in self.ids}
        self.place = self.pbw.datum.place

    def exps(self, idx: int) -> tuple:
        return self.pbw.exps(idx)

    def unit(self) -> np.ndarray:
        v = np.zeros(self.dim, dtype=np.int64)
        v[0] = 1
        return v

    def monomial_times(self, idx: int, v: np.ndarray) -> np.ndarray:
        e = self.exps(idx)
        for pos in reversed(range(len(self.ids))):
            g = self.gens[self.ids[pos]]
            for _ in range(e[pos]):
                v = g @ v % self.p
        return v

    def mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        out = np.zeros(self.dim, dtype=np.int64)
        for idx in np.flatnonzero(a % self.p):
            out = (out + int(a[idx]) * self.monomial_times(int(idx), b)) % self.p
        return out

    def regular_module(self) -> GradedModule:
        return GradedModule(self.ctx, self.gens, self.dim, None, self.ids, "regular", check=False)

    def representation(self, s: GradedModule) -> np.ndarray:
        """rho_S of every PBW monomial, stacked as an array of shape (dim A, d, d)."""
        d, p = s.dim, self.p
        out = np.zeros((self.dim, d, d), dtype=np.int64)
        out[0] = np.eye(d, dtype=np.int64)
        mats = {x: s.dense(x) for x in self.ids}
        for idx in range(1, self.dim):
            e = self.exps(idx)
            i = next(j for j, a in enumerate(e) if a)
            out[idx] = mats[self.ids[i]] @ out[idx - self.place[i]] % p
        return out

    def ad_weight_zero(self) -> np.ndarray:
        """Indices of monomials of torus weight zero mod p."""
        lie, rd, p = self.ctx.lie, self.ctx.rd, self.p
        wts = np.array([lie.weights[x] for x in self.ids], dtype=np.int64).reshape(-1, rd.rank)
        keep = []
        for idx in range(self.dim):
            w = np.array(self.exps(idx), dtype=np.int64) @ wts
            if not np.any(w % p):
                keep.append(idx)
        return np.array(keep, dtype=np.int64)

    def torus_projector(self, chars: Sequence[int]) -> np.ndarray:
        """The idempotent prod_i prod_{c != mu_i} (h_i - c)/(mu_i - c)."""
        lie, p = self.ctx.lie, self.p
        inv = ffla.inverses(p)
        out = np.zeros(self.dim, dtype=np.int64)
        polys = []
        for i, mu in enumerate(chars):
            poly = np.array([1], dtype=np.int64)  # coefficients of h^0, h^1, ...
            for c in range(p):
                if c == mu % p:
                    continue
                scale = int(inv[(mu - c) % p])
                poly = (np.convolve(poly, np.array([-c * scale, scale])) % p)
            polys.append(poly)
        hs = [lie.h(i) for i in range(len(chars))]
        pos = {x: j for j, x in enumerate(self.ids)}
        for degs in itertools.product(*[range(len(q)) for q in polys]):
            c = 1
            for q, d in zip(polys, degs):
                c = c * int(q[d]) % p
            if not c:
                continue
            idx = sum(d * self.place[pos[h]] for h, d in zip(hs, degs))
            out[idx] = (out[idx] + c) % p
        return out


def wedderburn_matrix(a: MatAlgebra, simples: Sequence[GradedModule]) -> np.ndarray:
    """Matrix of A -> (+)_S End(S); rows indexed by (S, i, j), columns by monomials."""
    blocks = [a.representation(s).reshape(a.dim, -1).T for s in simples]
    return np.vstack(blocks) % a.p


def jacobson_radical(a: MatAlgebra, simples: Sequence[GradedModule]) -> ffla.Subspace:
    """rad A as the common annihilator of the simples (kernel of the Wedderburn map)."""
    w = wedderburn_matrix(a, simples)
    ns = ffla.nullspace(w, a.p)
    return ffla.Subspace.span(ns, a.p, a.dim) if ns.shape[0] else ffla.Subspace.zero(a.dim, a.p)


def lift_idempotent(a: MatAlgebra, e0: np.ndarray, max_iter: int = 40) -> np.ndarray:
    """Iterate e <- 3e^2 - 2e^3 until e is idempotent."""
    p = a.p
    e = np.asarray(e0, dtype=np.int64) % p
    for _ in range(max_iter):
        e2 = a.mul(e, e)
        if np.array_equal(e2, e):
            return e
        e3 = a.mul(e, e2)
        e = (3 * e2 - 2 * e3) % p
    raise RuntimeError("idempotent lifting did not converge")


@dataclass
class PIM:
    module: GradedModule
    idempotent: np.ndarray
    simple_index: int


def pim(a: MatAlgebra, simples: Sequence[GradedModule], which: int) -> PIM:
    """Projective cover of simples[which] as A e for a primitive idempotent e.

    The top basis vector of the simple must be a torus weight vector.
    """
    p = a.p
    w = wedderburn_matrix(a, simples)
    target = np.zeros(w.shape[0], dtype=np.int64)
    off = sum(s.dim ** 2 for s in simples[:which])
    target[off] = 1  # matrix unit E_00 on the chosen simple
    cols = a.ad_weight_zero()
    x = ffla.solve(w[:, cols], target, p)
    if x is None:
        raise ValueError("matrix unit has no weight-zero preimage")
    x0 = np.zeros(a.dim, dtype=np.int64)
    x0[cols] = x
    s = simples[which]
    lie = a.ctx.lie
    chars = [int(s.dense(lie.h(i))[0, 0]) for i in range(a.ctx.rd.rank)]
    e0 = a.mul(a.torus_projector(chars), x0)
    e = lift_idempotent(a, e0)
    img = w @ e % p
    if not np.array_equal(img, target):
        raise AssertionError("lifted idempotent does not map to the chosen matrix unit")
    reg = a.regular_module()
    sub = spin(reg, [e])
    return PIM(submodule(reg, sub, tag=f"P{which}"), e, which)


def label_by_torus(ctx: Context, m: GradedModule, degree_weight: Sequence[int], tag: str = "") -> GradedModule:
    """Relabel an unlabeled g_I-module living in the degree of ``degree_weight``.

    Simultaneous torus eigenvectors are found mod p; the weight of each is
    the unique element of degree_weight + ZI with those residues mod pZI.
    """
    lie, rd, p = ctx.lie, ctx.rd, ctx.p
    hs = [lie.h(i) for i in range(rd.rank)]
    mats = [m.dense(h) for h in hs]
    spaces = [(np.eye(m.dim, dtype=np.int64), ())]
    for a in mats:
        nxt = []
        for basis, chars in spaces:
            for val in range(p):
                # columns v = basis^T u with a v = val v
                b = basis.T
                k = ffla.nullspace((a @ b - val * b) % p, p)
                if k.shape[0]:
                    nxt.append(((k @ basis) % p, chars + (val,)))
        spaces = nxt
    if sum(b.shape[0] for b, _ in spaces) != m.dim:
        raise AssertionError("torus does not act diagonalizably")
    lam = np.array(degree_weight, dtype=np.int64)
    roots = [np.array(rd.simple_roots[i], dtype=np.int64) for i in rd.levi]
    cols, weights = [], []
    for basis, chars in spaces:
        wt = None
        for c in itertools.product(range(p), repeat=len(roots)):
            nu = lam + sum((ci * r for ci, r in zip(c, roots)), np.zeros_like(lam))
            if tuple(int(x) % p for x in nu) == chars:
                wt = nu
                break
        if wt is None:
            raise AssertionError(f"torus character {chars} does not occur in the degree of {tuple(lam)}")
        for row in basis:
            cols.append(row)
            weights.append(wt)
    e = np.array(cols, dtype=np.int64).T % p  # columns are the new basis
    einv = ffla.inverse(e, p)
    ops = {x: sp.csr_matrix(einv @ m.dense(x) @ e % p) for x in m.gens}
    return GradedModule(ctx, ops, m.dim, np.array(weights), m.gens, tag or m.tag)


def levi_pim(ctx: Context, lam: Sequence[int], budget: int = DEFAULT_BUDGET,
             fitting_budget: int = FITTING_BUDGET) -> GradedModule:
    """Projective cover Q_I(lam) of Z_I(lam) in the graded Levi category.

    Falls back to splitting the torus-induced module when the algebra is
    over ``budget``; that module must stay within ``fitting_budget``.
    """
    lam = tuple(int(x) for x in lam)
    tag = f"Q_I({','.join(map(str, lam))})"
    try:
        a = MatAlgebra(ctx, ctx.levi_ids, budget)
    except BudgetExceeded:
        n = ctx.p ** (2 * len(ctx.rd.levi_roots))
        if n > fitting_budget:
            raise BudgetExceeded(f"torus-induced module of dimension {n} exceeds budget {fitting_budget}") from None
        return extract_summand(torus_induced(ctx, ctx.levi_ids, lam), levi_verma(ctx, lam), tag=tag)
    reps = levi_simples(ctx)
    simples = [m for _, m in reps]
    rd, p = ctx.rd, ctx.p
    orbit = {tuple(x % p for x in rd.dot(w, lam)) for w in rd.levi_weyl}
    which = next(i for i, (mu, _) in enumerate(reps) if mu in orbit)
    # use Z_I(lam) itself so that the top vector has the torus character of lam
    simples[which] = levi_verma(ctx, lam)
    got = pim(a, simples, which)
    q = label_by_torus(ctx, got.module, lam, tag)
    expect = rd.levi_dot_orbit_size(lam, p) * p ** len(rd.levi_roots)
    if q.dim != expect:
        raise AssertionError(f"Levi projective has dimension {q.dim}, expected {expect}")
    return q


# -- torus-induced projectives and Fitting decomposition ------------------------------------


def torus_induced(ctx: Context, ids: Sequence[int], lam: Sequence[int]) -> GradedModule:
    """U_chi(s) (x)_{U_0(h)} k_lam for s spanned by ids; projective since U_0(h) is semisimple."""
    lie = ctx.lie
    torus = [x for x in ids if lie.is_toral(x)]
    comp = [x for x in ids if not lie.is_toral(x)]
    return _induce(ctx, comp, _character_inner(ctx, lam, torus), 1, [tuple(lam)], list(ids),
                   f"ind_h({','.join(map(str, lam))})")


def projective_induce_from_borel(ctx: Context, lam: Sequence[int]) -> GradedModule:
    """U_chi(g) (x)_{U_0(b+)} P_{b+}(lam), which equals the induction from the torus."""
    return torus_induced(ctx, ctx.all_ids, lam)


def _fitting(m: GradedModule, f, p: int):
    """Fitting decomposition of m for an endomorphism f: (image of f^N, kernel of f^N)."""
    a = f.matrix()
    n = m.dim
    power = a
    k = 1
    while k < n:
        power = power @ power % p
        k *= 2
    img = ffla.Subspace.span(power.T, p, n) if np.any(power) else ffla.Subspace.zero(n, p)
    ker_rows = ffla.nullspace(power, p)
    return img, ker_rows


def _global_to_graded(m: GradedModule, rows: np.ndarray) -> GSubspace:
    parts = {}
    for k, idx in m.blocks.items():
        part = rows[:, idx] % m.p
        part = part[np.any(part, axis=1)]
        if part.shape[0]:
            parts[k] = ffla.Subspace.span(part, m.p, len(idx))
    return GSubspace(m, parts)


def indecomposable_summands(m: GradedModule, seed: int = 0, tries: int = 8) -> list[GradedModule]:
    """Split m into indecomposable summands by Fitting decompositions of random endomorphisms."""
    rng = np.random.default_rng(seed)
    p = m.p
    todo, done = [m], []
    while todo:
        x = todo.pop()
        homs = hom_space(x, x)
        split = None
        for _ in range(tries):
            c = rng.integers(0, p, size=len(homs))
            f = linear_combination(homs, list(c))
            for shift in range(p):
                g = f.combine([1], [])
                if shift:
                    g = _minus_identity(g, shift)
                img, ker = _fitting(x, g, p)
                if 0 < img.dim < x.dim:
                    split = (img, ker)
                    break
            if split:
                break
        if split is None:
            done.append(x)
            continue
        img, ker = split
        for rows in (img.basis, ker):
            g = _global_to_graded(x, rows)
            todo.append(submodule(x, g, check=False))
    return done


def _minus_identity(f, c: int):
    p = f.source.p
    blocks = {}
    for k in f.source.keys:
        d = f.source.block_dim(k)
        dst, a = f.blocks.get(k, (k, np.zeros((d, d), dtype=np.int64)))
        blocks[k] = (dst, (a - c * np.eye(d, dtype=np.int64)) % p)
    out = type(f)(f.source, f.target, blocks, f.shift)
    return out


def extract_summand(m: GradedModule, head: GradedModule, seed: int = 0, tag: str = "") -> GradedModule:
    """The indecomposable summand of a projective m whose head contains ``head``."""
    for s in indecomposable_summands(m, seed):
        if hom_space(s, head):
            if tag:
                s.tag = tag
            return s
    raise ValueError("no summand maps onto the requested simple")
