"""Composition factors, socle and radical series, Loewy lengths and filtrations.

Simple modules are identified by the linkage key of their n+-invariant
weights.  Two independent routes produce composition factors: a graded
MeatAxe (random weight-zero algebra elements, kernel vectors, Norton's
criterion) and the socle series computed from Hom spaces out of simples.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import ffla
from .modules import (
    UNLABELED,
    Context,
    GradedModule,
    GSubspace,
    Morphism,
    SimpleModule,
    baby_verma,
    hom_space,
    invariants,
    lift_from_quotient,
    linear_combination,
    push_from_submodule,
    quotient,
    submodule,
    twisted_baby_verma,
)

log = logging.getLogger(__name__)


class SplitFieldError(RuntimeError):
    """An irreducible factor whose endomorphism ring is larger than F_p."""


class IncompleteSimplesError(ValueError):
    pass


# -- simples ------------------------------------------------------------------------------


def build_simple(ctx: Context, mu: Sequence[int]) -> SimpleModule:
    """L(mu) as the image of the canonical map Z(mu) -> Z^{w^I}(mu^{w^I})."""
    mu = tuple(int(x) for x in mu)
    z = baby_verma(ctx, mu)
    top_key = ctx.key(mu)
    if ctx.rd.w_upper_I.length == 0:
        # chi is regular nilpotent: every baby Verma module is simple
        v = np.zeros(z.block_dim(top_key), dtype=np.int64)
        v[0] = 1
        s = SimpleModule(z, mu, top_key, v)
    else:
        zt = twisted_baby_verma(ctx, ctx.rd.w_upper_I, ctx.twist(mu))
        homs = hom_space(z, zt)
        if len(homs) != 1:
            raise AssertionError(f"expected a unique map Z -> Z^w, found {len(homs)}")
        f = homs[0]
        img = f.image()
        lm = submodule(zt, img, tag=f"L({','.join(map(str, mu))})", check=True)
        col = f.blocks[top_key][1][:, 0]
        v = col[img.parts[top_key].pivots] % ctx.p
        s = SimpleModule(lm, mu, top_key, v)
    s.module._presentation = None
    from .modules import Presentation
    s.module._presentation = Presentation(s.module, s.generators())
    return s


def simple_from_module(m: GradedModule, weight=None) -> SimpleModule:
    """Wrap a module known to be simple, generated by any n+-invariant vector."""
    inv = invariants(m)
    k = next(iter(inv))
    from .modules import Presentation
    s = SimpleModule(m, weight if weight is not None else m.block_weight(k), k, inv[k][0])
    m._presentation = Presentation(m, s.generators())
    return s


def _torus_characters(m: GradedModule, rows: np.ndarray) -> set:
    """Characters (h_i eigenvalues mod p) of the torus on the span of rows (unlabeled case)."""
    lie, p = m.ctx.lie, m.p
    hs = [x for x in m.gens if lie.is_toral(x)]
    spaces = [ffla.Subspace.span(rows, p, m.dim)]
    chars = [()]
    for h in hs:
        a = m.dense(h)
        nxt_s, nxt_c = [], []
        for s, c in zip(spaces, chars):
            for val in range(p):
                # v in s with v h^T = val v  <=> coefficient rows u with u (B A^T - val B) = 0
                b = s.basis
                diff = (b @ a.T - val * b) % p
                ker = ffla.left_nullspace(diff, p)
                if ker.shape[0]:
                    nxt_s.append(ffla.Subspace.span(ker @ b % p, p, m.dim))
                    nxt_c.append(c + (val,))
        spaces, chars = nxt_s, nxt_c
    return set(chars)


def identify_simple(m: GradedModule):
    """Linkage class of a simple module, read off its n+-invariant blocks.

    For unlabeled modules the identifier is the frozenset of torus characters
    on the n+-invariants.
    """
    inv = invariants(m)
    if not inv:
        raise ValueError("module has no n+-invariants")
    if not m.labeled:
        rows = np.vstack([r for r in inv.values()])
        return frozenset(_torus_characters(m, rows))
    ids = {m.ctx.linkage(m.block_weight(k)) for k in inv}
    if len(ids) != 1:
        raise ValueError(f"invariant blocks lie in several linkage classes: {sorted(ids)}")
    return ids.pop()


# -- socle and radical --------------------------------------------------------------------


def _candidates(m: GradedModule) -> dict:
    """Linkage key -> weight for the classes of the n+-invariants of m."""
    out = {}
    for k in invariants(m):
        w = m.block_weight(k)
        out.setdefault(m.ctx.linkage(w), w)
    return out


def _library(m: GradedModule, simples) -> list[tuple]:
    if simples is not None:
        return [(s_id(s), s) for s in simples]
    if not m.labeled:
        raise ValueError("unlabeled modules need an explicit list of simples")
    return [(lk, _simple_for(m, w)) for lk, w in _candidates(m).items()]


def _simple_for(m: GradedModule, w) -> SimpleModule:
    """Simple module of the algebra acting on m (g, or g_I for Levi modules)."""
    ctx = m.ctx
    if set(m.gens) != set(ctx.all_ids):
        return ctx.levi_simple(w)
    return ctx.simple(w)


def s_id(s: SimpleModule):
    if not hasattr(s, "_ident"):
        s._ident = identify_simple(s.module)
    return s._ident


def socle_parts(m: GradedModule, simples=None) -> tuple[GSubspace, dict, Counter]:
    """Socle of m, its isotypic components and their multiplicities."""
    total = GSubspace.zero(m)
    parts: dict = {}
    counts: Counter = Counter()
    for ident, s in _library(m, simples):
        homs = hom_space(s.module, m)
        img = GSubspace.zero(m)
        for f in homs:
            img = img + f.image()
        if img.dim:
            if img.dim % s.dim:
                raise AssertionError("isotypic socle component has dimension not divisible by dim L")
            parts[ident] = img
            counts[ident] = img.dim // s.dim
            total = total + img
    return total, parts, counts


def socle(m: GradedModule, simples=None) -> GSubspace:
    return socle_parts(m, simples)[0]


def radical(m: GradedModule, simples=None, check: bool = True) -> GSubspace:
    """Common kernel of all maps from m to the supplied simples.

    With ``check`` the supplied list is compared against the composition
    factors of m first.
    """
    if check or simples is None:
        lib = _library_for_radical(m, simples)
    else:
        lib = [(s_id(s), s) for s in simples]
    p = m.p
    rows: dict = {k: [] for k in m.keys}
    for _, s in lib:
        for f in hom_space(m, s.module):
            for k, (_, a) in f.blocks.items():
                if np.any(a):
                    rows[k].append(a)
    parts = {}
    for k in m.keys:
        d = m.block_dim(k)
        if rows[k]:
            ns = ffla.nullspace(np.vstack(rows[k]), p)
        else:
            ns = np.eye(d, dtype=np.int64)
        if ns.shape[0]:
            parts[k] = ffla.Subspace.span(ns, p, d)
    r = GSubspace(m, parts)
    if m.dim and r.dim == m.dim:
        raise IncompleteSimplesError("no simple quotient found among the supplied simples")
    return r


def _library_for_radical(m: GradedModule, simples):
    if simples is not None:
        lib = [(s_id(s), s) for s in simples]
        have = {i for i, _ in lib}
        missing = set(chop(m, method="socle").counts) - have
        if missing:
            raise IncompleteSimplesError(f"simples missing from the supplied list: {sorted(map(str, missing))}")
        return lib
    counts = chop(m, method="socle").counts
    if not m.labeled:
        raise ValueError("unlabeled modules need an explicit list of simples")
    return [(i, _simple_for(m, i)) for i in counts]


# -- series --------------------------------------------------------------------------------


@dataclass
class LoewySeries:
    """Socle series (bottom up) or radical series (top down) of a module.

    ``subspaces[j]`` is soc^j M, respectively rad^j M; ``layers[j]`` counts the
    simples in the j-th layer, starting at the socle, respectively the head.
    """

    kind: str
    layers: list
    subspaces: list
    parts: list = field(default_factory=list)

    @property
    def length(self) -> int:
        return len(self.layers)

    def top_down(self) -> list:
        return list(reversed(self.layers)) if self.kind == "socle" else list(self.layers)


def socle_series(m: GradedModule, simples=None) -> LoewySeries:
    cur = GSubspace.zero(m)
    subs, layers, parts = [cur], [], []
    while cur.dim < m.dim:
        q = quotient(m, cur, check=False)
        s, iso, counts = socle_parts(q, simples)
        if s.dim == 0:
            raise AssertionError("nonzero module with zero socle")
        lifted = {}
        for ident, sub in iso.items():
            rows = lift_from_quotient(m, q, sub)
            lifted[ident] = GSubspace(m, {k: ffla.Subspace.span(r, m.p, m.block_dim(k)) for k, r in rows.items()})
        rows = lift_from_quotient(m, q, s)
        cur = cur + GSubspace(m, {k: ffla.Subspace.span(r, m.p, m.block_dim(k)) for k, r in rows.items()})
        subs.append(cur)
        layers.append(counts)
        parts.append(lifted)
    return LoewySeries("socle", layers, subs, parts)


def radical_series(m: GradedModule, simples=None) -> LoewySeries:
    lib = None if simples is None else list(simples)
    if lib is None and m.labeled:
        lib = [_simple_for(m, i) for i in chop(m, method="socle").counts]
    cur = GSubspace.full(m)
    subs, layers = [cur], []
    while cur.dim:
        sm = submodule(m, cur, check=False)
        r = radical(sm, lib, check=False)
        head = quotient(sm, r, check=False)
        _, _, counts = socle_parts(head, lib)
        if sum(counts[i] * _dim_of(lib, i) for i in counts) != head.dim:
            raise IncompleteSimplesError("radical layer is not a sum of the supplied simples")
        layers.append(counts)
        cur = push_from_submodule(m, sm, r)
        subs.append(cur)
    return LoewySeries("radical", layers, subs)


def _dim_of(lib, ident) -> int:
    for s in lib:
        if s_id(s) == ident:
            return s.dim
    raise KeyError(ident)


@dataclass
class Loewy:
    radical: LoewySeries
    socle: LoewySeries

    @property
    def ll(self) -> int:
        return self.socle.length


def loewy(m: GradedModule, simples=None) -> Loewy:
    soc = socle_series(m, simples)
    if simples is None and m.labeled:
        simples = [_simple_for(m, i) for i in _series_counts(soc)]
    rad = radical_series(m, simples)
    if rad.length != soc.length:
        raise AssertionError(f"radical length {rad.length} differs from socle length {soc.length}")
    # rad^{n-j} M is contained in soc^j M
    n = soc.length
    for j in range(n + 1):
        if not soc.subspaces[j].contains(rad.subspaces[n - j]):
            raise AssertionError("radical series is not inside the socle series")
    return Loewy(rad, soc)


def loewy_length(m: GradedModule, simples=None) -> int:
    return socle_series(m, simples).length


def _series_counts(series: LoewySeries) -> Counter:
    out: Counter = Counter()
    for c in series.layers:
        out.update(c)
    return out


# -- composition factors ------------------------------------------------------------------


@dataclass
class ChopResult:
    """Composition multiset: identifier -> multiplicity, with one module per class."""

    counts: Counter
    factors: dict
    dim: int
    method: str

    def conservation(self) -> bool:
        return sum(self.factors[i].dim * c for i, c in self.counts.items()) == self.dim

    def multiset(self) -> Counter:
        return Counter(self.counts)


def chop(m: GradedModule, seed: int = 0, method: str = "meataxe", simples=None) -> ChopResult:
    """Composition factors of m.

    ``method="meataxe"`` splits with random algebra elements and certifies
    each factor with Norton's criterion; ``method="socle"`` reads the factors
    off the socle series.
    """
    cache = m.__dict__.setdefault("_chops", {})
    ck = (method, seed)
    if ck in cache and simples is None:
        return cache[ck]
    if method == "socle":
        ser = socle_series(m, simples)
        counts = _series_counts(ser)
        lib = dict(_library_pairs(m, counts, simples))
        res = ChopResult(counts, {i: lib[i].module for i in counts}, m.dim, "socle")
    elif method == "meataxe":
        res = _meataxe_chop(m, seed)
    else:
        raise ValueError(f"unknown chop method {method!r}")
    if not res.conservation():
        raise AssertionError("composition factor dimensions do not add up")
    if simples is None:
        cache[ck] = res
    return res


def _library_pairs(m, counts, simples):
    if simples is not None:
        for s in simples:
            yield s_id(s), s
    else:
        for i in counts:
            yield i, _simple_for(m, i)


class _Words:
    """Random weight-zero words in the root vectors, as block matrices."""

    def __init__(self, m: GradedModule, rng: np.random.Generator):
        self.m = m
        self.rng = rng
        lie, rd = m.ctx.lie, m.ctx.rd
        self.letters = [x for x in m.gens if not lie.is_toral(x)]
        self.coords = {}
        for x in self.letters:
            s, k = lie.root_of(x)
            self.coords[x] = np.array(rd.positive_roots[k], dtype=np.int64) * s
        self.simple_letter = {}
        for i, k in enumerate(rd.simple_index):
            self.simple_letter[(i, 1)] = lie.root_vector(1, k)
            self.simple_letter[(i, -1)] = lie.root_vector(-1, k)

    def word(self, max_len: int = 12) -> list[int]:
        rng = self.rng
        for _ in range(50):
            j = int(rng.integers(1, 4))
            head = [self.letters[int(i)] for i in rng.integers(0, len(self.letters), size=j)]
            tot = sum((self.coords[x] for x in head), np.zeros_like(self.coords[head[0]]))
            tail = []
            for i, c in enumerate(tot):
                letter = self.simple_letter.get((i, -1 if c > 0 else 1))
                if c and letter not in self.m.ops:
                    break
                tail += [letter] * int(abs(c))
            else:
                w = head + tail
                if len(w) <= max_len:
                    rng.shuffle(w)
                    return w
        return []

    def matrix(self, key, word: Sequence[int]) -> np.ndarray:
        m = self.m
        d = m.block_dim(key)
        a = np.eye(d, dtype=np.int64)
        cur = key
        for x in word:
            hit = m.block_op(x).get(cur)
            if hit is None:
                return np.zeros((d, d), dtype=np.int64)
            dst, b = hit
            a = b @ a % m.p
            cur = dst
        if cur != key:
            raise AssertionError("word is not of weight zero")
        return a

    def element(self, key, nwords: int = 3) -> np.ndarray:
        p = self.m.p
        d = self.m.block_dim(key)
        a = np.zeros((d, d), dtype=np.int64)
        for _ in range(nwords):
            w = self.word()
            c = int(self.rng.integers(1, p))
            a = (a + c * self.matrix(key, w)) % p
        return a


def _dual_spin(m: GradedModule, seeds: dict) -> dict:
    """Blockwise spin of functionals under the transposed action; key -> Echelon."""
    p = m.p
    ech = {}
    frontier = []
    for k, rows in seeds.items():
        e = ech.setdefault(k, ffla.Echelon(m.block_dim(k), p))
        new = e.add(np.atleast_2d(rows))
        if new.shape[0]:
            frontier.append((k, new))
    # functional f on block dst pulls back to f A on block src
    back: dict = {}
    for x in m.spin_gens:
        for src, (dst, a) in m.block_op(x).items():
            back.setdefault(dst, []).append((src, a))
    while frontier:
        pending: dict = {}
        for k, rows in frontier:
            for src, a in back.get(k, []):
                pending.setdefault(src, []).append(rows @ a % p)
        frontier = []
        for k, imgs in pending.items():
            e = ech.setdefault(k, ffla.Echelon(m.block_dim(k), p))
            new = e.add(np.vstack(imgs))
            if new.shape[0]:
                frontier.append((k, new))
    return ech


def _annihilator(m: GradedModule, ech: dict) -> GSubspace:
    parts = {}
    for k in m.keys:
        d = m.block_dim(k)
        e = ech.get(k)
        ns = np.eye(d, dtype=np.int64) if e is None or e.dim == 0 else ffla.nullspace(e.rows, m.p)
        if ns.shape[0]:
            parts[k] = ffla.Subspace.span(ns, m.p, d)
    return GSubspace(m, parts)


def find_proper_submodule(m: GradedModule, rng: np.random.Generator, attempts: int = 200):
    """A proper nonzero submodule, or None once Norton's criterion certifies m irreducible."""
    from .modules import spin
    p = m.p
    words = _Words(m, rng)
    keys = sorted(m.keys, key=lambda k: (m.block_dim(k), str(k)))
    for t in range(attempts):
        key = keys[t % min(len(keys), 3)] if t < 30 else keys[int(rng.integers(0, len(keys)))]
        d = m.block_dim(key)
        a = words.element(key) if words.letters else np.zeros((d, d), dtype=np.int64)
        if not m.labeled:
            for h in (x for x in m.gens if m.ctx.lie.is_toral(x)):
                a = (a + int(rng.integers(0, p)) * m.dense(h)) % p
        for c in rng.permutation(p):
            b = (a - int(c) * np.eye(d, dtype=np.int64)) % p
            ns = ffla.nullspace(b, p)
            if ns.shape[0] == 0:
                continue
            for v in ns[:3]:
                s = spin(m, {key: v[None, :]})
                if s.dim < m.dim:
                    return s
            if ns.shape[0] == 1:
                w = ffla.nullspace(b.T % p, p)
                ech = _dual_spin(m, {key: w})
                if sum(e.dim for e in ech.values()) < m.dim:
                    return _annihilator(m, ech)
                return None
            break
    raise RuntimeError("MeatAxe found no element of nullity one; giving up")


def _meataxe_chop(m: GradedModule, seed: int) -> ChopResult:
    rng = np.random.default_rng(seed)
    stack = [m]
    counts: Counter = Counter()
    factors: dict = {}
    while stack:
        x = stack.pop()
        if x.dim == 0:
            continue
        s = find_proper_submodule(x, rng)
        if s is None:
            if len(hom_space(x, x)) != 1:
                raise SplitFieldError(f"End of a {x.dim}-dimensional irreducible factor exceeds F_p")
            ident = identify_simple(x)
            counts[ident] += 1
            factors.setdefault(ident, x)
            continue
        stack.append(submodule(x, s, check=False))
        stack.append(quotient(x, s, check=False))
    return ChopResult(counts, factors, m.dim, "meataxe")


# -- diagrams ------------------------------------------------------------------------------


def _name(ident, names: Mapping | None) -> str:
    if names and ident in names:
        return names[ident]
    if isinstance(ident, tuple):
        return "(" + ",".join(map(str, ident)) + ")"
    return str(ident)


def edge_witnesses(m: GradedModule, series: LoewySeries) -> list[tuple]:
    """Edges (upper layer j+1, factor A) -> (layer j, factor B) with a nonsplit length-two witness.

    With Y = soc^{j-1} plus the non-B isotypic parts of layer j, an edge
    exists when some copy of A in layer j+1 fails to split off in soc^{j+1}/Y.
    """
    if series.kind != "socle":
        raise ValueError("edges are computed from the socle series")
    out = []
    for j in range(1, series.length):
        upper = series.layers[j]
        lower = series.layers[j - 1]
        top = series.subspaces[j + 1]
        sm = submodule(m, top, check=False)
        for b in lower:
            y = series.subspaces[j - 1]
            for other, sub in series.parts[j - 1].items():
                if other != b:
                    y = y + sub
            ys = _restrict_to(sm, top, y)
            q = quotient(sm, ys, check=False)
            _, _, counts = socle_parts(q)
            for a, mult in upper.items():
                have = counts.get(a, 0) - (lower[b] if a == b else 0)
                if have < mult:
                    out.append(((j + 1, a), (j, b)))
    return out


def _restrict_to(sm: GradedModule, ambient: GSubspace, sub: GSubspace) -> GSubspace:
    """A subspace of ``ambient`` in the coordinates of submodule(m, ambient)."""
    parts = {}
    for k, s in sub.parts.items():
        piv = ambient.parts[k].pivots
        parts[k] = ffla.Subspace.span(s.basis[:, piv], sm.p, sm.block_dim(k))
    return GSubspace(sm, parts)


def diagram(series: LoewySeries, fmt: str = "ascii", names: Mapping | None = None, edges=None) -> str | dict:
    """Layered structure diagram, top layer first."""
    top_down = series.top_down()
    layers = []
    for layer in top_down:
        row = []
        for ident in sorted(layer, key=lambda i: _name(i, names)):
            row += [_name(ident, names)] * layer[ident]
        layers.append(row)
    if fmt == "json":
        return {"kind": series.kind, "layers": layers}
    if fmt == "ascii":
        width = max((len("  ".join(r)) for r in layers), default=0)
        return "\n".join("  ".join(r).center(width).rstrip() for r in layers)
    if fmt == "dot":
        n = series.length
        lines = ["digraph loewy {", "  rankdir=TB;", "  node [shape=plaintext];"]
        for depth, layer in enumerate(top_down):
            j = n - depth if series.kind == "socle" else depth + 1
            for ident in sorted(layer, key=lambda i: _name(i, names)):
                lines.append(f'  "L{j}_{_name(ident, names)}" [label="{_name(ident, names)}"];')
        for (ja, a), (jb, b) in edges or []:
            lines.append(f'  "L{ja}_{_name(a, names)}" -> "L{jb}_{_name(b, names)}";')
        lines.append("}")
        return "\n".join(lines)
    raise ValueError(f"unknown diagram format {fmt!r}")


# -- quasi-simple filtrations ----------------------------------------------------------------


@dataclass
class FiltrationReport:
    ok: bool
    order: list  # weights bottom to top
    subspaces: list
    message: str = ""


def injective_map(src: GradedModule, dst: GradedModule, seed: int = 0, tries: int = 16) -> Morphism | None:
    homs = hom_space(src, dst)
    if not homs:
        return None
    for f in homs:
        if f.rank() == src.dim:
            return f
    rng = np.random.default_rng(seed)
    for _ in range(tries):
        c = rng.integers(0, src.p, size=len(homs))
        if np.any(c):
            f = linear_combination(homs, list(c))
            if f.rank() == src.dim:
                return f
    return None


def l_filtration_verify(m: GradedModule, expected: Iterable[Sequence[int]], quasi=None, seed: int = 0) -> FiltrationReport:
    """Search for a filtration of m by the given quasi-simple modules.

    Factors are peeled from the bottom, lowest degree first, by injective
    maps into the current quotient; failed branches backtrack.
    """
    from .modules import quasi_simple
    ctx = m.ctx
    quasi = quasi or (lambda lam: quasi_simple(ctx, lam).module)
    todo = [tuple(int(x) for x in lam) for lam in expected]
    cache: dict = {}

    def qs(lam):
        if lam not in cache:
            cache[lam] = quasi(lam)
        return cache[lam]

    if sum(qs(l).dim for l in todo) != m.dim:
        return FiltrationReport(False, [], [], "dimensions of the expected factors do not add up")

    def rec(cur: GSubspace, remaining: list, order: list, subs: list):
        if not remaining:
            return order, subs
        q = quotient(m, cur, check=False)
        tried = set()
        for lam in sorted(remaining, key=lambda l: (ctx.rd.degree_height(l), l)):
            if lam in tried:
                continue
            tried.add(lam)
            f = injective_map(qs(lam), q, seed)
            if f is None:
                continue
            rows = lift_from_quotient(m, q, f.image())
            nxt = cur + GSubspace(m, {k: ffla.Subspace.span(r, m.p, m.block_dim(k)) for k, r in rows.items()})
            rest = list(remaining)
            rest.remove(lam)
            got = rec(nxt, rest, order + [lam], subs + [nxt])
            if got is not None:
                return got
        return None

    zero = GSubspace.zero(m)
    got = rec(zero, todo, [], [zero])
    if got is None:
        return FiltrationReport(False, [], [], "no filtration with the expected factors exists")
    return FiltrationReport(True, got[0], got[1])
