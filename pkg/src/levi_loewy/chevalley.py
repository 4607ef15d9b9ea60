"""Chevalley bases, structure constants, p-map, standard Levi p-characters and tau.

Basis order: ``f_beta`` for the positive roots (height, then lex), then the
coroots ``h_1..h_r``, then ``e_beta`` in the same root order.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Sequence

import numpy as np

from .ffla import check_prime, inverse
from .weyl import RootDatum


class BadPrimeError(ValueError):
    pass


def check_prime_hypotheses(rd: RootDatum, p: int) -> None:
    """Reject primes outside the standing hypotheses (p good, p not dividing n+1 for A_n)."""
    check_prime(p)
    if p == 2:
        raise BadPrimeError("p=2 is excluded for every type (H1: p must be good)")
    if rd.cartan_type == "A" and (rd.rank + 1) % p == 0:
        raise BadPrimeError(
            f"p={p} divides n+1={rd.rank + 1} for A{rd.rank} (H3: the trace form must be nondegenerate)")


def _zeros(n):
    return np.array([[Fraction(0)] * n for _ in range(n)], dtype=object)


def _unit(n, a, b):
    m = _zeros(n)
    m[a, b] = Fraction(1)
    return m


def _bracket(x, y):
    return x.dot(y) - y.dot(x)


def _form(family: str, rank: int):
    if family == "A":
        return rank + 1, None
    if family == "B":
        n = 2 * rank + 1
        j = _zeros(n)
        for i in range(n):
            j[i, n - 1 - i] = Fraction(1)
        return n, j
    n = 2 * rank
    j = _zeros(n)
    for i in range(n):
        j[i, n - 1 - i] = Fraction(1 if family == "D" or i < rank else -1)
    return n, j


def _simple_positions(family: str, rank: int) -> list[tuple[int, int]]:
    pos = [(i, i + 1) for i in range(rank - 1)]
    if family == "A":
        pos.append((rank - 1, rank))
    elif family in "BC":
        pos.append((rank - 1, rank))
    else:
        pos.append((rank - 2, rank))
    return pos


def _realize(family: str, rank: int):
    """Simple root vectors e_i, f_i as exact matrices with [[e,f],e] = 2e."""
    n, j = _form(family, rank)
    jinv = None if j is None else np.array([[Fraction(x) for x in row] for row in _inverse_exact(j)], dtype=object)

    def proj(m):
        if j is None:
            return m
        return m - jinv.dot(m.T).dot(j)

    es, fs = [], []
    for a, b in _simple_positions(family, rank):
        e = proj(_unit(n, a, b))
        f = proj(_unit(n, b, a))
        h = _bracket(e, f)
        he = _bracket(h, e)
        nz = next(idx for idx in zip(*np.nonzero(e != 0)))
        c = he[nz] / e[nz]
        f = f * (Fraction(2) / c)
        es.append(e)
        fs.append(f)
    return es, fs


def _inverse_exact(m):
    n = m.shape[0]
    a = [[Fraction(m[i, k]) for k in range(n)] + [Fraction(int(i == k)) for k in range(n)] for i in range(n)]
    for c in range(n):
        piv = next(i for i in range(c, n) if a[i][c] != 0)
        a[c], a[piv] = a[piv], a[c]
        inv = 1 / a[c][c]
        a[c] = [x * inv for x in a[c]]
        for i in range(n):
            if i != c and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[c])]
    return [row[n:] for row in a]


class LieAlgebra:
    """Chevalley basis of the split simple Lie algebra of a root datum, over F_p.

    Attributes
    ----------
    dim : int
    weights : list of tuple
        Weight (fundamental coordinates) of each basis element.
    table : list of list of dict
        Integer structure constants, ``[b_i, b_j] = sum table[i][j][k] b_k``.
    chi : numpy.ndarray
        Standard Levi p-character as a vector of values on the basis.
    """

    def __init__(self, rd: RootDatum, p: int):
        check_prime_hypotheses(rd, p)
        self.rd = rd
        self.p = p
        self.n_pos = rd.num_positive
        self.rank = rd.rank
        self.dim = 2 * self.n_pos + self.rank
        N, r = self.n_pos, self.rank
        self.weights = ([tuple(-x for x in rd.positive_roots_fund[k]) for k in range(N)]
                        + [(0,) * r] * r + [rd.positive_roots_fund[k] for k in range(N)])
        self._build_matrices()
        self._build_table()
        self.chi = self._standard_levi_chi()
        self.tau = self._build_tau()
        self.tau_inverse = inverse(self.tau, p)

    # -- indexing -------------------------------------------------------------------

    def f(self, k: int) -> int:
        return k

    def h(self, i: int) -> int:
        return self.n_pos + i

    def e(self, k: int) -> int:
        return self.n_pos + self.rank + k

    def is_toral(self, x: int) -> bool:
        return self.n_pos <= x < self.n_pos + self.rank

    def root_of(self, x: int) -> tuple[int, int] | None:
        """(sign, positive root index) for a root vector, None for the torus."""
        if x < self.n_pos:
            return -1, x
        if x >= self.n_pos + self.rank:
            return 1, x - self.n_pos - self.rank
        return None

    def root_vector(self, sign: int, k: int) -> int:
        return self.e(k) if sign > 0 else self.f(k)

    def name(self, x: int) -> str:
        if self.is_toral(x):
            return f"h{x - self.n_pos + 1}"
        s, k = self.root_of(x)
        coords = "".join(str(c) for c in self.rd.positive_roots[k])
        return ("e" if s > 0 else "f") + coords

    # -- construction ---------------------------------------------------------------

    def _build_matrices(self):
        rd = self.rd
        es, fs = _realize(rd.cartan_type, rd.rank)
        N = self.n_pos
        e_mat: dict[int, object] = {}
        f_mat: dict[int, object] = {}
        for i in range(rd.rank):
            e_mat[rd.simple_index[i]] = es[i]
            f_mat[rd.simple_index[i]] = fs[i]
        self.extraspecial: dict[int, tuple[int, int, int]] = {}
        roots = rd.positive_roots
        for k in range(N):
            if k in e_mat:
                continue
            xi = roots[k]
            for a in range(N):
                rest = tuple(x - y for x, y in zip(xi, roots[a]))
                if rest in rd._root_index:
                    b = rd._root_index[rest]
                    break
            # r = largest s with (xi - alpha) - s*alpha a root
            rr = 0
            while tuple(x - (rr + 1) * y for x, y in zip(rest, roots[a])) in rd._root_index:
                rr += 1
            self.extraspecial[k] = (a, b, rr)
            e_mat[k] = _bracket(e_mat[a], e_mat[b]) / (rr + 1)
            f_mat[k] = -_bracket(f_mat[a], f_mat[b]) / (rr + 1)
        hs = [_bracket(es[i], fs[i]) for i in range(rd.rank)]
        self._mats = [f_mat[k] for k in range(N)] + hs + [e_mat[k] for k in range(N)]
        for k in range(N):
            hk = _bracket(e_mat[k], f_mat[k])
            target = sum((c * hs[i] for i, c in enumerate(rd.coroots[k])), _zeros(hs[0].shape[0]))
            if not (hk == target).all():
                raise AssertionError(f"[e,f] != h for root {roots[k]}")
        for i in range(rd.rank):
            for j in range(rd.rank):
                if not (_bracket(hs[i], es[j]) == rd.cartan[j][i] * es[j]).all():
                    raise AssertionError("realization does not match the Cartan matrix")

    def _decompose(self, m, weight) -> dict[int, int]:
        rd = self.rd
        if all(x == 0 for x in weight):
            hs = self._mats[self.n_pos:self.n_pos + self.rank]
            diag = [[hs[i][d, d] for i in range(self.rank)] for d in range(m.shape[0])]
            rhs = [m[d, d] for d in range(m.shape[0])]
            coeff = _solve_exact(diag, rhs)
            recon = sum((c * h for c, h in zip(coeff, hs)), _zeros(m.shape[0]))
            if not (recon == m).all():
                raise AssertionError("bracket not in the torus")
            out = {}
            for i, c in enumerate(coeff):
                if c != 0:
                    if c.denominator != 1:
                        raise AssertionError("non-integral structure constant")
                    out[self.h(i)] = int(c)
            return out
        sr = rd.signed_root(weight)
        if sr is None:
            if (m != 0).any():
                raise AssertionError("nonzero bracket of non-root weight")
            return {}
        x = self.root_vector(*sr)
        xm = self._mats[x]
        nz = next(idx for idx in zip(*np.nonzero(xm != 0)))
        c = m[nz] / xm[nz]
        if not (m == c * xm).all():
            raise AssertionError("bracket is not proportional to a root vector")
        if c.denominator != 1:
            raise AssertionError("non-integral structure constant")
        return {x: int(c)} if c else {}

    def _build_table(self):
        d = self.dim
        self.table: list[list[dict[int, int]]] = [[{} for _ in range(d)] for _ in range(d)]
        for i in range(d):
            for j in range(i + 1, d):
                w = tuple(a + b for a, b in zip(self.weights[i], self.weights[j]))
                c = self._decompose(_bracket(self._mats[i], self._mats[j]), w)
                self.table[i][j] = c
                self.table[j][i] = {k: -v for k, v in c.items()}
        p = self.p
        self._mod = [[{k: v % p for k, v in self.table[i][j].items() if v % p}
                      for j in range(d)] for i in range(d)]

    def bracket(self, x: int, y: int) -> dict[int, int]:
        """[b_x, b_y] with coefficients reduced mod p."""
        return self._mod[x][y]

    def bracket_vectors(self, u, v) -> np.ndarray:
        """Bracket of two coefficient vectors, mod p."""
        out = np.zeros(self.dim, dtype=np.int64)
        for i in np.flatnonzero(u):
            for j in np.flatnonzero(v):
                for k, c in self._mod[i][j].items():
                    out[k] += u[i] * v[j] * c
        return out % self.p

    def adjoint(self, x: int) -> np.ndarray:
        """Matrix of ad(b_x) (columns are images of basis vectors)."""
        m = np.zeros((self.dim, self.dim), dtype=np.int64)
        for j in range(self.dim):
            for k, c in self._mod[x][j].items():
                m[k, j] = c
        return m

    def p_power(self, x: int) -> dict[int, int]:
        """x^[p] as a Lie element: root vectors go to 0, coroots to themselves."""
        return {x: 1} if self.is_toral(x) else {}

    def _standard_levi_chi(self) -> np.ndarray:
        chi = np.zeros(self.dim, dtype=np.int64)
        for i in self.rd.levi:
            chi[self.f(self.rd.simple_index[i])] = 1
        return chi

    def _build_tau(self) -> np.ndarray:
        """tau(x_alpha) proportional to x_{-w_I alpha}, fixed on generators and extended."""
        rd, d = self.rd, self.dim
        images: dict[int, np.ndarray] = {}

        def vec(x, c=1):
            v = np.zeros(d, dtype=object)
            v[x] = c
            return v

        def bracket_int(u, v):
            out = np.zeros(d, dtype=object)
            for i in np.flatnonzero(u):
                for j in np.flatnonzero(v):
                    for k, c in self.table[i][j].items():
                        out[k] += u[i] * v[j] * c
            return out

        for i in range(rd.rank):
            c = -1 if i in rd.levi else 1
            gamma = tuple(-x for x in rd.w_I.apply(rd.simple_roots[i]))
            s, k = rd.signed_root(gamma)
            k_simple = rd.simple_index[i]
            images[self.e(k_simple)] = vec(self.root_vector(s, k), c)
            images[self.f(k_simple)] = vec(self.root_vector(-s, k), c)
            images[self.h(i)] = bracket_int(images[self.e(k_simple)], images[self.f(k_simple)])
        for k in range(self.n_pos):
            if k in self.extraspecial:
                a, b, rr = self.extraspecial[k]
                ev = bracket_int(images[self.e(a)], images[self.e(b)])
                fv = -bracket_int(images[self.f(a)], images[self.f(b)])
                if any(x % (rr + 1) for x in ev) or any(x % (rr + 1) for x in fv):
                    raise AssertionError("tau image not integral")
                images[self.e(k)] = ev // (rr + 1)
                images[self.f(k)] = fv // (rr + 1)
        t = np.array([[int(images[j][i]) for j in range(d)] for i in range(d)], dtype=np.int64)
        p = self.p
        for x in range(d):
            for y in range(d):
                lhs = np.zeros(d, dtype=np.int64)
                for k, c in self.table[x][y].items():
                    lhs += c * t[:, k]
                if np.any((lhs - self.bracket_vectors(t[:, x] % p, t[:, y] % p)) % p):
                    raise AssertionError("tau is not a Lie automorphism")
        tinv = inverse(t % p, p)
        if np.any((self.chi @ tinv + self.chi) % p):
            raise AssertionError("chi o tau^-1 != -chi")
        return t % p

    def subalgebra(self, tag: str) -> list[int]:
        """Basis indices of a distinguished subalgebra."""
        rd = self.rd
        N = self.n_pos
        levi = set(rd.levi_roots)
        torus = [self.h(i) for i in range(self.rank)]
        nI_minus = [self.f(k) for k in range(N) if k in levi]
        nI_plus = [self.e(k) for k in range(N) if k in levi]
        u_minus = [self.f(k) for k in range(N) if k not in levi]
        u_plus = [self.e(k) for k in range(N) if k not in levi]
        table = {
            "borel+": torus + nI_plus + u_plus,
            "n-": nI_minus + u_minus,
            "n+": nI_plus + u_plus,
            "levi": nI_minus + torus + nI_plus,
            "levi_borel": torus + nI_plus,
            "parabolic": nI_minus + torus + nI_plus + u_plus,
            "parabolic'": nI_minus + torus + nI_plus + u_minus,
            "u+": u_plus,
            "u-": u_minus,
            "nI-": nI_minus,
            "twisted_borel": torus + nI_plus + u_minus,
            "all": list(range(self.dim)),
        }
        if tag not in table:
            raise KeyError(f"unknown subalgebra tag {tag!r}")
        idx = sorted(table[tag])
        s = set(idx)
        for x, y in itertools.combinations(idx, 2):
            if not set(self.bracket(x, y)) <= s:
                raise AssertionError(f"subalgebra {tag} is not closed")
        return idx

    def structure_json(self) -> dict:
        return {
            "type": f"{self.rd.cartan_type}{self.rd.rank}",
            "p": self.p,
            "basis": [self.name(x) for x in range(self.dim)],
            "brackets": {f"{self.name(i)},{self.name(j)}": {self.name(k): c for k, c in self.table[i][j].items()}
                         for i in range(self.dim) for j in range(i + 1, self.dim) if self.table[i][j]},
        }


def _solve_exact(rows: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]) -> list[Fraction]:
    a = [list(map(Fraction, r)) + [Fraction(b)] for r, b in zip(rows, rhs)]
    n = len(a[0]) - 1
    piv_cols = []
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, len(a)) if a[i][c] != 0), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        inv = 1 / a[r][c]
        a[r] = [x * inv for x in a[r]]
        for i in range(len(a)):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        piv_cols.append(c)
        r += 1
    out = [Fraction(0)] * n
    for i, c in enumerate(piv_cols):
        out[c] = a[i][n]
    return out


def build_chevalley(rd: RootDatum, p: int) -> LieAlgebra:
    return LieAlgebra(rd, p)


def standard_levi_pchar(lie: LieAlgebra) -> np.ndarray:
    return lie.chi.copy()


def tau_map(lie: LieAlgebra) -> np.ndarray:
    """Matrix of tau on the basis (column j is tau(b_j)), entries mod p."""
    return lie.tau.copy()


def p_power(lie: LieAlgebra, x: int) -> dict[int, int]:
    return lie.p_power(x)
