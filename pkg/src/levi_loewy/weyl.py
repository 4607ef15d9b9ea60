"""Root data, Weyl groups, dot actions and the X(T)/ZI grading lattice.

Weights are integer tuples in fundamental-weight coordinates. Roots are kept
in simple-root coordinates and converted through the Cartan matrix, whose
row ``i`` is the simple root ``alpha_i`` written in fundamental weights.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

Weight = tuple[int, ...]


class UnsupportedTypeError(ValueError):
    pass


def parse_cartan_type(label: str) -> tuple[str, int]:
    """Split a label such as ``"A2"`` or ``"B2"`` into family and rank."""
    label = label.strip().upper()
    if len(label) < 2 or label[0] not in "ABCD" or not label[1:].isdigit():
        raise UnsupportedTypeError(f"cannot parse Cartan type {label!r}")
    return label[0], int(label[1:])


def cartan_matrix(family: str, rank: int) -> list[list[int]]:
    """Cartan matrix with ``a[i][j] = <alpha_i, alpha_j^vee>`` (Bourbaki labels)."""
    if family not in "ABCD" or rank < 1:
        raise UnsupportedTypeError(f"unsupported type {family}{rank}")
    if family in "BC" and rank < 2 or family == "D" and rank < 3:
        raise UnsupportedTypeError(f"unsupported type {family}{rank}")
    a = [[0] * rank for _ in range(rank)]
    for i in range(rank):
        a[i][i] = 2
    for i in range(rank - 1):
        a[i][i + 1] = a[i + 1][i] = -1
    if family == "B":
        # alpha_n short: <alpha_{n-1}, alpha_n^vee> = -2
        a[rank - 2][rank - 1] = -2
    elif family == "C":
        a[rank - 1][rank - 2] = -2
    elif family == "D":
        a[rank - 2][rank - 1] = a[rank - 1][rank - 2] = 0
        a[rank - 3][rank - 1] = a[rank - 1][rank - 3] = -1
    return a


def _half_lengths(family: str, rank: int) -> list[int]:
    # |alpha_i|^2 / 2, normalised so the short roots have 1 (B) or long have 2 (C)
    if family == "B":
        return [2] * (rank - 1) + [1]
    if family == "C":
        return [1] * (rank - 1) + [2]
    return [1] * rank


def _hermite_rows(rows: Sequence[Sequence[int]], ncols: int) -> list[tuple[int, list[int]]]:
    """Row Hermite normal form of an integer lattice, as (pivot column, row) pairs."""
    a = [list(r) for r in rows]
    out: list[tuple[int, list[int]]] = []
    top = 0
    for c in range(ncols):
        while True:
            live = [i for i in range(top, len(a)) if a[i][c] != 0]
            if not live:
                break
            k = min(live, key=lambda i: abs(a[i][c]))
            a[top], a[k] = a[k], a[top]
            clean = True
            for i in range(top + 1, len(a)):
                if a[i][c]:
                    q = a[i][c] // a[top][c]
                    a[i] = [x - q * y for x, y in zip(a[i], a[top])]
                    clean = clean and a[i][c] == 0
            if clean:
                break
        if top < len(a) and a[top][c] != 0:
            if a[top][c] < 0:
                a[top] = [-x for x in a[top]]
            for i in range(top):
                q = a[i][c] // a[top][c]
                a[i] = [x - q * y for x, y in zip(a[i], a[top])]
            top += 1
    for i in range(top):
        piv = next(c for c in range(ncols) if a[i][c] != 0)
        out.append((piv, a[i]))
    return out


def _reduce(v: Sequence[int], hnf: list[tuple[int, list[int]]]) -> Weight:
    v = list(v)
    for c, row in hnf:
        q = v[c] // row[c]
        if q:
            v = [x - q * y for x, y in zip(v, row)]
    return tuple(v)


def _rank_mod_p(rows: Sequence[Sequence[int]], p: int) -> int:
    a = [[x % p for x in r] for r in rows]
    rank = 0
    ncols = len(a[0]) if a else 0
    for c in range(ncols):
        piv = next((i for i in range(rank, len(a)) if a[i][c]), None)
        if piv is None:
            continue
        a[rank], a[piv] = a[piv], a[rank]
        inv = pow(a[rank][c], -1, p)
        a[rank] = [x * inv % p for x in a[rank]]
        for i in range(len(a)):
            if i != rank and a[i][c]:
                f = a[i][c]
                a[i] = [(x - f * y) % p for x, y in zip(a[i], a[rank])]
        rank += 1
    return rank


@dataclass(frozen=True)
class WeylElement:
    """A Weyl group element with its ShortLex-minimal reduced word.

    ``word = (i1, ..., ik)`` stands for ``s_{i1} ... s_{ik}``. ``matrix`` acts on
    row vectors of fundamental coordinates: ``w(lam) = lam @ matrix``.
    """

    word: tuple[int, ...]
    matrix: tuple[tuple[int, ...], ...] = field(compare=False, repr=False)

    @property
    def length(self) -> int:
        return len(self.word)

    def apply(self, lam: Sequence[int]) -> Weight:
        n = len(self.matrix)
        return tuple(sum(lam[k] * self.matrix[k][j] for k in range(n)) for j in range(n))


def _matmul(a, b):
    n = len(a)
    return tuple(tuple(sum(a[i][k] * b[k][j] for k in range(n)) for j in range(n)) for i in range(n))


class RootDatum:
    """Root system of a split simple group of type A-D with a chosen Levi subset.

    Parameters
    ----------
    cartan_type : str
        Family letter, ``"A"``, ``"B"``, ``"C"`` or ``"D"``.
    rank : int
    levi : iterable of int
        Zero-based indices of the simple roots in ``I``.
    """

    def __init__(self, cartan_type: str, rank: int, levi: Iterable[int] = ()):
        self.cartan_type = cartan_type
        self.rank = rank
        self.cartan = cartan_matrix(cartan_type, rank)
        self.levi = tuple(sorted(set(levi)))
        if any(i < 0 or i >= rank for i in self.levi):
            raise ValueError(f"Levi subset {self.levi} is not a subset of the simple roots")
        self._half = _half_lengths(cartan_type, rank)
        self.positive_roots = self._enumerate_roots()
        self._root_index = {b: k for k, b in enumerate(self.positive_roots)}
        self.positive_roots_fund = [self.root_to_weight(b) for b in self.positive_roots]
        self.coroots = [self._coroot(b) for b in self.positive_roots]
        self.simple_roots = [tuple(r) for r in self.cartan]
        self.simple_index = [self._root_index[tuple(int(i == j) for j in range(rank))] for i in range(rank)]
        self.rho: Weight = (1,) * rank
        self.levi_roots = [k for k, b in enumerate(self.positive_roots)
                           if all(b[j] == 0 for j in range(rank) if j not in self.levi)]
        self.weyl_elements = self._enumerate_weyl()
        self._by_matrix = {w.matrix: w for w in self.weyl_elements}
        self.identity = self.weyl_elements[0]
        self.w0 = max(self.weyl_elements, key=lambda w: w.length)
        self.levi_weyl = [w for w in self.weyl_elements if set(w.word) <= set(self.levi)]
        self.w_I = max(self.levi_weyl, key=lambda w: w.length)
        self.w_upper_I = self.compose(self.w_I, self.w0)
        self._zi_hnf = _hermite_rows([self.simple_roots[i] for i in self.levi], rank)
        self._cinv = _inverse_fraction(self.cartan)
        self._pzi: dict[int, list] = {}

    # -- construction helpers -------------------------------------------------

    def _pair_root(self, beta: Sequence[int], i: int) -> int:
        """<beta, alpha_i^vee> for beta in simple-root coordinates."""
        return sum(beta[j] * self.cartan[j][i] for j in range(self.rank))

    def _enumerate_roots(self) -> list[tuple[int, ...]]:
        n = self.rank
        simple = [tuple(int(i == j) for j in range(n)) for i in range(n)]
        found = set(simple)
        frontier = list(simple)
        while frontier:
            nxt = []
            for b in frontier:
                for i in range(n):
                    # alpha_i-string through b: b - k alpha_i is a root for k <= down
                    down = 0
                    c = list(b)
                    while True:
                        c[i] -= 1
                        if tuple(c) in found:
                            down += 1
                        else:
                            break
                    if down - self._pair_root(b, i) > 0:
                        up = tuple(b[j] + (j == i) for j in range(n))
                        if up not in found:
                            found.add(up)
                            nxt.append(up)
            frontier = nxt
        return sorted(found, key=lambda b: (sum(b), b))

    def _norm(self, beta: Sequence[int]) -> int:
        # (beta, beta) with (alpha_i, alpha_j) = a[i][j] * half[j]
        n = self.rank
        return sum(beta[i] * beta[j] * self.cartan[i][j] * self._half[j] for i in range(n) for j in range(n))

    def _coroot(self, beta: Sequence[int]) -> tuple[int, ...]:
        nb = self._norm(beta)
        out = []
        for i in range(self.rank):
            num = beta[i] * 2 * self._half[i]
            if num % nb:
                raise AssertionError("non-integral coroot")
            out.append(num // nb)
        return tuple(out)

    def _enumerate_weyl(self) -> list[WeylElement]:
        n = self.rank
        ident = tuple(tuple(int(i == j) for j in range(n)) for i in range(n))
        refl = []
        for i in range(n):
            # s_i(lam) = lam - lam_i alpha_i as a right matrix
            m = [list(r) for r in ident]
            for j in range(n):
                m[i][j] -= self.cartan[i][j]
            refl.append(tuple(tuple(r) for r in m))
        seen = {ident: WeylElement((), ident)}
        order = [seen[ident]]
        queue = deque(order)
        while queue:
            w = queue.popleft()
            for i in range(n):
                m = _matmul(refl[i], w.matrix)
                if m not in seen:
                    seen[m] = WeylElement(w.word + (i,), m)
                    order.append(seen[m])
                    queue.append(seen[m])
        return order

    # -- basic queries ------------------------------------------------------------

    def root_to_weight(self, beta: Sequence[int]) -> Weight:
        return tuple(sum(beta[j] * self.cartan[j][k] for j in range(self.rank)) for k in range(self.rank))

    def weight_to_root_coords(self, lam: Sequence[int]) -> tuple[Fraction, ...]:
        """Coordinates of lam in the simple roots (rational in general)."""
        n = self.rank
        return tuple(sum(Fraction(lam[j]) * self._cinv[j][k] for j in range(n)) for k in range(n))

    def root_index(self, beta: Sequence[int]) -> int:
        return self._root_index[tuple(beta)]

    def signed_root(self, lam: Sequence[int]):
        """Return (sign, index) if lam (fundamental coords) is a root, else None."""
        c = self.weight_to_root_coords(lam)
        if any(x.denominator != 1 for x in c):
            return None
        c = tuple(int(x) for x in c)
        if c in self._root_index:
            return 1, self._root_index[c]
        neg = tuple(-x for x in c)
        if neg in self._root_index:
            return -1, self._root_index[neg]
        return None

    def pair(self, lam: Sequence[int], k: int) -> int:
        """<lam, beta_k^vee> for the k-th positive root."""
        return sum(c * x for c, x in zip(self.coroots[k], lam))

    @property
    def num_positive(self) -> int:
        return len(self.positive_roots)

    def element(self, word: Sequence[int]) -> WeylElement:
        """The element s_{i1} ... s_{ik} for ``word = (i1, ..., ik)``."""
        w = self.identity
        for i in word:
            w = self.compose(w, self.weyl_elements[1 + i])
        return w

    def compose(self, v: WeylElement, w: WeylElement) -> WeylElement:
        """The product v*w (apply w first)."""
        return self._by_matrix[_matmul(w.matrix, v.matrix)]

    def inverse(self, w: WeylElement) -> WeylElement:
        return self.element(tuple(reversed(w.word)))

    # -- dot action and twists ----------------------------------------------------

    def dot(self, w: WeylElement, lam: Sequence[int]) -> Weight:
        shifted = w.apply([x + 1 for x in lam])
        return tuple(x - 1 for x in shifted)

    def lambda_twist(self, lam: Sequence[int], w: WeylElement, p: int) -> Weight:
        """lam - (p-1)(rho - w rho)."""
        wr = w.apply(self.rho)
        return tuple(x - (p - 1) * (r - y) for x, r, y in zip(lam, self.rho, wr))

    def twist(self, lam: Sequence[int], p: int) -> Weight:
        return self.lambda_twist(lam, self.w_upper_I, p)

    def untwist(self, lam: Sequence[int], p: int) -> Weight:
        wr = self.w_upper_I.apply(self.rho)
        return tuple(x + (p - 1) * (r - y) for x, r, y in zip(lam, self.rho, wr))

    def is_p_regular(self, lam: Sequence[int], p: int) -> bool:
        shifted = [x + 1 for x in lam]
        return all(self.pair(shifted, k) % p for k in range(self.num_positive))

    # -- grading lattice ------------------------------------------------------------

    def degree_class(self, lam: Sequence[int]) -> Weight:
        """Canonical representative of lam + ZI."""
        return _reduce(lam, self._zi_hnf)

    def _p_hnf(self, p: int):
        if p not in self._pzi:
            rows = [self.simple_roots[i] for i in self.levi]
            if rows and _rank_mod_p(rows, p) < len(rows):
                raise ValueError(f"ZI meets pX(T) in more than pZI at p={p}")
            self._pzi[p] = _hermite_rows([[p * x for x in r] for r in rows], self.rank)
        return self._pzi[p]

    def weight_key(self, lam: Sequence[int], p: int) -> Weight:
        """Canonical representative of lam + pZI (the fine weight label)."""
        return _reduce(lam, self._p_hnf(p))

    def linkage_key(self, lam: Sequence[int], p: int) -> Weight:
        """Canonical representative of the W_{I,p} dot orbit of lam."""
        return min(self.weight_key(self.dot(w, lam), p) for w in self.levi_weyl)

    def linked(self, lam: Sequence[int], mu: Sequence[int], p: int) -> bool:
        return self.linkage_key(lam, p) == self.linkage_key(mu, p)

    def levi_dot_orbit_size(self, lam: Sequence[int], p: int) -> int:
        return len({self.weight_key(self.dot(w, lam), p) for w in self.levi_weyl})

    def degree_height(self, lam: Sequence[int]) -> Fraction:
        """Sum of the simple-root coordinates outside I; constant on ZI cosets."""
        c = self.weight_to_root_coords(lam)
        return sum((c[j] for j in range(self.rank) if j not in self.levi), Fraction(0))

    def order_leq(self, mu: Sequence[int], nu: Sequence[int]) -> str:
        """Compare degree classes in the order generated by the simple roots outside I.

        Returns ``"lt"`` when mu < nu, ``"eq"``, ``"gt"`` or ``"incomparable"``.
        """
        diff = [b - a for a, b in zip(mu, nu)]
        c = self.weight_to_root_coords(diff)
        if any(x.denominator != 1 for x in c):
            return "incomparable"
        outside = [c[j] for j in range(self.rank) if j not in self.levi]
        if all(x == 0 for x in outside):
            return "eq"
        if all(x >= 0 for x in outside):
            return "lt"
        if all(x <= 0 for x in outside):
            return "gt"
        return "incomparable"

    def to_json(self) -> dict:
        return {
            "type": f"{self.cartan_type}{self.rank}",
            "rank": self.rank,
            "levi": list(self.levi),
            "positive_roots": [list(b) for b in self.positive_roots],
            "lengths": {
                "w0": self.w0.length,
                "w_I": self.w_I.length,
                "w^I": self.w_upper_I.length,
            },
            "w^I": list(self.w_upper_I.word),
        }


def _inverse_fraction(a: list[list[int]]) -> list[list[Fraction]]:
    n = len(a)
    m = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(a)]
    for c in range(n):
        piv = next(i for i in range(c, n) if m[i][c] != 0)
        m[c], m[piv] = m[piv], m[c]
        inv = 1 / m[c][c]
        m[c] = [x * inv for x in m[c]]
        for i in range(n):
            if i != c and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[c])]
    return [row[n:] for row in m]


def build_root_datum(cartan_type: str, rank: int | None = None, levi_subset: Iterable[int] = ()) -> RootDatum:
    """Build a root datum from ``("A", 2)`` or a label such as ``"A2"``."""
    if rank is None:
        cartan_type, rank = parse_cartan_type(cartan_type)
    return RootDatum(cartan_type.upper(), rank, levi_subset)
