import itertools

import numpy as np
import pytest

from levi_loewy.chevalley import BadPrimeError, LieAlgebra, p_power, standard_levi_pchar, tau_map
from levi_loewy.weyl import build_root_datum

CASES = [("A", 1, (0,), 3), ("A", 1, (0,), 5), ("A", 2, (0,), 5), ("A", 2, (), 7), ("B", 2, (1,), 5),
         ("A", 3, (0, 1), 5)]


def lie(family, rank, levi, p):
    return LieAlgebra(build_root_datum(family, rank, levi), p)


def vec(d, terms):
    v = np.zeros(d, dtype=np.int64)
    for k, c in terms.items():
        v[k] += c
    return v


def br(L, u, v):
    return L.bracket_vectors(u % L.p, v % L.p) % L.p


@pytest.mark.parametrize("case", CASES)
def test_jacobi(case):
    L = lie(*case)
    d, p = L.dim, L.p
    basis = np.eye(d, dtype=np.int64)
    for x, y, z in itertools.combinations(range(d), 3):
        bx, by, bz = basis[x], basis[y], basis[z]
        tot = br(L, br(L, bx, by), bz) + br(L, br(L, by, bz), bx) + br(L, br(L, bz, bx), by)
        assert not np.any(tot % p)


def test_sl2_brackets():
    L = lie("A", 1, (0,), 5)
    e, f, h = L.e(0), L.f(0), L.h(0)
    assert L.bracket(e, f) == {h: 1}
    assert L.bracket(h, e) == {e: 2}
    assert {k: c % 5 for k, c in L.bracket(h, f).items()} == {f: 3}


@pytest.mark.parametrize("case", CASES)
def test_torus_weights(case):
    L = lie(*case)
    rd = L.rd
    for i in range(rd.rank):
        for k in range(rd.num_positive):
            got = {a: c % L.p for a, c in L.bracket(L.h(i), L.e(k)).items()}
            want = rd.positive_roots_fund[k][i] % L.p
            assert got == ({L.e(k): want} if want else {})


@pytest.mark.parametrize("case", CASES)
def test_restrictedness(case):
    L = lie(*case)
    p = L.p
    for x in range(L.dim):
        ad = L.adjoint(x) % p
        power = np.linalg.matrix_power(ad, 1)
        for _ in range(p - 1):
            power = power @ ad % p
        target = sum((c * L.adjoint(z) for z, c in p_power(L, x).items()), np.zeros_like(ad)) % p
        assert np.array_equal(power, target)


def test_sl3_bracket_of_simple_root_vectors():
    L = lie("A", 2, (0,), 5)
    rd = L.rd
    a, b = rd.simple_index
    hi = next(k for k in range(3) if k not in (a, b))
    got = L.bracket(L.e(a), L.e(b))
    assert set(got) == {L.e(hi)} and got[L.e(hi)] % 5 in (1, 4)


def test_prime_gates():
    with pytest.raises(BadPrimeError):
        lie("A", 2, (0,), 3)
    with pytest.raises(BadPrimeError):
        lie("B", 2, (1,), 2)
    with pytest.raises(BadPrimeError):
        lie("A", 3, (0,), 2)


def test_standard_levi_character():
    assert not np.any(standard_levi_pchar(lie("A", 2, (), 5)))
    L = lie("A", 1, (0,), 5)
    assert standard_levi_pchar(L)[L.f(0)] == 1
    L = lie("A", 2, (0,), 5)
    chi = standard_levi_pchar(L)
    rd = L.rd
    for k in range(rd.num_positive):
        assert chi[L.f(k)] == (1 if k == rd.simple_index[0] else 0)
        assert chi[L.e(k)] == 0


@pytest.mark.parametrize("case", CASES)
def test_tau(case):
    L = lie(*case)
    p = L.p
    t = tau_map(L)
    tinv = L.tau_inverse
    assert not np.any((L.chi @ tinv + L.chi) % p)
    torus = [L.h(i) for i in range(L.rank)]
    tt = t @ t % p
    for h in torus:
        assert np.array_equal(tt[:, h], np.eye(L.dim, dtype=np.int64)[h])
    # tau is a Lie automorphism
    for x, y in itertools.combinations(range(L.dim), 2):
        lhs = t @ vec(L.dim, L.bracket(x, y)) % p
        assert np.array_equal(lhs, br(L, t[:, x], t[:, y]))


def test_tau_sl2_fixes_root_lines():
    L = lie("A", 1, (0,), 5)
    t = tau_map(L)
    assert np.count_nonzero(t[:, L.e(0)]) == 1 and t[L.e(0), L.e(0)] != 0


@pytest.mark.parametrize("tag", ["borel+", "n-", "n+", "levi", "levi_borel", "parabolic", "parabolic'", "u+", "u-",
                                 "nI-", "twisted_borel", "all"])
def test_subalgebras_closed(tag):
    L = lie("B", 2, (1,), 5)
    idx = L.subalgebra(tag)
    assert len(idx) == len(set(idx))


def test_structure_dump():
    d = lie("A", 2, (0,), 5).structure_json()
    assert d["p"] == 5 and len(d["basis"]) == 8 and d["brackets"]
