"""Acceptance criteria, one test per criterion.

Each test collects its sub-checks and fails with the list of the ones
that did not hold, so a single summary line per criterion is printed at
the end of the run (see conftest.py).
"""

import numpy as np
import pytest

import oracles
from conftest import ctx_for
from levi_loewy import harness, pims
from levi_loewy.homext import ext1
from levi_loewy.modules import baby_verma, iso_test, levi_pim, levi_verma, spin, tau_dual
from levi_loewy.series import chop, diagram, l_filtration_verify, loewy, radical_series, socle_series

BUILT = []  # every module built for criteria 2-9, for the invariant sweep


class Checks:
    def __init__(self):
        self.failed = []

    def __call__(self, name, ok, detail=""):
        if not ok:
            self.failed.append(f"{name}: {detail}" if detail else name)

    def done(self):
        assert not self.failed, "; ".join(self.failed)


def _ws(t, levi, w, max_dim=20000):
    return harness.Workspace(harness.CaseSpec(t, levi, 5, w, max_dim=max_dim))


def _keep(*ms):
    BUILT.extend(ms)
    return ms[0] if len(ms) == 1 else ms


def _socle_table(m, names):
    """Socle layers, top first, as lists of names."""
    return diagram(socle_series(m), "json", names)["layers"]


def _canon(gsub, p):
    return oracles.rref(gsub.global_basis().tolist(), p)


# -- 2 ----------------------------------------------------------------------------------------------


@pytest.mark.criterion(2, "sl2 oracle equivalence")
def test_sl2_oracle_equivalence():
    c = Checks()
    for p in (3, 5):
        ctx = ctx_for("A1", (0,), p)
        for lam in range(p):
            m = _keep(baby_verma(ctx, (lam,)))
            n = m.dim
            lattice = oracles.submodule_lattice(oracles.dense_ops(m), n, p)
            soc, rad = socle_series(m), radical_series(m)
            c(f"socle p={p} lam={lam}", [_canon(s, p) for s in soc.subspaces] == oracles.socle_series(lattice, n, p))
            c(f"radical p={p} lam={lam}",
              [_canon(s, p) for s in rad.subspaces] == oracles.radical_series(lattice, n, p))
            # the lattice read off the package: sums of spins of single vectors
            cyclic = {_canon(spin(m, [np.array(v)]), p) for v in oracles.projective_points(n, p)} | {()}
            c(f"lattice p={p} lam={lam}", cyclic <= lattice and len(lattice) == len(_sum_closure(cyclic, p)))
            ch = chop(m)
            dims = sorted(d for i, k in ch.counts.items() for d in [ch.factors[i].dim] * k)
            c(f"chop p={p} lam={lam}", dims == oracles.composition_dims(lattice, n, p))
    c.done()


def _sum_closure(subs, p):
    out = set(subs)
    frontier = set(subs)
    while frontier:
        nxt = set()
        for a in frontier:
            for b in subs:
                s = oracles.rref(list(a) + list(b), p)
                if s not in out:
                    nxt.add(s)
        out |= nxt
        frontier = nxt
    return out


# -- 3 ----------------------------------------------------------------------------------------------


@pytest.mark.criterion(3, "sl2 projective indecomposables")
def test_sl2_pim():
    c = Checks()
    p = 5
    ctx = ctx_for("A1", (0,), p)
    for lam in range(p - 1):
        q, z = _keep(levi_pim(ctx, (lam,)), baby_verma(ctx, (lam,)))
        ch = chop(q)
        c(f"[Q:Z] lam={lam}", q.dim == 2 * z.dim and sum(ch.counts.values()) == 2
          and all(f.dim == z.dim for f in ch.factors.values()))
        lw = loewy(q)
        c(f"ll(Q) lam={lam}", lw.ll == 2 == lw.radical.length, str(lw.ll))
    total = sum(levi_pim(ctx, lam).dim * s.dim for lam, s in pims.levi_simples(ctx))
    c("dim A = sum dim P dim S", total == p ** 3, str(total))
    c.done()


# -- 4 ----------------------------------------------------------------------------------------------

SL3_Z_TABLES = {  # socle layers, top first
    "xi0": [["xi0"], ["xi1"], ["xi2"]],
    "xi1+pa": [["xi1+pa"], ["xi2+pa"], ["xi0"]],
    "xi2+pa": [["xi2+pa"], ["xi0"], ["xi1"]],
}
SL3_ZW_TABLES = {
    "xi0": [["xi2"], ["xi1"], ["xi0"]],
    "xi1+pa": [["xi0"], ["xi2+pa"], ["xi1+pa"]],
    "xi2+pa": [["xi1"], ["xi0"], ["xi2+pa"]],
}
SL3_QI_TABLE = [["xi0"], ["xi0", "xi1"], ["xi1", "xi2"], ["xi2"]]
SL3_QW_TABLE = [["xi2"], ["xi1", "xi2"], ["xi0", "xi1"], ["xi0"]]


@pytest.mark.criterion(4, "sl3 subregular, regular xi0")
def test_sl3_subregular():
    c = Checks()
    ws = _ws("A2", (0,), "xi0")
    names = harness.display_names(ws.ctx)
    z, qi, qw, ql = _keep(ws.z(), ws.qi(), ws.qw(), ws.ql())
    ll_ = _keep(ws.quasi().module)
    ch = chop(z)
    got = sorted((names.get(i), k) for i, k in ch.counts.items())
    c("chop Z", got == [("xi0", 1), ("xi1", 1), ("xi2", 1)], str(got))
    c("ll(Z) = 3", loewy(z).ll == 3, str(loewy(z).ll))
    c("ll(QI) = 4", loewy(qi).ll == 4, str(loewy(qi).ll))
    for w in SL3_Z_TABLES:
        wsw = _ws("A2", (0,), w)
        zz, zw = _keep(wsw.z(), wsw.zw())
        c(f"socle table Z({w})", _socle_table(zz, names) == SL3_Z_TABLES[w], str(_socle_table(zz, names)))
        c(f"socle table Zw({w})", _socle_table(zw, names) == SL3_ZW_TABLES[w], str(_socle_table(zw, names)))
    c("socle table QI(xi0)", _socle_table(qi, names) == SL3_QI_TABLE, str(_socle_table(qi, names)))
    c("socle table Qw(xi0)", _socle_table(qw, names) == SL3_QW_TABLE, str(_socle_table(qw, names)))
    a, b, d = loewy(ll_).ll, loewy(z).ll, loewy(qi).ll
    c("ll(LL) = 2", a == 2, str(a))
    c("ll(QI) = ll(LL) + ll(Z) - 1", d == a + b - 1, f"{d} vs {a}+{b}-1")
    c("ll(LL) = ll(Q_I)", a == loewy(ql).ll, f"{a} vs {loewy(ql).ll}")
    c.done()


# -- 5 ----------------------------------------------------------------------------------------------


@pytest.mark.criterion(5, "sl3 wall weight")
def test_sl3_wall():
    c = Checks()
    ws = _ws("A2", (0,), "wall")
    names = harness.display_names(ws.ctx)
    c("wall is not p-regular", not ws.rd.is_p_regular(ws.lam, 5))
    q = ws.quasi()
    _keep(q.module)
    c("LL(xi0) = L(xi0)", iso_test(q.module, ws.ctx.simple(ws.lam).module))
    z, zw, qi = _keep(ws.z(), ws.zw(), ws.qi())
    c("Z(xi0) shape", _socle_table(z, names) == [["wall"], ["wall1"]], str(_socle_table(z, names)))
    c("Zw(xi0) shape", _socle_table(zw, names) == [["wall1"], ["wall"]], str(_socle_table(zw, names)))
    c("QI(xi0) shape", _socle_table(qi, names) == [["wall"], ["wall1"], ["wall"], ["wall1"]],
      str(_socle_table(qi, names)))
    ws1 = _ws("A2", (0,), "wall1+pa")
    z1, zw1, qi1 = _keep(ws1.z(), ws1.zw(), ws1.qi())
    l1 = _keep(ws1.quasi().module)
    c("Z(xi1+pa) shape", _socle_table(z1, names) == [["wall1+pa"], ["wall"]], str(_socle_table(z1, names)))
    c("Zw(xi1+pa) shape", _socle_table(zw1, names) == [["wall"], ["wall1+pa"]], str(_socle_table(zw1, names)))
    c("QI(xi1+pa) = Z(xi1+pa)", iso_test(qi1, z1))
    c("LL(xi1+pa) simple", iso_test(l1, ws1.ctx.simple(ws1.lam).module))
    l0 = _ws("A2", (0,), "wall1").quasi().module
    c("LL(xi1) simple", loewy(l0).ll == 1 and len(chop(l0).counts) == 1)
    c.done()


# -- 6 ----------------------------------------------------------------------------------------------

SO5_Z_TABLES = {
    "xi1": [["xi1"], ["xi2"], ["xi3"], ["xi4"]],
    "xi0": [["xi0"], ["xi1"], ["xi2"], ["xi3"]],
    "xi-1": [["xi-1"], ["xi0"], ["xi1"], ["xi2"]],
    "xi-2": [["xi-2"], ["xi-1"], ["xi0"], ["xi1"]],
}
SO5_ZW_TABLES = {
    "xi1": [["xi4"], ["xi3"], ["xi2"], ["xi1"]],
    "xi0": [["xi3"], ["xi2"], ["xi1"], ["xi0"]],
    "xi-1": [["xi2"], ["xi1"], ["xi0"], ["xi-1"]],
    "xi-2": [["xi1"], ["xi0"], ["xi-1"], ["xi-2"]],
}
SO5_QI_TABLE = [["xi1"], ["xi1", "xi2"], ["xi2", "xi3"], ["xi3", "xi4"], ["xi4"]]
SO5_QW_TABLE = [["xi4"], ["xi3", "xi4"], ["xi2", "xi3"], ["xi1", "xi2"], ["xi1"]]


@pytest.mark.criterion(6, "so5 subregular, regular xi1")
def test_so5_subregular():
    c = Checks()
    ws = _ws("B2", (1,), "xi1")
    names = harness.display_names(ws.ctx)
    z, qi, qw = _keep(ws.z(), ws.qi(), ws.qw())
    c("ll(Z) = 4", loewy(z).ll == 4, str(loewy(z).ll))
    c("ll(QI) = 5", loewy(qi).ll == 5, str(loewy(qi).ll))
    for w in SO5_Z_TABLES:
        wsw = _ws("B2", (1,), w)
        zz, zw = _keep(wsw.z(), wsw.zw())
        c(f"socle table Z({w})", _socle_table(zz, names) == SO5_Z_TABLES[w], str(_socle_table(zz, names)))
        c(f"socle table Zw({w})", _socle_table(zw, names) == SO5_ZW_TABLES[w], str(_socle_table(zw, names)))
    c("socle table QI(xi1)", _socle_table(qi, names) == SO5_QI_TABLE, str(_socle_table(qi, names)))
    c("socle table Qw(xi1)", _socle_table(qw, names) == SO5_QW_TABLE, str(_socle_table(qw, names)))
    c.done()


# -- 7 ----------------------------------------------------------------------------------------------


def _duality_cases():
    yield harness.Workspace(harness.CaseSpec("A1", (0,), 5, (1,)))
    for t, levi, w in (("A2", (0,), "xi0"), ("A2", (0,), "wall"), ("B2", (1,), "xi1")):
        yield _ws(t, levi, w)


@pytest.mark.criterion(7, "tau duality")
def test_tau_duality():
    c = Checks()
    for ws in _duality_cases():
        label = ws.case.label()
        z, zw, qi, qw = ws.z(), ws.zw(), ws.qi(), ws.qw()
        l_ = ws.quasi().module
        c(f"tau Z = Zw [{label}]", iso_test(tau_dual(z), zw))
        c(f"tau QI = Qw [{label}]", iso_test(tau_dual(qi), qw))
        c(f"tau LL = LL [{label}]", iso_test(tau_dual(l_), l_))
        for name, m in (("Z", z), ("QI", qi), ("LL", l_)):
            c(f"ll tau {name} [{label}]", loewy(m).ll == loewy(tau_dual(m)).ll)
    c.done()


# -- 8 ----------------------------------------------------------------------------------------------


@pytest.mark.criterion(8, "Ext1 vanishing")
def test_ext_vanishing():
    c = Checks()
    for p in (3, 5):
        ctx = ctx_for("A1", (0,), p)
        for lam in range(p - 1):
            l_ = _keep(harness.Workspace(harness.CaseSpec("A1", (0,), p, (lam,))).quasi().module)
            c(f"Ext(LL,LL) sl2 p={p} lam={lam}", ext1(l_, l_).dim == 0)
            q = levi_pim(ctx, (lam,))
            c(f"Ext(Q,-) sl2 p={p} lam={lam}", all(ext1(q, baby_verma(ctx, (b,))).dim == 0 for b in range(p)))
    ws = _ws("A2", (0,), "xi0")
    l_ = ws.quasi().module
    e = ext1(l_, l_).dim
    c("Ext(LL,LL) sl3 xi0", e == 0, str(e))
    # projective sanity in the same block, one level down: the Levi projective against Levi simples
    q = ws.ql()
    for w in ("xi0", "xi1", "xi2"):
        mu = harness.named_weights(ws.ctx)[w]
        c(f"Ext(Q_I, Z_I({w}))", ext1(q, levi_verma(ws.ctx, mu)).dim == 0)
    zi = levi_verma(ws.ctx, ws.lam)
    c("Ext(Z_I, Z_I) is nonzero", ext1(zi, zi).dim == 1)
    c.done()


# -- 9 ----------------------------------------------------------------------------------------------


@pytest.mark.criterion(9, "quasi-simple filtrations")
def test_l_filtrations():
    c = Checks()
    ws = _ws("A2", (0,), "xi0")
    expected = harness.reciprocity(ws.ctx, ws.lam)
    names = harness.display_names(ws.ctx)
    got = sorted(names.get(ws.ctx.linkage(w)) for w in expected)
    c("reciprocity factors", got == ["xi0", "xi1", "xi2"], str(got))
    for label, m in (("QI", ws.qi()), ("Qw", ws.qw())):
        rep = l_filtration_verify(m, expected)
        dims = [_ws("A2", (0,), tuple(w)).quasi().dim for w in expected]
        c(f"LL-filtration of {label}", rep.ok, f"{rep.message}; factor dims {dims} vs {m.dim}")
    c.done()


# -- 10 ---------------------------------------------------------------------------------------------


def _bound_cases():
    for p in (3, 5):
        for lam in range(p - 1):
            yield harness.CaseSpec("A1", (0,), p, (lam,))
    yield harness.CaseSpec("A2", (0,), 5, "xi0", max_dim=20000)
    yield harness.CaseSpec("A2", (0,), 5, "xi1+pa", max_dim=20000)
    yield harness.CaseSpec("B2", (1,), 5, "xi1", max_dim=20000)


@pytest.mark.criterion(10, "lower bounds (as proved)")
def test_lower_bounds():
    c = Checks()
    for case in _bound_cases():
        ws = harness.Workspace(case)
        for claim in ("prop6.1", "prop6.2", "prop6.3"):
            r = harness.verify(claim, case, workspace=ws)
            if claim == "prop6.3" and case.type != "A1":
                c(f"{claim} skipped [{case.label()}]", r.status == "skipped")
                continue
            c(f"{claim} [{case.label()}]", r.status == "pass", f"{r.expected} vs {r.computed}")
    c.done()


@pytest.mark.xfail(strict=True, reason="the stated bound exceeds the computed Loewy lengths")
@pytest.mark.parametrize("claim", ["prop6.2.literal", "prop6.3.literal"])
def test_lower_bounds_as_stated(claim):
    case = harness.CaseSpec("A1", (0,), 5, (0,))
    assert harness.verify(claim, case).status == "pass"


# -- 11 ---------------------------------------------------------------------------------------------


@pytest.mark.criterion(11, "optional tier")
def test_optional_tier():
    cases = [("e3.1", harness.CaseSpec("A3", (0, 1), 5, "interior")),
             ("thm1e.2", harness.CaseSpec("A2", (0,), 5, "xi0")),
             ("conj1", harness.CaseSpec("A2", (0, 1), 5, "interior"))]
    reports = [harness.verify(claim, case) for claim, case in cases]
    ran = [r for r in reports if r.status != "skipped"]
    assert all(r.status == "pass" for r in ran), [(r.claim, r.computed) for r in ran if r.status != "pass"]
    if not ran:
        pytest.skip("; ".join(f"{r.claim}: {r.detail}" for r in reports))


# -- 1 (runs last: sweeps every module built above) -----------------------------------------------


@pytest.mark.criterion(1, "construction invariants")
def test_construction_invariants():
    if not BUILT:
        pytest.skip("no modules were built (run with the other criteria)")
    c = Checks()
    seen = set()
    for m in BUILT:
        if id(m) in seen:
            continue
        seen.add(id(m))
        try:
            m.check_invariants()
        except AssertionError as exc:
            c(m.tag, False, str(exc))
    c.done()
