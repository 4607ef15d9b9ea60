"""Claim verification, conjecture scans, module cache and structure diagrams.

A claim is a named identity or inequality about Loewy lengths, filtrations or
isomorphisms.  ``verify`` builds every module it needs from scratch (or from
the cache), evaluates both sides and returns a JSON-ready report.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import re
import tempfile
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import ffla
from .homext import ext1
from .modules import (
    Context,
    GradedModule,
    baby_verma,
    costandard_module,
    iso_test,
    levi_pim,
    quasi_simple,
    standard_module,
    tau_dual,
    twisted_baby_verma,
)
from .homext import BudgetExceeded as ExtBudgetExceeded
from .pims import BudgetExceeded
from .series import chop, diagram, l_filtration_verify, loewy, socle_series

log = logging.getLogger(__name__)

CACHE_VERSION = 1
DEFAULT_MAX_DIM = 4096


def max_dim_for_mb(mb: float) -> int:
    """Largest module dimension whose dense action matrix fits in ``mb`` megabytes."""
    return int(math.isqrt(int(mb * 2**20) // 8))


# -- cases --------------------------------------------------------------------------------


_CONTEXTS: dict = {}


def context(cartan_type: str, levi: Sequence[int], p: int) -> Context:
    key = (cartan_type, tuple(levi), p)
    if key not in _CONTEXTS:
        _CONTEXTS[key] = Context(cartan_type, list(levi), p)
    return _CONTEXTS[key]


def named_weights(ctx: Context) -> dict[str, tuple]:
    """Conventional names for the weights of the worked examples.

    sl_3 with I = {alpha_1}: the block of xi0 = 0 (xi1, xi2) and the wall
    weight with xi0 + rho = (p-1, 1).  so_5 with I = {short root}: the block
    of xi1 = 0 with xi2..xi4 and the shifted weights xi0, xi_-1, ...
    """
    p = ctx.p
    label, levi = ctx.label, tuple(ctx.rd.levi)
    out: dict[str, tuple] = {}
    if label == "A2" and levi == (0,):
        out.update({"xi0": (0, 0), "xi1": (-3, 0), "xi2": (0, -3), "wall": (p - 2, 0)})
        # the other simple in the block of the wall weight, and its shift by p * alpha
        out["wall1"] = (-p - 1, p - 2)
        out["wall1+pa"] = (-1, 2 * p - 2)
        a = (p, p)  # p * (alpha_1 + alpha_2)
        out["xi1+pa"] = (-3 + a[0], a[1])
        out["xi2+pa"] = (a[0], -3 + a[1])
    elif label == "B2" and levi == (1,):
        r1, r2 = 1, 1  # xi1 + rho
        shifted = {"xi1": (r1, r2), "xi2": (-r1, 2 * r1 + r2), "xi3": (-(r1 + r2), 2 * r1 + r2),
                   "xi4": (-(r1 + r2), r2)}
        for k, (a, b) in shifted.items():
            out[k] = (a - 1, b - 1)
        alpha = (2 * p, -2 * p)
        for src, dst in (("xi4", "xi0"), ("xi3", "xi-1"), ("xi2", "xi-2"), ("xi1", "xi-3")):
            out[dst] = (out[src][0] + alpha[0], out[src][1] + alpha[1])
    elif label == "A1":
        for lam in range(p):
            out[f"l{lam}"] = (lam,)
    out["zero"] = tuple([0] * ctx.rd.rank)
    return out


def display_names(ctx: Context) -> dict:
    """Linkage key -> short name, for diagrams."""
    out = {}
    for name, wt in named_weights(ctx).items():
        out.setdefault(ctx.linkage(wt), name)
    return out


@dataclass
class CaseSpec:
    """One verification case.  ``weight`` is a tuple, a name, "interior" or "wall"."""

    type: str = "A2"
    levi: tuple = (0,)
    p: int = 5
    weight: object = "interior"
    seed: int = 0
    max_dim: int = DEFAULT_MAX_DIM

    def __post_init__(self):
        self.levi = tuple(int(i) for i in self.levi)
        if isinstance(self.weight, list):
            self.weight = tuple(int(x) for x in self.weight)

    @property
    def ctx(self) -> Context:
        return context(self.type, self.levi, self.p)

    def resolve(self) -> tuple:
        ctx = self.ctx
        w = self.weight
        if isinstance(w, tuple):
            return w
        names = named_weights(ctx)
        if w in names:
            return names[w]
        if w == "interior":
            return tuple([0] * ctx.rd.rank)
        if w == "wall":
            # lam + rho pairs to p with some coroot, so lam is not p-regular
            first = self.p - 1 if ctx.rd.rank == 1 else self.p - 2
            return tuple([first] + [0] * (ctx.rd.rank - 1))
        if isinstance(w, str) and re.fullmatch(r"-?\d+(,-?\d+)*", w):
            return tuple(int(x) for x in w.split(","))
        raise ValueError(f"unknown weight {w!r}")

    def label(self) -> str:
        return f"{self.type} I={list(self.levi)} p={self.p} weight={self.weight}"

    def to_json(self) -> dict:
        d = asdict(self)
        d["levi"] = list(self.levi)
        d["weight"] = list(self.weight) if isinstance(self.weight, tuple) else self.weight
        return d


@dataclass
class VerifyReport:
    case: dict
    claim: str
    expected: object
    computed: object
    status: str
    runtime_ms: int
    provenance: str = ""
    detail: str = ""

    def to_json(self) -> dict:
        return asdict(self)


# -- claim evaluation ------------------------------------------------------------------------


class Skip(Exception):
    pass


class Workspace:
    """Memoized constructions for one case."""

    def __init__(self, case: CaseSpec, cache: "ModuleCache | None" = None):
        self.case = case
        self.ctx = case.ctx
        self.lam = case.resolve()
        self.cache = cache
        self._memo: dict = {}

    def _get(self, name: str, build: Callable[[], GradedModule], dim: int) -> GradedModule:
        if dim > self.case.max_dim:
            raise Skip(f"{name} has dimension {dim} > budget {self.case.max_dim}")
        if name not in self._memo:
            key = None
            if self.cache is not None:
                key = self.cache.key(self.ctx, name, self.lam, self.case.seed)
                hit = self.cache.load(key, self.ctx)
                if hit is not None:
                    self._memo[name] = hit
                    return hit
            m = build()
            if self.cache is not None:
                self.cache.store(key, m, {"construction": name, "weight": list(self.lam)})
            self._memo[name] = m
        return self._memo[name]

    @property
    def rd(self):
        return self.ctx.rd

    def n_pos(self, levi_only: bool = False) -> int:
        return len(self.rd.levi_roots) if levi_only else self.rd.num_positive

    def z(self):
        return self._get("Z", lambda: baby_verma(self.ctx, self.lam), self.ctx.p ** self.n_pos())

    def zw(self):
        return self._get("Zw", lambda: twisted_baby_verma(self.ctx, self.rd.w_upper_I, self.ctx.twist(self.lam)),
                         self.ctx.p ** self.n_pos())

    def _qdim(self):
        return self.rd.levi_dot_orbit_size(self.lam, self.ctx.p) * self.ctx.p ** self.n_pos()

    def qi(self):
        return self._get("QI", lambda: standard_module(self.ctx, self.lam), self._qdim())

    def qw(self):
        return self._get("Qw", lambda: costandard_module(self.ctx, self.ctx.twist(self.lam)), self._qdim())

    def ql(self):
        d = self.rd.levi_dot_orbit_size(self.lam, self.ctx.p) * self.ctx.p ** self.n_pos(True)
        return self._get("QL", lambda: levi_pim(self.ctx, self.lam), d)

    def quasi(self):
        if "LL" not in self._memo:
            if self._qdim() > self.case.max_dim:
                raise Skip(f"standard module has dimension {self._qdim()} > budget {self.case.max_dim}")
            self._memo["LL"] = quasi_simple(self.ctx, self.lam, seed=self.case.seed)
        return self._memo["LL"]

    def ll(self, name: str) -> int:
        key = ("ll", name)
        if key not in self._memo:
            m = self.quasi().module if name == "LL" else getattr(self, name.lower())()
            self._memo[key] = loewy(m).ll
        return self._memo[key]

    def full_pim_ll(self) -> int:
        """Loewy length of the full projective cover, available when I = Pi."""
        if len(self.rd.levi) != self.rd.rank:
            raise Skip("the full projective cover is only built when I is all of Pi")
        return loewy(self.ql()).ll


def _lw(ws: Workspace) -> tuple[int, int]:
    return ws.rd.w_upper_I.length, ws.rd.w_I.length


def _claim_conjg1(ws):
    wu, _ = _lw(ws)
    return wu + 1, ws.ll("Z"), "eq", "conjecture"


def _claim_prop61(ws):
    wu, _ = _lw(ws)
    a, b = ws.ll("Z"), ws.ll("Zw")
    return f">= {wu + 1} and equal", [a, b], (a == b and a >= wu + 1), "theorem"


def _claim_thm1e1(ws):
    wu, wl = _lw(ws)
    return wu + wl + 1, [ws.ll("QI"), ws.ll("Qw")], "all-eq", "theorem"


def _claim_thm1e2(ws):
    wu, wl = _lw(ws)
    return 2 * wu + wl + 1, ws.full_pim_ll(), "eq", "theorem"


def _claim_thm36(ws):
    return ws.ll("QL"), ws.ll("LL"), "eq", "theorem"


def _claim_thm37(ws):
    return ws.ll("LL") + ws.ll("Z") - 1, ws.ll("QI"), "eq", "theorem"


def _claim_prop62(ws):
    wu, _ = _lw(ws)
    bound = wu + ws.ll("LL")
    return f">= {bound}", ws.ll("QI"), ws.ll("QI") >= bound, "bound as proved"


def _claim_prop62_literal(ws):
    wu, _ = _lw(ws)
    bound = wu + ws.ll("LL") + 1
    return f">= {bound}", ws.ll("QI"), ws.ll("QI") >= bound, "bound as stated"


def _claim_prop63(ws):
    wu, _ = _lw(ws)
    bound = 2 * wu + ws.ll("LL")
    got = ws.full_pim_ll()
    return f">= {bound}", got, got >= bound, "bound as proved"


def _claim_prop63_literal(ws):
    wu, _ = _lw(ws)
    bound = 2 * wu + ws.ll("LL") + 1
    got = ws.full_pim_ll()
    return f">= {bound}", got, got >= bound, "bound as stated"


def _claim_conj1(ws):
    if len(ws.rd.levi) != ws.rd.rank:
        raise Skip("conjecture concerns I = Pi")
    n = len(ws.rd.levi_roots) + 1
    return n, [ws.ll("QL"), ws.ll("LL")], "all-eq", "conjecture"


def _counts(m, seed):
    return {str(k): v for k, v in sorted(chop(m, seed).counts.items())}


def _claim_eq21f(ws):
    a, b = _counts(ws.z(), ws.case.seed), _counts(ws.zw(), ws.case.seed)
    return a, b, a == b, "theorem"


def _claim_eq23f(ws):
    ok = iso_test(tau_dual(ws.qi()), ws.qw(), ws.case.seed)
    ok2 = iso_test(tau_dual(ws.z()), ws.zw(), ws.case.seed)
    return True, ok and ok2, ok and ok2, "theorem"


def _claim_prop34(ws):
    m = ws.quasi().module
    ok = iso_test(tau_dual(m), m, ws.case.seed)
    return True, ok, ok, "theorem"


def _claim_thm43(ws):
    m = ws.quasi().module
    e = ext1(m, m)
    return 0, e.dim, "eq", "theorem"


def reciprocity(ctx: Context, lam: Sequence[int], seed: int = 0) -> list[tuple]:
    """Weights nu with multiplicity [Z(lam) : L(nu)].

    These are the expected quasi-simple factors of Q^I(lam), one per
    composition factor of the baby Verma module Z(lam).
    """
    c = chop(baby_verma(ctx, lam), seed)
    out = []
    for ident, mult in sorted(c.counts.items()):
        out += [tuple(ident)] * mult
    return out


def _claim_coj310(ws):
    expected = reciprocity(ws.ctx, ws.lam, ws.case.seed)
    rep = l_filtration_verify(ws.qi(), expected, seed=ws.case.seed)
    return sorted(map(list, expected)), ([list(x) for x in rep.order] if rep.ok else rep.message), rep.ok, \
        "theorem"


def _claim_ex362(ws):
    if ws.rd.is_p_regular(ws.lam, ws.ctx.p):
        raise Skip("claim concerns weights on a wall")
    m = ws.quasi().module
    s = ws.ctx.simple(ws.lam).module
    ok = iso_test(m, s, ws.case.seed)
    return "L(lam)", {"dim": m.dim, "case": ws.quasi().case, "iso_to_simple": ok}, ok, "theorem"


def _claim_e31(ws):
    if not (ws.ctx.label == "A3" and tuple(ws.rd.levi) == (0, 1)):
        raise Skip("claim concerns sl_4 with I = {alpha_1, alpha_2}")
    ser = socle_series(ws.z())
    uniserial = all(sum(layer.values()) == 1 for layer in ser.layers)
    return True, {"uniserial": uniserial, "ll": ser.length}, uniserial, "theorem"


CLAIMS: dict[str, tuple[Callable, str]] = {
    "conjg.1": (_claim_conjg1, "mandatory"),
    "prop6.1": (_claim_prop61, "mandatory"),
    "thm1e.1": (_claim_thm1e1, "mandatory"),
    "thm1e.2": (_claim_thm1e2, "optional"),
    "thm3.6": (_claim_thm36, "mandatory"),
    "thm3.7": (_claim_thm37, "mandatory"),
    "prop6.2": (_claim_prop62, "mandatory"),
    "prop6.2.literal": (_claim_prop62_literal, "optional"),
    "prop6.3": (_claim_prop63, "mandatory"),
    "prop6.3.literal": (_claim_prop63_literal, "optional"),
    "conj1": (_claim_conj1, "mandatory"),
    "eq2.1f": (_claim_eq21f, "mandatory"),
    "eq2.3f": (_claim_eq23f, "mandatory"),
    "prop3.4": (_claim_prop34, "mandatory"),
    "thm4.3": (_claim_thm43, "mandatory"),
    "coj3.10": (_claim_coj310, "mandatory"),
    "wall.quasi": (_claim_ex362, "mandatory"),
    "e3.1": (_claim_e31, "optional"),
}

CONJECTURES = {"conj1": ["conj1"], "conjg": ["conjg.1", "thm1e.1", "thm1e.2"], "coj3.11": ["coj3.10"]}


def _compare(expected, computed, how) -> bool:
    if isinstance(how, bool):
        return how
    if how == "eq":
        return expected == computed
    if how == "all-eq":
        return all(c == expected for c in computed)
    raise ValueError(how)


def verify(claim: str, case: CaseSpec, cache: "ModuleCache | None" = None,
           workspace: Workspace | None = None) -> VerifyReport:
    """Evaluate one claim on one case; budget overruns give status "skipped"."""
    if claim not in CLAIMS:
        raise KeyError(f"unknown claim {claim!r}; known: {', '.join(sorted(CLAIMS))}")
    fn, _tier = CLAIMS[claim]
    t0 = time.perf_counter()
    ws = workspace or Workspace(case, cache)
    try:
        expected, computed, how, prov = fn(ws)
        status = "pass" if _compare(expected, computed, how) else "fail"
        detail = ""
    except (Skip, BudgetExceeded, ExtBudgetExceeded) as exc:
        expected, computed, status, prov, detail = None, None, "skipped", "", str(exc)
    ms = int((time.perf_counter() - t0) * 1000)
    return VerifyReport(case.to_json(), claim, _jsonable(expected), _jsonable(computed), status, ms, prov, detail)


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, tuple):
        return [_jsonable(v) for v in x]
    if isinstance(x, list):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    return x


def _verify_many(args):
    claims, case_json, cache_dir = args
    case = CaseSpec(**case_json)
    cache = ModuleCache(cache_dir) if cache_dir else None
    ws = Workspace(case, cache)
    return [verify(c, case, cache, ws).to_json() for c in claims]


def scan(conjecture: str, grid: Sequence[CaseSpec], cache_dir: str | None = None, jobs: int = 1) -> dict:
    """Run every claim behind a conjecture over a grid of cases."""
    claims = CONJECTURES.get(conjecture, [conjecture])
    for c in claims:
        if c not in CLAIMS:
            raise KeyError(f"unknown conjecture or claim {conjecture!r}")
    work = [(claims, case.to_json(), cache_dir) for case in grid]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_verify_many, work))
    else:
        results = [_verify_many(w) for w in work]
    reports = [r for rs in results for r in rs]
    summary = Counter(r["status"] for r in reports)
    return {"conjecture": conjecture, "reports": reports, "summary": dict(summary)}


def load_grid(path: str | os.PathLike) -> list[CaseSpec]:
    """Cases from a JSON file: {"defaults": {...}, "cases": [{...}, ...]}."""
    data = json.loads(Path(path).read_text())
    defaults = data.get("defaults", {})
    return [CaseSpec(**{**defaults, **c}) for c in data["cases"]]


def exit_code(reports: Sequence[dict], tier: str = "mandatory") -> int:
    """1 if any mandatory-tier claim failed (all claims for tier "all"), else 0."""
    for r in reports:
        t = CLAIMS[r["claim"]][1]
        if r["status"] == "fail" and (tier == "all" or t == "mandatory"):
            return 1
    return 0


# -- module specs and diagrams ---------------------------------------------------------------


_SPEC = re.compile(r"^\s*(Z|Zw|QI|Qw|QL|L|LL)\s*\(\s*([^)]*)\)\s*$")


def build_module(spec: str, case: CaseSpec) -> GradedModule:
    """Module from a spec such as "Z(xi0)", "QI(0,0)" or "LL(wall)".

    For Zw and Qw the weight is lam and the module built is the twisted one
    at lam^{w^I}.
    """
    m = _SPEC.match(spec)
    if not m:
        raise ValueError(f"cannot parse module spec {spec!r}")
    kind, arg = m.groups()
    sub = CaseSpec(case.type, case.levi, case.p, arg.strip() or case.weight, case.seed, case.max_dim)
    ws = Workspace(sub)
    if kind == "L":
        return ws.ctx.simple(ws.lam).module
    if kind == "LL":
        return ws.quasi().module
    return {"Z": ws.z, "Zw": ws.zw, "QI": ws.qi, "Qw": ws.qw, "QL": ws.ql}[kind]()


def module_diagram(m: GradedModule, fmt: str = "ascii", kind: str = "socle") -> str | dict:
    lw = loewy(m)
    series = lw.socle if kind == "socle" else lw.radical
    names = display_names(m.ctx)
    edges = None
    if fmt == "dot":
        from .series import edge_witnesses
        edges = edge_witnesses(m, series)
    return diagram(series, fmt, names, edges)


# -- cache ----------------------------------------------------------------------------------


class ModuleCache:
    """Content-addressed module store: packed matrices plus a JSON sidecar."""

    def __init__(self, root: str | os.PathLike):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def key(ctx: Context, construction: str, lam: Sequence[int], seed: int = 0) -> str:
        blob = json.dumps({"type": ctx.label, "p": ctx.p, "I": list(ctx.rd.levi), "construction": construction,
                           "lambda": [int(x) for x in lam], "seed": seed, "version": CACHE_VERSION},
                          sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:32]

    def _paths(self, key: str) -> tuple[Path, Path]:
        return self.root / f"{key}.llwy", self.root / f"{key}.json"

    def store(self, key: str, m: GradedModule, provenance: dict | None = None) -> None:
        bin_path, meta_path = self._paths(key)
        parts = []
        for x in m.gens:
            b = ffla.FMatrix.from_array(m.dense(x), m.p).to_bytes()
            parts.append(len(b).to_bytes(8, "little") + b)
        meta = {"version": CACHE_VERSION, "type": m.ctx.label, "p": m.p, "I": list(m.ctx.rd.levi),
                "dim": m.dim, "gens": list(m.gens), "tag": m.tag,
                "weights": None if not m.labeled else m.weights.tolist(), "provenance": provenance or {}}
        # exclusive per key: write to a temporary file, then rename
        for path, data, mode in ((bin_path, b"".join(parts), "wb"), (meta_path, json.dumps(meta), "w")):
            fd, tmp = tempfile.mkstemp(dir=self.root)
            with os.fdopen(fd, mode) as fh:
                fh.write(data)
            os.replace(tmp, path)

    def load(self, key: str, ctx: Context) -> GradedModule | None:
        bin_path, meta_path = self._paths(key)
        if not (bin_path.exists() and meta_path.exists()):
            return None
        meta = json.loads(meta_path.read_text())
        if meta.get("version") != CACHE_VERSION:
            raise ffla.CacheFormatError(f"cache version {meta.get('version')} != {CACHE_VERSION}")
        data = bin_path.read_bytes()
        ops = {}
        pos = 0
        for x in meta["gens"]:
            n = int.from_bytes(data[pos:pos + 8], "little")
            fm = ffla.FMatrix.from_bytes(data[pos + 8:pos + 8 + n])
            ops[x] = fm.to_array()
            pos += 8 + n
        if pos != len(data):
            raise ffla.CacheFormatError("trailing bytes in cache file")
        w = None if meta["weights"] is None else np.array(meta["weights"], dtype=np.int64)
        return GradedModule(ctx, ops, meta["dim"], w, meta["gens"], meta["tag"])
