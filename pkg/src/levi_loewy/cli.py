"""Command line entry point: ``levi-loewy verify|scan|chop|loewy|quasi|diagram``."""

from __future__ import annotations

import json
import logging
import re
import sys
from pathlib import Path

import click

from . import harness
from .series import chop as _chop
from .series import loewy as _loewy


def parse_levi(text: str, rank: int | None = None) -> tuple:
    """"a1", "a1,a2", "0,1", "none" or "all" -> tuple of 0-based simple root indices."""
    text = text.strip().lower()
    if text in ("", "none", "empty"):
        return ()
    if text in ("all", "pi"):
        if rank is None:
            raise click.BadParameter("'all' needs a known rank")
        return tuple(range(rank))
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if tok.startswith("a") and tok[1:].isdigit():
            out.append(int(tok[1:]) - 1)
        elif tok.isdigit():
            out.append(int(tok))
        else:
            raise click.BadParameter(f"cannot read simple root {tok!r}")
    return tuple(sorted(set(out)))


def _rank(cartan_type: str) -> int:
    from .weyl import parse_cartan_type
    return parse_cartan_type(cartan_type)[1]


def _load_config(path):
    if not path:
        return {}
    return json.loads(Path(path).read_text())


def _case(ctx_obj, weight=None) -> harness.CaseSpec:
    o = ctx_obj
    w = weight if weight is not None else o["weight"]
    if isinstance(w, str) and re.fullmatch(r"-?\d+(,-?\d+)*", w):
        w = tuple(int(x) for x in w.split(","))
    return harness.CaseSpec(o["type"], parse_levi(o["levi"], _rank(o["type"])), o["p"], w, o["seed"], o["max_dim"])


def _emit(obj, fmt: str):
    if isinstance(obj, str):
        click.echo(obj)
    else:
        click.echo(json.dumps(obj, indent=None if fmt == "jsonl" else 2, sort_keys=True))


@click.group()
@click.option("--config", type=click.Path(exists=True, dir_okay=False), help="JSON file with default options.")
@click.option("--type", "cartan_type", default=None, help="Cartan type, e.g. A2 or B2.")
@click.option("--p", type=int, default=None)
@click.option("--levi", default=None, help='Simple roots of I, e.g. "a1" or "a1,a2".')
@click.option("--weight", default=None, help='Weight "r1,r2", a name such as xi0, "interior" or "wall".')
@click.option("--seed", type=int, default=None)
@click.option("--cache-dir", type=click.Path(file_okay=False), default=None)
@click.option("--budget-mb", type=float, default=None, help="Memory budget per module (dense action matrix).")
@click.option("--tier", type=click.Choice(["mandatory", "all"]), default=None)
@click.option("-v", "--verbose", is_flag=True)
@click.pass_context
def main(ctx, config, cartan_type, p, levi, weight, seed, cache_dir, budget_mb, tier, verbose):
    """Loewy lengths and structure of modules for reduced enveloping algebras."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")
    cfg = _load_config(config)
    flags = {"type": cartan_type, "p": p, "levi": levi, "weight": weight, "seed": seed,
             "cache_dir": cache_dir, "budget_mb": budget_mb, "tier": tier}
    o = {"type": "A2", "p": 5, "levi": "a1", "weight": "interior", "seed": 0, "cache_dir": None,
         "budget_mb": None, "tier": "mandatory"}
    o.update({k: v for k, v in cfg.items() if k in o})
    if isinstance(o["levi"], list):
        o["levi"] = ",".join(str(i) for i in o["levi"])
    if isinstance(o["weight"], list):
        o["weight"] = ",".join(str(i) for i in o["weight"])
    o.update({k: v for k, v in flags.items() if v is not None})
    o["max_dim"] = harness.max_dim_for_mb(o["budget_mb"]) if o["budget_mb"] else harness.DEFAULT_MAX_DIM
    ctx.obj = o


@main.command()
@click.argument("claim")
@click.option("--format", "fmt", type=click.Choice(["json", "jsonl"]), default="json")
@click.pass_obj
def verify(o, claim, fmt):
    """Check one claim on one case and print the JSON report."""
    cache = harness.ModuleCache(o["cache_dir"]) if o["cache_dir"] else None
    rep = harness.verify(claim, _case(o), cache).to_json()
    _emit(rep, fmt)
    sys.exit(harness.exit_code([rep], o["tier"]))


@main.command()
@click.argument("conjecture")
@click.option("--grid", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--jobs", type=int, default=1, help="Worker processes.")
@click.option("--format", "fmt", type=click.Choice(["json", "table"]), default="table")
@click.pass_obj
def scan(o, conjecture, grid, jobs, fmt):
    """Run a conjecture over every case of a grid file."""
    cases = harness.load_grid(grid)
    for c in cases:
        c.max_dim = min(c.max_dim, o["max_dim"])
    out = harness.scan(conjecture, cases, o["cache_dir"], jobs)
    if fmt == "json":
        _emit(out, "json")
    else:
        click.echo(f"{'status':8} {'claim':16} {'case':40} expected / computed")
        for r in out["reports"]:
            c = r["case"]
            label = f"{c['type']} I={c['levi']} p={c['p']} w={c['weight']}"
            mark = r["status"].upper() if r["status"] != "pass" else "pass"
            click.echo(f"{mark:8} {r['claim']:16} {label:40} {r['expected']} / {r['computed']}"
                       + (f"  ({r['detail']})" if r["detail"] else ""))
        click.echo("summary: " + ", ".join(f"{k}={v}" for k, v in sorted(out["summary"].items())))
    sys.exit(harness.exit_code(out["reports"], o["tier"]))


def _module(o, spec):
    try:
        return harness.build_module(spec, _case(o))
    except ValueError as exc:
        raise click.BadParameter(str(exc)) from exc


@main.command()
@click.argument("spec")
@click.pass_obj
def chop(o, spec):
    """Composition factors of a module such as "Z(xi0)"."""
    m = _module(o, spec)
    res = _chop(m, o["seed"])
    names = harness.display_names(m.ctx)
    _emit({"module": m.tag, "dim": m.dim,
           "factors": [{"id": list(i), "name": names.get(i), "dim": res.factors[i].dim, "mult": c}
                       for i, c in sorted(res.counts.items())]}, "json")


@main.command()
@click.argument("spec")
@click.pass_obj
def loewy(o, spec):
    """Loewy length with radical and socle layers."""
    m = _module(o, spec)
    lw = _loewy(m)
    names = harness.display_names(m.ctx)
    _emit({"module": m.tag, "dim": m.dim, "ll": lw.ll,
           "radical": harness.diagram(lw.radical, "json", names)["layers"],
           "socle_bottom_up": list(reversed(harness.diagram(lw.socle, "json", names)["layers"]))}, "json")


@main.command()
@click.argument("weight", required=False)
@click.pass_obj
def quasi(o, weight):
    """The quasi-simple module of a weight: construction case, dimension and factors."""
    case = _case(o, weight)
    ws = harness.Workspace(case)
    q = ws.quasi()
    names = harness.display_names(ws.ctx)
    res = _chop(q.module, case.seed)
    _emit({"weight": list(q.weight), "case": q.case, "lam_r": list(q.lam_r), "dim": q.dim,
           "factors": {names.get(i, str(list(i))): c for i, c in sorted(res.counts.items())},
           "ll": _loewy(q.module).ll}, "json")


@main.command()
@click.argument("spec")
@click.option("--format", "fmt", type=click.Choice(["ascii", "dot", "json"]), default="ascii")
@click.option("--series", "kind", type=click.Choice(["socle", "radical"]), default="socle")
@click.pass_obj
def diagram(o, spec, fmt, kind):
    """Layered structure diagram of a module."""
    m = _module(o, spec)
    _emit(harness.module_diagram(m, fmt, kind), "json")


if __name__ == "__main__":
    main()
