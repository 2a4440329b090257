"""``novlab`` command-line runner.

Subcommands::

    novlab ring EXPR
    novlab complex {check,apply,audit}
    novlab sim {invariants,passages,incidence,doubling}

Exit status is 0 on success, 1 when a check or audit fails and 2 on bad input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import __version__
from .bifurcation import apply_self_slide, loop_consistency, self_slide_factor, CrossingEvent
from .errors import NovlabError
from .expr import evaluate
from .holonomy import MARGINAL_BAND, ZERO_THRESHOLD, classify, compute_invariants
from .morse_model import COSPHERE_EPS
from .novikov import render
from .passages import GAP_TOL, count_incidence, far_point, passage_discs, sweep_doubling
from .scenario import FORMATS, Scenario, load_scenario, scenario_from_json

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INPUT = 2


@dataclass
class Report:
    """Output of one command in a format-neutral shape."""

    header: dict
    data: dict
    columns: list[str] = field(default_factory=list)
    rows: list[list] = field(default_factory=list)
    lines: list[str] = field(default_factory=list)
    ok: bool = True


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def format_report(report: Report, fmt: str) -> str:
    if fmt == "json":
        return json.dumps({"header": report.header, "result": report.data}, indent=2, sort_keys=True) + "\n"
    head = [f"# {k}: {_cell(report.header[k])}" for k in sorted(report.header)]
    if fmt == "csv":
        buf = io.StringIO()
        buf.write("\n".join(head) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(report.columns)
        for r in report.rows:
            w.writerow([_cell(v) for v in r])
        return buf.getvalue()
    return "\n".join(head + report.lines) + "\n"


def _header(args, scenario: Scenario, L: float, **extra) -> dict:
    h = {
        "command": " ".join(args.command_path),
        "version": __version__,
        "L": L,
        "seed": args.seed,
        "tol": args.tol if args.tol is not None else GAP_TOL,
        "zero_threshold": ZERO_THRESHOLD,
        "marginal_band": MARGINAL_BAND,
        "cosphere_eps": COSPHERE_EPS,
    }
    h.update(extra)
    return h


def _terms_rows(element) -> list[list]:
    g = element.context.graph
    return [[str(a), c, g.valuation(a.word)] for a, c in element.sorted_terms()]


# ring


def run_ring(args, scenario: Scenario) -> Report:
    L = args.L if args.L is not None else scenario.L
    ctx = scenario.context(L)
    value = evaluate(args.expr, ctx)
    text = render(value)
    return Report(
        _header(args, scenario, L),
        {"expr": args.expr, "value": text, "element": value.to_json()},
        ["arrow", "coeff", "valuation"],
        _terms_rows(value),
        [text],
    )


# complex


def _complex_lines(c) -> list[str]:
    inc = c.incidences()
    if not inc:
        return ["(no incidences)"]
    return [f"<{p},{q}> = {render(v)}" for (p, q), v in sorted(inc.items())]


def _complex_rows(c) -> list[list]:
    return [[p, q, render(v)] for (p, q), v in sorted(c.incidences().items())]


def run_complex(args, scenario: Scenario) -> Report:
    L = args.L if args.L is not None else scenario.L
    head = _header(args, scenario, L)
    if args.action == "check":
        c = scenario.complex(L)
        rep = c.check_d_squared()
        data = {"d_squared_zero": rep.ok, "pair": list(rep.pair) if rep.pair else None,
                "residue": render(rep.residue) if rep.residue is not None else None}
        line = "d^2 = 0: pass" if rep.ok else f"d^2 = 0: FAIL at {rep.pair}: {render(rep.residue)}"
        rows = [[rep.ok, "" if rep.pair is None else f"{rep.pair[0]}->{rep.pair[1]}", data["residue"] or ""]]
        return Report(head, data, ["pass", "pair", "residue"], rows, [line], rep.ok)
    if args.action == "apply":
        c = scenario.complex(L)
        script = scenario.script()
        for e in script.events:
            c = apply_self_slide(c, e)
        rep = c.check_d_squared()
        data = {"complex": c.to_json(), "d_squared_zero": rep.ok}
        lines = _complex_lines(c) + [f"d^2 = 0: {'pass' if rep.ok else 'FAIL'}"]
        return Report(head, data, ["p", "q", "incidence"], _complex_rows(c), lines, rep.ok)
    script = scenario.script()
    base = script.events[0].base if script.events else None
    audit = loop_consistency(script, scenario.context(L), base=base)
    res = render(audit.residual)
    data = {"pass": audit.ok, "residual": res, "events": script.to_json()["events"]}
    line = f"loop audit: {'pass' if audit.ok else 'FAIL'}; product = {res}"
    return Report(head, data, ["pass", "residual"], [[audit.ok, res]], [line], audit.ok)


# sim


def _sim_config(scenario: Scenario):
    if scenario.simulator is None:
        raise NovlabError("scenario has no simulator config")
    return scenario.simulator


def _sim_invariants(args, scenario, head) -> Report:
    cfg = _sim_config(scenario)
    inv = compute_invariants(cfg.family())
    data = inv.to_json()
    keys = ["label", "omega_phi", "omega_psi", "eta", "chi", "marginal"]
    rows = [[k, data[k]] for k in keys]
    lines = [f"{k}: {_cell(data[k])}" for k in keys]
    return Report(head, data, ["quantity", "value"], rows, lines)


def _sim_passages(args, scenario, head) -> Report:
    cfg = _sim_config(scenario)
    f = cfg.family()
    k_max = max(cfg.k_max, 1)
    rows, out = [], []
    for s in cfg.s_values:
        clouds = passage_discs(f, s, k_max)
        by_k = {c.k: c for c in clouds}
        for k in range(1, k_max + 1):
            c = by_k.get(k)
            n = 0 if c is None else len(c)
            orient = 0 if c is None or c.empty else c.orientation
            pieces = 0 if c is None else len(c.pieces)
            rows.append([s, k, n > 0, orient, pieces, n])
            out.append({"s": s, "k": k, "nonempty": n > 0, "orientation": orient, "pieces": pieces, "points": n})
    lines = [f"s={_cell(r[0])} C_{r[1]}: {'nonempty' if r[2] else 'empty'} orientation={r[3]:+d}" for r in rows]
    return Report(head, {"passages": out}, ["s", "k", "nonempty", "orientation", "pieces", "points"], rows, lines)


def _sim_incidence(args, scenario, head) -> Report:
    cfg = _sim_config(scenario)
    f = cfg.family()
    L = head["L"]
    ctx = scenario.context(L)
    g = scenario.graph.parse_arrow(cfg.loop)
    gamma = scenario.graph.parse_arrow(cfg.gamma)
    b = far_point(f, cfg.b_latitude)
    inv = compute_invariants(f)
    counts = {}
    rows, out = [], []
    for s in cfg.s_values:
        c = count_incidence(f, s, b, g, gamma, ctx)
        counts[s] = c.element
        rows.append([s, c.hemisphere, render(c.element), len(c.crossings)])
        out.append({"s": s, "hemisphere": c.hemisphere, "count": render(c.element), "crossings": len(c.crossings)})
    neg = [s for s in cfg.s_values if s < 0]
    pos = [s for s in cfg.s_values if s > 0]
    ok = True
    check = None
    if neg and pos:
        character = "plus" if inv.chi > 0 else "minus"
        lam = self_slide_factor(CrossingEvent(g, character, "positive"), ctx)
        lo, hi = counts[max(neg)], counts[min(pos)]
        ok = lam * lo == hi
        check = {"factor": render(lam), "count_minus": render(lo), "count_plus": render(hi), "agrees": ok}
    data = {"label": inv.label, "chi": inv.chi, "incidence": out, "factor_check": check}
    lines = [f"label: {inv.label}"]
    lines += [f"s={_cell(r[0])} count = {r[2]}" for r in rows]
    if check is not None:
        lines.append(f"factor {check['factor']}: {'agrees' if ok else 'DISAGREES'}")
    return Report(head, data, ["s", "hemisphere", "count", "crossings"], rows, lines, ok)


def _sim_doubling(args, scenario, head) -> Report:
    cfg = _sim_config(scenario)
    ns, nt = (args.grid, args.grid) if args.grid is not None else cfg.grid
    s_values = np.linspace(cfg.s_range[0], cfg.s_range[1], ns)
    t_values = np.linspace(cfg.t_range[0], cfg.t_range[1], nt)
    tol = head["tol"]
    base = cfg.family()
    res = sweep_doubling(base, s_values, t_values, k_max=cfg.k_max, tol=tol)
    inv = compute_invariants(base)
    rows = []
    for a in range(nt - 1):
        tc = 0.5 * (t_values[a] + t_values[a + 1])
        wp = inv.omega_phi + tc
        label = classify(wp, inv.omega_psi, inv.eta * inv.omega_psi + wp)
        for b in range(ns - 1):
            sc = 0.5 * (s_values[b] + s_values[b + 1])
            rows.append([float(sc), float(tc), label, ";".join(res.class_labels(a, b))])
    summary = {
        "base_label": res.base_label,
        "half_line": res.half_line(1) if cfg.k_max >= 1 else None,
        "t_slope_sign": res.t_slope_sign,
        "cells": {f"g^{k + 1}" if k else "g": len(res.locus(k)) for k in range(cfg.k_max + 1)},
    }
    lines = [f"base: {res.base_label}", f"g^2 locus: {summary['half_line']}", f"t slope sign: {res.t_slope_sign:+d}"]
    lines += [f"{k} cells: {n}" for k, n in summary["cells"].items()]
    data = {"summary": summary, "grid": [dict(zip(("s", "t", "label", "classes"), r)) for r in rows]}
    return Report(head, data, ["s", "t", "label", "classes"], rows, lines)


_SIM = {
    "invariants": _sim_invariants,
    "passages": _sim_passages,
    "incidence": _sim_incidence,
    "doubling": _sim_doubling,
}


def run_sim(args, scenario: Scenario) -> Report:
    L = args.L if args.L is not None else scenario.L
    return _SIM[args.action](args, scenario, _header(args, scenario, L))


# entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", metavar="FILE", help="scenario JSON file")
    common.add_argument("--L", type=float, help="truncation length (overrides the scenario)")
    common.add_argument("--tol", type=float, help=f"gap tolerance for detection (default {GAP_TOL})")
    common.add_argument("--seed", type=int, default=0, help="recorded in the report header")
    common.add_argument("--out", choices=FORMATS, help="output format (default: scenario format)")
    common.add_argument("--grid", type=int, help="sweep grid size N (N x N)")

    p = argparse.ArgumentParser(prog="novlab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"novlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("ring", parents=[common], help="evaluate a ring expression")
    r.add_argument("expr")
    c = sub.add_parser("complex", parents=[common], help="check, rewrite or audit a complex")
    c.add_argument("action", choices=("check", "apply", "audit"))
    s = sub.add_parser("sim", parents=[common], help="run the local-model simulator")
    s.add_argument("action", choices=tuple(_SIM))
    return p


_RUNNERS = {"ring": run_ring, "complex": run_complex, "sim": run_sim}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    args.command_path = [args.command] + ([args.action] if hasattr(args, "action") else [])
    try:
        if args.L is not None and not args.L > 0:
            raise NovlabError("--L must be positive")
        if args.tol is not None and not args.tol >= 0:
            raise NovlabError("--tol must be non-negative")
        if args.grid is not None and args.grid < 2:
            raise NovlabError("--grid must be at least 2")
        scenario = load_scenario(args.scenario) if args.scenario else scenario_from_json({})
        report = _RUNNERS[args.command](args, scenario)
    except (NovlabError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    fmt = args.out or scenario.format
    sys.stdout.write(format_report(report, fmt))
    return EXIT_OK if report.ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
