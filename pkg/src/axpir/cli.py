"""
Command-line front end.

    axpir group    SCENARIO
    axpir rates    SCENARIO [--float] [--json PATH]
    axpir region   SCENARIO [--theorems t1,t2] [--point A,B] [--csv PATH]
    axpir simulate SCENARIO [--theta K] [--seed S] [--sessions N] [--dump-transcript [PATH]]
    axpir verify   SCENARIO [--checks ...] [--mode exhaustive|sample] [--fix-coin C]

Exit codes: 0 success, 1 audit failure or infeasible input, 2 usage or
validation error.  Server indices are 1-based in files and output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from . import analysis as an
from . import audit
from .protocol import Scenario, ScenarioError, dump_transcripts, measure, random_session, scheme_for
from .topology import CollusionPattern, CommMatrix, Grouping, feasibility, solve_grouping, validate

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

_KEYS = {"n", "k", "q", "links", "collusion", "scheme", "grouping"}


class UsageError(Exception):
    pass


def _int_sets(value, name: str, n: int) -> list[list[int]]:
    if not isinstance(value, list) or not all(isinstance(s, list) for s in value):
        raise ScenarioError(name, "must be a list of integer lists")
    for s in value:
        for i in s:
            if not isinstance(i, int) or isinstance(i, bool):
                raise ScenarioError(name, f"entry {i!r} is not an integer")
            if not 1 <= i <= n:
                raise ScenarioError(name, f"server {i} is outside [1, {n}]")
    return value


def parse_scenario(doc: dict[str, Any], fixed_coin: int | None = None) -> Scenario:
    """Validate a scenario document and build the Scenario it describes."""
    if not isinstance(doc, dict):
        raise ScenarioError("<root>", "scenario must be a JSON object")
    extra = set(doc) - _KEYS
    if extra:
        raise ScenarioError(sorted(extra)[0], "unknown key")
    for key in ("n", "k", "links"):
        if key not in doc:
            raise ScenarioError(key, "missing")
    n, k, q = doc["n"], doc["k"], doc.get("q", 2)
    for key, v in (("n", n), ("k", k), ("q", q)):
        if not isinstance(v, int) or isinstance(v, bool):
            raise ScenarioError(key, "must be an integer")
    if n < 2:
        raise ScenarioError("n", "need at least 2 servers")
    links = _int_sets(doc["links"], "links", n)
    collusion = _int_sets(doc.get("collusion", []), "collusion", n)
    grouping_doc = doc.get("grouping", "solve")
    cm = CommMatrix.from_one_based(n, links)
    if grouping_doc == "solve":
        grouping = None
    else:
        groups = _int_sets(grouping_doc, "grouping", n)
        grouping = Grouping.of(n, [[i - 1 for i in gr] for gr in groups])
        if sum(grouping.sizes) != len(set().union(*grouping.groups) if grouping.groups else set()):
            raise ScenarioError("grouping", "groups overlap")
    return Scenario(
        n_servers=n,
        k_messages=k,
        q=q,
        comm=cm,
        collusion=CollusionPattern(tuple(frozenset(i - 1 for i in s) for s in collusion)),
        scheme=doc.get("scheme", "grouped"),
        grouping=grouping,
        fixed_coin=fixed_coin,
    )


def load_scenario(path: str, fixed_coin: int | None = None) -> Scenario:
    try:
        with open(path) as f:
            doc = json.load(f)
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise ScenarioError("<root>", f"invalid JSON: {e.msg} at line {e.lineno}") from None
    return parse_scenario(doc, fixed_coin)


def _read_doc(path: str) -> dict:
    with open(path) as f:
        return json.load(f)


def _write(path: str | None, text: str) -> None:
    if path is None:
        return
    if path == "-":
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    with open(path, "w", newline="") as f:
        f.write(text)


# --- commands ---------------------------------------------------------------


def cmd_group(args) -> int:
    doc = _read_doc(args.scenario)
    sc_doc = dict(doc)
    n = sc_doc.get("n")
    if not isinstance(n, int):
        raise ScenarioError("n", "must be an integer")
    cm = CommMatrix.from_one_based(n, _int_sets(sc_doc.get("links", []), "links", n))
    violations, warnings = validate(cm)
    if violations:
        raise ScenarioError("links", "; ".join(violations))
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    g, optima = solve_grouping(cm)
    if g == 0:
        print("g=0 (infeasible)")
        result = {"g": 0, "groupings": []}
        code = EXIT_FAIL
    else:
        print(f"g={g}: " + " | ".join(o.label() for o in optima))
        result = {"g": g, "groupings": [o.one_based() for o in optima]}
        code = EXIT_OK
    if args.json:
        _write(args.json, json.dumps(result, indent=2))
    return code


def rates_table(sc: Scenario, as_float: bool = False) -> list[tuple[str, str]]:
    f = lambda x: an.fmt(x, as_float)  # noqa: E731
    rows: list[tuple[str, str]] = [("grouping", sc.grouping.label())]
    t = sc.collusion.t_param
    rows.append(("achievable", f(an.achievable_rate(sc.grouping, t, sc.k_messages))))
    try:
        rows.append(("upper_bound", f(an.rate_upper_bound(sc.comm, sc.k_messages, t))))
    except ValueError as e:
        rows.append(("upper_bound", f"undefined ({e})"))
    try:
        collusion = [sorted(s) for s in sc.collusion.sets] or None
        res = an.theorem4_capacity(sc.comm, sc.grouping, sc.k_messages, collusion)
        rows.append(("capacity", f(res.capacity) if res.ok else
                     "conditions-not-met: " + "; ".join(res.failed)))
    except ValueError as e:
        rows.append(("capacity", f"conditions-not-met: {e}"))
    for x in sorted({len(l) for l in sc.comm.links}):
        rows.append((f"feasible(X={x})", "yes" if feasibility(sc.comm, x) else "no"))
    return rows


def cmd_rates(args) -> int:
    sc = load_scenario(args.scenario)
    rows = rates_table(sc, args.float)
    width = max(len(k) for k, _ in rows)
    for k, v in rows:
        print(f"{k.ljust(width)}  {v}")
    if args.json:
        _write(args.json, json.dumps(dict(rows), indent=2))
    return EXIT_OK


def region_csv(sets: dict[str, list[an.Inequality]], regions: dict[str, an.RateRegion],
               as_float: bool = False) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    f = lambda x: an.fmt(x, as_float)  # noqa: E731
    w.writerow(["kind", "a", "b", "c", "label"])
    for name, ineqs in sets.items():
        for q in ineqs:
            w.writerow(["inequality", f(q.a), f(q.b), f(q.c), f"{name}: {q.label or q.render()}"])
    w.writerow(["kind", "alpha", "beta"])
    for name, reg in regions.items():
        for p in reg.vertices:
            w.writerow([f"vertex:{name}", f(p[0]), f(p[1])])
        for d in reg.rays:
            w.writerow([f"ray:{name}", f(d[0]), f(d[1])])
    return out.getvalue()


def _parse_point(text: str) -> tuple[Fraction, Fraction]:
    try:
        a, b = text.split(",")
        return Fraction(a), Fraction(b)
    except ValueError:
        raise UsageError(f"--point expects A,B with rationals, got {text!r}") from None


def cmd_region(args) -> int:
    wanted = [t.strip() for t in args.theorems.split(",") if t.strip()]
    unknown = set(wanted) - {"t1", "t2"}
    if unknown or not wanted:
        raise UsageError(f"--theorems accepts t1 and t2, got {args.theorems!r}")
    sets: dict[str, list[an.Inequality]] = {}
    regions: dict[str, an.RateRegion] = {}
    notes: list[str] = []
    fmt = lambda x: an.fmt(x, args.float)  # noqa: E731
    if "t1" in wanted:
        reg = an.theorem1_region()
        sets["t1"] = an.theorem1_inequalities()
        regions["t1"] = reg
        notes += reg.notes
    if "t2" in wanted:
        sc = load_scenario(args.scenario)
        try:
            ineqs = an.theorem2_inequalities(sc.grouping.sizes, sc.k_messages)
        except ValueError as e:
            raise ScenarioError("grouping", str(e)) from None
        # identical rows arise for equal group sizes; keep one of each
        uniq: list[an.Inequality] = []
        for q in ineqs:
            if not any((q.a, q.b, q.c) == (u.a, u.b, u.c) for u in uniq):
                uniq.append(q)
        sets["t2"] = uniq
        regions["t2"] = an.region_vertices([*uniq, an.ALPHA_NONNEG, an.BETA_NONNEG])
    for name in sets:
        print(f"[{name}]")
        for q in sets[name]:
            print(f"  {q.render()}")
        reg = regions[name]
        verts = ", ".join(f"({fmt(p[0])}, {fmt(p[1])})" for p in reg.vertices)
        rays = ", ".join(f"({fmt(d[0])}, {fmt(d[1])})" for d in reg.rays)
        print(f"  vertices: {verts or 'none'}")
        print(f"  rays: {rays or 'none'}")
    for n in notes:
        print(f"note: {n}")
    report = None
    if len(sets) > 1 or args.point:
        point = _parse_point(args.point or "3/4,3/4")
        report = audit.audit_region_point(point, sets)
        print(f"point ({fmt(point[0])}, {fmt(point[1])}): {report.verdict}")
        if "finding" in report.statistic:
            print(f"finding: {report.statistic['finding']}")
    if args.csv:
        _write(args.csv, region_csv(sets, regions, args.float))
    if args.json and report is not None:
        _write(args.json, json.dumps(report.to_json(), indent=2))
    return EXIT_OK


def cmd_simulate(args) -> int:
    sc = load_scenario(args.scenario)
    if args.theta is not None and not 1 <= args.theta <= sc.k_messages:
        raise UsageError(f"--theta must lie in [1, {sc.k_messages}], got {args.theta}")
    if args.sessions < 1:
        raise UsageError("--sessions must be at least 1")
    rng = np.random.default_rng(args.seed)
    scheme = scheme_for(sc)
    transcripts = [random_session(sc, rng, args.theta, scheme) for _ in range(args.sessions)]
    m = measure(sc, transcripts)
    fmt = lambda x: an.fmt(x, args.float)  # noqa: E731
    wrong = sum(not t.correct for t in transcripts)
    print(f"alpha={fmt(m.alpha)} beta={fmt(m.beta)} R={fmt(m.rate)}")
    print(f"sessions={m.sessions} decode_failures={wrong} "
          f"beta_equals_1_over_NR={'yes' if m.identity_holds else 'no'}")
    if args.dump_transcript:
        _write(args.dump_transcript, dump_transcripts(transcripts))
    if args.json:
        _write(args.json, json.dumps(m.to_json(), indent=2))
    return EXIT_OK if wrong == 0 else EXIT_FAIL


_CHECKS = ("correctness", "privacy", "security", "independence")


def run_checks(sc: Scenario, checks: Sequence[str], mode: str, seed: int = 0) -> list[audit.AuditReport]:
    scheme = scheme_for(sc)
    exhaustive = mode == "exhaustive"
    reports = []
    if "correctness" in checks:
        reports.append(audit.audit_correctness(
            scheme, "exhaustive" if exhaustive else "sampled", seed=seed))
    if "privacy" in checks:
        for coalition in sc.collusion.coalitions(sc.n_servers):
            reports.append(audit.audit_privacy(
                scheme, coalition, "exhaustive" if exhaustive else "sampled", seed=seed))
    if "security" in checks:
        for link in sc.comm.links:
            reports.append(audit.audit_security(scheme.layout(), link, "both" if exhaustive else "rank"))
    if "independence" in checks:
        reports.append(audit.audit_query_message_independence(scheme, seed=seed))
    return reports


def cmd_verify(args) -> int:
    checks = [c.strip() for c in args.checks.split(",") if c.strip()]
    bad = set(checks) - set(_CHECKS)
    if bad or not checks:
        raise UsageError(f"--checks accepts {','.join(_CHECKS)}, got {args.checks!r}")
    sc = load_scenario(args.scenario, args.fix_coin)
    try:
        reports = run_checks(sc, checks, args.mode, args.seed)
    except audit.BudgetExceeded as e:
        raise UsageError(f"{e}; rerun with --mode sample") from None
    print(audit.reports_table(reports))
    for r in reports:
        if not r.ok and r.witness is not None:
            print(f"witness[{r.check}]: {json.dumps(r.witness, sort_keys=True)}")
    if args.json:
        _write(args.json, audit.reports_json(reports))
    return EXIT_OK if all(r.ok for r in reports) else EXIT_FAIL


# --- entry point --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="axpir",
        description="Grouping, rates, regions, simulation and audits for asymmetric X-secure PIR",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, json_flag=True):
        p.add_argument("scenario", help="scenario JSON file")
        p.add_argument("--float", action="store_true", help="print 6-decimal approximations")
        if json_flag:
            p.add_argument("--json", metavar="PATH", help="also write JSON output ('-' for stdout)")

    p = sub.add_parser("group", help="optimal server groupings")
    common(p)
    p.set_defaults(fn=cmd_group)

    p = sub.add_parser("rates", help="achievable rate, upper bound, capacity, feasibility")
    common(p)
    p.set_defaults(fn=cmd_rates)

    p = sub.add_parser("region", help="trade-off region inequalities and vertices")
    common(p)
    p.add_argument("--theorems", default="t1", help="comma list of t1,t2")
    p.add_argument("--point", help="check this (alpha,beta) point against every set, e.g. 3/4,3/4")
    p.add_argument("--csv", metavar="PATH", help="write region CSV")
    p.set_defaults(fn=cmd_region)

    p = sub.add_parser("simulate", help="run retrieval sessions and measure (alpha, beta, R)")
    common(p)
    p.add_argument("--theta", type=int, help="wanted message (1-based); random per session if omitted")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sessions", type=int, default=1)
    p.add_argument("--dump-transcript", nargs="?", const="-", metavar="PATH",
                   help="write transcripts as JSON (stdout if no PATH)")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("verify", help="audit correctness, privacy, security, independence")
    common(p)
    p.add_argument("--checks", default=",".join(_CHECKS))
    p.add_argument("--mode", choices=("exhaustive", "sample"), default="exhaustive")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fix-coin", type=int, choices=(1, 2),
                   help="degrade the reduced scheme to a fixed coin")
    p.set_defaults(fn=cmd_verify)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.fn(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ScenarioError as e:
        print(f"invalid scenario: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
