"""
Brute-force and rank-based checks of correctness, privacy, independence
of queries from the data, and storage security.

Exhaustive checks report exact statistics and may say "pass".  Sampled
checks can only say "no violation found" (or "fail" with a witness).
Every failure carries a witness that reproduces it through
``protocol.execute``.
"""

from __future__ import annotations

import inspect
import json
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .analysis import Inequality, fmt, point_membership
from .galois import Field, column_space_contains, rank
from .protocol import Scenario, execute, respond, scheme_for, uniform_index
from .schemes.layout import StorageLayout

BUDGET = 10**8
SECURITY_BUDGET = 10**8
_CHUNK = 1 << 16

PASS = "pass"
FAIL = "fail"
NO_VIOLATION = "no violation found"
FINDING = "finding"


class BudgetExceeded(RuntimeError):
    pass


@dataclass
class AuditReport:
    check: str
    verdict: str
    mode: str
    statistic: dict[str, Any] = field(default_factory=dict)
    enumeration: int = 0
    witness: dict[str, Any] | None = None

    @property
    def ok(self) -> bool:
        return self.verdict in (PASS, NO_VIOLATION)

    def to_json(self) -> dict[str, Any]:
        out = {
            "check": self.check,
            "verdict": self.verdict,
            "statistic": self.statistic,
            "mode": self.mode,
            "enumeration": self.enumeration,
        }
        if self.witness is not None:
            out["witness"] = self.witness
        return out


def _scheme(target):
    return scheme_for(target) if isinstance(target, Scenario) else target


def _digits(start: int, stop: int, width: int, q: int) -> np.ndarray:
    """Rows ``start..stop-1`` of the lexicographic listing of F_q^width."""
    idx = np.arange(start, stop, dtype=np.int64)
    powers = q ** np.arange(width - 1, -1, -1, dtype=np.int64)
    return (idx[:, None] // powers[None, :]) % q


def _witness(scheme, theta, r, x) -> dict[str, Any]:
    kl = scheme.k * scheme.l
    x = np.asarray(x, dtype=np.int64)
    return {
        "theta": int(theta),
        "randomness": r if not isinstance(r, np.integer) else int(r),
        "messages": x[:kl].reshape(scheme.k, scheme.l).tolist(),
        "noise": x[kl:].tolist(),
    }


def replay(scheme, witness: Mapping[str, Any]) -> bool:
    """Re-run a correctness witness; True iff the retrieval is correct."""
    x = np.concatenate([np.ravel(witness["messages"]), np.asarray(witness["noise"], dtype=np.int64)])
    _, _, dec = execute(scheme, witness["theta"], x.astype(np.int64), witness["randomness"])
    msgs = np.asarray(witness["messages"])
    return bool(np.array_equal(dec, msgs[witness["theta"] - 1] % scheme.field.q))


# --- correctness ----------------------------------------------------------


def _decode_batch(scheme, theta, r, storage):
    return respond(scheme, theta, storage, r)[2]


def audit_correctness(target, mode: str = "exhaustive", samples: int = 100_000,
                      seed: int = 0, budget: int = BUDGET) -> AuditReport:
    """Check that decoding returns the wanted message.

    Exhaustive mode covers every theta, every randomness value and every
    message/noise assignment.  When the full product fits the budget each
    assignment is pushed through the pipeline.  Otherwise, because storage,
    answers and decoding are all linear, the product space is covered by
    superposition: the decoder is exact on every (w, z) iff it returns
    W_theta on every (w, 0) and zero on every (0, z).
    """
    scheme = _scheme(target)
    layout = scheme.layout()
    q = scheme.field.q
    kl, p = layout.n_message_symbols, layout.n_noise
    r_size = scheme.randomness_size()
    if mode == "sampled":
        return _correctness_sampled(scheme, samples, seed)
    if mode != "exhaustive":
        raise ValueError(f"unknown mode {mode!r}")
    direct = q ** (kl + p) * r_size * scheme.k
    if direct <= budget:
        return _correctness_direct(scheme, direct)
    cost = (q**kl + q**p) * r_size * scheme.k
    if cost > budget:
        raise BudgetExceeded(
            f"exhaustive correctness needs {cost} evaluations, budget is {budget}"
        )
    return _correctness_superposition(scheme, direct, cost)


def _plans(scheme):
    for theta in range(1, scheme.k + 1):
        for ri in range(scheme.randomness_size()):
            yield theta, scheme.randomness_at(ri)


def _correctness_direct(scheme, total: int) -> AuditReport:
    layout = scheme.layout()
    q, n, l = scheme.field.q, layout.n_symbols, scheme.l
    checked = 0
    # Lexicographic witness order: assignment chunk, then theta, then randomness.
    for start in range(0, q**n, _CHUNK):
        xs = _digits(start, min(start + _CHUNK, q**n), n, q)
        storage = scheme.store(xs)
        for theta, r in _plans(scheme):
            want = xs[:, (theta - 1) * l: theta * l]
            bad = np.nonzero((_decode_batch(scheme, theta, r, storage) != want).any(axis=1))[0]
            checked += len(xs)
            if bad.size:
                return AuditReport("correctness", FAIL, "exhaustive",
                                   {"method": "direct", "checked": checked, "failures": ">=1"},
                                   total, _witness(scheme, theta, r, xs[bad[0]]))
    return AuditReport("correctness", PASS, "exhaustive",
                       {"method": "direct", "checked": checked, "failures": 0}, total)


def _correctness_superposition(scheme, total: int, cost: int) -> AuditReport:
    layout = scheme.layout()
    q, kl, p, l = scheme.field.q, layout.n_message_symbols, layout.n_noise, scheme.l
    msgs = _digits(0, q**kl, kl, q)
    x_msg = np.hstack([msgs, np.zeros((len(msgs), p), dtype=np.int64)])
    x_pads = [
        np.hstack([np.zeros((stop - start, kl), dtype=np.int64), _digits(start, stop, p, q)])
        for start in range(0, q**p, _CHUNK)
        for stop in [min(start + _CHUNK, q**p)]
    ]
    s_msg = scheme.store(x_msg)
    s_pads = [scheme.store(x) for x in x_pads]
    stat = {"method": "superposition", "evaluations": cost}
    for theta, r in _plans(scheme):
        want = msgs[:, (theta - 1) * l: theta * l]
        bad = np.nonzero((_decode_batch(scheme, theta, r, s_msg) != want).any(axis=1))[0]
        if bad.size:
            return AuditReport("correctness", FAIL, "exhaustive", stat, total,
                               _witness(scheme, theta, r, x_msg[bad[0]]))
        for xs, st in zip(x_pads, s_pads):
            bad = np.nonzero(_decode_batch(scheme, theta, r, st).any(axis=1))[0]
            if bad.size:
                return AuditReport("correctness", FAIL, "exhaustive", stat, total,
                                   _witness(scheme, theta, r, xs[bad[0]]))
    return AuditReport("correctness", PASS, "exhaustive", {**stat, "failures": 0}, total)


def _correctness_sampled(scheme, samples: int, seed: int) -> AuditReport:
    rng = np.random.default_rng(seed)
    layout = scheme.layout()
    q, l = scheme.field.q, scheme.l
    size = scheme.randomness_size()
    thetas = rng.integers(1, scheme.k + 1, size=samples)
    rs = [uniform_index(rng, size) for _ in range(samples)]
    xs = rng.integers(0, q, size=(samples, layout.n_symbols))
    batches: dict[tuple[int, int], list[int]] = {}
    for i, (t, r) in enumerate(zip(thetas.tolist(), rs)):
        batches.setdefault((t, r), []).append(i)
    fails = 0
    witness = None
    for (theta, ri), idx in sorted(batches.items()):
        sel = np.array(idx)
        r = scheme.randomness_at(ri)
        dec = _decode_batch(scheme, theta, r, scheme.store(xs[sel]))
        bad = (dec != xs[sel, (theta - 1) * l: theta * l]).any(axis=1)
        if bad.any():
            fails += int(bad.sum())
            if witness is None:
                witness = _witness(scheme, theta, r, xs[sel[np.argmax(bad)]])
    verdict = FAIL if fails else NO_VIOLATION
    return AuditReport("correctness", verdict, "sampled",
                       {"samples": samples, "failures": fails, "seed": seed}, samples, witness)


# --- privacy --------------------------------------------------------------


def tv_distance(p: Counter, q: Counter) -> Fraction:
    """Exact total-variation distance between two count histograms."""
    np_, nq = sum(p.values()), sum(q.values())
    keys = set(p) | set(q)
    return sum((abs(Fraction(p[k], np_) - Fraction(q[k], nq)) for k in keys), Fraction(0)) / 2


def coalition_view(scheme, coalition: Iterable[int], theta: int, r) -> tuple:
    plan = scheme.plan(theta, r)
    return tuple(plan.descriptor(n) for n in sorted(coalition))


def audit_privacy(target, coalition: Iterable[int], mode: str = "exhaustive",
                  samples: int = 20_000, seed: int = 0, budget: int = BUDGET,
                  min_count: int = 10) -> AuditReport:
    """TV distance between the coalition's query views under different thetas.

    Exhaustive mode enumerates the whole randomness space, which is
    uniform, so the distance is exact.  Sampled mode draws ``samples``
    randomness values per theta and fails only on decisive evidence: a view
    seen at least ``min_count`` times under one theta and never under
    another.
    """
    scheme = _scheme(target)
    coalition = sorted(coalition)
    if not coalition or min(coalition) < 0 or max(coalition) >= scheme.n_servers:
        raise ValueError(f"coalition {coalition} is out of range")
    size = scheme.randomness_size()
    shown = [c + 1 for c in coalition]
    if mode == "exhaustive":
        if size * scheme.k > budget:
            raise BudgetExceeded(f"randomness space of {size} is too large; use sampled mode")
        hists = {t: Counter(coalition_view(scheme, coalition, t, scheme.randomness_at(i))
                            for i in range(size))
                 for t in range(1, scheme.k + 1)}
    elif mode == "sampled":
        rng = np.random.default_rng(seed)
        hists = {}
        for t in range(1, scheme.k + 1):
            draws = Counter(uniform_index(rng, size) for _ in range(samples))
            hist: Counter = Counter()
            for ri, c in sorted(draws.items()):
                hist[coalition_view(scheme, coalition, t, scheme.randomness_at(ri))] += c
            hists[t] = hist
    else:
        raise ValueError(f"unknown mode {mode!r}")

    worst, pair = Fraction(0), (1, 1)
    for a, b in combinations(sorted(hists), 2):
        d = tv_distance(hists[a], hists[b])
        if d > worst:
            worst, pair = d, (a, b)
    stat = {"coalition": shown, "tv": fmt(worst), "thetas": list(pair),
            "support": {str(t): len(h) for t, h in hists.items()}}
    enum = (size if mode == "exhaustive" else samples) * scheme.k

    if mode == "exhaustive":
        if worst == 0:
            return AuditReport("privacy", PASS, mode, stat, enum)
        a, b = pair
        view = next(v for v in sorted(set(hists[a]) | set(hists[b]), key=repr)
                    if hists[a][v] != hists[b][v])
        witness = {"coalition": shown, "view": _view_json(view),
                   "probability": {str(a): fmt(Fraction(hists[a][view], size)),
                                   str(b): fmt(Fraction(hists[b][view], size))}}
        return AuditReport("privacy", FAIL, mode, stat, enum, witness)

    for a, b in combinations(sorted(hists), 2):
        for x, y in ((a, b), (b, a)):
            for v, c in sorted(hists[x].items(), key=lambda kv: repr(kv[0])):
                if c >= min_count and hists[y][v] == 0:
                    witness = {"coalition": shown, "view": _view_json(v),
                               "counts": {str(x): c, str(y): 0}}
                    return AuditReport("privacy", FAIL, mode, stat, enum, witness)
    return AuditReport("privacy", NO_VIOLATION, mode, stat, enum)


def _view_json(view: tuple) -> list:
    return [[list(r) for r in d] for d in view]


# --- independence of queries from stored data -----------------------------


def audit_query_message_independence(target, trials: int = 64, seed: int = 0) -> AuditReport:
    """Plans must be functions of (theta, randomness) only.

    The structural half checks that ``plan`` takes nothing but those two
    arguments.  The perturbation half stores two different random data sets
    before building the same (theta, randomness) plan and requires the two
    plans to be identical.
    """
    scheme = _scheme(target)
    params = [p for p in inspect.signature(scheme.plan).parameters]
    if params != ["theta", "randomness"]:
        return AuditReport("independence", FAIL, "structural",
                           {"plan_parameters": params}, 0,
                           {"reason": "plan accepts arguments beyond (theta, randomness)"})
    rng = np.random.default_rng(seed)
    layout = scheme.layout()
    q = scheme.field.q
    for i in range(trials):
        theta = int(rng.integers(1, scheme.k + 1))
        r = scheme.randomness_at(uniform_index(rng, scheme.randomness_size()))
        plans = []
        xs = rng.integers(0, q, size=(2, layout.n_symbols))
        for x in xs:
            scheme.store(x)
            plans.append(scheme.plan(theta, r))
        a, b = plans
        same = all(np.array_equal(u, v) for u, v in zip(a.responses, b.responses)) and \
            np.array_equal(a.decoder, b.decoder)
        if not same:
            return AuditReport("independence", FAIL, "perturbation",
                               {"trials": i + 1}, i + 1,
                               {"theta": theta, "randomness": _plain(r),
                                "values": xs.tolist()})
    return AuditReport("independence", PASS, "perturbation",
                       {"trials": trials, "plan_parameters": params}, trials)


def _plain(r):
    return int(r) if isinstance(r, (int, np.integer)) else r


# --- storage security -----------------------------------------------------


def _security_rank(layout: StorageLayout, servers: list[int]) -> tuple[bool, dict[str, Any]]:
    a = layout.message_block(servers)
    b = layout.noise_block(servers)
    f = layout.field
    rb = rank(f, b)
    deficit = rank(f, np.hstack([a, b])) - rb
    return column_space_contains(f, a, b), {"rank_deficit": deficit, "noise_rank": rb}


def _row_keys(rows: np.ndarray) -> np.ndarray:
    rows = np.ascontiguousarray(rows.astype(np.uint16))
    return np.sort(rows.view(np.dtype((np.void, rows.dtype.itemsize * rows.shape[1]))).ravel())


def _security_exhaustive(layout: StorageLayout, servers: list[int],
                         budget: int) -> tuple[bool, dict[str, Any], dict | None]:
    q = layout.field.q
    a = layout.message_block(servers)
    b = layout.noise_block(servers)
    relevant = np.nonzero(b.any(axis=0))[0]
    b = b[:, relevant]
    kl, p = a.shape[1], b.shape[1]
    total = q ** (kl + p)
    if total > budget:
        raise BudgetExceeded(f"exhaustive security needs {total} states, budget is {budget}")
    if a.shape[0] == 0:
        return True, {"states": total}, None
    z = _digits(0, q**p, p, q)
    pad_part = (z @ b.T) % q
    reference = _row_keys(pad_part)
    for wi in range(q**kl):
        w = _digits(wi, wi + 1, kl, q)[0]
        keys = _row_keys((pad_part + a @ w) % q)
        if not np.array_equal(keys, reference):
            return False, {"states": total}, {"messages_a": [0] * kl, "messages_b": w.tolist()}
    return True, {"states": total}, None


def audit_security(layout: StorageLayout, link: Iterable[int], mode: str = "rank",
                   budget: int = SECURITY_BUDGET) -> AuditReport:
    """Does the joint storage of ``link`` reveal anything about the messages?

    rank: perfect secrecy iff every message column lies in the column space
    of the noise block.  exhaustive: the storage distribution given W is the
    same for every W, checked over all messages and all pads that appear in
    the link's cells.  both: run the two and require agreement.
    """
    servers = sorted(link)
    if not servers or min(servers) < 0 or max(servers) >= layout.n_servers:
        raise ValueError(f"link {servers} is out of range")
    shown = [s + 1 for s in servers]
    stat: dict[str, Any] = {"servers": shown}
    witness = None
    verdicts = {}
    if mode in ("rank", "both"):
        verdicts["rank"], extra = _security_rank(layout, servers)
        stat.update(extra)
    if mode in ("exhaustive", "both"):
        verdicts["exhaustive"], extra, witness = _security_exhaustive(layout, servers, budget)
        stat.update(extra)
    if not verdicts:
        raise ValueError(f"unknown mode {mode!r}")
    stat["secure"] = {k: v for k, v in verdicts.items()}
    if mode == "both":
        stat["agree"] = verdicts["rank"] == verdicts["exhaustive"]
        if not stat["agree"]:
            return AuditReport("security", FAIL, mode, stat, stat.get("states", 0),
                               {"reason": "rank and exhaustive verdicts disagree"})
    secure = all(verdicts.values())
    if not secure and witness is None:
        witness = {"reason": "message columns outside the noise column space"}
    return AuditReport("security", PASS if secure else FAIL, mode, stat,
                       stat.get("states", 0), None if secure else witness)


# --- region points ---------------------------------------------------------


def audit_region_point(point: tuple, inequality_sets: Mapping[str, Sequence[Inequality]]) -> AuditReport:
    """Check one (alpha, beta) point against several labelled converse sets.

    If the point satisfies some sets and violates others, the report is a
    consistency finding between the bounds themselves, not an error here.
    """
    alpha, beta = (Fraction(point[0]), Fraction(point[1]))
    per_set = {}
    for label, ineqs in inequality_sets.items():
        viol = point_membership((alpha, beta), ineqs)
        per_set[label] = {
            "inside": not viol,
            "violations": [{"inequality": q.render(), "slack": fmt(s)} for q, s in viol],
        }
    inside = [lab for lab, v in per_set.items() if v["inside"]]
    outside = [lab for lab, v in per_set.items() if not v["inside"]]
    stat = {"point": [fmt(alpha), fmt(beta)], "sets": per_set}
    if not outside:
        return AuditReport("region_point", PASS, "exact", stat, len(per_set))
    if inside:
        stat["finding"] = (
            f"({fmt(alpha)}, {fmt(beta)}) satisfies {', '.join(inside)} "
            f"but violates {', '.join(outside)}"
        )
        return AuditReport("region_point", FINDING, "exact", stat, len(per_set),
                           {"inside": inside, "outside": outside})
    return AuditReport("region_point", FAIL, "exact", stat, len(per_set),
                       {"outside": outside})


# --- rendering --------------------------------------------------------------


def reports_json(reports: Sequence[AuditReport]) -> str:
    return json.dumps([r.to_json() for r in reports], indent=2, sort_keys=True)


def reports_table(reports: Sequence[AuditReport]) -> str:
    rows = [("check", "verdict", "mode", "detail")]
    for r in reports:
        detail = ", ".join(f"{k}={v}" for k, v in r.statistic.items()
                           if k in ("coalition", "servers", "tv", "method", "failures", "rank_deficit",
                                    "trials", "samples", "agree"))
        rows.append((r.check, r.verdict, r.mode, detail))
    widths = [max(len(str(row[i])) for row in rows) for i in range(4)]
    return "\n".join("  ".join(str(c).ljust(w) for c, w in zip(row, widths)).rstrip() for row in rows)
