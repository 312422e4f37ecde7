"""
Closed-form rates, bounds and storage/download trade-off regions.

Everything here is exact: quantities are ``fractions.Fraction`` and no
floating point is introduced.  An inequality ``a*alpha + b*beta >= c``
describes one half-plane of the (alpha, beta) plane, where alpha is the
storage overhead per server and beta the download cost per server.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

from .topology import CommMatrix, Grouping, lambda_max, solve_grouping

Point = tuple[Fraction, Fraction]

ETA_ALIAS_NOTE = (
    "eta_K(X) is evaluated as zeta_{K,1}(X); it has no separate definition"
)


def _fr(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def c_tpir(t: int, g: int, k: int) -> Fraction:
    """Capacity of T-colluding PIR with g replicated servers and k messages."""
    if t < 1 or g < 1 or k < 1:
        raise ValueError("t, g and k must all be at least 1")
    ratio = Fraction(t, g)
    return 1 / sum(ratio**j for j in range(k))


def c_pir(n: int, k: int) -> Fraction:
    return c_tpir(1, n, k)


def zeta(k: int, t: int, n: int, link_size: int) -> Fraction:
    """Tail sum ``sum_{j=1}^{k-1} (t / (n - |X|))^j`` for one link."""
    if link_size >= n:
        raise ValueError(f"link of size {link_size} covers all {n} servers")
    if k < 1:
        raise ValueError("k must be at least 1")
    ratio = Fraction(t, n - link_size)
    return sum((ratio**j for j in range(1, k)), Fraction(0))


def achievable_rate(grouping: Grouping, t: int, k: int) -> Fraction:
    """Rate of the grouped scheme: (g / sum of group sizes) * C_TPIR(t, g, k)."""
    if grouping.g < 1:
        raise ValueError("achievable rate needs at least one group")
    return Fraction(grouping.g, sum(grouping.sizes)) * c_tpir(t, grouping.g, k)


def rate_upper_bound(cm: CommMatrix, k: int, t: int) -> Fraction:
    if cm.m < 1:
        raise ValueError("the upper bound needs at least one link")
    denom = cm.m + sum(zeta(k, t, cm.n_servers, len(l)) for l in cm.links)
    return Fraction(lambda_max(cm)) / denom


# --- half-plane regions ---------------------------------------------------


@dataclass(frozen=True)
class Inequality:
    """``a*alpha + b*beta >= c``."""

    a: Fraction
    b: Fraction
    c: Fraction
    label: str = ""

    def __post_init__(self):
        for name in ("a", "b", "c"):
            object.__setattr__(self, name, _fr(getattr(self, name)))
        if self.a == 0 and self.b == 0:
            raise ValueError("degenerate inequality: a and b are both zero")

    def slack(self, p: Point) -> Fraction:
        return self.a * p[0] + self.b * p[1] - self.c

    def holds(self, p: Point) -> bool:
        return self.slack(p) >= 0

    def render(self) -> str:
        terms = []
        for coef, var in ((self.a, "alpha"), (self.b, "beta")):
            if coef == 0:
                continue
            body = var if abs(coef) == 1 else f"{fmt(abs(coef))}*{var}"
            sign = "-" if coef < 0 else "+"
            terms.append((sign, body))
        first_sign, first = terms[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, body in terms[1:]:
            out += f" {sign} {body}"
        return f"{out} >= {fmt(self.c)}"


ALPHA_NONNEG = Inequality(1, 0, 0, "alpha >= 0")
BETA_NONNEG = Inequality(0, 1, 0, "beta >= 0")


@dataclass(frozen=True)
class RateRegion:
    inequalities: tuple[Inequality, ...]
    vertices: tuple[Point, ...]
    rays: tuple[Point, ...] = ()
    empty: bool = False
    notes: tuple[str, ...] = field(default=())


def fmt(x: Fraction, as_float: bool = False) -> str:
    """Render a rational as ``p/q`` (or ``p`` when integral), or as 6 decimals."""
    x = _fr(x)
    if as_float:
        return f"{float(x):.6f}"
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _intersect(u: Inequality, v: Inequality) -> Point | None:
    det = u.a * v.b - u.b * v.a
    if det == 0:
        return None
    alpha = (u.c * v.b - u.b * v.c) / det
    beta = (u.a * v.c - u.c * v.a) / det
    return alpha, beta


def _feasible(ineqs: Sequence[Inequality]) -> bool:
    # Fourier-Motzkin: eliminate beta, then check the alpha bounds.
    lower, upper, free = [], [], []
    for q in ineqs:
        if q.b > 0:
            lower.append(q)
        elif q.b < 0:
            upper.append(q)
        else:
            free.append((q.a, q.c))
    for lo in lower:
        for up in upper:
            # lo: beta >= (c1 - a1 alpha)/b1 ; up: beta <= (c2 - a2 alpha)/b2 (b2 < 0)
            a = lo.a / lo.b - up.a / up.b
            c = lo.c / lo.b - up.c / up.b
            # (c2 - a2 al)/b2 >= (c1 - a1 al)/b1  <=>  (a1/b1 - a2/b2) al >= c1/b1 - c2/b2
            free.append((a, c))
    lo_a, hi_a = None, None
    for a, c in free:
        if a == 0:
            if c > 0:
                return False
        elif a > 0:
            lo_a = c / a if lo_a is None else max(lo_a, c / a)
        else:
            hi_a = c / a if hi_a is None else min(hi_a, c / a)
    return lo_a is None or hi_a is None or lo_a <= hi_a


def _recession_rays(ineqs: Sequence[Inequality]) -> list[Point]:
    candidates = set()
    for q in ineqs:
        for d in ((-q.b, q.a), (q.b, -q.a)):
            scale = max(abs(d[0]), abs(d[1]))
            candidates.add((d[0] / scale, d[1] / scale))
    rays = [d for d in candidates if all(q.a * d[0] + q.b * d[1] >= 0 for q in ineqs)]
    return sorted(rays)


def region_vertices(ineqs: Sequence[Inequality]) -> RateRegion:
    """Vertices and recession rays of the polygon cut out by ``ineqs``.

    Vertices come from pairwise boundary intersections that satisfy every
    inequality; they are deduplicated and sorted by alpha then beta.  An
    infeasible system gives a region with ``empty=True``.
    """
    ineqs = tuple(ineqs)
    if not _feasible(ineqs):
        return RateRegion(ineqs, (), (), empty=True)
    pts = set()
    for u, v in combinations(ineqs, 2):
        p = _intersect(u, v)
        if p is not None and all(q.holds(p) for q in ineqs):
            pts.add(p)
    return RateRegion(ineqs, tuple(sorted(pts)), tuple(_recession_rays(ineqs)))


def minimize(objective: Inequality, ineqs: Sequence[Inequality]) -> Fraction | None:
    """Minimum of ``a*alpha + b*beta`` over the region; None if unbounded or empty.

    The region must have a vertex (no full line inside), which the
    nonnegativity constraints guarantee for every region built here.
    """
    reg = region_vertices(ineqs)
    if reg.empty:
        return None
    if any(objective.a * d[0] + objective.b * d[1] < 0 for d in reg.rays):
        return None
    if not reg.vertices:
        return None
    return min(objective.a * p[0] + objective.b * p[1] for p in reg.vertices)


def is_redundant(ineq: Inequality, others: Sequence[Inequality]) -> bool:
    """True iff ``others`` already imply ``ineq``."""
    low = minimize(ineq, others)
    return low is not None and low >= ineq.c


def minimal_support(ineq: Inequality, others: Sequence[Inequality]) -> list[Inequality]:
    """A subset of ``others`` that still implies ``ineq``, reduced greedily in order."""
    keep = list(others)
    for o in list(others):
        trial = [x for x in keep if x is not o]
        if is_redundant(ineq, trial):
            keep = trial
    return keep


def point_membership(p: Point, region: Iterable[Inequality]) -> list[tuple[Inequality, Fraction]]:
    """Violated inequalities with their (negative) slack; empty means inside."""
    p = (_fr(p[0]), _fr(p[1]))
    return [(q, q.slack(p)) for q in region if not q.holds(p)]


def theorem1_inequalities() -> list[Inequality]:
    """Converse for N=4, K=2 with two disjoint pair links."""
    return [
        Inequality(0, 1, Fraction(3, 4), "beta >= 3/4"),
        Inequality(1, 2, 2, "alpha + 2*beta >= 2"),
        Inequality(1, 6, 3, "alpha + 6*beta >= 3"),
    ]


def theorem1_region() -> RateRegion:
    base = theorem1_inequalities()
    reg = region_vertices([*base, ALPHA_NONNEG, BETA_NONNEG])
    notes = []
    for q in base:
        rest = [o for o in base if o is not q] + [ALPHA_NONNEG, BETA_NONNEG]
        if is_redundant(q, rest):
            support = minimal_support(q, rest)
            notes.append(f"{q.label} is redundant given {' and '.join(o.label for o in support)}")
    return RateRegion(reg.inequalities, reg.vertices, reg.rays, reg.empty, tuple(notes))


def theorem2_inequalities(sizes: Sequence[int], k: int) -> list[Inequality]:
    """One converse inequality per group for arbitrary group sizes."""
    g = len(sizes)
    if g < 2:
        raise ValueError("per-group converse bounds need at least 2 groups")
    if any(m < 2 for m in sizes):
        raise ValueError("every group needs at least 2 servers")
    out = []
    total = sum(sizes)
    for ell, m_ell in enumerate(sizes):
        others = total - m_ell
        out.append(Inequality(others, m_ell, k * (1 + others - (g - 1)),
                              f"T2[l={ell + 1}]"))
    return out


def corollary1_inequalities(n: int, sizes: Sequence[int], k: int) -> list[Inequality]:
    """The same bounds with the group sizes summing to N."""
    if sum(sizes) != n:
        raise ValueError(f"group sizes {list(sizes)} do not sum to N={n}")
    g = len(sizes)
    return [Inequality(n - m, m, k * (1 + (n - m) - (g - 1)), f"C1[l={ell + 1}]")
            for ell, m in enumerate(sizes)]


def corollary2_inequality(d: int, g: int, k: int) -> Inequality:
    """Uniform groups of d servers each."""
    return Inequality(d * (g - 1), d, k * (1 + (d - 1) * (g - 1)), "C2")


# --- capacity under the grouping-shaped collusion pattern -----------------


@dataclass(frozen=True)
class CapacityResult:
    capacity: Fraction | None
    failed: tuple[str, ...] = ()
    notes: tuple[str, ...] = (ETA_ALIAS_NOTE,)

    @property
    def ok(self) -> bool:
        return self.capacity is not None


def theorem4_capacity(cm: CommMatrix, grouping: Grouping, k: int,
                      collusion: Iterable[Iterable[int]] | None = None) -> CapacityResult:
    """Capacity when the hypotheses hold; otherwise the names of those that fail.

    ``collusion`` defaults to the groups themselves and must equal them when
    given.
    """
    g_opt, optima = solve_grouping(cm)
    if grouping not in optima:
        raise ValueError(f"grouping {grouping.label()} is not an optimum of the grouping search")
    if collusion is not None:
        given = sorted(sorted(s) for s in collusion)
        if given != sorted(sorted(gr) for gr in grouping.groups):
            raise ValueError("collusion pattern must consist of exactly the groups")
    failed = []
    if cm.m == 0:
        return CapacityResult(None, ("at least one link is required",))
    lam = lambda_max(cm)
    g = grouping.g
    if Fraction(lam, cm.m) != Fraction(g, sum(grouping.sizes)):
        failed.append(
            f"lambda/M = {fmt(Fraction(lam, cm.m))} != g/sum(M_i) = "
            f"{fmt(Fraction(g, sum(grouping.sizes)))}"
        )
    bad = [sorted(i + 1 for i in l) for l in cm.links if len(l) != cm.n_servers - g]
    if bad:
        failed.append(f"links {bad} do not have size N - g = {cm.n_servers - g}")
    if failed:
        return CapacityResult(None, tuple(failed))
    return CapacityResult(Fraction(lam, cm.m) * c_pir(g, k))


# --- normalisation -------------------------------------------------------


def to_effective(value: Fraction, n_total: int, n_effective: int) -> Fraction:
    """Rescale a per-server alpha or beta from N servers to the grouped servers only."""
    if n_effective < 1:
        raise ValueError("no effective servers")
    return _fr(value) * n_total / n_effective


def random_theorem2_instance(rng: random.Random) -> tuple[list[int], int]:
    g = rng.randint(2, 6)
    return [rng.randint(2, 6) for _ in range(g)], rng.randint(1, 6)
