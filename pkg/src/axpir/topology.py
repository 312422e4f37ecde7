"""
Communication topology of the servers and the exact grouping search.

Servers are 0-based internally.  ``CommMatrix.from_one_based`` and
``Grouping.one_based`` convert at the boundary so that inputs and printed
output can use the DB1..DBN numbering.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import comb
from typing import Iterable

MAX_EXACT_SERVERS = 12


@dataclass(frozen=True)
class CommMatrix:
    """N servers and the M server sets that exchange stored data.

    Each link is one column of the binary communication matrix.  Links are
    kept in the order given; ``validate`` reports structural problems
    instead of rejecting them so that callers can print every issue.
    """

    n_servers: int
    links: tuple[frozenset[int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "links", tuple(frozenset(l) for l in self.links))

    @classmethod
    def from_one_based(cls, n: int, links: Iterable[Iterable[int]]) -> "CommMatrix":
        return cls(n, tuple(frozenset(i - 1 for i in l) for l in links))

    @property
    def m(self) -> int:
        return len(self.links)

    def matrix(self) -> list[list[int]]:
        """The N x M 0/1 matrix."""
        return [[int(n in l) for l in self.links] for n in range(self.n_servers)]


@dataclass(frozen=True)
class CollusionPattern:
    """Coalitions that may pool their queries; singletons are always implied."""

    sets: tuple[frozenset[int], ...] = ()
    t_param: int = 1

    def __post_init__(self):
        object.__setattr__(self, "sets", tuple(frozenset(s) for s in self.sets))
        if self.t_param < 1:
            raise ValueError("T must be at least 1")

    def coalitions(self, n_servers: int) -> list[frozenset[int]]:
        """Every singleton followed by the explicit sets, without repeats."""
        out = [frozenset({i}) for i in range(n_servers)]
        for s in self.sets:
            if not s or min(s) < 0 or max(s) >= n_servers:
                raise ValueError(f"collusion set {sorted(s)} out of range")
            if s not in out:
                out.append(s)
        return out


@dataclass(frozen=True)
class Grouping:
    groups: tuple[frozenset[int], ...]
    ungrouped: frozenset[int] = field(default_factory=frozenset)

    @property
    def g(self) -> int:
        return len(self.groups)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(gr) for gr in self.groups)

    @classmethod
    def of(cls, n_servers: int, groups: Iterable[Iterable[int]]) -> "Grouping":
        """Canonical grouping from 0-based groups: sorted by smallest member."""
        gs = sorted((frozenset(gr) for gr in groups), key=min)
        used = frozenset().union(*gs) if gs else frozenset()
        return cls(tuple(gs), frozenset(range(n_servers)) - used)

    def one_based(self) -> list[list[int]]:
        return [sorted(i + 1 for i in gr) for gr in self.groups]

    def label(self) -> str:
        return "".join("{" + ",".join(map(str, gr)) + "}" for gr in self.one_based())


class TopologyError(ValueError):
    pass


def validate(cm: CommMatrix) -> tuple[list[str], list[str]]:
    """Return ``(violations, warnings)`` for ``cm``.

    Violations are hard errors (bad indices, empty or singleton links,
    duplicates).  A link contained in another link is only a warning: it is
    redundant, since the larger set already pools that data.
    """
    violations: list[str] = []
    warnings: list[str] = []
    if cm.n_servers < 2:
        violations.append(f"need at least 2 servers, got {cm.n_servers}")
    seen: dict[frozenset[int], int] = {}
    for j, link in enumerate(cm.links):
        shown = sorted(i + 1 for i in link)
        if not link:
            violations.append(f"link {j + 1} is empty")
            continue
        if min(link) < 0 or max(link) >= cm.n_servers:
            violations.append(f"link {j + 1} {shown} has an index outside [1, {cm.n_servers}]")
        if len(link) < 2:
            violations.append(f"link {j + 1} {shown} has fewer than 2 servers")
        if link in seen:
            violations.append(f"link {j + 1} {shown} duplicates link {seen[link] + 1}")
        else:
            seen[link] = j
    for j, a in enumerate(cm.links):
        for k, b in enumerate(cm.links):
            if j != k and a < b:
                warnings.append(
                    f"link {j + 1} {sorted(i + 1 for i in a)} is redundant: "
                    f"subset of link {k + 1} {sorted(i + 1 for i in b)}"
                )
    return violations, warnings


def check(cm: CommMatrix) -> None:
    violations, _ = validate(cm)
    if violations:
        raise TopologyError("; ".join(violations))


def omega(cm: CommMatrix, i: int) -> int:
    """Number of links with exactly ``i`` servers."""
    return sum(1 for l in cm.links if len(l) == i)


def feasibility(cm: CommMatrix, x: int) -> bool:
    if not 1 <= x <= cm.n_servers:
        raise ValueError(f"x must lie in [1, {cm.n_servers}]")
    return comb(cm.n_servers, x) - omega(cm, x) != 0


def lambda_max(cm: CommMatrix) -> int:
    """Largest number of links that miss a single server."""
    if cm.n_servers == 0:
        return 0
    return max(sum(1 for l in cm.links if n not in l) for n in range(cm.n_servers))


def group_allowed(cm: CommMatrix, group: frozenset[int]) -> bool:
    """A group may form only if it has 2+ members and no link swallows it."""
    return len(group) >= 2 and not any(group <= l for l in cm.links)


def is_feasible_grouping(cm: CommMatrix, grouping: Grouping) -> bool:
    seen: set[int] = set()
    for gr in grouping.groups:
        if seen & gr or not group_allowed(cm, gr):
            return False
        if min(gr) < 0 or max(gr) >= cm.n_servers:
            return False
        seen |= gr
    return True


@lru_cache(maxsize=None)
def _submasks(mask: int) -> tuple[int, ...]:
    """Nonzero submasks of ``mask``, fewest bits first."""
    subs = []
    sub = mask
    while sub:
        subs.append(sub)
        sub = (sub - 1) & mask
    return tuple(sorted(subs, key=lambda m: (m.bit_count(), m)))


def _families(allowed: list[bool], free: int, count: int, acc: list[int],
              best: list[int], found: list[list[int]]) -> None:
    # Lowest free server either anchors a new group drawn from the servers
    # after it or stays ungrouped.  Every family is reached once; small
    # groups go first so the bound tightens early.
    if count + free.bit_count() // 2 < best[0]:
        return
    if not free:
        if count > best[0]:
            best[0] = count
            found.clear()
        found.append(list(acc))
        return
    head = free & -free
    rest = free ^ head
    for sub in _submasks(rest):
        if allowed[sub | head]:
            acc.append(sub | head)
            _families(allowed, rest & ~sub, count + 1, acc, best, found)
            acc.pop()
    _families(allowed, rest, count, acc, best, found)


def solve_grouping(cm: CommMatrix) -> tuple[int, list[Grouping]]:
    """All groupings with the maximum number of groups, canonically ordered.

    Returns ``(0, [])`` when no group can form at all.
    """
    check(cm)
    if cm.n_servers > MAX_EXACT_SERVERS:
        raise TopologyError(
            f"exact grouping search is limited to {MAX_EXACT_SERVERS} servers"
        )
    n = cm.n_servers
    links = [sum(1 << i for i in l) for l in cm.links]
    allowed = [m.bit_count() >= 2 for m in range(1 << n)]
    for l in links:
        for sub in _submasks(l):
            allowed[sub] = False
    best = [0]
    found: list[list[int]] = []
    _families(allowed, (1 << n) - 1, 0, [], best, found)
    g = best[0]
    if g == 0:
        return 0, []
    optima = {
        Grouping.of(n, [[i for i in range(n) if m >> i & 1] for m in fam])
        for fam in found if len(fam) == g
    }
    return g, sorted(optima, key=lambda gr: [sorted(x) for x in gr.groups])
