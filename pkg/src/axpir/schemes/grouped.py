"""
Grouped one-time-pad storage with g-server PIR over virtual servers.

Each group acts as one replicated "virtual server".  The smallest member
of a group stores every message symbol plus a pad; the other members hold
additive shares of that pad.  The user asks every member the same linear
combinations, subtracts the share answers from the padded answer, and is
left with an ordinary replicated-PIR answer from the virtual server.

The virtual retrieval is the iterative capacity-achieving construction for
g servers and K messages with L = g^K: for every message subset S of size
s, each virtual server returns (g-1)^(s-1) sums with one symbol from each
message in S.  Sums that avoid the wanted message use fresh symbols and
serve as side information; sums that contain it reuse side information
from the other virtual servers plus one fresh wanted symbol.  Independent
uniform permutations of every message's symbols hide which is which.
"""

from __future__ import annotations

from itertools import combinations
from math import factorial
from typing import Sequence

import numpy as np

from ..galois import Field
from ..topology import Grouping
from .layout import QueryPlan, StorageLayout

_PLAN_CACHE = 1 << 14

Sum = dict[int, int]  # message -> logical symbol index


def unrank_permutation(rank: int, n: int) -> list[int]:
    """The ``rank``-th permutation of range(n) in lexicographic order."""
    items = list(range(n))
    out = []
    for i in range(n, 0, -1):
        f = factorial(i - 1)
        idx, rank = divmod(rank, f)
        out.append(items.pop(idx))
    return out


def permutations_from_seed(seed: int, k: int, l: int) -> list[list[int]]:
    """One permutation of the L symbols per message, read off ``seed`` in base L!."""
    base = factorial(l)
    if not 0 <= seed < base**k:
        raise ValueError(f"permutation seed must lie in [0, {base ** k})")
    perms = []
    for _ in range(k):
        seed, r = divmod(seed, base)
        perms.append(unrank_permutation(r, l))
    return perms


def virtual_queries(g: int, k: int, theta: int) -> tuple[list[list[Sum]], list[tuple[int, int, int | None, int | None]]]:
    """Logical query structure for g virtual servers.

    Returns the per-server list of sums (logical indices, before
    permutation) and, for every wanted logical index t in order, a recipe
    ``(server, position, side_server, side_position)``: the wanted symbol
    is the answer at (server, position) minus the side-information answer
    at (side_server, side_position), if any.
    """
    want = theta - 1
    fresh = [0] * k
    queries: list[list[Sum]] = [[] for _ in range(g)]
    side: dict[tuple[frozenset[int], int], list[int]] = {}
    recipe: list[tuple[int, int, int | None, int | None]] = []
    for s in range(1, k + 1):
        for v in range(g):
            for subset in combinations(range(k), s):
                sset = frozenset(subset)
                if want not in sset:
                    for _ in range((g - 1) ** (s - 1)):
                        term = {}
                        for m in subset:
                            term[m] = fresh[m]
                            fresh[m] += 1
                        side.setdefault((sset, v), []).append(len(queries[v]))
                        queries[v].append(term)
                elif s == 1:
                    recipe.append((v, len(queries[v]), None, None))
                    queries[v].append({want: fresh[want]})
                    fresh[want] += 1
                else:
                    rest = sset - {want}
                    for other in range(g):
                        if other == v:
                            continue
                        for pos in side[(rest, other)]:
                            term = dict(queries[other][pos])
                            term[want] = fresh[want]
                            fresh[want] += 1
                            recipe.append((v, len(queries[v]), other, pos))
                            queries[v].append(term)
    return queries, recipe


def _designated(group) -> tuple[int, list[int]]:
    members = sorted(group)
    return members[0], members[1:]


def _server_count(grouping: Grouping) -> int:
    members = set().union(*grouping.groups) | grouping.ungrouped
    return 1 + max(members)


def encode_grouped(grouping: Grouping, k: int, field: Field,
                   n_servers: int | None = None) -> StorageLayout:
    """Padded copy at each group's smallest member, pad shares at the others.

    Servers outside every group store nothing.
    """
    if grouping.g < 1:
        raise ValueError("the grouped scheme needs at least one group")
    if any(m < 2 for m in grouping.sizes):
        raise ValueError("every group needs at least 2 servers")
    n_servers = n_servers or _server_count(grouping)
    l = grouping.g**k
    kl = k * l
    noise_labels: list[str] = []
    pad_cols: dict[tuple[int, int], int] = {}  # (server, share) -> first column
    for gi, gr in enumerate(grouping.groups):
        _, others = _designated(gr)
        for si, member in enumerate(others):
            pad_cols[(member, si)] = kl + len(noise_labels)
            tag = f"N{gi + 1}" if len(others) == 1 else f"N{gi + 1}^{si + 1}"
            noise_labels += [f"{tag}({m + 1},{j + 1})" for m in range(k) for j in range(l)]
    width = kl + len(noise_labels)
    cells = [np.zeros((0, width), dtype=np.int64) for _ in range(n_servers)]
    labels: list[tuple[str, ...]] = [()] * n_servers
    eye = np.eye(kl, dtype=np.int64)
    for gi, gr in enumerate(grouping.groups):
        head, others = _designated(gr)
        padded = np.hstack([eye, np.zeros((kl, width - kl), dtype=np.int64)])
        for si, member in enumerate(others):
            col = pad_cols[(member, si)]
            share = np.zeros((kl, width), dtype=np.int64)
            share[:, col:col + kl] = eye
            padded += share
            cells[member] = share
            labels[member] = tuple(noise_labels[col - kl: col - kl + kl])
        cells[head] = padded
        labels[head] = tuple(
            f"W{m + 1}[{j + 1}]+pad" for m in range(k) for j in range(l)
        )
    return StorageLayout(field, k, l, tuple(noise_labels), tuple(cells), tuple(labels))


def plan_grouped(grouping: Grouping, k: int, theta: int, perm_seed: int,
                 field: Field, n_servers: int | None = None) -> QueryPlan:
    g = grouping.g
    l = g**k
    if not 1 <= theta <= k:
        raise ValueError(f"theta must lie in [1, {k}], got {theta}")
    q = field.q
    perms = permutations_from_seed(perm_seed, k, l)
    queries, recipe = virtual_queries(g, k, theta)
    if len(recipe) != l:
        raise RuntimeError(f"construction recovers {len(recipe)} symbols, expected {l}")
    n_servers = n_servers or _server_count(grouping)

    virtual_rows = []
    for v in range(g):
        rows = np.zeros((len(queries[v]), k * l), dtype=np.int64)
        for i, term in enumerate(queries[v]):
            for m, t in term.items():
                rows[i, m * l + perms[m][t]] = 1
        virtual_rows.append(rows)

    responses = [np.zeros((0, 0), dtype=np.int64) for _ in range(n_servers)]
    for v, gr in enumerate(grouping.groups):
        for member in gr:
            responses[member] = virtual_rows[v].copy()
    counts = [r.shape[0] for r in responses]
    offsets = np.cumsum([0, *counts])[:-1]

    def virtual_answer(v: int, pos: int) -> np.ndarray:
        # padded answer minus every share answer at the same position
        head, others = _designated(grouping.groups[v])
        row = np.zeros(sum(counts), dtype=np.int64)
        row[offsets[head] + pos] = 1
        for o in others:
            row[offsets[o] + pos] -= 1
        return row

    decoder = np.zeros((l, sum(counts)), dtype=np.int64)
    want = theta - 1
    for t, (v, pos, sv, spos) in enumerate(recipe):
        row = virtual_answer(v, pos)
        if sv is not None:
            row = row - virtual_answer(sv, spos)
        decoder[perms[want][t]] = row % q
    return QueryPlan(theta, perm_seed, tuple(responses), decoder % q, q)


def decode_grouped(grouping: Grouping, k: int, theta: int, perm_seed: int,
                   answers: Sequence[np.ndarray], field: Field) -> np.ndarray:
    return plan_grouped(grouping, k, theta, perm_seed, field, len(answers)).decode(answers)


class GroupedScheme:
    name = "grouped"

    def __init__(self, field: Field, grouping: Grouping, k: int, n_servers: int | None = None):
        self.field = field
        self.grouping = grouping
        self.k = k
        self.l = grouping.g**k
        self.n_servers = n_servers or _server_count(grouping)
        self._layout = encode_grouped(grouping, k, field, self.n_servers)
        self._plans: dict[tuple[int, int], QueryPlan] = {}

    def layout(self) -> StorageLayout:
        return self._layout

    def randomness_size(self) -> int:
        return factorial(self.l) ** self.k

    def randomness_at(self, i: int) -> int:
        return i

    def store(self, x: np.ndarray) -> list[np.ndarray]:
        return self._layout.evaluate(x)

    def plan(self, theta: int, randomness: int) -> QueryPlan:
        key = (theta, randomness)
        if key not in self._plans:
            if len(self._plans) >= _PLAN_CACHE:
                self._plans.clear()
            self._plans[key] = plan_grouped(self.grouping, self.k, theta, randomness,
                                            self.field, self.n_servers)
        return self._plans[key]
