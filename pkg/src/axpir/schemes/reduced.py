"""
Reduced-storage scheme for N=4 servers, K=2 messages and two disjoint
pair links, e.g. {1,2} and {3,4}.

Servers are paired across the links into two groups.  In each group one
server keeps six padded cells and its partner keeps the six matching
pads, so every server stores 6 symbols instead of 8 while the download
stays at 3 symbols per server.  A fair coin picks one of two retrieval
tables; under either table, servers 1 and 3 are asked for the same cells
whichever message is wanted, and servers 2 and 4 see each of their two
possible cell triples with probability 1/2.

Message symbols are written a_j (message 1) and b_j (message 2).  Each
stored cell gets its own uniform pad.  Where a cell merges two symbols
(a2+b2, say), the pad N(1,2)+N(2,2) is a single uniform field element,
so it is represented by one noise symbol.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..galois import Field, solve
from ..topology import Grouping
from .layout import QueryPlan, StorageLayout

K = 2
L = 4
N_SERVERS = 4

# (message, position) pairs, 1-based as in the tables.
_PADDED_A = [[(1, 1)], [(1, 3)], [(2, 1)], [(2, 3)], [(1, 2), (2, 2)], [(1, 4), (2, 4)]]
_PADDED_B = [[(1, 2)], [(1, 4)], [(2, 2)], [(2, 4)], [(1, 1), (2, 3)], [(1, 3), (2, 1)]]

# Cell triples requested from the padded server of each group (and from
# its partner, on the matching pad cells).
_GROUP_A_CELLS = {1: (0, 2, 4), 2: (1, 3, 5)}
_GROUP_B_X = (1, 2, 5)  # a4, b2, a3+b1
_GROUP_B_Y = (0, 3, 4)  # a2, b4, a1+b3


def _sym(k: int, j: int) -> str:
    return ("a" if k == 1 else "b") + str(j)


def _pad(group: int, cell: list[tuple[int, int]]) -> str:
    return "+".join(f"N{group}({k},{j})" for k, j in cell)


def roles(grouping: Grouping) -> tuple[int, int, int, int]:
    """Map table rows DB1..DB4 to physical servers.

    The group holding the smallest server plays group 1.  In each group the
    smaller index holds the padded cells and the larger one the pads.
    """
    if grouping.sizes != (2, 2):
        raise ValueError("the reduced scheme needs two groups of two servers")
    ga, gb = (sorted(gr) for gr in grouping.groups)
    return ga[0], gb[0], ga[1], gb[1]


def cells_for(theta: int, coin: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Cell indices (0-based) asked of group 1 and group 2."""
    if theta not in (1, 2):
        raise ValueError(f"theta must be 1 or 2, got {theta}")
    if coin not in (1, 2):
        raise ValueError(f"coin must be 1 or 2, got {coin}")
    b_cells = _GROUP_B_X if (theta == 1) == (coin == 1) else _GROUP_B_Y
    return _GROUP_A_CELLS[coin], b_cells


def encode_reduced_n4k2(field: Field, grouping: Grouping | None = None) -> StorageLayout:
    grouping = grouping or Grouping.of(4, [{0, 2}, {1, 3}])
    p1, p2, p3, p4 = roles(grouping)
    kl = K * L
    noise_labels = [_pad(1, c) for c in _PADDED_A] + [_pad(2, c) for c in _PADDED_B]
    width = kl + len(noise_labels)
    cells = [np.zeros((6, width), dtype=np.int64) for _ in range(N_SERVERS)]
    labels: list[tuple[str, ...]] = [()] * N_SERVERS
    for g, (padded, partner, spec) in enumerate(((p1, p3, _PADDED_A), (p2, p4, _PADDED_B))):
        lab_padded, lab_pad = [], []
        for c, members in enumerate(spec):
            pad_col = kl + 6 * g + c
            for k, j in members:
                cells[padded][c, (k - 1) * L + (j - 1)] = 1
            cells[padded][c, pad_col] = 1
            cells[partner][c, pad_col] = 1
            pad = noise_labels[6 * g + c]
            lab_padded.append("+".join(_sym(k, j) for k, j in members) + "+" + pad)
            lab_pad.append(pad)
        labels[padded] = tuple(lab_padded)
        labels[partner] = tuple(lab_pad)
    return StorageLayout(field, K, L, tuple(noise_labels), tuple(cells), tuple(labels))


def _decoder(field: Field, grouping: Grouping, theta: int, coin: int) -> np.ndarray:
    # Pad cancellation gives six virtual answers (padded minus partner);
    # the wanted symbols are then a fixed combination of those sums.
    p1, p2, p3, p4 = roles(grouping)
    q = field.q
    cells_a, cells_b = cells_for(theta, coin)
    virtual = []  # rows over message symbols
    for spec, chosen in ((_PADDED_A, cells_a), (_PADDED_B, cells_b)):
        for c in chosen:
            row = np.zeros(K * L, dtype=np.int64)
            for k, j in spec[c]:
                row[(k - 1) * L + (j - 1)] = 1
            virtual.append(row)
    v = np.array(virtual)
    target = np.zeros((L, K * L), dtype=np.int64)
    for j in range(L):
        target[j, (theta - 1) * L + j] = 1
    mix = solve(field, v.T, target.T)
    if mix is None:
        raise RuntimeError(f"cell choice for theta={theta}, coin={coin} does not determine the message")
    mix = mix.T  # (L, 6) over virtual answers

    # Answers are concatenated in server order, 3 per server.
    offset = {s: 3 * s for s in range(N_SERVERS)}
    dec = np.zeros((L, 3 * N_SERVERS), dtype=np.int64)
    for v_idx in range(6):
        padded, partner = (p1, p3) if v_idx < 3 else (p2, p4)
        pos = v_idx % 3
        dec[:, offset[padded] + pos] += mix[:, v_idx]
        dec[:, offset[partner] + pos] -= mix[:, v_idx]
    return dec % q


def plan_reduced_n4k2(theta: int, coin: int, field: Field = Field(2),
                      grouping: Grouping | None = None) -> QueryPlan:
    grouping = grouping or Grouping.of(4, [{0, 2}, {1, 3}])
    p1, p2, p3, p4 = roles(grouping)
    cells_a, cells_b = cells_for(theta, coin)
    responses: list[np.ndarray] = [None] * N_SERVERS  # type: ignore[list-item]
    for server, chosen in ((p1, cells_a), (p3, cells_a), (p2, cells_b), (p4, cells_b)):
        r = np.zeros((3, 6), dtype=np.int64)
        for i, c in enumerate(chosen):
            r[i, c] = 1
        responses[server] = r
    return QueryPlan(theta, coin, tuple(responses), _decoder(field, grouping, theta, coin), field.q)


def decode_reduced_n4k2(theta: int, coin: int, answers: Sequence[np.ndarray],
                        field: Field = Field(2), grouping: Grouping | None = None) -> np.ndarray:
    return plan_reduced_n4k2(theta, coin, field, grouping).decode(answers)


class ReducedScheme:
    """The N=4, K=2 reduced-storage scheme; ``fixed_coin`` degrades it for audits."""

    name = "reduced_n4k2"

    def __init__(self, field: Field, grouping: Grouping | None = None,
                 fixed_coin: int | None = None):
        self.field = field
        self.grouping = grouping or Grouping.of(4, [{0, 2}, {1, 3}])
        roles(self.grouping)
        if fixed_coin not in (None, 1, 2):
            raise ValueError(f"fixed coin must be 1 or 2, got {fixed_coin}")
        self.fixed_coin = fixed_coin
        self.n_servers = N_SERVERS
        self.k = K
        self.l = L
        self._layout = encode_reduced_n4k2(field, self.grouping)

    def layout(self) -> StorageLayout:
        return self._layout

    def randomness_space(self) -> list[int]:
        return [self.fixed_coin] if self.fixed_coin else [1, 2]

    def randomness_size(self) -> int:
        return len(self.randomness_space())

    def randomness_at(self, i: int) -> int:
        return self.randomness_space()[i]

    def store(self, x: np.ndarray) -> list[np.ndarray]:
        return self._layout.evaluate(x)

    def plan(self, theta: int, randomness: int) -> QueryPlan:
        if randomness not in self.randomness_space():
            raise ValueError(f"coin {randomness} is outside this scheme's randomness")
        return plan_reduced_n4k2(theta, randomness, self.field, self.grouping)
