"""
Linear storage layouts and query plans.

A layout gives, for every server, a list of cells.  Each cell is a
coefficient vector over the global symbol vector
``x = (w_{1,1}..w_{1,L}, ..., w_{K,1}..w_{K,L}, noise_1..noise_P)``.
Message symbol ``(k, j)`` (both 0-based) sits at column ``k*L + j``.

A plan tells each server which linear combinations of its own cells to
return, and carries the user's decoding matrix over the concatenated
answers (servers in index order).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from ..galois import Field, matmul_mod, rank


@dataclass(frozen=True, eq=False)
class StorageLayout:
    field: Field
    k: int
    l: int
    noise_labels: tuple[str, ...]
    cells: tuple[np.ndarray, ...]
    cell_labels: tuple[tuple[str, ...], ...] = ()

    def __post_init__(self):
        width = self.n_symbols
        fixed = []
        for n, c in enumerate(self.cells):
            c = np.asarray(c, dtype=np.int64).reshape(-1, width)
            if c.size and (c.min() < 0 or c.max() >= self.field.q):
                raise ValueError(f"server {n} has coefficients outside F_{self.field.q}")
            fixed.append(c)
        object.__setattr__(self, "cells", tuple(fixed))

    @property
    def n_servers(self) -> int:
        return len(self.cells)

    @property
    def n_message_symbols(self) -> int:
        return self.k * self.l

    @property
    def n_noise(self) -> int:
        return len(self.noise_labels)

    @property
    def n_symbols(self) -> int:
        return self.k * self.l + len(self.noise_labels)

    def message_block(self, servers: Sequence[int]) -> np.ndarray:
        return self.joint(servers)[:, : self.n_message_symbols]

    def noise_block(self, servers: Sequence[int]) -> np.ndarray:
        return self.joint(servers)[:, self.n_message_symbols:]

    def joint(self, servers: Sequence[int]) -> np.ndarray:
        rows = [self.cells[n] for n in sorted(servers)]
        if not rows:
            return np.zeros((0, self.n_symbols), dtype=np.int64)
        return np.vstack(rows)

    def evaluate(self, x: np.ndarray) -> list[np.ndarray]:
        """Cell values per server for one symbol vector or a batch (rows)."""
        x = np.asarray(x, dtype=np.int64)
        return [matmul_mod(x, c.T, self.field.q) for c in self.cells]

    def symbol_labels(self) -> list[str]:
        msg = [f"W{k + 1}[{j + 1}]" for k in range(self.k) for j in range(self.l)]
        return msg + list(self.noise_labels)

    def to_json(self) -> dict[str, Any]:
        return {
            "q": self.field.q,
            "k": self.k,
            "l": self.l,
            "symbols": self.symbol_labels(),
            "servers": [
                {
                    "server": n + 1,
                    "cells": c.tolist(),
                    "labels": list(self.cell_labels[n]) if self.cell_labels else [],
                }
                for n, c in enumerate(self.cells)
            ],
        }


def group_property_holds(layout: StorageLayout, group: Sequence[int]) -> bool:
    """Each member's storage is fixed by the others' storage once messages are known.

    For a linear code this says the member's noise rows lie in the span of
    the remaining members' noise rows.
    """
    f = layout.field
    for member in group:
        others = [m for m in group if m != member]
        mine = layout.noise_block([member])
        rest = layout.noise_block(others)
        if rank(f, np.vstack([rest, mine])) != rank(f, rest):
            return False
    return True


@dataclass(frozen=True, eq=False)
class QueryPlan:
    """Per-server response coefficients plus the user's decoding matrix."""

    theta: int
    randomness: Any
    responses: tuple[np.ndarray, ...]
    decoder: np.ndarray
    q: int

    @property
    def download_counts(self) -> list[int]:
        return [r.shape[0] for r in self.responses]

    @property
    def offsets(self) -> list[int]:
        return list(np.cumsum([0, *self.download_counts])[:-1])

    def answer(self, server: int, cells: np.ndarray) -> np.ndarray:
        """Server-side answer: depends only on the server's cells and its query."""
        return matmul_mod(cells, self.responses[server].T, self.q)

    def decode(self, answers: Sequence[np.ndarray]) -> np.ndarray:
        counts = self.download_counts
        if len(answers) != len(counts):
            raise ValueError(f"expected answers from {len(counts)} servers, got {len(answers)}")
        for n, (a, c) in enumerate(zip(answers, counts)):
            if np.asarray(a).shape[-1] != c:
                raise ValueError(f"server {n + 1} returned {np.asarray(a).shape[-1]} symbols, expected {c}")
        flat = np.concatenate([np.asarray(a, dtype=np.int64) for a in answers], axis=-1)
        return matmul_mod(flat, self.decoder.T, self.q)

    def descriptor(self, server: int) -> tuple:
        """What the server sees, with ordering and scaling normalised away."""
        return canonical_rows(self.responses[server], self.q)

    def to_json(self) -> dict[str, Any]:
        return {
            "theta": self.theta,
            "randomness": _jsonable(self.randomness),
            "servers": [
                {"server": n + 1, "responses": r.tolist(), "cells": _cell_indices(r)}
                for n, r in enumerate(self.responses)
            ],
            "decoder": self.decoder.tolist(),
        }


def _cell_indices(rows: np.ndarray) -> list[list[int]]:
    return [[int(i) + 1 for i in np.nonzero(row)[0]] for row in rows]


def _jsonable(v):
    if isinstance(v, (tuple, list)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.integer):
        return int(v)
    return v


def canonical_rows(rows: np.ndarray, q: int) -> tuple:
    out = []
    for row in np.asarray(rows, dtype=np.int64):
        nz = np.nonzero(row)[0]
        if nz.size:
            row = (row * pow(int(row[nz[0]]), q - 2, q)) % q
        out.append(tuple(int(v) for v in row))
    return tuple(sorted(out))


@dataclass(frozen=True)
class StorageProfile:
    per_server: tuple[Fraction, ...]
    per_group: tuple[Fraction, ...]
    average: Fraction


def storage_profile(layout: StorageLayout, groups: Sequence[Sequence[int]] = ()) -> StorageProfile:
    """alpha_i = rank(S_i)/(KL), alpha_G = sum over the group, alpha = mean over all servers."""
    kl = layout.k * layout.l
    if layout.n_servers == 0 or kl == 0:
        return StorageProfile((), (), Fraction(0))
    per = tuple(Fraction(rank(layout.field, c), kl) for c in layout.cells)
    per_group = tuple(sum((per[i] for i in gr), Fraction(0)) for gr in groups)
    return StorageProfile(per, per_group, sum(per, Fraction(0)) / layout.n_servers)


def dumps(obj) -> str:
    return json.dumps(obj.to_json(), indent=2, sort_keys=True)
