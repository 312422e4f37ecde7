"""
End-to-end retrieval sessions and (alpha, beta, R) measurement.

Servers are simulated in-process: each one sees only its own stored cells
and its own query, and returns ``plan.answer(n, cells_n)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from .analysis import fmt
from .galois import Field
from .schemes import GroupedScheme, ReducedScheme, storage_profile
from .topology import (
    CollusionPattern,
    CommMatrix,
    Grouping,
    TopologyError,
    check,
    is_feasible_grouping,
    solve_grouping,
)

SCHEMES = ("reduced_n4k2", "grouped")


class ScenarioError(ValueError):
    """A scenario that cannot be run; ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class Scenario:
    n_servers: int
    k_messages: int
    q: int
    comm: CommMatrix
    collusion: CollusionPattern = field(default_factory=CollusionPattern)
    scheme: str = "grouped"
    grouping: Grouping | None = None
    fixed_coin: int | None = None

    def __post_init__(self):
        try:
            Field(self.q)
        except ValueError as e:
            raise ScenarioError("q", str(e)) from None
        if self.k_messages < 1:
            raise ScenarioError("k", "need at least one message")
        if self.comm.n_servers != self.n_servers:
            raise ScenarioError("n", "does not match the communication matrix")
        try:
            check(self.comm)
        except TopologyError as e:
            raise ScenarioError("links", str(e)) from None
        if self.scheme not in SCHEMES:
            raise ScenarioError("scheme", f"unknown scheme {self.scheme!r}")
        if self.grouping is None:
            g, optima = solve_grouping(self.comm)
            if g == 0:
                raise ScenarioError("grouping", "no feasible grouping exists")
            object.__setattr__(self, "grouping", optima[0])
        elif not is_feasible_grouping(self.comm, self.grouping):
            raise ScenarioError("grouping", f"{self.grouping.label()} violates the grouping constraints")
        if self.scheme == "reduced_n4k2":
            links = sorted(sorted(l) for l in self.comm.links)
            ok = (
                self.n_servers == 4 and self.k_messages == 2 and len(links) == 2
                and all(len(l) == 2 for l in links)
                and not set(links[0]) & set(links[1])
            )
            if not ok:
                raise ScenarioError(
                    "scheme", "reduced_n4k2 needs N=4, K=2 and two disjoint pair links"
                )
        if self.fixed_coin is not None and self.scheme != "reduced_n4k2":
            raise ScenarioError("fix_coin", "only the reduced scheme has a coin")

    @property
    def field(self) -> Field:
        return Field(self.q)

    def build(self):
        if self.scheme == "reduced_n4k2":
            return ReducedScheme(self.field, self.grouping, self.fixed_coin)
        return GroupedScheme(self.field, self.grouping, self.k_messages, self.n_servers)

    @property
    def l(self) -> int:
        return 4 if self.scheme == "reduced_n4k2" else self.grouping.g**self.k_messages


@dataclass(frozen=True, eq=False)
class Transcript:
    theta: int
    randomness: Any
    queries: tuple[tuple, ...]
    answers: tuple[np.ndarray, ...]
    decoded: np.ndarray
    download_counts: tuple[int, ...]
    expected: np.ndarray

    @property
    def correct(self) -> bool:
        return bool(np.array_equal(self.decoded, self.expected))

    def to_json(self) -> dict[str, Any]:
        return {
            "theta": self.theta,
            "randomness": self.randomness,
            "queries": [[list(r) for r in qd] for qd in self.queries],
            "answers": [a.tolist() for a in self.answers],
            "decoded": self.decoded.tolist(),
            "download_counts": list(self.download_counts),
            "correct": self.correct,
        }


@lru_cache(maxsize=64)
def scheme_for(sc: Scenario):
    return sc.build()


def execute(scheme, theta: int, x: np.ndarray, randomness):
    """Run one retrieval on a symbol vector (or a batch of them, one per row).

    Returns ``(plan, answers, decoded)``.  The plan is built before and
    independently of the stored values; server n answers from
    ``storage[n]`` alone.
    """
    storage = scheme.store(x)
    return respond(scheme, theta, storage, randomness)


def respond(scheme, theta: int, storage, randomness):
    """Query already-stored data: ``(plan, answers, decoded)``."""
    plan = scheme.plan(theta, randomness)
    answers = tuple(plan.answer(n, storage[n]) for n in range(scheme.n_servers))
    return plan, answers, plan.decode(answers)


def run_session(sc: Scenario, theta: int, message_values: np.ndarray,
                noise_values: np.ndarray, randomness, scheme=None) -> Transcript:
    """Store, query, answer and decode once.

    ``message_values`` has shape (K, L); ``noise_values`` has one entry per
    noise symbol of the layout.
    """
    scheme = scheme or scheme_for(sc)
    layout = scheme.layout()
    msgs = np.asarray(message_values, dtype=np.int64)
    noise = np.asarray(noise_values, dtype=np.int64).reshape(-1)
    if msgs.shape != (scheme.k, scheme.l):
        raise ValueError(f"message values must have shape {(scheme.k, scheme.l)}, got {msgs.shape}")
    if noise.shape[0] != layout.n_noise:
        raise ValueError(f"expected {layout.n_noise} noise values, got {noise.shape[0]}")
    if not 1 <= theta <= scheme.k:
        raise ValueError(f"theta must lie in [1, {scheme.k}], got {theta}")
    x = np.concatenate([msgs.reshape(-1), noise]) % sc.q
    plan, answers, decoded = execute(scheme, theta, x, randomness)
    return Transcript(
        theta=theta,
        randomness=randomness,
        queries=tuple(plan.descriptor(n) for n in range(scheme.n_servers)),
        answers=answers,
        decoded=decoded,
        download_counts=tuple(a.shape[-1] for a in answers),
        expected=msgs[theta - 1] % sc.q,
    )


def random_session(sc: Scenario, rng: np.random.Generator, theta: int | None = None,
                   scheme=None) -> Transcript:
    scheme = scheme or scheme_for(sc)
    layout = scheme.layout()
    theta = theta if theta is not None else int(rng.integers(1, scheme.k + 1))
    msgs = rng.integers(0, sc.q, size=(scheme.k, scheme.l))
    noise = rng.integers(0, sc.q, size=layout.n_noise)
    r = scheme.randomness_at(uniform_index(rng, scheme.randomness_size()))
    return run_session(sc, theta, msgs, noise, r, scheme)


def uniform_index(rng: np.random.Generator, size: int) -> int:
    """Uniform integer in [0, size), also for sizes beyond int64."""
    if size < 2**63:
        return int(rng.integers(0, size))
    words = -(-size.bit_length() // 32)
    while True:
        v = 0
        for w in rng.integers(0, 2**32, size=words, dtype=np.uint64):
            v = (v << 32) | int(w)
        v >>= words * 32 - size.bit_length()
        if v < size:
            return v


@dataclass(frozen=True)
class Measurement:
    alpha: Fraction
    beta: Fraction
    rate: Fraction
    beta_per_server: tuple[Fraction, ...]
    identity_holds: bool
    sessions: int

    def to_json(self) -> dict[str, Any]:
        return {
            "alpha": fmt(self.alpha),
            "beta": fmt(self.beta),
            "rate": fmt(self.rate),
            "beta_per_server": [fmt(b) for b in self.beta_per_server],
            "beta_equals_1_over_NR": self.identity_holds,
            "sessions": self.sessions,
        }


def measure(sc: Scenario, transcripts: Sequence[Transcript]) -> Measurement:
    if not transcripts:
        raise ValueError("need at least one transcript")
    scheme = scheme_for(sc)
    l = scheme.l
    alpha = storage_profile(scheme.layout()).average
    per_server = tuple(
        Fraction(max(t.download_counts[n] for t in transcripts), l)
        for n in range(sc.n_servers)
    )
    beta = sum(per_server, Fraction(0)) / sc.n_servers
    rate = Fraction(l, max(sum(t.download_counts) for t in transcripts))
    return Measurement(alpha, beta, rate, per_server,
                       beta == 1 / (sc.n_servers * rate), len(transcripts))


def dump_transcripts(transcripts: Sequence[Transcript]) -> str:
    return json.dumps([t.to_json() for t in transcripts], indent=2)
