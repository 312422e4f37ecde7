from pathlib import Path

import pytest

from axpir.galois import Field
from axpir.protocol import Scenario
from axpir.topology import CollusionPattern, CommMatrix, Grouping

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def four_server(scheme="reduced_n4k2", q=2, fixed_coin=None):
    return Scenario(
        n_servers=4, k_messages=2, q=q,
        comm=CommMatrix.from_one_based(4, [[1, 2], [3, 4]]),
        collusion=CollusionPattern((frozenset({0, 2}), frozenset({1, 3}))),
        scheme=scheme, fixed_coin=fixed_coin,
    )


def six_server(k=2, q=2):
    return Scenario(6, k, q, CommMatrix.from_one_based(6, [[1, 2, 3], [4, 5, 6]]))


@pytest.fixture
def gf2():
    return Field(2)


@pytest.fixture
def reduced_sc():
    return four_server()


@pytest.fixture
def grouped_sc():
    return four_server("grouped")


@pytest.fixture
def pair_grouping():
    return Grouping.of(4, [{0, 2}, {1, 3}])


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
