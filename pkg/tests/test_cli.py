import csv
import json
import subprocess
import sys

import pytest

from axpir.cli import main

from conftest import SCENARIOS

REDUCED = str(SCENARIOS / "reduced_n4.json")
GROUPED = str(SCENARIOS / "grouped_n4.json")
SIX = str(SCENARIOS / "six_server.json")
SINGLE = str(SCENARIOS / "single_link.json")
FULL = str(SCENARIOS / "fully_connected.json")


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return dict(line.split(None, 1) for line in text.strip().splitlines())


class TestGroup:
    def test_four_server(self, capsys):
        assert run(capsys, "group", REDUCED)[:2] == (0, "g=2: {1,3}{2,4} | {1,4}{2,3}\n")

    def test_six_server(self, capsys):
        code, out, _ = run(capsys, "group", SIX)
        assert code == 0 and out.startswith("g=3: {1,4}{2,5}{3,6} | ")

    def test_infeasible(self, capsys):
        assert run(capsys, "group", FULL)[:2] == (1, "g=0 (infeasible)\n")

    def test_json(self, capsys, tmp_path):
        path = tmp_path / "g.json"
        run(capsys, "group", REDUCED, "--json", str(path))
        assert json.loads(path.read_text()) == {"g": 2, "groupings": [[[1, 3], [2, 4]], [[1, 4], [2, 3]]]}


class TestRates:
    def test_four_server(self, capsys):
        code, out, _ = run(capsys, "rates", REDUCED)
        r = rows(out)
        assert code == 0
        assert (r["achievable"], r["upper_bound"], r["capacity"]) == ("1/3", "1/3", "1/3")
        assert r["feasible(X=2)"] == "yes"

    def test_six_server(self, capsys):
        r = rows(run(capsys, "rates", SIX)[1])
        assert (r["achievable"], r["upper_bound"], r["capacity"]) == ("3/8", "3/8", "3/8")

    def test_single_link(self, capsys):
        r = rows(run(capsys, "rates", SINGLE)[1])
        assert r["grouping"] == "{1,3}{2,4}"
        assert (r["achievable"], r["upper_bound"]) == ("1/3", "2/3")
        assert r["capacity"].startswith("conditions-not-met")

    def test_float(self, capsys):
        r = rows(run(capsys, "rates", REDUCED, "--float")[1])
        assert r["achievable"] == "0.333333"


class TestRegion:
    def test_theorem1(self, capsys):
        code, out, _ = run(capsys, "region", REDUCED)
        assert code == 0
        assert "vertices: (0, 1), (1/2, 3/4)" in out
        assert "note: alpha + 6*beta >= 3 is redundant given beta >= 3/4 and alpha >= 0" in out

    def test_theorem2_single_inequality(self, capsys):
        out = run(capsys, "region", REDUCED, "--theorems", "t2")[1]
        assert "[t2]\n  2*alpha + 2*beta >= 4\n  vertices" in out

    def test_both_flags_conflict(self, capsys, tmp_path):
        path = tmp_path / "r.csv"
        out = run(capsys, "region", REDUCED, "--theorems", "t1,t2", "--csv", str(path))[1]
        assert "point (3/4, 3/4): finding" in out
        assert "finding: (3/4, 3/4) satisfies t1 but violates t2" in out
        lines = path.read_text().splitlines()
        assert lines[0] == "kind,a,b,c,label"
        split = lines.index("kind,alpha,beta")
        ineqs = list(csv.reader(lines[1:split]))
        assert ["inequality", "1", "6", "3", "t1: alpha + 6*beta >= 3"] in ineqs
        verts = list(csv.reader(lines[split + 1:]))
        assert ["vertex:t1", "1/2", "3/4"] in verts

    def test_bad_theorem(self, capsys):
        code, _, err = run(capsys, "region", REDUCED, "--theorems", "t9")
        assert code == 2 and "usage error" in err

    def test_point(self, capsys):
        out = run(capsys, "region", REDUCED, "--point", "1,3/4")[1]
        assert "point (1, 3/4): pass" in out


class TestSimulate:
    def test_reduced(self, capsys):
        code, out, _ = run(capsys, "simulate", REDUCED, "--sessions", "5")
        assert code == 0 and out.splitlines()[0] == "alpha=3/4 beta=3/4 R=1/3"

    def test_grouped(self, capsys):
        out = run(capsys, "simulate", GROUPED, "--seed", "7")[1]
        assert out.splitlines()[0] == "alpha=1 beta=3/4 R=1/3"

    def test_bad_theta(self, capsys):
        code, _, err = run(capsys, "simulate", REDUCED, "--theta", "3")
        assert code == 2 and "theta" in err

    def test_dump(self, capsys, tmp_path):
        path = tmp_path / "t.json"
        run(capsys, "simulate", REDUCED, "--theta", "2", "--sessions", "3", "--dump-transcript", str(path))
        doc = json.loads(path.read_text())
        assert [t["theta"] for t in doc] == [2, 2, 2] and all(t["correct"] for t in doc)


class TestVerify:
    def test_reduced_all_checks(self, capsys):
        code, out, _ = run(capsys, "verify", REDUCED)
        assert code == 0
        assert out.count(" pass ") == 10

    def test_degraded(self, capsys, tmp_path):
        path = tmp_path / "v.json"
        code, out, _ = run(capsys, "verify", REDUCED, "--fix-coin", "1", "--checks", "privacy",
                           "--json", str(path))
        assert code == 1 and "witness[privacy]" in out
        doc = json.loads(path.read_text())
        failed = [r for r in doc if r["verdict"] == "fail"]
        assert failed and all("witness" in r for r in failed)

    def test_sample_mode(self, capsys):
        code, out, _ = run(capsys, "verify", GROUPED, "--mode", "sample", "--checks", "privacy,security")
        assert code == 0 and "no violation found" in out

    def test_bad_check(self, capsys):
        assert run(capsys, "verify", REDUCED, "--checks", "vibes")[0] == 2


class TestScenarioErrors:
    @pytest.mark.parametrize("doc,field", [
        ({"k": 2, "links": []}, "n"),
        ({"n": 4, "k": 2, "links": [[1, 2]], "colour": 1}, "colour"),
        ({"n": 4, "k": 2, "links": [[1, 9]]}, "links"),
        ({"n": 4, "k": 2, "links": "none"}, "links"),
        ({"n": 4, "k": 2, "q": 4, "links": [[1, 2]]}, "q"),
        ({"n": 4, "k": 2, "links": [[1, 2]], "scheme": "x"}, "scheme"),
        ({"n": 4, "k": 2, "links": [[1, 2]], "grouping": [[1, 2], [3, 4]]}, "grouping"),
        ({"n": 4, "k": 2, "links": [[1, 2]], "grouping": [[1, 3], [3, 4]]}, "grouping"),
        ({"n": 4, "k": 2, "links": [[1, 2]], "collusion": [[0]]}, "collusion"),
        ({"n": 4, "k": "two", "links": [[1, 2]]}, "k"),
    ])
    def test_named_field(self, capsys, tmp_path, doc, field):
        path = tmp_path / "s.json"
        path.write_text(json.dumps(doc))
        code, _, err = run(capsys, "rates", str(path))
        assert code == 2
        assert err.startswith(f"invalid scenario: {field}:")

    def test_not_json(self, capsys, tmp_path):
        path = tmp_path / "s.json"
        path.write_text("{nope")
        code, _, err = run(capsys, "rates", str(path))
        assert code == 2 and "<root>" in err

    def test_missing_file(self, capsys, tmp_path):
        assert run(capsys, "rates", str(tmp_path / "absent.json"))[0] == 2

    def test_no_command(self, capsys):
        assert run(capsys)[0] == 2


def test_deterministic_output():
    cmd = [sys.executable, "-m", "axpir", "simulate", GROUPED, "--seed", "3", "--sessions", "4",
           "--dump-transcript"]
    a = subprocess.run(cmd, capture_output=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert a == b and b"alpha=1 beta=3/4 R=1/3" in a
