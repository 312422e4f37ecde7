import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from axpir.analysis import (
    ALPHA_NONNEG,
    BETA_NONNEG,
    ETA_ALIAS_NOTE,
    Inequality,
    achievable_rate,
    c_pir,
    c_tpir,
    corollary1_inequalities,
    corollary2_inequality,
    fmt,
    is_redundant,
    minimize,
    point_membership,
    random_theorem2_instance,
    rate_upper_bound,
    region_vertices,
    theorem1_inequalities,
    theorem1_region,
    theorem2_inequalities,
    theorem4_capacity,
    to_effective,
    zeta,
)
from axpir.topology import CommMatrix, Grouping, solve_grouping

from oracles import all_links

FOUR = CommMatrix.from_one_based(4, [[1, 2], [3, 4]])
SIX = CommMatrix.from_one_based(6, [[1, 2, 3], [4, 5, 6]])


def pairs(n):
    return Grouping.of(n, [{2 * i, 2 * i + 1} for i in range(n // 2)])


class TestRates:
    def test_tpir(self):
        assert c_tpir(1, 2, 2) == F(2, 3)
        assert c_tpir(3, 7, 1) == 1
        assert c_tpir(1, 3, 2) == F(3, 4)
        assert c_pir(2, 3) == F(4, 7)
        with pytest.raises(ValueError):
            c_tpir(0, 2, 2)

    def test_tpir_oracle(self):
        # capacity of PIR is (1 - 1/N) / (1 - 1/N^K) for T=1
        for n in range(2, 6):
            for k in range(1, 6):
                assert c_pir(n, k) == (1 - F(1, n)) / (1 - F(1, n) ** k)

    @given(st.integers(1, 8), st.integers(1, 8))
    def test_tpir_monotone(self, g, k):
        assert c_tpir(1, g + 1, k) > c_tpir(1, g, k) or k == 1
        assert c_tpir(1, g, k + 1) < c_tpir(1, g, k) or g == 1
        assert isinstance(c_tpir(1, g, k), F)

    def test_zeta(self):
        assert zeta(2, 1, 4, 2) == F(1, 2)
        assert zeta(1, 2, 9, 3) == 0
        assert zeta(3, 1, 4, 2) == F(3, 4)
        with pytest.raises(ValueError):
            zeta(2, 1, 4, 4)

    def test_achievable(self):
        assert achievable_rate(pairs(4), 1, 2) == F(1, 3)
        assert achievable_rate(pairs(6), 1, 2) == F(3, 8)
        assert achievable_rate(Grouping.of(2, [{0, 1}]), 1, 2) == F(1, 4)

    def test_upper(self):
        assert rate_upper_bound(FOUR, 2, 1) == F(1, 3)
        assert rate_upper_bound(SIX, 2, 1) == F(3, 8)
        assert rate_upper_bound(CommMatrix.from_one_based(4, [[1, 2]]), 2, 1) == F(2, 3)
        with pytest.raises(ValueError):
            rate_upper_bound(CommMatrix(4, ()), 2, 1)

    def test_fmt(self):
        assert fmt(F(3, 4)) == "3/4"
        assert fmt(F(2)) == "2"
        assert fmt(F(1, 3), as_float=True) == "0.333333"


class TestCapacity:
    def test_four_server(self):
        res = theorem4_capacity(FOUR, Grouping.of(4, [{0, 2}, {1, 3}]), 2)
        assert res.ok and res.capacity == F(1, 3)
        assert ETA_ALIAS_NOTE in res.notes

    def test_six_server(self):
        res = theorem4_capacity(SIX, Grouping.of(6, [{0, 3}, {1, 4}, {2, 5}]), 2)
        assert res.capacity == F(1, 2) * c_pir(3, 2) == F(3, 8)

    def test_single_link_conditions_not_met(self):
        cm = CommMatrix.from_one_based(4, [[1, 2]])
        res = theorem4_capacity(cm, Grouping.of(4, [{0, 2}, {1, 3}]), 2)
        assert not res.ok
        assert len(res.failed) == 1 and "lambda/M" in res.failed[0]

    def test_rejects_non_optimal_grouping(self):
        with pytest.raises(ValueError):
            theorem4_capacity(CommMatrix(4, ()), Grouping.of(4, [{0, 1, 2, 3}]), 2)

    def test_collusion_must_be_the_groups(self):
        gr = Grouping.of(4, [{0, 2}, {1, 3}])
        assert theorem4_capacity(FOUR, gr, 2, [[0, 2], [1, 3]]).ok
        with pytest.raises(ValueError):
            theorem4_capacity(FOUR, gr, 2, [[0, 1]])

    @settings(max_examples=60, deadline=None)
    @given(st.integers(3, 6).flatmap(
        lambda n: st.lists(st.sampled_from([l for l in all_links(n) if len(l) < n]),
                           min_size=1, max_size=4, unique=True).map(lambda ls: CommMatrix(n, tuple(ls)))),
        st.integers(1, 4))
    def test_capacity_claim(self, cm, k):
        g, optima = solve_grouping(cm)
        ub = rate_upper_bound(cm, k, 1)
        for o in optima:
            a = achievable_rate(o, 1, k)
            res = theorem4_capacity(cm, o, k)
            assert a <= ub
            if res.ok:
                assert a == ub == res.capacity
            elif k > 1:
                assert a < ub


class TestRegions:
    def test_theorem1(self):
        reg = theorem1_region()
        assert reg.vertices == ((F(0), F(1)), (F(1, 2), F(3, 4)))
        assert set(reg.rays) == {(F(0), F(1)), (F(1), F(0))}
        assert reg.notes == ("alpha + 6*beta >= 3 is redundant given beta >= 3/4 and alpha >= 0",)

    def test_redundancy_directly(self):
        t1 = theorem1_inequalities()
        assert is_redundant(t1[2], [t1[0], ALPHA_NONNEG])
        assert not is_redundant(t1[1], [t1[0], ALPHA_NONNEG])

    def test_simple_regions(self):
        assert region_vertices([ALPHA_NONNEG, BETA_NONNEG]).vertices == ((0, 0),)
        assert region_vertices([Inequality(0, 1, 1), Inequality(0, -1, 0)]).empty

    def test_membership(self):
        t1 = theorem1_inequalities()
        assert point_membership((F(3, 4), F(3, 4)), t1) == []
        assert point_membership((1, F(3, 4)), t1) == []
        viol = point_membership((F(1, 2), F(1, 2)), t1)
        assert [q.label for q, _ in viol] == ["beta >= 3/4", "alpha + 2*beta >= 2"]
        [(q, s)] = point_membership((F(3, 4), F(3, 4)), theorem2_inequalities((2, 2), 2)[:1])
        assert q.render() == "2*alpha + 2*beta >= 4" and s == -1

    def test_render(self):
        assert Inequality(1, 2, 2).render() == "alpha + 2*beta >= 2"
        assert Inequality(0, -1, 0).render() == "-beta >= 0"
        assert Inequality(F(1, 2), -3, 1).render() == "1/2*alpha - 3*beta >= 1"
        with pytest.raises(ValueError):
            Inequality(0, 0, 1)

    @settings(max_examples=80, deadline=None)
    @given(st.lists(st.tuples(st.integers(-3, 3), st.integers(-3, 3), st.integers(-4, 4))
                    .filter(lambda t: t[0] or t[1]), max_size=4),
           st.lists(st.tuples(st.fractions(0, 5, max_denominator=4), st.fractions(0, 5, max_denominator=4)),
                    min_size=1, max_size=10))
    def test_vertices_and_minimum(self, rows, probes):
        ineqs = [Inequality(a, b, c) for a, b, c in rows] + [ALPHA_NONNEG, BETA_NONNEG]
        reg = region_vertices(ineqs)
        for v in reg.vertices:
            assert all(q.holds(v) for q in ineqs)
            assert sum(q.slack(v) == 0 for q in ineqs) >= 2
        objective = Inequality(1, 1, 0)
        low = minimize(objective, ineqs)
        inside = [p for p in probes if all(q.holds(p) for q in ineqs)]
        if reg.empty:
            assert not inside and low is None
        elif low is not None:
            assert all(p[0] + p[1] >= low for p in inside)


class TestTheorem2:
    def test_examples(self):
        [a, b] = theorem2_inequalities((2, 2), 2)
        assert (a.a, a.b, a.c) == (2, 2, 4) and (b.a, b.b, b.c) == (2, 2, 4)
        first = theorem2_inequalities((2, 2, 2), 2)[0]
        assert (first.a, first.b, first.c) == (4, 2, 6)
        c2 = corollary2_inequality(2, 2, 2)
        assert (c2.a, c2.b, c2.c) == (2, 2, 4)

    def test_preconditions(self):
        with pytest.raises(ValueError):
            theorem2_inequalities((4,), 2)
        with pytest.raises(ValueError):
            theorem2_inequalities((2, 1), 2)
        with pytest.raises(ValueError):
            corollary1_inequalities(5, (2, 2), 2)

    def test_does_not_reduce_to_theorem1(self):
        t2 = theorem2_inequalities((2, 2), 2)
        assert point_membership((F(3, 4), F(3, 4)), t2)
        assert not point_membership((F(3, 4), F(3, 4)), theorem1_inequalities())

    @staticmethod
    def formula(sizes, k):
        # direct evaluation of the general bound, one row per group
        g = len(sizes)
        rows = []
        for ell, m in enumerate(sizes):
            rest = sum(sizes) - m
            rows.append((F(rest), F(m), F(k * (1 + rest - (g - 1)))))
        return rows

    def test_corollaries_match_general_form(self):
        rng = random.Random(2024)
        for _ in range(100):
            sizes, k = random_theorem2_instance(rng)
            general = [(q.a, q.b, q.c) for q in theorem2_inequalities(sizes, k)]
            assert general == self.formula(sizes, k)
            assert general == [(q.a, q.b, q.c) for q in corollary1_inequalities(sum(sizes), sizes, k)]
            d, g = sizes[0], len(sizes)
            c2 = corollary2_inequality(d, g, k)
            assert {(c2.a, c2.b, c2.c)} == set(self.formula([d] * g, k))


def test_effective_normalisation():
    assert to_effective(F(3, 4), 5, 4) == F(15, 16)
    with pytest.raises(ValueError):
        to_effective(F(1), 4, 0)
