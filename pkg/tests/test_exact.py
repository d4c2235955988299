import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_case, oracle_evidence_prob, oracle_marginals
from qmrdiag import exact
from qmrdiag.errors import CapExceeded, DegenerateParameter, IncompleteTable
from qmrdiag.exact import (
    SubsetFunctionTable,
    evidence_prob_brute,
    evidence_prob_incl_excl,
    mobius_forward,
    mobius_inverse,
    p_matrix_brute,
    p_table_brute,
    posterior_exact,
    product_to_sum_check,
    t_func,
    t_table,
    t_value,
)
from qmrdiag.generate import random_net
from qmrdiag.net import DiseaseSpec, EdgeSpec, Evidence, FindingSpec, NoisyOrNet


def naive_signed_sum(values, k):
    """Oracle: out[S'] = sum over S subset S' of (-1)^|S| in[S], by double loop."""
    out = np.zeros(1 << k)
    for sp in range(1 << k):
        for s in range(1 << k):
            if s & ~sp == 0:
                out[sp] += (-1) ** bin(s).count("1") * values[s]
    return out


class TestBrute:
    def test_no_evidence_is_one(self):
        net = random_net(5, 3, seed=1)
        assert evidence_prob_brute(net, Evidence()) == pytest.approx(1.0, abs=1e-14)

    def test_one_disease(self, one_disease_net):
        # d=0 contributes 0.5*0, d=1 contributes 0.5*0.4
        assert evidence_prob_brute(one_disease_net, Evidence((), {0})) == pytest.approx(0.2, abs=1e-15)

    def test_matches_dprime_oracle(self):
        net, ev = make_case(3, 4, 3, leak=(0.0, 0.3))
        assert evidence_prob_brute(net, ev) == pytest.approx(oracle_evidence_prob(net, ev), abs=1e-13)

    def test_cap(self):
        net = random_net(5, 2, seed=0)
        with pytest.raises(CapExceeded):
            evidence_prob_brute(net, Evidence(), cap=4)


class TestInclExcl:
    def test_no_positives_is_single_t_term(self):
        net, _ = make_case(5, 6, 5)
        ev = Evidence({0, 2, 3}, ())
        assert evidence_prob_incl_excl(net, ev) == pytest.approx(t_value(net, (), ev.i0), rel=1e-14)
        assert evidence_prob_incl_excl(net, ev) == pytest.approx(evidence_prob_brute(net, ev), abs=1e-13)

    def test_complement_rule(self):
        net, _ = make_case(6, 5, 4)
        p_off = evidence_prob_brute(net, Evidence({1}, ()))
        assert t_value(net, (), ()) - t_value(net, (1,), ()) == pytest.approx(1 - p_off, abs=1e-13)
        assert evidence_prob_incl_excl(net, Evidence((), {1})) == pytest.approx(1 - p_off, abs=1e-13)

    def test_one_disease(self):
        net = NoisyOrNet((DiseaseSpec("d0", 0.5),), (FindingSpec("f0", (EdgeSpec(0, 0.4),)),))
        assert evidence_prob_incl_excl(net, Evidence((), {0})) == pytest.approx(0.2, abs=1e-12)

    def test_random_n8_matches_brute(self):
        net, ev = make_case(8, 8, 5, leak=(0.0, 0.2))
        assert evidence_prob_incl_excl(net, ev) == pytest.approx(evidence_prob_brute(net, ev), abs=1e-10)

    def test_gray_code_path(self, monkeypatch):
        # force most subset bits through the Gray-code walk
        net = random_net(7, 9, edge_density=0.4, q_range=(0.05, 0.5), leak_range=(0, 0.1), seed=2)
        ev = Evidence({8}, set(range(8)))
        want = evidence_prob_brute(net, ev)
        for low in (0, 1, 3):
            monkeypatch.setattr(exact, "_LOW_BITS", low)
            assert evidence_prob_incl_excl(net, ev) == pytest.approx(want, abs=1e-12)

    def test_degenerate_raises(self):
        net = NoisyOrNet.from_arrays([1.0, 0.3], [[0.5, 0.5]])
        with pytest.raises(DegenerateParameter):
            evidence_prob_incl_excl(net, Evidence((), {0}))

    def test_cap(self):
        net = random_net(3, 4, seed=0)
        with pytest.raises(CapExceeded):
            evidence_prob_incl_excl(net, Evidence((), {0, 1, 2}), cap=2)

    def test_t_func(self):
        assert t_func(0.0) == 1.0
        assert t_func(np.log(3.0)) == pytest.approx(2.0 / 3.0)


class TestProductToSum:
    def test_empty(self):
        assert product_to_sum_check([]) == (1.0, 1.0)

    def test_single(self):
        lhs, rhs = product_to_sum_check([0.7])
        assert lhs == pytest.approx(1 - np.exp(-0.7)) and rhs == pytest.approx(lhs, abs=1e-15)

    def test_ten_random(self):
        f = np.random.default_rng(0).uniform(0.01, 3.0, 10)
        lhs, rhs = product_to_sum_check(f)
        assert abs(lhs - rhs) <= 1e-12 * (1 + abs(lhs))


class TestMobius:
    def test_singleton(self):
        t = SubsetFunctionTable((3,), [2.0, 0.5])
        p = mobius_forward(t)
        np.testing.assert_allclose(p.values, [2.0, 1.5])

    def test_matches_double_loop(self):
        vals = np.random.default_rng(1).normal(size=1 << 5)
        t = SubsetFunctionTable(tuple(range(5)), vals)
        np.testing.assert_allclose(mobius_forward(t).values, naive_signed_sum(vals, 5), atol=1e-12)

    def test_round_trip(self):
        vals = np.random.default_rng(2).normal(size=1 << 6)
        t = SubsetFunctionTable(tuple(range(6)), vals)
        np.testing.assert_allclose(mobius_inverse(mobius_forward(t)).values, vals, atol=1e-12)

    def test_incomplete(self):
        t = SubsetFunctionTable.from_mapping((0, 1), {0: 1.0, 3: 2.0})
        with pytest.raises(IncompleteTable):
            mobius_forward(t)

    def test_p_from_t_matches_brute(self):
        net, _ = make_case(9, 6, 6, leak=(0.0, 0.2))
        ev = Evidence({4, 5}, {0, 1, 2, 3})
        p = mobius_forward(t_table(net, ev))
        np.testing.assert_allclose(p.values, p_table_brute(net, ev).values, atol=1e-12)
        assert p.values[-1] == pytest.approx(evidence_prob_brute(net, ev), abs=1e-12)
        back = mobius_inverse(p_table_brute(net, ev))
        np.testing.assert_allclose(back.values, t_table(net, ev).values, atol=1e-12)

    def test_subset_lookup(self):
        t = SubsetFunctionTable((4, 7), [1.0, 2.0, 3.0, 4.0])
        assert t[{7}] == 3.0 and t[{4, 7}] == 4.0
        assert t.subset(3) == {4, 7}

    def test_p_matrix_corner_and_monotone(self):
        net, _ = make_case(10, 5, 5)
        ev = Evidence({3, 4}, {0, 1, 2})
        m = p_matrix_brute(net, ev)
        assert m[0, 0] == pytest.approx(1.0, abs=1e-14)
        assert m[-1, -1] == pytest.approx(evidence_prob_brute(net, ev))
        assert np.all(m >= m[-1, -1] - 1e-15)


class TestPosterior:
    def test_no_evidence_gives_priors(self):
        net = random_net(5, 4, seed=3)
        for method in ("brute", "incl_excl"):
            rep = posterior_exact(net, Evidence(), method)
            np.testing.assert_allclose(rep.marginals, net.priors, atol=1e-12)

    def test_one_disease_forced(self, one_disease_net):
        rep = posterior_exact(one_disease_net, Evidence((), {0}))
        assert rep.marginals[0] == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(rep.posterior, [0.0, 1.0], atol=1e-12)

    def test_random_n8_backends_agree(self):
        net, ev = make_case(12, 8, 6, leak=(0.0, 0.1))
        a = posterior_exact(net, ev, "brute")
        b = posterior_exact(net, ev, "incl_excl")
        np.testing.assert_allclose(a.marginals, b.marginals, atol=1e-10)
        np.testing.assert_allclose(a.posterior, b.posterior, atol=1e-10)
        assert a.evidence_prob == pytest.approx(b.evidence_prob, abs=1e-10)

    def test_against_dprime_oracle(self):
        net, ev = make_case(13, 4, 3, leak=(0.0, 0.3))
        np.testing.assert_allclose(posterior_exact(net, ev).marginals,
                                   oracle_marginals(net, ev), atol=1e-12)

    def test_full_table_cap(self):
        net, ev = make_case(14, 6, 3)
        assert posterior_exact(net, ev, full_table_cap=5).posterior is None
        rep = posterior_exact(net, ev, full_table_cap=6)
        assert rep.posterior.sum() == pytest.approx(1.0, abs=1e-10)
        bits = np.array(list(itertools.product((0, 1), repeat=6)))[:, ::-1]
        np.testing.assert_allclose(rep.posterior @ bits, rep.marginals, atol=1e-10)

    def test_unknown_method(self, one_disease_net):
        with pytest.raises(ValueError):
            posterior_exact(one_disease_net, Evidence(), "junction_tree")


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 10), st.integers(1, 6))
def test_backend_equivalence_property(seed, nd, nf):
    net, ev = make_case(seed, nd, nf, leak=(0.0, 0.2))
    a = evidence_prob_brute(net, ev)
    b = evidence_prob_incl_excl(net, ev)
    assert abs(a - b) <= 1e-10 * (1 + a)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.0, 20.0), max_size=10))
def test_product_to_sum_property(f):
    lhs, rhs = product_to_sum_check(f)
    assert abs(lhs - rhs) <= 1e-12 * (1 + abs(lhs))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 6), st.integers(0, 2**32 - 1))
def test_mobius_round_trip_property(k, seed):
    vals = np.random.default_rng(seed).uniform(-5, 5, 1 << k)
    t = SubsetFunctionTable(tuple(range(k)), vals)
    np.testing.assert_allclose(mobius_forward(mobius_inverse(t)).values, vals, atol=1e-12)
