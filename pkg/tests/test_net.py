import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from conftest import brute_joint_table
from qmrdiag.errors import DegenerateParameter, InvalidNetError
from qmrdiag.generate import random_net
from qmrdiag.net import (
    DiseaseSpec,
    EdgeSpec,
    Evidence,
    FindingSpec,
    NoisyOrNet,
    check_evidence,
    disease_bits,
    disease_codes,
    find_violations,
    joint_prob,
    log_params,
    prob_finding_given_diseases,
    prob_findings_off,
    validate,
)


def net1(prior=0.5, findings=()):
    return NoisyOrNet((DiseaseSpec("d0", prior),), findings)


class TestValidate:
    def test_minimal_net_is_valid(self):
        validate(net1())

    def test_prior_out_of_range(self):
        with pytest.raises(InvalidNetError) as exc:
            validate(net1(prior=1.3))
        assert [v.kind for v in exc.value.violations] == ["PriorOutOfRange"]

    def test_duplicate_edge(self):
        f = FindingSpec("f0", (EdgeSpec(0, 0.2), EdgeSpec(0, 0.3)))
        with pytest.raises(InvalidNetError) as exc:
            validate(net1(findings=(f,)))
        assert [v.kind for v in exc.value.violations] == ["DuplicateEdge"]

    def test_reports_every_violation(self):
        net = NoisyOrNet(
            (DiseaseSpec("a", -0.1), DiseaseSpec("a", 0.5)),
            (FindingSpec("f", (EdgeSpec(5, 0.2), EdgeSpec(0, 1.5)), leak=1.0),),
        )
        kinds = sorted(v.kind for v in find_violations(net))
        assert kinds == ["BadParentIndex", "DuplicateName", "PriorOutOfRange",
                         "QOutOfRange", "QOutOfRange"]

    def test_finding_name_clashing_with_disease(self):
        net = net1(findings=(FindingSpec("d0", (EdgeSpec(0, 0.2),)),))
        assert [v.kind for v in find_violations(net)] == ["DuplicateName"]

    def test_evidence_overlap_and_range(self):
        net = net1(findings=(FindingSpec("f0", (EdgeSpec(0, 0.2),)),))
        with pytest.raises(InvalidNetError):
            check_evidence(net, Evidence({0}, {0}))
        with pytest.raises(InvalidNetError):
            check_evidence(net, Evidence({3}, ()))


class TestFindingProbability:
    def test_single_parent_is_bernoulli_q(self):
        net = net1(findings=(FindingSpec("f0", (EdgeSpec(0, 0.3),)),))
        assert prob_finding_given_diseases(net, 0, [1], 1) == pytest.approx(0.3, abs=1e-15)

    def test_two_parents_product(self):
        net = NoisyOrNet.from_arrays([0.5, 0.5], [[0.5, 0.5]])
        assert prob_finding_given_diseases(net, 0, [1, 1], 0) == pytest.approx(0.25, abs=1e-15)

    def test_leak_example_matches_dprime_semantics(self):
        net = NoisyOrNet.from_arrays([0.5, 0.5], [[0.2, 0.7]], leak=[0.1])
        # oracle: sum over d' configurations, leak as an always-on parent
        table = brute_joint_table(net)
        p_d = 0.25
        oracle = table[((1, 0), (0,))] / p_d
        assert oracle == pytest.approx(0.72, abs=1e-12)
        assert prob_finding_given_diseases(net, 0, [1, 0], 0) == pytest.approx(0.72, abs=1e-12)

    def test_hard_edge_direct_product(self):
        net = net1(findings=(FindingSpec("f0", (EdgeSpec(0, 1.0),)),))
        assert prob_finding_given_diseases(net, 0, [1], 0) == 0.0
        assert prob_findings_off(net, np.array([[1], [0]]))[:, 0].tolist() == [0.0, 1.0]


class TestJoint:
    def test_prior_only(self):
        assert joint_prob(net1(0.25), [1], []) == pytest.approx(0.25)

    def test_deterministic_or(self):
        net = net1(0.5, (FindingSpec("f0", (EdgeSpec(0, 1.0),)),))
        assert joint_prob(net, [1], [1]) == pytest.approx(0.5)
        assert joint_prob(net, [1], [0]) == 0.0

    def test_normalization_random_net(self):
        net = random_net(3, 2, seed=11)
        total = sum(joint_prob(net, d, f) for (d, f) in brute_joint_table(net))
        assert total == pytest.approx(1.0, abs=1e-12)


class TestLogParams:
    def test_symmetric_prior(self):
        lp = log_params(net1(0.5))
        assert lp.alpha[0] == pytest.approx(math.log(2))
        assert lp.beta[0] == pytest.approx(0.0, abs=1e-15)

    def test_zero_q_gives_zero_theta(self):
        net = NoisyOrNet.from_arrays([0.3, 0.4], [[0.5, 0.0]])
        assert log_params(net).theta[0, 1] == 0.0

    def test_prior_02_q_075_against_numerical_solution(self):
        net = net1(0.2, (FindingSpec("f0", (EdgeSpec(0, 0.75),)),))
        lp = log_params(net)
        alpha = brentq(lambda a: math.exp(-a) - 0.8, -10, 10, xtol=1e-15)
        beta = brentq(lambda b: math.exp(-alpha - b) - 0.2, -10, 10, xtol=1e-15)
        theta = brentq(lambda t: math.exp(-t) - 0.25, 0, 10, xtol=1e-15)
        assert lp.alpha[0] == pytest.approx(alpha, abs=1e-12)
        assert lp.beta[0] == pytest.approx(beta, abs=1e-12)
        assert lp.theta[0, 0] == pytest.approx(theta, abs=1e-12)
        assert lp.beta[0] == pytest.approx(math.log(4), abs=1e-12)

    @pytest.mark.parametrize("prior,q", [(0.0, 0.5), (1.0, 0.5), (0.5, 1.0)])
    def test_degenerate(self, prior, q):
        net = net1(prior, (FindingSpec("f0", (EdgeSpec(0, q),)),))
        with pytest.raises(DegenerateParameter):
            log_params(net)


def test_disease_codes_round_trip():
    d = np.array([[1, 0, 1], [0, 1, 1]])
    assert disease_codes(d).tolist() == [5, 6]
    np.testing.assert_array_equal(disease_bits(disease_codes(d), 3), d)


probs = st.floats(0.01, 0.99)


@st.composite
def small_nets(draw, max_total=14, max_parents=None):
    nd = draw(st.integers(1, 5))
    nf = draw(st.integers(0, min(4, max_total - nd)))
    priors = [draw(probs) for _ in range(nd)]
    findings = []
    for i in range(nf):
        parents = draw(st.lists(st.integers(0, nd - 1), min_size=1, max_size=max_parents or nd,
                                unique=True))
        edges = tuple(EdgeSpec(j, draw(st.floats(0.0, 1.0))) for j in parents)
        findings.append(FindingSpec(f"f{i}", edges, draw(st.floats(0.0, 0.5))))
    return NoisyOrNet(tuple(DiseaseSpec(f"d{j}", p) for j, p in enumerate(priors)), tuple(findings))


@settings(max_examples=60, deadline=None)
@given(small_nets())
def test_normalization_property(net):
    total = sum(joint_prob(net, d, f) for (d, f) in brute_joint_table(net))
    assert abs(total - 1.0) < 1e-10


@settings(max_examples=60, deadline=None)
@given(small_nets(max_parents=3))
def test_matches_dprime_semantics(net):
    table = brute_joint_table(net)
    for (d, f), p in table.items():
        assert joint_prob(net, d, f) == pytest.approx(p, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(small_nets(), st.data())
def test_log_and_linear_agree(net, data):
    d = data.draw(st.lists(st.integers(0, 1), min_size=net.n_diseases, max_size=net.n_diseases))
    for i, fnd in enumerate(net.findings):
        direct = (1 - fnd.leak) * np.prod([1 - e.q for e in fnd.parents if d[e.disease_index]])
        assert prob_finding_given_diseases(net, i, d, 0) == pytest.approx(direct, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(small_nets(), st.data())
def test_activating_a_disease_never_raises_p_off(net, data):
    d = np.array(data.draw(st.lists(st.integers(0, 1), min_size=net.n_diseases,
                                    max_size=net.n_diseases)))
    j = data.draw(st.integers(0, net.n_diseases - 1))
    lo, hi = d.copy(), d.copy()
    lo[j], hi[j] = 0, 1
    off = prob_findings_off(net, np.vstack([lo, hi]))
    assert np.all(off[1] <= off[0] + 1e-15)
