import itertools

import numpy as np
import pytest

from qmrdiag.generate import random_evidence, random_net
from qmrdiag.net import DiseaseSpec, EdgeSpec, FindingSpec, NoisyOrNet


def brute_joint_table(net):
    """Independent oracle: P(d, f) for every assignment via the d' semantics.

    Each finding is the OR of per-edge activations d'_ij ~ Bernoulli(q_ij d_j)
    plus an always-on leak activation, summed out explicitly.
    """
    out = {}
    for d in itertools.product((0, 1), repeat=net.n_diseases):
        pd = 1.0
        for j, bit in enumerate(d):
            pd *= net.diseases[j].prior if bit else 1.0 - net.diseases[j].prior
        p_on = []
        for fnd in net.findings:
            qs = [e.q for e in fnd.parents] + [fnd.leak]
            src = [d[e.disease_index] for e in fnd.parents] + [1]
            off = 0.0
            for dprime in itertools.product((0, 1), repeat=len(qs)):
                w = 1.0
                for dp, q, s in zip(dprime, qs, src):
                    # P(d'|d): d'=1 with probability q*d
                    w *= q * s if dp else 1.0 - q * s
                if not any(dprime):
                    off += w
            p_on.append(1.0 - off)
        for f in itertools.product((0, 1), repeat=net.n_findings):
            pf = 1.0
            for bit, p in zip(f, p_on):
                pf *= p if bit else 1.0 - p
            out[(d, f)] = pd * pf
    return out


def oracle_evidence_prob(net, ev):
    table = brute_joint_table(net)
    return sum(p for (d, f), p in table.items()
               if all(f[i] == 0 for i in ev.i0) and all(f[i] == 1 for i in ev.i1))


def oracle_marginals(net, ev):
    table = brute_joint_table(net)
    num = np.zeros(net.n_diseases)
    den = 0.0
    for (d, f), p in table.items():
        if all(f[i] == 0 for i in ev.i0) and all(f[i] == 1 for i in ev.i1):
            den += p
            num += p * np.array(d)
    return num / den


@pytest.fixture
def one_disease_net():
    # prior 0.5, one finding with q = 0.4 and no leak
    return NoisyOrNet((DiseaseSpec("d0", 0.5),), (FindingSpec("f0", (EdgeSpec(0, 0.4),)),))


@pytest.fixture
def two_parent_net():
    """Two diseases pointing to one finding."""
    return NoisyOrNet(
        (DiseaseSpec("d1", 0.3), DiseaseSpec("d2", 0.6)),
        (FindingSpec("f", (EdgeSpec(0, 0.45), EdgeSpec(1, 0.8))),),
    )


@pytest.fixture
def dense_2x3_net():
    """Two diseases, three findings, every finding connected to both."""
    return random_net(2, 3, edge_density=1.0, seed=4)


def make_case(seed, nd, nf, density=0.5, max_pos=4, max_neg=4, leak=None):
    rng = np.random.default_rng(seed)
    net = random_net(nd, nf, density, leak_range=leak, seed=rng)
    ev = random_evidence(net, max_pos, max_neg, seed=rng)
    return net, ev
