"""Synthetic QMR-like nets and evidence sets for testing and benchmarking."""

from __future__ import annotations

import numpy as np

from .net import DiseaseSpec, EdgeSpec, Evidence, FindingSpec, NoisyOrNet


def random_net(n_diseases, n_findings, edge_density=0.5, q_range=(0.05, 0.95),
               prior_range=(0.05, 0.95), leak_range=None, seed=0) -> NoisyOrNet:
    """Random two-layer net; every finding gets at least one parent.

    ``seed`` may be an int or a ``numpy.random.Generator``.
    """
    if not 0 < edge_density <= 1:
        raise ValueError("edge_density must be in (0, 1]")
    for lo, hi in filter(None, (q_range, prior_range, leak_range)):
        if not 0 <= lo <= hi <= 1:
            raise ValueError(f"bad probability range ({lo}, {hi})")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    priors = rng.uniform(*prior_range, size=n_diseases)
    diseases = tuple(DiseaseSpec(f"d{j}", float(p)) for j, p in enumerate(priors))
    findings = []
    for i in range(n_findings):
        mask = rng.random(n_diseases) < edge_density
        if not mask.any():
            mask[rng.integers(n_diseases)] = True
        qs = rng.uniform(*q_range, size=n_diseases)
        leak = float(rng.uniform(*leak_range)) if leak_range else 0.0
        parents = tuple(EdgeSpec(int(j), float(qs[j])) for j in np.flatnonzero(mask))
        findings.append(FindingSpec(f"f{i}", parents, leak))
    return NoisyOrNet(diseases, tuple(findings))


def random_evidence(net: NoisyOrNet, max_positive=4, max_negative=4, seed=0) -> Evidence:
    """Random disjoint (I0, I1) with at most the given sizes."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    order = rng.permutation(net.n_findings)
    n1 = int(rng.integers(0, min(max_positive, net.n_findings) + 1))
    n0 = int(rng.integers(0, min(max_negative, net.n_findings - n1) + 1))
    return Evidence(frozenset(order[n1:n1 + n0].tolist()), frozenset(order[:n1].tolist()))
