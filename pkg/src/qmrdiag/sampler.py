"""Rejection and likelihood-weighted sampling for the two-layer net.

Nodes are sampled in the topological order (diseases, then findings).
Work is split into fixed-size blocks; block ``b`` always draws from the
stream ``(seed, b)`` and block results are merged in block order, so a
run is bit-identical for a given seed whatever the number of workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import NoAcceptedSamples, ZeroTotalWeight
from .exact import FULL_TABLE_CAP, PosteriorReport
from .net import Evidence, NoisyOrNet, check_evidence, disease_codes, prob_findings_off, validate

BLOCK_SIZE = 1 << 16
TABLE_CAP = 1 << 16
_MAX_CODE_BITS = 62


@dataclass(frozen=True)
class RngSpec:
    master_seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        # Philox is counter-based; each (seed, stream) pair is an independent stream
        ss = np.random.SeedSequence([int(self.master_seed) & (2**64 - 1), int(self.stream_id)])
        return np.random.Generator(np.random.Philox(ss))


@dataclass
class SampleAccumulator:
    """Running tallies W(d), W_tot and per-disease weights.

    The W(d) table is sparse, keyed by disease code. Once it holds
    ``table_cap`` keys, new keys are no longer recorded and ``truncated``
    is set; marginal tallies stay exact.
    """

    n_diseases: int
    table_cap: int = TABLE_CAP
    w: dict = field(default_factory=dict)
    w_tot: float = 0.0
    w2_tot: float = 0.0
    per_disease_w: np.ndarray = None
    per_disease_w2: np.ndarray = None
    n_drawn: int = 0
    n_accepted: int = 0
    truncated: bool = False

    def __post_init__(self):
        if self.per_disease_w is None:
            self.per_disease_w = np.zeros(self.n_diseases)
        if self.per_disease_w2 is None:
            self.per_disease_w2 = np.zeros(self.n_diseases)
        if self.n_diseases > _MAX_CODE_BITS:
            self.truncated = True

    def add(self, d: np.ndarray, weights: np.ndarray, n_drawn: int) -> None:
        """Record ``n_drawn`` draws of which rows ``d`` carry ``weights``."""
        weights = np.asarray(weights, dtype=float)
        self.n_drawn += int(n_drawn)
        self.n_accepted += int(np.count_nonzero(weights))
        if weights.size == 0:
            return
        self.w_tot += float(weights.sum())
        self.w2_tot += float(weights @ weights)
        self.per_disease_w += weights @ d
        self.per_disease_w2 += (weights * weights) @ d
        if not self.truncated:
            nz = weights > 0
            keys, inv = np.unique(disease_codes(d[nz]), return_inverse=True)
            sums = np.bincount(inv, weights=weights[nz], minlength=keys.size)
            self._add_table(zip(keys.tolist(), sums.tolist()))

    def _add_table(self, items) -> None:
        for key, val in items:
            if key in self.w:
                self.w[key] += val
            elif len(self.w) < self.table_cap:
                self.w[key] = val
            else:
                self.truncated = True

    def merge(self, other: "SampleAccumulator") -> "SampleAccumulator":
        self.n_drawn += other.n_drawn
        self.n_accepted += other.n_accepted
        self.w_tot += other.w_tot
        self.w2_tot += other.w2_tot
        self.per_disease_w += other.per_disease_w
        self.per_disease_w2 += other.per_disease_w2
        self.truncated |= other.truncated
        if not self.truncated:
            self._add_table(sorted(other.w.items()))
        return self

    def marginals(self) -> np.ndarray:
        return self.per_disease_w / self.w_tot

    def posterior_table(self) -> Optional[np.ndarray]:
        if self.truncated or self.w_tot <= 0:
            return None
        out = np.zeros(1 << self.n_diseases)
        for key, val in self.w.items():
            out[key] = val
        return out / self.w_tot


def run_blocks(fn: Callable[[np.random.Generator, int], SampleAccumulator],
               n_sam: int, seed: int, workers: int = 1,
               block_size: int = BLOCK_SIZE) -> SampleAccumulator:
    """Apply ``fn(rng, n)`` to each block and merge results in block order."""
    if n_sam < 1:
        raise ValueError("n_sam must be at least 1")
    sizes = [min(block_size, n_sam - start) for start in range(0, n_sam, block_size)]

    def job(b):
        return fn(RngSpec(seed, b).generator(), sizes[b])

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, range(len(sizes))))
    else:
        parts = [job(b) for b in range(len(sizes))]
    total = parts[0]
    for p in parts[1:]:
        total.merge(p)
    return total


def _draw_diseases(net: NoisyOrNet, rng: np.random.Generator, n: int) -> np.ndarray:
    return (rng.random((n, net.n_diseases)) < net.priors).astype(np.int8)


def _draw_findings(net: NoisyOrNet, rng: np.random.Generator, d: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    off = prob_findings_off(net, d)
    f = (rng.random(off.shape) >= off).astype(np.int8)
    return f, off


def draw_prior_sample(net: NoisyOrNet, rng: np.random.Generator, size: Optional[int] = None):
    """Draw (d, f) from the joint distribution of the net.

    Returns single vectors, or ``(size, N_D)`` and ``(size, N_F)`` arrays
    when ``size`` is given.
    """
    validate(net)
    n = 1 if size is None else size
    d = _draw_diseases(net, rng, n)
    f, _ = _draw_findings(net, rng, d)
    return (d[0], f[0]) if size is None else (d, f)


def evidence_match(f: np.ndarray, ev: Evidence) -> np.ndarray:
    ok = np.ones(f.shape[0], dtype=bool)
    i0, i1 = ev.sorted_i0(), ev.sorted_i1()
    if i0:
        ok &= (f[:, i0] == 0).all(axis=1)
    if i1:
        ok &= (f[:, i1] == 1).all(axis=1)
    return ok


def evidence_likelihood(off: np.ndarray, ev: Evidence) -> np.ndarray:
    """L_evi(d) = prod_{I0} P(f_i=0|d) * prod_{I1} P(f_i=1|d), row-wise."""
    w = np.ones(off.shape[0])
    i0, i1 = ev.sorted_i0(), ev.sorted_i1()
    if i0:
        w = w * np.prod(off[:, i0], axis=1)
    if i1:
        w = w * np.prod(1.0 - off[:, i1], axis=1)
    return w


def report_from_accumulator(acc: SampleAccumulator, method: str, weighted: bool,
                            full_table_cap: int = FULL_TABLE_CAP) -> PosteriorReport:
    """Turn tallies into a report; raises if no weight was collected.

    Standard errors are binomial for rejection and delta-method
    (ratio-estimator) for weighted sampling.
    """
    n = acc.n_drawn
    if weighted:
        mean = acc.w_tot / n
        var = max(acc.w2_tot / n - mean * mean, 0.0)
        ev_prob, ev_se = mean, math.sqrt(var / n)
        ess = acc.w_tot ** 2 / acc.w2_tot if acc.w2_tot > 0 else 0.0
    else:
        ev_prob = acc.n_accepted / n
        ev_se = math.sqrt(ev_prob * (1.0 - ev_prob) / n)
        ess = float(acc.n_accepted)
    report = PosteriorReport(
        method=method, evidence_prob=ev_prob, marginals=None,
        evidence_prob_se=ev_se, n_drawn=n, n_accepted=acc.n_accepted,
        acceptance_rate=acc.n_accepted / n, ess=ess)
    if acc.w_tot <= 0.0:
        if weighted:
            report.diagnosis = f"all {n} sample weights are zero"
            raise ZeroTotalWeight(report.diagnosis, report, acc)
        report.diagnosis = f"0 of {n} samples matched the evidence"
        raise NoAcceptedSamples(report.diagnosis, report, acc)
    marg = acc.marginals()
    if weighted:
        # var(r) ~ sum w^2 (x - r)^2 / W^2 with x binary
        num = acc.per_disease_w2 - 2 * marg * acc.per_disease_w2 + marg ** 2 * acc.w2_tot
        se = np.sqrt(np.maximum(num, 0.0)) / acc.w_tot
    else:
        se = np.sqrt(marg * (1.0 - marg) / acc.n_accepted)
    report.marginals = np.clip(marg, 0.0, 1.0)
    report.marginal_se = se
    if acc.n_diseases <= full_table_cap:
        report.posterior = acc.posterior_table()
    return report


def rejection_sample(net: NoisyOrNet, ev: Evidence, n_sam: int, seed: int = 0,
                     workers: int = 1, full_table_cap: int = FULL_TABLE_CAP,
                     table_cap: int = TABLE_CAP):
    """Draw ``n_sam`` prior samples and keep the ones matching the evidence.

    Returns ``(accumulator, report)``. Raises :class:`NoAcceptedSamples`
    (with the report attached) when nothing is accepted.
    """
    validate(net)
    check_evidence(net, ev)

    def block(rng, n):
        acc = SampleAccumulator(net.n_diseases, table_cap)
        d = _draw_diseases(net, rng, n)
        f, _ = _draw_findings(net, rng, d)
        keep = evidence_match(f, ev)
        acc.add(d[keep], np.ones(int(keep.sum())), n)
        return acc

    acc = run_blocks(block, n_sam, seed, workers)
    return acc, report_from_accumulator(acc, "reject", False, full_table_cap)


def lw_sample(net: NoisyOrNet, ev: Evidence, n_sam: int, seed: int = 0,
              workers: int = 1, full_table_cap: int = FULL_TABLE_CAP,
              table_cap: int = TABLE_CAP):
    """Likelihood weighting: clamp evidence findings, weight by L_evi(d).

    Random numbers are consumed exactly as in :func:`rejection_sample`,
    so with no evidence both return identical estimates for the same seed.
    """
    validate(net)
    check_evidence(net, ev)
    observed = sorted(ev.observed)

    def block(rng, n):
        acc = SampleAccumulator(net.n_diseases, table_cap)
        d = _draw_diseases(net, rng, n)
        f, off = _draw_findings(net, rng, d)
        f[:, ev.sorted_i0()] = 0
        f[:, ev.sorted_i1()] = 1
        w = evidence_likelihood(off, ev) if observed else np.ones(n)
        acc.add(d, w, n)
        return acc

    acc = run_blocks(block, n_sam, seed, workers)
    return acc, report_from_accumulator(acc, "lw", True, full_table_cap)


def marginal_distance(a, b) -> float:
    """Largest per-disease total-variation distance, max_j |a_j - b_j|."""
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b)))) if len(a) else 0.0


def tv_distance(p, q) -> float:
    """Total-variation distance between two distributions on the same support."""
    return 0.5 * float(np.sum(np.abs(np.asarray(p) - np.asarray(q))))
