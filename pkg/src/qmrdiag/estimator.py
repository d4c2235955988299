"""scikit-learn style front end.

``NoisyOrDiagnoser`` is fitted on a net (nothing is learned; fitting
validates the net and caches derived quantities) and then maps evidence
rows to per-disease posterior marginals::

    >>> diag = NoisyOrDiagnoser(method="incl-excl").fit(net)
    >>> diag.predict_proba([[1, -1, 0]])      # f0 positive, f1 unknown, f2 negative

Evidence rows have one entry per finding: 1 (observed positive),
0 (observed negative), or -1 / NaN (unobserved).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .backends import METHODS, run_method
from .exact import FULL_TABLE_CAP
from .fileio import load_net, parse_net
from .net import Evidence, NoisyOrNet, log_params, validate
from .qcircuit import QUBIT_CAP, build_circuit


def check_net(net) -> NoisyOrNet:
    """Accept a :class:`NoisyOrNet`, a decoded net dict, or a file path."""
    if isinstance(net, NoisyOrNet):
        validate(net)
        return net
    if isinstance(net, dict):
        return parse_net(net)
    return load_net(net)


def check_evidence_array(E, n_findings: int) -> list[Evidence]:
    """Convert evidence rows (or Evidence objects) into a list of Evidence."""
    if isinstance(E, Evidence):
        E = [E]
    if isinstance(E, (list, tuple)) and E and all(isinstance(e, Evidence) for e in E):
        for e in E:
            if any(not 0 <= i < n_findings for i in e.observed) or e.i0 & e.i1:
                raise ValueError(f"evidence {e} does not fit {n_findings} findings")
        return list(E)
    arr = np.asarray(E, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D evidence array, got shape {arr.shape}")
    if arr.shape[1] != n_findings:
        raise ValueError(f"evidence has {arr.shape[1]} columns, net has {n_findings} findings")
    unknown = np.isnan(arr) | (arr == -1)
    bad = ~unknown & (arr != 0) & (arr != 1)
    if bad.any():
        raise ValueError("evidence entries must be 0, 1, -1 or NaN")
    return [Evidence(frozenset(np.flatnonzero(row == 0).tolist()),
                     frozenset(np.flatnonzero(row == 1).tolist())) for row in arr]


class NoisyOrDiagnoser(TransformerMixin, BaseEstimator):
    """Posterior disease marginals for evidence rows.

    Parameters
    ----------
    method : {"brute", "incl-excl", "reject", "lw", "q-reject", "q-lw"}
    n_samples : int
        Draws per evidence row for the sampling methods.
    random_state : int
        Master seed; row ``r`` samples from the seed derived from
        ``(random_state, r)``.
    n_jobs : int
        Worker threads per sampling run. Results do not depend on it.
    full_table_cap, qubit_cap : int
        Size caps forwarded to the backends.
    """

    def __init__(self, method="incl-excl", n_samples=100_000, random_state=0, n_jobs=1,
                 full_table_cap=FULL_TABLE_CAP, qubit_cap=QUBIT_CAP):
        self.method = method
        self.n_samples = n_samples
        self.random_state = random_state
        self.n_jobs = n_jobs
        self.full_table_cap = full_table_cap
        self.qubit_cap = qubit_cap

    def fit(self, X, y=None):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        net = check_net(X)
        if self.method == "incl-excl":
            log_params(net)
        elif self.method in ("q-reject", "q-lw"):
            build_circuit(net, self.qubit_cap)
        self.net_ = net
        self.n_features_in_ = net.n_findings
        self.disease_names_ = np.array([d.name for d in net.diseases])
        self.finding_names_ = np.array([f.name for f in net.findings])
        return self

    def _row_seed(self, r: int) -> int:
        ss = np.random.SeedSequence([int(self.random_state), r])
        return int(ss.generate_state(1, dtype=np.uint64)[0])

    def posterior_reports(self, E):
        check_is_fitted(self, "net_")
        rows = check_evidence_array(E, self.net_.n_findings)
        return [
            run_method(self.net_, ev, self.method, self.n_samples, self._row_seed(r),
                       self.n_jobs, self.full_table_cap, self.qubit_cap)
            for r, ev in enumerate(rows)
        ]

    def predict_proba(self, E) -> np.ndarray:
        """``(n_rows, N_D)`` array of P(d_j = 1 | evidence row)."""
        return np.vstack([rep.marginals for rep in self.posterior_reports(E)])

    def transform(self, E) -> np.ndarray:
        return self.predict_proba(E)

    def predict(self, E, threshold=0.5) -> np.ndarray:
        return (self.predict_proba(E) >= threshold).astype(int)

    def score_samples(self, E) -> np.ndarray:
        """Log probability of each evidence row (estimated for samplers)."""
        with np.errstate(divide="ignore"):
            return np.log([rep.evidence_prob for rep in self.posterior_reports(E)])
