"""Name-based dispatch over the six inference backends."""

from __future__ import annotations

from . import exact, qcircuit, sampler

METHODS = ("brute", "incl-excl", "reject", "lw", "q-reject", "q-lw")
EXACT_METHODS = ("brute", "incl-excl")
BACKENDS = {"brute": "exact", "incl-excl": "exact", "reject": "classical",
            "lw": "classical", "q-reject": "quantum", "q-lw": "quantum"}


def run_method(net, ev, method, n_sam=100_000, seed=0, workers=1,
               full_table_cap=exact.FULL_TABLE_CAP, qubit_cap=qcircuit.QUBIT_CAP):
    """Run ``method`` and return its :class:`~qmrdiag.exact.PosteriorReport`."""
    if method in EXACT_METHODS:
        return exact.posterior_exact(net, ev, method, full_table_cap=full_table_cap)
    kw = dict(seed=seed, workers=workers, full_table_cap=full_table_cap)
    if method == "reject":
        return sampler.rejection_sample(net, ev, n_sam, **kw)[1]
    if method == "lw":
        return sampler.lw_sample(net, ev, n_sam, **kw)[1]
    if method == "q-reject":
        return qcircuit.quantum_rejection(net, ev, n_sam, qubit_cap=qubit_cap, **kw)[1]
    if method == "q-lw":
        return qcircuit.quantum_lw(net, ev, n_sam, qubit_cap=qubit_cap, **kw)[1]
    raise ValueError(f"unknown method {method!r}")
