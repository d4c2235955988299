"""Exact inference: brute-force enumeration and inclusion-exclusion.

The inclusion-exclusion route writes the evidence probability as an
alternating sum over subsets S of the positive findings,

    P(I1, I0) = sum_{S subset I1} (-1)^|S| T(S, I0),

where every T term is a product over diseases and costs O(N_D). The
total cost is O(2^|I1| * N_D) no matter how many negative findings are
observed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import CapExceeded, ImpossibleEvidence, IncompleteTable
from .net import (
    Evidence,
    NoisyOrNet,
    check_evidence,
    disease_bits,
    log_params,
    prob_findings_off,
    validate,
)

BRUTE_CAP = 24
INCL_EXCL_CAP = 26
FULL_TABLE_CAP = 16

_CHUNK_BITS = 16
_LOW_BITS = 12


@dataclass
class PosteriorReport:
    """Posterior over diseases given evidence, exact or estimated.

    ``posterior`` is a dense array indexed by disease code (disease j is
    bit j) and is ``None`` when the table would be too large. Sampling
    backends fill the diagnostic fields; exact ones leave them ``None``.
    """

    method: str
    evidence_prob: Optional[float]
    marginals: Optional[np.ndarray]
    posterior: Optional[np.ndarray] = None
    marginal_se: Optional[np.ndarray] = None
    evidence_prob_se: Optional[float] = None
    n_drawn: Optional[int] = None
    n_accepted: Optional[int] = None
    acceptance_rate: Optional[float] = None
    ess: Optional[float] = None
    diagnosis: Optional[str] = None


@dataclass
class SubsetFunctionTable:
    """A real function on the subsets of ``base_set``.

    ``values[mask]`` is the value on the subset whose members are
    ``base_set[b]`` for every set bit b of ``mask``. Missing entries are NaN.
    """

    base_set: tuple[int, ...]
    values: np.ndarray
    fixed_i0: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        self.base_set = tuple(self.base_set)
        self.values = np.asarray(self.values, dtype=float)
        self.fixed_i0 = frozenset(self.fixed_i0)

    @classmethod
    def from_mapping(cls, base_set: Sequence[int], values: Mapping[int, float], fixed_i0=()):
        size = 1 << len(base_set)
        arr = np.full(size, np.nan)
        for mask, v in values.items():
            if not 0 <= mask < size:
                raise IncompleteTable(f"mask {mask} outside 2^{len(base_set)}")
            arr[mask] = v
        return cls(tuple(base_set), arr, frozenset(fixed_i0))

    def subset(self, mask: int) -> frozenset[int]:
        return frozenset(x for b, x in enumerate(self.base_set) if mask >> b & 1)

    def __getitem__(self, subset) -> float:
        mask = 0
        for x in subset:
            mask |= 1 << self.base_set.index(x)
        return float(self.values[mask])

    def is_complete(self) -> bool:
        return (self.values.shape == (1 << len(self.base_set),)
                and not np.isnan(self.values).any())


def _popcount_parity(n_bits: int) -> np.ndarray:
    masks = np.arange(1 << n_bits, dtype=np.int64)
    parity = np.zeros(masks.size, dtype=np.int8)
    for b in range(n_bits):
        parity ^= ((masks >> b) & 1).astype(np.int8)
    return parity


def _subset_bits(n_bits: int) -> np.ndarray:
    masks = np.arange(1 << n_bits, dtype=np.int64)
    return ((masks[:, None] >> np.arange(n_bits)) & 1).astype(float)


# ---------------------------------------------------------------------------
# brute force
# ---------------------------------------------------------------------------

def _joint_weights(net: NoisyOrNet, ev: Evidence, codes: np.ndarray) -> np.ndarray:
    """P(d, evidence) for each disease code in ``codes``."""
    d = disease_bits(codes, net.n_diseases)
    p = net.priors
    w = np.prod(np.where(d == 1, p, 1.0 - p), axis=1)
    i0, i1 = ev.sorted_i0(), ev.sorted_i1()
    if i0 or i1:
        off = prob_findings_off(net, d)
        if i0:
            w = w * np.prod(off[:, i0], axis=1)
        if i1:
            w = w * np.prod(1.0 - off[:, i1], axis=1)
    return w


def _iter_code_chunks(n_diseases: int):
    total = 1 << n_diseases
    step = 1 << _CHUNK_BITS
    for start in range(0, total, step):
        yield np.arange(start, min(start + step, total), dtype=np.int64)


def _check_brute(net, ev, cap):
    validate(net)
    check_evidence(net, ev)
    if net.n_diseases > cap:
        raise CapExceeded(f"brute force over 2^{net.n_diseases} disease vectors exceeds cap 2^{cap}")


def evidence_prob_brute(net: NoisyOrNet, ev: Evidence, cap: int = BRUTE_CAP) -> float:
    """Sum P(d, evidence) over all 2^N_D disease vectors."""
    _check_brute(net, ev, cap)
    return float(sum(_joint_weights(net, ev, c).sum() for c in _iter_code_chunks(net.n_diseases)))


# ---------------------------------------------------------------------------
# inclusion-exclusion
# ---------------------------------------------------------------------------

def t_func(phi):
    """t(phi) = (1 + exp(-phi)) / 2, the average of exp(-phi*d) over d in {0, 1}."""
    return 0.5 * (1.0 + np.exp(-np.asarray(phi, dtype=float)))


def _log_t(phi: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, -phi) - np.log(2.0)


@dataclass(frozen=True)
class _Kernel:
    """Inputs of the alternating sum for one (possibly clamped) disease set."""

    alpha: np.ndarray        # (m,)
    beta: np.ndarray         # (m,)
    h: np.ndarray            # (N_F, m)
    theta_leak: np.ndarray   # (N_F,)

    def log_t_terms(self, phi: np.ndarray, leak_sum) -> np.ndarray:
        # log T = -alpha - leak + m ln 2 + sum_j ln t(phi_j)
        m = self.alpha.size
        return (-self.alpha.sum() - leak_sum + m * np.log(2.0)
                + _log_t(phi).sum(axis=-1))


def _kernel(net: NoisyOrNet) -> _Kernel:
    lp = log_params(net)
    return _Kernel(lp.alpha, lp.beta, lp.theta, lp.theta_leak)


def _clamped_kernel(k: _Kernel, j: int) -> _Kernel:
    # d_j fixed to 1: drop j from the product, fold theta_ij into the leak
    keep = np.arange(k.alpha.size) != j
    return _Kernel(k.alpha[keep], k.beta[keep], k.h[:, keep], k.theta_leak + k.h[:, j])


def _alternating_sum(k: _Kernel, i0: Sequence[int], i1: Sequence[int]) -> float:
    """sum_S (-1)^|S| T(S, I0) with even/odd buckets.

    Low bits of the subset mask are vectorised; high bits are walked in
    Gray-code order so each step adds or removes one finding's h vector.
    """
    i0 = list(i0)
    i1 = list(i1)
    phi0 = k.beta + k.h[i0].sum(axis=0)
    leak0 = float(k.theta_leak[i0].sum())
    n_low = min(len(i1), _LOW_BITS)
    low, high = i1[:n_low], i1[n_low:]

    bits = _subset_bits(n_low)
    phi_low = bits @ k.h[low] if low else np.zeros((1, k.alpha.size))
    leak_low = bits @ k.theta_leak[low] if low else np.zeros(1)
    odd_low = _popcount_parity(n_low).astype(bool)

    even = 0.0
    odd = 0.0
    phi_acc = phi0.copy()
    leak_acc = leak0
    in_set = np.zeros(len(high), dtype=bool)
    for step in range(1 << len(high)):
        if step:
            b = (step & -step).bit_length() - 1
            i = high[b]
            sign = -1.0 if in_set[b] else 1.0
            in_set[b] = not in_set[b]
            phi_acc = phi_acc + sign * k.h[i]
            leak_acc = leak_acc + sign * k.theta_leak[i]
        terms = np.exp(k.log_t_terms(phi_low + phi_acc, leak_low + leak_acc))
        flip = bool(in_set.sum() & 1)
        odd_mask = odd_low ^ flip
        even += float(terms[~odd_mask].sum())
        odd += float(terms[odd_mask].sum())
    return even - odd


def _check_incl_excl(net, ev, cap):
    validate(net)
    check_evidence(net, ev)
    if len(ev.i1) > cap:
        raise CapExceeded(f"2^{len(ev.i1)} subsets of positive findings exceeds cap 2^{cap}")


def evidence_prob_incl_excl(net: NoisyOrNet, ev: Evidence, cap: int = INCL_EXCL_CAP) -> float:
    """Evidence probability by the alternating subset sum.

    Raises :class:`DegenerateParameter` for priors in {0, 1} or q = 1.
    """
    _check_incl_excl(net, ev, cap)
    return _alternating_sum(_kernel(net), ev.sorted_i0(), ev.sorted_i1())


def t_value(net: NoisyOrNet, s: Sequence[int], i0: Sequence[int]) -> float:
    """T(S, I0) = exp(-alpha - leak) 2^N_D prod_j t(phi_j(I0 u S))."""
    k = _kernel(net)
    a = sorted(set(s) | set(i0))
    phi = k.beta + k.h[a].sum(axis=0)
    return float(np.exp(k.log_t_terms(phi, k.theta_leak[a].sum())))


def t_table(net: NoisyOrNet, ev: Evidence) -> SubsetFunctionTable:
    """T(S, I0) for every S subset of I1."""
    _check_incl_excl(net, ev, INCL_EXCL_CAP)
    k = _kernel(net)
    i0, i1 = ev.sorted_i0(), ev.sorted_i1()
    bits = _subset_bits(len(i1))
    phi = k.beta + k.h[i0].sum(axis=0) + (bits @ k.h[i1] if i1 else 0.0)
    leak = k.theta_leak[i0].sum() + (bits @ k.theta_leak[i1] if i1 else 0.0)
    values = np.exp(k.log_t_terms(np.atleast_2d(phi), leak))
    return SubsetFunctionTable(tuple(i1), values, frozenset(i0))


def p_table_brute(net: NoisyOrNet, ev: Evidence, cap: int = BRUTE_CAP) -> SubsetFunctionTable:
    """P(f_S1 = 1, f_I0 = 0) for every S1 subset of I1, by enumeration."""
    _check_brute(net, ev, cap)
    i1 = ev.sorted_i1()
    values = np.empty(1 << len(i1))
    for mask in range(values.size):
        s1 = frozenset(x for b, x in enumerate(i1) if mask >> b & 1)
        values[mask] = evidence_prob_brute(net, Evidence(ev.i0, s1), cap)
    return SubsetFunctionTable(tuple(i1), values, ev.i0)


def p_matrix_brute(net: NoisyOrNet, ev: Evidence, cap: int = BRUTE_CAP) -> np.ndarray:
    """The full matrix P[S1, S0] over S1 subset I1 and S0 subset I0.

    Rows and columns are indexed by bitmasks over the sorted I1 and I0.
    """
    _check_brute(net, ev, cap)
    i0, i1 = ev.sorted_i0(), ev.sorted_i1()
    out = np.empty((1 << len(i1), 1 << len(i0)))
    for r in range(out.shape[0]):
        s1 = [x for b, x in enumerate(i1) if r >> b & 1]
        for c in range(out.shape[1]):
            s0 = [x for b, x in enumerate(i0) if c >> b & 1]
            out[r, c] = evidence_prob_brute(net, Evidence(s0, s1), cap)
    return out


def product_to_sum_check(f_values: Sequence[float]) -> tuple[float, float]:
    """Both sides of prod_x (1 - e^{-f(x)}) = sum_S (-1)^|S| e^{-sum_{x in S} f(x)}.

    The right side is summed term by term over all subsets, so keep
    ``len(f_values)`` small (at most 20).
    """
    f = np.asarray(f_values, dtype=float)
    if f.size > 20:
        raise CapExceeded("product_to_sum_check supports at most 20 values")
    lhs = float(np.prod(1.0 - np.exp(-f)))
    bits = _subset_bits(f.size)
    signs = np.where(_popcount_parity(f.size) == 1, -1.0, 1.0)
    rhs = float(np.sum(signs * np.exp(-(bits @ f if f.size else np.zeros(1)))))
    return lhs, rhs


# ---------------------------------------------------------------------------
# Mobius inversion between the T and P subset functions
# ---------------------------------------------------------------------------

def _signed_subset_sum(table: SubsetFunctionTable) -> SubsetFunctionTable:
    # out[S'] = sum_{S subset S'} (-1)^|S| in[S]
    if not table.is_complete():
        raise IncompleteTable("subset table is missing entries")
    k = len(table.base_set)
    v = np.where(_popcount_parity(k) == 1, -table.values, table.values)
    for b in range(k):
        view = v.reshape(-1, 2, 1 << b)
        view[:, 1, :] += view[:, 0, :]
    return SubsetFunctionTable(table.base_set, v, table.fixed_i0)


def mobius_forward(t: SubsetFunctionTable) -> SubsetFunctionTable:
    """P(S') = sum_{S subset S'} (-1)^|S| T(S)."""
    return _signed_subset_sum(t)


def mobius_inverse(p: SubsetFunctionTable) -> SubsetFunctionTable:
    """T(S') = sum_{S subset S'} (-1)^|S| P(S); the transform is its own inverse."""
    return _signed_subset_sum(p)


# ---------------------------------------------------------------------------
# posteriors
# ---------------------------------------------------------------------------

def _full_posterior(net: NoisyOrNet, ev: Evidence, evidence_prob: float) -> np.ndarray:
    codes = np.arange(1 << net.n_diseases, dtype=np.int64)
    return _joint_weights(net, ev, codes) / evidence_prob


def posterior_exact(
    net: NoisyOrNet,
    ev: Evidence,
    method: str = "incl_excl",
    full_table_cap: int = FULL_TABLE_CAP,
    cap: Optional[int] = None,
) -> PosteriorReport:
    """Exact posterior report for ``method`` in {"brute", "incl_excl"}.

    Marginals P(d_j = 1 | evidence) are always returned. The full table
    over all disease vectors is included when N_D <= ``full_table_cap``.
    """
    method = method.replace("-", "_")
    if method == "brute":
        _check_brute(net, ev, BRUTE_CAP if cap is None else cap)
        total = 0.0
        marg = np.zeros(net.n_diseases)
        for codes in _iter_code_chunks(net.n_diseases):
            w = _joint_weights(net, ev, codes)
            total += float(w.sum())
            marg += w @ disease_bits(codes, net.n_diseases)
        if total <= 0.0:
            raise ImpossibleEvidence("evidence has probability zero")
        marginals = marg / total
    elif method == "incl_excl":
        _check_incl_excl(net, ev, INCL_EXCL_CAP if cap is None else cap)
        k = _kernel(net)
        i0, i1 = ev.sorted_i0(), ev.sorted_i1()
        total = _alternating_sum(k, i0, i1)
        if total <= 0.0:
            raise ImpossibleEvidence("evidence has probability zero (or lost to cancellation)")
        clamped = np.array([_alternating_sum(_clamped_kernel(k, j), i0, i1)
                            for j in range(net.n_diseases)])
        marginals = net.priors * clamped / total
    else:
        raise ValueError(f"unknown exact method {method!r}")
    posterior = None
    if net.n_diseases <= full_table_cap:
        posterior = _full_posterior(net, ev, total)
    return PosteriorReport(method=method, evidence_prob=total,
                           marginals=np.clip(marginals, 0.0, 1.0), posterior=posterior)
