"""Two-layer noisy-OR network model, evidence sets and pointwise probabilities.

Diseases sit in the top layer with independent Bernoulli priors. Every
finding is a noisy-OR of its parent diseases plus an optional leak term,
which behaves like a parent disease that is always on::

    P(f_i = 0 | d) = (1 - leak_i) * prod_{j in pa(i)} (1 - q_ij) ** d_j

All internal APIs address diseases and findings by index; names only
matter for file I/O.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DegenerateParameter, InvalidNetError, Violation


@dataclass(frozen=True)
class DiseaseSpec:
    name: str
    prior: float


@dataclass(frozen=True)
class EdgeSpec:
    disease_index: int
    q: float


@dataclass(frozen=True)
class FindingSpec:
    name: str
    parents: tuple[EdgeSpec, ...] = ()
    leak: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "parents", tuple(self.parents))


@dataclass(frozen=True)
class NoisyOrNet:
    """Immutable QMR-style network.

    Construction does not validate; call :func:`validate` (every backend
    does so on entry). Derived arrays are computed lazily and cached on
    the instance.
    """

    diseases: tuple[DiseaseSpec, ...]
    findings: tuple[FindingSpec, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "diseases", tuple(self.diseases))
        object.__setattr__(self, "findings", tuple(self.findings))

    @classmethod
    def from_arrays(cls, priors, q, leak=None, disease_names=None, finding_names=None):
        """Build a net from a prior vector and an ``(N_F, N_D)`` q matrix.

        Zero entries of ``q`` mean "no edge".
        """
        priors = np.asarray(priors, dtype=float)
        q = np.asarray(q, dtype=float).reshape(-1, priors.size)
        leak = np.zeros(q.shape[0]) if leak is None else np.asarray(leak, dtype=float)
        disease_names = disease_names or [f"d{j}" for j in range(priors.size)]
        finding_names = finding_names or [f"f{i}" for i in range(q.shape[0])]
        diseases = [DiseaseSpec(n, float(p)) for n, p in zip(disease_names, priors)]
        findings = []
        for i, name in enumerate(finding_names):
            parents = [EdgeSpec(j, float(q[i, j])) for j in np.flatnonzero(q[i])]
            findings.append(FindingSpec(name, tuple(parents), float(leak[i])))
        return cls(tuple(diseases), tuple(findings))

    @property
    def n_diseases(self) -> int:
        return len(self.diseases)

    @property
    def n_findings(self) -> int:
        return len(self.findings)

    @property
    def n_edges(self) -> int:
        return sum(len(f.parents) for f in self.findings)

    @cached_property
    def priors(self) -> np.ndarray:
        return np.array([d.prior for d in self.diseases], dtype=float)

    @cached_property
    def q(self) -> np.ndarray:
        """Dense ``(N_F, N_D)`` activation matrix; absent edges are 0."""
        out = np.zeros((self.n_findings, self.n_diseases))
        for i, f in enumerate(self.findings):
            for e in f.parents:
                out[i, e.disease_index] = e.q
        return out

    @cached_property
    def parent_mask(self) -> np.ndarray:
        out = np.zeros((self.n_findings, self.n_diseases), dtype=bool)
        for i, f in enumerate(self.findings):
            for e in f.parents:
                out[i, e.disease_index] = True
        return out

    @cached_property
    def leak(self) -> np.ndarray:
        return np.array([f.leak for f in self.findings], dtype=float)

    @cached_property
    def _violations(self) -> tuple[Violation, ...]:
        return tuple(find_violations(self))

    def disease_index(self, name: str) -> int:
        for j, d in enumerate(self.diseases):
            if d.name == name:
                return j
        raise KeyError(name)

    def finding_index(self, name: str) -> int:
        for i, f in enumerate(self.findings):
            if f.name == name:
                return i
        raise KeyError(name)


@dataclass(frozen=True)
class Evidence:
    """Findings observed negative (``i0``) and positive (``i1``).

    Every other finding is unobserved.
    """

    i0: frozenset[int] = field(default_factory=frozenset)
    i1: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "i0", frozenset(int(i) for i in self.i0))
        object.__setattr__(self, "i1", frozenset(int(i) for i in self.i1))

    @classmethod
    def from_names(cls, net: NoisyOrNet, positive=(), negative=()):
        missing = [n for n in (*positive, *negative) if n not in {f.name for f in net.findings}]
        if missing:
            raise InvalidNetError(
                [Violation("UnknownFinding", repr(n)) for n in missing])
        ev = cls(frozenset(net.finding_index(n) for n in negative),
                 frozenset(net.finding_index(n) for n in positive))
        check_evidence(net, ev)
        return ev

    @property
    def observed(self) -> frozenset[int]:
        return self.i0 | self.i1

    def unknown(self, n_findings: int) -> list[int]:
        return [i for i in range(n_findings) if i not in self.i0 and i not in self.i1]

    def sorted_i0(self) -> list[int]:
        return sorted(self.i0)

    def sorted_i1(self) -> list[int]:
        return sorted(self.i1)


def find_violations(net: NoisyOrNet) -> list[Violation]:
    """Return every invariant violation in ``net`` (empty when valid)."""
    out: list[Violation] = []
    if net.n_diseases < 1:
        out.append(Violation("NoDiseases", "net", "at least one disease is required"))
    seen = set()
    for j, d in enumerate(net.diseases):
        if not 0.0 <= d.prior <= 1.0:
            out.append(Violation("PriorOutOfRange", d.name, f"prior={d.prior!r}"))
        if d.name in seen:
            out.append(Violation("DuplicateName", d.name, f"disease {j}"))
        seen.add(d.name)
    for i, f in enumerate(net.findings):
        if f.name in seen:
            out.append(Violation("DuplicateName", f.name, f"finding {i}"))
        seen.add(f.name)
        if not 0.0 <= f.leak < 1.0:
            out.append(Violation("QOutOfRange", f"{f.name}.leak", f"leak={f.leak!r}"))
        parents = set()
        for e in f.parents:
            where = f"{f.name}<-{e.disease_index}"
            if not 0 <= e.disease_index < net.n_diseases:
                out.append(Violation("BadParentIndex", where))
            elif e.disease_index in parents:
                out.append(Violation("DuplicateEdge", where))
            parents.add(e.disease_index)
            if not 0.0 <= e.q <= 1.0:
                out.append(Violation("QOutOfRange", where, f"q={e.q!r}"))
    return out


def validate(net: NoisyOrNet) -> None:
    """Raise :class:`InvalidNetError` listing all violations, if any."""
    violations = net._violations
    if violations:
        raise InvalidNetError(violations)


def check_evidence(net: NoisyOrNet, ev: Evidence) -> None:
    out = []
    for i in sorted(ev.i0 & ev.i1):
        out.append(Violation("EvidenceOverlap", f"finding {i}"))
    for i in sorted(ev.observed):
        if not 0 <= i < net.n_findings:
            out.append(Violation("BadFindingIndex", f"finding {i}"))
    if out:
        raise InvalidNetError(out)


def prob_finding_given_diseases(net: NoisyOrNet, i: int, d: Sequence[int], f: int) -> float:
    """P(f_i = f | d) for a single finding and disease assignment."""
    finding = net.findings[i]
    qs = [e.q for e in finding.parents if d[e.disease_index]]
    if finding.leak < 1.0 and all(q < 1.0 for q in qs):
        theta = -np.log1p(-finding.leak) - sum(np.log1p(-q) for q in qs)
        off = float(np.exp(-theta))
    else:
        off = (1.0 - finding.leak) * float(np.prod([1.0 - q for q in qs]))
    return off if f == 0 else 1.0 - off


def prob_findings_off(net: NoisyOrNet, d: np.ndarray) -> np.ndarray:
    """Vectorised P(f_i = 0 | d) for a batch of disease vectors.

    ``d`` has shape ``(n, N_D)``; the result has shape ``(n, N_F)``.
    Edges with q = 1 are handled exactly (an active parent forces the
    finding on) rather than through an infinite log weight.
    """
    d = np.asarray(d, dtype=float)
    q = net.q
    hard = q >= 1.0
    theta = np.where(hard, 0.0, -np.log1p(-np.where(hard, 0.0, q)))
    off = np.exp(-(d @ theta.T) + np.log1p(-net.leak))
    if hard.any():
        off = np.where(d @ hard.T.astype(float) > 0, 0.0, off)
    return off


def joint_prob(net: NoisyOrNet, d: Sequence[int], f: Sequence[int]) -> float:
    """P(d, f) = prod_j P(d_j) * prod_i P(f_i | d)."""
    d = np.asarray(d, dtype=int)
    f = np.asarray(f, dtype=int)
    if d.shape != (net.n_diseases,) or f.shape != (net.n_findings,):
        raise ValueError("assignment lengths do not match the net")
    p = float(np.prod(np.where(d == 1, net.priors, 1.0 - net.priors)))
    if net.n_findings:
        off = prob_findings_off(net, d[None, :])[0]
        p *= float(np.prod(np.where(f == 0, off, 1.0 - off)))
    return p


class LogParams(NamedTuple):
    theta: np.ndarray       # (N_F, N_D), 0 where no edge
    theta_leak: np.ndarray  # (N_F,)
    alpha: np.ndarray       # (N_D,)
    beta: np.ndarray        # (N_D,)


def log_params(net: NoisyOrNet) -> LogParams:
    """Exponential reparameterisation used by the inclusion-exclusion backend.

    ``exp(-alpha_j) = P(d_j=0)``, ``exp(-alpha_j - beta_j) = P(d_j=1)`` and
    ``theta_ij = -ln(1 - q_ij)``. Priors of exactly 0 or 1 and q = 1 have
    no finite representation and raise :class:`DegenerateParameter`.
    """
    cached = net.__dict__.get("_log_params")
    if cached is not None:
        return cached
    p = net.priors
    bad_p = [net.diseases[j].name for j in np.flatnonzero((p <= 0.0) | (p >= 1.0))]
    bad_q = [f"{net.findings[i].name}<-{net.diseases[j].name}"
             for i, j in zip(*np.nonzero(net.q >= 1.0))]
    if bad_p or bad_q:
        raise DegenerateParameter(
            "no finite log parameters for "
            + ", ".join([f"prior of {n}" for n in bad_p] + [f"q of {e}" for e in bad_q]))
    params = LogParams(
        theta=-np.log1p(-net.q),
        theta_leak=-np.log1p(-net.leak),
        alpha=-np.log1p(-p),
        beta=np.log1p(-p) - np.log(p),
    )
    net.__dict__["_log_params"] = params
    return params


def disease_bits(codes: np.ndarray, n: int) -> np.ndarray:
    """Expand integer disease codes into an ``(len(codes), n)`` 0/1 array.

    Disease j is bit j of the code (little-endian).
    """
    codes = np.asarray(codes, dtype=np.int64)
    return ((codes[:, None] >> np.arange(n, dtype=np.int64)) & 1).astype(np.int8)


def disease_codes(d: np.ndarray) -> np.ndarray:
    d = np.asarray(d, dtype=np.int64)
    return d @ (np.int64(1) << np.arange(d.shape[1], dtype=np.int64))
