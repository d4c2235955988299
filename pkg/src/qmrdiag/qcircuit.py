"""Quantum-circuit embedding of a noisy-OR net and statevector sampling.

Circuit layout (qubit 0 is the most significant bit of an amplitude
index, and the top wire of a circuit diagram):

* one qubit per disease, rotated from |0> by ``U_j`` so that measuring
  it gives the prior;
* one ancilla per (finding, parent) edge. ``A_ij`` rotates the ancilla
  by the edge angle (q_ij = sin^2) when the disease qubit is |1>, making
  the ancilla a noisy copy d'_ij of the disease;
* for a finding with a leak, a source qubit held at |1> plus its own edge
  ancilla, acting as an always-on parent;
* one qubit per finding, flipped (with phase i) by ``A_OR`` unless all of
  its parent ancillas are |0>.

Measuring (disease qubits, finding qubits) and ignoring the ancillas
reproduces the joint distribution of the net exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import CapExceeded
from .exact import FULL_TABLE_CAP
from .net import Evidence, NoisyOrNet, check_evidence, prob_findings_off, validate
from .sampler import (
    TABLE_CAP,
    SampleAccumulator,
    evidence_likelihood,
    evidence_match,
    report_from_accumulator,
    run_blocks,
)

QUBIT_CAP = 24

PREPARE = "prepare_U"
EMBED = "embed_A"
OR = "or_A_OR"

_X = np.array([[0, 1], [1, 0]], dtype=complex)


@dataclass(frozen=True)
class QubitLayout:
    disease_qubits: tuple[int, ...]
    edge_ancillas: dict                 # (finding i, disease j) -> qubit
    finding_qubits: tuple[int, ...]
    leak_sources: dict = field(default_factory=dict)    # finding i -> qubit held at |1>
    leak_ancillas: dict = field(default_factory=dict)   # finding i -> qubit
    initial: tuple[int, ...] = ()

    @property
    def n_qubits(self) -> int:
        return (len(self.disease_qubits) + len(self.edge_ancillas) + len(self.finding_qubits)
                + len(self.leak_sources) + len(self.leak_ancillas))

    def parent_ancillas(self, i: int) -> tuple[int, ...]:
        qs = [q for (fi, _), q in self.edge_ancillas.items() if fi == i]
        if i in self.leak_ancillas:
            qs.append(self.leak_ancillas[i])
        return tuple(qs)


@dataclass(frozen=True)
class Gate:
    """One circuit element.

    ``targets`` are ordered as the rows/columns of :func:`gate_matrix`:
    ``(qubit,)`` for U, ``(ancilla, disease)`` for A, and ``(finding,)``
    for A_OR, whose ``controls`` are the parent ancillas.
    """

    kind: str
    targets: tuple[int, ...]
    controls: tuple[int, ...] = ()
    prior: Optional[float] = None
    q: Optional[float] = None
    label: str = ""

    @property
    def angle(self) -> float:
        return float(np.arcsin(np.sqrt(self.q)))

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.targets + self.controls


@dataclass
class StateVector:
    amplitudes: np.ndarray
    n_qubits: int

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.sqrt(self.probabilities().sum()))

    def marginal(self, qubits: Sequence[int]) -> np.ndarray:
        """Distribution of the listed qubits; the first listed is the MSB."""
        probs = self.probabilities().reshape((2,) * self.n_qubits)
        others = tuple(q for q in range(self.n_qubits) if q not in qubits)
        summed = probs.sum(axis=others)
        kept = sorted(qubits)
        order = [kept.index(q) for q in qubits]
        return np.transpose(summed, order).reshape(-1)


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def _layout(net: NoisyOrNet, initial_findings=None) -> QubitLayout:
    nxt = 0

    def take():
        nonlocal nxt
        nxt += 1
        return nxt - 1

    diseases = tuple(take() for _ in range(net.n_diseases))
    edges = {}
    for i, f in enumerate(net.findings):
        for e in f.parents:
            edges[(i, e.disease_index)] = take()
    sources, leak_anc = {}, {}
    for i, f in enumerate(net.findings):
        if f.leak > 0:
            sources[i] = take()
            leak_anc[i] = take()
    findings = tuple(take() for _ in range(net.n_findings))
    initial = [0] * nxt
    for q in sources.values():
        initial[q] = 1
    for i, bit in (initial_findings or {}).items():
        initial[findings[i]] = bit
    return QubitLayout(diseases, edges, findings, sources, leak_anc, tuple(initial))


def build_circuit(net: NoisyOrNet, qubit_cap: int = QUBIT_CAP):
    """Return ``(layout, gates)`` for the embedding circuit of ``net``.

    Gates are listed in time order: every U, then every A (edges, then
    leaks), then one A_OR per finding.
    """
    validate(net)
    layout = _layout(net)
    if layout.n_qubits > qubit_cap:
        raise CapExceeded(f"circuit needs {layout.n_qubits} qubits, cap is {qubit_cap}")
    gates = [Gate(PREPARE, (q,), prior=d.prior, label=f"U[{d.name}]")
             for q, d in zip(layout.disease_qubits, net.diseases)]
    for i, f in enumerate(net.findings):
        for e in f.parents:
            gates.append(Gate(EMBED, (layout.edge_ancillas[(i, e.disease_index)],
                                      layout.disease_qubits[e.disease_index]),
                              q=e.q, label=f"A[{f.name},{net.diseases[e.disease_index].name}]"))
    for i, f in enumerate(net.findings):
        if i in layout.leak_sources:
            gates.append(Gate(EMBED, (layout.leak_ancillas[i], layout.leak_sources[i]),
                              q=f.leak, label=f"A[{f.name},leak]"))
    for i, f in enumerate(net.findings):
        gates.append(Gate(OR, (layout.finding_qubits[i],), layout.parent_ancillas(i),
                          label=f"A_OR[{f.name}]"))
    return layout, gates


def build_lw_circuit(net: NoisyOrNet, ev: Evidence, qubit_cap: int = QUBIT_CAP):
    """Embedding circuit modified for likelihood weighting.

    Positive findings start in |1>, negative ones in |0>, and every gate
    that targets an observed finding (its A_OR) is dropped. Gates that
    only use a finding as a control would stay, but none exist here.
    """
    layout, gates = build_circuit(net, qubit_cap)
    check_evidence(net, ev)
    clamp = {i: 0 for i in ev.i0} | {i: 1 for i in ev.i1}
    layout = _layout(net, clamp)
    observed = {layout.finding_qubits[i] for i in ev.observed}
    gates = [g for g in gates if not set(g.targets) & observed]
    return layout, gates


# ---------------------------------------------------------------------------
# matrices
# ---------------------------------------------------------------------------

def u_matrix(prior: float) -> np.ndarray:
    a, b = np.sqrt(1.0 - prior), np.sqrt(prior)
    return np.array([[a, -b], [b, a]], dtype=complex)


def _rotation(q: float) -> np.ndarray:
    c, s = np.sqrt(1.0 - q), np.sqrt(q)
    return np.array([[c, -s], [s, c]], dtype=complex)


def a_matrix(q: float) -> np.ndarray:
    """4x4 embedding of P(d'|d); basis index is 2*ancilla + disease."""
    r = _rotation(q)
    m = np.zeros((4, 4), dtype=complex)
    m[0, 0] = m[2, 2] = 1.0
    # disease = 1 columns (01, 11) rotate the ancilla bit
    for out_a in (0, 1):
        for in_a in (0, 1):
            m[2 * out_a + 1, 2 * in_a + 1] = r[out_a, in_a]
    return m


def a_or_matrix(n_parents: int) -> np.ndarray:
    """A_OR on (finding, parent_1..parent_k), finding qubit most significant.

    Built as ``iX(finding) @ C0(-iX(finding))`` where the second factor
    acts only when every parent is |0>.
    """
    dim = 1 << n_parents
    ix = np.kron(1j * _X, np.eye(dim))
    ctrl = np.eye(2 * dim, dtype=complex)
    block = -1j * _X
    for r in (0, 1):
        for c in (0, 1):
            ctrl[r * dim, c * dim] = block[r, c]
    return ix @ ctrl


def gate_matrix(g: Gate) -> np.ndarray:
    if g.kind == PREPARE:
        return u_matrix(g.prior)
    if g.kind == EMBED:
        return a_matrix(g.q)
    if g.kind == OR:
        return a_or_matrix(len(g.controls))
    raise ValueError(f"unknown gate kind {g.kind!r}")


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------

def _apply_1q(state: np.ndarray, mat: np.ndarray, target: int, controls: dict) -> None:
    """In place: apply ``mat`` to ``target`` on the slice where controls match."""
    idx = [slice(None)] * state.ndim
    for q, v in controls.items():
        idx[q] = v
    idx = tuple(idx)
    axis = target - sum(1 for q in controls if q < target)
    sub = state[idx]
    state[idx] = np.moveaxis(np.tensordot(mat, sub, axes=([1], [axis])), 0, axis)


def apply_matrix(state: np.ndarray, mat: np.ndarray, qubits: Sequence[int]) -> np.ndarray:
    """Apply a dense ``2^k x 2^k`` matrix to ``qubits`` of a ``(2,)*n`` tensor.

    The first listed qubit is the most significant bit of ``mat``'s index.
    """
    k = len(qubits)
    t = mat.reshape((2,) * (2 * k))
    out = np.tensordot(t, state, axes=(list(range(k, 2 * k)), list(qubits)))
    return np.moveaxis(out, list(range(k)), list(qubits))


def _basis_state(n: int, initial: Sequence[int]) -> np.ndarray:
    state = np.zeros((2,) * n, dtype=complex)
    state[tuple(initial) if initial else (0,) * n] = 1.0
    return state


def simulate(layout: QubitLayout, gates: Sequence[Gate], initial: Optional[Sequence[int]] = None,
             qubit_cap: int = QUBIT_CAP) -> StateVector:
    """Apply ``gates`` in order to the product basis state ``initial``.

    Controlled gates act natively on the slice of the state where the
    controls hold; nothing is decomposed.
    """
    n = layout.n_qubits
    if n > qubit_cap:
        raise CapExceeded(f"{n} qubits exceeds cap {qubit_cap}")
    state = _basis_state(n, layout.initial if initial is None else initial)
    for g in gates:
        if g.kind == PREPARE:
            _apply_1q(state, u_matrix(g.prior), g.targets[0], {})
        elif g.kind == EMBED:
            anc, dis = g.targets
            _apply_1q(state, _rotation(g.q), anc, {dis: 1})
        elif g.kind == OR:
            tau = g.targets[0]
            _apply_1q(state, 1j * _X, tau, {})
            _apply_1q(state, -1j * _X, tau, {c: 0 for c in g.controls})
        else:
            raise ValueError(f"unknown gate kind {g.kind!r}")
    return StateVector(state.reshape(-1), n)


def simulate_dense(layout: QubitLayout, gates: Sequence[Gate],
                   initial: Optional[Sequence[int]] = None) -> StateVector:
    """Reference simulator that applies each gate's full matrix."""
    n = layout.n_qubits
    state = _basis_state(n, layout.initial if initial is None else initial)
    for g in gates:
        state = apply_matrix(state, gate_matrix(g), g.qubits)
    return StateVector(state.reshape(-1), n)


# ---------------------------------------------------------------------------
# measurement
# ---------------------------------------------------------------------------

class AliasTable:
    """Vose's alias method over the support of a discrete distribution."""

    def __init__(self, probs):
        probs = np.asarray(probs, dtype=float)
        support = np.flatnonzero(probs > 0)
        if support.size == 0:
            raise ValueError("distribution has no mass")
        p = probs[support] / probs[support].sum()
        m = support.size
        scaled = (p * m).tolist()
        prob = [1.0] * m
        alias = list(range(m))
        small = [i for i, v in enumerate(scaled) if v < 1.0]
        large = [i for i, v in enumerate(scaled) if v >= 1.0]
        while small and large:
            s, g = small.pop(), large.pop()
            prob[s] = scaled[s]
            alias[s] = g
            scaled[g] = scaled[g] + scaled[s] - 1.0
            (small if scaled[g] < 1.0 else large).append(g)
        # leftovers are 1 up to rounding
        self.support = support
        self.prob = np.array(prob)
        self.alias = np.array(alias, dtype=np.int64)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        col = rng.integers(0, self.support.size, size=n)
        u = rng.random(n)
        pick = np.where(u < self.prob[col], col, self.alias[col])
        return self.support[pick]


def extract_bits(indices: np.ndarray, qubits: Sequence[int], n_qubits: int) -> np.ndarray:
    """``(len(indices), len(qubits))`` bit array read from basis indices."""
    shifts = n_qubits - 1 - np.asarray(qubits, dtype=np.int64)
    return ((np.asarray(indices, dtype=np.int64)[:, None] >> shifts) & 1).astype(np.int8)


def measure_indices(sv: StateVector, n_sam: int, rng: np.random.Generator,
                    table: Optional[AliasTable] = None) -> np.ndarray:
    """Born-rule draws of basis-state indices (i.i.d., one statevector build)."""
    table = table or AliasTable(sv.probabilities())
    return table.sample(rng, n_sam)


def measure_samples(sv: StateVector, n_sam: int, rng: np.random.Generator) -> np.ndarray:
    """Born-rule draws as an ``(n_sam, n_qubits)`` bit array, qubit 0 first."""
    idx = measure_indices(sv, n_sam, rng)
    return extract_bits(idx, range(sv.n_qubits), sv.n_qubits)


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------

def quantum_rejection(net: NoisyOrNet, ev: Evidence, n_sam: int, seed: int = 0,
                      workers: int = 1, qubit_cap: int = QUBIT_CAP,
                      full_table_cap: int = FULL_TABLE_CAP, table_cap: int = TABLE_CAP):
    """Rejection sampling with samples measured from the embedding circuit.

    Returns ``(accumulator, report)``.
    """
    check_evidence(net, ev)
    layout, gates = build_circuit(net, qubit_cap)
    sv = simulate(layout, gates, qubit_cap=qubit_cap)
    table = AliasTable(sv.probabilities())
    n = layout.n_qubits

    def block(rng, size):
        acc = SampleAccumulator(net.n_diseases, table_cap)
        idx = table.sample(rng, size)
        d = extract_bits(idx, layout.disease_qubits, n)
        f = extract_bits(idx, layout.finding_qubits, n)
        keep = evidence_match(f, ev)
        acc.add(d[keep], np.ones(int(keep.sum())), size)
        return acc

    acc = run_blocks(block, n_sam, seed, workers)
    return acc, report_from_accumulator(acc, "q-reject", False, full_table_cap)


def quantum_lw(net: NoisyOrNet, ev: Evidence, n_sam: int, seed: int = 0,
               workers: int = 1, qubit_cap: int = QUBIT_CAP,
               full_table_cap: int = FULL_TABLE_CAP, table_cap: int = TABLE_CAP):
    """Likelihood weighting with diseases measured from the modified circuit.

    The weight L_evi(d) is evaluated classically from the measured disease
    bits. Returns ``(accumulator, report)``.
    """
    layout, gates = build_lw_circuit(net, ev, qubit_cap)
    sv = simulate(layout, gates, qubit_cap=qubit_cap)
    table = AliasTable(sv.probabilities())
    n = layout.n_qubits
    observed = bool(ev.observed)

    def block(rng, size):
        acc = SampleAccumulator(net.n_diseases, table_cap)
        idx = table.sample(rng, size)
        d = extract_bits(idx, layout.disease_qubits, n)
        w = evidence_likelihood(prob_findings_off(net, d), ev) if observed else np.ones(size)
        acc.add(d, w, size)
        return acc

    acc = run_blocks(block, n_sam, seed, workers)
    return acc, report_from_accumulator(acc, "q-lw", True, full_table_cap)


def dump_circuit(layout: QubitLayout, gates: Sequence[Gate]) -> str:
    """One line per gate: kind, targets, controls, parameters."""
    lines = [f"# qubits={layout.n_qubits} initial={''.join(map(str, layout.initial))}"]
    for g in gates:
        params = []
        if g.prior is not None:
            params.append(f"prior={g.prior!r}")
        if g.q is not None:
            params.append(f"q={g.q!r} alpha={g.angle!r}")
        lines.append(" ".join([
            g.kind,
            "targets=" + ",".join(map(str, g.targets)),
            "controls=" + ",".join(map(str, g.controls)),
            *params,
            g.label,
        ]).rstrip())
    return "\n".join(lines) + "\n"
