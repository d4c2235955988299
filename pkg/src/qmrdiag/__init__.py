"""Noisy-OR / QMR-style diagnosis with exact, classical and quantum-circuit backends."""

from .errors import (
    CapExceeded,
    DegenerateParameter,
    ImpossibleEvidence,
    IncompleteTable,
    InvalidNetError,
    NoAcceptedSamples,
    QmrError,
    ZeroTotalWeight,
)
from .estimator import NoisyOrDiagnoser
from .fileio import dump_net, load_evidence, load_net, save_net
from .generate import random_evidence, random_net
from .exact import PosteriorReport, evidence_prob_brute, evidence_prob_incl_excl, posterior_exact
from .net import DiseaseSpec, EdgeSpec, Evidence, FindingSpec, NoisyOrNet, validate
from .qcircuit import quantum_lw, quantum_rejection
from .sampler import lw_sample, rejection_sample

__all__ = [
    "CapExceeded",
    "DegenerateParameter",
    "DiseaseSpec",
    "EdgeSpec",
    "Evidence",
    "FindingSpec",
    "ImpossibleEvidence",
    "IncompleteTable",
    "InvalidNetError",
    "NoAcceptedSamples",
    "NoisyOrDiagnoser",
    "NoisyOrNet",
    "PosteriorReport",
    "QmrError",
    "ZeroTotalWeight",
    "dump_net",
    "evidence_prob_brute",
    "evidence_prob_incl_excl",
    "load_evidence",
    "load_net",
    "lw_sample",
    "posterior_exact",
    "quantum_lw",
    "quantum_rejection",
    "random_evidence",
    "random_net",
    "rejection_sample",
    "save_net",
    "validate",
]
