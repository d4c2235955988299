"""Net and evidence files.

Files are JSON or YAML (any YAML parser reads both). The canonical form
written by :func:`dump_net` is JSON with a fixed key order::

    {"schema_version": 1,
     "diseases": [{"name": "d0", "prior": 0.1}, ...],
     "findings": [{"name": "f0", "leak": 0.0,
                   "parents": [{"disease": "d0", "q": 0.3}, ...]}, ...]}

Evidence files list finding names::

    {"positive": ["f0"], "negative": ["f2"]}
"""

from __future__ import annotations

import json
from pathlib import Path

import yaml

from .errors import InvalidNetError, Violation
from .net import DiseaseSpec, EdgeSpec, Evidence, FindingSpec, NoisyOrNet, find_violations

SCHEMA_VERSION = 1


def _read(path) -> object:
    text = Path(path).read_text()
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise InvalidNetError([Violation("ParseError", str(path), str(exc).splitlines()[0])])


def parse_net(data) -> NoisyOrNet:
    """Build and validate a net from a decoded file; names become indices."""
    problems = []
    if not isinstance(data, dict):
        raise InvalidNetError([Violation("SchemaError", "root", "expected a mapping")])
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        problems.append(Violation("SchemaError", "schema_version", f"unsupported {version!r}"))
    try:
        diseases = [DiseaseSpec(str(d["name"]), float(d["prior"])) for d in data.get("diseases") or []]
        index = {}
        for j, d in enumerate(diseases):
            index.setdefault(d.name, j)
        findings = []
        for f in data.get("findings") or []:
            parents = []
            for p in f.get("parents") or []:
                name = str(p["disease"])
                if name not in index:
                    problems.append(Violation("BadParentIndex", f"{f['name']}<-{name}",
                                              "unknown disease"))
                    continue
                parents.append(EdgeSpec(index[name], float(p["q"])))
            findings.append(FindingSpec(str(f["name"]), tuple(parents), float(f.get("leak", 0.0))))
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise InvalidNetError(problems + [Violation("SchemaError", "net", f"bad or missing field: {exc}")])
    net = NoisyOrNet(tuple(diseases), tuple(findings))
    problems.extend(find_violations(net))
    if problems:
        raise InvalidNetError(problems)
    return net


def net_to_dict(net: NoisyOrNet) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "diseases": [{"name": d.name, "prior": d.prior} for d in net.diseases],
        "findings": [
            {
                "name": f.name,
                "leak": f.leak,
                "parents": [{"disease": net.diseases[e.disease_index].name, "q": e.q}
                            for e in f.parents],
            }
            for f in net.findings
        ],
    }


def dump_net(net: NoisyOrNet) -> str:
    return json.dumps(net_to_dict(net), indent=2) + "\n"


def load_net(path) -> NoisyOrNet:
    return parse_net(_read(path))


def save_net(net: NoisyOrNet, path) -> None:
    Path(path).write_text(dump_net(net))


def parse_evidence(data, net: NoisyOrNet) -> Evidence:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise InvalidNetError([Violation("SchemaError", "evidence", "expected a mapping")])
    pos = [str(n) for n in data.get("positive") or []]
    neg = [str(n) for n in data.get("negative") or []]
    both = sorted(set(pos) & set(neg))
    if both:
        raise InvalidNetError([Violation("EvidenceOverlap", n) for n in both])
    return Evidence.from_names(net, positive=pos, negative=neg)


def evidence_to_dict(net: NoisyOrNet, ev: Evidence) -> dict:
    return {
        "positive": [net.findings[i].name for i in ev.sorted_i1()],
        "negative": [net.findings[i].name for i in ev.sorted_i0()],
    }


def load_evidence(path, net: NoisyOrNet) -> Evidence:
    return parse_evidence(_read(path), net)
