"""Command-line driver: ``qmrdiag {validate,gen,infer,compare,circuit}``.

Exit codes:

    0   success
    1   unreadable input file
    2   invalid net or evidence (every violation is printed)
    3   a size cap was exceeded
    4   degenerate parameter (prior in {0, 1} or q = 1) for incl-excl
    5   rejection sampling accepted no samples
    6   likelihood weighting collected zero total weight
    7   the evidence has probability zero
    64  bad command-line usage
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time

from . import exact, qcircuit, sampler
from .backends import BACKENDS, METHODS, run_method
from .errors import (
    CapExceeded,
    DegenerateParameter,
    ImpossibleEvidence,
    InvalidNetError,
    NoAcceptedSamples,
    SamplingError,
    ZeroTotalWeight,
)
from .fileio import dump_net, load_evidence, load_net
from .generate import random_net
from .net import Evidence

EXIT_OK = 0
EXIT_IO = 1
EXIT_INVALID = 2
EXIT_CAP = 3
EXIT_DEGENERATE = 4
EXIT_NO_ACCEPTED = 5
EXIT_ZERO_WEIGHT = 6
EXIT_IMPOSSIBLE = 7
EXIT_USAGE = 64

_ERROR_CODES = [
    (InvalidNetError, EXIT_INVALID),
    (CapExceeded, EXIT_CAP),
    (DegenerateParameter, EXIT_DEGENERATE),
    (NoAcceptedSamples, EXIT_NO_ACCEPTED),
    (ZeroTotalWeight, EXIT_ZERO_WEIGHT),
    (ImpossibleEvidence, EXIT_IMPOSSIBLE),
    (OSError, EXIT_IO),
]


def exit_code_for(exc: BaseException) -> int:
    for cls, code in _ERROR_CODES:
        if isinstance(exc, cls):
            return code
    raise exc


def _num(x):
    return None if x is None else float(x)


def run_report(net, method, report, *, seed, n_sam, workers, wall_time,
               status="ok", include_posterior=False) -> dict:
    """Machine-readable report; the key set is identical for every backend."""
    sampling = BACKENDS[method] != "exact"
    marginals = None
    if report is not None and report.marginals is not None:
        se = report.marginal_se
        marginals = [
            {"disease": d.name, "p": float(report.marginals[j]),
             "se": None if se is None else float(se[j])}
            for j, d in enumerate(net.diseases)
        ]
    posterior = None
    if include_posterior and report is not None and report.posterior is not None:
        nd = net.n_diseases
        posterior = {
            "".join(str((code >> j) & 1) for j in range(nd)): float(p)
            for code, p in enumerate(report.posterior) if p > 0
        }
    get = (lambda name: getattr(report, name)) if report is not None else (lambda name: None)
    return {
        "method": method,
        "backend": BACKENDS[method],
        "status": status,
        "seed": seed if sampling else None,
        "n_sam": n_sam if sampling else None,
        "workers": workers if sampling else None,
        "evidence_prob": _num(get("evidence_prob")),
        "evidence_prob_se": _num(get("evidence_prob_se")),
        "marginals": marginals,
        "posterior": posterior,
        "acceptance_rate": _num(get("acceptance_rate")),
        "ess": _num(get("ess")),
        "n_drawn": get("n_drawn"),
        "n_accepted": get("n_accepted"),
        "diagnosis": get("diagnosis"),
        "wall_time_s": wall_time,
    }


def _load_inputs(args):
    net = load_net(args.net)
    ev = load_evidence(args.evidence, net) if args.evidence else Evidence()
    return net, ev


def cmd_validate(args) -> int:
    try:
        load_net(args.net)
    except InvalidNetError as exc:
        for v in exc.violations:
            print(v, file=sys.stdout)
        return EXIT_INVALID
    print("ok")
    return EXIT_OK


def cmd_gen(args) -> int:
    for lo, hi in (args.q_range, args.prior_range):
        if not 0 < lo <= hi < 1:
            print(f"error: range ({lo}, {hi}) must lie within (0, 1)", file=sys.stderr)
            return EXIT_USAGE
    if not 0 < args.density <= 1:
        print("error: --density must be in (0, 1]", file=sys.stderr)
        return EXIT_USAGE
    net = random_net(args.nd, args.nf, args.density, tuple(args.q_range),
                     tuple(args.prior_range), seed=args.seed)
    sys.stdout.write(dump_net(net))
    return EXIT_OK


def cmd_infer(args) -> int:
    net, ev = _load_inputs(args)
    start = time.perf_counter()
    status, code, report = "ok", EXIT_OK, None
    try:
        report = run_method(net, ev, args.method, args.nsam, args.seed, args.workers,
                            args.full_table_cap, args.qubit_cap)
    except (CapExceeded, DegenerateParameter, SamplingError, ImpossibleEvidence) as exc:
        status, code = type(exc).__name__, exit_code_for(exc)
        report = getattr(exc, "report", None)
        print(f"error: {exc}", file=sys.stderr)
    elapsed = time.perf_counter() - start
    out = run_report(net, args.method, report, seed=args.seed, n_sam=args.nsam,
                     workers=args.workers, wall_time=elapsed, status=status,
                     include_posterior=args.posterior)
    if args.no_timing:
        out["wall_time_s"] = None
    json.dump(out, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return code


def compare_rows(net, ev, methods, n_sam=100_000, seed=0, workers=1,
                 full_table_cap=exact.FULL_TABLE_CAP, qubit_cap=qcircuit.QUBIT_CAP):
    """One dict per method with marginals and distance to the exact answer.

    The distance is max_j |p_j - exact_j| over diseases.
    """
    results = {}
    for m in methods:
        start = time.perf_counter()
        try:
            rep, status = run_method(net, ev, m, n_sam, seed, workers, full_table_cap, qubit_cap), "ok"
        except (CapExceeded, DegenerateParameter, SamplingError, ImpossibleEvidence) as exc:
            rep, status = None, type(exc).__name__
        results[m] = (rep, status, time.perf_counter() - start)
    reference = None
    for m in ("incl-excl", "brute"):
        if m in results and results[m][0] is not None:
            reference = results[m][0].marginals
            break
    if reference is None:
        for m in ("incl-excl", "brute"):
            try:
                reference = run_method(net, ev, m, full_table_cap=0).marginals
                break
            except (CapExceeded, DegenerateParameter, ImpossibleEvidence):
                continue
    rows = []
    for m in methods:
        rep, status, wall = results[m]
        row = {"method": m, "status": status,
               "evidence_prob": None, "tv_to_exact": None, "wall_time_s": wall}
        if rep is not None:
            row["evidence_prob"] = rep.evidence_prob
            if reference is not None:
                row["tv_to_exact"] = sampler.marginal_distance(rep.marginals, reference)
            for j, d in enumerate(net.diseases):
                row[f"p_{d.name}"] = float(rep.marginals[j])
        rows.append(row)
    return rows, reference is not None


def cmd_compare(args) -> int:
    net, ev = _load_inputs(args)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    bad = [m for m in methods if m not in METHODS]
    if bad:
        print(f"error: unknown method(s) {', '.join(bad)}", file=sys.stderr)
        return EXIT_USAGE
    rows, have_exact = compare_rows(net, ev, methods, args.nsam, args.seed, args.workers,
                                    args.full_table_cap, args.qubit_cap)
    fields = ["method", "status", "evidence_prob", "tv_to_exact", "wall_time_s"]
    fields += [f"p_{d.name}" for d in net.diseases]
    writer = csv.DictWriter(sys.stdout, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        if args.no_timing:
            row["wall_time_s"] = None
        writer.writerow({k: ("" if v is None else v) for k, v in row.items()})
    if not have_exact:
        print("error: no exact method is feasible for this net", file=sys.stderr)
        return EXIT_CAP
    return EXIT_OK


def cmd_circuit(args) -> int:
    net, ev = _load_inputs(args)
    if args.lw:
        layout, gates = qcircuit.build_lw_circuit(net, ev, args.qubit_cap)
    else:
        layout, gates = qcircuit.build_circuit(net, args.qubit_cap)
    sys.stdout.write(qcircuit.dump_circuit(layout, gates))
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _range(text):
    lo, hi = (float(x) for x in text.split(","))
    return lo, hi


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qmrdiag", description="Noisy-OR (QMR-style) diagnosis engine.",
                formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("validate", help="check a net file")
    v.add_argument("--net", required=True)
    v.set_defaults(func=cmd_validate)

    g = sub.add_parser("gen", help="write a random net to stdout",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    g.add_argument("--nd", type=int, required=True, help="number of diseases")
    g.add_argument("--nf", type=int, required=True, help="number of findings")
    g.add_argument("--density", type=float, default=0.5, help="edge probability")
    g.add_argument("--q-range", type=_range, default=(0.05, 0.95), help="lo,hi for q")
    g.add_argument("--prior-range", type=_range, default=(0.05, 0.95), help="lo,hi for priors")
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(func=cmd_gen)

    def common(sp, sampling=True):
        sp.add_argument("--net", required=True)
        sp.add_argument("--evidence", help="evidence file (default: no evidence)")
        sp.add_argument("--qubit-cap", type=int, default=qcircuit.QUBIT_CAP)
        if sampling:
            sp.add_argument("--nsam", type=int, default=100_000, help="samples per sampling method")
            sp.add_argument("--seed", type=int, default=0)
            sp.add_argument("--workers", type=int, default=1)
            sp.add_argument("--full-table-cap", type=int, default=exact.FULL_TABLE_CAP,
                            help="largest N_D for which the full posterior table is built")
            sp.add_argument("--no-timing", action="store_true",
                            help="print null wall times (for byte-stable output)")

    i = sub.add_parser("infer", help="run one backend, print a JSON report",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    common(i)
    i.add_argument("--method", choices=METHODS, default="incl-excl")
    i.add_argument("--posterior", action="store_true", help="include the full posterior table")
    i.set_defaults(func=cmd_infer)

    c = sub.add_parser("compare", help="run several backends, print a CSV table",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    common(c)
    c.add_argument("--methods", default=",".join(METHODS), help="comma-separated list")
    c.set_defaults(func=cmd_compare)

    q = sub.add_parser("circuit", help="print the gate list of the embedding circuit",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    common(q, sampling=False)
    q.add_argument("--lw", action="store_true", help="circuit modified for likelihood weighting")
    q.set_defaults(func=cmd_circuit)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InvalidNetError as exc:
        for v in exc.violations:
            print(v, file=sys.stderr)
        return EXIT_INVALID
    except (CapExceeded, DegenerateParameter, ImpossibleEvidence) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
