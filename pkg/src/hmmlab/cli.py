"""Command-line front end: ``hmmlab <command> ...``.

Exit status is 0 on success, 1 when a model is rejected or a check fails, and
2 on usage errors (bad arguments, unreadable files).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import bounds
from .blocks import block_model
from .census import census, typicality_overlay
from .convert import edge_to_state, state_to_edge
from .core import EdgeEmittingHmm, validate
from .entropy import fit_convergence_rate, h_estimates
from .errors import HmmError, MalformedDocument
from .structure import classify

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _int_range(text: str) -> list[int]:
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            lo, hi = int(a), int(b)
        else:
            lo = hi = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N or A..B, got {text!r}") from None
    if lo > hi:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return list(range(lo, hi + 1))


def _window(text: str) -> tuple[int, int]:
    r = _int_range(text)
    return r[0], r[-1]


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _load(path: str):
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"no such model file: {path}")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"{path}: invalid JSON ({exc})") from None
    return validate(doc)


def _emit(args, text: str) -> None:
    if getattr(args, "output", None):
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def _csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def cmd_validate(args) -> int:
    model = _load(args.model)
    _emit(args, f"ok: {model.kind}-emitting model, {model.n_states} states, "
                f"{model.n_symbols} symbols\n")
    return EXIT_OK


def _analyze_text(report: dict) -> str:
    lines = []
    for key in ("irreducible", "period", "path_mergeable", "flag_state", "mergeable_or_incompatible"):
        lines.append(f"{key:<26} {report[key]}")
    lines.append(f"{'edges':<26} {report['edges']}")
    flags = ", ".join(f"{k}->{v}" for k, v in report["flags"]["chosen"].items()) or "-"
    lines.append(f"{'flags':<26} {flags}")
    for row in report["pairs"]:
        i, j = row["pair"]
        wit = "".join(row.get("witness", [])) if "witness" in row else ""
        lines.append(f"  pair {i},{j:<10} {row['status']:<14} {wit}")
    return "\n".join(lines) + "\n"


def cmd_analyze(args) -> int:
    report = classify(_load(args.model))
    _emit(args, _json(report) if args.format == "json" else _analyze_text(report))
    return EXIT_OK


def cmd_convert(args) -> int:
    model = _load(args.model)
    out = edge_to_state(model) if isinstance(model, EdgeEmittingHmm) else state_to_edge(model)
    _emit(args, _json(out.to_document()))
    return EXIT_OK


def cmd_block(args) -> int:
    bm = block_model(_load(args.model), args.n)
    if bm.warning:
        print(f"warning: {bm.warning}", file=sys.stderr)
    _emit(args, _json(bm.model.to_document()))
    return EXIT_OK


def cmd_entropy(args) -> int:
    table = h_estimates(_load(args.model), args.tmax, args.budget)
    rho = fit_convergence_rate(table, args.rate_window) if args.rate_window else None
    if args.format == "json":
        rows = list(table.csv_rows())
        out = {"rows": [dict(zip(rows[0], r)) for r in rows[1:]]}
        for r in out["rows"]:
            for k in ("block_entropy", "h", "lower", "gap"):
                r[k] = float(r[k])
        if rho is not None:
            out["rate_window"] = list(args.rate_window)
            out["rho"] = rho
        _emit(args, _json(out))
        return EXIT_OK
    text = _csv(table.csv_rows())
    if rho is not None:
        a, b = args.rate_window
        text += f"# rate_window={a}..{b} rho={rho!r}\n"
    _emit(args, text)
    return EXIT_OK


def _constants(model, strategy: str):
    return bounds.bound_constants(model, bounds.choose_flags(model, strategy))


def cmd_bound(args) -> int:
    model = _load(args.model)
    _emit(args, _json(_constants(model, args.flags).to_json()))
    return EXIT_OK


def cmd_verify(args) -> int:
    model = _load(args.model)
    const = _constants(model, args.flags)
    lemmas = [x.strip() for x in args.lemmas.split(",") if x.strip()]
    unknown = set(lemmas) - {"gt", "tv", "thm"}
    if unknown:
        raise UsageError(f"unknown lemma names: {sorted(unknown)}")
    ts = range(1, args.tmax + 1)
    rows = [("check", "t", "value", "bound", "status")]
    failed = False
    for name in lemmas:
        if name == "thm":
            for r in bounds.check_theorem_bound(model, const, ts, args.budget):
                rows.append((name, r.t, repr(r.lhs), repr(r.rhs), r.status))
                failed |= r.status == "fail"
        else:
            check = bounds.check_lemma_gt if name == "gt" else bounds.check_lemma_tv
            for r in check(model, const, ts, args.budget):
                rows.append((name, r.t, repr(r.value), repr(r.bound), "pass" if r.passed else "fail"))
                failed |= not r.passed
    _emit(args, _csv(rows))
    return EXIT_FAIL if failed else EXIT_OK


def cmd_census(args) -> int:
    reports = [census(n, args.m, args.samples, args.seed, args.max_draws,
                      args.threads, args.exact_ci) for n in args.n]
    header = ["n", "m", "irreducible_draws", "mergeable", "fraction", "ci95"]
    overlay = None
    if args.overlay:
        header.append("overlay")
        overlay = typicality_overlay([r.n for r in reports], [r.fraction for r in reports])
    rows = [header]
    for k, r in enumerate(reports):
        row = [r.n, r.m, r.irreducible_count, r.path_mergeable_count, repr(r.fraction), repr(r.ci95)]
        if overlay:
            row.append(repr(overlay[k]))
        rows.append(row)
    _emit(args, _csv(rows))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hmmlab", description="Structural and entropy analysis of finite HMMs.")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, func, help_text, model=True, formats=None):
        p = sub.add_parser(name, help=help_text)
        if model:
            p.add_argument("model", help="model file (JSON)")
        if formats:
            p.add_argument("--format", choices=formats, default=formats[0])
        p.add_argument("-o", "--output", help="write the report here instead of stdout")
        p.set_defaults(func=func)
        return p

    command("validate", cmd_validate, "check a model file")
    command("analyze", cmd_analyze, "structural classification", formats=["json", "text"])
    command("convert", cmd_convert, "switch between edge- and state-emitting form")
    p = command("block", cmd_block, "write the block model M^n")
    p.add_argument("--n", type=_positive, required=True)
    p = command("entropy", cmd_entropy, "entropy table", formats=["csv", "json"])
    p.add_argument("--tmax", type=_positive, required=True)
    p.add_argument("--rate-window", type=_window)
    p.add_argument("--budget", type=_positive, help="enumeration node cap (default: HMMLAB_BUDGET or 2e6)")
    p = command("bound", cmd_bound, "convergence constants as JSON")
    p.add_argument("--flags", choices=["lex", "optimize"], default="lex")
    p = command("verify", cmd_verify, "per-t lemma and bound checks as CSV")
    p.add_argument("--lemmas", default="gt,tv,thm")
    p.add_argument("--tmax", type=_positive, required=True)
    p.add_argument("--flags", choices=["lex", "optimize"], default="lex")
    p.add_argument("--budget", type=_positive)
    p = command("census", cmd_census, "random topology census as CSV", model=False)
    p.add_argument("--n", type=_int_range, required=True, help="state count or range A..B")
    p.add_argument("--m", type=_positive, required=True)
    p.add_argument("--samples", type=_positive, required=True, help="irreducible samples per n")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--max-draws", type=_positive)
    p.add_argument("--threads", type=_positive, default=1)
    p.add_argument("--exact-ci", action="store_true")
    p.add_argument("--overlay", action="store_true", help="add the 1 - c*0.931^n column")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"hmmlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except HmmError as exc:
        print(f"hmmlab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
