"""Command-line harness: ``reflectron <command> [flags]``.

Exit codes: 0 success, 1 verification failure (a deviation above tolerance),
2 usage or configuration error.  Reports go to standard output (or ``--out``),
diagnostics to standard error.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__, circuits, operators
from .algorithms import (
    compare_query_counts,
    grover_invert,
    grover_search,
    invert_exact,
    optimal_iterations,
)
from .permutations import (
    GENERATORS,
    PermutationFormatError,
    PermutationTable,
    generate,
    read_file,
    to_bits,
    write_file,
)
from .statevector import DENSE_MAX_QUBITS

OPS = ("u_f", "o_full", "o_pair", "diffusion", "q", "q_prime", "m_f")
DEFAULT_TOL = 1e-9


class ConfigError(Exception):
    """Bad flags, files or combinations; maps to exit code 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _add_perm_source(p: argparse.ArgumentParser) -> None:
    p.add_argument("--perm", help="permutation file (perm v1 format)")
    p.add_argument("--kind", choices=GENERATORS, default="random")
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int, default=0)


def _add_common(p: argparse.ArgumentParser, formats=("json",)) -> None:
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", help="write the report here instead of standard output")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.set_defaults(allowed_formats=formats)


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="reflectron", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"reflectron {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-perm", help="generate a permutation file")
    p.add_argument("--kind", choices=GENERATORS, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output path (default: standard output)")

    p = sub.add_parser("invert-exact", help="exact inversion in n/2 rounds")
    _add_perm_source(p)
    p.add_argument("--x", default="all", help="bit-string, 'all' or 'sample:N'")
    p.add_argument("--trace", action="store_true")
    _add_common(p)

    p = sub.add_parser("grover-search", help="Grover search for one marked string")
    p.add_argument("--n", type=int)
    p.add_argument("--x", required=True, help="the marked bit-string")
    p.add_argument("--iterations", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace", action="store_true")
    _add_common(p)

    p = sub.add_parser("grover-invert", help="Grover inversion of a permutation")
    _add_perm_source(p)
    p.add_argument("--x", default="sample:1", help="bit-string, 'all' or 'sample:N'")
    p.add_argument("--iterations", type=int)
    p.add_argument("--trace", action="store_true")
    _add_common(p)

    p = sub.add_parser("compare", help="query counts: exact inversion vs Grover inversion")
    p.add_argument("--n", type=_int_list, nargs="+", required=True,
                   help="bit-widths, space or comma separated")
    p.add_argument("--kind", choices=GENERATORS, default="random")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--perm")
    p.add_argument("--x", help="target bit-string (default: all zeros)")
    _add_common(p, formats=("json", "csv"))

    p = sub.add_parser("verify-lowering", help="check a lowered circuit against its operator")
    p.add_argument("--op", choices=OPS, required=True)
    _add_perm_source(p)
    p.add_argument("--j", type=int, default=0)
    _add_common(p)

    p = sub.add_parser("gate-counts", help="gate and oracle counts of a lowering")
    p.add_argument("--op", choices=OPS, required=True)
    _add_perm_source(p)
    p.add_argument("--j", type=int, default=0)
    _add_common(p)

    p = sub.add_parser("suite", help="run a matrix of exact-inversion checks from a JSON file")
    p.add_argument("matrix", help="JSON file with keys n, kinds, seeds, perms, x")
    _add_common(p)
    return parser


def _load_perm(args) -> PermutationTable:
    if args.perm:
        try:
            f = read_file(args.perm)
        except OSError as exc:
            raise ConfigError(f"cannot read {args.perm}: {exc.strerror}") from None
        except PermutationFormatError as exc:
            raise ConfigError(str(exc)) from None
        if args.n is not None and args.n != f.n:
            raise ConfigError(f"--n {args.n} disagrees with n={f.n} in {args.perm}")
        return f
    if args.n is None:
        raise ConfigError("give --perm or --n (with --kind/--seed)")
    try:
        return generate(args.kind, args.n, args.seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _perm_source(args) -> dict:
    if args.perm:
        return {"perm": args.perm}
    return {"kind": args.kind, "seed": args.seed}


def select_targets(selector: str, n: int, seed: int) -> list[int]:
    """Resolve ``--x``: a bit-string, ``all``, or ``sample:N`` (seeded, sorted)."""
    if selector == "all":
        return list(range(1 << n))
    if selector.startswith("sample:"):
        try:
            count = int(selector.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"bad sample count in {selector!r}") from None
        if not 1 <= count <= 1 << n:
            raise ConfigError(f"sample count {count} outside [1, {1 << n}]")
        rng = np.random.default_rng(seed)
        return sorted(int(v) for v in rng.choice(1 << n, size=count, replace=False))
    if len(selector) != n or set(selector) - {"0", "1"}:
        raise ConfigError(f"--x must be a {n}-bit string, 'all' or 'sample:N'; got {selector!r}")
    return [int(selector, 2)]


def inversion_failures(f: PermutationTable, x: int, y: str, trace, tol: float) -> list[str]:
    """Invariant violations for one exact-inversion run (empty when it passed)."""
    n = f.n
    problems = []
    if f(y) != x:
        problems.append(f"f({y}) != {to_bits(x, n)}")
    if abs(trace.success_probability - 1.0) > tol:
        problems.append(f"success probability {trace.success_probability!r}")
    if trace.iterations != n // 2:
        problems.append(f"{trace.iterations} iterations instead of {n // 2}")
    for r in trace.records:
        shift = n - (2 * r.j + 2)
        expected_support = int(np.count_nonzero((f.table >> shift) == (x >> shift)))
        if r.support_size != expected_support:
            problems.append(f"round {r.j}: support {r.support_size} != {expected_support}")
        if abs(r.common_amplitude - r.expected_amplitude) > 1e-10 or r.amplitude_spread > 1e-10:
            problems.append(f"round {r.j}: amplitude {r.common_amplitude!r}")
        if r.max_off_support > 1e-12:
            problems.append(f"round {r.j}: off-support {r.max_off_support!r}")
    return problems


def _cmd_gen_perm(args) -> tuple[str | None, int]:
    try:
        f = generate(args.kind, args.n, args.seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if args.out:
        write_file(f, args.out)
        return None, 0
    buf = io.StringIO()
    buf.write(f"perm v1 n={f.n}\n")
    buf.writelines(to_bits(v, f.n) + "\n" for v in f.table)
    return buf.getvalue(), 0


def _cmd_invert_exact(args) -> tuple[dict, int]:
    f = _load_perm(args)
    if f.n % 2:
        raise ConfigError(f"invert-exact needs even n, got n={f.n}")
    targets = select_targets(args.x, f.n, args.seed)
    results, ok = [], True
    for x in targets:
        y, trace = invert_exact(f, x)
        failures = inversion_failures(f, x, y, trace, args.tol)
        ok &= not failures
        entry = {
            "x": to_bits(x, f.n),
            "y": y,
            "success_probability": trace.success_probability,
            "iterations": trace.iterations,
            "tagging_queries": trace.tagging_queries,
            "passed": not failures,
        }
        if failures:
            entry["failures"] = failures
        if args.trace:
            entry["trace"] = [r.to_dict() for r in trace.records]
        results.append(entry)
    config = {"n": f.n, "x": args.x, "tol": args.tol, **_perm_source(args)}
    return _report("invert-exact", config, results, ok), 0 if ok else 1


def _grover_entry(trace, args, tol) -> tuple[dict, bool]:
    passed = trace.max_deviation <= tol
    entry = {
        "target": trace.target,
        "iterations": trace.iterations,
        "queries": trace.queries,
        "success_probability": trace.success_probability,
        "predicted": trace.predicted[-1],
        "max_deviation": trace.max_deviation,
        "passed": passed,
    }
    if args.trace:
        entry["probabilities"] = trace.probabilities
        entry["predicted_probabilities"] = trace.predicted
    return entry, passed


def _cmd_grover_search(args) -> tuple[dict, int]:
    marked = args.x
    n = args.n if args.n is not None else len(marked)
    if len(marked) != n or set(marked) - {"0", "1"} or n < 1:
        raise ConfigError(f"--x must be an {n}-bit string, got {marked!r}")
    k = optimal_iterations(n) if args.iterations is None else args.iterations
    if k < 0:
        raise ConfigError("--iterations must be >= 0")
    entry, ok = _grover_entry(grover_search(marked, k), args, args.tol)
    config = {"n": n, "x": marked, "iterations": k, "tol": args.tol}
    return _report("grover-search", config, [entry], ok), 0 if ok else 1


def _cmd_grover_invert(args) -> tuple[dict, int]:
    f = _load_perm(args)
    k = optimal_iterations(f.n) if args.iterations is None else args.iterations
    if k < 0:
        raise ConfigError("--iterations must be >= 0")
    results, ok = [], True
    for x in select_targets(args.x, f.n, args.seed):
        trace = grover_invert(f, x, k)
        entry, passed = _grover_entry(trace, args, args.tol)
        entry["x"] = to_bits(x, f.n)
        results.append(entry)
        ok &= passed
    config = {"n": f.n, "x": args.x, "iterations": k, "tol": args.tol, **_perm_source(args)}
    return _report("grover-invert", config, results, ok), 0 if ok else 1


def _cmd_compare(args) -> tuple[dict | str, int]:
    rows, ok = [], True
    widths = [n for group in args.n for n in group]
    for n in widths:
        f = _load_perm(argparse.Namespace(perm=args.perm, n=n, kind=args.kind, seed=args.seed))
        if f.n % 2:
            raise ConfigError(f"compare needs even n, got n={f.n}")
        x = args.x if args.x is not None else "0" * n
        if len(x) != n or set(x) - {"0", "1"}:
            raise ConfigError(f"--x must be a {n}-bit string for n={n}")
        cmp = compare_query_counts(f, x)
        passed = abs(cmp.a_success - 1.0) <= args.tol and abs(cmp.c_success - cmp.c_predicted) <= args.tol
        ok &= passed
        rows.append({**cmp.to_dict(), "passed": passed})
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["n", "A_queries", "C_queries", "A_success", "C_success"])
        for r in rows:
            writer.writerow([r["n"], r["a_tagging_queries"], r["c_queries"],
                             repr(r["a_success"]), repr(r["c_success"])])
        return buf.getvalue(), 0 if ok else 1
    config = {"n": widths, "x": args.x, "tol": args.tol,
              **({"perm": args.perm} if args.perm else {"kind": args.kind, "seed": args.seed})}
    return _report("compare", config, rows, ok), 0 if ok else 1


def build_pair(op: str, f: PermutationTable, j: int):
    """(lowered circuit, semantic handle) for a catalog operator name."""
    n = f.n
    needs_round = op in ("o_pair", "q", "q_prime")
    if needs_round:
        if n % 2:
            raise ConfigError(f"--op {op} needs even n, got n={n}")
        if not 0 <= j <= n // 2 - 1:
            raise ConfigError(f"--j {j} outside [0, {n // 2 - 1}] for n={n}")
    if op == "u_f":
        handle = operators.make_u_f(f)
    elif op == "o_full":
        handle = operators.make_tag_full(f)
    elif op == "o_pair":
        handle = operators.make_tag_pair(f, 2 * j + 1)
    elif op == "diffusion":
        handle = operators.make_diffusion(n)
    elif op == "q":
        handle = operators.make_q(f, j)
    elif op == "q_prime":
        handle = operators.make_q_prime(n, j)
    elif op == "m_f":
        handle = operators.make_m_f(f)
    else:
        raise ConfigError(f"unknown operator {op!r}")
    return circuits.lower(handle), handle


def _cmd_verify_lowering(args) -> tuple[dict, int]:
    f = _load_perm(args)
    circ, handle = build_pair(args.op, f, args.j)
    mode = "dense" if handle.width <= DENSE_MAX_QUBITS else "sampled"
    report = circuits.verify_equivalence(circ, handle, mode=mode, seed=args.seed)
    ok = report.passed(args.tol)
    entry = {"op": args.op, "operator": str(handle), **report.to_dict(),
             **circ.counts().to_dict(), "passed": ok}
    config = {"op": args.op, "n": f.n, "j": args.j, "tol": args.tol, **_perm_source(args)}
    return _report("verify-lowering", config, [entry], ok), 0 if ok else 1


def _cmd_gate_counts(args) -> tuple[dict, int]:
    f = _load_perm(args)
    circ, handle = build_pair(args.op, f, args.j)
    entry = {
        "op": args.op,
        "operator": str(handle),
        "native": circ.counts().to_dict(),
        "elementary": circuits.decompose(circ).counts().to_dict(),
    }
    config = {"op": args.op, "n": f.n, "j": args.j, **_perm_source(args)}
    return _report("gate-counts", config, [entry], True), 0


def _suite_entries(matrix: dict) -> list[dict]:
    if not isinstance(matrix, dict):
        raise ConfigError("suite matrix must be a JSON object")
    ns = matrix.get("n", [])
    kinds = matrix.get("kinds", [])
    seeds = matrix.get("seeds", [0])
    x = matrix.get("x", "all")
    entries = [{"n": n, "kind": k, "seed": s, "x": x}
               for n, k, s in itertools.product(ns, kinds, seeds)]
    entries += [{"perm": p, "x": x, "seed": seeds[0] if seeds else 0}
                for p in matrix.get("perms", [])]
    if not entries:
        raise ConfigError("suite matrix selects no runs")
    return entries


def _suite_key(entry: dict) -> tuple:
    if "perm" in entry:
        return (1, entry["perm"], 0, "", 0)
    return (0, "", entry["n"], entry["kind"], entry["seed"])


def _run_entry(entry: dict, tol: float) -> dict:
    out = dict(entry)
    try:
        if "perm" in entry:
            f = _load_perm(argparse.Namespace(perm=entry["perm"], n=None, kind=None, seed=0))
        else:
            f = _load_perm(argparse.Namespace(perm=None, n=entry["n"], kind=entry["kind"],
                                              seed=entry["seed"]))
        if f.n % 2:
            raise ConfigError(f"exact inversion needs even n, got n={f.n}")
        targets = select_targets(entry["x"], f.n, entry["seed"])
    except ConfigError as exc:
        out.update(status="config-error", error=str(exc))
        return out
    failures = []
    for x in targets:
        y, trace = invert_exact(f, x)
        failures += [f"x={to_bits(x, f.n)}: {p}" for p in inversion_failures(f, x, y, trace, tol)]
    out.update(n=f.n, runs=len(targets), failures=failures,
               status="pass" if not failures else "fail")
    return out


def run_suite(matrix: dict, tol: float = DEFAULT_TOL, workers: int = 1) -> tuple[dict, int]:
    """Run exact inversion over a config matrix; returns (aggregate report, exit code).

    Entries run concurrently when ``workers > 1``; the report is keyed and
    sorted by config so it does not depend on completion order.
    """
    entries = sorted(_suite_entries(matrix), key=_suite_key)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda e: _run_entry(e, tol), entries))
    else:
        results = [_run_entry(e, tol) for e in entries]
    statuses = {r["status"] for r in results}
    code = 2 if "config-error" in statuses else 1 if "fail" in statuses else 0
    summary = {
        "entries": len(results),
        "runs": sum(r.get("runs", 0) for r in results),
        "passed": sum(r["status"] == "pass" for r in results),
        "failed": sum(r["status"] == "fail" for r in results),
        "config_errors": sum(r["status"] == "config-error" for r in results),
    }
    report = _report("suite", {"matrix": matrix, "tol": tol}, results, code == 0)
    report["summary"] = summary
    return report, code


def _cmd_suite(args) -> tuple[dict, int]:
    try:
        with open(args.matrix, encoding="utf-8") as fh:
            matrix = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {args.matrix}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{args.matrix}: invalid JSON ({exc.msg})") from None
    return run_suite(matrix, args.tol)


def _report(command: str, config: dict, results: list, passed: bool) -> dict:
    return {
        "tool": "reflectron",
        "version": __version__,
        "command": command,
        "config": config,
        "passed": bool(passed),
        "results": results,
    }


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def render(report) -> str:
    if isinstance(report, str):
        return report
    return json.dumps(report, indent=2, sort_keys=True, default=_json_default) + "\n"


_COMMANDS = {
    "invert-exact": _cmd_invert_exact,
    "grover-search": _cmd_grover_search,
    "grover-invert": _cmd_grover_invert,
    "compare": _cmd_compare,
    "verify-lowering": _cmd_verify_lowering,
    "gate-counts": _cmd_gate_counts,
    "suite": _cmd_suite,
}


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    start = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "tol", 1.0) <= 0 or not math.isfinite(getattr(args, "tol", 1.0)):
            raise ConfigError("--tol must be a positive number")
        if getattr(args, "format", "json") not in getattr(args, "allowed_formats", ("json",)):
            raise ConfigError(f"--format {args.format} is only available for: compare")
        if args.command == "gen-perm":
            report, code = _cmd_gen_perm(args)
            if report is None:
                print(f"wrote {args.out}", file=stderr)
                return code
        else:
            report, code = _COMMANDS[args.command](args)
        text = render(report)
        if getattr(args, "out", None):
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            stdout.write(text)
    except (ConfigError, ValueError) as exc:
        print(f"reflectron: error: {exc}", file=stderr)
        return 2
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    elapsed = time.perf_counter() - start
    print(f"reflectron: {args.command} finished in {elapsed:.3f}s (exit {code})", file=stderr)
    return code


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
