"""Command-line entry point.

Exit codes: 0 success (penalty-filled runs included), 1 usage or config error,
2 file errors, 3 invalid heuristic passed to ``evaluate``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from collections import defaultdict
from pathlib import Path
from typing import Optional, Sequence

from .code import HeuristicCode
from .evolve import ConfigError, Framework, RunConfig, run
from .interp import ExecLimits
from .problems import PROBLEMS, evaluate_suite, make_suite, resolve_suite, write_suite
from .problems.base import content_hash

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_INVALID = 0, 1, 2, 3

LABELS = {"eoh": "EoH", "eoh-i": "EoH-i", "reevo-i": "ReEvo-i", "eohs-i": "EoH-S-i"}
LABEL_ORDER = ["EoH", "EoH-i", "ReEvo-i", "EoH-S-i"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit 2, which we reserve for IO
        raise UsageError(f"{self.prog}: {message}")


def _add_gen(sub) -> None:
    p = sub.add_parser("gen-instances", help="write a named instance suite to JSON")
    p.add_argument("--problem", choices=sorted(PROBLEMS), required=True)
    p.add_argument("--setting", required=True, help="e.g. train, desk, c100, n1k_c200")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=0, help="instances (0 = setting default)")
    p.add_argument("--out", type=Path, help="output file (default <problem>_<setting>_s<seed>.json)")


def _add_evolve(sub) -> None:
    p = sub.add_parser("evolve", help="run one evolutionary search")
    p.add_argument("--framework", choices=[f.value for f in Framework], default="eoh-i")
    p.add_argument("--problem", choices=sorted(PROBLEMS), default="tsp")
    p.add_argument("--pop", type=int, help="population size (framework default if omitted)")
    p.add_argument("--iters", type=int, help="generations (framework default if omitted)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--provider", choices=["mock", "remote"], default="mock")
    p.add_argument("--ii-reps", type=int, default=2, help="II applications per offspring")
    p.add_argument("--budget", type=int, default=400, help="reevo-i heuristic budget")
    p.add_argument("--set-size", type=int, help="eohs-i output set size")
    p.add_argument("--suite", default="train", help="training suite: setting name or JSON file")
    p.add_argument("--suite-seed", type=int, default=0)
    p.add_argument("--test-suite", action="append", default=[], help="extra suite to score the result on")
    p.add_argument("--max-steps", type=int, default=ExecLimits().max_steps)
    p.add_argument("--out", type=Path, help="output directory (default runs/<framework>_<problem>_s<seed>)")


def _add_evaluate(sub) -> None:
    p = sub.add_parser("evaluate", help="score a heuristic file on a suite")
    p.add_argument("--problem", choices=sorted(PROBLEMS), required=True)
    p.add_argument("--heuristic", type=Path, required=True)
    p.add_argument("--suite", required=True, help="setting name or JSON file")
    p.add_argument("--suite-seed", type=int, default=0)
    p.add_argument("--max-steps", type=int, default=ExecLimits().max_steps)
    p.add_argument("--out", type=Path, help="write the per-instance report here as JSON")


def _add_report(sub) -> None:
    p = sub.add_parser("report", help="tabulate mean results over run manifests")
    p.add_argument("dir", type=Path)
    p.add_argument("--csv", type=Path, help="CSV output (default <dir>/report.csv)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="astevo", description="Evolve scoring heuristics by destroying and repairing their syntax trees.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _add_gen(sub)
    _add_evolve(sub)
    _add_evaluate(sub)
    _add_report(sub)
    return parser


def cmd_gen_instances(args) -> int:
    try:
        instances = make_suite(args.problem, args.setting, args.seed, args.count)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    out = args.out or Path(f"{args.problem}_{args.setting}_s{args.seed}.json")
    write_suite(out, args.problem, args.setting, args.seed, instances)
    for inst in instances:
        print(f"{inst.instance_id}\t{inst.fingerprint()}")
    print(f"wrote {len(instances)} instances to {out} (suite {content_hash([i.fingerprint() for i in instances])})")
    return EXIT_OK


def cmd_evolve(args) -> int:
    try:
        cfg = RunConfig.for_framework(
            args.framework,
            problem=args.problem,
            pop_size=args.pop,
            iterations=args.iters,
            seed=args.seed,
            provider=args.provider,
            ii_repetitions=args.ii_reps,
            budget=args.budget,
            set_size=args.set_size,
            suite=args.suite,
            suite_seed=args.suite_seed,
            test_suites=tuple(args.test_suite),
            limits=ExecLimits(args.max_steps),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    result = run(cfg)
    out = args.out or Path("runs") / f"{cfg.framework.value}_{cfg.problem}_s{cfg.seed}"
    log_path, man_path = result.write(out)
    m = result.manifest
    print(f"{LABELS[m['framework']]} on {cfg.problem}: best {m['train']:.6g} after {m['generations']} generations")
    for name, value in m["test"].items():
        print(f"  {name}: {value:.6g}")
    print(f"  tokens {m['tokens']['total']}, heuristics generated {m['heuristics_generated']}")
    if m["provider_failures"]:
        print(f"  warning: {m['provider_failures']} provider failures were scored with the penalty", file=sys.stderr)
    print(f"wrote {log_path} and {man_path}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    problem = PROBLEMS[args.problem]
    text = args.heuristic.read_text(encoding="utf-8")
    if not text.strip():
        print(f"{args.heuristic} is empty", file=sys.stderr)
        return EXIT_INVALID
    code = HeuristicCode.from_text(text, arity=problem.schema.arity)
    if not code.is_valid:
        print(f"{args.heuristic} is not a valid heuristic:\n{code.violations_summary()}", file=sys.stderr)
        return EXIT_INVALID
    try:
        name, instances = resolve_suite(args.problem, args.suite, args.suite_seed)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    report = evaluate_suite(problem, code.ast, instances, ExecLimits(args.max_steps))
    for r in report.per_instance:
        print(f"{r.instance_id}\t{r.objective:.6g}\t{r.runtime_errors}")
    print(f"mean objective on {name}: {report.mean_objective:.6g}")
    if args.out:
        doc = {"heuristic": code.fingerprint, "problem": args.problem, "suite": name, **report.to_dict()}
        args.out.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def load_manifests(root: Path) -> list[dict]:
    out = []
    for path in sorted(Path(root).rglob("manifest.json")):
        doc = json.loads(path.read_text(encoding="utf-8"))
        doc["_path"] = str(path)
        out.append(doc)
    return out


def report_rows(manifests: Sequence[dict]) -> tuple[list[str], list[dict]]:
    """Mean of every numeric column per (problem, method), in table order.

    Returns the value column names and one dict per row holding ``problem``,
    ``method``, ``runs``, the column means and ``tokens``.
    """
    groups: dict[tuple[str, str], list[dict]] = defaultdict(list)
    columns: list[str] = []
    for m in manifests:
        groups[(m["problem"], LABELS.get(m["framework"], m["framework"]))].append(m)
        for col in ["train", *m.get("test", {})]:
            if col not in columns:
                columns.append(col)
    order = {label: i for i, label in enumerate(LABEL_ORDER)}
    rows = []
    for (prob, method), runs in sorted(groups.items(), key=lambda kv: (kv[0][0], order.get(kv[0][1], 99), kv[0][1])):
        row: dict = {"problem": prob, "method": method, "runs": len(runs)}
        for col in columns:
            vals = [_cell(r, col) for r in runs]
            vals = [v for v in vals if v is not None and not math.isnan(v)]
            if len(vals) < len(runs):
                logging.warning("%s/%s: %d of %d runs lack %s", prob, method, len(runs) - len(vals), len(runs), col)
            row[col] = math.fsum(vals) / len(vals) if vals else None
        row["tokens"] = math.fsum(r["tokens"]["total"] for r in runs) / len(runs)
        rows.append(row)
    for prob in {r["problem"] for r in rows}:
        mine = [r for r in rows if r["problem"] == prob]
        for col in columns:
            vals = [r[col] for r in mine if r[col] is not None]
            if vals:
                lo = min(vals)
                for r in mine:
                    if r[col] == lo:
                        r.setdefault("best", []).append(col)
    return columns, rows


def _cell(manifest: dict, col: str) -> Optional[float]:
    v = manifest.get("train") if col == "train" else manifest.get("test", {}).get(col)
    return None if v is None else float(v)


def render_text(columns: list[str], rows: list[dict]) -> str:
    header = ["problem", "method", "runs", *columns, "tokens"]
    body = []
    for r in rows:
        cells = [r["problem"], r["method"], str(r["runs"])]
        for col in columns:
            v = r[col]
            cells.append("-" if v is None else f"{v:.4f}" + ("*" if col in r.get("best", []) else ""))
        cells.append(f"{r['tokens']:.0f}")
        body.append(cells)
    widths = [max(len(x) for x in col) for col in zip(header, *body)]
    lines = ["  ".join(c.ljust(w) if i < 2 else c.rjust(w) for i, (c, w) in enumerate(zip(cells, widths))) for cells in [header, *body]]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n(* best in column)\n"


def render_csv(columns: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["problem", "method", "runs", *columns, "tokens", "best"])
    for r in rows:
        w.writerow(
            [r["problem"], r["method"], r["runs"], *("" if r[c] is None else repr(r[c]) for c in columns), repr(r["tokens"]), ";".join(r.get("best", []))]
        )
    return buf.getvalue()


def cmd_report(args) -> int:
    if not args.dir.is_dir():
        print(f"{args.dir} is not a directory", file=sys.stderr)
        return EXIT_IO
    manifests = load_manifests(args.dir)
    if not manifests:
        print(f"no manifest.json found under {args.dir}", file=sys.stderr)
        return EXIT_IO
    columns, rows = report_rows(manifests)
    print(render_text(columns, rows), end="")
    out = args.csv or args.dir / "report.csv"
    out.write_text(render_csv(columns, rows), encoding="utf-8")
    print(f"wrote {out}")
    return EXIT_OK


COMMANDS = {"gen-instances": cmd_gen_instances, "evolve": cmd_evolve, "evaluate": cmd_evaluate, "report": cmd_report}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
