"""Command-line front end: ``genrf test``, ``genrf simulate`` and ``genrf quadform``.

Exit status 0 means success (whatever the p-values), 1 that some simulated
scenario failed, 2 an input or validation error, 3 a numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .analysis import parse_methods, run_records
from .data import InputError, align, load_matrix_file, load_weights
from .quadform import tail_prob_weighted_chisq
from .records import write_records
from .simulate import ScenarioError, StudyError, StudyScenario, format_grid, run_study

EXIT_OK, EXIT_SCENARIO_FAILED, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3

PRESETS = ("table1", "table2_normal", "table2_exponential", "table3")


def _manifest(command, inputs, options) -> dict:
    return {
        "command": command,
        "inputs": {k: (None if v is None else str(v)) for k, v in inputs.items()},
        "options": options,
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def _write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _err(msg) -> None:
    print(f"genrf: error: {msg}", file=sys.stderr)


# ---------------------------------------------------------------------------
# scenario files
# ---------------------------------------------------------------------------


def resolve_scenario_path(name) -> Path:
    """A scenario file path, or a shipped preset such as ``table1``."""
    path = Path(name)
    if path.exists():
        return path
    stem = path.name.removesuffix(".scenarios")
    if stem in PRESETS:
        return Path(str(resources.files("genrf") / "presets" / f"{stem}.scenarios"))
    raise InputError(f"no scenario file or preset named {name!r}")


def load_scenarios(path) -> list:
    """Parse a YAML scenario file holding one mapping or a list of them."""
    path = resolve_scenario_path(path)
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as err:
        raise InputError(f"cannot parse scenario file: {err}", path) from None
    items = doc if isinstance(doc, list) else [doc]
    scenarios = []
    for i, item in enumerate(items):
        try:
            scenarios.append(StudyScenario.from_dict(item))
        except (ScenarioError, TypeError) as err:
            raise InputError(f"scenario {i + 1}: {err}", path) from None
    return scenarios


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_test(args) -> int:
    try:
        methods = parse_methods(args.methods)
        geno = load_matrix_file(args.genotypes, "genotype", impute_missing=args.impute_missing)
        pheno = load_matrix_file(args.phenotypes, "phenotype")
        covar = None
        if args.covariates:
            covar = load_matrix_file(args.covariates, "covariate")
        dataset = align(geno, pheno, covar)
        weights = load_weights(args.weights, geno.variant_ids) if args.weights else None
    except (InputError, ValueError) as err:
        _err(err)
        return EXIT_INPUT
    try:
        records = run_records(dataset, methods, weights)
    except InputError as err:
        _err(err)
        return EXIT_INPUT
    except (ArithmeticError, np.linalg.LinAlgError) as err:
        _err(f"numerical failure: {err}")
        return EXIT_NUMERIC

    write_records(records, args.out)
    _write_json(
        f"{args.out}.manifest.json",
        _manifest(
            "test",
            {
                "genotypes": args.genotypes,
                "phenotypes": args.phenotypes,
                "covariates": args.covariates,
                "weights": args.weights,
            },
            {"methods": list(methods), "alpha": args.alpha, "out": str(args.out)},
        ),
    )
    for r in records:
        flag = "*" if r["p_value"] < args.alpha else ""
        print(f"{r['method']}\tp={r['p_value']:.6g}{flag}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        scenarios = []
        for path in args.scenarios:
            scenarios.extend(load_scenarios(path))
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.alpha is not None:
            overrides["alpha"] = args.alpha
        if args.reps is not None:
            overrides["n_reps"] = args.reps
        if args.methods is not None:
            overrides["methods"] = parse_methods(args.methods)
        if overrides:
            scenarios = [
                StudyScenario.from_dict({**sc.to_dict(), **overrides}) for sc in scenarios
            ]
    except (InputError, ScenarioError, ValueError) as err:
        _err(err)
        return EXIT_INPUT
    names = [sc.name for sc in scenarios]
    if len(set(names)) != len(names):
        _err("scenario names must be unique within one run")
        return EXIT_INPUT

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    reports, failed = [], []
    for sc in scenarios:
        try:
            rep = run_study(sc, threads=args.threads)
        except (StudyError, ValueError, ArithmeticError) as err:
            _err(f"scenario {sc.name!r} failed: {err}")
            failed.append(sc.name)
            continue
        (out / f"{sc.name}.tsv").write_text(rep.to_tsv(), encoding="utf-8")
        (out / f"{sc.name}.json").write_text(rep.to_json(), encoding="utf-8")
        print(f"{sc.name}: {rep.wall_time:.1f}s", file=sys.stderr)
        reports.append(rep)

    _write_json(
        out / "manifest.json",
        _manifest(
            "simulate",
            {"scenarios": ",".join(map(str, args.scenarios))},
            {
                "threads": args.threads,
                "seed": args.seed,
                "alpha": args.alpha,
                "reps": args.reps,
                "out": str(out),
                "failed": failed,
            },
        ),
    )
    if len({r.scenario.label for r in reports}) > 1:
        grid = format_grid(reports)
        (out / "summary.tsv").write_text(grid, encoding="utf-8")
        sys.stdout.write(grid)
    elif reports:
        sys.stdout.write(reports[0].to_tsv())
    return EXIT_SCENARIO_FAILED if failed else EXIT_OK


def cmd_quadform(args) -> int:
    try:
        p, info = tail_prob_weighted_chisq(args.lambdas, args.x, full_output=True)
    except ValueError as err:
        _err(err)
        return EXIT_INPUT
    suffix = " (approximate)" if info.approximate else ""
    print(f"{p:.10g}{suffix}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="genrf", description="Genetic random field joint-association test."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="{test,simulate}")

    t = sub.add_parser("test", help="test a genotype set for association with a trait")
    t.add_argument("genotypes", help="genotype TSV (subjects x variants, entries 0/1/2)")
    t.add_argument("phenotypes", help="phenotype TSV (subject id, one trait column)")
    t.add_argument("--covariates", help="covariate TSV; an intercept is added if absent")
    t.add_argument("--weights", help="two-column TSV of variant weights")
    t.add_argument("--methods", default="GENRF", help="comma list of GENRF,SKAT,LINEAR")
    t.add_argument("--alpha", type=float, default=0.05, help="level used to flag results")
    t.add_argument("--impute-missing", action="store_true", help="impute missing genotypes")
    t.add_argument("--out", required=True, help="output path (.tsv, or .jsonl for JSON lines)")
    t.set_defaults(func=cmd_test)

    s = sub.add_parser("simulate", help="run Monte Carlo scenarios")
    s.add_argument("scenarios", nargs="+", help=f"scenario files or presets: {', '.join(PRESETS)}")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--seed", type=int, help="override every scenario's seed")
    s.add_argument("--alpha", type=float, help="override every scenario's level")
    s.add_argument("--reps", type=int, help="override every scenario's replicate count")
    s.add_argument("--methods", help="override every scenario's methods")
    s.set_defaults(func=cmd_simulate)

    q = sub.add_parser("quadform", help=argparse.SUPPRESS)
    q.add_argument("lambdas", nargs="+", type=float)
    q.add_argument("--x", type=float, default=0.0)
    q.set_defaults(func=cmd_quadform)
    # keep the debug command out of the help listing
    sub._choices_actions = [a for a in sub._choices_actions if a.dest != "quadform"]
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
