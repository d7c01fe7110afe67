"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
Every subcommand accepts ``--config FILE`` holding ``key = value`` lines
named after the long flags; flags given on the command line win.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import harness
from .composition import counts_to_ilr
from .exceptions import DataError, IowmedError, NumericalError, ParseError
from .io import (
    MetadataTable,
    read_config,
    read_count_table,
    read_matrix,
    read_metadata,
    write_column,
    write_count_table,
    write_matrix,
    write_metadata,
    write_record,
)
from .mediation import OutcomeFamily, sobel_test
from .pipeline import analyze
from .reduction import ReductionStrategy, reduce
from .simulate import SimScenario, generate

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3

logger = logging.getLogger("iowmed")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _csv_list(cast):
    def parse(text):
        items = [s.strip() for s in str(text).split(",") if s.strip()]
        try:
            return tuple(cast(s) for s in items)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None

    return parse


def _families(text):
    return _csv_list(OutcomeFamily.parse)(text)


def _strategies(text):
    return _csv_list(ReductionStrategy.parse)(text)


def _add_common(p):
    p.add_argument("--config", help="key = value file mirroring the long flags")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = _Parser(prog="iowmed", description="Microbiome mediation test with inverse odds weighting.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("test", help="run the mediation test on count and metadata files")
    _add_common(p)
    p.add_argument("--counts")
    p.add_argument("--metadata")
    p.add_argument("--exposure", help="binary exposure column")
    p.add_argument("--outcome", help="outcome column")
    p.add_argument("--family", choices=[f.value for f in OutcomeFamily])
    p.add_argument("--covariates", type=_csv_list(str), default=(), help="comma-separated covariate columns")
    p.add_argument("--strategy", type=ReductionStrategy.parse, default=ReductionStrategy.UMAP)
    p.add_argument("--components", type=int, default=2)
    p.add_argument("--pseudocount", type=float, default=0.5)
    p.add_argument("--b", type=int, default=1000, help="number of permutations")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--output", default="result.csv")
    p.set_defaults(required=("counts", "metadata", "exposure", "outcome", "family"))

    p = sub.add_parser("simulate", help="write a synthetic dataset")
    _add_common(p)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--p", type=int, default=100)
    p.add_argument("--t", type=int, default=5)
    p.add_argument("--effect", type=float, default=1.0, help="mediator -> outcome effect")
    p.add_argument("--family", choices=[f.value for f in OutcomeFamily], default="continuous")
    p.add_argument("--exposure-effect", type=float, default=5.0, help="exposure -> outcome effect")
    p.add_argument("--microbiome-effect", type=float, default=3.0, help="exposure -> taxa log-abundance shift")
    p.add_argument("--frac-assoc", type=float, default=0.5)
    p.add_argument("--null", action="store_true", help="no exposure effect on the microbiome")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(required=())

    for name, preset in (("power", "smoke"), ("type1", "type1-smoke")):
        p = sub.add_parser(name, help=f"{'power' if name == 'power' else 'type-I error'} sweep")
        _add_common(p)
        p.add_argument("--preset", choices=sorted(harness.PRESETS), default=preset)
        p.add_argument("--n-grid", type=_csv_list(int))
        p.add_argument("--p-rules", type=_csv_list(str))
        p.add_argument("--effect-grid", type=_csv_list(float))
        p.add_argument("--t-grid", type=_csv_list(int))
        p.add_argument("--families", type=_families)
        p.add_argument("--strategies", type=_strategies)
        p.add_argument("--n-sims", type=int)
        p.add_argument("--b", type=int)
        p.add_argument("--alphas", type=_csv_list(float))
        p.add_argument("--seed", type=int)
        p.add_argument("--components", type=int)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--output", default="-")
        p.set_defaults(required=())

    p = sub.add_parser("transform", help="pseudocount + ilr of a count table")
    _add_common(p)
    p.add_argument("--counts")
    p.add_argument("--pseudocount", type=float, default=0.5)
    p.add_argument("--output", default="ilr.csv")
    p.set_defaults(required=("counts",))

    p = sub.add_parser("reduce", help="reduce an ilr table to mediator components")
    _add_common(p)
    p.add_argument("--input")
    p.add_argument("--strategy", type=ReductionStrategy.parse, default=ReductionStrategy.UMAP)
    p.add_argument("--components", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", default="components.csv")
    p.set_defaults(required=("input",))

    p = sub.add_parser("sobel", help="Sobel test for one mediator column")
    _add_common(p)
    p.add_argument("--metadata")
    p.add_argument("--exposure")
    p.add_argument("--mediator")
    p.add_argument("--outcome")
    p.add_argument("--output", default="sobel.csv")
    p.set_defaults(required=("metadata", "exposure", "mediator", "outcome"))
    return parser, sub


def _config_argv(subparser, path):
    """Translate a config file into leading command-line tokens."""
    argv = []
    for key, value in read_config(path).items():
        flag = "--" + key.replace("_", "-")
        action = subparser._option_string_actions.get(flag)
        if action is None or flag == "--config":
            raise UsageError(f"unknown config key {key!r}")
        if isinstance(action, argparse._StoreTrueAction):
            if value.lower() in ("1", "true", "yes"):
                argv.append(flag)
        else:
            argv.extend([flag, value])
    return argv


def _parse(argv):
    parser, sub = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.error("a subcommand is required")
    if args.config:
        subparser = sub.choices[args.command]
        try:
            extra = _config_argv(subparser, args.config)
        except (ParseError, OSError) as exc:
            raise UsageError(str(exc)) from exc
        # config tokens go first so explicit flags override them
        args = parser.parse_args([args.command, *extra, *argv[1:]])
    missing = [name for name in args.required if getattr(args, name) in (None, "")]
    if missing:
        sub.choices[args.command].error("missing required option(s): " + ", ".join("--" + m for m in missing))
    return args


def _sidecar(output, tag):
    out = Path(output)
    return out.with_name(f"{out.stem}.{tag}{out.suffix or '.csv'}")


def cmd_test(args):
    counts = read_count_table(args.counts)
    family = OutcomeFamily.parse(args.family)
    binary = [args.exposure] + ([args.outcome] if family is OutcomeFamily.DICHOTOMOUS else [])
    meta = read_metadata(args.metadata, binary_columns=binary, required_columns=[args.outcome, *args.covariates])
    meta = meta.aligned_to(counts.sample_ids)
    covariates = np.column_stack([meta.column(c) for c in args.covariates]) if args.covariates else None
    result, _ = analyze(
        counts,
        meta.column(args.exposure),
        meta.column(args.outcome),
        family,
        covariates=covariates,
        strategy=args.strategy,
        n_components=args.components,
        pseudocount=args.pseudocount,
        B=args.b,
        seed=args.seed,
        n_jobs=args.workers,
    )
    write_record(result.as_record(), args.output)
    write_column(result.null_stats, "null_stat", _sidecar(args.output, "null_stats"))
    logger.info("t_obs = %.6g, p = %.6g", result.t_obs, result.p_value)


def cmd_simulate(args):
    scenario = SimScenario(
        n=args.n,
        p=args.p,
        t=args.t,
        mediator_outcome_effect=args.effect,
        family=args.family,
        frac_assoc=args.frac_assoc,
        exposure_mediator_effect=args.microbiome_effect,
        exposure_outcome_effect=args.exposure_effect,
        null_scenario=args.null,
        seed=args.seed,
    )
    data = generate(scenario)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_count_table(data.counts, out / "counts.csv")
    write_metadata(
        MetadataTable(data.counts.sample_ids, {"exposure": data.exposure, "outcome": data.outcome}),
        out / "metadata.csv",
    )
    assoc, true = set(data.associated_ids.tolist()), set(data.true_mediator_ids.tolist())
    with (out / "truth.csv").open("w", encoding="utf-8") as fh:
        fh.write("taxon_id,associated,true_mediator\n")
        for j, taxon in enumerate(data.counts.taxa_ids):
            fh.write(f"{taxon},{int(j in assoc)},{int(j in true)}\n")


def _sweep_config(args):
    overrides = {}
    for attr, field in (
        ("n_grid", "n_grid"), ("p_rules", "p_rules"), ("effect_grid", "effect_grid"), ("t_grid", "t_grid"),
        ("families", "families"), ("strategies", "strategies"), ("n_sims", "n_sims"), ("b", "B"),
        ("alphas", "alpha_grid"), ("seed", "master_seed"), ("components", "n_components"),
    ):
        value = getattr(args, attr)
        if value is not None:
            overrides[field] = value
    return harness.PRESETS[args.preset](**overrides)


def cmd_sweep(args):
    cfg = _sweep_config(args)
    run = harness.run_type1_sweep if args.command == "type1" else harness.run_power_sweep
    rows = run(cfg, workers=args.workers)
    harness.emit_results(rows, args.output)


def cmd_transform(args):
    counts = read_count_table(args.counts)
    write_matrix(counts_to_ilr(counts, args.pseudocount), counts.sample_ids, "ilr", args.output)


def cmd_reduce(args):
    ids, values = read_matrix(args.input)
    emb = reduce(values, args.strategy, args.components, seed=args.seed)
    write_matrix(emb.values, ids, "U", args.output)


def cmd_sobel(args):
    meta = read_metadata(args.metadata, binary_columns=[args.exposure], required_columns=[args.mediator, args.outcome])
    res = sobel_test(meta.column(args.exposure), meta.column(args.mediator), meta.column(args.outcome))
    record = {"statistic": res.statistic, "p_value": res.p_value, "a": res.a, "b": res.b}
    write_record(record, args.output)


COMMANDS = {
    "test": cmd_test,
    "simulate": cmd_simulate,
    "power": cmd_sweep,
    "type1": cmd_sweep,
    "transform": cmd_transform,
    "reduce": cmd_reduce,
    "sobel": cmd_sobel,
}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _parse(argv)
    except UsageError as exc:
        print(f"iowmed: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE

    progress = args.command in ("power", "type1")
    level = logging.DEBUG if args.verbose else logging.INFO if progress else logging.WARNING
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(name)s: %(message)s", force=True)
    try:
        COMMANDS[args.command](args)
    except (DataError, OSError) as exc:
        print(f"iowmed: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, IowmedError) as exc:
        print(f"iowmed: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
