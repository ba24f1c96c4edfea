#!/usr/bin/env python
"""Command-line entry point: ``pcadrank {weigh,ablate,groups,synth,report}``."""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Callable, Sequence

from rich.console import Console

from pcadrank import __version__
from pcadrank.classifiers import ClassifierSpec, default_specs, fit
from pcadrank.config import Command, OutputFormat, RunConfig, build_run_config
from pcadrank.dataio import Table, default_schema, load_csv, load_schema, stratified_folds
from pcadrank.errors import ConfigError, PcadRankError
from pcadrank.evaluation import ablation, best_classifier_per_group, per_group_rankings
from pcadrank.log import configure_logging
from pcadrank.reporting import ReportBundle, display
from pcadrank.seeding import derive_seed
from pcadrank.synth import PRESETS, Cohort, generate, load_spec, preset_spec
from pcadrank.weighting import weigh_all

logger = logging.getLogger("pcadrank.main")
console = Console()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pcadrank", description="Feature weighting and ablation for PCAD cohorts.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run file; flags override it")
    common.add_argument("--data", help="cohort CSV")
    common.add_argument("--schema", help="schema JSON (default: the nine-attribute layout)")
    common.add_argument("--out", help="output directory (default: out)")
    common.add_argument("--seed", type=int)
    common.add_argument("--folds", type=int, help="cross-validation folds (default 10)")
    common.add_argument("--bins", type=int, help="equal-frequency bins for numeric attributes (default 10)")
    common.add_argument("--relief-k", type=int, help="ReliefF neighbours (default 10)")
    common.add_argument("--relief-samples", type=int, help="sampled ReliefF anchors (default: every row)")
    common.add_argument("--smote-k", type=int, help="SMOTE neighbours (default 5)")
    common.add_argument("--smote-ratio", type=float, help="minority/majority target after SMOTE (default 1.0)")
    common.add_argument("--no-smote", dest="smote", action="store_const", const=False, help="train on the raw folds")
    common.add_argument("--feature", help="ablation target (default: the group column)")
    common.add_argument("--classifiers", help="comma list of classifier kinds or 'all'")
    common.add_argument("--format", choices=[f.value for f in OutputFormat])
    common.add_argument("--save-model", help="directory for models fitted on the full cohort (ablate)")
    common.add_argument("--top-n", type=int, help="attributes listed per group (default 5)")
    common.add_argument("--n-jobs", type=int)
    common.add_argument("--log-level")
    common.add_argument("--synth-spec", help="YAML/JSON synthetic spec (synth, report)")
    common.add_argument("--preset", choices=PRESETS, help="synthetic preset (default ipad)")
    common.add_argument("--effect", type=float, help="group log-odds shift of the planted preset (default 1.5)")
    common.add_argument("--n-rows", type=int, help="synthetic cohort size")

    sub.add_parser(Command.WEIGH.value, parents=[common], help="rank attributes with six weighting algorithms")
    sub.add_parser(Command.ABLATE.value, parents=[common], help="cross-validate with and without one feature")
    sub.add_parser(Command.GROUPS.value, parents=[common], help="top attributes and best classifier per group")
    sub.add_parser(Command.SYNTH.value, parents=[common], help="write a synthetic cohort with its ground truth")
    sub.add_parser(Command.REPORT.value, parents=[common], help="run weigh, ablate and groups as one pipeline")
    return parser


def load_table(config: RunConfig) -> Table:
    schema = load_schema(config.schema_file) if config.schema_file else default_schema()
    return load_csv(config.data, schema)


def synth_cohort(config: RunConfig) -> Cohort:
    overrides = {"seed": config.seed}
    if config.n_rows is not None:
        overrides["n_rows"] = config.n_rows
    if config.synth_spec is not None:
        return generate(load_spec(config.synth_spec, **overrides))
    return generate(preset_spec(config.preset, config.effect, **overrides))


def ablation_feature(config: RunConfig, table: Table) -> str:
    if config.feature is not None:
        return config.feature
    if table.schema.group is None:
        raise ConfigError("--feature is required when the schema has no group column")
    return table.schema.group.name


def specs_for(config: RunConfig) -> list[ClassifierSpec]:
    return default_specs(config.classifiers, seed=derive_seed(config.seed, "classifiers"))


# Subcommands
def cmd_weigh(config: RunConfig) -> ReportBundle:
    table = load_table(config)
    bundle = ReportBundle(config.out, config.format)
    bundle.add_weights(weigh_all(table, config.bins, config.relief_k, config.seed, n_jobs=config.n_jobs, relief_samples=config.relief_samples))
    return bundle


def cmd_ablate(config: RunConfig) -> ReportBundle:
    table = load_table(config)
    feature = ablation_feature(config, table)
    specs = specs_for(config)
    plan = stratified_folds(table, config.folds, derive_seed(config.seed, "folds"))
    logger.info("Fold sizes: %s", plan.fold_sizes())
    bundle = ReportBundle(config.out, config.format)
    bundle.add_ablation(ablation(table, feature, specs, plan, config.smote_config(), config.seed, config.n_jobs))
    if config.save_model is not None:
        for spec in specs:
            bundle.add_model(config.save_model, fit(spec, table, n_jobs=config.n_jobs))
    return bundle


def cmd_groups(config: RunConfig) -> ReportBundle:
    table = load_table(config)
    if table.schema.group is None:
        raise ConfigError("the schema has no group column")
    specs = specs_for(config)
    bundle = ReportBundle(config.out, config.format)
    rankings = per_group_rankings(table, config.top_n, config.bins, config.relief_k, config.seed, n_jobs=config.n_jobs)
    winners = best_classifier_per_group(table, specs, config.folds, config.seed, config.smote_config(), config.n_jobs)
    bundle.add_groups(rankings, winners, config.top_n)
    return bundle


def cmd_synth(config: RunConfig) -> ReportBundle:
    cohort = synth_cohort(config)
    bundle = ReportBundle(config.out, config.format)
    bundle.add_cohort(cohort)
    truth = cohort.truth
    console.print(f"[bold]Synthetic cohort[/bold]: {cohort.table.n_rows} rows, prevalence {truth.prevalence_realized:.4f}")
    for group, g in truth.groups.items():
        console.print(f"  {group:<12} {g.count:>6} rows  {g.positives:>6} positive")
    return bundle


def cmd_report(config: RunConfig) -> ReportBundle:
    try:
        from pcadrank.flow import CohortReportFlow
    except ImportError as exc:
        raise ConfigError("the report pipeline needs the 'pipeline' extra (crewai)") from exc

    cohort = None
    if config.data is not None:
        table = load_table(config)
    else:
        cohort = synth_cohort(config)
        table = cohort.table
    flow = CohortReportFlow(config, table, cohort)
    flow.kickoff()
    state = flow.state

    bundle = ReportBundle(config.out, config.format)
    if state.cohort is not None:
        bundle.add_cohort(state.cohort)
    bundle.add_weights(state.weights)
    if state.ablation is not None:
        bundle.add_ablation(state.ablation)
    bundle.add_groups(state.rankings, state.winners, config.top_n)
    display(f"# PCAD cohort report\n\n{bundle.markdown()}", console)
    return bundle


COMMANDS: dict[Command, Callable[[RunConfig], ReportBundle]] = {
    Command.WEIGH: cmd_weigh,
    Command.ABLATE: cmd_ablate,
    Command.GROUPS: cmd_groups,
    Command.SYNTH: cmd_synth,
    Command.REPORT: cmd_report,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = vars(build_parser().parse_args(argv))
    command, config_file = args.pop("command"), args.pop("config")
    configure_logging("INFO")
    try:
        config = build_run_config(command, args, config_file)
        configure_logging(config.log_level)
        bundle = COMMANDS[config.command](config)
        bundle.add_run_config(config)
        bundle.write()
    except PcadRankError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return exc.exit_code
    return 0


def run():
    """Console script entry point."""
    sys.exit(main())


if __name__ == "__main__":
    run()
