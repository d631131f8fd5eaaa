"""CLI for crlscore."""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from crlscore import __version__, config, toml
from crlscore.formatting import format_edge, format_independence, format_triple
from crlscore.log import collect_warnings, configure_logging
from crlscore.model import (
    CrlScoreError,
    DataTable,
    ValidationError,
    discretize,
    load_graph,
    load_mask,
    load_run_logs,
    load_table,
    write_mask,
    write_table,
)
from crlscore.report import Report, write_report

EXIT_OK = 0
EXIT_ERROR = 2
EXIT_USAGE = 64
EXIT_NO_INPUT = 66


class MissingFileError(Exception):
    def __init__(self, path: str | Path):
        super().__init__(str(path))
        self.path = path


class UsageError(Exception):
    pass


class CrlScoreParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with 64."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _input(path: str | None) -> str | None:
    if path is not None and not Path(path).is_file():
        raise MissingFileError(path)
    return path


def _table(path: str, bins: int | None = None) -> DataTable:
    table = load_table(_input(path))
    if bins is not None:
        table = discretize(table, bins)
    return table


def _new_report(args: argparse.Namespace, *inputs: str | None) -> Report:
    report = Report(version=__version__, command=["crlscore", *args.argv])
    for path in inputs:
        report.add_input(path)
    return report


# =============================================================================
# graph
# =============================================================================


def _census_section(g) -> dict:
    from crlscore.graph import desiderata_report

    desiderata = desiderata_report(g)
    census = desiderata.census
    return {
        "chains": len(census.chains),
        "forks": len(census.forks),
        "colliders": len(census.colliders),
        "confounders": len(desiderata.confounded_edges),
        "chain_triples": [format_triple(t) for t in census.chains],
        "fork_triples": [format_triple(t) for t in census.forks],
        "collider_triples": [format_triple(t) for t in census.colliders],
        "confounder_triples": [format_triple(t) for t in desiderata.confounded_edges],
        "variables": desiderata.variable_count,
        "has_numeric": desiderata.has_numeric,
        "has_categorical": desiderata.has_categorical,
        "desiderata_satisfied": desiderata.satisfied,
    }


def graph_command(args: argparse.Namespace) -> Report:
    from crlscore.graph import (
        compare_graphs,
        d_separated,
        load_edge_scores,
        mediated_ancestors,
        validate_dag,
    )

    if args.graph_subcommand == "compare":
        truth = load_graph(_input(args.truth))
        predicted = load_graph(_input(args.predicted))
        scores = load_edge_scores(_input(args.scores)) if args.scores else None
        result = compare_graphs(truth, predicted, scores)
        report = _new_report(args, args.truth, args.predicted, args.scores)
        report.add_section(
            "compare",
            {
                "shd": result.shd,
                "tpr": result.tpr,
                "auc": result.auc,
                "missing": [format_edge(e) for e in result.missing],
                "extra": [format_edge(e) for e in result.extra],
                "reversed": [format_edge(e) for e in result.reversed],
            },
        )
        return report

    g = load_graph(_input(args.graph))
    report = _new_report(args, args.graph)
    if args.graph_subcommand == "validate":
        report.add_section(
            "graph",
            {
                "valid": True,
                "variables": len(g.variables),
                "edges": len(g.edge_names),
                "order": validate_dag(g),
            },
        )
    elif args.graph_subcommand == "census":
        report.add_section("census", _census_section(g))
    elif args.graph_subcommand == "dsep":
        given = tuple(args.given)
        report.add_section(
            "dsep",
            {
                "query": format_independence(args.x, args.y, given),
                "d-separated": d_separated(g, args.x, args.y, given),
            },
        )
    elif args.graph_subcommand == "prune":
        report.add_section(
            "prune",
            {
                "target": args.target,
                "parents": list(g.parents(args.target)),
                "prunable": mediated_ancestors(g, args.target),
            },
        )
    return report


# =============================================================================
# indep
# =============================================================================


def _chi2_dict(result) -> dict:
    return {
        "statistic": result.statistic,
        "dof": result.dof,
        "p_value": result.p_value,
        "alpha": result.alpha,
        "dependent": result.dependent,
    }


def indep_command(args: argparse.Namespace) -> Report:
    from crlscore.independence import (
        audit_graph_against_data,
        chi2_independence,
        independent_rows,
    )

    raw = load_table(_input(args.data))
    data = raw if args.bins is None else discretize(raw, args.bins)
    if args.indep_subcommand == "chi2":
        given = tuple(args.given)
        result = chi2_independence(data, args.x, args.y, given, args.alpha)
        report = _new_report(args, args.data)
        section = {"query": format_independence(args.x, args.y, given)}
        section.update(_chi2_dict(result))
        report.add_section("chi2", section)
        return report

    if args.indep_subcommand == "audit":
        g = load_graph(_input(args.graph))
        audit = audit_graph_against_data(g, data, args.max_conditioning, args.alpha)
        report = _new_report(args, args.graph, args.data)
        report.add_section(
            "audit",
            {
                "checks": len(audit.entries),
                "violations": len(audit.violations),
                "violation_rate": audit.violation_rate,
                "entries": [
                    {
                        "query": format_independence(e.x, e.y, e.given),
                        "expected": e.expected,
                        "p_value": e.result.p_value,
                        "consistent": e.consistent,
                    }
                    for e in audit.entries
                ],
            },
        )
        return report

    # rows are chosen on the binned codes but written with their raw values
    kept = raw.take(independent_rows(data, args.x, args.y, args.seed))
    if args.out_data:
        write_table(kept, args.out_data)
    report = _new_report(args, args.data)
    report.add_section(
        "filter",
        {
            "x": args.x,
            "y": args.y,
            "rows_in": data.n_rows,
            "rows_kept": kept.n_rows,
            "seed": args.seed,
            "written": args.out_data,
        },
    )
    return report


# =============================================================================
# metrics
# =============================================================================


def _first_column(path: str) -> np.ndarray:
    table = load_table(_input(path))
    return table.column(table.names[0])


def metrics_command(args: argparse.Namespace) -> Report:
    from crlscore import generation, representation

    if args.metrics_subcommand == "disentangle":
        factors = _table(args.factors)
        latents = _table(args.latents)
        scores = representation.disentanglement_suite(
            factors, latents, args.bins, args.seed
        )
        report = _new_report(args, args.factors, args.latents)
        report.add_section("disentanglement", scores.as_dict())
        return report

    if args.metrics_subcommand == "assign":
        factors = _table(args.factors)
        latents = _table(args.latents)
        m = representation.association_matrix(factors, latents, args.metric)
        matching = representation.hungarian_match(m)
        section = {
            "metric": args.metric,
            "matrix": {f: list(m.values[i]) for i, f in enumerate(m.factors)},
            "assignment": {
                m.factors[i]: m.latents[j] for i, j in enumerate(matching.assignment)
            },
            "total": matching.total,
            "mean": matching.mean,
        }
        if m.shape[1] <= representation.SWEEP_MAX_COLUMNS:
            sweep = representation.permutation_sweep(m)
            section["sweep"] = {
                "permutations": sweep.count,
                "min": sweep.min,
                "max": sweep.max,
                "min_mean": sweep.min / m.shape[0],
                "max_mean": sweep.max / m.shape[0],
            }
        report = _new_report(args, args.factors, args.latents)
        report.add_section("assign", section)
        return report

    section: dict = {}
    inputs: list[str | None] = []
    if args.original or args.reconstructed:
        if not (args.original and args.reconstructed):
            raise ValidationError("--original and --reconstructed go together")
        original, recon = _table(args.original), _table(args.reconstructed)
        section["reconstruction"] = generation.reconstruction_score(
            original, recon, args.mode
        )
        inputs += [args.original, args.reconstructed]
    if args.real or args.generated:
        if not (args.real and args.generated):
            raise ValidationError("--real and --generated go together")
        real = generation.load_embeddings(_input(args.real))
        fake = generation.load_embeddings(_input(args.generated))
        section["fid"] = generation.fid(real, fake)
        section["kid"] = generation.kid(real, fake)
        inputs += [args.real, args.generated]
    if args.probs:
        section["is"] = generation.inception_score(
            generation.load_probabilities(_input(args.probs))
        )
        inputs.append(args.probs)
    if args.mask or args.oracle:
        if not (args.mask and args.oracle):
            raise ValidationError("--mask and --oracle go together")
        a, b = load_mask(_input(args.mask)), load_mask(_input(args.oracle))
        section["iou"] = generation.iou(a, b)
        section["pixel_l1"] = generation.pixel_l1(a, b)
        inputs += [args.mask, args.oracle]
    if args.target or args.predicted:
        if not (args.target and args.predicted):
            raise ValidationError("--target and --predicted go together")
        section["effectiveness"] = generation.effectiveness(
            _first_column(args.target), _first_column(args.predicted), args.kind
        )
        inputs += [args.target, args.predicted]
    if not section:
        raise ValidationError("metrics generation needs at least one input pair")
    report = _new_report(args, *inputs)
    report.add_section("generation", section)
    return report


# =============================================================================
# score and runs
# =============================================================================


def _scorecard_section(card) -> dict:
    models = {}
    for i, name in enumerate(card.models):
        models[name] = {
            "raw": list(card.raw[i]),
            "normalized": list(card.normalized[i]),
            "radar_area": card.radar_area[i],
            "origami_area": card.origami_area[i],
            "origami_score": card.origami_score[i],
        }
    return {
        "card": card.name,
        "axes": [a.name for a in card.axes],
        "h": card.h,
        "max_origami_area": card.max_origami_area,
        "ranking": card.ranking(),
        "models": models,
    }


def _load_card(args: argparse.Namespace):
    from crlscore.scoring import card_from_config, load_values, reorder_axes

    card_path = Path(_input(args.config))
    cfg = config.load_card_config(card_path)
    if args.h is not None:
        cfg["card"]["h"] = args.h
    if args.degenerate_to_half:
        cfg["card"]["degenerate_to_half"] = True
    card = card_from_config(cfg)
    if args.order:
        card = reorder_axes(card, [s.strip() for s in args.order.split(",")])
    values_path = args.values
    if values_path is None and card.values_file:
        values_path = str(card_path.parent / card.values_file)
    values = load_values(_input(values_path)) if values_path else None
    return card, values, values_path


def score_command(args: argparse.Namespace) -> Report:
    from crlscore.scoring import build_scorecard
    from crlscore.svg import plot_from_scorecard, write_svg

    card, values, values_path = _load_card(args)
    scorecard = build_scorecard(card, values)
    if args.svg:
        write_svg(plot_from_scorecard(scorecard, args.plot), args.svg)
    report = _new_report(args, args.config, values_path)
    report.add_section("scorecard", _scorecard_section(scorecard))
    return report


def _runs_section(aggregate) -> dict:
    return {
        "mode": aggregate.mode,
        "k": aggregate.k,
        "std": aggregate.std_convention,
        "metrics": {
            name: {"mean": s.mean, "std": s.std, "runs": list(s.runs)}
            for name, s in aggregate.metrics.items()
        },
    }


def runs_command(args: argparse.Namespace) -> Report:
    from crlscore.scoring import aggregate_runs

    logs = load_run_logs(_input(args.logs))
    aggregate = aggregate_runs(logs, args.mode, args.k, args.std)
    report = _new_report(args, args.logs)
    report.add_section("runs", _runs_section(aggregate))
    return report


# =============================================================================
# scm
# =============================================================================


def _write_text(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    Path(out).write_text(text, encoding="utf-8")


def scm_command(args: argparse.Namespace) -> Report | None:
    from crlscore import scm
    from crlscore.generation import counterfactual_accuracy

    if args.scm_subcommand == "pendulum":
        intervention = None
        if args.do:
            assignments = scm.parse_assignments([args.do])
            intervention = next(iter(assignments.items()))
        cases = scm.pendulum_counterfactual_pairs(args.n, args.seed, intervention)
        if args.dir:
            out_dir = Path(args.dir)
            out_dir.mkdir(parents=True, exist_ok=True)
            for i, case in enumerate(cases):
                write_mask(case.generated, out_dir / f"factual_{i:04d}.pbm")
                write_mask(case.oracle, out_dir / f"counterfactual_{i:04d}.pbm")
            write_table(
                scm.pendulum_table(scm.sample_pendulum(args.n, args.seed)),
                out_dir / "scenes.csv",
            )
        accuracy = counterfactual_accuracy(cases)
        report = _new_report(args)
        report.add_section(
            "pendulum",
            {
                "scenes": len(cases),
                "intervention": args.do,
                "factual_vs_oracle_iou": accuracy.mean_iou,
                "factual_vs_oracle_l1": accuracy.mean_l1,
                "written": args.dir,
            },
        )
        return report

    model = scm.load_scm(_input(args.scm))
    if args.scm_subcommand == "sample":
        table = scm.sample(model, args.n, args.seed)
        _write_text(table.to_frame().to_csv(index=False, lineterminator="\n"), args.out)
        return None
    if args.scm_subcommand == "intervene":
        after = scm.intervene(model, scm.parse_assignments(args.do))
        text = json.dumps(scm.scm_to_dict(after), indent=2) + "\n"
        _write_text(text, args.out)
        return None

    observation = scm.parse_assignments(args.observation)
    assignments = scm.parse_assignments(args.do)
    row = scm.counterfactual(model, observation, assignments)
    report = _new_report(args, args.scm)
    report.add_section(
        "counterfactual",
        {"observation": observation, "do": assignments, "result": row},
    )
    return report


# =============================================================================
# report and config
# =============================================================================


def report_command(args: argparse.Namespace) -> Report:
    """Every section whose inputs were given, in a single report."""
    from crlscore.independence import audit_graph_against_data
    from crlscore.representation import disentanglement_suite
    from crlscore.scoring import aggregate_runs, build_scorecard

    report = _new_report(args)
    if args.graph:
        g = load_graph(_input(args.graph))
        report.add_input(args.graph)
        report.add_section("graph", _census_section(g))
        if args.data:
            data = _table(args.data, args.bins)
            report.add_input(args.data)
            audit = audit_graph_against_data(
                g, data, args.max_conditioning, args.alpha
            )
            report.add_section(
                "audit",
                {
                    "checks": len(audit.entries),
                    "violations": len(audit.violations),
                    "violation_rate": audit.violation_rate,
                },
            )
    if args.factors or args.latents:
        if not (args.factors and args.latents):
            raise ValidationError("--factors and --latents go together")
        scores = disentanglement_suite(
            _table(args.factors), _table(args.latents), config.DEFAULT_BINS, args.seed
        )
        report.add_input(args.factors)
        report.add_input(args.latents)
        report.add_section("metrics", scores.as_dict())
    if args.config:
        card, values, values_path = _load_card(args)
        report.add_input(args.config)
        report.add_input(values_path)
        scorecard = build_scorecard(card, values)
        report.add_section("scorecard", _scorecard_section(scorecard))
    if args.logs:
        logs = load_run_logs(_input(args.logs))
        report.add_input(args.logs)
        report.add_section(
            "runs", _runs_section(aggregate_runs(logs, args.mode, args.k, args.std))
        )
    if not report.sections:
        raise ValidationError(
            "report needs at least one of --graph, --factors, --config, --logs"
        )
    return report


def config_create_command(args: argparse.Namespace) -> int:
    """Create a default scorecard config file."""
    path = config.write_default_card(args.path)
    print(f"Created {path}")
    return EXIT_OK


# =============================================================================
# Parser
# =============================================================================


def _output_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--format",
        choices=["text", "json"],
        default="text",
        help="Report format (default: text)",
    )
    common.add_argument("--out", help="Write the result here instead of stdout")
    return common


def _stat_options() -> argparse.ArgumentParser:
    stats = argparse.ArgumentParser(add_help=False)
    stats.add_argument("--alpha", type=float, default=config.DEFAULT_ALPHA)
    stats.add_argument(
        "--bins",
        type=int,
        default=None,
        help="Discretize numeric columns into this many equal-frequency bins",
    )
    stats.add_argument(
        "--max-conditioning",
        type=int,
        default=config.DEFAULT_MAX_CONDITIONING,
        help="Largest conditioning set tested (default: 2)",
    )
    return stats


def _card_options(parser: argparse.ArgumentParser, required: bool) -> None:
    parser.add_argument(
        "--config",
        default=config.DEFAULT_CARD_PATH if required else None,
        help=f"Scorecard config (default: {config.DEFAULT_CARD_PATH})"
        if required
        else "Scorecard config",
    )
    parser.add_argument("--values", help="Raw values CSV, models as rows")
    parser.add_argument("--h", type=float, default=None, help="Auxiliary radius")
    parser.add_argument("--order", help="Comma-separated axis order")
    parser.add_argument(
        "--degenerate-to-half",
        action="store_true",
        help="Map constant unbounded metrics to 0.5 instead of failing",
    )


def _run_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--mode", choices=["all", "boundaries_out", "top_k"], default="all"
    )
    parser.add_argument("--k", type=int, default=None)
    parser.add_argument(
        "--std", choices=["population", "sample"], default=config.DEFAULT_STD
    )


def build_parser() -> CrlScoreParser:
    out = _output_options()
    stats = _stat_options()
    parser = CrlScoreParser(
        prog="crlscore",
        description="Evaluate causal representation learning experiments",
        usage="%(prog)s {graph,indep,metrics,score,runs,scm,report,config} ...",
    )
    parser.add_argument(
        "--version",
        "-v",
        action="version",
        version=f"%(prog)s {__version__}",
    )
    parser.add_argument(
        "--verbose", action="store_true", help="Log progress to stderr"
    )
    subparsers = parser.add_subparsers(dest="subcommand", required=True)

    # graph
    graph_parser = subparsers.add_parser("graph", help="Causal graph analysis")
    graph_sub = graph_parser.add_subparsers(dest="graph_subcommand", required=True)
    for name, help_text in (
        ("validate", "Check that a graph file is a valid DAG"),
        ("census", "Count chains, forks, colliders and confounders"),
    ):
        p = graph_sub.add_parser(name, help=help_text, parents=[out])
        p.add_argument("--graph", required=True)
    p = graph_sub.add_parser("dsep", help="Query d-separation", parents=[out])
    p.add_argument("--graph", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--given", nargs="*", default=[])
    p = graph_sub.add_parser(
        "compare", help="SHD, TPR and AUC against a true graph", parents=[out]
    )
    p.add_argument("--truth", required=True)
    p.add_argument("--predicted", required=True)
    p.add_argument("--scores", help="CSV of cause,effect,score")
    p = graph_sub.add_parser(
        "prune", help="Ancestors removable toward a target", parents=[out]
    )
    p.add_argument("--graph", required=True)
    p.add_argument("--target", required=True)

    # indep
    indep_parser = subparsers.add_parser("indep", help="Chi-square independence")
    indep_sub = indep_parser.add_subparsers(dest="indep_subcommand", required=True)
    p = indep_sub.add_parser("chi2", help="Test x _||_ y | given", parents=[out, stats])
    p.add_argument("--data", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--given", nargs="*", default=[])
    p = indep_sub.add_parser(
        "audit", help="Test a graph's implications on data", parents=[out, stats]
    )
    p.add_argument("--graph", required=True)
    p.add_argument("--data", required=True)
    p = indep_sub.add_parser(
        "filter", help="Subsample until x and y are independent", parents=[out, stats]
    )
    p.add_argument("--data", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--seed", type=int, default=config.DEFAULT_SEED)
    p.add_argument("--out-data", help="Write the kept rows to this CSV")

    # metrics
    metrics_parser = subparsers.add_parser("metrics", help="Evaluation metrics")
    metrics_sub = metrics_parser.add_subparsers(
        dest="metrics_subcommand", required=True
    )
    p = metrics_sub.add_parser(
        "disentangle", help="MIC, TIC, IRS, JEMMIG and DCI", parents=[out]
    )
    p.add_argument("--factors", required=True)
    p.add_argument("--latents", required=True)
    p.add_argument("--bins", type=int, default=config.DEFAULT_BINS)
    p.add_argument("--seed", type=int, default=config.DEFAULT_SEED)
    p = metrics_sub.add_parser(
        "assign", help="Hungarian factor-latent matching", parents=[out]
    )
    p.add_argument("--factors", required=True)
    p.add_argument("--latents", required=True)
    p.add_argument("--metric", choices=["mic", "tic"], default="mic")
    p = metrics_sub.add_parser(
        "generation", help="Reconstruction, FID, KID, IS, IoU", parents=[out]
    )
    p.add_argument("--original")
    p.add_argument("--reconstructed")
    p.add_argument("--mode", choices=["mae", "mse"], default="mae")
    p.add_argument("--real", help="Embeddings of real samples")
    p.add_argument("--generated", help="Embeddings of generated samples")
    p.add_argument("--probs", help="Class probabilities of generated samples")
    p.add_argument("--mask", help="Generated counterfactual mask (PBM)")
    p.add_argument("--oracle", help="Ground-truth counterfactual mask (PBM)")
    p.add_argument("--target")
    p.add_argument("--predicted")
    p.add_argument(
        "--kind", choices=["classification", "regression"], default="classification"
    )

    # score
    p = subparsers.add_parser(
        "score", help="Scorecard and origami scores", parents=[out]
    )
    _card_options(p, required=True)
    p.add_argument("--svg", help="Write a plot to this SVG file")
    p.add_argument("--plot", choices=["radar", "origami"], default="origami")

    # runs
    runs_parser = subparsers.add_parser("runs", help="Multi-run aggregation")
    runs_sub = runs_parser.add_subparsers(dest="runs_subcommand", required=True)
    p = runs_sub.add_parser("aggregate", help="Mean and std per metric", parents=[out])
    p.add_argument("--logs", required=True, help="CSV of run,metric,value")
    _run_options(p)

    # scm
    scm_parser = subparsers.add_parser("scm", help="Structural causal models")
    scm_sub = scm_parser.add_subparsers(dest="scm_subcommand", required=True)
    p = scm_sub.add_parser("sample", help="Sample rows as CSV", parents=[out])
    p.add_argument("--scm", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=config.DEFAULT_SEED)
    p = scm_sub.add_parser(
        "intervene", help="Apply do() and print the SCM", parents=[out]
    )
    p.add_argument("--scm", required=True)
    p.add_argument("--do", nargs="+", required=True, metavar="NAME=VALUE")
    p = scm_sub.add_parser(
        "counterfactual", help="Abduction-action-prediction", parents=[out]
    )
    p.add_argument("--scm", required=True)
    p.add_argument("--observation", nargs="+", required=True, metavar="NAME=VALUE")
    p.add_argument("--do", nargs="*", default=[], metavar="NAME=VALUE")
    p = scm_sub.add_parser(
        "pendulum", help="Render pendulum counterfactual pairs", parents=[out]
    )
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=config.DEFAULT_SEED)
    p.add_argument("--do", metavar="NAME=VALUE")
    p.add_argument("--dir", help="Write PBM rasters and scenes.csv here")

    # report
    p = subparsers.add_parser(
        "report", help="One report over every given input", parents=[out, stats]
    )
    p.add_argument("--graph")
    p.add_argument("--data")
    p.add_argument("--factors")
    p.add_argument("--latents")
    p.add_argument("--seed", type=int, default=config.DEFAULT_SEED)
    p.add_argument("--logs")
    _card_options(p, required=False)
    _run_options(p)

    # config
    config_parser = subparsers.add_parser("config", help="Configuration management")
    config_sub = config_parser.add_subparsers(dest="config_subcommand", required=True)
    p = config_sub.add_parser("create", help="Create default scorecard config")
    p.add_argument(
        "--path",
        default=config.DEFAULT_CARD_PATH,
        help=f"Path to config file (default: {config.DEFAULT_CARD_PATH})",
    )
    return parser


_HANDLERS = {
    "graph": graph_command,
    "indep": indep_command,
    "metrics": metrics_command,
    "score": score_command,
    "runs": runs_command,
    "scm": scm_command,
    "report": report_command,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"crlscore: error: usage: {e}", file=sys.stderr)
        return EXIT_USAGE
    args.argv = argv
    configure_logging(args.verbose)

    try:
        if args.subcommand == "config":
            return config_create_command(args)
        with collect_warnings() as messages:
            result = _HANDLERS[args.subcommand](args)
        if result is not None:
            result.warnings.extend(messages)
            write_report(result, args.format, args.out)
    except MissingFileError as e:
        print(f"crlscore: error: missing-file: {e.path}", file=sys.stderr)
        return EXIT_NO_INPUT
    except CrlScoreError as e:
        print(f"crlscore: error: {e.kind}: {e}", file=sys.stderr)
        return EXIT_ERROR
    except toml.TOMLError as e:
        print(f"crlscore: error: parse: {e}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as e:
        print(f"crlscore: error: missing-file: {e.filename or e}", file=sys.stderr)
        return EXIT_NO_INPUT
    except KeyboardInterrupt:
        return 130
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
