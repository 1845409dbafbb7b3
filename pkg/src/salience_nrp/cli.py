"""Command-line entry point.

Exit codes: 0 success, 1 input error, 2 infeasible selection problem,
3 internal invariant failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from salience_nrp.grouping import METHODS, SCALINGS, InvariantError
from salience_nrp.model import DatasetError
from salience_nrp.nrp import InfeasibleError
from salience_nrp.pipeline import PipelineConfig, run_pipeline
from salience_nrp.salience import summarize
from salience_nrp.synth import SynthSpec, synth

log = logging.getLogger("salience_nrp")

EXIT_INPUT = 1
EXIT_INFEASIBLE = 2
EXIT_INVARIANT = 3

PIPELINE_COMMANDS = {
    "ingest": "validate the input directory and print dataset counts",
    "salience": "write salience.csv and print the salience summary",
    "group": "cluster stakeholders and write clusters.csv / centroids.csv per method",
    "recommend-k": "score k with the validity indices and write k_recommendation.json",
    "solve": "compute the Pareto front for all retained stakeholders and each definitive group",
    "coverage": "solve, then write coverage.csv and comparison.json",
    "run": "full pipeline including report.json and radar.svg",
}


def _pipeline_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input-dir", required=True)
    p.add_argument("--output-dir", default="out")
    p.add_argument("--method", choices=(*METHODS, "all"), default="all")
    p.add_argument("--k", type=int, default=None, help="number of clusters (default: majority rule)")
    p.add_argument("--scaling", choices=SCALINGS, default="raw")
    p.add_argument("--b1-frac", type=float, default=0.20)
    p.add_argument("--b2-frac", type=float, default=0.25)
    p.add_argument("--b1-abs", type=float, default=None)
    p.add_argument("--b2-abs", type=float, default=None)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--attempts", type=int, default=50)
    p.add_argument("--restarts", type=int, default=25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k-min", type=int, default=2)
    p.add_argument("--k-max", type=int, default=6)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="salience-nrp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in PIPELINE_COMMANDS.items():
        _pipeline_args(sub.add_parser(name, help=help_text))

    s = sub.add_parser("synth", help="generate a synthetic dataset")
    s.add_argument("--output-dir", required=True)
    s.add_argument("--n-stakeholders", type=int, default=80)
    s.add_argument("--n-requirements", type=int, default=40)
    s.add_argument("--n-groups", type=int, default=4)
    s.add_argument("--component-sd", type=float, default=2.0)
    s.add_argument("--votes-min", type=int, default=2)
    s.add_argument("--votes-max", type=int, default=6)
    s.add_argument("--effort-min", type=float, default=4.0)
    s.add_argument("--effort-max", type=float, default=400.0)
    s.add_argument("--seed", type=int, default=0)
    return parser


def _config(args: argparse.Namespace) -> PipelineConfig:
    return PipelineConfig(
        input_dir=args.input_dir,
        output_dir=args.output_dir,
        method=args.method,
        k=args.k,
        scaling=args.scaling,
        b1_frac=args.b1_frac,
        b2_frac=args.b2_frac,
        b1_abs=args.b1_abs,
        b2_abs=args.b2_abs,
        steps=args.steps,
        attempts=args.attempts,
        restarts=args.restarts,
        seed=args.seed,
        k_min=args.k_min,
        k_max=args.k_max,
    )


def _print_result(command: str, result) -> None:
    if command == "ingest":
        ds = result.dataset
        print(
            json.dumps(
                {
                    "stakeholders_retained": len(ds),
                    "requirements": len(ds.requirements),
                    "votes": len(ds.votes),
                    "demanding": len(ds.demanding_ids()),
                },
                indent=2,
            )
        )
    elif command == "salience":
        print(json.dumps(summarize(result.salience).as_dict(), indent=2))
    elif command in ("group", "recommend-k"):
        for g in result.groupings:
            print(f"{g.label}: k={g.k} definitive size={len(g.partition.definitive_ids)}")
    elif command in ("solve", "coverage"):
        for label, front in result.fronts.items():
            print(f"{label}: {len(front)} solutions")
    elif command == "run" and result.report is not None:
        for row in result.report["coverage"]:
            p = row.get("wilcoxon_p_vs_def0")
            extra = "" if p is None else f"  p vs def0={p:.4g}"
            print(f"{row['front']}: coverage {row['mean_pct']:.2f} +/- {row['sd_pct']:.2f}{extra}")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "synth":
            spec = SynthSpec(
                n_stakeholders=args.n_stakeholders,
                n_requirements=args.n_requirements,
                n_groups=args.n_groups,
                component_sd=args.component_sd,
                votes_per_stakeholder=(args.votes_min, args.votes_max),
                effort_range=(args.effort_min, args.effort_max),
                seed=args.seed,
            )
            synth(spec, args.output_dir)
            return 0
        config = _config(args)
        result = run_pipeline(config, stage=args.command)
        _print_result(args.command, result)
        return 0
    except (DatasetError, ValueError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except InfeasibleError as exc:
        log.error("%s", exc)
        return EXIT_INFEASIBLE
    except (InvariantError, AssertionError) as exc:
        log.error("internal invariant failed: %s", exc)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
