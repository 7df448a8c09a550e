"""Command-line entry points.

One command per process; each reads the run configuration (file plus flag
overrides), executes its pipeline stage, and writes artifacts under
`--out` in the fixed checkpoints/reports/logs layout. Exit status is 0 on
success and nonzero with a diagnostic on any error.
"""

import argparse
import sys

from kgalign.config import ABLATIONS, RunConfig, load_config
from kgalign.errors import KgAlignError
from kgalign.synth import SynthSpec, gen_synth
from kgalign.training import METRICS


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="run configuration file (key = value lines)")
    parser.add_argument("--data", help="dataset directory (overrides config data_dir)")
    parser.add_argument("--out", help="output directory (overrides config out_dir)")
    parser.add_argument("--seed", type=int, help="rng seed (overrides config)")
    parser.add_argument("--deterministic", action="store_true",
                        help="force serial compute kernels")
    parser.add_argument("--ablation", choices=ABLATIONS,
                        help="encoder ablation (overrides config)")
    parser.add_argument("--tau", help="fusion weight, or comma list for eval sweeps")
    parser.add_argument("--fusion", choices=("sum", "concat"),
                        help="fusion mode (overrides config)")
    parser.add_argument("--metric", choices=METRICS,
                        help="structural distance metric (overrides config)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kgalign",
        description="Entity alignment over knowledge-graph pairs: structural "
                    "GCN encoder, semantic projection, fusion, Hits@K reports.")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
            ("ingest", "load a dataset and report counts"),
            ("train-struct", "train the structural encoder"),
            ("train-sem", "train the semantic projection head"),
            ("align", "rank candidates for all test sources"),
            ("eval", "end-to-end evaluation with Hits@K metrics"),
            ("grad-check", "finite-difference audit of the loss gradients")):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)

    p = sub.add_parser("gen-synth", help="generate a synthetic twin-graph dataset")
    p.add_argument("--out", required=True, help="dataset directory to create")
    p.add_argument("--n", type=int, default=200, help="entities per graph")
    p.add_argument("--avg-degree", type=float, default=6.0)
    p.add_argument("--rel-types", type=int, default=5)
    p.add_argument("--attr-keys", type=int, default=12)
    p.add_argument("--noise", type=float, default=0.1,
                   help="fraction of twin edges dropped and re-added")
    p.add_argument("--seed-ratio", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    if args.data is not None:
        config.data_dir = args.data
    if args.out is not None:
        config.out_dir = args.out
    if args.seed is not None:
        config.rng_seed = args.seed
    if args.deterministic:
        config.deterministic = True
    if args.ablation is not None:
        config.ablation = args.ablation
    if args.fusion is not None:
        config.fusion_mode = args.fusion
    if args.metric is not None:
        config.metric = args.metric
    if args.tau is not None and "," not in args.tau:
        config.tau = float(args.tau)
    config.validate()
    return config


def _apply_determinism(config: RunConfig) -> None:
    if config.deterministic:
        import threadpoolctl
        threadpoolctl.threadpool_limits(1)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "gen-synth":
            spec = SynthSpec(n=args.n, avg_degree=args.avg_degree,
                             n_relation_types=args.rel_types,
                             n_attr_keys=args.attr_keys,
                             edge_noise=args.noise,
                             seed_ratio=args.seed_ratio,
                             rng_seed=args.seed)
            summary = gen_synth(spec, args.out)
            print(f"wrote twin-graph dataset to {args.out}: "
                  f"{summary['n_entities']} entities per graph, "
                  f"{summary['n_edges_g1']}/{summary['n_edges_g2']} edges")
            return 0

        config = _config_from_args(args)
        _apply_determinism(config)
        from kgalign import pipeline

        if args.command == "ingest":
            pipeline.run_ingest(config)
        elif args.command == "train-struct":
            pipeline.run_train_struct(config)
        elif args.command == "train-sem":
            pipeline.run_train_sem(config)
        elif args.command == "align":
            pipeline.run_align(config)
        elif args.command == "eval":
            taus = None
            if args.tau is not None and "," in args.tau:
                taus = [float(t) for t in args.tau.split(",") if t.strip()]
            pipeline.run_eval(config, taus=taus)
        elif args.command == "grad-check":
            outcome = pipeline.run_grad_check(config)
            return 0 if outcome["passed"] else 1
        return 0
    except KgAlignError as exc:
        print(f"kgalign {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"kgalign {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
