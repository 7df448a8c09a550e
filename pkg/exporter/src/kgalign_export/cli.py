"""Command-line interface: `kgalign-export export --in FILE --backend
{pretrained,hash} --dim N --out FILE [--seed N]`."""

import argparse
import sys

from kgalign_export.jobs import BACKENDS, ExportError, ExportJob, export_embeddings


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kgalign-export",
        description="Produce a kgalign text-embedding table from entity "
                    "descriptions (label<TAB>text per line).")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("export", help="embed a descriptions file")
    p.add_argument("--in", dest="input_path", required=True,
                   help="descriptions file: entity_label<TAB>text")
    p.add_argument("--out", dest="output_path", required=True,
                   help="embedding table to write")
    p.add_argument("--backend", choices=BACKENDS, default="hash")
    p.add_argument("--dim", type=int, default=256,
                   help="output width (hash backend; the pretrained encoder "
                        "fixes its own width)")
    p.add_argument("--seed", type=int, default=0, help="hash backend seed")
    p.add_argument("--pooling", choices=("lead", "mean"), default="lead",
                   help="pretrained backend: leading special-token vector "
                        "or mean pooling")
    p.add_argument("--model", default="paraphrase-multilingual-MiniLM-L12-v2",
                   help="pretrained backend model name")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    job = ExportJob(input_path=args.input_path, output_path=args.output_path,
                    backend=args.backend, dim=args.dim, seed=args.seed,
                    pooling=args.pooling, model_name=args.model)
    try:
        count = export_embeddings(job)
    except ExportError as exc:
        print(f"kgalign-export: error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"kgalign-export: error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {count} embeddings to {args.output_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
