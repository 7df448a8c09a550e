"""Deterministic report files.

Metrics reports are JSON with sorted keys so identical runs produce
byte-identical files; wall-clock timings go to the run log instead.
Candidate dumps are TSV: source, rank, target, score.
"""

import json
import os

from kgalign.fusion import RankedCandidates


def ensure_out_layout(out_dir: str) -> dict[str, str]:
    layout = {name: os.path.join(out_dir, name)
              for name in ("checkpoints", "reports", "logs")}
    for path in layout.values():
        os.makedirs(path, exist_ok=True)
    return layout


def write_json_report(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_candidates_tsv(path: str, candidates: list[RankedCandidates],
                         source_names: list[str], target_names: list[str]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("source\trank\ttarget\tscore\n")
        for rc in candidates:
            for rank, (target, score) in enumerate(zip(rc.targets, rc.scores),
                                                   start=1):
                fh.write(f"{source_names[rc.source]}\t{rank}\t"
                         f"{target_names[int(target)]}\t{float(score):.10f}\n")


def write_curve_tsv(path: str, curve: list[float], column: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"epoch\t{column}\n")
        for epoch, value in enumerate(curve, start=1):
            fh.write(f"{epoch}\t{value:.10f}\n")


def append_log(log_path: str, message: str) -> None:
    with open(log_path, "a", encoding="utf-8") as fh:
        fh.write(message.rstrip("\n") + "\n")
