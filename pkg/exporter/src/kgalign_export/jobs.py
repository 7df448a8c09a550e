"""Export jobs: read a descriptions file, embed every entity, write the
embedding table."""

import hashlib
import sys
from dataclasses import dataclass

import numpy as np

BACKENDS = ("pretrained", "hash")
MIN_FIXTURE_WIDTH = 8


class ExportError(Exception):
    pass


@dataclass
class ExportJob:
    input_path: str
    output_path: str
    backend: str = "hash"
    dim: int = 256
    seed: int = 0
    pooling: str = "lead"        # pretrained only: lead token or mean
    model_name: str = "paraphrase-multilingual-MiniLM-L12-v2"

    def validate(self) -> None:
        if self.backend not in BACKENDS:
            raise ExportError(f"backend must be one of {BACKENDS}, got "
                              f"{self.backend!r}")
        if self.backend == "hash" and self.dim < MIN_FIXTURE_WIDTH:
            raise ExportError(
                f"fixture mode needs width >= {MIN_FIXTURE_WIDTH}, got {self.dim}")
        if self.pooling not in ("lead", "mean"):
            raise ExportError(f"pooling must be lead or mean, got {self.pooling!r}")


def read_descriptions(path: str) -> list[tuple[str, str]]:
    """Rows of (label, text). Labels must be unique; text may be empty."""
    rows: list[tuple[str, str]] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t", 1)
            label = parts[0]
            if label == "":
                raise ExportError(f"{path}:{lineno}: empty entity label")
            if label in seen:
                raise ExportError(f"{path}:{lineno}: duplicate label {label!r}")
            seen.add(label)
            rows.append((label, parts[1] if len(parts) > 1 else ""))
    if not rows:
        raise ExportError(f"{path}: no descriptions found")
    return rows


def hash_vector(text: str, dim: int, seed: int) -> np.ndarray:
    """Seeded hash expanded to a unit-norm pseudo-random Gaussian vector, so
    identical texts map to identical rows and distinct texts are
    near-orthogonal in expectation."""
    digest = hashlib.sha256(f"{seed}|{text}".encode("utf-8")).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:16], "little"))
    vec = rng.standard_normal(dim)
    return vec / np.linalg.norm(vec)


def _embed_hash(rows, job, warn):
    vectors = []
    for label, text in rows:
        if text == "":
            warn(f"warning: empty text for {label!r}; emitting zero vector")
            vectors.append(np.zeros(job.dim))
        else:
            vectors.append(hash_vector(text, job.dim, job.seed))
    return np.stack(vectors)


def _embed_pretrained(rows, job, warn):
    try:
        from sentence_transformers import SentenceTransformer
    except ImportError as exc:
        raise ExportError(
            "the pretrained backend needs the sentence-transformers package "
            "(pip install 'kgalign-exporter[pretrained]')") from exc
    model = SentenceTransformer(job.model_name)
    texts = []
    empty = []
    for i, (label, text) in enumerate(rows):
        if text == "":
            warn(f"warning: empty text for {label!r}; emitting zero vector")
            empty.append(i)
        texts.append(text if text else " ")
    if job.pooling == "lead":
        features = model.tokenize(texts)
        import torch
        with torch.no_grad():
            out = model.forward(features)
        matrix = out["token_embeddings"][:, 0, :].cpu().numpy().astype(np.float64)
    else:
        matrix = np.asarray(
            model.encode(texts, convert_to_numpy=True, show_progress_bar=False),
            dtype=np.float64)
    for i in empty:
        matrix[i] = 0.0
    return matrix


def write_embedding_file(path: str, labels: list[str], matrix: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#dim={matrix.shape[1]}\n")
        for label, row in zip(labels, matrix):
            fh.write(label + "\t" + "\t".join(repr(float(x)) for x in row) + "\n")


def export_embeddings(job: ExportJob, warn=None) -> int:
    """Run one export job; returns the number of rows written."""
    job.validate()
    warn = warn or (lambda msg: print(msg, file=sys.stderr))
    rows = read_descriptions(job.input_path)
    if job.backend == "hash":
        matrix = _embed_hash(rows, job, warn)
    else:
        matrix = _embed_pretrained(rows, job, warn)
    write_embedding_file(job.output_path, [label for label, _ in rows], matrix)
    return len(rows)
