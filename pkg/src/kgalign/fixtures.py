"""Built-in deterministic fixture embedder.

Expands a seeded hash of each entity's description text into a unit-norm
pseudo-random Gaussian vector: identical texts map to identical rows,
distinct texts are near-orthogonal in expectation. This lets the whole
semantic pathway run in tests without any model dependency.
"""

import hashlib

import numpy as np

from kgalign.errors import ParseError


def hash_embedding(text: str, dim: int, seed: int = 0) -> np.ndarray:
    digest = hashlib.sha256(f"{seed}|{text}".encode("utf-8")).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:16], "little"))
    vec = rng.standard_normal(dim)
    norm = np.linalg.norm(vec)
    return vec / norm if norm > 0 else vec


def hash_embedding_table(texts: dict[str, str], dim: int,
                         seed: int = 0) -> dict[str, np.ndarray]:
    return {label: hash_embedding(text, dim, seed) for label, text in texts.items()}


def read_descriptions(path: str) -> dict[str, str]:
    """Two-column TSV: entity label, description text."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t", 1)
            if len(parts) != 2 or parts[0] == "":
                raise ParseError("expected 'label\\ttext'", path=path, line=lineno)
            if parts[0] in out:
                raise ParseError(f"duplicate label {parts[0]!r}", path=path,
                                 line=lineno)
            out[parts[0]] = parts[1]
    return out


def write_embedding_file(path: str, vectors: dict[str, np.ndarray]) -> None:
    """Emit the text embedding format the semantic loader accepts."""
    dims = {v.shape[0] for v in vectors.values()}
    if len(dims) != 1:
        raise ParseError(f"inconsistent vector widths: {sorted(dims)}", path=path)
    (dim,) = dims
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#dim={dim}\n")
        for label, vec in vectors.items():
            values = "\t".join(repr(float(x)) for x in vec)
            fh.write(f"{label}\t{values}\n")


def embed_descriptions(desc_path: str, out_path: str, dim: int,
                       seed: int = 0) -> int:
    """Hash-embed a descriptions file into an embedding file; returns the
    number of rows written."""
    texts = read_descriptions(desc_path)
    write_embedding_file(out_path, hash_embedding_table(texts, dim, seed))
    return len(texts)
