"""Per-graph inputs for the encoder: normalized connectivity and raw features.

The adjacency is built from relation triples binarized and made undirected,
with a self-loop added per node, then symmetrically normalized so the
stored value at (i, j) is 1/sqrt(d_i * d_j) with degrees counted including
the self-loop. Direction information is reinjected through the relation
feature matrix (separate head/tail counts).
"""

from dataclasses import dataclass

import numpy as np

from kgalign.errors import ContractViolation
from kgalign.kg_core import Graph


@dataclass
class SparseNormalizedAdjacency:
    """Symmetric normalized connectivity in compressed sparse row form."""

    n: int
    indptr: np.ndarray    # (n+1,) int64
    indices: np.ndarray   # (nnz,) int64
    values: np.ndarray    # (nnz,) float64

    def matmul(self, dense: np.ndarray) -> np.ndarray:
        """Sparse @ dense product. Every row holds at least its self-loop,
        so indptr is strictly increasing and reduceat is safe."""
        if dense.shape[0] != self.n:
            raise ContractViolation(
                f"adjacency is {self.n}x{self.n}, operand has {dense.shape[0]} rows")
        contrib = self.values[:, None] * dense[self.indices]
        return np.add.reduceat(contrib, self.indptr[:-1], axis=0)

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        for i in range(self.n):
            lo, hi = self.indptr[i], self.indptr[i + 1]
            out[i, self.indices[lo:hi]] = self.values[lo:hi]
        return out


@dataclass
class AspectFeatures:
    """Raw per-entity profile for one aspect (relations or attributes).

    Rows are L2-normalized unless all-zero; column_names identify what each
    column counts so the same ordering can be shared across a graph pair.
    """

    matrix: np.ndarray
    column_names: list[str]

    @property
    def width(self) -> int:
        return self.matrix.shape[1]


def build_adjacency(graph: Graph) -> SparseNormalizedAdjacency:
    """Build D^{-1/2} (A + I) D^{-1/2} from the graph's relation triples."""
    n = graph.n
    if n < 1:
        raise ContractViolation("graph has no entities")
    heads = graph.rel_triples[:, 0]
    tails = graph.rel_triples[:, 2]
    # Undirected binarized edge set plus one self-loop per node.
    rows = np.concatenate([heads, tails, np.arange(n)])
    cols = np.concatenate([tails, heads, np.arange(n)])
    keys = rows * n + cols
    uniq = np.unique(keys)
    rows = uniq // n
    cols = uniq % n

    degree = np.bincount(rows, minlength=n).astype(np.float64)
    inv_sqrt = 1.0 / np.sqrt(degree)
    values = inv_sqrt[rows] * inv_sqrt[cols]

    # keys are sorted, so rows are grouped and cols ascending within a row.
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
    return SparseNormalizedAdjacency(n=n, indptr=indptr,
                                     indices=cols.astype(np.int64), values=values)


def _normalize_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    return matrix / safe[:, None]


def _top_names(freq: dict[str, int], order: dict[str, int], cap: int) -> list[str]:
    """Most frequent names, ties broken by interning order, truncated to cap."""
    return sorted(freq, key=lambda name: (-freq[name], order[name]))[:cap]


def relation_feature_columns(graphs: list[Graph], cap: int = 1000) -> list[str]:
    """Top relation-type names by joint frequency over the given graphs.

    The cap counts matrix columns; each selected type contributes a head
    and a tail column, so cap // 2 types are kept.
    """
    freq: dict[str, int] = {}
    order: dict[str, int] = {}
    for g in graphs:
        counts = np.bincount(g.rel_triples[:, 1], minlength=g.n_relations)
        for rid, name in enumerate(g.relation_names):
            freq[name] = freq.get(name, 0) + int(counts[rid])
            order.setdefault(name, len(order))
    return _top_names(freq, order, cap // 2)


def attribute_feature_columns(graphs: list[Graph], cap: int = 1000) -> list[str]:
    """Top attribute-key names by joint frequency over the given graphs."""
    freq: dict[str, int] = {}
    order: dict[str, int] = {}
    for g in graphs:
        if len(g.attr_triples):
            counts = np.bincount(g.attr_triples[:, 1], minlength=g.n_attr_keys)
        else:
            counts = np.zeros(g.n_attr_keys, dtype=np.int64)
        for kid, name in enumerate(g.attr_key_names):
            freq[name] = freq.get(name, 0) + int(counts[kid])
            order.setdefault(name, len(order))
    return _top_names(freq, order, cap)


def build_relation_features(graph: Graph, columns: list[str] | None = None,
                            cap: int = 1000) -> AspectFeatures:
    """Head/tail count profile over the selected relation types, row-normalized.

    Row i holds, for each selected type t, the count of triples where i is
    the head of t followed by the count where i is the tail of t. Pass the
    jointly selected columns when building a graph pair so the column
    semantics match across graphs.
    """
    if columns is None:
        columns = relation_feature_columns([graph], cap)
    col_of = {name: 2 * k for k, name in enumerate(columns)}
    matrix = np.zeros((graph.n, 2 * len(columns)))
    for head, rel, tail in graph.rel_triples:
        base = col_of.get(graph.relation_names[rel])
        if base is None:
            continue
        matrix[head, base] += 1.0
        matrix[tail, base + 1] += 1.0
    names = [f"{name}:{side}" for name in columns for side in ("head", "tail")]
    return AspectFeatures(matrix=_normalize_rows(matrix), column_names=names)


def build_attribute_features(graph: Graph, columns: list[str] | None = None,
                             cap: int = 1000) -> AspectFeatures:
    """Attribute-key presence counts over the selected keys, row-normalized."""
    if columns is None:
        columns = attribute_feature_columns([graph], cap)
    col_of = {name: k for k, name in enumerate(columns)}
    matrix = np.zeros((graph.n, len(columns)))
    for ent, key in graph.attr_triples:
        col = col_of.get(graph.attr_key_names[key])
        if col is not None:
            matrix[ent, col] += 1.0
    return AspectFeatures(matrix=_normalize_rows(matrix), column_names=list(columns))


def init_features(n: int, d: int, rng_seed: int) -> np.ndarray:
    """Trainable initial entity features: truncated normal, std 1/sqrt(d),
    resampled outside +-2 std."""
    if d < 1:
        raise ContractViolation(f"feature width must be >= 1, got {d}")
    rng = np.random.default_rng((int(rng_seed), 0x1F17))
    std = 1.0 / np.sqrt(d)
    out = rng.standard_normal((n, d))
    for _ in range(64):
        mask = np.abs(out) > 2.0
        if not mask.any():
            break
        out[mask] = rng.standard_normal(int(mask.sum()))
    return out * std
