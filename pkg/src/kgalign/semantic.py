"""Semantic channel: externally produced text embeddings filtered by a
trainable MLP head and trained with a triplet margin loss over seed pairs.

The text table itself is frozen; only the MLP parameters receive gradients.
"""

import os
import time
from dataclasses import dataclass, field

import numpy as np

from kgalign import autograd as ag
from kgalign.autograd import Tensor
from kgalign.errors import ConfigError, ContractViolation, KgAlignError, ParseError
from kgalign.kg_core import Graph
from kgalign.training import Adam, Hyperparams


@dataclass
class TextEmbeddingTable:
    """One fixed-width real vector per entity, rows aligned to entity ids."""

    matrix: np.ndarray      # (n, d_text) float64
    provenance: str = "unknown"

    @property
    def width(self) -> int:
        return self.matrix.shape[1]


def _parse_text_format(path: str) -> tuple[dict[str, np.ndarray], int]:
    vectors: dict[str, np.ndarray] = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().rstrip("\n")
        if not first.startswith("#dim="):
            raise ParseError("missing '#dim=<width>' header", path=path, line=1)
        try:
            dim = int(first[len("#dim="):])
        except ValueError:
            raise ParseError(f"bad width in header: {first!r}", path=path, line=1)
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != dim + 1:
                raise ParseError(
                    f"expected label + {dim} values, got {len(parts)} fields",
                    path=path, line=lineno)
            try:
                vec = np.array([float(v) for v in parts[1:]])
            except ValueError:
                raise ParseError("non-numeric embedding value", path=path, line=lineno)
            vectors[parts[0]] = vec
    return vectors, dim


def _parse_binary_format(path: str) -> tuple[dict[str, np.ndarray], int]:
    """Raw little-endian float32 rows plus a '<path>.idx' label index whose
    first line is the '#dim=' header."""
    idx_path = path + ".idx"
    if not os.path.exists(idx_path):
        raise ParseError(f"binary table needs an index file at {idx_path}", path=path)
    labels: list[str] = []
    with open(idx_path, encoding="utf-8") as fh:
        first = fh.readline().rstrip("\n")
        if not first.startswith("#dim="):
            raise ParseError("missing '#dim=<width>' header", path=idx_path, line=1)
        dim = int(first[len("#dim="):])
        for line in fh:
            line = line.rstrip("\n")
            if line:
                labels.append(line)
    raw = np.fromfile(path, dtype="<f4")
    if raw.size != len(labels) * dim:
        raise ParseError(
            f"binary table holds {raw.size} floats, index implies "
            f"{len(labels)}x{dim}", path=path)
    matrix = raw.astype(np.float64).reshape(len(labels), dim)
    return {label: matrix[i] for i, label in enumerate(labels)}, dim


def load_text_embeddings(path: str, graph: Graph) -> TextEmbeddingTable:
    """Load a text-embedding file and align rows to the graph's entity ids.

    Text format: header '#dim=<d>' then 'label\\tv1\\t...\\tvd' per line.
    A '.bin' path selects the raw little-endian binary variant. Every graph
    entity must have a row; extra rows are ignored.
    """
    if path.endswith(".bin"):
        vectors, dim = _parse_binary_format(path)
    else:
        vectors, dim = _parse_text_format(path)

    missing = [name for name in graph.entity_names if name not in vectors]
    if missing:
        shown = ", ".join(missing[:20])
        more = f" (+{len(missing) - 20} more)" if len(missing) > 20 else ""
        raise KgAlignError(
            f"text embeddings at {path} missing {len(missing)} entities: "
            f"{shown}{more}")
    matrix = np.stack([vectors[name] for name in graph.entity_names])
    if not np.isfinite(matrix).all():
        raise ParseError("non-finite embedding values", path=path)
    return TextEmbeddingTable(matrix=matrix, provenance=path)


@dataclass
class MlpParams:
    """Two affine layers: d_text -> h_m with ReLU, then h_m -> d_sem linear."""

    w1: Tensor
    b1: Tensor
    w2: Tensor
    b2: Tensor

    def named_tensors(self) -> list[tuple[str, Tensor]]:
        return [("w1", self.w1), ("b1", self.b1), ("w2", self.w2), ("b2", self.b2)]

    def zero_grads(self) -> None:
        for _, t in self.named_tensors():
            t.zero_grad()


def init_mlp_params(d_text: int, h_m: int, d_sem: int, rng_seed: int) -> MlpParams:
    rng = np.random.default_rng((int(rng_seed), 0x3E3A))
    bound1 = np.sqrt(6.0 / (d_text + h_m))
    bound2 = np.sqrt(6.0 / (h_m + d_sem))
    return MlpParams(
        w1=Tensor(rng.uniform(-bound1, bound1, (d_text, h_m)),
                  requires_grad=True, name="w1"),
        b1=Tensor(np.zeros(h_m), requires_grad=True, name="b1"),
        w2=Tensor(rng.uniform(-bound2, bound2, (h_m, d_sem)),
                  requires_grad=True, name="w2"),
        b2=Tensor(np.zeros(d_sem), requires_grad=True, name="b2"),
    )


def mlp_project(table: TextEmbeddingTable, params: MlpParams) -> Tensor:
    """Project the frozen table through the MLP; rows L2-normalized
    (all-zero rows stay zero)."""
    if table.width != params.w1.shape[0]:
        raise ContractViolation(
            f"table width {table.width} does not match MLP input "
            f"{params.w1.shape[0]}")
    x = Tensor(table.matrix)
    hidden = ag.relu(x @ params.w1 + params.b1)
    return ag.normalize_rows(hidden @ params.w2 + params.b2)


@dataclass
class TripletBatch:
    """(query entity in g1, gold target in g2, sampled negative in g2) rows."""

    query: np.ndarray
    positive: np.ndarray
    negative: np.ndarray


def sample_triplets(seeds_train: np.ndarray, n2: int, rng_seed: int,
                    epoch: int) -> TripletBatch:
    """One negative per positive, drawn uniformly from the target graph and
    redrawn while it collides with the gold target."""
    if len(seeds_train) == 0:
        raise ConfigError("cannot sample triplets from an empty seed set")
    if n2 < 2:
        raise ConfigError("target graph too small to sample negatives")
    rng = np.random.default_rng((int(rng_seed), 0x791, int(epoch)))
    negative = rng.integers(0, n2, size=len(seeds_train))
    for k in range(len(seeds_train)):
        while negative[k] == seeds_train[k, 1]:
            negative[k] = rng.integers(0, n2)
    return TripletBatch(query=seeds_train[:, 0].copy(),
                        positive=seeds_train[:, 1].copy(),
                        negative=negative.astype(np.int64))


def semantic_loss(proj1: Tensor, proj2: Tensor, triplets: TripletBatch,
                  margin: float) -> Tensor:
    """Triplet margin loss: sum of max(0, sim(q, neg) - sim(q, pos) + m),
    with similarity = cosine of the projected (already normalized) rows."""
    if len(triplets.query) == 0:
        raise ConfigError("semantic loss needs a non-empty triplet set")
    q = ag.gather_rows(proj1, triplets.query)
    pos = ag.gather_rows(proj2, triplets.positive)
    neg = ag.gather_rows(proj2, triplets.negative)
    sim_pos = ag.sum_rows(q * pos)
    sim_neg = ag.sum_rows(q * neg)
    return ag.sum_all(ag.relu(sim_neg - sim_pos + margin))


@dataclass
class SemanticTrainResult:
    params: MlpParams
    loss_curve: list[float] = field(default_factory=list)
    seconds: float = 0.0


def train_semantic(table1: TextEmbeddingTable, table2: TextEmbeddingTable,
                   seeds_train: np.ndarray, hyper: Hyperparams, d_sem: int,
                   log=None) -> SemanticTrainResult:
    """Adam training of the MLP head on the triplet loss; the text tables
    stay frozen. Deterministic under hyper.rng_seed."""
    if table1.width != table2.width:
        raise ConfigError(
            f"table widths differ: {table1.width} vs {table2.width}")
    started = time.perf_counter()
    params = init_mlp_params(table1.width, hyper.h_m, d_sem, hyper.rng_seed)
    optimizer = Adam(params.named_tensors(), lr=hyper.lr_semantic)
    curve: list[float] = []
    for epoch in range(1, hyper.epochs_semantic + 1):
        triplets = sample_triplets(seeds_train, table2.matrix.shape[0],
                                   hyper.rng_seed, epoch)
        optimizer.zero_grad()
        loss = semantic_loss(mlp_project(table1, params),
                             mlp_project(table2, params),
                             triplets, hyper.margin_semantic)
        value = float(loss.data)
        if not np.isfinite(value):
            raise KgAlignError(f"non-finite semantic loss at epoch {epoch}")
        loss.backward()
        optimizer.step()
        curve.append(value)
        if log is not None and (epoch == 1 or epoch % 25 == 0
                                or epoch == hyper.epochs_semantic):
            log(f"epoch {epoch:4d}  semantic loss {value:.6f}")
    return SemanticTrainResult(params=params, loss_curve=curve,
                               seconds=time.perf_counter() - started)


def project_tables(table1: TextEmbeddingTable, table2: TextEmbeddingTable,
                   params: MlpParams) -> tuple[np.ndarray, np.ndarray]:
    """Plain-array projections for the fusion stage."""
    return mlp_project(table1, params).data, mlp_project(table2, params).data
