"""Data model and ingestion for knowledge-graph pairs.

File formats are 3-column (triples) or 2-column (seeds) tab-separated UTF-8
with one record per line. Entity/relation/attribute-key ids are dense
non-negative integers assigned by interning order of first appearance, so
loading the same files twice yields identical id assignments.
"""

from dataclasses import dataclass, field

import numpy as np

from kgalign.errors import ConfigError, ParseError


class _Interner:
    """Assigns dense ids 0..n-1 in order of first appearance."""

    def __init__(self):
        self.names: list[str] = []
        self.ids: dict[str, int] = {}

    def intern(self, name: str) -> int:
        idx = self.ids.get(name)
        if idx is None:
            idx = len(self.names)
            self.ids[name] = idx
            self.names.append(name)
        return idx

    def __len__(self) -> int:
        return len(self.names)


@dataclass
class LoadReport:
    """Counts reported by load_graph, including silently deduplicated rows."""

    n_entities: int = 0
    n_relation_types: int = 0
    n_attr_keys: int = 0
    n_relation_triples: int = 0
    n_attr_triples: int = 0
    duplicate_relation_triples: int = 0
    duplicate_attr_triples: int = 0

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class Graph:
    """One interned knowledge graph: entities, relation and attribute triples.

    rel_triples rows are (head, rel, tail) ids; attr_triples rows are
    (entity, key) ids with the raw text value kept separately (it is only
    needed for export, never for features).
    """

    entity_names: list[str]
    relation_names: list[str]
    attr_key_names: list[str]
    rel_triples: np.ndarray          # (m, 3) int64
    attr_triples: np.ndarray         # (k, 2) int64
    attr_values: list[str]
    report: LoadReport = field(default_factory=LoadReport)
    _entity_ids: dict[str, int] = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return len(self.entity_names)

    @property
    def n_relations(self) -> int:
        return len(self.relation_names)

    @property
    def n_attr_keys(self) -> int:
        return len(self.attr_key_names)

    def entity_id(self, label: str) -> int | None:
        return self._entity_ids.get(label)


@dataclass
class KnowledgeGraphPair:
    g1: Graph
    g2: Graph
    seeds: np.ndarray                # (s, 2) int64, columns (id in g1, id in g2)


@dataclass
class SeedSplit:
    train: np.ndarray
    test: np.ndarray
    ratio: float
    rng_seed: int


def _read_rows(path: str, n_cols: int) -> list[tuple]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != n_cols:
                raise ParseError(
                    f"expected {n_cols} tab-separated fields, got {len(parts)}",
                    path=path, line=lineno)
            if any(p == "" for p in parts):
                raise ParseError("empty field", path=path, line=lineno)
            rows.append(tuple(parts))
    return rows


def load_graph(triples_path: str, attrs_path: str | None = None,
               labels_path: str | None = None) -> Graph:
    """Load one graph from TSV files.

    The optional labels file (one entity label per line) pins the id order
    and covers entities that appear in no triple; labels first seen in the
    triple files are interned after it. Duplicate triples are dropped with
    a count in the load report.
    """
    entities = _Interner()
    relations = _Interner()
    attr_keys = _Interner()
    report = LoadReport()

    if labels_path is not None:
        with open(labels_path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                label = line.rstrip("\n")
                if not label:
                    continue
                if label in entities.ids:
                    raise ParseError("duplicate entity label", path=labels_path,
                                     line=lineno)
                entities.intern(label)

    rel_rows = _read_rows(triples_path, 3)
    seen_rel: set[tuple[int, int, int]] = set()
    triples = []
    for head, rel, tail in rel_rows:
        t = (entities.intern(head), relations.intern(rel), entities.intern(tail))
        if t in seen_rel:
            report.duplicate_relation_triples += 1
            continue
        seen_rel.add(t)
        triples.append(t)
    if not triples:
        raise ParseError("graph has no relation triples", path=triples_path)

    attr_rows = []
    attr_values: list[str] = []
    if attrs_path is not None:
        seen_attr: set[tuple[int, int, str]] = set()
        for ent, key, value in _read_rows(attrs_path, 3):
            t = (entities.intern(ent), attr_keys.intern(key), value)
            if t in seen_attr:
                report.duplicate_attr_triples += 1
                continue
            seen_attr.add(t)
            attr_rows.append(t[:2])
            attr_values.append(value)

    report.n_entities = len(entities)
    report.n_relation_types = len(relations)
    report.n_attr_keys = len(attr_keys)
    report.n_relation_triples = len(triples)
    report.n_attr_triples = len(attr_rows)

    return Graph(
        entity_names=entities.names,
        relation_names=relations.names,
        attr_key_names=attr_keys.names,
        rel_triples=np.asarray(triples, dtype=np.int64).reshape(-1, 3),
        attr_triples=np.asarray(attr_rows, dtype=np.int64).reshape(-1, 2),
        attr_values=attr_values,
        report=report,
        _entity_ids=entities.ids,
    )


def load_seeds(path: str, g1: Graph, g2: Graph) -> np.ndarray:
    """Load pre-aligned entity pairs as (id in g1, id in g2) rows.

    The seed set must be injective on both sides: Hits@K assumes one gold
    target per source.
    """
    pairs = []
    seen_left: dict[int, int] = {}
    seen_right: dict[int, int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2 or any(p == "" for p in parts):
                raise ParseError("expected 2 tab-separated fields",
                                 path=path, line=lineno)
            left, right = parts
            i = g1.entity_id(left)
            if i is None:
                raise ParseError(f"unknown entity {left!r} in graph 1",
                                 path=path, line=lineno)
            j = g2.entity_id(right)
            if j is None:
                raise ParseError(f"unknown entity {right!r} in graph 2",
                                 path=path, line=lineno)
            if i in seen_left:
                raise ParseError(
                    f"non-injective seed set: {left!r} already paired at line "
                    f"{seen_left[i]}", path=path, line=lineno)
            if j in seen_right:
                raise ParseError(
                    f"non-injective seed set: {right!r} already paired at line "
                    f"{seen_right[j]}", path=path, line=lineno)
            seen_left[i] = lineno
            seen_right[j] = lineno
            pairs.append((i, j))
    return np.asarray(pairs, dtype=np.int64).reshape(-1, 2)


def split_seeds(seeds: np.ndarray, ratio: float, rng_seed: int) -> SeedSplit:
    """Deterministically shuffle seeds and take a prefix of round(ratio*n) as train."""
    if not 0.0 < ratio < 1.0:
        raise ConfigError(f"split ratio must be in (0, 1), got {ratio}")
    n = len(seeds)
    if n < 2:
        raise ConfigError(f"need at least 2 seed pairs to split, got {n}")
    rng = np.random.default_rng((int(rng_seed), 0x5EED))
    order = rng.permutation(n)
    n_train = int(round(ratio * n))
    shuffled = seeds[order]
    return SeedSplit(train=shuffled[:n_train], test=shuffled[n_train:],
                     ratio=ratio, rng_seed=rng_seed)
