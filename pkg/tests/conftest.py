import numpy as np
import pytest

from kgalign.kg_core import Graph


def write_tsv(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write("\t".join(str(x) for x in row) + "\n")
    return str(path)


def make_graph(n, rel_triples, attr_triples=(), rel_names=("likes",),
               key_names=("name",), tag="e"):
    """Graph built directly in memory, bypassing the loaders."""
    names = [f"{tag}{i}" for i in range(n)]
    return Graph(
        entity_names=names,
        relation_names=list(rel_names),
        attr_key_names=list(key_names),
        rel_triples=np.asarray(rel_triples, dtype=np.int64).reshape(-1, 3),
        attr_triples=np.asarray(attr_triples, dtype=np.int64).reshape(-1, 2),
        attr_values=["v"] * len(attr_triples),
        _entity_ids={name: i for i, name in enumerate(names)},
    )


@pytest.fixture
def tiny_dataset(tmp_path):
    """Two 4-entity graphs with a full gold alignment."""
    d = tmp_path / "data"
    d.mkdir()
    write_tsv(d / "rel_triples_1.tsv", [
        ("a0", "likes", "a1"), ("a1", "likes", "a2"), ("a2", "knows", "a3"),
        ("a3", "likes", "a0"),
    ])
    write_tsv(d / "rel_triples_2.tsv", [
        ("b0", "likes", "b1"), ("b1", "likes", "b2"), ("b2", "knows", "b3"),
        ("b3", "likes", "b0"),
    ])
    write_tsv(d / "attr_triples_1.tsv", [
        ("a0", "name", "x"), ("a1", "year", "1999"), ("a2", "name", "y"),
    ])
    write_tsv(d / "attr_triples_2.tsv", [
        ("b0", "name", "x"), ("b1", "year", "1999"), ("b2", "name", "y"),
    ])
    write_tsv(d / "ent_labels_1.tsv", [("a0",), ("a1",), ("a2",), ("a3",)])
    write_tsv(d / "ent_labels_2.tsv", [("b0",), ("b1",), ("b2",), ("b3",)])
    write_tsv(d / "seeds.tsv", [("a0", "b0"), ("a1", "b1"), ("a2", "b2"),
                                ("a3", "b3")])
    return d
