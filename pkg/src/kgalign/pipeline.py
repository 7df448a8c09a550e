"""High-level command implementations shared by the CLI and tests.

Each run function reads a validated RunConfig, executes one stage of the
pipeline, and writes artifacts under the fixed output layout
(checkpoints/, reports/, logs/). Reports never contain wall-clock times,
so identical configs produce byte-identical report files; timings go to
logs/run.log.
"""

import json
import os

import numpy as np

from kgalign import fusion, plots, report
from kgalign.checkpoint import (CheckpointError, load_checkpoint, restore_into,
                                save_checkpoint)
from kgalign.config import RunConfig
from kgalign.encoder import (AblationFlags, EncoderParams, encode_pair,
                             init_encoder_params, output_width)
from kgalign.errors import ConfigError
from kgalign.features import (attribute_feature_columns, build_adjacency,
                              build_attribute_features, build_relation_features,
                              relation_feature_columns)
from kgalign.fixtures import hash_embedding_table, read_descriptions
from kgalign.kg_core import (KnowledgeGraphPair, SeedSplit, load_graph,
                             load_seeds, split_seeds)
from kgalign.semantic import (TextEmbeddingTable, init_mlp_params,
                              load_text_embeddings, project_tables,
                              train_semantic)
from kgalign.training import (Hyperparams, StructuralInputs, grad_check,
                              make_random_inputs, train_structural)

STRUCT_CKPT = "structural.ckpt"
SEM_CKPT = "semantic.ckpt"


def dataset_paths(data_dir: str, side: int) -> dict[str, str]:
    return {
        "triples": os.path.join(data_dir, f"rel_triples_{side}.tsv"),
        "attrs": os.path.join(data_dir, f"attr_triples_{side}.tsv"),
        "labels": os.path.join(data_dir, f"ent_labels_{side}.tsv"),
        "desc": os.path.join(data_dir, f"ent_desc_{side}.tsv"),
    }


def _optional(path: str) -> str | None:
    return path if os.path.exists(path) else None


def load_dataset(config: RunConfig) -> tuple[KnowledgeGraphPair, SeedSplit]:
    if not config.data_dir:
        raise ConfigError("data_dir is not set")
    graphs = []
    for side in (1, 2):
        paths = dataset_paths(config.data_dir, side)
        graphs.append(load_graph(paths["triples"],
                                 attrs_path=_optional(paths["attrs"]),
                                 labels_path=_optional(paths["labels"])))
    g1, g2 = graphs
    seeds = load_seeds(os.path.join(config.data_dir, "seeds.tsv"), g1, g2)
    pair = KnowledgeGraphPair(g1=g1, g2=g2, seeds=seeds)
    split = split_seeds(seeds, config.ratio, config.rng_seed)
    return pair, split


def build_inputs(pair: KnowledgeGraphPair, config: RunConfig) -> StructuralInputs:
    """Adjacencies plus aspect features with jointly selected columns so the
    column semantics match across the two graphs."""
    rel_cols = relation_feature_columns([pair.g1, pair.g2], config.relation_cap)
    attr_cols = attribute_feature_columns([pair.g1, pair.g2], config.attribute_cap)
    return StructuralInputs(
        adjs=(build_adjacency(pair.g1), build_adjacency(pair.g2)),
        x_r=(build_relation_features(pair.g1, rel_cols),
             build_relation_features(pair.g2, rel_cols)),
        x_a=(build_attribute_features(pair.g1, attr_cols),
             build_attribute_features(pair.g2, attr_cols)),
        n1=pair.g1.n,
        n2=pair.g2.n,
    )


def resolve_text_tables(config: RunConfig,
                        pair: KnowledgeGraphPair) -> tuple[TextEmbeddingTable,
                                                           TextEmbeddingTable]:
    """Text tables from the configured files, or hash-fixture embeddings of
    the dataset's description files when no files are configured."""
    if config.text_emb_1 and config.text_emb_2:
        return (load_text_embeddings(config.text_emb_1, pair.g1),
                load_text_embeddings(config.text_emb_2, pair.g2))
    if bool(config.text_emb_1) != bool(config.text_emb_2):
        raise ConfigError("set both text_emb_1 and text_emb_2 or neither")
    tables = []
    for graph, side in ((pair.g1, 1), (pair.g2, 2)):
        desc_path = dataset_paths(config.data_dir, side)["desc"]
        if not os.path.exists(desc_path):
            raise ConfigError(
                f"no text embeddings configured and no descriptions at {desc_path}")
        texts = read_descriptions(desc_path)
        missing = [n for n in graph.entity_names if n not in texts]
        if missing:
            raise ConfigError(
                f"descriptions at {desc_path} missing {len(missing)} entities "
                f"(first: {missing[0]!r})")
        vectors = hash_embedding_table(texts, config.text_dim, config.rng_seed)
        matrix = np.stack([vectors[n] for n in graph.entity_names])
        tables.append(TextEmbeddingTable(matrix=matrix, provenance="hash-fixture"))
    return tables[0], tables[1]


def resolved_d_sem(config: RunConfig) -> int:
    if config.d_sem > 0:
        return config.d_sem
    return output_width(config.d, config.h,
                        AblationFlags.from_name(config.ablation))


def _struct_header(config: RunConfig, inputs: StructuralInputs) -> dict:
    return {
        "kind": "structural",
        "d": config.d, "h": config.h,
        "k_r": inputs.x_r[0].width, "k_a": inputs.x_a[0].width,
        "n1": inputs.n1, "n2": inputs.n2,
        "metric": config.metric, "rng_seed": config.rng_seed,
        "ablation": config.ablation,
    }


def run_ingest(config: RunConfig, log=print) -> dict:
    pair, split = load_dataset(config)
    layout = report.ensure_out_layout(config.out_dir)
    payload = {
        "graph_1": pair.g1.report.as_dict(),
        "graph_2": pair.g2.report.as_dict(),
        "n_seeds": int(len(pair.seeds)),
        "n_train_seeds": int(len(split.train)),
        "n_test_seeds": int(len(split.test)),
        "config": config.echo(),
    }
    path = os.path.join(layout["reports"], "ingest.json")
    report.write_json_report(path, payload)
    log(f"loaded {pair.g1.n} + {pair.g2.n} entities, "
        f"{len(pair.seeds)} seeds ({len(split.train)} train / "
        f"{len(split.test)} test); report at {path}")
    return payload


def run_train_struct(config: RunConfig, log=print) -> dict:
    pair, split = load_dataset(config)
    inputs = build_inputs(pair, config)
    flags = AblationFlags.from_name(config.ablation)
    result = train_structural(inputs, split.train, config.hyperparams(),
                              flags, log=log)
    layout = report.ensure_out_layout(config.out_dir)
    ckpt_path = os.path.join(layout["checkpoints"], STRUCT_CKPT)
    save_checkpoint(ckpt_path, _struct_header(config, inputs),
                    result.params.named_tensors())
    report.write_curve_tsv(os.path.join(layout["reports"], "loss_curve.tsv"),
                           result.loss_curve, "structural_loss")
    plots.plot_loss_curve(result.loss_curve,
                          os.path.join(layout["reports"], "loss_curve.png"),
                          title="structural training loss")
    payload = {
        "loss_curve": result.loss_curve,
        "final_loss": result.loss_curve[-1] if result.loss_curve else None,
        "config": config.echo(),
    }
    report.write_json_report(os.path.join(layout["reports"], "train_struct.json"),
                             payload)
    report.append_log(os.path.join(layout["logs"], "run.log"),
                      f"train-struct finished in {result.seconds:.2f}s "
                      f"({config.epochs} epochs)")
    log(f"structural training done in {result.seconds:.2f}s; "
        f"checkpoint at {ckpt_path}")
    return payload


def run_train_sem(config: RunConfig, log=print) -> dict:
    pair, split = load_dataset(config)
    table1, table2 = resolve_text_tables(config, pair)
    d_sem = resolved_d_sem(config)
    result = train_semantic(table1, table2, split.train, config.hyperparams(),
                            d_sem, log=log)
    layout = report.ensure_out_layout(config.out_dir)
    ckpt_path = os.path.join(layout["checkpoints"], SEM_CKPT)
    save_checkpoint(ckpt_path,
                    {"kind": "semantic", "d_text": table1.width,
                     "h_m": config.h_m, "d_sem": d_sem,
                     "rng_seed": config.rng_seed},
                    result.params.named_tensors())
    report.write_curve_tsv(os.path.join(layout["reports"], "sem_loss_curve.tsv"),
                           result.loss_curve, "semantic_loss")
    plots.plot_loss_curve(result.loss_curve,
                          os.path.join(layout["reports"], "sem_loss_curve.png"),
                          title="semantic training loss")
    payload = {
        "loss_curve": result.loss_curve,
        "final_loss": result.loss_curve[-1] if result.loss_curve else None,
        "config": config.echo(),
    }
    report.write_json_report(os.path.join(layout["reports"], "train_sem.json"),
                             payload)
    report.append_log(os.path.join(layout["logs"], "run.log"),
                      f"train-sem finished in {result.seconds:.2f}s "
                      f"({config.epochs_semantic} epochs)")
    log(f"semantic training done in {result.seconds:.2f}s; "
        f"checkpoint at {ckpt_path}")
    return payload


def _load_struct_params(config: RunConfig,
                        inputs: StructuralInputs) -> tuple[EncoderParams, dict]:
    ckpt_path = os.path.join(config.out_dir, "checkpoints", STRUCT_CKPT)
    header, tensors = load_checkpoint(ckpt_path)
    expected = _struct_header(config, inputs)
    for key in ("d", "h", "k_r", "k_a", "n1", "n2", "metric", "ablation"):
        if header.get(key) != expected[key]:
            raise CheckpointError(
                f"checkpoint {ckpt_path} was trained with {key}="
                f"{header.get(key)!r}, config says {expected[key]!r}")
    params = init_encoder_params(np.zeros((inputs.n1, config.d)),
                                 np.zeros((inputs.n2, config.d)),
                                 inputs.x_r[0].width, inputs.x_a[0].width,
                                 config.h, config.rng_seed)
    restore_into(tensors, params.named_tensors(), ckpt_path)
    return params, header


def _structural_embeddings(config: RunConfig, pair: KnowledgeGraphPair,
                           inputs: StructuralInputs) -> tuple[np.ndarray, np.ndarray]:
    params, _ = _load_struct_params(config, inputs)
    flags = AblationFlags.from_name(config.ablation)
    out1, out2 = encode_pair(inputs.adjs, inputs.x_r, inputs.x_a, params, flags)
    return out1.h_y.data, out2.h_y.data


def _semantic_embeddings(config: RunConfig,
                         pair: KnowledgeGraphPair) -> tuple[np.ndarray, np.ndarray]:
    ckpt_path = os.path.join(config.out_dir, "checkpoints", SEM_CKPT)
    header, tensors = load_checkpoint(ckpt_path)
    table1, table2 = resolve_text_tables(config, pair)
    if header.get("d_text") != table1.width:
        raise CheckpointError(
            f"semantic checkpoint expects text width {header.get('d_text')}, "
            f"tables have {table1.width}")
    params = init_mlp_params(table1.width, int(header["h_m"]),
                             int(header["d_sem"]), config.rng_seed)
    restore_into(tensors, params.named_tensors(), ckpt_path)
    return project_tables(table1, table2, params)


def run_eval(config: RunConfig, taus: list[float] | None = None,
             dump_candidates: bool = True, log=print) -> dict:
    """End-to-end evaluation from checkpoints: encode, fuse, pool, rank,
    score. Multiple taus emit one metrics row each plus a sweep figure."""
    pair, split = load_dataset(config)
    inputs = build_inputs(pair, config)
    struct1, struct2 = _structural_embeddings(config, pair, inputs)
    taus = taus if taus is not None else [config.tau]
    need_semantic = any(t < 1.0 for t in taus)
    sem1 = sem2 = None
    if need_semantic:
        sem1, sem2 = _semantic_embeddings(config, pair)

    ks = config.ks()
    layout = report.ensure_out_layout(config.out_dir)
    rows = []
    primary = None
    for tau in taus:
        rep = fusion.evaluate(struct1, struct2, sem1, sem2, split.test,
                              tau, config.fusion_mode, config.pool_size, ks)
        rows.append({"tau": tau, "metrics": rep.metrics})
        if primary is None or tau == config.tau:
            primary = (tau, rep)
        log("tau={:.2f}  ".format(tau) +
            "  ".join(f"{k}={v:.4f}" for k, v in sorted(rep.metrics.items())))

    payload = {"rows": rows, "config": config.echo()}
    train_report = os.path.join(layout["reports"], "train_struct.json")
    if os.path.exists(train_report):
        with open(train_report, encoding="utf-8") as fh:
            payload["structural_loss_curve"] = json.load(fh).get("loss_curve")
    report.write_json_report(os.path.join(layout["reports"], "metrics.json"),
                             payload)

    tau0, rep0 = primary
    plots.plot_hits_bars(rep0.metrics,
                         os.path.join(layout["reports"], "hits.png"),
                         title=f"alignment accuracy (tau={tau0:.2f})")
    if len(taus) > 1:
        series = {f"hits@{k}": [row["metrics"][f"hits@{k}"] for row in rows]
                  for k in ks}
        plots.plot_metric_sweep([row["tau"] for row in rows], series,
                                "tau (structural weight)",
                                os.path.join(layout["reports"], "tau_sweep.png"),
                                "fusion weight sweep")
    if dump_candidates:
        report.write_candidates_tsv(
            os.path.join(layout["reports"], "candidates.tsv"),
            rep0.candidates, pair.g1.entity_names, pair.g2.entity_names)
    return payload


def run_align(config: RunConfig, log=print) -> str:
    """Rank candidates for every test source and dump them as TSV."""
    pair, split = load_dataset(config)
    inputs = build_inputs(pair, config)
    struct1, struct2 = _structural_embeddings(config, pair, inputs)
    sem1 = sem2 = None
    if config.tau < 1.0:
        sem1, sem2 = _semantic_embeddings(config, pair)
    rep = fusion.evaluate(struct1, struct2, sem1, sem2, split.test,
                          config.tau, config.fusion_mode, config.pool_size,
                          config.ks())
    layout = report.ensure_out_layout(config.out_dir)
    path = os.path.join(layout["reports"], "candidates.tsv")
    report.write_candidates_tsv(path, rep.candidates,
                                pair.g1.entity_names, pair.g2.entity_names)
    log(f"wrote {sum(len(rc.targets) for rc in rep.candidates)} candidate rows "
        f"to {path}")
    return path


def run_grad_check(config: RunConfig, n_samples: int = 60,
                   tolerance: float = 1e-4, log=print) -> dict:
    """Finite-difference audit on a tiny random instance, plus a deliberately
    corrupted negative control that must be detected."""
    inputs, seeds = make_random_inputs(n=8, rng_seed=config.rng_seed)
    hyper = Hyperparams(d=6, h=5, beta=1.0, neg_per_side=2, metric=config.metric,
                        rng_seed=config.rng_seed)
    max_rel = grad_check(inputs, seeds, hyper, n_samples=n_samples)
    control = grad_check(inputs, seeds, hyper, n_samples=n_samples,
                         corrupt="ws1")
    passed = max_rel < tolerance and control > 1e-2
    log(f"max relative error {max_rel:.3e} (tolerance {tolerance:.0e}); "
        f"corrupted-gradient control {control:.3e} "
        f"({'detected' if control > 1e-2 else 'MISSED'})")
    return {"max_rel_error": max_rel, "control_error": control, "passed": passed}
