"""Fusion of structural and semantic embeddings, candidate pooling, cosine
ranking, and Hits@K metrics.

The candidate pool is always generated from the structural embeddings; the
fused embeddings only re-rank within each pool. Gold targets that the pool
missed count as misses.
"""

from dataclasses import dataclass, field

import numpy as np

from kgalign.errors import ConfigError, ContractViolation

FUSION_MODES = ("sum", "concat")


@dataclass
class FusedEmbeddings:
    t1: np.ndarray
    t2: np.ndarray
    tau: float
    mode: str


@dataclass
class RankedCandidates:
    source: int
    targets: np.ndarray   # target ids, best first
    scores: np.ndarray    # matching cosine scores


@dataclass
class AlignmentReport:
    candidates: list[RankedCandidates]
    metrics: dict[str, float]
    config_echo: dict = field(default_factory=dict)


def _normalize(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    return matrix / safe[:, None]


def fuse(t_struct: np.ndarray, t_sem: np.ndarray, tau: float,
         mode: str = "sum") -> np.ndarray:
    """Weighted combination of one graph's structural and semantic tables,
    row-normalized. `sum` needs equal widths; `concat` scales then stacks."""
    if not 0.0 <= tau <= 1.0:
        raise ConfigError(f"tau must be in [0, 1], got {tau}")
    if mode == "sum":
        if t_struct.shape[1] != t_sem.shape[1]:
            raise ConfigError(
                f"weighted-sum fusion needs equal widths, got "
                f"{t_struct.shape[1]} and {t_sem.shape[1]}; use fusion mode "
                f"'concat' for mismatched widths")
        combined = tau * t_struct + (1.0 - tau) * t_sem
    elif mode == "concat":
        combined = np.concatenate([tau * t_struct, (1.0 - tau) * t_sem], axis=1)
    else:
        raise ConfigError(f"fusion mode must be one of {FUSION_MODES}, got {mode!r}")
    return _normalize(combined)


def fuse_pair(struct1: np.ndarray, struct2: np.ndarray, sem1: np.ndarray,
              sem2: np.ndarray, tau: float, mode: str = "sum") -> FusedEmbeddings:
    return FusedEmbeddings(t1=fuse(struct1, sem1, tau, mode),
                           t2=fuse(struct2, sem2, tau, mode),
                           tau=tau, mode=mode)


def cosine_scores(sources: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Pairwise cosine similarity, rows of `sources` against rows of `targets`."""
    return _normalize(sources) @ _normalize(targets).T


def candidate_pool(struct1: np.ndarray, struct2: np.ndarray,
                   test_sources: np.ndarray, q: int) -> dict[int, np.ndarray]:
    """Per-source top-q target ids by structural cosine similarity.

    Exact full sort; ties broken by ascending target id. q larger than the
    target count yields the full target set.
    """
    if q < 1:
        raise ConfigError(f"candidate pool size must be >= 1, got {q}")
    n2 = struct2.shape[0]
    q = min(q, n2)
    scores = cosine_scores(struct1[test_sources], struct2)
    pools: dict[int, np.ndarray] = {}
    for row, source in enumerate(test_sources):
        # Stable sort on descending score keeps ascending-id order for ties.
        order = np.argsort(-scores[row], kind="stable")
        pools[int(source)] = order[:q].astype(np.int64)
    return pools


def rank_candidates(fused: FusedEmbeddings,
                    pools: dict[int, np.ndarray]) -> list[RankedCandidates]:
    """Re-rank each source's pool by fused cosine similarity, descending;
    equal scores break toward the lower target id."""
    t1 = _normalize(fused.t1)
    t2 = _normalize(fused.t2)
    ranked = []
    for source in sorted(pools):
        pool = pools[source]
        scores = t2[pool] @ t1[source]
        order = np.lexsort((pool, -scores))
        ranked.append(RankedCandidates(source=source,
                                       targets=pool[order],
                                       scores=scores[order]))
    return ranked


def hits_at_k(ranked: list[RankedCandidates], gold: dict[int, int],
              ks: list[int]) -> dict[str, float]:
    """Fraction of sources whose gold target appears in the top k."""
    for k in ks:
        if k <= 0:
            raise ConfigError(f"Hits@k needs k >= 1, got {k}")
    if not ranked:
        raise ConfigError("cannot score an empty candidate report")
    metrics = {}
    for k in sorted(ks):
        hit = sum(1 for rc in ranked
                  if gold[rc.source] in rc.targets[:k])
        metrics[f"hits@{k}"] = hit / len(ranked)
    return metrics


def evaluate(struct1: np.ndarray, struct2: np.ndarray,
             sem1: np.ndarray | None, sem2: np.ndarray | None,
             test_seeds: np.ndarray, tau: float, mode: str, q: int,
             ks: list[int]) -> AlignmentReport:
    """End to end: fuse, pool on structural, re-rank on fused, score.

    Semantic tables may be omitted only at tau = 1 (pure structural).
    """
    if sem1 is None or sem2 is None:
        if tau != 1.0:
            raise ConfigError(
                "semantic embeddings are required unless tau = 1")
        fused = FusedEmbeddings(t1=_normalize(struct1), t2=_normalize(struct2),
                                tau=tau, mode=mode)
    else:
        fused = fuse_pair(struct1, struct2, sem1, sem2, tau, mode)
    if test_seeds.ndim != 2 or test_seeds.shape[1] != 2:
        raise ContractViolation("test seeds must be (source, target) rows")
    pools = candidate_pool(struct1, struct2, test_seeds[:, 0], q)
    ranked = rank_candidates(fused, pools)
    gold = {int(a): int(b) for a, b in test_seeds}
    metrics = hits_at_k(ranked, gold, ks)
    return AlignmentReport(candidates=ranked, metrics=metrics)
