import numpy as np
import pytest

from kgalign.autograd import Tensor
from kgalign.encoder import encode_pair
from kgalign.errors import ConfigError
from kgalign.training import (Adam, Hyperparams, NegativeBatch, grad_check,
                              make_random_inputs, row_distance,
                              sample_negatives, structural_loss,
                              train_structural)


def unit_rows(matrix):
    m = np.asarray(matrix, dtype=float)
    return m / np.linalg.norm(m, axis=1, keepdims=True)


def test_hinge_zero_at_margin_boundary():
    # Positive distance 0, negative distance exactly beta -> term is 0.
    hy1 = Tensor(unit_rows([[1.0, 0.0], [0.0, 1.0]]))
    hy2 = Tensor(unit_rows([[1.0, 0.0], [0.0, 1.0]]))
    seeds = np.array([[0, 0]])
    negatives = NegativeBatch(pairs=np.array([[0, 1]]), seed_index=np.array([0]))
    beta = float(np.abs(hy1.data[0] - hy2.data[1]).sum())
    loss = structural_loss(hy1, hy2, seeds, negatives, beta, "l1")
    assert float(loss.data) == 0.0


def test_hinge_arithmetic():
    # rho_pos = 1, beta = 3, rho_neg = 2 -> max(0, 1 + 3 - 2) = 2.
    hy1 = Tensor(np.array([[1.0, 0.0, 0.0]]))
    hy2 = Tensor(np.array([[0.5, 0.5, 0.0], [0.0, 0.0, 1.0]]))
    seeds = np.array([[0, 0]])          # L1 distance 1.0
    negatives = NegativeBatch(pairs=np.array([[0, 1]]),  # L1 distance 2.0
                              seed_index=np.array([0]))
    loss = structural_loss(hy1, hy2, seeds, negatives, 3.0, "l1")
    assert float(loss.data) == pytest.approx(2.0)


def test_loss_matches_brute_force_double_loop():
    rng = np.random.default_rng(8)
    hy1 = Tensor(unit_rows(rng.standard_normal((10, 6))))
    hy2 = Tensor(unit_rows(rng.standard_normal((12, 6))))
    seeds = np.array([[0, 0], [1, 1], [2, 2], [3, 3]])
    negatives = sample_negatives(seeds, 10, 12, k_neg=3, rng_seed=5, epoch=2)

    for metric in ("l1", "l2", "cos"):
        loss = float(structural_loss(hy1, hy2, seeds, negatives, 1.5, metric).data)

        def rho(a, b):
            if metric == "l1":
                return np.abs(a - b).sum()
            if metric == "l2":
                return np.sqrt(((a - b) ** 2).sum())
            return 1.0 - a @ b

        terms = []
        for (e1, e2), idx in zip(negatives.pairs, negatives.seed_index):
            pos = rho(hy1.data[seeds[idx, 0]], hy2.data[seeds[idx, 1]])
            neg = rho(hy1.data[e1], hy2.data[e2])
            terms.append(max(0.0, pos + 1.5 - neg))
        assert loss == pytest.approx(np.mean(terms), rel=1e-12)


def test_loss_nonnegative_random():
    rng = np.random.default_rng(1)
    for trial in range(5):
        hy1 = Tensor(unit_rows(rng.standard_normal((8, 4))))
        hy2 = Tensor(unit_rows(rng.standard_normal((8, 4))))
        seeds = np.array([[0, 0], [1, 1]])
        negatives = sample_negatives(seeds, 8, 8, 2, rng_seed=trial, epoch=0)
        loss = float(structural_loss(hy1, hy2, seeds, negatives, 0.5, "l1").data)
        assert loss >= 0.0


def test_empty_seed_set_rejected():
    hy = Tensor(np.ones((2, 2)))
    negatives = NegativeBatch(pairs=np.empty((0, 2), dtype=np.int64),
                              seed_index=np.empty(0, dtype=np.int64))
    with pytest.raises(ConfigError):
        structural_loss(hy, hy, np.empty((0, 2), dtype=np.int64), negatives,
                        1.0, "l1")


def test_sample_negatives_counts():
    seeds = np.array([[0, 0], [1, 1], [2, 2]])
    batch = sample_negatives(seeds, 30, 30, k_neg=5, rng_seed=0, epoch=0)
    assert len(batch.pairs) == 30  # 5 per side per seed
    assert len(batch.seed_index) == 30


def test_sample_negatives_avoid_seed_pairs():
    # Tiny target side forces collisions that must be resampled.
    seeds = np.array([[0, 0], [1, 1], [2, 2]])
    seed_set = {(0, 0), (1, 1), (2, 2)}
    for epoch in range(10):
        batch = sample_negatives(seeds, 4, 4, k_neg=2, rng_seed=1, epoch=epoch)
        for pair in batch.pairs:
            assert tuple(pair) not in seed_set


def test_sample_negatives_deterministic():
    seeds = np.array([[0, 0], [1, 1]])
    a = sample_negatives(seeds, 20, 20, 4, rng_seed=7, epoch=3)
    b = sample_negatives(seeds, 20, 20, 4, rng_seed=7, epoch=3)
    c = sample_negatives(seeds, 20, 20, 4, rng_seed=7, epoch=4)
    assert np.array_equal(a.pairs, b.pairs)
    assert not np.array_equal(a.pairs, c.pairs)


def test_sample_negatives_graph_too_small():
    seeds = np.array([[0, 0]])
    with pytest.raises(ConfigError):
        sample_negatives(seeds, 3, 3, k_neg=5, rng_seed=0, epoch=0)


def test_zero_signal_gradient_exactly_zero():
    # beta = 0 and negatives identical to the positives: every hinge term sits
    # at max(0, 0) and the chosen subgradient is exactly 0 everywhere.
    inputs, seeds = make_random_inputs(n=6, rng_seed=2)
    from kgalign.encoder import init_encoder_params
    from kgalign.features import init_features
    params = init_encoder_params(init_features(6, 4, 0), init_features(6, 4, 1),
                                 inputs.x_r[0].width, inputs.x_a[0].width, 3, 0)
    out1, out2 = encode_pair(inputs.adjs, inputs.x_r, inputs.x_a, params)
    negatives = NegativeBatch(pairs=seeds.copy(),
                              seed_index=np.arange(len(seeds)))
    loss = structural_loss(out1.h_y, out2.h_y, seeds, negatives, 0.0, "l1")
    assert float(loss.data) == 0.0
    loss.backward()
    for name, t in params.named_tensors():
        assert t.grad is None or not t.grad.any(), name


def test_grad_check_passes():
    inputs, seeds = make_random_inputs(n=8, rng_seed=0)
    hyper = Hyperparams(d=6, h=5, beta=1.0, neg_per_side=2, rng_seed=0)
    assert grad_check(inputs, seeds, hyper, n_samples=60) < 1e-4


def test_grad_check_detects_corruption():
    inputs, seeds = make_random_inputs(n=8, rng_seed=0)
    hyper = Hyperparams(d=6, h=5, beta=1.0, neg_per_side=2, rng_seed=0)
    assert grad_check(inputs, seeds, hyper, n_samples=60, corrupt="ws1") > 1e-2


@pytest.mark.parametrize("metric", ["l1", "l2", "cos"])
def test_grad_check_all_metrics(metric):
    inputs, seeds = make_random_inputs(n=8, rng_seed=4)
    hyper = Hyperparams(d=5, h=4, beta=0.8, neg_per_side=2, metric=metric,
                        rng_seed=4)
    assert grad_check(inputs, seeds, hyper, n_samples=40) < 1e-4


def test_adam_zero_gradient_keeps_params():
    t = Tensor(np.array([1.0, 2.0, 3.0]), requires_grad=True)
    optimizer = Adam([("t", t)], lr=0.1)
    before = t.data.copy()
    t.grad = np.zeros(3)
    optimizer.step()
    assert np.array_equal(t.data, before)


def test_adam_moves_against_gradient():
    t = Tensor(np.array([1.0]), requires_grad=True)
    optimizer = Adam([("t", t)], lr=0.1)
    t.grad = np.array([1.0])
    optimizer.step()
    assert t.data[0] < 1.0


def test_train_structural_reduces_loss_on_twins(tmp_path):
    from kgalign.config import RunConfig
    from kgalign.pipeline import build_inputs, load_dataset
    from kgalign.synth import SynthSpec, gen_synth

    gen_synth(SynthSpec(n=40, avg_degree=4.0, n_relation_types=3, n_attr_keys=5,
                        edge_noise=0.0, seed_ratio=0.3, rng_seed=0),
              str(tmp_path / "d"))
    config = RunConfig(data_dir=str(tmp_path / "d"), d=16, h=16, epochs=100,
                       lr=0.01, rng_seed=0)
    pair, split = load_dataset(config)
    inputs = build_inputs(pair, config)
    result = train_structural(inputs, split.train, config.hyperparams())
    assert result.loss_curve[-1] < 0.5 * result.loss_curve[0]


def test_train_structural_lr_zero_keeps_params():
    inputs, seeds = make_random_inputs(n=8, rng_seed=1)
    hyper = Hyperparams(d=4, h=3, epochs=3, lr=0.0, neg_per_side=2, rng_seed=1)
    result = train_structural(inputs, seeds, hyper)
    fresh = train_structural(inputs, seeds,
                             Hyperparams(d=4, h=3, epochs=0, lr=0.0,
                                         neg_per_side=2, rng_seed=1))
    for (_, after), (_, before) in zip(result.params.named_tensors(),
                                       fresh.params.named_tensors()):
        assert np.array_equal(after.data, before.data)


def test_train_structural_deterministic():
    inputs, seeds = make_random_inputs(n=8, rng_seed=3)
    hyper = Hyperparams(d=4, h=3, epochs=5, lr=0.01, neg_per_side=2, rng_seed=3)
    a = train_structural(inputs, seeds, hyper)
    b = train_structural(inputs, seeds, hyper)
    assert a.loss_curve == b.loss_curve
    for (_, ta), (_, tb) in zip(a.params.named_tensors(), b.params.named_tensors()):
        assert np.array_equal(ta.data, tb.data)


def test_row_distance_requires_matching_shapes():
    from kgalign.errors import ContractViolation
    with pytest.raises(ContractViolation):
        row_distance(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 4))), "l1")


def test_hyperparams_validation():
    with pytest.raises(ConfigError):
        Hyperparams(beta=0.0).validate()
    with pytest.raises(ConfigError):
        Hyperparams(tau=1.5).validate()
    with pytest.raises(ConfigError):
        Hyperparams(metric="manhattan").validate()
    Hyperparams().validate()
