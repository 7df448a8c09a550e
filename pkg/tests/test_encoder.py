import numpy as np
import pytest

from kgalign.autograd import Tensor
from kgalign.encoder import (AblationFlags, ChannelParams, encode, encode_pair,
                             gcn_layer, highway_channel, init_encoder_params,
                             output_width)
from kgalign.errors import ContractViolation
from kgalign.features import (build_adjacency, build_attribute_features,
                              build_relation_features)
from kgalign.training import make_random_inputs

from conftest import make_graph


def identity_channel(k_f, h, rng_seed=0):
    rng = np.random.default_rng(rng_seed)
    return ChannelParams(
        w1=Tensor(rng.standard_normal((k_f, h))),
        b1=Tensor(np.zeros(h)),
        wt=Tensor(rng.standard_normal((h, h)) * 0.1),
        bt=Tensor(np.zeros(h)),
        w2=Tensor(rng.standard_normal((h, h))),
        b2=Tensor(np.zeros(h)),
    )


def test_gcn_layer_identity_adjacency_passthrough():
    g = make_graph(1, np.empty((0, 3), dtype=np.int64))
    adj = build_adjacency(g)
    h = Tensor(np.array([[2.0, -3.0]]))
    w = Tensor(np.eye(2))
    out = gcn_layer(adj, h, w, activation=None)
    assert np.allclose(out.data, h.data)


def test_gcn_layer_two_node_hand_product():
    g = make_graph(2, [(0, 0, 1)])
    adj = build_adjacency(g)
    h = Tensor(np.eye(2))
    w = Tensor(np.eye(2))
    out = gcn_layer(adj, h, w, activation=None)
    assert np.allclose(out.data, [[0.5, 0.5], [0.5, 0.5]])


def test_gcn_layer_relu_nonnegative():
    g = make_graph(3, [(0, 0, 1), (1, 0, 2)])
    adj = build_adjacency(g)
    rng = np.random.default_rng(0)
    out = gcn_layer(adj, Tensor(rng.standard_normal((3, 4))),
                    Tensor(rng.standard_normal((4, 4))), activation="relu")
    assert out.data.min() >= 0.0


def test_gcn_layer_shape_contract():
    g = make_graph(2, [(0, 0, 1)])
    adj = build_adjacency(g)
    with pytest.raises(ContractViolation):
        gcn_layer(adj, Tensor(np.ones((3, 2))), Tensor(np.eye(2)), None)
    with pytest.raises(ContractViolation):
        gcn_layer(adj, Tensor(np.ones((2, 3))), Tensor(np.eye(2)), None)


def _channel_inputs(rng_seed=0, n=6, k_f=4, h=5):
    rng = np.random.default_rng(rng_seed)
    x = Tensor(np.abs(rng.standard_normal((n, k_f))))
    params = identity_channel(k_f, h, rng_seed)
    return x, params


def test_highway_gate_saturated_open_equals_transform():
    x, params = _channel_inputs()
    params.bt.data = np.full(params.bt.data.shape, 20.0)
    gated = highway_channel(x, params, use_highway=True)
    plain = highway_channel(x, params, use_highway=False)
    assert np.abs(gated.data - plain.data).max() < 1e-6


def test_highway_gate_saturated_closed_equals_carry():
    import kgalign.autograd as ag
    x, params = _channel_inputs()
    params.bt.data = np.full(params.bt.data.shape, -20.0)
    params.wt.data = np.zeros_like(params.wt.data)
    gated = highway_channel(x, params, use_highway=True)
    s = ag.relu(x @ params.w1 + params.b1)
    assert np.abs(gated.data - s.data).max() < 1e-6


def test_highway_zero_gate_params_mixes_half():
    import kgalign.autograd as ag
    x, params = _channel_inputs()
    params.wt.data = np.zeros_like(params.wt.data)
    params.bt.data = np.zeros_like(params.bt.data)
    gated = highway_channel(x, params, use_highway=True)
    s = ag.relu(x @ params.w1 + params.b1)
    plain = ag.relu(s @ params.w2 + params.b2)
    # sigmoid(0) = 1/2 exactly
    assert np.allclose(gated.data, 0.5 * (plain.data + s.data), atol=1e-15)


def test_gate_range_open_interval():
    import kgalign.autograd as ag
    x, params = _channel_inputs(rng_seed=3)
    s = ag.relu(x @ params.w1 + params.b1)
    gate = ag.sigmoid(s @ params.wt + params.bt)
    assert np.all(gate.data > 0.0) and np.all(gate.data < 1.0)


def _encode_setup(rng_seed=0, n=7):
    inputs, _ = make_random_inputs(n=n, rng_seed=rng_seed)
    d, h = 5, 4
    rng = np.random.default_rng(rng_seed)
    params = init_encoder_params(rng.standard_normal((n, d)) * 0.3,
                                 rng.standard_normal((n, d)) * 0.3,
                                 inputs.x_r[0].width, inputs.x_a[0].width,
                                 h, rng_seed)
    return inputs, params, d, h


@pytest.mark.parametrize("name,width_channels", [
    ("none", 2), ("no-rel", 1), ("no-attr", 1), ("no-highway", 2)])
def test_ablation_output_widths(name, width_channels):
    inputs, params, d, h = _encode_setup()
    flags = AblationFlags.from_name(name)
    out = encode(inputs.adjs[0], inputs.x_r[0], inputs.x_a[0], params.h0_1,
                 params, flags)
    assert out.h_y.data.shape[1] == d + h * width_channels
    assert output_width(d, h, flags) == d + h * width_channels


def test_no_highway_is_plain_transform():
    inputs, params, _, _ = _encode_setup()
    out = encode(inputs.adjs[0], inputs.x_r[0], inputs.x_a[0], params.h0_1,
                 params, AblationFlags.from_name("no-highway"))
    plain = highway_channel(Tensor(inputs.x_r[0].matrix), params.rel,
                            use_highway=False)
    assert np.array_equal(out.g_r.data, plain.data)


def test_hybrid_rows_unit_norm():
    inputs, params, _, _ = _encode_setup(rng_seed=5)
    out = encode(inputs.adjs[0], inputs.x_r[0], inputs.x_a[0], params.h0_1, params)
    norms = np.linalg.norm(out.h_y.data, axis=1)
    assert np.all((np.abs(norms - 1.0) < 1e-6) | (norms == 0.0))


def test_weight_sharing_and_order_invariance():
    inputs, params, _, _ = _encode_setup(rng_seed=2)
    out1a, out2a = encode_pair(inputs.adjs, inputs.x_r, inputs.x_a, params)
    # Encode in the opposite order with the identical parameter object.
    out2b = encode(inputs.adjs[1], inputs.x_r[1], inputs.x_a[1], params.h0_2, params)
    out1b = encode(inputs.adjs[0], inputs.x_r[0], inputs.x_a[0], params.h0_1, params)
    assert np.array_equal(out1a.h_y.data, out1b.h_y.data)
    assert np.array_equal(out2a.h_y.data, out2b.h_y.data)


def test_node_permutation_equivariance():
    rng = np.random.default_rng(9)
    n = 12
    triples = []
    seen = set()
    while len(triples) < 20:
        h, t = rng.integers(0, n, size=2)
        if h != t and (h, t) not in seen:
            seen.add((h, t))
            triples.append((int(h), int(rng.integers(0, 2)), int(t)))
    g = make_graph(n, triples, rel_names=("r0", "r1"),
                   attr_triples=[(int(rng.integers(0, n)), 0) for _ in range(8)])
    perm = rng.permutation(n)
    permuted_triples = [(int(perm[h]), r, int(perm[t])) for h, r, t in g.rel_triples]
    permuted_attrs = [(int(perm[e]), k) for e, k in g.attr_triples]
    gp = make_graph(n, permuted_triples, rel_names=("r0", "r1"),
                    attr_triples=permuted_attrs)

    cols_r = ["r0", "r1"]
    cols_a = ["name"]
    x_r, x_a = build_relation_features(g, cols_r), build_attribute_features(g, cols_a)
    xp_r, xp_a = build_relation_features(gp, cols_r), build_attribute_features(gp, cols_a)

    d, h = 4, 3
    h0 = rng.standard_normal((n, d))
    params = init_encoder_params(h0, h0, x_r.width, x_a.width, h, rng_seed=1)
    out = encode(build_adjacency(g), x_r, x_a, Tensor(h0), params)
    out_p = encode(build_adjacency(gp),
                   xp_r, xp_a, Tensor(h0[np.argsort(perm)]), params)
    # Row i of the permuted encoding must equal row perm^-1(i) of the original.
    assert np.abs(out_p.h_y.data - out.h_y.data[np.argsort(perm)]).max() < 1e-10
