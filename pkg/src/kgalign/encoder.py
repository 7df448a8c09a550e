"""Structural encoder: shared-weight two-layer GCN plus highway channels.

Both graphs are encoded with the same parameter object. Each graph's
topology embedding comes from two graph-convolution layers over its own
normalized adjacency; the relation and attribute count profiles pass
through highway-gated feedforward channels; the per-entity outputs are
concatenated and row-L2-normalized into the hybrid embedding.
"""

from dataclasses import dataclass

import numpy as np

from kgalign import autograd as ag
from kgalign.autograd import Tensor
from kgalign.errors import ContractViolation
from kgalign.features import AspectFeatures, SparseNormalizedAdjacency


@dataclass
class AblationFlags:
    """Which encoder pieces are active. `highway=False` replaces the gated
    mix with the plain feedforward transform."""

    relation: bool = True
    attribute: bool = True
    highway: bool = True

    @classmethod
    def from_name(cls, name: str) -> "AblationFlags":
        table = {
            "none": cls(),
            "no-rel": cls(relation=False),
            "no-attr": cls(attribute=False),
            "no-highway": cls(highway=False),
        }
        if name not in table:
            raise ContractViolation(f"unknown ablation {name!r}")
        return table[name]

    def to_name(self) -> str:
        if not self.relation:
            return "no-rel"
        if not self.attribute:
            return "no-attr"
        if not self.highway:
            return "no-highway"
        return "none"


@dataclass
class ChannelParams:
    """One highway feedforward channel: lift, gate, and transform affines."""

    w1: Tensor   # (k_f, h)
    b1: Tensor   # (h,)
    wt: Tensor   # (h, h)
    bt: Tensor   # (h,)
    w2: Tensor   # (h, h)
    b2: Tensor   # (h,)

    def named(self, prefix: str) -> list[tuple[str, Tensor]]:
        return [(f"{prefix}.{k}", getattr(self, k))
                for k in ("w1", "b1", "wt", "bt", "w2", "b2")]


@dataclass
class EncoderParams:
    """Every trainable tensor of the structural encoder.

    The GCN weights and channel parameters are shared across both graphs;
    the initial topology features h0_1/h0_2 are per-graph.
    """

    h0_1: Tensor   # (n1, d)
    h0_2: Tensor   # (n2, d)
    ws1: Tensor    # (d, d)
    ws2: Tensor    # (d, d)
    rel: ChannelParams
    attr: ChannelParams

    def named_tensors(self) -> list[tuple[str, Tensor]]:
        """Declared order: also the checkpoint serialization order."""
        out = [("h0_1", self.h0_1), ("h0_2", self.h0_2),
               ("ws1", self.ws1), ("ws2", self.ws2)]
        out += self.rel.named("rel")
        out += self.attr.named("attr")
        return out

    def zero_grads(self) -> None:
        for _, t in self.named_tensors():
            t.zero_grad()


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


def _init_channel(rng: np.random.Generator, k_f: int, h: int, prefix: str,
                  gate_bias: float) -> ChannelParams:
    return ChannelParams(
        w1=Tensor(_glorot(rng, k_f, h), requires_grad=True, name=f"{prefix}.w1"),
        b1=Tensor(np.zeros(h), requires_grad=True, name=f"{prefix}.b1"),
        wt=Tensor(_glorot(rng, h, h), requires_grad=True, name=f"{prefix}.wt"),
        bt=Tensor(np.full(h, gate_bias), requires_grad=True, name=f"{prefix}.bt"),
        w2=Tensor(_glorot(rng, h, h), requires_grad=True, name=f"{prefix}.w2"),
        b2=Tensor(np.zeros(h), requires_grad=True, name=f"{prefix}.b2"),
    )


def init_encoder_params(h0_1: np.ndarray, h0_2: np.ndarray, k_r: int, k_a: int,
                        h: int, rng_seed: int, train_h0: bool = True,
                        gate_bias: float = -2.0) -> EncoderParams:
    """Fresh parameters: given initial features, glorot weights, zero biases.

    The gate bias starts negative so the highway channels open near the
    carry path and phase the transform in during training.
    """
    d = h0_1.shape[1]
    rng = np.random.default_rng((int(rng_seed), 0xE7C0))
    return EncoderParams(
        h0_1=Tensor(h0_1, requires_grad=train_h0, name="h0_1"),
        h0_2=Tensor(h0_2, requires_grad=train_h0, name="h0_2"),
        ws1=Tensor(_glorot(rng, d, d), requires_grad=True, name="ws1"),
        ws2=Tensor(_glorot(rng, d, d), requires_grad=True, name="ws2"),
        rel=_init_channel(rng, k_r, h, "rel", gate_bias),
        attr=_init_channel(rng, k_a, h, "attr", gate_bias),
    )


@dataclass
class EncoderOutput:
    h_t: Tensor              # (n, d) topology embedding after layer 2
    g_r: Tensor | None       # (n, h) relation channel, None when ablated
    g_a: Tensor | None       # (n, h) attribute channel, None when ablated
    h_y: Tensor              # (n, d + h*channels) hybrid, rows L2-normalized


def gcn_layer(adj: SparseNormalizedAdjacency, h: Tensor, w: Tensor,
              activation: str | None) -> Tensor:
    """One propagation step: activation(adj_norm @ h @ w)."""
    if h.shape[0] != adj.n:
        raise ContractViolation(
            f"adjacency has {adj.n} nodes, features have {h.shape[0]} rows")
    if h.shape[1] != w.shape[0]:
        raise ContractViolation(
            f"feature width {h.shape[1]} does not match weight rows {w.shape[0]}")
    out = ag.spmm(adj, h @ w)
    if activation == "relu":
        return ag.relu(out)
    if activation is None:
        return out
    raise ContractViolation(f"unknown activation {activation!r}")


def highway_channel(x_f: Tensor, params: ChannelParams,
                    use_highway: bool = True) -> Tensor:
    """Lift the aspect profile to width h, then gate-mix transform and lift.

    With the gate disabled the channel is the plain feedforward transform.
    """
    if x_f.shape[1] != params.w1.shape[0]:
        raise ContractViolation(
            f"aspect width {x_f.shape[1]} does not match channel input "
            f"{params.w1.shape[0]}")
    s = ag.relu(x_f @ params.w1 + params.b1)
    transformed = ag.relu(s @ params.w2 + params.b2)
    if not use_highway:
        return transformed
    gate = ag.sigmoid(s @ params.wt + params.bt)
    return transformed * gate + s * (1.0 - gate)


def encode(adj: SparseNormalizedAdjacency, x_r: AspectFeatures,
           x_a: AspectFeatures, h0: Tensor, params: EncoderParams,
           flags: AblationFlags | None = None) -> EncoderOutput:
    """Forward pass for one graph; call twice with the same params."""
    flags = flags or AblationFlags()
    h1 = gcn_layer(adj, h0, params.ws1, "relu")
    h_t = gcn_layer(adj, h1, params.ws2, None)
    parts = [h_t]
    g_r = g_a = None
    if flags.relation:
        g_r = highway_channel(Tensor(x_r.matrix), params.rel, flags.highway)
        parts.append(g_r)
    if flags.attribute:
        g_a = highway_channel(Tensor(x_a.matrix), params.attr, flags.highway)
        parts.append(g_a)
    h_y = ag.normalize_rows(ag.concat_cols(parts))
    return EncoderOutput(h_t=h_t, g_r=g_r, g_a=g_a, h_y=h_y)


def encode_pair(adjs: tuple[SparseNormalizedAdjacency, SparseNormalizedAdjacency],
                x_r: tuple[AspectFeatures, AspectFeatures],
                x_a: tuple[AspectFeatures, AspectFeatures],
                params: EncoderParams,
                flags: AblationFlags | None = None) -> tuple[EncoderOutput, EncoderOutput]:
    out1 = encode(adjs[0], x_r[0], x_a[0], params.h0_1, params, flags)
    out2 = encode(adjs[1], x_r[1], x_a[1], params.h0_2, params, flags)
    return out1, out2


def output_width(d: int, h: int, flags: AblationFlags) -> int:
    return d + h * (int(flags.relation) + int(flags.attribute))
