"""Graph-attention encoder + MLP corrector, in plain numpy.

Forward and reverse passes are written out by hand (no autodiff framework)
so training is deterministic and dependency-free.  Message passing follows
the directed DAG edges (each node attends over its predecessors and itself),
which — because lightcone masks are closed under predecessors — guarantees
that a masked readout slot cannot see nodes outside its mask through any
number of layers.

Readout: for output slot k, node embeddings are mean-pooled over the union
of the lightcone masks of the qubits whose bits are set in the big-endian
binary of k (slot 0, having no set bits, pools over the union of all masks).
The pooled vector, the global feature vector, and the noisy input field feed
a one-hidden-layer MLP evaluated per slot against that slot's own pooling.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from ..circuit_graph import FeatureTensors, GLOBAL_FEATURE_DIM, LightconeMasks, NODE_FEATURE_DIM

_LEAKY_SLOPE = 0.2
_ALLOWED_OUT_DIMS = (8, 16, 32, 64)

ModelParams = Dict[str, np.ndarray]


@dataclass(frozen=True)
class ModelConfig:
    out_dim: int
    num_gat_layers: int = 3
    attention_heads: int = 4
    hidden_dim: int = 64
    mlp_hidden: int = 128
    use_lightcone_masks: bool = True
    node_feature_dim: int = NODE_FEATURE_DIM
    global_feature_dim: int = GLOBAL_FEATURE_DIM

    def __post_init__(self) -> None:
        for label in (
            "out_dim",
            "num_gat_layers",
            "attention_heads",
            "hidden_dim",
            "mlp_hidden",
            "node_feature_dim",
            "global_feature_dim",
        ):
            if getattr(self, label) < 1:
                raise ValueError(f"{label} must be positive")
        if self.out_dim not in _ALLOWED_OUT_DIMS:
            raise ValueError(f"out_dim must be one of {_ALLOWED_OUT_DIMS}, got {self.out_dim}")
        if self.hidden_dim % self.attention_heads:
            raise ValueError("hidden_dim must be divisible by attention_heads")

    @property
    def head_dim(self) -> int:
        return self.hidden_dim // self.attention_heads

    @property
    def mlp_in_dim(self) -> int:
        return self.hidden_dim + self.global_feature_dim + self.out_dim


def param_shapes(cfg: ModelConfig) -> Dict[str, Tuple[int, ...]]:
    """Named tensor shapes in a fixed, documented order."""
    shapes: Dict[str, Tuple[int, ...]] = {}
    for layer in range(cfg.num_gat_layers):
        in_dim = cfg.node_feature_dim if layer == 0 else cfg.hidden_dim
        shapes[f"gat{layer}.weight"] = (cfg.attention_heads, in_dim, cfg.head_dim)
        shapes[f"gat{layer}.att_src"] = (cfg.attention_heads, cfg.head_dim)
        shapes[f"gat{layer}.att_dst"] = (cfg.attention_heads, cfg.head_dim)
        shapes[f"gat{layer}.bias"] = (cfg.hidden_dim,)
    shapes["mlp.w1"] = (cfg.mlp_hidden, cfg.mlp_in_dim)
    shapes["mlp.b1"] = (cfg.mlp_hidden,)
    shapes["mlp.w2"] = (cfg.out_dim, cfg.mlp_hidden)
    shapes["mlp.b2"] = (cfg.out_dim,)
    return shapes


def init_model(cfg: ModelConfig, seed: int) -> ModelParams:
    """Uniform(-b, b) weights with b = sqrt(6/(fan_in+fan_out)); zero biases."""
    rng = np.random.default_rng(seed)
    params: ModelParams = {}
    for name, shape in param_shapes(cfg).items():
        if name.endswith(("bias", "b1", "b2")):
            params[name] = np.zeros(shape)
            continue
        if name.endswith(("att_src", "att_dst")):
            fan_in, fan_out = shape[-1], 1
        elif name.endswith("weight"):
            fan_in, fan_out = shape[1], shape[2]
        else:  # mlp.w1 / mlp.w2 are (out, in)
            fan_in, fan_out = shape[1], shape[0]
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        params[name] = rng.uniform(-bound, bound, size=shape)
    return params


@dataclass(frozen=True)
class PreparedGraph:
    """Feature tensors with edge arrays and the readout pooling matrix baked in."""

    node_features: np.ndarray  # (V, F)
    src: np.ndarray  # (E,) int — self-loops included
    dst: np.ndarray  # (E,) int
    pooling: np.ndarray  # (out_dim, V), rows sum to 1
    globals_vec: np.ndarray  # (G,)
    noisy_field: np.ndarray  # (out_dim,)


def build_pooling(
    masks: LightconeMasks, num_nodes: int, cfg: ModelConfig
) -> np.ndarray:
    """Per-slot mean-pooling weights over mask unions (or all nodes, masks off)."""
    pooling = np.zeros((cfg.out_dim, num_nodes))
    if not cfg.use_lightcone_masks:
        pooling[:, :] = 1.0 / num_nodes
        return pooling
    qubits = sorted(masks.masks.keys())
    n = len(qubits)
    union_all = frozenset().union(*masks.masks.values()) if masks.masks else frozenset()
    if not union_all:
        raise ValueError("lightcone masks are all empty; nothing to pool over")
    for k in range(cfg.out_dim):
        members: frozenset = frozenset()
        for bit, qubit in enumerate(qubits):
            # big-endian: qubit 0 owns the most significant bit of index k
            if (k >> (n - 1 - bit)) & 1:
                members = members | masks.masks[qubit]
        if not members:
            members = union_all
        ids = sorted(members)
        pooling[k, ids] = 1.0 / len(ids)
    return pooling


def prepare_graph(
    feats: FeatureTensors, masks: LightconeMasks, cfg: ModelConfig
) -> PreparedGraph:
    num_nodes = feats.node_features.shape[0]
    if feats.node_features.shape[1] != cfg.node_feature_dim:
        raise ValueError(
            f"node feature width {feats.node_features.shape[1]} != "
            f"configured {cfg.node_feature_dim}"
        )
    if feats.globals_vec.shape[0] != cfg.global_feature_dim:
        raise ValueError("global feature width mismatch")
    if feats.noisy_field.shape[0] != cfg.out_dim:
        raise ValueError(
            f"noisy field length {feats.noisy_field.shape[0]} != out_dim {cfg.out_dim}"
        )
    src = np.fromiter((e[0] for e in feats.adjacency), dtype=np.int64, count=len(feats.adjacency))
    dst = np.fromiter((e[1] for e in feats.adjacency), dtype=np.int64, count=len(feats.adjacency))
    loops = np.arange(num_nodes, dtype=np.int64)
    src = np.concatenate([src, loops])
    dst = np.concatenate([dst, loops])
    order = np.lexsort((src, dst))
    return PreparedGraph(
        node_features=feats.node_features,
        src=src[order],
        dst=dst[order],
        pooling=build_pooling(masks, num_nodes, cfg),
        globals_vec=feats.globals_vec,
        noisy_field=feats.noisy_field,
    )


def _leaky(x: np.ndarray) -> np.ndarray:
    return np.where(x > 0, x, _LEAKY_SLOPE * x)


def _leaky_grad(x: np.ndarray) -> np.ndarray:
    return np.where(x > 0, 1.0, _LEAKY_SLOPE)


def _elu(x: np.ndarray) -> np.ndarray:
    return np.where(x > 0, x, np.expm1(np.minimum(x, 0.0)))


def _elu_grad(x: np.ndarray) -> np.ndarray:
    return np.where(x > 0, 1.0, np.exp(np.minimum(x, 0.0)))


def forward_prepared(
    params: ModelParams, graph: PreparedGraph, cfg: ModelConfig
) -> Tuple[np.ndarray, Dict]:
    """Full forward pass; returns (corrected field, cache for backward)."""
    num_nodes = graph.node_features.shape[0]
    src, dst = graph.src, graph.dst
    h = graph.node_features
    layer_caches: List[Dict] = []
    for layer in range(cfg.num_gat_layers):
        weight = params[f"gat{layer}.weight"]
        att_src = params[f"gat{layer}.att_src"]
        att_dst = params[f"gat{layer}.att_dst"]
        bias = params[f"gat{layer}.bias"]
        z = np.einsum("vf,hfd->hvd", h, weight)  # (H, V, d)
        s_src = np.einsum("hvd,hd->hv", z, att_src)
        s_dst = np.einsum("hvd,hd->hv", z, att_dst)
        pre = s_src[:, src] + s_dst[:, dst]  # (H, E)
        logits = _leaky(pre)
        alpha = np.empty_like(logits)
        out_heads = np.empty((cfg.attention_heads, num_nodes, cfg.head_dim))
        for head in range(cfg.attention_heads):
            peak = np.full(num_nodes, -np.inf)
            np.maximum.at(peak, dst, logits[head])
            exp = np.exp(logits[head] - peak[dst])
            denom = np.zeros(num_nodes)
            np.add.at(denom, dst, exp)
            alpha[head] = exp / denom[dst]
            weighted = alpha[head][:, None] * z[head][src]
            acc = np.zeros((num_nodes, cfg.head_dim))
            np.add.at(acc, dst, weighted)
            out_heads[head] = acc
        stacked = np.transpose(out_heads, (1, 0, 2)).reshape(num_nodes, cfg.hidden_dim)
        pre_act = stacked + bias
        h_next = _elu(pre_act)
        layer_caches.append(
            {"h_in": h, "z": z, "pre": pre, "alpha": alpha, "pre_act": pre_act}
        )
        h = h_next

    pooled = graph.pooling @ h  # (out_dim, hidden)
    tiled_globals = np.broadcast_to(graph.globals_vec, (cfg.out_dim, cfg.global_feature_dim))
    tiled_noisy = np.broadcast_to(graph.noisy_field, (cfg.out_dim, cfg.out_dim))
    concat = np.concatenate([pooled, tiled_globals, tiled_noisy], axis=1)
    pre_mlp = concat @ params["mlp.w1"].T + params["mlp.b1"]  # (out_dim, mlp_hidden)
    relu = np.maximum(pre_mlp, 0.0)
    out = np.sum(relu * params["mlp.w2"], axis=1) + params["mlp.b2"]
    cache = {
        "layers": layer_caches,
        "h_final": h,
        "concat": concat,
        "pre_mlp": pre_mlp,
        "relu": relu,
    }
    return out, cache


def forward(
    params: ModelParams,
    feats: FeatureTensors,
    masks: LightconeMasks,
    cfg: ModelConfig,
) -> np.ndarray:
    """Corrected velocity field (length out_dim) for one featurized circuit."""
    out, _ = forward_prepared(params, prepare_graph(feats, masks, cfg), cfg)
    return out


def loss_mse(pred: np.ndarray, target: np.ndarray) -> float:
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {target.shape}")
    return float(np.mean((pred - target) ** 2))


def backward_prepared(
    params: ModelParams,
    graph: PreparedGraph,
    cfg: ModelConfig,
    target: np.ndarray,
) -> Tuple[float, ModelParams]:
    """Loss and exact reverse-mode gradients of loss_mse(forward(...), target)."""
    out, cache = forward_prepared(params, graph, cfg)
    loss = loss_mse(out, target)
    grads: ModelParams = {name: np.zeros_like(value) for name, value in params.items()}

    d_out = 2.0 * (out - target) / cfg.out_dim  # (out_dim,)
    relu = cache["relu"]
    grads["mlp.b2"] += d_out
    grads["mlp.w2"] += d_out[:, None] * relu
    d_relu = d_out[:, None] * params["mlp.w2"]  # (out_dim, mlp_hidden)
    d_pre_mlp = d_relu * (cache["pre_mlp"] > 0)
    grads["mlp.w1"] += d_pre_mlp.T @ cache["concat"]
    grads["mlp.b1"] += d_pre_mlp.sum(axis=0)
    d_concat = d_pre_mlp @ params["mlp.w1"]
    d_pooled = d_concat[:, : cfg.hidden_dim]
    d_h = graph.pooling.T @ d_pooled  # (V, hidden)

    src, dst = graph.src, graph.dst
    num_nodes = graph.node_features.shape[0]
    for layer in reversed(range(cfg.num_gat_layers)):
        lc = cache["layers"][layer]
        weight = params[f"gat{layer}.weight"]
        att_src = params[f"gat{layer}.att_src"]
        att_dst = params[f"gat{layer}.att_dst"]
        z, pre, alpha = lc["z"], lc["pre"], lc["alpha"]

        d_pre_act = d_h * _elu_grad(lc["pre_act"])  # (V, hidden)
        grads[f"gat{layer}.bias"] += d_pre_act.sum(axis=0)
        d_heads = d_pre_act.reshape(num_nodes, cfg.attention_heads, cfg.head_dim)
        d_heads = np.transpose(d_heads, (1, 0, 2))  # (H, V, d)

        d_h_in = np.zeros_like(lc["h_in"])
        for head in range(cfg.attention_heads):
            d_o = d_heads[head]  # (V, d)
            z_h = z[head]
            a_h = alpha[head]
            # out_i = sum_j alpha_ij z_j  (edges j->i)
            d_alpha = np.sum(d_o[dst] * z_h[src], axis=1)  # (E,)
            d_z = np.zeros_like(z_h)
            np.add.at(d_z, src, a_h[:, None] * d_o[dst])
            # softmax over incoming edges of each dst node
            weighted = np.zeros(num_nodes)
            np.add.at(weighted, dst, a_h * d_alpha)
            d_logits = a_h * (d_alpha - weighted[dst])
            d_pre_edge = d_logits * _leaky_grad(pre[head])
            d_s_src = np.zeros(num_nodes)
            np.add.at(d_s_src, src, d_pre_edge)
            d_s_dst = np.zeros(num_nodes)
            np.add.at(d_s_dst, dst, d_pre_edge)
            grads[f"gat{layer}.att_src"][head] += z_h.T @ d_s_src
            grads[f"gat{layer}.att_dst"][head] += z_h.T @ d_s_dst
            d_z += d_s_src[:, None] * att_src[head]
            d_z += d_s_dst[:, None] * att_dst[head]
            grads[f"gat{layer}.weight"][head] += lc["h_in"].T @ d_z
            d_h_in += d_z @ weight[head].T
        d_h = d_h_in
    return loss, grads
