"""Training loop, evaluation aggregates, and checkpoint/history persistence.

Everything is deterministic under a fixed seed: the train/val split, epoch
shuffles, hardware substitution choices, and Adam arithmetic all derive
their randomness from the configured seed, and artifacts are serialized
with round-trip float formatting.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .._seeding import derive_seed
from ..circuit import CircuitMetrics, make_trotter_plan, parse_circuit
from ..circuit_graph import circuit_to_dag, compute_lightcones, featurize
from ..dataset import TrainingSample
from .model import (
    ModelConfig,
    ModelParams,
    PreparedGraph,
    backward_prepared,
    forward_prepared,
    init_model,
    loss_mse,
    param_shapes,
    prepare_graph,
)

CHECKPOINT_VERSION = 1

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

SMALL_NU_MAX = 0.05  # viscosity-regime split for report grouping
LARGE_NU_MIN = 0.10


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    learning_rate: float = 1e-3
    lr_schedule: str = "none"  # "none" | "step"
    step_epoch: int = 70
    step_factor: float = 0.1
    batch_size: int = 16
    val_fraction: float = 0.2
    seed: int = 0
    hardware_mix_ratio: float = 0.0

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not 0.0 < self.val_fraction < 1.0:
            raise ValueError("val_fraction must lie strictly between 0 and 1")
        if self.lr_schedule not in ("none", "step"):
            raise ValueError(f"unknown lr_schedule {self.lr_schedule!r}")
        if not 0.0 <= self.hardware_mix_ratio <= 1.0:
            raise ValueError("hardware_mix_ratio must lie in [0, 1]")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass(frozen=True)
class PreparedSample:
    """One training sample with graph tensors baked for the model."""

    graph: PreparedGraph
    target: np.ndarray
    noisy_field: np.ndarray
    zne_field: Optional[np.ndarray]
    hardware_field: Optional[np.ndarray]
    nu: float
    n_grid: int


def prepare_sample(sample: TrainingSample, cfg: ModelConfig) -> PreparedSample:
    """Parse the sample's circuit and pack model-ready tensors."""
    with open(sample.circuit_path, "r", encoding="utf-8") as handle:
        circuit = parse_circuit(handle.read())
    dag = circuit_to_dag(circuit)
    masks = compute_lightcones(dag)
    plan = make_trotter_plan(sample.params, sample.t, 1)
    metrics = CircuitMetrics(
        depth=sample.metrics["depth"],
        two_qubit_gate_count=sample.metrics["two_qubit_count"],
    )
    feats = featurize(
        dag,
        masks,
        sample.params,
        sample.noise,
        metrics,
        sample.noisy_field,
        theta=plan.theta,
        steps_m=plan.steps_m,
        scale_s=plan.scale_s,
    )
    return PreparedSample(
        graph=prepare_graph(feats, masks, cfg),
        target=np.asarray(sample.classical_field, dtype=float),
        noisy_field=np.asarray(sample.noisy_field, dtype=float),
        zne_field=sample.zne_field,
        hardware_field=sample.hardware_field,
        nu=sample.params.nu,
        n_grid=sample.params.n_grid,
    )


def _with_input(graph: PreparedGraph, noisy_field: np.ndarray) -> PreparedGraph:
    return PreparedGraph(
        node_features=graph.node_features,
        src=graph.src,
        dst=graph.dst,
        pooling=graph.pooling,
        globals_vec=graph.globals_vec,
        noisy_field=noisy_field,
    )


@dataclass
class _AdamState:
    m: ModelParams
    v: ModelParams
    step: int = 0


def _adam_update(
    params: ModelParams, grads: ModelParams, state: _AdamState, lr: float
) -> None:
    state.step += 1
    t = state.step
    for name, grad in grads.items():
        state.m[name] = ADAM_BETA1 * state.m[name] + (1 - ADAM_BETA1) * grad
        state.v[name] = ADAM_BETA2 * state.v[name] + (1 - ADAM_BETA2) * grad**2
        m_hat = state.m[name] / (1 - ADAM_BETA1**t)
        v_hat = state.v[name] / (1 - ADAM_BETA2**t)
        params[name] = params[name] - lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)


def _epoch_lr(cfg: TrainConfig, epoch: int) -> float:
    if cfg.lr_schedule == "step" and epoch > cfg.step_epoch:
        return cfg.learning_rate * cfg.step_factor
    return cfg.learning_rate


def _mean_loss(
    params: ModelParams,
    prepared: Sequence[PreparedSample],
    inputs: Sequence[np.ndarray],
    cfg: ModelConfig,
) -> Tuple[float, float]:
    """(mean MSE, mean MAE) of the current model over a fixed sample list."""
    losses = []
    maes = []
    for sample, noisy in zip(prepared, inputs):
        out, _ = forward_prepared(params, _with_input(sample.graph, noisy), cfg)
        losses.append(loss_mse(out, sample.target))
        maes.append(float(np.mean(np.abs(out - sample.target))))
    return float(np.mean(losses)), float(np.mean(maes))


def train(
    samples: Sequence[TrainingSample],
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
) -> Tuple[ModelParams, List[Dict[str, float]]]:
    """Train a corrector on paired samples; returns (params, history rows).

    History rows carry epoch (1-based), train_loss, val_loss, val_mae, lr,
    with losses measured by a full pass after each epoch's updates.
    """
    if len(samples) < 10:
        raise ValueError(f"need at least 10 samples, got {len(samples)}")
    dims = {s.params.n_grid for s in samples}
    if dims != {model_cfg.out_dim}:
        raise ValueError(
            f"sample dimensions {sorted(dims)} do not all match out_dim {model_cfg.out_dim}"
        )
    prepared = [prepare_sample(s, model_cfg) for s in samples]

    split_rng = np.random.default_rng(derive_seed(train_cfg.seed, "split"))
    perm = split_rng.permutation(len(prepared))
    n_val = max(1, int(round(train_cfg.val_fraction * len(prepared))))
    val_idx = perm[:n_val]
    train_idx = perm[n_val:]
    if len(train_idx) == 0:
        raise ValueError("validation split consumed every sample")

    # Hardware substitution: a deterministic fraction of the *training* inputs
    # swaps its simulated noisy field for the recorded hardware field.
    train_inputs: List[np.ndarray] = [prepared[i].noisy_field for i in train_idx]
    if train_cfg.hardware_mix_ratio > 0.0:
        candidates = [
            pos for pos, i in enumerate(train_idx) if prepared[i].hardware_field is not None
        ]
        mix_rng = np.random.default_rng(derive_seed(train_cfg.seed, "hwmix"))
        mix_rng.shuffle(candidates)
        take = int(round(train_cfg.hardware_mix_ratio * len(candidates)))
        for pos in candidates[:take]:
            train_inputs[pos] = prepared[train_idx[pos]].hardware_field

    params = init_model(model_cfg, derive_seed(train_cfg.seed, "init"))
    state = _AdamState(
        m={name: np.zeros_like(value) for name, value in params.items()},
        v={name: np.zeros_like(value) for name, value in params.items()},
    )

    val_prepared = [prepared[i] for i in val_idx]
    val_inputs = [prepared[i].noisy_field for i in val_idx]
    train_prepared = [prepared[i] for i in train_idx]

    history: List[Dict[str, float]] = []
    for epoch in range(1, train_cfg.epochs + 1):
        lr = _epoch_lr(train_cfg, epoch)
        epoch_rng = np.random.default_rng(derive_seed(train_cfg.seed, "epoch", epoch))
        order = epoch_rng.permutation(len(train_idx))
        for start in range(0, len(order), train_cfg.batch_size):
            batch = order[start : start + train_cfg.batch_size]
            batch_grads: Optional[ModelParams] = None
            for pos in batch:
                graph = _with_input(train_prepared[pos].graph, train_inputs[pos])
                _, grads = backward_prepared(
                    params, graph, model_cfg, train_prepared[pos].target
                )
                if batch_grads is None:
                    batch_grads = grads
                else:
                    for name in batch_grads:
                        batch_grads[name] += grads[name]
            assert batch_grads is not None
            for name in batch_grads:
                batch_grads[name] /= len(batch)
            _adam_update(params, batch_grads, state, lr)
        train_loss, _ = _mean_loss(params, train_prepared, train_inputs, model_cfg)
        val_loss, val_mae = _mean_loss(params, val_prepared, val_inputs, model_cfg)
        history.append(
            {
                "epoch": float(epoch),
                "train_loss": train_loss,
                "val_loss": val_loss,
                "val_mae": val_mae,
                "lr": lr,
            }
        )
    return params, history


def improvement_percent(baseline_mae: float, corrected_mae: float) -> float:
    """(baseline - corrected) / baseline, in percent."""
    if baseline_mae <= 0:
        raise ValueError("baseline MAE must be positive")
    return 100.0 * (baseline_mae - corrected_mae) / baseline_mae


@dataclass(frozen=True)
class EvalReport:
    per_sample: List[Dict[str, Optional[float]]]
    by_dimension: Dict[int, Dict[str, Optional[float]]]
    by_viscosity: Dict[str, Dict[str, Optional[float]]]


def _aggregate(rows: List[Dict[str, Optional[float]]]) -> Dict[str, Optional[float]]:
    def mean_of(key: str) -> Optional[float]:
        values = [r[key] for r in rows if r.get(key) is not None]
        return float(np.mean(values)) if values else None

    agg: Dict[str, Optional[float]] = {"samples": float(len(rows))}
    for key in ("noisy", "zne", "hardware", "corrected", "corrected_hw"):
        agg[key] = mean_of(key)
    agg["gain_vs_sim"] = (
        improvement_percent(agg["noisy"], agg["corrected"])
        if agg["noisy"] and agg["corrected"] is not None
        else None
    )
    agg["gain_vs_hw"] = (
        improvement_percent(agg["hardware"], agg["corrected_hw"])
        if agg["hardware"] and agg["corrected_hw"] is not None
        else None
    )
    return agg


def evaluate(
    params: ModelParams,
    model_cfg: ModelConfig,
    samples: Sequence[TrainingSample],
    baselines: Sequence[str] = ("noisy", "zne", "hardware"),
) -> EvalReport:
    """MAE of every requested baseline and of the corrector, with aggregates.

    Per sample, MAE is mean |field - classical|.  The corrector is evaluated
    on the simulated noisy input, and additionally on the hardware field
    (``corrected_hw``) when one is recorded.
    """
    rows: List[Dict[str, Optional[float]]] = []
    for sample in samples:
        prep = prepare_sample(sample, model_cfg)
        target = prep.target

        def mae(values: Optional[np.ndarray]) -> Optional[float]:
            if values is None:
                return None
            return float(np.mean(np.abs(values - target)))

        out, _ = forward_prepared(params, prep.graph, model_cfg)
        row: Dict[str, Optional[float]] = {
            "n_grid": float(prep.n_grid),
            "nu": prep.nu,
            "corrected": mae(out),
            "noisy": mae(prep.noisy_field) if "noisy" in baselines else None,
            "zne": mae(prep.zne_field) if "zne" in baselines else None,
            "hardware": mae(prep.hardware_field) if "hardware" in baselines else None,
            "corrected_hw": None,
        }
        if prep.hardware_field is not None and "hardware" in baselines:
            hw_out, _ = forward_prepared(
                params, _with_input(prep.graph, prep.hardware_field), model_cfg
            )
            row["corrected_hw"] = mae(hw_out)
        rows.append(row)

    by_dimension = {
        dim: _aggregate([r for r in rows if r["n_grid"] == dim])
        for dim in sorted({int(r["n_grid"]) for r in rows})
    }
    by_viscosity: Dict[str, Dict[str, Optional[float]]] = {}
    small = [r for r in rows if r["nu"] is not None and r["nu"] <= SMALL_NU_MAX]
    large = [r for r in rows if r["nu"] is not None and r["nu"] >= LARGE_NU_MIN]
    if small:
        by_viscosity["small"] = _aggregate(small)
    if large:
        by_viscosity["large"] = _aggregate(large)
    return EvalReport(per_sample=rows, by_dimension=by_dimension, by_viscosity=by_viscosity)


def write_history_csv(history: Sequence[Dict[str, float]], path: str) -> None:
    lines = ["epoch,train_loss,val_loss,val_mae,lr"]
    for row in history:
        lines.append(
            f"{int(row['epoch'])},{row['train_loss']!r},{row['val_loss']!r},"
            f"{row['val_mae']!r},{row['lr']!r}"
        )
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")


def save_checkpoint(params: ModelParams, cfg: ModelConfig, path: str) -> None:
    """Versioned JSON container: config plus named flat tensors with shapes."""
    tensors = {
        name: {"shape": list(value.shape), "data": value.ravel().tolist()}
        for name, value in params.items()
    }
    document = {
        "version": CHECKPOINT_VERSION,
        "config": {
            "out_dim": cfg.out_dim,
            "num_gat_layers": cfg.num_gat_layers,
            "attention_heads": cfg.attention_heads,
            "hidden_dim": cfg.hidden_dim,
            "mlp_hidden": cfg.mlp_hidden,
            "use_lightcone_masks": cfg.use_lightcone_masks,
            "node_feature_dim": cfg.node_feature_dim,
            "global_feature_dim": cfg.global_feature_dim,
        },
        "tensors": tensors,
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(document, handle, indent=1)
        handle.write("\n")


def load_checkpoint(path: str) -> Tuple[ModelParams, ModelConfig]:
    with open(path, "r", encoding="utf-8") as handle:
        document = json.load(handle)
    version = document.get("version")
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version!r}")
    cfg = ModelConfig(**document["config"])
    params: ModelParams = {}
    for name, blob in document["tensors"].items():
        shape = tuple(blob["shape"])
        data = blob["data"]
        if len(data) != math.prod(shape):
            raise ValueError(
                f"tensor {name!r} has {len(data)} values for shape {shape}"
            )
        params[name] = np.asarray(data, dtype=float).reshape(shape)
    expected = param_shapes(cfg)
    if set(params) != set(expected):
        raise ValueError("checkpoint tensors do not match the configured model")
    for name, shape in expected.items():
        if params[name].shape != shape:
            raise ValueError(
                f"tensor {name!r} has shape {params[name].shape}, expected {shape}"
            )
    return params, cfg
