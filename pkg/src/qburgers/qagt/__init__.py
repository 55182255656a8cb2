"""Learned error mitigation: graph-attention corrector, training, evaluation."""

from .estimator import GraphAttentionCorrector
from .model import (
    ModelConfig,
    ModelParams,
    PreparedGraph,
    backward_prepared,
    build_pooling,
    forward,
    forward_prepared,
    init_model,
    loss_mse,
    param_shapes,
    prepare_graph,
)
from .training import (
    EvalReport,
    TrainConfig,
    evaluate,
    improvement_percent,
    load_checkpoint,
    prepare_sample,
    save_checkpoint,
    train,
    write_history_csv,
)

__all__ = [
    "GraphAttentionCorrector",
    "ModelConfig",
    "ModelParams",
    "PreparedGraph",
    "EvalReport",
    "TrainConfig",
    "backward_prepared",
    "build_pooling",
    "evaluate",
    "forward",
    "forward_prepared",
    "improvement_percent",
    "init_model",
    "load_checkpoint",
    "loss_mse",
    "param_shapes",
    "prepare_graph",
    "prepare_sample",
    "save_checkpoint",
    "train",
    "write_history_csv",
]
