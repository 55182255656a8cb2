"""Estimator-style wrapper around the graph-attention corrector.

The rest of the pipeline keeps its natural functional organization; this
class exposes just the learned component through the familiar
fit/predict/score surface so it can sit inside pipelines and model-selection
tooling that expect that protocol.
"""

from __future__ import annotations

from typing import List, Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from ..dataset import TrainingSample
from .model import ModelConfig, forward_prepared
from .training import TrainConfig, prepare_sample, train


class GraphAttentionCorrector(BaseEstimator):
    """Maps (circuit graph, globals, noisy field) samples to corrected fields.

    ``fit`` consumes TrainingSample lists (targets travel inside the samples,
    so ``y`` is accepted only for protocol compatibility and must be None).
    """

    def __init__(
        self,
        out_dim: int = 16,
        num_gat_layers: int = 3,
        attention_heads: int = 4,
        hidden_dim: int = 64,
        mlp_hidden: int = 128,
        use_lightcone_masks: bool = True,
        epochs: int = 100,
        learning_rate: float = 1e-3,
        lr_schedule: str = "none",
        batch_size: int = 16,
        val_fraction: float = 0.2,
        hardware_mix_ratio: float = 0.0,
        seed: int = 0,
    ):
        self.out_dim = out_dim
        self.num_gat_layers = num_gat_layers
        self.attention_heads = attention_heads
        self.hidden_dim = hidden_dim
        self.mlp_hidden = mlp_hidden
        self.use_lightcone_masks = use_lightcone_masks
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.lr_schedule = lr_schedule
        self.batch_size = batch_size
        self.val_fraction = val_fraction
        self.hardware_mix_ratio = hardware_mix_ratio
        self.seed = seed

    def _model_config(self) -> ModelConfig:
        return ModelConfig(
            out_dim=self.out_dim,
            num_gat_layers=self.num_gat_layers,
            attention_heads=self.attention_heads,
            hidden_dim=self.hidden_dim,
            mlp_hidden=self.mlp_hidden,
            use_lightcone_masks=self.use_lightcone_masks,
        )

    def fit(self, X: Sequence[TrainingSample], y: Optional[object] = None):
        if y is not None:
            raise ValueError("targets are embedded in the samples; pass y=None")
        model_cfg = self._model_config()
        train_cfg = TrainConfig(
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            lr_schedule=self.lr_schedule,
            batch_size=self.batch_size,
            val_fraction=self.val_fraction,
            seed=self.seed,
            hardware_mix_ratio=self.hardware_mix_ratio,
        )
        self.model_params_, self.history_ = train(X, model_cfg, train_cfg)
        self.model_config_ = model_cfg
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "model_params_"):
            raise NotFittedError(
                "this GraphAttentionCorrector instance is not fitted yet; "
                "call fit before predict/score"
            )

    def predict(self, X: Sequence[TrainingSample]) -> np.ndarray:
        """Corrected fields, one row per sample."""
        self._check_fitted()
        rows: List[np.ndarray] = []
        for sample in X:
            prep = prepare_sample(sample, self.model_config_)
            out, _ = forward_prepared(self.model_params_, prep.graph, self.model_config_)
            rows.append(out)
        return np.stack(rows, axis=0)

    def score(self, X: Sequence[TrainingSample], y: Optional[object] = None) -> float:
        """Negative mean squared error against the samples' classical fields."""
        self._check_fitted()
        if y is not None:
            raise ValueError("targets are embedded in the samples; pass y=None")
        preds = self.predict(X)
        targets = np.stack([s.classical_field for s in X], axis=0)
        return -float(np.mean((preds - targets) ** 2))
