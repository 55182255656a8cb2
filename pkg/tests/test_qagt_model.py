"""Attention-corrector model: init, pooling, forward pass, hand gradients."""

import dataclasses

import numpy as np
import pytest

from qburgers.circuit import Initialize, MeasureAll, QuantumCircuit, RXX, circuit_metrics
from qburgers.circuit_graph import circuit_to_dag, compute_lightcones, featurize
from qburgers.params import ExperimentParams
from qburgers.qagt.model import (
    ModelConfig,
    backward_prepared,
    build_pooling,
    forward,
    forward_prepared,
    init_model,
    loss_mse,
    param_shapes,
    prepare_graph,
)
from qburgers.qsim import NoiseModel

SMALL = ModelConfig(
    out_dim=8, num_gat_layers=1, attention_heads=2, hidden_dim=8, mlp_hidden=16
)


def three_qubit_example(theta2=0.2):
    """The two-gate chain on 3 qubits: g1=(0,1), g2=(1,2)."""
    amps = [0.0] * 8
    amps[0] = 1.0
    circ = QuantumCircuit(
        n_qubits=3,
        instructions=(
            Initialize(amplitudes=tuple(amps)),
            RXX(0, 1, 0.1),
            RXX(1, 2, theta2),
            MeasureAll(),
        ),
        name="chain3",
    )
    dag = circuit_to_dag(circ)
    masks = compute_lightcones(dag)
    params = ExperimentParams(nu=0.1, dt=1e-3, n_grid=8, u_left=1.0)
    rng = np.random.default_rng(5)
    feats = featurize(
        dag,
        masks,
        params,
        NoiseModel(),
        circuit_metrics(circ),
        rng.normal(size=8),
        theta=0.045,
        steps_m=5,
        scale_s=1,
    )
    return dag, masks, feats


class TestModelConfig:
    def test_defaults(self):
        cfg = ModelConfig(out_dim=16)
        assert cfg.num_gat_layers == 3
        assert cfg.attention_heads == 4
        assert cfg.hidden_dim == 64
        assert cfg.mlp_hidden == 128
        assert cfg.use_lightcone_masks is True
        assert cfg.head_dim == 16
        assert cfg.mlp_in_dim == 64 + 13 + 16

    def test_out_dim_whitelist(self):
        for bad in (4, 12, 128, 3):
            with pytest.raises(ValueError, match="out_dim"):
                ModelConfig(out_dim=bad)

    def test_heads_must_divide_hidden(self):
        with pytest.raises(ValueError, match="divisible"):
            ModelConfig(out_dim=8, hidden_dim=10, attention_heads=4)

    def test_positive_fields(self):
        with pytest.raises(ValueError, match="positive"):
            ModelConfig(out_dim=8, num_gat_layers=0)


class TestInitModel:
    def test_shapes_small_config(self):
        shapes = param_shapes(SMALL)
        assert shapes == {
            "gat0.weight": (2, 8, 4),
            "gat0.att_src": (2, 4),
            "gat0.att_dst": (2, 4),
            "gat0.bias": (8,),
            "mlp.w1": (16, 8 + 13 + 8),
            "mlp.b1": (16,),
            "mlp.w2": (8, 16),
            "mlp.b2": (8,),
        }

    def test_deterministic_per_seed(self):
        a = init_model(SMALL, 7)
        b = init_model(SMALL, 7)
        c = init_model(SMALL, 8)
        for name in a:
            np.testing.assert_array_equal(a[name], b[name])
        assert any(not np.array_equal(a[name], c[name]) for name in a if "weight" in name)

    def test_biases_zero_weights_bounded(self):
        params = init_model(SMALL, 3)
        for name, value in params.items():
            assert np.all(np.isfinite(value))
            if name.endswith(("bias", "b1", "b2")):
                assert np.all(value == 0.0)
        w = params["gat0.weight"]
        bound = np.sqrt(6.0 / (8 + 4))
        assert np.all(np.abs(w) <= bound)
        assert np.ptp(w) > 0  # actually random, not constant

    def test_out_dim_changes_only_head_shapes(self):
        small = param_shapes(dataclasses.replace(SMALL, out_dim=8))
        large = param_shapes(dataclasses.replace(SMALL, out_dim=16))
        for name in small:
            if name.startswith("gat"):
                assert small[name] == large[name]
        assert small["mlp.w1"] != large["mlp.w1"]
        assert small["mlp.w2"] != large["mlp.w2"]
        assert small["mlp.b2"] != large["mlp.b2"]


class TestBuildPooling:
    def test_rows_sum_to_one(self):
        dag, masks, _ = three_qubit_example()
        pooling = build_pooling(masks, len(dag.nodes), SMALL)
        assert pooling.shape == (8, len(dag.nodes))
        np.testing.assert_allclose(pooling.sum(axis=1), np.ones(8), atol=1e-12)

    def test_slot_bits_select_mask_unions(self):
        dag, masks, _ = three_qubit_example()
        pooling = build_pooling(masks, len(dag.nodes), SMALL)
        union_all = masks.mask(0) | masks.mask(1) | masks.mask(2)
        # slot 4 = 100 (big-endian) -> qubit 0 only
        expected_4 = sorted(masks.mask(0))
        assert set(np.nonzero(pooling[4])[0]) == set(expected_4)
        np.testing.assert_allclose(
            pooling[4, expected_4], 1.0 / len(expected_4)
        )
        # slot 3 = 011 -> qubits 1 and 2
        expected_3 = sorted(masks.mask(1) | masks.mask(2))
        assert set(np.nonzero(pooling[3])[0]) == set(expected_3)
        # slot 0 has no set bits -> union of every mask
        assert set(np.nonzero(pooling[0])[0]) == set(union_all)

    def test_masks_off_pools_uniformly(self):
        dag, masks, _ = three_qubit_example()
        cfg = dataclasses.replace(SMALL, use_lightcone_masks=False)
        pooling = build_pooling(masks, len(dag.nodes), cfg)
        np.testing.assert_allclose(pooling, 1.0 / len(dag.nodes))


class TestPrepareGraph:
    def test_self_loops_and_ordering(self):
        dag, masks, feats = three_qubit_example()
        graph = prepare_graph(feats, masks, SMALL)
        num_edges = len(dag.edges) + len(dag.nodes)
        assert graph.src.shape == graph.dst.shape == (num_edges,)
        keys = list(zip(graph.dst.tolist(), graph.src.tolist()))
        assert keys == sorted(keys)
        for node in dag.nodes:
            assert (node.id, node.id) in keys

    def test_field_length_mismatch(self):
        _, masks, feats = three_qubit_example()
        bad = dataclasses.replace(feats, noisy_field=np.zeros(5))
        with pytest.raises(ValueError, match="out_dim"):
            prepare_graph(bad, masks, SMALL)

    def test_node_width_mismatch(self):
        _, masks, feats = three_qubit_example()
        bad = dataclasses.replace(
            feats, node_features=np.zeros((feats.node_features.shape[0], 5))
        )
        with pytest.raises(ValueError, match="width"):
            prepare_graph(bad, masks, SMALL)


class TestForward:
    def test_zero_weights_returns_output_bias(self):
        _, masks, feats = three_qubit_example()
        params = {name: np.zeros(shape) for name, shape in param_shapes(SMALL).items()}
        params["mlp.b2"] = np.arange(8.0)
        out = forward(params, feats, masks, SMALL)
        np.testing.assert_array_equal(out, np.arange(8.0))

    def test_attention_rows_sum_to_one(self):
        _, masks, feats = three_qubit_example()
        graph = prepare_graph(feats, masks, SMALL)
        params = init_model(SMALL, 11)
        _, cache = forward_prepared(params, graph, SMALL)
        num_nodes = graph.node_features.shape[0]
        for layer_cache in cache["layers"]:
            alpha = layer_cache["alpha"]
            for head in range(SMALL.attention_heads):
                sums = np.zeros(num_nodes)
                np.add.at(sums, graph.dst, alpha[head])
                np.testing.assert_allclose(sums, np.ones(num_nodes), atol=1e-10)

    def test_masked_slot_ignores_nodes_outside_its_lightcone(self):
        dag, masks, feats = three_qubit_example()
        g2 = next(
            node.id for node in dag.nodes if node.kind == "rxx" and node.qubits == (1, 2)
        )
        assert g2 not in masks.mask(0)
        perturbed_nodes = feats.node_features.copy()
        perturbed_nodes[g2, 5] += 0.5  # nudge the gate-angle feature
        perturbed = dataclasses.replace(feats, node_features=perturbed_nodes)
        params = init_model(SMALL, 13)
        base = forward(params, feats, masks, SMALL)
        moved = forward(params, perturbed, masks, SMALL)
        # slot 4 pools over mask(q0) = {init, g1}: g2 is causally irrelevant
        assert moved[4] == base[4]
        # slot 1 pools over mask(q2), which contains g2
        assert moved[1] != base[1]

    def test_masks_off_breaks_the_invariance(self):
        dag, masks, feats = three_qubit_example()
        g2 = next(
            node.id for node in dag.nodes if node.kind == "rxx" and node.qubits == (1, 2)
        )
        perturbed_nodes = feats.node_features.copy()
        perturbed_nodes[g2, 5] += 0.5
        perturbed = dataclasses.replace(feats, node_features=perturbed_nodes)
        cfg = dataclasses.replace(SMALL, use_lightcone_masks=False)
        params = init_model(cfg, 13)
        assert forward(params, perturbed, masks, cfg)[4] != forward(params, feats, masks, cfg)[4]

    def test_deterministic(self):
        _, masks, feats = three_qubit_example()
        params = init_model(SMALL, 17)
        np.testing.assert_array_equal(
            forward(params, feats, masks, SMALL), forward(params, feats, masks, SMALL)
        )


class TestLossMse:
    def test_zero_at_identity(self):
        x = np.array([0.3, -0.2, 1.0])
        assert loss_mse(x, x) == 0.0

    def test_unit_example(self):
        assert loss_mse(np.array([1.0, 1.0]), np.array([0.0, 0.0])) == 1.0

    def test_paired_permutation_invariance(self):
        rng = np.random.default_rng(3)
        pred = rng.normal(size=10)
        target = rng.normal(size=10)
        perm = rng.permutation(10)
        assert loss_mse(pred, target) == pytest.approx(loss_mse(pred[perm], target[perm]))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape mismatch"):
            loss_mse(np.zeros(3), np.zeros(4))


class TestBackward:
    def setup_method(self):
        _, masks, feats = three_qubit_example()
        self.graph = prepare_graph(feats, masks, SMALL)
        self.params = init_model(SMALL, 23)
        self.target = np.random.default_rng(29).normal(size=8)

    def fd_loss(self, params):
        out, _ = forward_prepared(params, self.graph, SMALL)
        return loss_mse(out, self.target)

    def test_matches_central_differences(self):
        loss, grads = backward_prepared(self.params, self.graph, SMALL, self.target)
        assert loss == pytest.approx(self.fd_loss(self.params))
        rng = np.random.default_rng(31)
        h = 1e-5
        checked = 0
        names = sorted(self.params)
        while checked < 24:
            name = names[rng.integers(len(names))]
            flat_index = int(rng.integers(self.params[name].size))
            bumped = {k: v.copy() for k, v in self.params.items()}
            bumped[name].ravel()[flat_index] += h
            up = self.fd_loss(bumped)
            bumped[name].ravel()[flat_index] -= 2 * h
            down = self.fd_loss(bumped)
            fd = (up - down) / (2 * h)
            an = grads[name].ravel()[flat_index]
            assert abs(an - fd) <= 1e-4 * max(abs(fd), 1e-6), (name, flat_index)
            checked += 1

    def test_zero_loss_gives_zero_gradient(self):
        out, _ = forward_prepared(self.params, self.graph, SMALL)
        loss, grads = backward_prepared(self.params, self.graph, SMALL, out.copy())
        assert loss == 0.0
        for name, grad in grads.items():
            np.testing.assert_array_equal(grad, np.zeros_like(grad))

    def test_gradient_keys_match_params(self):
        _, grads = backward_prepared(self.params, self.graph, SMALL, self.target)
        assert set(grads) == set(self.params)
        for name in grads:
            assert grads[name].shape == self.params[name].shape

    def test_deterministic(self):
        _, g1 = backward_prepared(self.params, self.graph, SMALL, self.target)
        _, g2 = backward_prepared(self.params, self.graph, SMALL, self.target)
        for name in g1:
            np.testing.assert_array_equal(g1[name], g2[name])
