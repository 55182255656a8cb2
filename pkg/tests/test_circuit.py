"""Circuit IR, Trotter construction, metrics, and text round-trips."""

import hashlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qburgers.circuit import (
    RXX,
    Barrier,
    CircuitParseError,
    Initialize,
    MeasureAll,
    QuantumCircuit,
    build_trotter_circuit,
    circuit_metrics,
    embed_state,
    make_trotter_plan,
    parse_circuit,
    serialize_circuit,
)
from qburgers.params import ExperimentParams
from qburgers.pde_core import ColeHopfField, build_grid, cole_hopf_initial, initial_velocity

from _oracles import random_circuit


def make_phi(n, nu=0.1, u_left=1.0):
    grid = build_grid(n)
    return cole_hopf_initial(grid, initial_velocity(grid, u_left, 0.0), nu)


class TestInstructionValidation:
    def test_initialize_requires_unit_norm(self):
        with pytest.raises(ValueError):
            Initialize(amplitudes=(0.5, 0.5))

    def test_initialize_requires_power_of_two(self):
        v = 1.0 / np.sqrt(3.0)
        with pytest.raises(ValueError):
            Initialize(amplitudes=(v, v, v))

    def test_rxx_qubits_distinct(self):
        with pytest.raises(ValueError):
            RXX(qubit_a=1, qubit_b=1, theta=0.1)

    def test_initialize_must_be_first(self):
        init = Initialize(amplitudes=(1.0, 0.0, 0.0, 0.0))
        with pytest.raises(ValueError):
            QuantumCircuit(
                n_qubits=2,
                instructions=(RXX(0, 1, 0.1), init),
                name="bad",
            )

    def test_measure_must_be_last(self):
        with pytest.raises(ValueError):
            QuantumCircuit(
                n_qubits=2,
                instructions=(MeasureAll(), RXX(0, 1, 0.1)),
                name="bad",
            )

    def test_qubit_out_of_range(self):
        with pytest.raises(ValueError):
            QuantumCircuit(n_qubits=2, instructions=(RXX(0, 2, 0.1),), name="bad")

    def test_name_whitespace_rejected(self):
        with pytest.raises(ValueError):
            QuantumCircuit(n_qubits=2, instructions=(), name="has space")


class TestTrotterPlan:
    def test_reference_angle(self):
        params = ExperimentParams(nu=0.1, dt=1e-3, n_grid=16, u_left=1.0)
        plan = make_trotter_plan(params, 0.01, 1)
        assert plan.theta == pytest.approx(0.045, abs=1e-15)
        assert plan.alpha == pytest.approx(22.5, abs=1e-12)

    def test_step_count_floor(self):
        params = ExperimentParams(nu=0.1, dt=0.002, n_grid=16, u_left=1.0)
        assert make_trotter_plan(params, 0.01, 1).steps_m == 5

    def test_zero_time_clamps_to_one_block(self):
        params = ExperimentParams(nu=0.1, dt=1e-3, n_grid=16, u_left=1.0)
        assert make_trotter_plan(params, 0.0, 1).steps_m == 1

    @given(
        st.floats(min_value=0.01, max_value=0.2),
        st.floats(min_value=5e-4, max_value=2e-3),
        st.sampled_from([8, 16, 32, 64]),
    )
    @settings(max_examples=50)
    def test_theta_linear_in_nu_and_dt(self, nu, dt, n):
        params = ExperimentParams(nu=nu, dt=dt, n_grid=n, u_left=1.0)
        doubled = ExperimentParams(nu=2 * nu, dt=dt, n_grid=n, u_left=1.0)
        t1 = make_trotter_plan(params, 0.0, 1).theta
        t2 = make_trotter_plan(doubled, 0.0, 1).theta
        assert t2 == pytest.approx(2 * t1, rel=1e-12)
        # quadratic in (N-1): theta proportional to (N-1)^2
        assert t1 == pytest.approx(2 * nu * dt * (n - 1) ** 2, rel=1e-12)


class TestEmbedState:
    def test_qubit_counts(self):
        assert embed_state(make_phi(8))[0] == 3
        assert embed_state(make_phi(64))[0] == 6

    def test_padding_layout(self):
        phi = ColeHopfField(phi=np.array([0.6, 0.8, 0.0]))
        n, amps = embed_state(phi)
        assert n == 2
        np.testing.assert_allclose(amps, [0.6, 0.8, 0.0, 0.0], atol=1e-15)

    def test_unit_norm(self):
        for n in (8, 16, 32, 64):
            _, amps = embed_state(make_phi(n))
            assert abs(np.linalg.norm(amps) - 1.0) < 1e-12


class TestBuildTrotterCircuit:
    def test_structure_and_gate_order(self):
        params = ExperimentParams(nu=0.1, dt=1e-3, n_grid=8, u_left=1.0)
        circ = build_trotter_circuit(params, 0.002, 2, make_phi(8))
        assert isinstance(circ.instructions[0], Initialize)
        assert isinstance(circ.instructions[-2], Barrier)
        assert isinstance(circ.instructions[-1], MeasureAll)
        gates = [i for i in circ.instructions if isinstance(i, RXX)]
        # M=2 blocks x 2 pairs x s=2 reps; ascending pairs, reps consecutive
        pairs = [(g.qubit_a, g.qubit_b) for g in gates]
        assert pairs == [(0, 1), (0, 1), (1, 2), (1, 2)] * 2
        theta = make_trotter_plan(params, 0.002, 2).theta
        assert all(g.theta == theta for g in gates)

    def test_gate_count_formula(self):
        # (n-1)*M*s for (n=3, M=1, s=1) and (n=4, M=5, s=3)
        small = ExperimentParams(nu=0.1, dt=1e-3, n_grid=8, u_left=1.0)
        metrics = circuit_metrics(build_trotter_circuit(small, 0.0, 1, make_phi(8)))
        assert metrics.two_qubit_gate_count == 2

        larger = ExperimentParams(nu=0.1, dt=0.002, n_grid=16, u_left=1.0)
        circ = build_trotter_circuit(larger, 0.01, 3, make_phi(16))
        assert circuit_metrics(circ).two_qubit_gate_count == 45

    @given(
        st.sampled_from([8, 16, 32]),
        st.integers(min_value=1, max_value=3),
        st.integers(min_value=0, max_value=10),
    )
    @settings(max_examples=30, deadline=None)
    def test_gate_count_property(self, n_grid, scale, steps):
        params = ExperimentParams(nu=0.1, dt=1e-3, n_grid=n_grid, u_left=1.0)
        t = steps * params.dt
        circ = build_trotter_circuit(params, t, scale, make_phi(n_grid))
        n, m = circ.n_qubits, max(1, steps)
        assert circuit_metrics(circ).two_qubit_gate_count == (n - 1) * m * scale

    def test_fold_alternates_angle_sign(self):
        params = ExperimentParams(nu=0.1, dt=1e-3, n_grid=8, u_left=1.0)
        circ = build_trotter_circuit(params, 0.0, 3, make_phi(8), fold=True)
        thetas = [g.theta for g in circ.instructions if isinstance(g, RXX)]
        base = make_trotter_plan(params, 0.0, 3).theta
        assert thetas[:3] == [base, -base, base]

    def test_default_name_tags_run(self):
        params = ExperimentParams(nu=0.1, dt=1e-3, n_grid=8, u_left=1.0)
        circ = build_trotter_circuit(params, 0.005, 3, make_phi(8))
        assert circ.name == "trotter_nu0.1_dt0.001_N8_uL1_t0.005_s3"


class TestCircuitMetrics:
    def test_empty_gate_list(self):
        init = Initialize(amplitudes=(1.0, 0.0, 0.0, 0.0))
        circ = QuantumCircuit(n_qubits=2, instructions=(init, MeasureAll()), name="empty")
        metrics = circuit_metrics(circ)
        assert metrics.depth == 0
        assert metrics.two_qubit_gate_count == 0

    def test_parallel_gates_share_depth(self):
        init = Initialize(amplitudes=tuple([0.5] * 4 + [0.0] * 12))
        circ = QuantumCircuit(
            n_qubits=4,
            instructions=(init, RXX(0, 1, 0.1), RXX(2, 3, 0.1), RXX(1, 2, 0.1)),
            name="layers",
        )
        metrics = circuit_metrics(circ)
        assert metrics.depth == 2
        assert metrics.two_qubit_gate_count == 3


class TestSerializeParse:
    def test_round_trip_structural_equality(self):
        params = ExperimentParams(nu=0.1, dt=1e-3, n_grid=8, u_left=1.0)
        circ = build_trotter_circuit(params, 0.002, 1, make_phi(8))
        again = parse_circuit(serialize_circuit(circ))
        assert again == circ

    @given(st.integers(min_value=0, max_value=2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_round_trip_random_circuits(self, seed):
        circ = random_circuit(np.random.default_rng(seed), n_max=5, max_gates=8)
        assert parse_circuit(serialize_circuit(circ)) == circ

    def test_serialization_deterministic(self):
        params = ExperimentParams(nu=0.1, dt=1e-3, n_grid=16, u_left=2.0)
        one = serialize_circuit(build_trotter_circuit(params, 0.01, 1, make_phi(16)))
        two = serialize_circuit(build_trotter_circuit(params, 0.01, 1, make_phi(16)))
        digest = hashlib.sha256(one.encode()).hexdigest()
        assert digest == hashlib.sha256(two.encode()).hexdigest()

    def test_tampered_qubit_index_rejected(self):
        params = ExperimentParams(nu=0.1, dt=1e-3, n_grid=8, u_left=1.0)
        text = serialize_circuit(build_trotter_circuit(params, 0.0, 1, make_phi(8)))
        bad = text.replace("rxx 0 1 ", "rxx 0 7 ", 1)
        with pytest.raises(CircuitParseError):
            parse_circuit(bad)

    def test_unknown_opcode_rejected(self):
        with pytest.raises(CircuitParseError):
            parse_circuit("qcirc v1\nname x\nqubits 1\nhadamard 0\n")

    def test_bad_header_rejected(self):
        with pytest.raises(CircuitParseError):
            parse_circuit("qcirc v2\nname x\nqubits 1\n")

    def test_denormalized_init_rejected(self):
        text = "qcirc v1\nname x\nqubits 1\ninit 0.5 0.5\n"
        with pytest.raises(CircuitParseError):
            parse_circuit(text)

    def test_ordering_invariants_enforced_after_parse(self):
        # measure_all followed by a gate violates the IR contract
        text = "qcirc v1\nname x\nqubits 2\nmeasure_all\nrxx 0 1 0.1\n"
        with pytest.raises((CircuitParseError, ValueError)):
            parse_circuit(text)
