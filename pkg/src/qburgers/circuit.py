"""Quantum-circuit IR, amplitude embedding, and Trotterized R_XX builders.

Circuits here are deliberately minimal: an optional state preparation, a
chain of two-qubit R_XX rotations, a barrier, and a terminal measurement of
all qubits.  Bit convention is big-endian throughout — qubit 0 is the most
significant bit of a basis index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Tuple, Union

import numpy as np

from .params import ExperimentParams
from .pde_core import ColeHopfField

_INIT_NORM_TOL = 1e-10
_PARSE_NORM_TOL = 1e-8


@dataclass(frozen=True)
class Initialize:
    """State preparation; amplitudes must have unit Euclidean norm."""

    amplitudes: Tuple[float, ...]

    def __post_init__(self) -> None:
        amps = tuple(float(a) for a in self.amplitudes)
        object.__setattr__(self, "amplitudes", amps)
        n = len(amps)
        if n == 0 or n & (n - 1):
            raise ValueError(f"amplitude count must be a power of two, got {n}")
        norm = math.sqrt(sum(a * a for a in amps))
        if abs(norm - 1.0) > _INIT_NORM_TOL:
            raise ValueError(f"initial amplitudes are not normalized: |norm-1|={abs(norm - 1.0):.3e}")


@dataclass(frozen=True)
class RXX:
    """Two-qubit rotation exp(-i theta/2 X(x)X) on a pair of distinct wires."""

    qubit_a: int
    qubit_b: int
    theta: float

    def __post_init__(self) -> None:
        if self.qubit_a == self.qubit_b:
            raise ValueError("rxx qubits must be distinct")


@dataclass(frozen=True)
class Barrier:
    pass


@dataclass(frozen=True)
class MeasureAll:
    pass


Instruction = Union[Initialize, RXX, Barrier, MeasureAll]


@dataclass(frozen=True)
class QuantumCircuit:
    n_qubits: int
    instructions: Tuple[Instruction, ...]
    name: str = "circuit"

    def __post_init__(self) -> None:
        object.__setattr__(self, "instructions", tuple(self.instructions))
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")
        if any(ch.isspace() for ch in self.name) or not self.name:
            raise ValueError("circuit name must be nonempty with no whitespace")
        for pos, ins in enumerate(self.instructions):
            if isinstance(ins, Initialize):
                if pos != 0:
                    raise ValueError("Initialize must be the first instruction")
                if len(ins.amplitudes) != 2**self.n_qubits:
                    raise ValueError(
                        f"Initialize carries {len(ins.amplitudes)} amplitudes "
                        f"for {self.n_qubits} qubits"
                    )
            elif isinstance(ins, RXX):
                for q in (ins.qubit_a, ins.qubit_b):
                    if not 0 <= q < self.n_qubits:
                        raise ValueError(f"qubit index {q} out of range [0, {self.n_qubits})")
            elif isinstance(ins, MeasureAll):
                if pos != len(self.instructions) - 1:
                    raise ValueError("MeasureAll must be the last instruction")


@dataclass(frozen=True)
class TrotterPlan:
    """Resolved Trotterization parameters for one (params, t, scale) choice.

    theta = 2*nu*dt/dx^2 is the per-step rotation angle; alpha = nu/dx^2 is
    the nearest-neighbour coupling it realizes over one dt.
    """

    theta: float
    steps_m: int
    scale_s: int
    alpha: float

    def __post_init__(self) -> None:
        if self.steps_m < 1:
            raise ValueError("steps_m must be >= 1")
        if self.scale_s < 1:
            raise ValueError("scale_s must be >= 1")


@dataclass(frozen=True)
class CircuitMetrics:
    depth: int
    two_qubit_gate_count: int


def make_trotter_plan(params: ExperimentParams, t: float, scale_s: int) -> TrotterPlan:
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    dx = 1.0 / (params.n_grid - 1)
    theta = 2.0 * params.nu * params.dt / dx**2
    steps_m = max(1, math.floor(t / params.dt))
    return TrotterPlan(theta=theta, steps_m=steps_m, scale_s=scale_s, alpha=params.nu / dx**2)


def embed_state(phi: ColeHopfField) -> Tuple[int, np.ndarray]:
    """Amplitude-encode a length-N field into n = ceil(log2 N) qubits.

    Entries beyond N are zero-padded; the padded vector is renormalized so
    downstream state preparation sees an exactly unit-norm vector.
    """
    values = np.asarray(phi.phi, dtype=float)
    n_points = values.shape[0]
    n_qubits = max(1, math.ceil(math.log2(n_points)))
    amplitudes = np.zeros(2**n_qubits)
    amplitudes[:n_points] = values
    norm = np.linalg.norm(amplitudes)
    if norm == 0.0:
        raise ValueError("cannot embed an all-zero field")
    return n_qubits, amplitudes / norm


def build_trotter_circuit(
    params: ExperimentParams,
    t: float,
    scale_s: int,
    phi0: ColeHopfField,
    fold: bool = False,
    name: str | None = None,
) -> QuantumCircuit:
    """Assemble the Trotterized evolution circuit at noise scale ``scale_s``.

    Each of the M Trotter blocks walks the nearest-neighbour chain in
    ascending wire order and emits RXX(i, i+1, theta) ``scale_s`` times
    consecutively.  With ``fold=True`` the repetitions alternate the sign of
    theta (gate/inverse folding), which preserves the ideal evolution for odd
    scales; plain repetition is the default.
    """
    plan = make_trotter_plan(params, t, scale_s)
    n_qubits, amplitudes = embed_state(phi0)
    instructions: List[Instruction] = [Initialize(tuple(amplitudes))]
    for _ in range(plan.steps_m):
        for i in range(n_qubits - 1):
            for rep in range(plan.scale_s):
                theta = -plan.theta if (fold and rep % 2 == 1) else plan.theta
                instructions.append(RXX(i, i + 1, theta))
    instructions.append(Barrier())
    instructions.append(MeasureAll())
    if name is None:
        name = f"trotter_{params.tag()}_t{t:g}_s{scale_s}"
    return QuantumCircuit(n_qubits=n_qubits, instructions=tuple(instructions), name=name)


def circuit_metrics(circuit: QuantumCircuit) -> CircuitMetrics:
    """Depth = longest per-wire chain of RXX gates; count = number of RXX."""
    frontier = [0] * circuit.n_qubits
    count = 0
    for ins in circuit.instructions:
        if isinstance(ins, RXX):
            count += 1
            level = max(frontier[ins.qubit_a], frontier[ins.qubit_b]) + 1
            frontier[ins.qubit_a] = frontier[ins.qubit_b] = level
    return CircuitMetrics(depth=max(frontier) if frontier else 0, two_qubit_gate_count=count)


def serialize_circuit(circuit: QuantumCircuit) -> str:
    """Render the line-oriented text form (one instruction per line, LF)."""
    lines = ["qcirc v1", f"name {circuit.name}", f"qubits {circuit.n_qubits}"]
    for ins in circuit.instructions:
        if isinstance(ins, Initialize):
            lines.append("init " + " ".join(f"{a:.17g}" for a in ins.amplitudes))
        elif isinstance(ins, RXX):
            lines.append(f"rxx {ins.qubit_a} {ins.qubit_b} {ins.theta:.17g}")
        elif isinstance(ins, Barrier):
            lines.append("barrier")
        elif isinstance(ins, MeasureAll):
            lines.append("measure_all")
        else:
            raise TypeError(f"unknown instruction {ins!r}")
    return "\n".join(lines) + "\n"


class CircuitParseError(ValueError):
    pass


def _parse_int(token: str, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise CircuitParseError(f"malformed {what}: {token!r}") from None


def _parse_float(token: str, what: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise CircuitParseError(f"malformed {what}: {token!r}") from None


def parse_circuit(text: str) -> QuantumCircuit:
    """Inverse of serialize_circuit; validates structure while reading.

    Rejects unknown opcodes, out-of-range qubit indices, and init lines whose
    norm deviates from 1 by more than 1e-8.
    """
    lines = [ln for ln in text.split("\n") if ln.strip()]
    if not lines or lines[0].strip() != "qcirc v1":
        raise CircuitParseError("missing 'qcirc v1' header")
    if len(lines) < 3:
        raise CircuitParseError("truncated header")
    name_parts = lines[1].split()
    if len(name_parts) != 2 or name_parts[0] != "name":
        raise CircuitParseError(f"bad name line: {lines[1]!r}")
    qubit_parts = lines[2].split()
    if len(qubit_parts) != 2 or qubit_parts[0] != "qubits":
        raise CircuitParseError(f"bad qubits line: {lines[2]!r}")
    n_qubits = _parse_int(qubit_parts[1], "qubit count")
    if n_qubits < 1:
        raise CircuitParseError(f"qubit count must be >= 1, got {n_qubits}")

    instructions: List[Instruction] = []
    for raw in lines[3:]:
        tokens = raw.split()
        op = tokens[0]
        if op == "init":
            amps = [_parse_float(tok, "amplitude") for tok in tokens[1:]]
            if len(amps) != 2**n_qubits:
                raise CircuitParseError(
                    f"init expects {2**n_qubits} amplitudes, got {len(amps)}"
                )
            norm = math.sqrt(sum(a * a for a in amps))
            if abs(norm - 1.0) > _PARSE_NORM_TOL:
                raise CircuitParseError(f"init amplitudes not normalized: norm={norm!r}")
            if abs(norm - 1.0) > _INIT_NORM_TOL:
                amps = [a / norm for a in amps]
            instructions.append(Initialize(tuple(amps)))
        elif op == "rxx":
            if len(tokens) != 4:
                raise CircuitParseError(f"bad rxx line: {raw!r}")
            qa = _parse_int(tokens[1], "qubit index")
            qb = _parse_int(tokens[2], "qubit index")
            theta = _parse_float(tokens[3], "angle")
            for q in (qa, qb):
                if not 0 <= q < n_qubits:
                    raise CircuitParseError(f"qubit index {q} out of range [0, {n_qubits})")
            instructions.append(RXX(qa, qb, theta))
        elif op == "barrier":
            instructions.append(Barrier())
        elif op == "measure_all":
            instructions.append(MeasureAll())
        else:
            raise CircuitParseError(f"unknown opcode {op!r}")
    try:
        return QuantumCircuit(
            n_qubits=n_qubits, instructions=tuple(instructions), name=name_parts[1]
        )
    except ValueError as exc:
        raise CircuitParseError(str(exc)) from None
