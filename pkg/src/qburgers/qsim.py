"""Density-matrix circuit simulation, seeded shot sampling, field recovery.

States use the big-endian bit convention: qubit 0 is the most significant
bit of a basis index, so basis index k corresponds to the bitstring
``format(k, f"0{n}b")``.  Probabilities are exact (density-matrix evolution);
the only randomness is the seeded multinomial shot draw, which keeps every
downstream artifact reproducible from its seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from .circuit import Initialize, MeasureAll, QuantumCircuit, RXX
from .params import ExperimentParams
from .pde_core import DEFAULT_EPSILON, Grid, VelocityField, reconstruct_velocity

_MAX_DENSITY_QUBITS = 10  # 2^10 x 2^10 complex matrix is the desk-scale bound
_HERMITICITY_TOL = 1e-10
_TRACE_TOL = 1e-10
_EIGENVALUE_FLOOR = -1e-9


@dataclass(frozen=True)
class NoiseModel:
    """Parametric depolarizing + symmetric readout noise.

    p1 applies after single-qubit gates; the Trotter chain contains none, so
    it participates only as metadata (e.g. graph features).  p2 is the
    two-qubit depolarizing probability applied after every RXX, and the
    readout pair defines the per-bit confusion matrix.
    """

    p1: float = 0.001
    p2: float = 0.01
    readout_p01: float = 0.02
    readout_p10: float = 0.02

    def __post_init__(self) -> None:
        for label in ("p1", "p2", "readout_p01", "readout_p10"):
            value = getattr(self, label)
            if not 0.0 <= value <= 0.5:
                raise ValueError(f"{label} must lie in [0, 0.5], got {value}")


@dataclass(frozen=True)
class ShotResult:
    counts: Dict[str, int]
    shots: int
    seed: int
    flags: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.shots < 1:
            raise ValueError(f"shots must be >= 1, got {self.shots}")
        if any(c < 0 for c in self.counts.values()):
            raise ValueError("counts must be nonnegative")
        total = sum(self.counts.values())
        if total != self.shots:
            raise ValueError(f"counts sum to {total}, expected {self.shots}")


@dataclass(frozen=True)
class DensityMatrix:
    dim: int
    entries: np.ndarray

    def __post_init__(self) -> None:
        mat = np.asarray(self.entries, dtype=complex)
        if mat.shape != (self.dim, self.dim):
            raise ValueError(f"entries shape {mat.shape} does not match dim {self.dim}")
        if np.max(np.abs(mat - mat.conj().T)) > _HERMITICITY_TOL:
            raise ValueError("density matrix is not Hermitian")
        trace = np.trace(mat).real
        if abs(trace - 1.0) > _TRACE_TOL:
            raise ValueError(f"density matrix trace {trace!r} != 1")
        eigenvalues = np.linalg.eigvalsh(mat)
        if eigenvalues.min() < _EIGENVALUE_FLOOR:
            raise ValueError(f"density matrix has negative eigenvalue {eigenvalues.min():.3e}")
        object.__setattr__(self, "entries", mat)


def _rxx_unitary(theta: float) -> np.ndarray:
    """4x4 matrix of exp(-i theta/2 X(x)X) in the (00,01,10,11) basis."""
    c = math.cos(theta / 2.0)
    s = math.sin(theta / 2.0)
    return np.array(
        [
            [c, 0, 0, -1j * s],
            [0, c, -1j * s, 0],
            [0, -1j * s, c, 0],
            [-1j * s, 0, 0, c],
        ],
        dtype=complex,
    )


def _initial_state(circuit: QuantumCircuit) -> np.ndarray:
    if not circuit.instructions or not isinstance(circuit.instructions[0], Initialize):
        raise ValueError("circuit must start with an Initialize instruction")
    return np.asarray(circuit.instructions[0].amplitudes, dtype=complex)


def simulate_statevector(circuit: QuantumCircuit) -> np.ndarray:
    """Noiseless evolution; measurement instructions are ignored."""
    n = circuit.n_qubits
    psi = _initial_state(circuit).reshape((2,) * n)
    for ins in circuit.instructions[1:]:
        if not isinstance(ins, RXX):
            continue
        gate = _rxx_unitary(ins.theta).reshape(2, 2, 2, 2)
        # Contract gate output indices against the pair's state axes, then
        # restore axis order (tensordot appends contracted axes at the front).
        psi = np.tensordot(gate, psi, axes=([2, 3], [ins.qubit_a, ins.qubit_b]))
        psi = np.moveaxis(psi, [0, 1], [ins.qubit_a, ins.qubit_b])
    return psi.reshape(-1)


def _apply_pair_matrix(
    tensor: np.ndarray, mat4: np.ndarray, axis_a: int, axis_b: int
) -> np.ndarray:
    """Multiply a (2,)*2n tensor by a 4x4 matrix along two of its axes."""
    moved = np.moveaxis(tensor, (axis_a, axis_b), (0, 1))
    shape = moved.shape
    flat = mat4 @ moved.reshape(4, -1)
    return np.moveaxis(flat.reshape(shape), (0, 1), (axis_a, axis_b))


def _depolarize_pair(tensor: np.ndarray, qubit_a: int, qubit_b: int, n: int, p2: float) -> np.ndarray:
    """rho -> (1-p2) rho + p2 (Tr_pair rho) (x) I/4 on one qubit pair."""
    if p2 == 0.0:
        return tensor
    moved = np.moveaxis(tensor, (qubit_a, qubit_b, n + qubit_a, n + qubit_b), (0, 1, 2, 3))
    reduced = np.einsum("ijij...->...", moved)
    mixed = np.zeros_like(moved)
    for i in range(2):
        for j in range(2):
            mixed[i, j, i, j] = reduced / 4.0
    out = (1.0 - p2) * moved + p2 * mixed
    return np.moveaxis(out, (0, 1, 2, 3), (qubit_a, qubit_b, n + qubit_a, n + qubit_b))


def simulate_noisy(circuit: QuantumCircuit, noise: NoiseModel) -> DensityMatrix:
    """Density-matrix evolution: each RXX is a unitary conjugation followed by
    a two-qubit depolarizing channel of strength p2."""
    n = circuit.n_qubits
    if n > _MAX_DENSITY_QUBITS:
        raise ValueError(
            f"density-matrix simulation limited to {_MAX_DENSITY_QUBITS} qubits, got {n}"
        )
    psi = _initial_state(circuit)
    rho = np.outer(psi, psi.conj()).reshape((2,) * (2 * n))
    for ins in circuit.instructions[1:]:
        if not isinstance(ins, RXX):
            continue
        gate = _rxx_unitary(ins.theta)
        rho = _apply_pair_matrix(rho, gate, ins.qubit_a, ins.qubit_b)
        rho = _apply_pair_matrix(rho, gate.conj(), n + ins.qubit_a, n + ins.qubit_b)
        rho = _depolarize_pair(rho, ins.qubit_a, ins.qubit_b, n, noise.p2)
    dim = 2**n
    return DensityMatrix(dim=dim, entries=rho.reshape(dim, dim))


def _readout_confusion(probabilities: np.ndarray, n: int, noise: NoiseModel) -> np.ndarray:
    """Apply the per-bit confusion matrix [[1-p01, p10], [p01, 1-p10]]."""
    if noise.readout_p01 == 0.0 and noise.readout_p10 == 0.0:
        return probabilities
    confusion = np.array(
        [
            [1.0 - noise.readout_p01, noise.readout_p10],
            [noise.readout_p01, 1.0 - noise.readout_p10],
        ]
    )
    tensor = probabilities.reshape((2,) * n)
    for axis in range(n):
        moved = np.moveaxis(tensor, axis, 0)
        mixed = confusion @ moved.reshape(2, -1)
        tensor = np.moveaxis(mixed.reshape(moved.shape), 0, axis)
    return tensor.reshape(-1)


def sample_counts(
    rho: DensityMatrix, shots: int, noise: NoiseModel, seed: int
) -> ShotResult:
    """Multinomial draw from the readout-degraded diagonal of rho."""
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    n = int(round(math.log2(rho.dim)))
    probabilities = np.clip(np.diag(rho.entries).real, 0.0, None)
    probabilities = probabilities / probabilities.sum()
    probabilities = _readout_confusion(probabilities, n, noise)
    probabilities = np.clip(probabilities, 0.0, None)
    probabilities = probabilities / probabilities.sum()
    rng = np.random.default_rng(seed)
    draws = rng.multinomial(shots, probabilities)
    counts = {
        format(k, f"0{n}b"): int(c) for k, c in enumerate(draws) if c > 0
    }
    return ShotResult(counts=counts, shots=shots, seed=int(seed))


def _infer_n_qubits(result: ShotResult) -> int:
    widths = {len(key) for key in result.counts}
    if not widths:
        raise ValueError("empty support: no counts recorded")
    if len(widths) != 1:
        raise ValueError(f"inconsistent bitstring widths in counts: {sorted(widths)}")
    return widths.pop()


def counts_to_amplitudes(result: ShotResult, n_grid: int) -> np.ndarray:
    """psi_k = sqrt(counts(b_k) / shots) over the first n_grid basis states,
    renormalized over those entries; keys are big-endian bitstrings."""
    n = _infer_n_qubits(result)
    if n_grid > 2**n:
        raise ValueError(f"n_grid={n_grid} exceeds 2^{n} basis states")
    amplitudes = np.zeros(n_grid)
    for k in range(n_grid):
        count = result.counts.get(format(k, f"0{n}b"), 0)
        amplitudes[k] = math.sqrt(count / result.shots)
    norm = np.linalg.norm(amplitudes)
    if norm == 0.0:
        raise ValueError("empty support: no counts landed in the first n_grid bins")
    return amplitudes / norm


def quantum_velocity(
    result: ShotResult,
    params: ExperimentParams,
    grid: Grid,
    epsilon: float = DEFAULT_EPSILON,
) -> VelocityField:
    """Counts -> amplitude vector -> centred-difference velocity field."""
    psi = counts_to_amplitudes(result, grid.n_points)
    return reconstruct_velocity(
        psi, params.nu, grid, params.u_left, params.u_right, epsilon
    )


_NEGATIVE_MASS_WARN = 0.1


def import_hardware_counts(path: str, record_key: str) -> ShotResult:
    """Load one record from a hardware-counts JSON file.

    The file maps record keys to objects of either form
    ``{"shots": int, "counts": {bitstring: int}}`` or
    ``{"shots": int, "n_qubits": int, "quasi_dist": {"<int>": real}}``.
    Quasi-probabilities are clipped at zero, renormalized, and converted to
    integer counts summing exactly to shots (largest-remainder rounding).
    Clipped negative mass above 0.1 is reported via the result's flags.
    """
    with open(path, "r", encoding="utf-8") as handle:
        payload = json.load(handle)
    if not isinstance(payload, dict):
        raise ValueError(f"{path}: top level must be a JSON object")
    if record_key not in payload:
        raise KeyError(f"{path}: no record named {record_key!r}")
    record = payload[record_key]
    if not isinstance(record, dict) or "shots" not in record:
        raise ValueError(f"{path}: record {record_key!r} must be an object with 'shots'")
    shots = record["shots"]
    if not isinstance(shots, int) or shots < 1:
        raise ValueError(f"{path}: shots must be a positive integer, got {shots!r}")

    if "counts" in record:
        raw = record["counts"]
        if not isinstance(raw, dict):
            raise ValueError(f"{path}: 'counts' must be an object")
        counts = {}
        for key, value in raw.items():
            if not isinstance(value, int) or value < 0:
                raise ValueError(f"{path}: count for {key!r} must be a nonnegative integer")
            if not key or any(ch not in "01" for ch in key):
                raise ValueError(f"{path}: malformed bitstring key {key!r}")
            counts[key] = value
        return ShotResult(counts=counts, shots=shots, seed=0)

    if "quasi_dist" in record:
        if "n_qubits" not in record:
            raise ValueError(f"{path}: quasi_dist records need an 'n_qubits' field")
        n = record["n_qubits"]
        if not isinstance(n, int) or n < 1:
            raise ValueError(f"{path}: n_qubits must be a positive integer")
        quasi = record["quasi_dist"]
        if not isinstance(quasi, dict):
            raise ValueError(f"{path}: 'quasi_dist' must be an object")
        indices = []
        masses = []
        for key, value in quasi.items():
            k = int(key)
            if not 0 <= k < 2**n:
                raise ValueError(f"{path}: basis index {k} out of range for {n} qubits")
            indices.append(k)
            masses.append(float(value))
        mass = np.array(masses)
        negative_mass = float(-mass[mass < 0].sum())
        flags: Tuple[str, ...] = ()
        if negative_mass > _NEGATIVE_MASS_WARN:
            flags = (f"negative_quasi_mass={negative_mass:.6g}",)
        clipped = np.clip(mass, 0.0, None)
        total = clipped.sum()
        if total == 0.0:
            raise ValueError(f"{path}: quasi distribution has no positive mass")
        probabilities = clipped / total
        scaled = probabilities * shots
        floors = np.floor(scaled).astype(int)
        shortfall = shots - int(floors.sum())
        # Largest-remainder apportionment; ties resolve to lower basis index.
        order = sorted(range(len(scaled)), key=lambda i: (-(scaled[i] - floors[i]), indices[i]))
        for i in order[:shortfall]:
            floors[i] += 1
        counts = {
            format(k, f"0{n}b"): int(c)
            for k, c in sorted(zip(indices, floors), key=lambda kv: kv[0])
        }
        return ShotResult(counts=counts, shots=shots, seed=0, flags=flags)

    raise ValueError(f"{path}: record {record_key!r} has neither 'counts' nor 'quasi_dist'")


def list_hardware_records(path: str) -> Tuple[str, ...]:
    """Record keys available in a hardware-counts file, sorted."""
    with open(path, "r", encoding="utf-8") as handle:
        payload = json.load(handle)
    if not isinstance(payload, dict):
        raise ValueError(f"{path}: top level must be a JSON object")
    return tuple(sorted(payload.keys()))
