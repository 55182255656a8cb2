"""Parameter-sweep orchestration and the on-disk experiment format.

One JSON file per parameter combination (named by its tag), with circuit
text files in a sibling ``circuits/`` directory and a manifest of content
hashes written after a sweep.  All floats are serialized with Python's
shortest round-trip repr, so identical inputs produce byte-identical files
whenever the timestamp is pinned.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import logging
import os
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ._seeding import derive_seed
from .circuit import QuantumCircuit, build_trotter_circuit, circuit_metrics, serialize_circuit
from .classical_solver import KrylovConfig, classical_reference
from .mitigation import ZneConfig, run_zne
from .params import ExperimentParams
from .pde_core import VelocityField, build_grid, cole_hopf_initial, initial_velocity, l2_error, reconstruct_velocity
from .qsim import (
    NoiseModel,
    import_hardware_counts,
    quantum_velocity,
    sample_counts,
    simulate_noisy,
    simulate_statevector,
)

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
SCHEMA_TASK = "hybrid quantum-classical viscous flow benchmark records"
RECORD_FIELDS = [
    "time_set_index",
    "time_index",
    "t",
    "grid",
    "params",
    "seeds",
    "circuits",
    "metrics",
    "outputs",
    "noiseless_reconstruction_residual",
    "error",
]

NU_VALUES = (0.01, 0.05, 0.10, 0.15, 0.20)
DT_VALUES = (5e-4, 1e-3, 1.5e-3, 2e-3)
N_VALUES = (8, 16, 32, 64)
UL_VALUES = (1.0, 2.0, 4.0, 6.0)

# Three snapshot schedules over [0, 0.01]; 3 + 5 + 6 = 14 records per combo.
TIME_SETS: Tuple[Tuple[float, ...], ...] = (
    (0.0, 0.005, 0.010),
    (0.0, 0.0025, 0.005, 0.0075, 0.010),
    (0.0, 0.002, 0.004, 0.006, 0.008, 0.010),
)

DEFAULT_SHOTS = 8192


def default_sweep() -> List[ExperimentParams]:
    """All 320 parameter combinations, lexicographic in (nu, dt, N, u_L)."""
    return [
        ExperimentParams(nu=nu, dt=dt, n_grid=n, u_left=ul)
        for nu, dt, n, ul in itertools.product(NU_VALUES, DT_VALUES, N_VALUES, UL_VALUES)
    ]


def _field_list(u: VelocityField) -> List[float]:
    return [float(v) for v in u.values]


def _noiseless_residual(circuit, params: ExperimentParams, grid, u_classical) -> float:
    """Residual of the sign-discarding readout formula on exact probabilities.

    Even without noise, reconstructing amplitudes as sqrt(probability) loses
    phase information, so this residual is generally nonzero; it is recorded
    per record as a floor on what mitigation can recover.
    """
    psi = simulate_statevector(circuit)
    probs = np.abs(psi) ** 2
    amps = np.sqrt(probs[: grid.n_points])
    norm = np.linalg.norm(amps)
    if norm == 0.0:
        raise ValueError("empty support: noiseless state has no mass on the grid bins")
    u_ideal = reconstruct_velocity(
        amps / norm, params.nu, grid, params.u_left, params.u_right
    )
    return l2_error(u_ideal, u_classical, grid)


def run_experiment(
    params: ExperimentParams,
    noise: NoiseModel,
    shots: int,
    base_seed: int,
    enable_zne: bool,
    hardware_import: Optional[str],
    out_dir: str,
    timestamp_override: Optional[str] = None,
    krylov_cfg: KrylovConfig = KrylovConfig(),
    zne_cfg: ZneConfig = ZneConfig(),
) -> Dict:
    """Run one parameter combination over every time set and write its file.

    Per-snapshot quantum failures are recorded in the record's ``error``
    field and the run continues; a classical propagation failure marks every
    record of its time set.  Returns the written document.
    """
    started = time.monotonic()
    tag = params.tag()
    grid = build_grid(params.n_grid)
    u0 = initial_velocity(grid, params.u_left, params.u_right)
    phi0 = cole_hopf_initial(grid, u0, params.nu)

    circuits_dir = os.path.join(out_dir, "circuits")
    os.makedirs(circuits_dir, exist_ok=True)

    hardware_payload = None
    hardware_backend = None
    if hardware_import is not None:
        with open(hardware_import, "r", encoding="utf-8") as handle:
            hardware_payload = json.load(handle)
        if isinstance(hardware_payload.get("backend"), str):
            hardware_backend = hardware_payload["backend"]

    records: List[Dict] = []
    hardware_used = False
    for set_index, times in enumerate(TIME_SETS):
        try:
            classical = classical_reference(params, times, krylov_cfg)
            classical_error = None
        except Exception as exc:  # recorded per record, run continues
            classical = None
            classical_error = f"classical propagation failed: {exc}"
        for time_index, t in enumerate(times):
            stem = f"{tag}_set{set_index}_t{time_index}"
            snapshot_seed = derive_seed(base_seed, tag, set_index, time_index)
            record: Dict = {
                "time_set_index": set_index,
                "time_index": time_index,
                "t": float(t),
                "grid": {"N": params.n_grid, "dx": grid.dx},
                "params": {
                    "nu": params.nu,
                    "u_L": params.u_left,
                    "u_R": params.u_right,
                    "dt": params.dt,
                },
                "seeds": {"snapshot": snapshot_seed},
                "circuits": {"noisy": None, "zne": None, "hardware": None},
                "metrics": {"noisy": None, "zne": None, "classical": None},
                "outputs": {
                    "classical": None,
                    "sim_noisy": None,
                    "sim_zne": None,
                    "hardware": None,
                },
                "noiseless_reconstruction_residual": None,
                "error": None,
            }
            errors: List[str] = []
            if classical_error is not None:
                errors.append(classical_error)
                snapshot = None
            else:
                snapshot = classical[time_index]
                record["outputs"]["classical"] = _field_list(snapshot.u)
                record["metrics"]["classical"] = {
                    "shock_position": snapshot.diagnostics.shock_position,
                    "dissipation": snapshot.diagnostics.dissipation,
                }

            try:
                noisy_circuit = build_trotter_circuit(
                    params, t, 1, phi0, name=f"{stem}_noisy"
                )
                noisy_rel = f"circuits/{stem}_noisy.qc"
                with open(os.path.join(circuits_dir, f"{stem}_noisy.qc"), "w", encoding="utf-8") as fh:
                    fh.write(serialize_circuit(noisy_circuit))
                record["circuits"]["noisy"] = noisy_rel
                noisy_metrics = circuit_metrics(noisy_circuit)
                record["metrics"]["noisy"] = {
                    "depth": noisy_metrics.depth,
                    "two_qubit_count": noisy_metrics.two_qubit_gate_count,
                }
                record["seeds"]["scale_1"] = derive_seed(snapshot_seed, "scale", 1)

                if enable_zne:
                    u_zne, scale_runs = run_zne(
                        params, t, phi0, noise, shots, snapshot_seed, zne_cfg
                    )
                    noisy_result = scale_runs[0].shot_result
                    u_noisy = scale_runs[0].u
                    amplified = scale_runs[1]
                    record["seeds"][f"scale_{amplified.scale}"] = derive_seed(
                        snapshot_seed, "scale", amplified.scale
                    )
                    zne_rel = f"circuits/{stem}_zne.qc"
                    zne_circuit = QuantumCircuit(
                        n_qubits=amplified.circuit.n_qubits,
                        instructions=amplified.circuit.instructions,
                        name=f"{stem}_zne",
                    )
                    with open(os.path.join(circuits_dir, f"{stem}_zne.qc"), "w", encoding="utf-8") as fh:
                        fh.write(serialize_circuit(zne_circuit))
                    record["circuits"]["zne"] = zne_rel
                    zne_metrics = circuit_metrics(zne_circuit)
                    record["metrics"]["zne"] = {
                        "depth": zne_metrics.depth,
                        "two_qubit_count": zne_metrics.two_qubit_gate_count,
                    }
                    record["outputs"]["sim_zne"] = {"field": _field_list(u_zne)}
                else:
                    rho = simulate_noisy(noisy_circuit, noise)
                    noisy_result = sample_counts(
                        rho, shots, noise, derive_seed(snapshot_seed, "scale", 1)
                    )
                    u_noisy = quantum_velocity(noisy_result, params, grid)

                record["outputs"]["sim_noisy"] = {
                    "field": _field_list(u_noisy),
                    "counts": dict(noisy_result.counts),
                }
                if snapshot is not None:
                    record["noiseless_reconstruction_residual"] = _noiseless_residual(
                        noisy_circuit, params, grid, snapshot.u
                    )
            except Exception as exc:
                errors.append(f"quantum pipeline failed: {exc}")

            if hardware_payload is not None and stem in hardware_payload:
                try:
                    hw_result = import_hardware_counts(hardware_import, stem)
                    u_hw = quantum_velocity(hw_result, params, grid)
                    hw_block = {
                        "field": _field_list(u_hw),
                        "counts": dict(hw_result.counts),
                    }
                    if hw_result.flags:
                        hw_block["flags"] = list(hw_result.flags)
                    record["outputs"]["hardware"] = hw_block
                    record["circuits"]["hardware"] = record["circuits"]["noisy"]
                    hardware_used = True
                except Exception as exc:
                    errors.append(f"hardware import failed: {exc}")

            if errors:
                record["error"] = "; ".join(errors)
            records.append(record)

    if timestamp_override is not None:
        timestamp = timestamp_override
        wall_time = 0.0
    else:
        timestamp = datetime.now(timezone.utc).isoformat()
        wall_time = time.monotonic() - started

    document = {
        "schema": {
            "version": SCHEMA_VERSION,
            "task": SCHEMA_TASK,
            "fields": RECORD_FIELDS,
        },
        "base_name": tag,
        "timestamp": timestamp,
        "output_dir": os.path.basename(os.path.normpath(out_dir)),
        "hardware_used": hardware_used,
        "hardware_backend": hardware_backend,
        "time_set_count": len(TIME_SETS),
        "record_count": len(records),
        "wall_time": wall_time,
        "shots": shots,
        "base_seed": base_seed,
        "zne_enabled": enable_zne,
        "noise": {
            "p1": noise.p1,
            "p2": noise.p2,
            "readout_p01": noise.readout_p01,
            "readout_p10": noise.readout_p10,
        },
        "records": records,
    }
    path = os.path.join(out_dir, f"{tag}.json")
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(document, handle, indent=1)
        handle.write("\n")
    return document


def validate_schema(path: str) -> List[str]:
    """Check one experiment file; returns a list of violations (empty = ok)."""
    violations: List[str] = []
    try:
        with open(path, "r", encoding="utf-8") as handle:
            doc = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        return [f"unreadable: {exc}"]
    if not isinstance(doc, dict):
        return ["top level is not an object"]

    schema = doc.get("schema")
    if not isinstance(schema, dict):
        violations.append("missing schema block")
    elif schema.get("version") != SCHEMA_VERSION:
        violations.append(f"unknown schema version {schema.get('version')!r}")

    for key in ("base_name", "timestamp", "record_count", "records", "shots", "noise"):
        if key not in doc:
            violations.append(f"missing top-level field {key!r}")
    records = doc.get("records")
    if not isinstance(records, list):
        return violations + ["records is not a list"]
    if doc.get("record_count") != len(records):
        violations.append(
            f"record_count {doc.get('record_count')} != {len(records)} records"
        )

    shots = doc.get("shots")
    base_dir = os.path.dirname(os.path.abspath(path))
    for idx, record in enumerate(records):
        where = f"record {idx}"
        if not isinstance(record, dict):
            violations.append(f"{where}: not an object")
            continue
        for field_name in RECORD_FIELDS:
            if field_name not in record:
                violations.append(f"{where}: missing field {field_name!r}")
        grid = record.get("grid", {})
        n = grid.get("N") if isinstance(grid, dict) else None
        if not isinstance(n, int) or n < 3:
            violations.append(f"{where}: bad grid.N {n!r}")
            continue
        outputs = record.get("outputs", {})
        if not isinstance(outputs, dict):
            violations.append(f"{where}: outputs is not an object")
            continue
        for name in ("classical",):
            field_values = outputs.get(name)
            if field_values is not None and len(field_values) != n:
                violations.append(
                    f"{where}: outputs.{name} has length {len(field_values)}, expected {n}"
                )
        for name in ("sim_noisy", "sim_zne", "hardware"):
            block = outputs.get(name)
            if block is None:
                continue
            if not isinstance(block, dict) or "field" not in block:
                violations.append(f"{where}: outputs.{name} malformed")
                continue
            if len(block["field"]) != n:
                violations.append(
                    f"{where}: outputs.{name}.field has length "
                    f"{len(block['field'])}, expected {n}"
                )
            counts = block.get("counts")
            if counts is not None and isinstance(shots, int):
                total = sum(counts.values())
                if total != shots:
                    violations.append(
                        f"{where}: outputs.{name} counts sum {total} != shots {shots}"
                    )
        circuits = record.get("circuits", {})
        if isinstance(circuits, dict):
            for kind, rel in circuits.items():
                if rel is not None and not os.path.exists(os.path.join(base_dir, rel)):
                    violations.append(f"{where}: circuits.{kind} missing file {rel!r}")
    return violations


@dataclass(frozen=True)
class TrainingSample:
    """One paired record: noisy observation(s) plus the classical target."""

    noisy_field: np.ndarray
    classical_field: np.ndarray
    zne_field: Optional[np.ndarray]
    hardware_field: Optional[np.ndarray]
    params: ExperimentParams
    t: float
    time_set_index: int
    circuit_path: str
    metrics: Dict[str, int]
    noise: NoiseModel
    source_file: str
    record_index: int


def load_dataset(
    data_dir: str,
    dims: Optional[Sequence[int]] = None,
    nu_range: Optional[Tuple[float, float]] = None,
    require_zne: bool = False,
    require_hardware: bool = False,
) -> List[TrainingSample]:
    """Collect paired samples from every experiment file under ``data_dir``.

    Records carrying an error, and files that fail to parse, are skipped (the
    latter with a logged warning tally).  Ordering is deterministic:
    (file name, record index).
    """
    samples: List[TrainingSample] = []
    skipped_files = 0
    for name in sorted(os.listdir(data_dir)):
        if not name.endswith(".json") or name == "manifest.json":
            continue
        path = os.path.join(data_dir, name)
        try:
            with open(path, "r", encoding="utf-8") as handle:
                doc = json.load(handle)
            records = doc["records"]
            noise = NoiseModel(**doc["noise"])
        except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            skipped_files += 1
            logger.warning("skipping unreadable experiment file %s: %s", path, exc)
            continue
        for idx, record in enumerate(records):
            if record.get("error") is not None:
                continue
            outputs = record["outputs"]
            if outputs.get("classical") is None or outputs.get("sim_noisy") is None:
                continue
            p = record["params"]
            n_grid = record["grid"]["N"]
            if dims is not None and n_grid not in dims:
                continue
            if nu_range is not None and not nu_range[0] <= p["nu"] <= nu_range[1]:
                continue
            zne_block = outputs.get("sim_zne")
            if require_zne and zne_block is None:
                continue
            hw_block = outputs.get("hardware")
            if require_hardware and hw_block is None:
                continue
            samples.append(
                TrainingSample(
                    noisy_field=np.asarray(outputs["sim_noisy"]["field"], dtype=float),
                    classical_field=np.asarray(outputs["classical"], dtype=float),
                    zne_field=(
                        np.asarray(zne_block["field"], dtype=float)
                        if zne_block is not None
                        else None
                    ),
                    hardware_field=(
                        np.asarray(hw_block["field"], dtype=float)
                        if hw_block is not None
                        else None
                    ),
                    params=ExperimentParams(
                        nu=p["nu"], dt=p["dt"], n_grid=n_grid, u_left=p["u_L"], u_right=p["u_R"]
                    ),
                    t=record["t"],
                    time_set_index=record["time_set_index"],
                    circuit_path=os.path.join(data_dir, record["circuits"]["noisy"]),
                    metrics=dict(record["metrics"]["noisy"]),
                    noise=noise,
                    source_file=name,
                    record_index=idx,
                )
            )
    if skipped_files:
        logger.warning("load_dataset skipped %d unreadable file(s)", skipped_files)
    return samples


def write_manifest(out_dir: str) -> str:
    """Hash every artifact under out_dir into manifest.json (sorted paths)."""
    entries = []
    for root, _dirs, files in os.walk(out_dir):
        for name in files:
            if name == "manifest.json":
                continue
            full = os.path.join(root, name)
            rel = os.path.relpath(full, out_dir)
            with open(full, "rb") as handle:
                digest = hashlib.sha256(handle.read()).hexdigest()
            entries.append({"path": rel.replace(os.sep, "/"), "sha256": digest})
    entries.sort(key=lambda e: e["path"])
    manifest = {"version": SCHEMA_VERSION, "files": entries}
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(manifest, handle, indent=1)
        handle.write("\n")
    return path
