"""Hybrid quantum-classical solver for 1D viscous flow with learned mitigation.

The pipeline: a Cole-Hopf/Krylov classical reference, a Trotterized R_XX
quantum evolution simulated under a parametric noise model, zero-noise
extrapolation, a structured sweep dataset, and a graph-attention corrector
trained to map noisy quantum outputs back to the classical reference.
"""

from ._seeding import derive_seed
from .params import ExperimentParams
from .pde_core import (
    ColeHopfField,
    Diagnostics,
    Grid,
    VelocityField,
    build_grid,
    cole_hopf_initial,
    dissipation_rate,
    initial_velocity,
    l2_error,
    reconstruct_velocity,
    shock_position,
)
from .classical_solver import (
    ClassicalSnapshot,
    KrylovConfig,
    KrylovConvergenceError,
    LaplacianOp,
    build_laplacian,
    classical_reference,
    krylov_expm_apply,
)
from .circuit import (
    Barrier,
    CircuitMetrics,
    CircuitParseError,
    Initialize,
    MeasureAll,
    QuantumCircuit,
    RXX,
    TrotterPlan,
    build_trotter_circuit,
    circuit_metrics,
    embed_state,
    make_trotter_plan,
    parse_circuit,
    serialize_circuit,
)
from .qsim import (
    DensityMatrix,
    NoiseModel,
    ShotResult,
    counts_to_amplitudes,
    import_hardware_counts,
    list_hardware_records,
    quantum_velocity,
    sample_counts,
    simulate_noisy,
    simulate_statevector,
)
from .mitigation import ScaleRun, ZneConfig, clip_field, run_zne, zne_combine
from .dataset import (
    DEFAULT_SHOTS,
    TIME_SETS,
    TrainingSample,
    default_sweep,
    load_dataset,
    run_experiment,
    validate_schema,
    write_manifest,
)
from .circuit_graph import (
    CircuitDAG,
    FeatureTensors,
    GateNode,
    LightconeMasks,
    circuit_to_dag,
    compute_lightcones,
    dump_dag,
    featurize,
)

__version__ = "0.1.0"

__all__ = [
    "Barrier",
    "CircuitDAG",
    "CircuitMetrics",
    "CircuitParseError",
    "ClassicalSnapshot",
    "ColeHopfField",
    "DEFAULT_SHOTS",
    "DensityMatrix",
    "Diagnostics",
    "ExperimentParams",
    "FeatureTensors",
    "GateNode",
    "Grid",
    "Initialize",
    "KrylovConfig",
    "KrylovConvergenceError",
    "LaplacianOp",
    "LightconeMasks",
    "MeasureAll",
    "NoiseModel",
    "QuantumCircuit",
    "RXX",
    "ScaleRun",
    "ShotResult",
    "TIME_SETS",
    "TrainingSample",
    "TrotterPlan",
    "VelocityField",
    "ZneConfig",
    "build_grid",
    "build_laplacian",
    "build_trotter_circuit",
    "circuit_metrics",
    "circuit_to_dag",
    "classical_reference",
    "clip_field",
    "cole_hopf_initial",
    "compute_lightcones",
    "counts_to_amplitudes",
    "default_sweep",
    "derive_seed",
    "dissipation_rate",
    "dump_dag",
    "embed_state",
    "featurize",
    "import_hardware_counts",
    "initial_velocity",
    "krylov_expm_apply",
    "l2_error",
    "list_hardware_records",
    "load_dataset",
    "make_trotter_plan",
    "parse_circuit",
    "quantum_velocity",
    "reconstruct_velocity",
    "run_experiment",
    "run_zne",
    "sample_counts",
    "serialize_circuit",
    "shock_position",
    "simulate_noisy",
    "simulate_statevector",
    "validate_schema",
    "write_manifest",
    "zne_combine",
]
