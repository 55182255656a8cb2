"""Circuit-to-DAG conversion, per-qubit lightcone masks, feature tensors.

Nodes are instructions (barriers dropped, the terminal measurement expanded
into one node per qubit); a directed edge u -> v exists when v is the next
node after u touching one of u's qubits.  Node identity is canonical: nodes
are ordered by (wire depth, kind, qubits), never by raw instruction-list
position, so circuits that differ only by interleaving of independent gates
produce identical graphs and features.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Tuple

import numpy as np

from .circuit import Barrier, CircuitMetrics, Initialize, MeasureAll, QuantumCircuit, RXX
from .params import ExperimentParams
from .qsim import NoiseModel

KIND_INIT = "init"
KIND_RXX = "rxx"
KIND_MEASURE = "measure"
_KIND_RANK = {KIND_INIT: 0, KIND_RXX: 1, KIND_MEASURE: 2}

NODE_FEATURE_DIM = 8
GLOBAL_FEATURE_DIM = 13

# Fixed normalization constants spanning the default sweep envelope, so one
# feature layout serves every dimension without per-dataset statistics.
_NU_SCALE = 0.2
_DT_SCALE = 2e-3
_N_SCALE = 64.0
_UL_SCALE = 6.0
_THETA_SCALE = 3.2
_M_SCALE = 20.0
_S_SCALE = 3.0
_DEPTH_SCALE = 300.0
_COUNT_SCALE = 300.0
_PROB_SCALE = 0.5


@dataclass(frozen=True)
class GateNode:
    id: int
    kind: str
    qubits: Tuple[int, ...]
    theta: Optional[float]
    temporal_index: int


@dataclass(frozen=True)
class CircuitDAG:
    n_qubits: int
    nodes: Tuple[GateNode, ...]
    edges: Tuple[Tuple[int, int], ...]

    def successors(self) -> Dict[int, List[int]]:
        table: Dict[int, List[int]] = {node.id: [] for node in self.nodes}
        for src, dst in self.edges:
            table[src].append(dst)
        return table

    def predecessors(self) -> Dict[int, List[int]]:
        table: Dict[int, List[int]] = {node.id: [] for node in self.nodes}
        for src, dst in self.edges:
            table[dst].append(src)
        return table


@dataclass(frozen=True)
class LightconeMasks:
    """Per measured qubit: ids of nodes with a causal path to its readout."""

    masks: Dict[int, FrozenSet[int]]

    def mask(self, qubit: int) -> FrozenSet[int]:
        return self.masks[qubit]


def circuit_to_dag(circuit: QuantumCircuit) -> CircuitDAG:
    """One node per instruction (barriers dropped, measurement per qubit).

    temporal_index is the wire depth (longest-path distance from the start),
    making node identity independent of how independent gates happen to be
    interleaved in the instruction list.
    """
    n = circuit.n_qubits
    raw: List[Tuple[str, Tuple[int, ...], Optional[float]]] = []
    for ins in circuit.instructions:
        if isinstance(ins, Initialize):
            raw.append((KIND_INIT, tuple(range(n)), None))
        elif isinstance(ins, RXX):
            raw.append((KIND_RXX, (ins.qubit_a, ins.qubit_b), ins.theta))
        elif isinstance(ins, MeasureAll):
            for q in range(n):
                raw.append((KIND_MEASURE, (q,), None))
        elif isinstance(ins, Barrier):
            continue

    # First pass in list order: wire frontiers give depth and edge structure.
    depth: List[int] = []
    preds: List[set] = []
    frontier: List[Optional[int]] = [None] * n  # last node index touching wire q
    for idx, (_kind, qubits, _theta) in enumerate(raw):
        sources = {frontier[q] for q in qubits if frontier[q] is not None}
        node_depth = 1 + max((depth[s] for s in sources), default=-1)
        depth.append(node_depth)
        preds.append(sources)
        for q in qubits:
            frontier[q] = idx

    # Canonical ids: sort by (depth, kind rank, qubits); relabel edges.
    order = sorted(
        range(len(raw)), key=lambda i: (depth[i], _KIND_RANK[raw[i][0]], raw[i][1])
    )
    relabel = {old: new for new, old in enumerate(order)}
    nodes = tuple(
        GateNode(
            id=relabel[i],
            kind=raw[i][0],
            qubits=raw[i][1],
            theta=raw[i][2],
            temporal_index=depth[i],
        )
        for i in order
    )
    edges = sorted(
        {(relabel[src], relabel[dst]) for dst, srcs in enumerate(preds) for src in srcs}
    )
    return CircuitDAG(n_qubits=n, nodes=nodes, edges=tuple(edges))


def compute_lightcones(dag: CircuitDAG) -> LightconeMasks:
    """Reverse reachability from each measure node (the node itself excluded)."""
    preds = dag.predecessors()
    masks: Dict[int, FrozenSet[int]] = {}
    for node in dag.nodes:
        if node.kind != KIND_MEASURE:
            continue
        qubit = node.qubits[0]
        seen: set = set()
        stack = list(preds[node.id])
        while stack:
            current = stack.pop()
            if current in seen:
                continue
            seen.add(current)
            stack.extend(preds[current])
        masks[qubit] = frozenset(seen)
    return LightconeMasks(masks=masks)


@dataclass(frozen=True)
class FeatureTensors:
    node_features: np.ndarray  # (num_nodes, NODE_FEATURE_DIM)
    adjacency: Tuple[Tuple[int, int], ...]
    globals_vec: np.ndarray  # (GLOBAL_FEATURE_DIM,)
    noisy_field: np.ndarray  # (N,)


def _node_row(node: GateNode, n_qubits: int, num_nodes: int, noise: NoiseModel) -> List[float]:
    one_hot = [0.0, 0.0, 0.0]
    one_hot[_KIND_RANK[node.kind]] = 1.0
    if node.kind == KIND_RXX:
        qubit_a = node.qubits[0] / n_qubits
        qubit_b = node.qubits[1] / n_qubits
        local_noise = noise.p2
    elif node.kind == KIND_MEASURE:
        qubit_a = node.qubits[0] / n_qubits
        qubit_b = -1.0
        local_noise = 0.5 * (noise.readout_p01 + noise.readout_p10)
    else:  # init touches every wire; no single wire to point at
        qubit_a = -1.0
        qubit_b = -1.0
        local_noise = 0.0
    theta = node.theta if node.theta is not None else 0.0
    return one_hot + [
        qubit_a,
        qubit_b,
        theta,
        node.temporal_index / num_nodes,
        local_noise,
    ]


def featurize(
    dag: CircuitDAG,
    masks: LightconeMasks,
    params: ExperimentParams,
    noise: NoiseModel,
    metrics: CircuitMetrics,
    noisy_field: np.ndarray,
    theta: float,
    steps_m: int,
    scale_s: int,
) -> FeatureTensors:
    """Pack node, edge, global, and field tensors for the attention model.

    ``masks`` is accepted alongside the DAG so callers hold the pair
    together; pooling consumes it at model time.
    """
    del masks  # carried with the sample; consumed by readout pooling
    num_nodes = len(dag.nodes)
    rows = [_node_row(node, dag.n_qubits, num_nodes, noise) for node in dag.nodes]
    node_features = np.asarray(rows, dtype=float)
    globals_vec = np.array(
        [
            params.nu / _NU_SCALE,
            params.dt / _DT_SCALE,
            params.n_grid / _N_SCALE,
            params.u_left / _UL_SCALE,
            theta / _THETA_SCALE,
            steps_m / _M_SCALE,
            scale_s / _S_SCALE,
            metrics.depth / _DEPTH_SCALE,
            metrics.two_qubit_gate_count / _COUNT_SCALE,
            noise.p1 / _PROB_SCALE,
            noise.p2 / _PROB_SCALE,
            noise.readout_p01 / _PROB_SCALE,
            noise.readout_p10 / _PROB_SCALE,
        ]
    )
    field = np.asarray(noisy_field, dtype=float)
    for name, arr in (("node_features", node_features), ("globals", globals_vec), ("noisy_field", field)):
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"non-finite values in {name}")
    return FeatureTensors(
        node_features=node_features,
        adjacency=dag.edges,
        globals_vec=globals_vec,
        noisy_field=field,
    )


def dump_dag(dag: CircuitDAG) -> str:
    """Edge-list text dump for eyeballing graph structure."""
    lines = [f"nodes {len(dag.nodes)} qubits {dag.n_qubits}"]
    for node in dag.nodes:
        theta = f" theta={node.theta:.6g}" if node.theta is not None else ""
        lines.append(
            f"node {node.id} {node.kind} qubits={','.join(map(str, node.qubits))} "
            f"depth={node.temporal_index}{theta}"
        )
    for src, dst in dag.edges:
        lines.append(f"edge {src} -> {dst}")
    return "\n".join(lines) + "\n"
