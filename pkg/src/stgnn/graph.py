"""System topology graph and its normalized propagation matrix.

The graph is undirected with positive edge weights. Normalization adds a
self-loop to every node and rescales by degree, either symmetrically
(D^-1/2 (A+I) D^-1/2, the default: keeps the propagation operator
non-expansive) or row-stochastically (D^-1 (A+I)).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .numeric import Matrix

NORMALIZATION_MODES = ("symmetric", "row")


@dataclass(frozen=True)
class TopologyGraph:
    """Undirected weighted graph; edges canonicalized to i < j, no self-loops."""

    n_nodes: int
    edges: tuple[tuple[int, int, float], ...]
    node_ids: tuple[str, ...]
    dropped_self_loops: int = 0

    def degree(self) -> np.ndarray:
        deg = np.zeros(self.n_nodes, dtype=np.float64)
        for i, j, w in self.edges:
            deg[i] += w
            deg[j] += w
        return deg


@dataclass(frozen=True)
class NormalizedAdjacency:
    """Degree-normalized adjacency with self-loops, ready for propagation."""

    n_nodes: int
    matrix: Matrix
    mode: str = "symmetric"


def build_graph(n_nodes: int, edges, node_ids=None) -> TopologyGraph:
    """Canonicalize a raw edge list into a TopologyGraph.

    Edges are stored once with i < j; duplicates are merged by summing
    weights; self-loops in the input are dropped and counted (normalization
    adds its own later).
    """
    if n_nodes < 1:
        raise ValidationError(f"graph needs at least one node, got n_nodes={n_nodes}")
    if node_ids is None:
        node_ids = tuple(f"node{i}" for i in range(n_nodes))
    else:
        node_ids = tuple(str(x) for x in node_ids)
        if len(node_ids) != n_nodes:
            raise ValidationError(
                f"expected {n_nodes} node_ids, got {len(node_ids)}"
            )
    merged: dict[tuple[int, int], float] = {}
    dropped = 0
    for edge in edges:
        i, j, w = int(edge[0]), int(edge[1]), float(edge[2])
        if not (0 <= i < n_nodes and 0 <= j < n_nodes):
            raise ValidationError(
                f"edge ({i}, {j}, {w}) has an index outside [0, {n_nodes})"
            )
        if w <= 0 or not np.isfinite(w):
            raise ValidationError(f"edge ({i}, {j}) weight must be positive, got {w}")
        if i == j:
            dropped += 1
            continue
        key = (i, j) if i < j else (j, i)
        merged[key] = merged.get(key, 0.0) + w
    canonical = tuple((i, j, merged[(i, j)]) for i, j in sorted(merged))
    return TopologyGraph(n_nodes=n_nodes, edges=canonical, node_ids=node_ids,
                         dropped_self_loops=dropped)


def normalize(g: TopologyGraph, mode: str = "symmetric") -> NormalizedAdjacency:
    """Build the propagation matrix from the graph with self-loops added."""
    if mode not in NORMALIZATION_MODES:
        raise ValidationError(f"unknown normalization mode {mode!r}")
    n = g.n_nodes
    a_hat = np.eye(n, dtype=np.float64)
    for i, j, w in g.edges:
        a_hat[i, j] += w
        a_hat[j, i] += w
    deg = a_hat.sum(axis=1)
    if mode == "symmetric":
        inv_sqrt = 1.0 / np.sqrt(deg)
        matrix = a_hat * inv_sqrt[:, None] * inv_sqrt[None, :]
    else:
        matrix = a_hat / deg[:, None]
    return NormalizedAdjacency(n_nodes=n, matrix=matrix, mode=mode)


def graph_to_dict(g: TopologyGraph) -> dict:
    return {
        "n_nodes": g.n_nodes,
        "node_ids": list(g.node_ids),
        "edges": [[i, j, w] for i, j, w in g.edges],
    }


def graph_from_dict(doc: dict) -> TopologyGraph:
    for key in ("n_nodes", "node_ids", "edges"):
        if key not in doc:
            raise ValidationError(f"graph document is missing {key!r}")
    return build_graph(int(doc["n_nodes"]), doc["edges"], doc["node_ids"])


def save_graph(g: TopologyGraph, path: str) -> None:
    """Write the canonical JSON form; rewriting a saved file is byte-identical."""
    payload = json.dumps(graph_to_dict(g), indent=2) + "\n"
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(payload)
    os.replace(tmp, path)


def load_graph(path: str) -> TopologyGraph:
    with open(path, "r", encoding="utf-8") as fh:
        return graph_from_dict(json.load(fh))
