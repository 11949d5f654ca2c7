"""Weighted neighborhood graphs over superpixels and their smoothness operators.

A segmentation instance is a graph whose nodes carry feature vectors (mean
superpixel colors) and whose edges carry contrast-sensitive weights.  From the
graph we build two linear-algebra views used by the solvers:

* an edge-difference (incidence) operator, one signed row per edge, and
* the smoothness matrix ``W = (diag(w) D)^T (diag(w) D) + eps*I`` assembled
  edge by edge, which is symmetric positive semi-definite by construction.

Seed handling lives here as well: pinning a subset of nodes to known labels
and reducing the smoothness system to the free nodes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import InputError


def compute_edge_weights(edges, features, constant: float) -> np.ndarray:
    """Contrast-sensitive weight ``1 / (1 + ||f_i - f_j||^2) + constant`` per edge.

    The additive constant keeps every weight strictly positive so a small
    amount of smoothing is imposed even across strong feature contrast.

    Parameters
    ----------
    edges : (E, 2) int array-like
        Node index pairs.
    features : (N, F) float array-like
        Per-node feature vectors; a 1-D array is treated as (N, 1).
    constant : float
        Strictly positive additive offset.

    Returns
    -------
    (E,) float array, each entry in ``(constant, 1 + constant]``.
    """
    feats = np.asarray(features, dtype=float)
    if feats.ndim == 1:
        feats = feats[:, None]
    if feats.ndim != 2:
        raise InputError(f"features must be (N, F), got shape {feats.shape}")
    if not np.all(np.isfinite(feats)):
        raise InputError("features contain non-finite values")
    if not np.isfinite(constant) or constant <= 0:
        raise InputError(f"weight constant must be > 0, got {constant!r}")
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if e.size and (e.min() < 0 or e.max() >= feats.shape[0]):
        raise InputError("edge endpoint out of range")
    d = feats[e[:, 0]] - feats[e[:, 1]]
    return 1.0 / (1.0 + np.einsum("ij,ij->i", d, d)) + constant


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SuperpixelGraph:
    """Immutable node-feature / weighted-edge bundle.

    ``edges`` rows are canonical ``i < j`` pairs with no duplicates or
    self-loops; ``weights`` are strictly positive and finite.
    """

    features: np.ndarray  # (N, F)
    edges: np.ndarray     # (E, 2) int64, i < j
    weights: np.ndarray   # (E,) float

    def __post_init__(self):
        feats = np.atleast_2d(np.asarray(self.features, dtype=float))
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        n = feats.shape[0]
        if not np.all(np.isfinite(feats)):
            raise InputError("features contain non-finite values")
        if edges.shape[0] != weights.shape[0]:
            raise InputError("edge and weight counts differ")
        if edges.size:
            if edges.min() < 0 or edges.max() >= n:
                raise InputError("edge endpoint out of range")
            if np.any(edges[:, 0] == edges[:, 1]):
                raise InputError("self-loop edge")
            lo = edges.min(axis=1)
            hi = edges.max(axis=1)
            edges = np.column_stack([lo, hi])
            key = lo * n + hi
            if np.unique(key).size != key.size:
                raise InputError("duplicate edge")
        if weights.size and (not np.all(np.isfinite(weights)) or weights.min() <= 0):
            raise InputError("edge weights must be finite and > 0")
        object.__setattr__(self, "features", _frozen(feats))
        object.__setattr__(self, "edges", _frozen(edges))
        object.__setattr__(self, "weights", _frozen(weights))

    @property
    def node_count(self) -> int:
        return self.features.shape[0]

    @property
    def edge_count(self) -> int:
        return self.edges.shape[0]

    @classmethod
    def from_features(cls, features, edges, constant: float) -> "SuperpixelGraph":
        """Build a graph computing weights from the features."""
        w = compute_edge_weights(edges, features, constant)
        return cls(np.asarray(features, dtype=float), edges, w)

    def connected_components(self) -> tuple[int, np.ndarray]:
        """(count, per-node component id) over the edge structure."""
        n = self.node_count
        if self.edge_count == 0:
            return n, np.arange(n)
        ones = np.ones(self.edge_count)
        adj = sp.coo_matrix(
            (ones, (self.edges[:, 0], self.edges[:, 1])), shape=(n, n)
        )
        return sp.csgraph.connected_components(adj, directed=False)[:2]

    def to_json(self) -> str:
        return json.dumps(
            {
                "n": self.node_count,
                "features": self.features.tolist(),
                "edges": self.edges.tolist(),
                "weights": self.weights.tolist(),
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "SuperpixelGraph":
        """Parse the graph JSON format; edges must already be canonical ``i < j``."""
        try:
            doc = json.loads(text)
            n = int(doc["n"])
            features = np.asarray(doc["features"], dtype=float)
            edges = np.asarray(doc["edges"], dtype=np.int64).reshape(-1, 2)
            weights = np.asarray(doc["weights"], dtype=float)
        except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
            raise InputError(f"malformed graph JSON: {exc}") from exc
        if np.atleast_2d(features).shape[0] != n:
            raise InputError(f"feature count does not match n={n}")
        if edges.size and np.any(edges[:, 0] >= edges[:, 1]):
            raise InputError("graph JSON edges must be in canonical i < j order")
        return cls(features, edges, weights)


@dataclass(frozen=True)
class IncidenceOperator:
    """Edge-difference operator: row per edge with +1 at i and -1 at j (i < j)."""

    node_count: int
    rows: sp.csr_matrix          # (E, N)
    weight_vector: np.ndarray    # (E,)

    @property
    def edge_count(self) -> int:
        return self.rows.shape[0]

    def weighted(self) -> sp.csr_matrix:
        """Rows scaled by their edge weight, i.e. ``diag(w) D``."""
        return sp.diags(self.weight_vector).dot(self.rows).tocsr()

    def apply(self, labels: np.ndarray) -> np.ndarray:
        """Per-edge signed label differences ``L_i - L_j``."""
        return self.rows.dot(np.asarray(labels, dtype=float))


def build_incidence(graph: SuperpixelGraph) -> IncidenceOperator:
    e = graph.edge_count
    n = graph.node_count
    if e == 0:
        rows = sp.csr_matrix((0, n))
    else:
        data = np.tile([1.0, -1.0], e)
        indices = graph.edges.reshape(-1)
        indptr = np.arange(0, 2 * e + 1, 2)
        rows = sp.csr_matrix((data, indices, indptr), shape=(e, n))
    w = graph.weights.copy()
    return IncidenceOperator(n, rows, _frozen(w))


@dataclass(frozen=True)
class SmoothnessMatrix:
    """``(diag(w) D)^T (diag(w) D) + eps*I`` stored sparse, eps included."""

    matrix: sp.csr_matrix
    epsilon: float

    @property
    def node_count(self) -> int:
        return self.matrix.shape[0]


def build_wtilde(incidence: IncidenceOperator, epsilon: float | None = None) -> SmoothnessMatrix:
    """Assemble the smoothness matrix edge by edge.

    Each edge (i, j) with weight w contributes w^2 to both diagonal entries
    and -w^2 to the symmetric off-diagonal pair, so the result is exactly
    symmetric in floating point.  ``epsilon=None`` picks the default
    ``1e-8 * max(diagonal)`` regularization (0 when the graph has no edges);
    pass an explicit value (0 allowed) to override.

    Raises
    ------
    InputError
        If ``epsilon`` is negative or non-finite.
    """
    n = incidence.node_count
    e = incidence.edge_count
    w2 = incidence.weight_vector ** 2
    if e:
        i = incidence.rows.indices[0::2]
        j = incidence.rows.indices[1::2]
        rows = np.concatenate([i, j, i, j])
        cols = np.concatenate([i, j, j, i])
        vals = np.concatenate([w2, w2, -w2, -w2])
        mat = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
        mat.sum_duplicates()
    else:
        mat = sp.csr_matrix((n, n))
    if epsilon is None:
        epsilon = 1e-8 * (mat.diagonal().max() if e else 0.0)
    epsilon = float(epsilon)
    if not np.isfinite(epsilon) or epsilon < 0:
        raise InputError(f"epsilon must be >= 0, got {epsilon!r}")
    if epsilon > 0:
        mat = (mat + epsilon * sp.eye(n, format="csr")).tocsr()
    return SmoothnessMatrix(mat, epsilon)


@dataclass(frozen=True)
class SeedSet:
    """Nodes pinned to label 1 (foreground) or 0 (background)."""

    foreground: frozenset
    background: frozenset

    @classmethod
    def of(cls, foreground, background) -> "SeedSet":
        return cls(frozenset(int(v) for v in foreground),
                   frozenset(int(v) for v in background))

    def __post_init__(self):
        overlap = self.foreground & self.background
        if overlap:
            raise InputError(f"nodes seeded both ways: {sorted(overlap)[:8]}")

    def validate_nodes(self, node_count: int) -> None:
        for v in self.foreground | self.background:
            if not 0 <= v < node_count:
                raise InputError(f"seed node {v} out of range [0, {node_count})")

    @property
    def count(self) -> int:
        return len(self.foreground) + len(self.background)

    def indices(self) -> np.ndarray:
        return np.array(sorted(self.foreground | self.background), dtype=np.int64)

    def values_for(self, indices: np.ndarray) -> np.ndarray:
        fg = self.foreground
        return np.array([1.0 if int(v) in fg else 0.0 for v in indices])

    def with_added(self, node: int, is_foreground: bool) -> "SeedSet":
        node = int(node)
        if is_foreground:
            return SeedSet(self.foreground | {node}, self.background - {node})
        return SeedSet(self.foreground - {node}, self.background | {node})


@dataclass(frozen=True)
class ReducedSystem:
    """Seed-pinned reduction of a symmetric system to the free nodes.

    Solving ``matrix @ x_free = rhs`` and calling :meth:`expand` recovers the
    full label vector with seeds in place.  When every node is seeded the
    system is empty and ``expand`` simply returns the seed assignment.
    """

    node_count: int
    free: np.ndarray
    pinned: np.ndarray
    pinned_values: np.ndarray
    matrix: sp.csr_matrix
    rhs: np.ndarray

    def expand(self, free_solution: np.ndarray) -> np.ndarray:
        full = np.empty(self.node_count)
        full[self.pinned] = self.pinned_values
        full[self.free] = np.asarray(free_solution, dtype=float)
        return full


def reduce_by_seeds(matrix, seeds: SeedSet) -> ReducedSystem:
    """Pin seeded nodes of a symmetric system and form the free-node problem.

    Accepts a :class:`SmoothnessMatrix` or a raw sparse matrix.
    """
    mat = matrix.matrix if isinstance(matrix, SmoothnessMatrix) else matrix.tocsr()
    n = mat.shape[0]
    seeds.validate_nodes(n)
    pinned = seeds.indices()
    values = seeds.values_for(pinned)
    mask = np.ones(n, dtype=bool)
    mask[pinned] = False
    free = np.flatnonzero(mask)
    sub = mat[free][:, free].tocsr()
    if pinned.size and free.size:
        rhs = -mat[free][:, pinned].dot(values)
    else:
        rhs = np.zeros(free.size)
    return ReducedSystem(n, free, pinned, values, sub, np.asarray(rhs, dtype=float))
