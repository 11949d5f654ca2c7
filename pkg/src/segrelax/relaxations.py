"""The four seed-pinned boundary-energy solvers and their shared pieces.

All four minimize a boundary energy over labels in [0, 1] with seeded nodes
pinned to 0 or 1; they differ in the energy and in how it is relaxed:

* ``conv_lp``   edgewise LP: one auxiliary variable per edge bounds the
                absolute label difference, giving N + E variables and 2E rows.
* ``compact_lp`` quasi-total-variation LP: the l1 norm of U L, where U is the
                upper Cholesky factor of the smoothness matrix.  Because U is
                square, this needs exactly 2N variables and 2N rows no matter
                how many edges the graph has, and the factor is reusable
                across seed edits.
* ``qp``        random-walker relaxation: the quadratic form is minimized
                exactly by the harmonic extension of the seeds.
* ``gc``        graph cut: exact binary optimum of the p=1 energy by min cut.

Continuous outputs are clipped of numerical dust and reported via
:class:`LabelField`; thresholding into a mask lives in :mod:`segrelax.pipeline`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import InputError, SolverError, UnseededComponentError
from .factorization import FactorU, cholesky_upper, factorize_spd
from .graph import (
    SeedSet,
    SmoothnessMatrix,
    SuperpixelGraph,
    build_incidence,
    build_wtilde,
    reduce_by_seeds,
)
from .lp import LpProblem, LpSolution, solve_lp
from .maxflow import solve_max_flow

METHODS = ("compact_lp", "conv_lp", "qp", "gc")

_CLIP_SLACK = 1e-6


@dataclass(frozen=True)
class LabelField:
    """Per-node labels in [0, 1]; ``binary`` marks a discrete solution."""

    labels: np.ndarray
    solver: str
    binary: bool

    def __post_init__(self):
        lab = np.asarray(self.labels, dtype=float).reshape(-1)
        if lab.size and (lab.min() < -_CLIP_SLACK or lab.max() > 1 + _CLIP_SLACK):
            raise SolverError(
                f"labels left [0,1] by more than {_CLIP_SLACK}: "
                f"range [{lab.min():.6g}, {lab.max():.6g}]"
            )
        # snap sub-precision arithmetic dust so exact ties (the midpoint of a
        # symmetric chain, say) land on the closed threshold side every time
        lab = np.round(np.clip(lab, 0.0, 1.0), 12)
        lab.setflags(write=False)
        object.__setattr__(self, "labels", lab)


@dataclass(frozen=True)
class EnergyReport:
    """Boundary energies of one labeling under the three objectives."""

    l1: float       # sum of w |dL| over edges
    l2: float       # sum of w^2 dL^2 over edges
    l1plus: float   # l1 norm of U L
    total: float    # boundary_weight * l1

    def as_dict(self) -> dict:
        return {"l1": self.l1, "l2": self.l2, "l1plus": self.l1plus}


def boundary_energy(graph: SuperpixelGraph, labels, p: int = 1) -> float:
    """Sum over edges of ``w |dL|`` (p=1) or ``w^2 dL^2`` (p=2), each edge once."""
    if p not in (1, 2):
        raise InputError(f"p must be 1 or 2, got {p!r}")
    lab = np.asarray(labels, dtype=float)
    if lab.shape[0] != graph.node_count:
        raise InputError("label length does not match the graph")
    d = lab[graph.edges[:, 0]] - lab[graph.edges[:, 1]]
    if p == 1:
        return float(graph.weights @ np.abs(d))
    return float((graph.weights ** 2) @ (d * d))


def quasi_tv_energy(factor: FactorU, labels) -> float:
    """l1 norm of ``U @ labels``."""
    return float(np.abs(factor.apply(labels)).sum())


def compute_energies(graph: SuperpixelGraph, labels, factor: FactorU,
                     boundary_weight: float = 10.0) -> EnergyReport:
    l1 = boundary_energy(graph, labels, p=1)
    return EnergyReport(
        l1=l1,
        l2=boundary_energy(graph, labels, p=2),
        l1plus=quasi_tv_energy(factor, labels),
        total=boundary_weight * l1,
    )


def _label_bounds(n: int, seeds: SeedSet) -> tuple[np.ndarray, np.ndarray]:
    lo = np.zeros(n)
    hi = np.ones(n)
    idx = seeds.indices()
    if idx.size:
        vals = seeds.values_for(idx)
        lo[idx] = vals
        hi[idx] = vals
    return lo, hi


def _paired_pm_rows(op: sp.csr_matrix) -> sp.csr_matrix:
    """Rows ``[op_k, -e_k]`` and ``[-op_k, -e_k]`` interleaved per k.

    Keeping the +/- pair of each operator row adjacent preserves the
    operator's band structure in the solver's normal matrix, which the
    natural-order factorization depends on; stacking the two blocks would
    couple rows m apart and fill the factor.
    """
    m, n = op.shape
    eye = sp.eye(m, format="csr")
    stacked = sp.vstack(
        [sp.hstack([op, -eye]), sp.hstack([-op, -eye])], format="csr"
    )
    order = np.arange(2 * m).reshape(2, m).T.ravel()
    return stacked[order]


def assemble_l1_lp(operator: sp.spmatrix, seeds: SeedSet,
                   row_costs=None) -> LpProblem:
    """LP minimizing a weighted l1 norm of ``operator @ L`` with seeds pinned.

    Variables are ``[L (n); t (rows)]`` with ``-t <= operator L <= t`` written
    as paired <= rows.  ``row_costs`` defaults to all ones.
    """
    op = sp.csr_matrix(operator)
    m, n = op.shape
    seeds.validate_nodes(n)
    rows = _paired_pm_rows(op)
    costs = np.concatenate([np.zeros(n), np.ones(m) if row_costs is None
                            else np.asarray(row_costs, dtype=float)])
    lo_l, hi_l = _label_bounds(n, seeds)
    lower = np.concatenate([lo_l, np.zeros(m)])
    upper = np.concatenate([hi_l, np.full(m, np.inf)])
    return LpProblem(costs, rows, np.zeros(2 * m), lower, upper)


def assemble_compact_lp(factor: FactorU, seeds: SeedSet) -> LpProblem:
    """The square-operator LP: 2N variables, 2N inequality rows."""
    if factor.permutation is not None:
        raise InputError("compact LP requires a natural-order factor")
    return assemble_l1_lp(factor.matrix, seeds)


def assemble_conventional_lp(graph: SuperpixelGraph, seeds: SeedSet,
                             unary=None, boundary_weight: float = 10.0) -> LpProblem:
    """Edgewise LP: N + E variables, 2E rows.

    With no unary term the boundary weight cancels out of the argmin and is
    left out of the objective.  When ``unary`` per-node costs are given they
    enter the objective as-is and the boundary term is scaled by
    ``boundary_weight``.
    """
    n, e = graph.node_count, graph.edge_count
    seeds.validate_nodes(n)
    inc = build_incidence(graph)
    rows = _paired_pm_rows(sp.csr_matrix(inc.rows))
    edge_cost = graph.weights.copy()
    node_cost = np.zeros(n)
    if unary is not None:
        node_cost = np.asarray(unary, dtype=float).reshape(-1)
        if node_cost.size != n:
            raise InputError("unary cost length does not match the graph")
        edge_cost = boundary_weight * edge_cost
    costs = np.concatenate([node_cost, edge_cost])
    lo_l, hi_l = _label_bounds(n, seeds)
    lower = np.concatenate([lo_l, np.zeros(e)])
    upper = np.concatenate([hi_l, np.full(e, np.inf)])
    return LpProblem(costs, rows, np.zeros(2 * e), lower, upper)


def _require_seeds(seeds: SeedSet) -> None:
    if seeds.count == 0:
        raise InputError("at least one seed is required before solving")


def _finish_lp(sol: LpSolution, n: int, tag: str) -> LabelField:
    if sol.status in ("infeasible", "unbounded"):
        raise SolverError(f"{tag}: LP reported {sol.status}")
    # degenerate instances stall a little above tight tolerances; the best
    # iterate is still fine for labeling, so only warn when it is truly off
    if sol.status == "iteration_limit" and sol.gap > 1e-4:
        warnings.warn(
            f"{tag}: iteration limit reached (gap {sol.gap:.2e}); "
            "returning the best iterate",
            RuntimeWarning,
            stacklevel=3,
        )
    return LabelField(sol.x[:n], tag, binary=False)


def solve_compact_lp(factor: FactorU, seeds: SeedSet, tol: float = 1e-7,
                     max_iterations: int = 200) -> tuple[LabelField, LpSolution]:
    _require_seeds(seeds)
    prob = assemble_compact_lp(factor, seeds)
    sol = solve_lp(prob, tol_feas=tol, tol_gap=tol, max_iterations=max_iterations)
    return _finish_lp(sol, factor.n, "compact_lp"), sol


def solve_conventional_lp(graph: SuperpixelGraph, seeds: SeedSet,
                          unary=None, boundary_weight: float = 10.0,
                          tol: float = 1e-7,
                          max_iterations: int = 200) -> tuple[LabelField, LpSolution]:
    _require_seeds(seeds)
    prob = assemble_conventional_lp(graph, seeds, unary, boundary_weight)
    sol = solve_lp(prob, tol_feas=tol, tol_gap=tol, max_iterations=max_iterations)
    return _finish_lp(sol, graph.node_count, "conv_lp"), sol


def _check_all_components_seeded(graph: SuperpixelGraph, seeds: SeedSet) -> None:
    count, comp = graph.connected_components()
    seeded = np.zeros(count, dtype=bool)
    for v in seeds.foreground | seeds.background:
        seeded[comp[v]] = True
    for k in range(count):
        if not seeded[k]:
            raise UnseededComponentError(k, np.flatnonzero(comp == k))


def solve_random_walker(graph: SuperpixelGraph, seeds: SeedSet) -> LabelField:
    """Harmonic extension of the seeds under the unregularized smoothness matrix.

    Every connected component must contain a seed; the seed reduction then
    leaves a positive definite system even though the full matrix is only
    semi-definite.
    """
    _require_seeds(seeds)
    _check_all_components_seeded(graph, seeds)
    wt0 = build_wtilde(build_incidence(graph), epsilon=0.0)
    red = reduce_by_seeds(wt0, seeds)
    if red.free.size == 0:
        return LabelField(red.expand(np.zeros(0)), "qp", binary=False)
    factor = factorize_spd(red.matrix)
    x = factor.solve_upper(factor.solve_lower_t(red.rhs))
    return LabelField(red.expand(x), "qp", binary=False)


def solve_graph_cut(graph: SuperpixelGraph, seeds: SeedSet,
                    unary=None, boundary_weight: float = 10.0) -> tuple[LabelField, float]:
    """Exact binary minimum of the p=1 energy via min cut.

    Nodes in components with no seed get label 0.  Returns the labeling and
    the max-flow value, which is checked against the cut energy it implies.
    """
    _require_seeds(seeds)
    n = graph.node_count
    seeds.validate_nodes(n)
    src = np.zeros(n)
    snk = np.zeros(n)
    for v in seeds.foreground:
        src[v] = np.inf
    for v in seeds.background:
        snk[v] = np.inf
    caps = graph.weights
    if unary is not None:
        un = np.asarray(unary, dtype=float).reshape(-1, 2)
        if un.shape[0] != n or un.min() < 0:
            raise InputError("unary costs must be (N, 2) and non-negative")
        src = src + un[:, 0]   # paid when the node ends up background
        snk = snk + un[:, 1]   # paid when the node ends up foreground
        caps = boundary_weight * caps
    res = solve_max_flow(n, graph.edges, caps, src, snk)
    labels = res.source_side.astype(float)
    cut = boundary_energy(graph, labels, p=1)
    if unary is None:
        scale = 1.0 + abs(cut)
        if abs(res.flow - cut) > 1e-9 * scale:
            raise SolverError(
                f"max-flow value {res.flow!r} does not certify the cut energy {cut!r}"
            )
    return LabelField(labels, "gc", binary=True), res.flow


def segment(graph: SuperpixelGraph, seeds: SeedSet, method: str,
            factor: FactorU | None = None, epsilon: float | None = None,
            boundary_weight: float = 10.0, tol: float = 1e-7,
            max_iterations: int = 200) -> tuple[LabelField, EnergyReport]:
    """Run one solver and report the energies of its labeling.

    ``factor`` lets callers reuse a Cholesky factor across seed edits; it is
    computed on demand otherwise (always needed, since the energy report
    includes the l1 norm of U L).
    """
    if method not in METHODS:
        raise InputError(f"unknown method {method!r}; choose from {METHODS}")
    if factor is None:
        factor = cholesky_upper(build_wtilde(build_incidence(graph), epsilon))
    if method == "compact_lp":
        field, _ = solve_compact_lp(factor, seeds, tol, max_iterations)
    elif method == "conv_lp":
        field, _ = solve_conventional_lp(
            graph, seeds, tol=tol, max_iterations=max_iterations
        )
    elif method == "qp":
        field = solve_random_walker(graph, seeds)
    else:
        field, _ = solve_graph_cut(graph, seeds)
    report = compute_energies(graph, field.labels, factor, boundary_weight)
    return field, report
