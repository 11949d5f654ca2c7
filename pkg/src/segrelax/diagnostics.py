"""Numerical verification of the solver suite's claimed identities.

Every structural claim behind the compact LP has a runnable check here:
positive semi-definiteness of the smoothness matrix, the Cholesky/QR factor
identity on the augmented operator, the gradient-norm corollaries, the
sandwich bounds relating the quasi-TV objective to the edgewise one (in both
the per-labeling and optimal-value forms), exact agreement of the min-cut
with exhaustive enumeration, harmonicity of the random-walker solution, and
the closed-form problem-size counts.  Checks return small report objects; the
CLI ``verify`` command runs a bundle of them and fails loudly on any miss.

Matrix 1-norms here are operator norms (max absolute column sum), matching
the triangle-inequality derivation of the sandwich bounds.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import pipeline
from .errors import InputError
from .factorization import augmented_operator, cholesky_upper, qr_reference, recover_q
from .graph import (
    SeedSet,
    SmoothnessMatrix,
    SuperpixelGraph,
    build_incidence,
    build_wtilde,
)
from .lp import solve_lp
from .relaxations import (
    assemble_compact_lp,
    assemble_l1_lp,
    boundary_energy,
    segment,
    solve_compact_lp,
    solve_conventional_lp,
    solve_graph_cut,
    solve_random_walker,
)

DENSE_EIG_GATE = 200


@dataclass
class CheckReport:
    name: str
    passed: bool
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed),
                "details": self.details}


def induced_l1_norm(matrix) -> float:
    """Operator 1-norm: maximum absolute column sum."""
    m = np.asarray(matrix) if not hasattr(matrix, "tocsc") else matrix
    if hasattr(m, "tocsc"):
        return float(abs(m).sum(axis=0).max())
    return float(np.abs(m).sum(axis=0).max())


# ---------------------------------------------------------------------------
# random instances


def random_connected_graph(node_count: int, rng, edge_prob: float | None = None,
                           max_tries: int = 200) -> SuperpixelGraph:
    """Erdos-Renyi graph resampled until connected, weights uniform in (0, 1]."""
    if node_count < 1:
        raise InputError("node_count must be >= 1")
    if edge_prob is None:
        edge_prob = min(1.0, 2.5 * np.log(max(node_count, 2)) / max(node_count, 2))
    pairs = np.array(list(itertools.combinations(range(node_count), 2)), dtype=np.int64)
    for _ in range(max_tries):
        if node_count == 1:
            chosen = np.zeros((0, 2), dtype=np.int64)
        else:
            mask = rng.random(pairs.shape[0]) < edge_prob
            chosen = pairs[mask]
        weights = 1.0 - rng.random(chosen.shape[0])   # uniform in (0, 1]
        feats = rng.random((node_count, 3))
        g = SuperpixelGraph(feats, chosen, weights)
        if g.connected_components()[0] == 1:
            return g
    raise InputError(f"no connected sample after {max_tries} tries (p={edge_prob})")


def random_grid_graph(side: int, rng) -> SuperpixelGraph:
    """4-neighbor grid with random weights (deterministic under a seeded rng)."""
    idx = np.arange(side * side).reshape(side, side)
    edges = np.concatenate(
        [
            np.column_stack([idx[:, :-1].ravel(), idx[:, 1:].ravel()]),
            np.column_stack([idx[:-1, :].ravel(), idx[1:, :].ravel()]),
        ]
    )
    weights = 1.0 - rng.random(edges.shape[0])
    feats = rng.random((side * side, 3))
    return SuperpixelGraph(feats, edges, weights)


def random_seeds(node_count: int, rng, count: int | None = None) -> SeedSet:
    """A random seed set with at least one node in each class."""
    if node_count < 2:
        raise InputError("need at least 2 nodes to seed both classes")
    if count is None:
        count = int(rng.integers(2, max(3, node_count // 2 + 1)))
    count = max(2, min(count, node_count))
    nodes = rng.choice(node_count, size=count, replace=False)
    split = int(rng.integers(1, count))
    return SeedSet.of(nodes[:split], nodes[split:])


# ---------------------------------------------------------------------------
# individual checks


def verify_psd(wtilde: SmoothnessMatrix, rng=None, trials: int = 64,
               tol: float = 1e-8) -> CheckReport:
    """Smallest eigenvalue is non-negative up to scale (dense below the gate,
    random Rayleigh quotients above)."""
    n = wtilde.node_count
    scale = max(1.0, float(np.abs(wtilde.matrix.data).max(initial=0.0)))
    if n <= DENSE_EIG_GATE:
        eigs = np.linalg.eigvalsh(wtilde.matrix.toarray())
        lam_min = float(eigs[0])
        passed = lam_min >= -tol * scale
        return CheckReport("psd", passed,
                           {"n": n, "min_eigenvalue": lam_min, "scale": scale,
                            "mode": "dense"})
    rng = np.random.default_rng(rng)
    worst = np.inf
    for _ in range(trials):
        x = rng.standard_normal(n)
        worst = min(worst, float(x @ wtilde.matrix.dot(x)) / float(x @ x))
    return CheckReport("psd", worst >= -tol * scale,
                       {"n": n, "min_rayleigh": worst, "scale": scale,
                        "mode": "randomized", "trials": trials})


def verify_factor_identity(graph: SuperpixelGraph, epsilon: float,
                           tol_factor: float = 1e-8,
                           tol_gram: float = 1e-10) -> CheckReport:
    """Cholesky factor equals the sign-normalized QR factor of the augmented
    operator, and multiplies back to the smoothness matrix."""
    inc = build_incidence(graph)
    wt = build_wtilde(inc, epsilon)
    u = cholesky_upper(wt)
    _, r = qr_reference(inc, epsilon)
    diff = float(np.abs(u.matrix.toarray() - r).max())
    gram = (u.matrix.T @ u.matrix) - wt.matrix
    scale = max(1.0, float(np.abs(wt.matrix.data).max(initial=0.0)))
    gram_rel = float(np.abs(gram.toarray()).max()) / scale
    passed = diff <= tol_factor and gram_rel <= tol_gram
    return CheckReport(
        "factor_identity", passed,
        {"n": graph.node_count, "epsilon": epsilon,
         "max_U_minus_R": diff, "gram_residual_rel": gram_rel},
    )


def verify_gradient_corollaries(graph: SuperpixelGraph, epsilon: float, rng,
                                trials: int = 100, tol_l2: float = 1e-10,
                                tol_map: float = 1e-8) -> CheckReport:
    """For random labelings: ``||U L||_2`` equals the augmented gradient norm
    (relative), and ``U L`` equals ``Q^T`` applied to the augmented gradient."""
    inc = build_incidence(graph)
    wt = build_wtilde(inc, epsilon)
    u = cholesky_upper(wt)
    q = recover_q(inc, u)
    g = augmented_operator(inc, epsilon)
    worst_l2 = 0.0
    worst_map = 0.0
    for _ in range(trials):
        lab = rng.random(graph.node_count)
        ul = u.apply(lab)
        gl = g.dot(lab)
        a = float(np.linalg.norm(ul))
        b = float(np.linalg.norm(gl))
        worst_l2 = max(worst_l2, abs(a - b) / max(a, b, 1e-300))
        worst_map = max(worst_map, float(np.abs(ul - q.q.T @ gl).max()))
    passed = worst_l2 <= tol_l2 and worst_map <= tol_map
    return CheckReport(
        "gradient_corollaries", passed,
        {"n": graph.node_count, "trials": trials,
         "worst_l2_rel": worst_l2, "worst_map_abs": worst_map,
         "q_defect": q.orthonormality_defect()},
    )


def verify_norm_bounds(graph: SuperpixelGraph, epsilon: float, rng,
                       trials: int = 100, slack: float = 1e-8) -> CheckReport:
    """Sandwich ``||GL||_1 / ||Q||_1 <= ||UL||_1 <= ||Q^T||_1 ||GL||_1`` plus
    the classical l1/l2 equivalence on the augmented gradient."""
    inc = build_incidence(graph)
    wt = build_wtilde(inc, epsilon)
    u = cholesky_upper(wt)
    q = recover_q(inc, u)
    g = augmented_operator(inc, epsilon)
    nq = induced_l1_norm(q.q)
    nqt = induced_l1_norm(q.q.T)
    rows = g.shape[0]
    violations = 0
    worst_margin = np.inf
    for _ in range(trials):
        lab = rng.random(graph.node_count)
        ul1 = float(np.abs(u.apply(lab)).sum())
        gl = g.dot(lab)
        gl1 = float(np.abs(gl).sum())
        gl2 = float(np.linalg.norm(gl))
        scale = max(1.0, ul1, gl1)
        checks = (
            ul1 - gl1 / nq,                       # lower sandwich
            nqt * gl1 - ul1,                      # upper sandwich
            gl2 - gl1 / np.sqrt(rows),            # classical lower
            gl1 - gl2,                            # classical upper
        )
        for margin in checks:
            worst_margin = min(worst_margin, margin / scale)
            if margin < -slack * scale:
                violations += 1
    return CheckReport(
        "norm_bounds", violations == 0,
        {"n": graph.node_count, "trials": trials, "violations": violations,
         "worst_margin_rel": worst_margin, "q_norm": nq, "qt_norm": nqt},
    )


def brute_force_min_energy(graph: SuperpixelGraph, seeds: SeedSet) -> tuple[float, np.ndarray]:
    """Exhaustive minimum of the p=1 energy over binary labelings (N <= ~20)."""
    n = graph.node_count
    free = np.array(sorted(set(range(n)) - set(seeds.indices().tolist())),
                    dtype=np.int64)
    if free.size > 20:
        raise InputError(f"brute force gated at 20 free nodes, got {free.size}")
    base = np.zeros(n)
    idx = seeds.indices()
    base[idx] = seeds.values_for(idx)
    best = np.inf
    best_lab = base.copy()
    for bits in range(1 << free.size):
        lab = base.copy()
        for k in range(free.size):
            lab[free[k]] = float((bits >> k) & 1)
        e = boundary_energy(graph, lab, p=1)
        if e < best:
            best = e
            best_lab = lab
    return float(best), best_lab


def verify_exactness(graph: SuperpixelGraph, seeds: SeedSet,
                     tol_rel: float = 1e-6) -> CheckReport:
    """Min-cut energy matches exhaustive enumeration exactly; the edgewise LP
    rounded at 0.5 reaches the same energy within tolerance."""
    best, _ = brute_force_min_energy(graph, seeds)
    gc_field, _ = solve_graph_cut(graph, seeds)
    gc_energy = boundary_energy(graph, gc_field.labels, p=1)
    lp_field, sol = solve_conventional_lp(graph, seeds)
    rounded = (lp_field.labels >= 0.5).astype(float)
    lp_energy = boundary_energy(graph, rounded, p=1)
    scale = max(1.0, abs(best))
    passed = (gc_energy == best) and abs(lp_energy - best) <= tol_rel * scale
    return CheckReport(
        "exactness", passed,
        {"n": graph.node_count, "brute_force": best, "graph_cut": gc_energy,
         "lp_rounded": lp_energy, "lp_status": sol.status},
    )


def _certified_optimum(sol, tol: float) -> bool:
    """Accept an honest iteration-limit stop whose final iterate still pins
    the optimal value: near-zero constraint violation and duality gap."""
    if sol.status == "optimal":
        return True
    return (sol.status == "iteration_limit"
            and sol.max_violation <= 1e3 * tol and sol.gap <= 1e3 * tol)


def verify_value_sandwich(graph: SuperpixelGraph, seeds: SeedSet, epsilon: float,
                          slack: float = 1e-6, tol: float = 1e-9) -> CheckReport:
    """Optimal values: ``opt_edgewise / ||Q||_1 <= opt_compact <=
    ||Q^T||_1 * opt_edgewise`` with both LPs on the augmented operator.

    The interior-point solver may stop at its numerical floor slightly above
    ``tol``; such a stop is accepted and its certified gap widens the slack."""
    inc = build_incidence(graph)
    wt = build_wtilde(inc, epsilon)
    u = cholesky_upper(wt)
    q = recover_q(inc, u)
    g = augmented_operator(inc, epsilon)
    sol_compact = solve_lp(assemble_compact_lp(u, seeds), tol_feas=tol, tol_gap=tol)
    sol_edge = solve_lp(assemble_l1_lp(g, seeds), tol_feas=tol, tol_gap=tol)
    nq = induced_l1_norm(q.q)
    nqt = induced_l1_norm(q.q.T)
    lo = sol_edge.objective / nq
    hi = nqt * sol_edge.objective
    mid = sol_compact.objective
    scale = max(1.0, abs(lo), abs(hi), abs(mid))
    unc = (sol_compact.gap + sol_compact.max_violation
           + sol_edge.gap + sol_edge.max_violation)
    passed = (lo - mid <= slack * scale + unc) \
        and (mid - hi <= slack * scale + unc) \
        and _certified_optimum(sol_compact, tol) \
        and _certified_optimum(sol_edge, tol)
    return CheckReport(
        "value_sandwich", passed,
        {"n": graph.node_count, "lower": lo, "compact": mid, "upper": hi,
         "statuses": [sol_compact.status, sol_edge.status],
         "certified_uncertainty": unc},
    )


def verify_harmonicity(graph: SuperpixelGraph, seeds: SeedSet,
                       tol: float = 1e-8) -> CheckReport:
    """Unseeded rows of ``W0 L`` vanish and labels stay inside the seed hull."""
    field = solve_random_walker(graph, seeds)
    wt0 = build_wtilde(build_incidence(graph), epsilon=0.0)
    resid = wt0.matrix.dot(field.labels)
    mask = np.ones(graph.node_count, dtype=bool)
    mask[seeds.indices()] = False
    worst = float(np.abs(resid[mask]).max(initial=0.0))
    inside = bool(field.labels.min() >= -tol and field.labels.max() <= 1 + tol)
    return CheckReport(
        "harmonicity", worst <= tol and inside,
        {"n": graph.node_count, "max_residual": worst, "labels_in_hull": inside},
    )


def problem_size_report(node_count: int, edge_count: int) -> dict:
    """Closed-form LP dimensions for both formulations on one graph."""
    return {
        "n": node_count,
        "edges": edge_count,
        "compact": {
            "variables": 2 * node_count,
            "inequality_rows": 2 * node_count,
            "box_bounded_variables": node_count,
            "solve_cost": "O(N^3)",
        },
        "conventional": {
            "variables": node_count + edge_count,
            "inequality_rows": 2 * edge_count,
            "box_bounded_variables": node_count,
            "solve_cost": "O(N^6) worst case in N for dense quadratic edge counts",
        },
    }


# ---------------------------------------------------------------------------
# bundled suite and timing


def run_verification_suite(seed: int = 42, instances: int = 8,
                           node_range=(6, 24), epsilon: float = 1e-4) -> list:
    """A fast bundle of every check on random connected instances."""
    rng = np.random.default_rng(seed)
    reports = []
    for k in range(instances):
        n = int(rng.integers(node_range[0], node_range[1] + 1))
        g = random_connected_graph(n, rng)
        wt = build_wtilde(build_incidence(g), epsilon)
        seeds = random_seeds(n, rng)
        reports.append(verify_psd(wt))
        reports.append(verify_factor_identity(g, epsilon))
        reports.append(verify_gradient_corollaries(g, epsilon, rng, trials=20))
        reports.append(verify_norm_bounds(g, epsilon, rng, trials=20))
        if n <= 12:
            reports.append(verify_exactness(g, seeds))
            reports.append(verify_value_sandwich(g, seeds, epsilon))
        reports.append(verify_harmonicity(g, seeds))
        sizes = problem_size_report(g.node_count, g.edge_count)
        ok = (sizes["compact"]["variables"] == 2 * n
              and sizes["compact"]["inequality_rows"] == 2 * n
              and sizes["conventional"]["variables"] == n + g.edge_count
              and sizes["conventional"]["inequality_rows"] == 2 * g.edge_count)
        reports.append(CheckReport("problem_sizes", ok, sizes))
    return reports


def timing_bench(sides=(10, 20), repetitions: int = 3, seed: int = 42,
                 methods=("compact_lp", "conv_lp", "qp", "gc")) -> list:
    """Median wall time per method on random-weight grid graphs.

    Returns rows of ``(method, node_count, median_seconds)``; instance
    construction and factorization are excluded from the timed region for the
    LP entries since the factor is reusable.
    """
    rows = []
    for side in sides:
        rng = np.random.default_rng(seed + side)
        g = random_grid_graph(side, rng)
        seeds = random_seeds(g.node_count, rng, count=max(2, g.node_count // 20))
        wt = build_wtilde(build_incidence(g), epsilon=None)
        factor = cholesky_upper(wt)
        for method in methods:
            times = []
            for _ in range(repetitions):
                t0 = time.perf_counter()
                if method == "compact_lp":
                    solve_compact_lp(factor, seeds)
                elif method == "conv_lp":
                    solve_conventional_lp(g, seeds)
                elif method == "qp":
                    solve_random_walker(g, seeds)
                elif method == "gc":
                    solve_graph_cut(g, seeds)
                else:
                    raise InputError(f"unknown method {method!r}")
                times.append(time.perf_counter() - t0)
            rows.append((method, g.node_count, float(np.median(times))))
    return rows


def bench_to_csv(rows) -> str:
    out = ["method,node_count,median_seconds"]
    for method, n, t in rows:
        out.append(f"{method},{n},{t!r}")
    return "\n".join(out) + "\n"


@dataclass(frozen=True)
class InteractiveSweepReport:
    thresholds: np.ndarray
    mean_gamma: dict     # method -> per-threshold overlap ratio, scene-averaged
    wins: dict           # method -> #thresholds where the reference >= it
    reference: str
    scenes: int
    seconds: float


def interactive_sweep_bench(scenes: int = 20, methods=("compact_lp", "qp"),
                            superpixels: int = 180, compactness: float = 0.2,
                            threshold: float = 0.08, interactions: int = 20,
                            grid_size: int = 100, seed: int = 0,
                            size=(64, 64), contrast: float = 0.4,
                            noise: float = 0.1,
                            edge_constant: float = 1e-5) -> InteractiveSweepReport:
    """Sparse-seed benchmark with simulated corrections, swept by threshold.

    Every generated scene starts from a single foreground seed at the true
    region's centroid plus the border superpixels as background.  A simulated
    user then refines each method separately: up to ``interactions`` rounds of
    solving, thresholding at ``threshold``, and seeding the largest error
    component.  The final label fields are swept over ``grid_size`` even
    thresholds and averaged across scenes; ``wins[m]`` counts the thresholds
    where the first method's mean overlap ratio is at least method ``m``'s.

    This is the regime that separates the solvers.  With seeds this sparse
    the random-walker field decays smoothly with distance from them, so its
    thresholded masks fall apart as the threshold moves off the operating
    point; the l1 objectives keep the labeled region much flatter.
    """
    t0 = time.perf_counter()
    totals = {m: np.zeros(grid_size) for m in methods}
    for j in range(scenes):
        scene = pipeline.generate_two_region(
            size=size, contrast=contrast, noise=noise,
            rng=np.random.default_rng(seed + j),
        )
        spmap = pipeline.superpixelize(scene.image, superpixels, compactness)
        graph = spmap.to_graph(edge_constant)
        factor = cholesky_upper(build_wtilde(build_incidence(graph), None))
        center = ndimage.center_of_mass(scene.truth)
        fg = int(spmap.labels[int(center[0]), int(center[1])])
        start = SeedSet.of({fg}, pipeline.border_background_seeds(spmap) - {fg})
        label_maps = {}
        for method in methods:
            seeds = start
            field_ = None
            for _ in range(interactions):
                field_, _ = segment(graph, seeds, method, factor=factor)
                mask = pipeline.threshold_labels(
                    spmap.paint(field_.labels), threshold
                )
                updated = pipeline.robot_user_step(mask, scene.truth, seeds, spmap)
                if updated is seeds:
                    break
                seeds = updated
            else:
                field_, _ = segment(graph, seeds, method, factor=factor)
            label_maps[method] = spmap.paint(field_.labels)
        report = pipeline.threshold_sweep(label_maps, scene.truth, grid_size)
        for method in methods:
            totals[method] += report.gamma[method]
    mean = {m: totals[m] / scenes for m in methods}
    reference = methods[0]
    wins = {m: int(np.sum(mean[reference] >= mean[m])) for m in methods[1:]}
    return InteractiveSweepReport(
        np.linspace(0.0, 1.0, grid_size), mean, wins, reference, scenes,
        time.perf_counter() - t0,
    )


def interactive_sweep_to_csv(report: InteractiveSweepReport) -> str:
    methods = [report.reference] + sorted(
        m for m in report.mean_gamma if m != report.reference
    )
    out = ["threshold," + ",".join(methods)]
    for i, t in enumerate(report.thresholds):
        vals = ",".join(repr(float(report.mean_gamma[m][i])) for m in methods)
        out.append(f"{float(t)!r},{vals}")
    return "\n".join(out) + "\n"
