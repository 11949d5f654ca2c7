"""The four solvers on graphs small enough to verify by hand or enumeration."""

import itertools

import numpy as np
import pytest

from segrelax.errors import InputError, SolverError, UnseededComponentError
from segrelax.factorization import cholesky_upper
from segrelax.graph import SeedSet, SuperpixelGraph, build_incidence, build_wtilde
from segrelax.relaxations import (
    METHODS,
    EnergyReport,
    LabelField,
    assemble_compact_lp,
    assemble_conventional_lp,
    assemble_l1_lp,
    boundary_energy,
    compute_energies,
    quasi_tv_energy,
    segment,
    solve_compact_lp,
    solve_conventional_lp,
    solve_graph_cut,
    solve_random_walker,
)


def _chain_factor(chain21):
    return cholesky_upper(build_wtilde(build_incidence(chain21), None))


# ---------------------------------------------------------------------------
# energies


def test_boundary_energy_chain(chain21):
    # labels (1, 1, 0): only the weight-1 edge is cut
    assert boundary_energy(chain21, [1.0, 1.0, 0.0], p=1) == 1.0
    assert boundary_energy(chain21, [1.0, 1.0, 0.0], p=2) == 1.0
    # labels (1, 0, 0): the weight-2 edge is cut; p=2 squares the weight
    assert boundary_energy(chain21, [1.0, 0.0, 0.0], p=1) == 2.0
    assert boundary_energy(chain21, [1.0, 0.0, 0.0], p=2) == 4.0
    assert boundary_energy(chain21, [0.7, 0.7, 0.7]) == 0.0
    with pytest.raises(InputError):
        boundary_energy(chain21, [1.0, 0.0, 0.0], p=3)
    with pytest.raises(InputError):
        boundary_energy(chain21, [1.0, 0.0])


def test_quasi_tv_energy_is_l1_of_factored_labels(chain21):
    f = _chain_factor(chain21)
    lab = np.array([0.3, 0.9, 0.1])
    assert quasi_tv_energy(f, lab) == np.abs(f.matrix.dot(lab)).sum()


def test_compute_energies_report(chain21):
    f = _chain_factor(chain21)
    rep = compute_energies(chain21, [1.0, 1.0, 0.0], f, boundary_weight=10.0)
    assert rep.l1 == 1.0
    assert rep.l2 == 1.0
    assert abs(rep.l1plus - 1.0) < 1e-3   # epsilon keeps it a hair off exact
    assert rep.total == 10.0
    assert set(rep.as_dict()) == {"l1", "l2", "l1plus"}


# ---------------------------------------------------------------------------
# LP assembly


def test_compact_lp_is_square_in_the_node_count(chain21, chain21_seeds):
    p = assemble_compact_lp(_chain_factor(chain21), chain21_seeds)
    assert p.n == 6    # N labels + N slacks
    assert p.m == 6    # 2N rows
    # pinned seeds are encoded in the bounds
    assert p.lower[0] == p.upper[0] == 1.0
    assert p.lower[2] == p.upper[2] == 0.0
    assert p.lower[1] == 0.0 and p.upper[1] == 1.0
    assert np.all(p.rhs == 0.0)
    assert np.array_equal(p.costs, [0, 0, 0, 1, 1, 1])


def test_compact_lp_rows_are_interleaved_pairs(chain21, chain21_seeds):
    f = _chain_factor(chain21)
    p = assemble_compact_lp(f, chain21_seeds)
    rows = p.rows.toarray()
    u = f.matrix.toarray()
    for k in range(3):
        e = np.zeros(3)
        e[k] = -1.0
        assert np.array_equal(rows[2 * k], np.concatenate([u[k], e]))
        assert np.array_equal(rows[2 * k + 1], np.concatenate([-u[k], e]))


def test_compact_lp_rejects_permuted_factor(chain21, chain21_seeds):
    f = cholesky_upper(build_wtilde(build_incidence(chain21), None), reorder=True)
    with pytest.raises(InputError):
        assemble_compact_lp(f, chain21_seeds)


def test_conventional_lp_shape(chain21, chain21_seeds):
    p = assemble_conventional_lp(chain21, chain21_seeds)
    assert p.n == 5    # N labels + E edge slacks
    assert p.m == 4    # 2E rows
    # without a unary term the objective is the raw edge weights
    assert np.array_equal(p.costs, [0, 0, 0, 2, 1])


def test_conventional_lp_with_unary_scales_the_boundary(chain21, chain21_seeds):
    p = assemble_conventional_lp(chain21, chain21_seeds,
                                 unary=[0.5, 0.0, 0.25], boundary_weight=10.0)
    assert np.array_equal(p.costs, [0.5, 0.0, 0.25, 20.0, 10.0])
    with pytest.raises(InputError):
        assemble_conventional_lp(chain21, chain21_seeds, unary=[1.0, 2.0])


def test_l1_lp_custom_row_costs(chain21, chain21_seeds):
    inc = build_incidence(chain21)
    p = assemble_l1_lp(inc.weighted(), chain21_seeds, row_costs=[3.0, 4.0])
    assert np.array_equal(p.costs, [0, 0, 0, 3, 4])


# ---------------------------------------------------------------------------
# the solvers on the (2, 1) chain


def test_compact_lp_cuts_the_weak_edge(chain21, chain21_seeds):
    field, sol = solve_compact_lp(_chain_factor(chain21), chain21_seeds)
    assert sol.status == "optimal"
    assert field.solver == "compact_lp"
    assert not field.binary
    assert field.labels[0] == 1.0 and field.labels[2] == 0.0
    assert abs(field.labels[1] - 1.0) < 1e-5
    # objective: cutting the weight-1 edge costs 1 in the factored norm
    assert abs(sol.objective - 1.0) < 1e-4


def test_conventional_lp_on_chain(chain21, chain21_seeds):
    field, sol = solve_conventional_lp(chain21, chain21_seeds)
    assert sol.status == "optimal"
    assert abs(sol.objective - 1.0) < 1e-6
    assert np.abs(field.labels - [1.0, 1.0, 0.0]).max() < 1e-5


def test_random_walker_weighted_chain(chain21, chain21_seeds):
    field = solve_random_walker(chain21, chain21_seeds)
    # harmonic: L1 = (w01^2 * 1 + w12^2 * 0) / (w01^2 + w12^2) = 4/5
    assert field.labels[0] == 1.0 and field.labels[2] == 0.0
    assert abs(field.labels[1] - 0.8) < 1e-12
    assert field.solver == "qp"


def test_random_walker_unit_chain_midpoint_is_exact():
    g = SuperpixelGraph(np.zeros((3, 1)), [[0, 1], [1, 2]], [1.0, 1.0])
    field = solve_random_walker(g, SeedSet.of({0}, {2}))
    assert field.labels[1] == 0.5


def test_graph_cut_on_chain(chain21, chain21_seeds):
    field, flow = solve_graph_cut(chain21, chain21_seeds)
    assert field.binary
    assert field.labels.tolist() == [1.0, 1.0, 0.0]
    assert flow == 1.0


def test_all_methods_respect_seeds_exactly(grid4, rng):
    from segrelax.diagnostics import random_seeds

    seeds = random_seeds(16, rng, 6)
    idx = seeds.indices()
    want = seeds.values_for(idx)
    for method in METHODS:
        field, _ = segment(grid4, seeds, method)
        assert np.array_equal(field.labels[idx], want), method


def test_all_seeded_compact_objective_is_the_energy(chain21):
    seeds = SeedSet.of({0, 1}, {2})
    f = _chain_factor(chain21)
    field, sol = solve_compact_lp(f, seeds)
    assert np.array_equal(field.labels, [1.0, 1.0, 0.0])
    assert abs(sol.objective - quasi_tv_energy(f, [1, 1, 0])) < 1e-6


def test_disconnected_components_decompose():
    g = SuperpixelGraph(np.zeros((4, 1)), [[0, 1], [2, 3]], [1.0, 1.0])
    seeds = SeedSet.of({0}, {3})
    want = [1.0, 1.0, 0.0, 0.0]
    qp = solve_random_walker(g, seeds)
    assert qp.labels.tolist() == want
    gc, flow = solve_graph_cut(g, seeds)
    assert gc.labels.tolist() == want
    assert flow == 0.0
    conv, _ = solve_conventional_lp(g, seeds)
    assert np.abs(conv.labels - want).max() < 1e-6
    compact, _ = solve_compact_lp(
        cholesky_upper(build_wtilde(build_incidence(g), None)), seeds
    )
    assert np.abs(compact.labels - want).max() < 1e-4


def test_random_walker_rejects_unseeded_component():
    g = SuperpixelGraph(np.zeros((4, 1)), [[0, 1], [2, 3]], [1.0, 1.0])
    with pytest.raises(UnseededComponentError) as err:
        solve_random_walker(g, SeedSet.of({0}, {1}))
    assert err.value.nodes == [2, 3]


def test_random_walker_star_interior_values(rng):
    # center 0 joined to four leaves; two leaves seeded
    edges = [[0, 1], [0, 2], [0, 3], [0, 4]]
    g = SuperpixelGraph(np.zeros((5, 1)), edges, np.ones(4))
    field = solve_random_walker(g, SeedSet.of({1}, {2}))
    lab = field.labels
    assert lab[1] == 1.0 and lab[2] == 0.0
    # free labels stay strictly inside the seed range
    assert 0.0 < lab[0] < 1.0
    # unseeded leaves copy the center (their only neighbor)
    assert lab[3] == lab[0] and lab[4] == lab[0]
    # harmonicity at free nodes under the unregularized matrix
    wt = build_wtilde(build_incidence(g), epsilon=0.0)
    residual = wt.matrix.dot(lab)
    assert np.abs(residual[[0, 3, 4]]).max() < 1e-12


def test_graph_cut_minimizes_energy_with_unary(rng):
    for _ in range(10):
        n = 5
        pairs = list(itertools.combinations(range(n), 2))
        keep = [p for p in pairs if rng.random() < 0.6] or [pairs[0]]
        w = rng.uniform(0.1, 1.0, len(keep))
        g = SuperpixelGraph(np.zeros((n, 1)), keep, w)
        seeds = SeedSet.of({0}, {1})
        unary = rng.uniform(0.0, 1.0, (n, 2))
        lam = 0.7

        def energy(mask):
            e = lam * boundary_energy(g, np.asarray(mask, float), p=1)
            for i, m in enumerate(mask):
                e += unary[i, 1] if m else unary[i, 0]
            return e

        field, flow = solve_graph_cut(g, seeds, unary=unary, boundary_weight=lam)
        best = min(
            energy((1, 0) + mid)
            for mid in itertools.product([0, 1], repeat=n - 2)
        )
        got = energy(tuple(int(v) for v in field.labels))
        assert abs(got - best) < 1e-9
        assert abs(flow - best) < 1e-9


def test_graph_cut_unary_validation(chain21, chain21_seeds):
    with pytest.raises(InputError):
        solve_graph_cut(chain21, chain21_seeds, unary=[[1.0, -0.1]] * 3)
    with pytest.raises(InputError):
        solve_graph_cut(chain21, chain21_seeds, unary=np.ones((2, 2)))


# ---------------------------------------------------------------------------
# LabelField and dispatch


def test_label_field_clips_dust_and_rejects_violations():
    f = LabelField([1.0 + 1e-9, -1e-12, 0.25], "qp", binary=False)
    assert f.labels[0] == 1.0 and f.labels[1] == 0.0 and f.labels[2] == 0.25
    assert not f.labels.flags.writeable
    with pytest.raises(SolverError):
        LabelField([1.1, 0.0], "qp", binary=False)
    # sub-precision dust at a tie snaps onto the threshold value
    g = LabelField([0.4999999999999999], "qp", binary=False)
    assert g.labels[0] == 0.5


def test_segment_dispatch(chain21, chain21_seeds):
    with pytest.raises(InputError):
        segment(chain21, chain21_seeds, "simulated_annealing")
    with pytest.raises(InputError):
        segment(chain21, SeedSet.of(set(), set()), "qp")
    field, rep = segment(chain21, chain21_seeds, "gc")
    assert isinstance(rep, EnergyReport)
    assert rep.l1 == 1.0 and rep.total == 10.0


def test_segment_reuses_a_provided_factor(chain21, chain21_seeds):
    f = _chain_factor(chain21)
    a, _ = segment(chain21, chain21_seeds, "compact_lp", factor=f)
    b, _ = segment(chain21, chain21_seeds, "compact_lp")
    assert np.array_equal(a.labels, b.labels)


def test_methods_tuple_is_the_public_contract():
    assert METHODS == ("compact_lp", "conv_lp", "qp", "gc")
