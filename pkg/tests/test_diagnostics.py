"""Verification-suite checks, random instance generators, and benches."""

import numpy as np
import pytest

from segrelax.diagnostics import (
    CheckReport,
    bench_to_csv,
    brute_force_min_energy,
    induced_l1_norm,
    interactive_sweep_bench,
    interactive_sweep_to_csv,
    problem_size_report,
    random_connected_graph,
    random_grid_graph,
    random_seeds,
    run_verification_suite,
    timing_bench,
    verify_exactness,
    verify_factor_identity,
    verify_gradient_corollaries,
    verify_harmonicity,
    verify_norm_bounds,
    verify_psd,
    verify_value_sandwich,
)
from segrelax.errors import InputError
from segrelax.graph import SeedSet, build_incidence, build_wtilde

EXPECTED_CHECKS = {
    "psd", "factor_identity", "gradient_corollaries", "norm_bounds",
    "exactness", "value_sandwich", "harmonicity", "problem_sizes",
}


def test_suite_all_green():
    reports = run_verification_suite()
    assert len(reports) >= 48            # six checks per instance, eight instances
    assert {r.name for r in reports} <= EXPECTED_CHECKS
    failed = [r for r in reports if not r.passed]
    assert failed == [], [r.as_dict() for r in failed]


def test_report_as_dict():
    r = CheckReport("demo", True, {"k": 1})
    assert r.as_dict() == {"name": "demo", "passed": True, "details": {"k": 1}}


def test_random_connected_graph(rng):
    g = random_connected_graph(12, rng)
    assert g.node_count == 12
    assert g.connected_components()[0] == 1
    assert np.all(g.weights > 0) and np.all(g.weights <= 1)
    single = random_connected_graph(1, rng)
    assert single.node_count == 1 and single.edge_count == 0
    with pytest.raises(InputError):
        random_connected_graph(0, rng)


def test_random_grid_graph_counts(rng):
    g = random_grid_graph(5, rng)
    assert g.node_count == 25
    assert g.edge_count == 2 * 5 * (5 - 1)
    assert g.connected_components()[0] == 1


def test_random_seeds_cover_both_classes(rng):
    for _ in range(20):
        s = random_seeds(9, rng)
        assert len(s.foreground) >= 1 and len(s.background) >= 1
        assert all(0 <= i < 9 for i in s.foreground | s.background)
    with pytest.raises(InputError):
        random_seeds(1, rng)


def test_induced_l1_norm_is_max_column_sum():
    m = np.array([[1.0, -4.0], [2.0, 0.5]])
    assert induced_l1_norm(m) == 4.5
    import scipy.sparse as sp
    assert induced_l1_norm(sp.csr_matrix(m)) == 4.5


def test_psd_dense_and_randomized(rng):
    small = build_wtilde(build_incidence(random_connected_graph(10, rng)), 1e-6)
    rep = verify_psd(small)
    assert rep.passed and rep.details["mode"] == "dense"
    assert rep.details["min_eigenvalue"] >= -1e-8
    big = build_wtilde(build_incidence(random_grid_graph(15, rng)), 1e-6)
    rep = verify_psd(big, rng=0)
    assert rep.passed and rep.details["mode"] == "randomized"


def test_factor_identity_check(rng):
    rep = verify_factor_identity(random_connected_graph(9, rng), 1e-4)
    assert rep.passed
    assert rep.details["max_U_minus_R"] <= 1e-8
    assert rep.details["gram_residual_rel"] <= 1e-10


def test_gradient_corollaries_check(rng):
    g = random_connected_graph(9, rng)
    rep = verify_gradient_corollaries(g, 1e-4, rng, trials=30)
    assert rep.passed
    assert rep.details["worst_l2_rel"] <= 1e-10
    assert rep.details["worst_map_abs"] <= 1e-8


def test_norm_bounds_check(rng):
    g = random_connected_graph(9, rng)
    rep = verify_norm_bounds(g, 1e-4, rng, trials=30)
    assert rep.passed and rep.details["violations"] == 0


def test_brute_force_on_chain(chain21, chain21_seeds):
    best, lab = brute_force_min_energy(chain21, chain21_seeds)
    assert best == 1.0                   # cutting the weak edge costs 1
    assert np.array_equal(lab, [1.0, 1.0, 0.0])


def test_brute_force_gate(rng):
    g = random_grid_graph(5, rng)
    with pytest.raises(InputError):
        brute_force_min_energy(g, SeedSet.of({0}, {24}))


def test_exactness_check(chain21, chain21_seeds):
    rep = verify_exactness(chain21, chain21_seeds)
    assert rep.passed
    assert rep.details["graph_cut"] == rep.details["brute_force"] == 1.0


def test_value_sandwich_check(chain21, chain21_seeds):
    rep = verify_value_sandwich(chain21, chain21_seeds, 1e-4)
    assert rep.passed
    assert rep.details["lower"] <= rep.details["compact"] + 1e-6
    assert rep.details["compact"] <= rep.details["upper"] + 1e-6


def test_harmonicity_check(chain21, chain21_seeds):
    rep = verify_harmonicity(chain21, chain21_seeds)
    assert rep.passed
    assert rep.details["max_residual"] <= 1e-8


def test_problem_size_report_numbers():
    sizes = problem_size_report(5, 7)
    assert sizes["compact"]["variables"] == 10
    assert sizes["compact"]["inequality_rows"] == 10
    assert sizes["conventional"]["variables"] == 12
    assert sizes["conventional"]["inequality_rows"] == 14


def test_timing_bench_rows():
    rows = timing_bench(sides=(4,), repetitions=1)
    assert [r[0] for r in rows] == ["compact_lp", "conv_lp", "qp", "gc"]
    for method, n, t in rows:
        assert n == 16 and t > 0


def test_bench_csv_roundtrip():
    text = bench_to_csv([("qp", 16, 0.125), ("gc", 16, 0.5)])
    lines = text.strip().split("\n")
    assert lines[0] == "method,node_count,median_seconds"
    method, n, t = lines[1].split(",")
    assert (method, int(n), float(t)) == ("qp", 16, 0.125)


@pytest.fixture(scope="module")
def small_sweep():
    return interactive_sweep_bench(scenes=2, superpixels=40, interactions=3,
                                   grid_size=12, size=(32, 32))


def test_interactive_sweep_shapes(small_sweep):
    rep = small_sweep
    assert rep.reference == "compact_lp" and rep.scenes == 2
    assert rep.thresholds.shape == (12,)
    assert set(rep.mean_gamma) == {"compact_lp", "qp"}
    for g in rep.mean_gamma.values():
        assert g.shape == (12,) and np.all(g >= 0) and np.all(g <= 1)
    assert set(rep.wins) == {"qp"}
    assert 0 <= rep.wins["qp"] <= 12
    assert rep.seconds > 0


def test_interactive_sweep_reproducible(small_sweep):
    again = interactive_sweep_bench(scenes=2, superpixels=40, interactions=3,
                                    grid_size=12, size=(32, 32))
    for m in small_sweep.mean_gamma:
        assert np.array_equal(small_sweep.mean_gamma[m], again.mean_gamma[m])
    assert small_sweep.wins == again.wins


def test_interactive_sweep_csv(small_sweep):
    text = interactive_sweep_to_csv(small_sweep)
    lines = text.strip().split("\n")
    assert lines[0] == "threshold,compact_lp,qp"
    assert len(lines) == 1 + 12
    first = [float(v) for v in lines[1].split(",")]
    assert first[0] == 0.0
    assert first[1] == float(small_sweep.mean_gamma["compact_lp"][0])
