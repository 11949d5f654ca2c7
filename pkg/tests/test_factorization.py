"""Sparse Cholesky, the QR cross-check, and the recovered orthogonal factor."""

import numpy as np
import pytest
import scipy.sparse as sp

from segrelax.diagnostics import random_connected_graph
from segrelax.errors import InputError, SingularMatrixError, SizeLimitError
from segrelax.factorization import (
    augmented_operator,
    cholesky_upper,
    factorize_spd,
    qr_reference,
    recover_q,
)
from segrelax.graph import build_incidence, build_wtilde


def _random_spd(n, rng, shift=None):
    b = rng.standard_normal((n, n))
    a = b.T @ b + (shift if shift is not None else n) * np.eye(n)
    return sp.csr_matrix(a)


def test_factor_matches_lapack(rng):
    for n in (1, 2, 5, 17, 30):
        a = _random_spd(n, rng)
        u = factorize_spd(a).matrix.toarray()
        ref = np.linalg.cholesky(a.toarray()).T
        assert np.abs(u - ref).max() < 1e-10 * max(1.0, np.abs(ref).max())


def test_factor_gram_identity(rng):
    g = random_connected_graph(25, rng)
    wt = build_wtilde(build_incidence(g), epsilon=1e-4)
    u = cholesky_upper(wt)
    gram = (u.matrix.T @ u.matrix).toarray()
    scale = np.abs(wt.matrix.data).max()
    assert np.abs(gram - wt.matrix.toarray()).max() < 1e-12 * scale
    assert np.all(u.diagonal() > 0)
    assert u.epsilon == 1e-4


def test_factor_is_upper_triangular(rng):
    a = _random_spd(12, rng)
    u = factorize_spd(a).matrix.toarray()
    assert np.array_equal(u, np.triu(u))


def test_factor_rejects_indefinite():
    a = sp.csr_matrix(np.array([[1.0, 2.0], [2.0, 1.0]]))  # eigenvalues 3, -1
    with pytest.raises(SingularMatrixError) as err:
        factorize_spd(a)
    assert err.value.index == 1
    with pytest.raises(InputError):
        factorize_spd(sp.csr_matrix(np.zeros((2, 3))))


def test_reordered_factor_belongs_to_permuted_matrix(rng):
    g = random_connected_graph(20, rng)
    wt = build_wtilde(build_incidence(g), epsilon=1e-6)
    f = cholesky_upper(wt, reorder=True)
    assert f.permutation is not None
    p = f.permutation
    permuted = wt.matrix[p][:, p].toarray()
    gram = (f.matrix.T @ f.matrix).toarray()
    assert np.abs(gram - permuted).max() < 1e-12
    # apply() hides the permutation from the caller
    x = rng.random(20)
    assert np.allclose(f.apply(x), f.matrix.dot(x[p]))


def test_triangular_solves_roundtrip(rng):
    a = _random_spd(15, rng)
    f = factorize_spd(a)
    b = rng.standard_normal(15)
    x = f.solve_upper(b)
    assert np.abs(f.matrix.dot(x) - b).max() < 1e-10
    y = f.solve_lower_t(b)
    assert np.abs(f.matrix.T.dot(y) - b).max() < 1e-10
    # the pair solves the full system U^T U z = b
    z = f.solve_upper(f.solve_lower_t(b))
    assert np.abs(a.dot(z) - b).max() < 1e-8


def test_coordinate_text_reconstructs_factor(rng):
    a = _random_spd(6, rng)
    f = factorize_spd(a)
    rows, cols, vals = [], [], []
    for line in f.to_coordinate_text().splitlines():
        i, j, v = line.split()
        rows.append(int(i))
        cols.append(int(j))
        vals.append(float(v))
    back = sp.coo_matrix((vals, (rows, cols)), shape=(6, 6)).toarray()
    assert np.array_equal(back, f.matrix.toarray())


def test_augmented_operator_gram_is_wtilde(rng):
    g = random_connected_graph(10, rng)
    inc = build_incidence(g)
    for eps in (0.0, 1e-6, 0.3):
        m = augmented_operator(inc, eps)
        rows = g.edge_count + (10 if eps > 0 else 0)
        assert m.shape == (rows, 10)
        wt = build_wtilde(inc, eps)
        gram = (m.T @ m).toarray()
        assert np.abs(gram - wt.matrix.toarray()).max() < 1e-12
    with pytest.raises(InputError):
        augmented_operator(inc, -1e-9)


def test_cholesky_equals_qr_factor(rng):
    for _ in range(5):
        n = int(rng.integers(4, 28))
        g = random_connected_graph(n, rng)
        inc = build_incidence(g)
        wt = build_wtilde(inc, epsilon=1e-4)
        u = cholesky_upper(wt)
        q, r = qr_reference(inc, 1e-4)
        assert np.abs(u.matrix.toarray() - r).max() < 1e-8
        assert q.orthonormality_defect() < 1e-12
        assert np.all(np.diagonal(r) > 0)


def test_qr_rejects_rank_deficiency():
    # a triangle with epsilon 0: the constant vector is in the null space,
    # so R picks up a zero diagonal entry
    from segrelax.graph import SuperpixelGraph

    g = SuperpixelGraph(np.zeros((3, 1)), [[0, 1], [1, 2], [0, 2]], [1.0, 1.0, 1.0])
    with pytest.raises(InputError):
        qr_reference(build_incidence(g), 0.0)


def test_recover_q_matches_qr(rng):
    g = random_connected_graph(12, rng)
    inc = build_incidence(g)
    u = cholesky_upper(build_wtilde(inc, epsilon=1e-4))
    q = recover_q(inc, u)
    q_ref, _ = qr_reference(inc, 1e-4)
    assert q.orthonormality_defect() < 1e-10
    assert np.abs(q.q - q_ref.q).max() < 1e-8
    # reconstruction: Q U equals the augmented operator
    m = augmented_operator(inc, 1e-4).toarray()
    assert np.abs(q.q @ u.matrix.toarray() - m).max() < 1e-10


def test_recover_q_refuses_permuted_factor(rng):
    g = random_connected_graph(10, rng)
    inc = build_incidence(g)
    f = cholesky_upper(build_wtilde(inc, epsilon=1e-4), reorder=True)
    with pytest.raises(InputError):
        recover_q(inc, f)


def test_dense_gates():
    from segrelax.graph import SuperpixelGraph

    n = 600
    edges = np.column_stack([np.arange(n - 1), np.arange(1, n)])
    g = SuperpixelGraph(np.zeros((n, 1)), edges, np.ones(n - 1))
    inc = build_incidence(g)
    with pytest.raises(SizeLimitError):
        qr_reference(inc, 1e-4)
    with pytest.raises(SizeLimitError):
        recover_q(inc, cholesky_upper(build_wtilde(inc, 1e-4)))
