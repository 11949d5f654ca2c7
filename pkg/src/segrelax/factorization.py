"""Sparse Cholesky of the smoothness matrix and its QR cross-check.

``cholesky_upper`` is an up-looking sparse Cholesky in natural ordering:
column k of the upper factor U is obtained by a sparse triangular solve
against the already-computed columns, with the nonzero pattern taken from the
elimination tree.  Natural ordering is the default so factors are bitwise
reproducible and directly comparable with the dense QR route; a
fill-reducing (reverse Cuthill-McKee) ordering is available behind a flag.

The QR route factors the epsilon-augmented weighted incidence
``[diag(w) D; sqrt(eps) I]`` with dense Householder QR and sign-normalizes R
to a positive diagonal.  In exact arithmetic R equals U, which the
verification suite checks numerically, along with recovering the orthogonal
factor as ``Q = M U^{-1}``.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_triangular
from scipy.sparse.csgraph import reverse_cuthill_mckee

from .errors import InputError, SingularMatrixError, SizeLimitError, SolverError
from .graph import IncidenceOperator, SmoothnessMatrix

#: dense routines (QR reference, Q recovery) refuse anything larger
DENSE_GATE = 512


@dataclass(frozen=True)
class FactorU:
    """Upper-triangular Cholesky factor with positive diagonal.

    ``matrix`` is the sparse factor of ``P A P^T`` where P is the stored
    permutation (identity when ``permutation`` is None, the default).
    """

    matrix: sp.csr_matrix
    epsilon: float
    permutation: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal()

    def apply(self, labels: np.ndarray) -> np.ndarray:
        """``U @ labels`` in the factor's ordering."""
        x = np.asarray(labels, dtype=float)
        if self.permutation is not None:
            x = x[self.permutation]
        return self.matrix.dot(x)

    def solve_upper(self, b: np.ndarray) -> np.ndarray:
        """Back substitution ``U x = b``."""
        return sp.linalg.spsolve_triangular(self.matrix, np.asarray(b, float), lower=False)

    def solve_lower_t(self, b: np.ndarray) -> np.ndarray:
        """Forward substitution ``U^T x = b``."""
        return sp.linalg.spsolve_triangular(
            self.matrix.T.tocsr(), np.asarray(b, float), lower=True
        )

    def to_coordinate_text(self) -> str:
        """One ``row col value`` line per stored entry, row-major, repr floats."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        buf = io.StringIO()
        for k in order:
            buf.write(f"{coo.row[k]} {coo.col[k]} {float(coo.data[k])!r}\n")
        return buf.getvalue()


def _etree(n: int, indptr: np.ndarray, indices: np.ndarray) -> np.ndarray:
    """Elimination tree of a symmetric matrix given by its upper triangle (CSC)."""
    parent = np.full(n, -1, dtype=np.int64)
    ancestor = np.full(n, -1, dtype=np.int64)
    for k in range(n):
        for p in range(indptr[k], indptr[k + 1]):
            i = indices[p]
            while i != -1 and i < k:
                nxt = ancestor[i]
                ancestor[i] = k
                if nxt == -1:
                    parent[i] = k
                i = nxt
    return parent


def _chol_columns(a_upper: sp.csc_matrix):
    """Up-looking factorization; returns per-column patterns, values, diagonal."""
    n = a_upper.shape[0]
    indptr, indices, data = a_upper.indptr, a_upper.indices, a_upper.data
    parent = _etree(n, indptr, indices)
    col_rows: list[np.ndarray] = [None] * n
    col_vals: list[np.ndarray] = [None] * n
    diag = np.zeros(n)
    x = np.zeros(n)       # scratch for the sparse triangular solve
    marked = np.full(n, -1, dtype=np.int64)
    for k in range(n):
        pattern = []
        akk = 0.0
        for p in range(indptr[k], indptr[k + 1]):
            i = indices[p]
            if i == k:
                akk = data[p]
                continue
            x[i] = data[p]
            # walk toward the root collecting unvisited ancestors below k
            while i != -1 and i < k and marked[i] != k:
                marked[i] = k
                pattern.append(i)
                i = parent[i]
        pattern.sort()  # ascending index order is topological for the etree
        for j in pattern:
            rows_j = col_rows[j]
            s = x[j]
            if rows_j.size:
                s -= col_vals[j] @ x[rows_j]
            x[j] = s / diag[j]
        rows_k = np.array(pattern, dtype=np.int64)
        vals_k = x[rows_k]
        pivot = akk - vals_k @ vals_k
        if not pivot > 0:  # catches NaN as well
            raise SingularMatrixError(k, float(pivot))
        diag[k] = np.sqrt(pivot)
        col_rows[k] = rows_k
        col_vals[k] = vals_k.copy()
        x[rows_k] = 0.0
        x[k] = 0.0
    return col_rows, col_vals, diag


def _columns_to_csr(n, col_rows, col_vals, diag) -> sp.csr_matrix:
    counts = np.array([r.size + 1 for r in col_rows], dtype=np.int64)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    indices = np.empty(indptr[-1], dtype=np.int64)
    data = np.empty(indptr[-1])
    for k in range(n):
        lo, hi = indptr[k], indptr[k + 1]
        indices[lo:hi - 1] = col_rows[k]
        data[lo:hi - 1] = col_vals[k]
        indices[hi - 1] = k
        data[hi - 1] = diag[k]
    return sp.csc_matrix((data, indices, indptr), shape=(n, n)).tocsr()


def factorize_spd(matrix: sp.spmatrix, epsilon: float = 0.0,
                  reorder: bool = False) -> FactorU:
    """Cholesky ``A = U^T U`` of a symmetric positive definite sparse matrix.

    Parameters
    ----------
    matrix : sparse (n, n)
        Only its upper triangle is read.
    epsilon : float
        Recorded on the factor for bookkeeping (assumed already added to A).
    reorder : bool
        Apply reverse Cuthill-McKee before factorizing.  The permutation is
        stored on the factor; note the factor then belongs to the permuted
        matrix, so cross-checks against the natural-order QR no longer apply.

    Raises
    ------
    SingularMatrixError
        On the first non-positive pivot, carrying its index.
    """
    a = matrix.tocsr()
    if a.shape[0] != a.shape[1]:
        raise InputError(f"matrix must be square, got {a.shape}")
    perm = None
    if reorder and a.shape[0] > 1:
        perm = np.asarray(reverse_cuthill_mckee(a, symmetric_mode=True), dtype=np.int64)
        a = a[perm][:, perm]
    n = a.shape[0]
    upper = sp.triu(a, format="csc")
    col_rows, col_vals, diag = _chol_columns(upper)
    u = _columns_to_csr(n, col_rows, col_vals, diag)
    return FactorU(u, float(epsilon), perm)


def cholesky_upper(wtilde: SmoothnessMatrix, reorder: bool = False) -> FactorU:
    """Upper Cholesky factor of the smoothness matrix (epsilon already inside)."""
    return factorize_spd(wtilde.matrix, wtilde.epsilon, reorder=reorder)


def augmented_operator(incidence: IncidenceOperator, epsilon: float) -> sp.csr_matrix:
    """Stack ``sqrt(eps) I`` under the weighted incidence rows.

    The Gram matrix of the result is exactly the smoothness matrix with the
    same epsilon, which is what ties the Cholesky and QR routes together.
    """
    if epsilon < 0:
        raise InputError(f"epsilon must be >= 0, got {epsilon!r}")
    gw = incidence.weighted()
    if epsilon == 0:
        return gw
    tail = np.sqrt(epsilon) * sp.eye(incidence.node_count, format="csr")
    return sp.vstack([gw, tail], format="csr")


@dataclass(frozen=True)
class OrthogonalFactor:
    """Dense matrix with orthonormal columns (thin Q of an augmented operator)."""

    q: np.ndarray

    @property
    def shape(self):
        return self.q.shape

    def orthonormality_defect(self) -> float:
        g = self.q.T @ self.q
        return float(np.abs(g - np.eye(g.shape[0])).max())


def _dense_gate(n: int, what: str) -> None:
    if n > DENSE_GATE:
        raise SizeLimitError(f"{what} is dense-only, gated at N <= {DENSE_GATE}, got N = {n}")


def qr_reference(incidence: IncidenceOperator, epsilon: float):
    """Householder QR of the augmented operator, R sign-normalized.

    Returns ``(OrthogonalFactor, R)`` with R upper triangular and
    ``diag(R) > 0``, matching the Cholesky factor's convention.  Rank
    deficiency (possible when ``epsilon == 0``) is rejected.
    """
    n = incidence.node_count
    _dense_gate(n, "qr_reference")
    m = augmented_operator(incidence, epsilon).toarray()
    q, r = np.linalg.qr(m, mode="reduced")
    d = np.diagonal(r).copy()
    scale = max(1.0, float(np.abs(m).max()))
    if np.any(np.abs(d) <= 1e-12 * scale):
        bad = int(np.argmin(np.abs(d)))
        raise InputError(
            f"augmented operator is rank deficient (|R[{bad},{bad}]| ~ {abs(d[bad]):.3g}); "
            "use epsilon > 0"
        )
    signs = np.sign(d)
    r = signs[:, None] * r
    q = q * signs[None, :]
    return OrthogonalFactor(q), r


def recover_q(incidence: IncidenceOperator, factor: FactorU) -> OrthogonalFactor:
    """Orthogonal factor implied by a Cholesky factor: ``Q = M U^{-1}``.

    M is the augmented operator built with the factor's epsilon.  The result
    has orthonormal columns because ``M^T M = U^T U``.
    """
    n = incidence.node_count
    _dense_gate(n, "recover_q")
    if factor.permutation is not None:
        raise InputError("recover_q requires a natural-order factor")
    if factor.n != n:
        raise InputError("factor size does not match the incidence operator")
    m = augmented_operator(incidence, factor.epsilon).toarray()
    u = factor.matrix.toarray()
    if np.any(factor.diagonal() <= 0):
        raise SolverError("factor has a non-positive diagonal")
    # Q^T = U^{-T} M^T via one forward-triangular solve
    qt = solve_triangular(u.T, m.T, lower=True)
    return OrthogonalFactor(qt.T)
