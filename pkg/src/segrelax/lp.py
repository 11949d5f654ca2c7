"""Box-constrained linear programming.

Problems are stated as

    minimize    c^T x
    subject to  A x <= b,   lower <= x <= upper

with infinite bounds allowed.  Two solvers are provided:

* :func:`solve_lp`, a Mehrotra predictor-corrector primal-dual interior-point
  method.  The problem is first reduced to equality standard form with finite
  lower bounds at zero: variables pinned by ``lower == upper`` are substituted
  out (interior iterates must stay strictly inside their bounds, so pinned
  labels come back exact), finite lower bounds are shifted to zero, variables
  with only an upper bound are flipped, doubly-free variables are split, and a
  slack is appended per inequality row.  Each iteration solves the normal
  equations ``A Theta A^T dy = r``, densely (LAPACK Cholesky) up to
  ``DENSE_NORMAL_GATE`` rows and with a sparse LU factorization above that.
  The dense route is the primary one at desk scale: its cost depends only on
  the row count, which keeps the relative cost of the LP formulations in line
  with their problem sizes, and it shrugs off the near-singular scaling
  matrices that appear close to convergence instead of failing outright.

* :func:`solve_lp_dense_reference`, an exact brute-force check for tiny
  problems: it enumerates candidate vertices as intersections of n active
  constraints drawn from rows and bounds (infinite bounds boxed at +-1e6) and
  settles unboundedness with a recession-direction subproblem.  Gated hard by
  size and by the number of candidate combinations.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.sparse.linalg import splu

from .errors import InputError, SizeLimitError, SolverError

_STATUSES = ("optimal", "infeasible", "unbounded", "iteration_limit")

#: normal-equation systems up to this many rows are solved densely
DENSE_NORMAL_GATE = 2048


@dataclass(frozen=True)
class LpProblem:
    """``min c^T x  s.t.  rows @ x <= rhs,  lower <= x <= upper``."""

    costs: np.ndarray
    rows: sp.csr_matrix
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.costs, dtype=float).reshape(-1)
        rows = sp.csr_matrix(self.rows)
        b = np.asarray(self.rhs, dtype=float).reshape(-1)
        lo = np.asarray(self.lower, dtype=float).reshape(-1)
        hi = np.asarray(self.upper, dtype=float).reshape(-1)
        n = c.size
        if rows.shape[1] != n or lo.size != n or hi.size != n:
            raise InputError("inconsistent variable dimensions")
        if rows.shape[0] != b.size:
            raise InputError("row count does not match rhs")
        if not np.all(np.isfinite(c)):
            raise InputError("costs must be finite")
        if not np.all(np.isfinite(b)):
            raise InputError("rhs must be finite")
        if not np.all(np.isfinite(rows.data)):
            raise InputError("row coefficients must be finite")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)) or np.any(lo > hi):
            raise InputError("bounds must satisfy lower <= upper")
        object.__setattr__(self, "costs", c)
        object.__setattr__(self, "rhs", b)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "rows", rows)

    @property
    def n(self) -> int:
        return self.costs.size

    @property
    def m(self) -> int:
        return self.rows.shape[0]

    def violation(self, x: np.ndarray) -> float:
        """Largest constraint or bound violation at x (0 when feasible)."""
        x = np.asarray(x, dtype=float)
        worst = 0.0
        if self.m:
            worst = max(worst, float((self.rows.dot(x) - self.rhs).max(initial=0.0)))
        worst = max(worst, float((self.lower - x).max(initial=0.0)))
        worst = max(worst, float((x - self.upper).max(initial=0.0)))
        return worst

    def to_debug_json(self) -> str:
        coo = self.rows.tocoo()

        def _list(a):
            return [None if not math.isfinite(v) else v for v in a.tolist()]

        return json.dumps(
            {
                "n": self.n,
                "m": self.m,
                "costs": self.costs.tolist(),
                "rows": {
                    "i": coo.row.tolist(),
                    "j": coo.col.tolist(),
                    "v": coo.data.tolist(),
                },
                "rhs": self.rhs.tolist(),
                "lower": _list(self.lower),
                "upper": _list(self.upper),
            },
            sort_keys=True,
        )

    @classmethod
    def from_debug_json(cls, text: str) -> "LpProblem":
        try:
            doc = json.loads(text)
            n, m = int(doc["n"]), int(doc["m"])
            rows = sp.coo_matrix(
                (doc["rows"]["v"], (doc["rows"]["i"], doc["rows"]["j"])), shape=(m, n)
            ).tocsr()
            lo = np.array([-np.inf if v is None else v for v in doc["lower"]], dtype=float)
            hi = np.array([np.inf if v is None else v for v in doc["upper"]], dtype=float)
            return cls(np.asarray(doc["costs"], float), rows,
                       np.asarray(doc["rhs"], float), lo, hi)
        except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
            raise InputError(f"malformed LP debug JSON: {exc}") from exc


@dataclass
class LpSolution:
    x: np.ndarray
    objective: float
    status: str
    iterations: int
    max_violation: float
    gap: float = 0.0

    def __post_init__(self):
        if self.status not in _STATUSES:
            raise InputError(f"unknown status {self.status!r}")


# ---------------------------------------------------------------------------
# pinned-variable substitution, shared by both solvers


@dataclass
class _Pinned:
    keep: np.ndarray        # original indices of surviving variables
    pinned: np.ndarray
    pinned_vals: np.ndarray
    offset: float
    sub: LpProblem | None   # None when every variable is pinned
    row_violation: float    # rows violated by pinned values alone (sub is None)

    def expand(self, x_sub: np.ndarray, n: int) -> np.ndarray:
        x = np.empty(n)
        x[self.pinned] = self.pinned_vals
        if self.keep.size:
            x[self.keep] = x_sub
        return x


def _substitute_pinned(problem: LpProblem) -> _Pinned:
    lo, hi = problem.lower, problem.upper
    pinned_mask = lo == hi
    pinned = np.flatnonzero(pinned_mask)
    keep = np.flatnonzero(~pinned_mask)
    vals = lo[pinned]
    offset = float(problem.costs[pinned] @ vals) if pinned.size else 0.0
    if keep.size == 0:
        viol = 0.0
        if problem.m:
            viol = float(
                (problem.rows.dot(np.where(pinned_mask, lo, 0.0)) - problem.rhs)
                .max(initial=0.0)
            )
        return _Pinned(keep, pinned, vals, offset, None, viol)
    rows = problem.rows.tocsc()
    rhs = problem.rhs
    if pinned.size and problem.m:
        rhs = rhs - rows[:, pinned].dot(vals)
    sub = LpProblem(problem.costs[keep], rows[:, keep].tocsr(), rhs,
                    lo[keep], hi[keep])
    return _Pinned(keep, pinned, vals, offset, sub, 0.0)


# ---------------------------------------------------------------------------
# interior-point solver


@dataclass
class _Standard:
    """Equality form ``min c z : A z = b, 0 <= z <= u`` plus the map back."""

    a: sp.csr_matrix
    b: np.ndarray
    c: np.ndarray
    u: np.ndarray
    base: np.ndarray      # per original var: additive base (lo, hi, or 0)
    sign: np.ndarray      # +1 shift, -1 flip
    split_col: np.ndarray # column index of the negative part, -1 if none
    n_orig: int

    def restore(self, z: np.ndarray) -> np.ndarray:
        n = self.n_orig
        x = self.base + self.sign * z[:n]
        has_split = self.split_col >= 0
        if has_split.any():
            x[has_split] -= z[self.split_col[has_split]]
        return x


def _standardize(problem: LpProblem) -> _Standard:
    n, m = problem.n, problem.m
    lo, hi = problem.lower, problem.upper
    base = np.zeros(n)
    sign = np.ones(n)
    u = np.full(n, np.inf)
    split_col = np.full(n, -1, dtype=np.int64)
    extra = []
    for i in range(n):
        if np.isfinite(lo[i]):
            base[i] = lo[i]
            u[i] = hi[i] - lo[i]
        elif np.isfinite(hi[i]):
            base[i] = hi[i]
            sign[i] = -1.0
        else:
            split_col[i] = n + len(extra)
            extra.append(i)
    cols = problem.rows.tocsc()
    scaled = cols.dot(sp.diags(sign))
    blocks = [scaled]
    c = problem.costs * sign
    if extra:
        neg = -cols[:, extra]
        blocks.append(neg)
        c = np.concatenate([c, -problem.costs[extra]])
        u = np.concatenate([u, np.full(len(extra), np.inf)])
    blocks.append(sp.eye(m, format="csc"))  # row slacks
    c = np.concatenate([c, np.zeros(m)])
    u = np.concatenate([u, np.full(m, np.inf)])
    a = sp.hstack(blocks, format="csr")
    b = problem.rhs - problem.rows.dot(base)
    return _Standard(a, np.asarray(b, float), c, u, base, sign, split_col, n)


def _bounds_only_solution(problem: LpProblem) -> LpSolution:
    c, lo, hi = problem.costs, problem.lower, problem.upper
    x = np.zeros(problem.n)
    for i in range(problem.n):
        if c[i] > 0:
            if not np.isfinite(lo[i]):
                return LpSolution(x, -np.inf, "unbounded", 0, 0.0)
            x[i] = lo[i]
        elif c[i] < 0:
            if not np.isfinite(hi[i]):
                return LpSolution(x, -np.inf, "unbounded", 0, 0.0)
            x[i] = hi[i]
        else:
            x[i] = lo[i] if np.isfinite(lo[i]) else (hi[i] if np.isfinite(hi[i]) else 0.0)
    return LpSolution(x, float(c @ x), "optimal", 0, 0.0)


def _max_step(v: np.ndarray, dv: np.ndarray) -> float:
    neg = dv < 0
    if not neg.any():
        return np.inf
    return float((-v[neg] / dv[neg]).min())


def _mehrotra(a: sp.csr_matrix, b, c, u, tol_feas, tol_gap, max_iter):
    """Returns (z, y, status, iterations, stats) for min c z : A z = b, 0<=z<=u."""
    m, n = a.shape
    bounded = np.isfinite(u)
    nb = int(bounded.sum())
    at = a.T.tocsr()
    scale_b = 1.0 + float(np.abs(b).max(initial=0.0))
    scale_c = 1.0 + float(np.abs(c).max(initial=0.0))
    scale_u = 1.0 + float(np.abs(u[bounded]).max(initial=0.0)) if nb else 1.0

    x = np.ones(n)
    if nb:
        x[bounded] = np.minimum(1.0, u[bounded] / 2.0)
    w = u[bounded] - x[bounded] if nb else np.zeros(0)
    y = np.zeros(m)
    z = np.ones(n)
    v = np.ones(nb)

    best = None
    best_score = np.inf
    status = "iteration_limit"
    it = 0
    stalled = 0
    mu_floor = np.inf
    gap = np.inf
    feas_seen = np.inf   # best primal feasibility ever reached
    dual_seen = np.inf
    for it in range(1, max_iter + 1):
        if not (np.isfinite(x).all() and np.isfinite(y).all()
                and np.isfinite(z).all() and (not nb or np.isfinite(v).all())):
            break  # a runaway step overflowed; fall back to the best iterate
        with np.errstate(over="ignore", invalid="ignore"):
            rb = b - a.dot(x)
            ru = (u[bounded] - x[bounded] - w) if nb else np.zeros(0)
            vhat = np.zeros(n)
            if nb:
                vhat[bounded] = v
            rc = c - at.dot(y) - z + vhat
            mu = (x @ z + (w @ v if nb else 0.0)) / (n + nb)
            pobj = float(c @ x)
            dobj = float(b @ y - (u[bounded] @ v if nb else 0.0))
        pinf = float(np.abs(rb).max(initial=0.0)) / scale_b
        binf = (float(np.abs(ru).max(initial=0.0)) / scale_u) if nb else 0.0
        dinf = float(np.abs(rc).max(initial=0.0)) / scale_c
        gap = abs(pobj - dobj) / (1.0 + abs(pobj))

        feas_seen = min(feas_seen, max(pinf, binf))
        dual_seen = min(dual_seen, dinf)
        score = max(pinf, binf, dinf, gap)
        # mu can legitimately climb while the duals scale up to a large cost
        # vector, so count a stall only when the KKT score is flat as well
        stalled = 0 if (mu < 0.9 * mu_floor or score < 0.9 * best_score) \
            else stalled + 1
        mu_floor = min(mu_floor, mu)
        if score < best_score:
            best_score = score
            best = (x.copy(), y.copy(), gap, it)
        if max(pinf, binf) <= tol_feas and dinf <= tol_feas and gap <= tol_gap:
            status = "optimal"
            break
        # divergence heuristics: a feasible side whose objective is exploding
        # certifies the other side is empty.  Never conclude either once the
        # matching residual has actually been small at some iterate.
        if dobj > 1e10 * (scale_b + scale_c) and dinf <= 1e-6 and feas_seen > 1e-6:
            status = "infeasible"
            break
        if pobj < -1e10 * (scale_b + scale_c) and max(pinf, binf) <= 1e-6 \
                and dual_seen > 1e-6:
            status = "unbounded"
            break
        # diverging iterates normalized by their own magnitude give approximate
        # Farkas certificates even when the residuals at this iterate are not
        # small: a dual ray with b y - u v > 0 proves primal infeasibility and
        # a primal ray with c x < 0 proves unboundedness
        ynorm = max(float(np.abs(y).max(initial=0.0)),
                    float(np.abs(v).max(initial=0.0)) if nb else 0.0)
        if ynorm > 1e4 * (scale_b + scale_c) and feas_seen > 1e-6:
            ray_gain = dobj / ynorm
            ray_viol = float((at.dot(y) - vhat).max(initial=0.0)) / ynorm
            # any feasible x would force gain <= viol * sum(x), so a gain
            # clear of that bound certifies there is none
            if ray_viol <= 1e-6 and \
                    ray_gain > max(1e-6, 10.0 * ray_viol * (n * scale_u + 1.0)):
                status = "infeasible"
                break
        xnorm = float(np.abs(x).max(initial=0.0))
        if xnorm > 1e4 * (scale_b + scale_c) and dual_seen > 1e-6:
            ray_loss = -pobj / xnorm
            ray_res = float(np.abs(rb).max(initial=0.0)) / xnorm
            if ray_res <= 1e-6 and ray_loss > max(1e-6, 1e3 * ray_res):
                status = "unbounded"
                break
        # complementarity can collapse with the primal residual stuck at a few
        # 1e-6 relative on feasible problems whose region has no interior, so
        # this last-resort conclusion needs a residual well clear of that
        if mu < 1e-14 and max(pinf, binf) > 1e-4 and feas_seen > 1e-4:
            status = "infeasible"
            break
        if mu < 1e-14 and dinf > 1e-4 and dual_seen > 1e-4:
            status = "unbounded"
            break
        if mu < 1e-16 and it > 5:
            break  # stalled at the numerical floor; report the best iterate
        if stalled >= 10 and feas_seen <= 1e-6 and dual_seen <= 1e-6:
            # grinding without progress on a problem both of whose sides have
            # been reached; infeasible or unbounded instances keep iterating
            # so the divergence tests above can come to their conclusion
            break

        d = z / x
        if nb:
            d[bounded] += v / w
        with np.errstate(divide="ignore", over="ignore"):
            theta = 1.0 / d
        bad = ~np.isfinite(theta)
        if bad.any():
            # complementarity products underflowed to zero for these columns;
            # carry on with the largest finite scaling instead
            theta[bad] = float(theta[~bad].max(initial=1.0))
        # keep the static regularization tiny: scaling it with the Theta
        # diagonal (which blows up near convergence) distorts the steps
        reg = 1e-12
        solve_normal = None
        for attempt in range(4):
            normal = (a.multiply(theta)).dot(at)
            try:
                if m <= DENSE_NORMAL_GATE:
                    nd = normal.toarray()
                    nd[np.diag_indices_from(nd)] += reg
                    cf = cho_factor(nd, lower=False, check_finite=False)
                    fd = np.abs(np.diagonal(cf[0]))
                    if not np.all(fd > 1e-15 * fd.max()):
                        # LAPACK accepts what sparse LU would reject; treat a
                        # collapsed pivot ratio as the same singularity so the
                        # escalation below stays in charge of the recovery
                        raise LinAlgError("effectively singular")
                    solve_normal = (
                        lambda rhs, cf=cf: cho_solve(cf, rhs, check_finite=False)
                    )
                else:
                    # natural ordering, matching the factorization module;
                    # the assembled problems keep their normal matrices
                    # banded, so fill stays modest without a reordering
                    lu = splu((normal + reg * sp.eye(m)).tocsc(),
                              permc_spec="NATURAL")
                    solve_normal = lu.solve
                break
            except (LinAlgError, RuntimeError):
                if attempt == 0:
                    # columns pinned at a bound push the Theta spread past
                    # 1e16 and A Theta A^T goes exactly singular; flooring
                    # relative to the peak restores factorability at the cost
                    # of slightly blunted steps, so only do it on failure
                    np.maximum(theta, 1e-16 * float(theta.max()), out=theta)
                else:
                    diag = 1.0 + float(np.abs(normal.diagonal()).max(initial=0.0))
                    reg = diag * 10.0 ** (2 * attempt - 14)
        if solve_normal is None:
            break  # singular at the numerical floor; keep the best iterate

        def newton(rxz, rwv):
            # overflow to inf is tolerated while iterates diverge; the finite
            # guard at the loop head ends the solve on the best iterate
            with np.errstate(over="ignore", invalid="ignore"):
                rhat = rc - rxz / x
                if nb:
                    rhat = rhat.copy()
                    rhat[bounded] += (rwv - v * ru) / w
                dy = solve_normal(rb + a.dot(theta * rhat))
                dx = theta * (at.dot(dy) - rhat)
                dz = (rxz - z * dx) / x
                if nb:
                    dw = ru - dx[bounded]
                    dv = (rwv - v * dw) / w
                else:
                    dw = np.zeros(0)
                    dv = np.zeros(0)
            return dx, dy, dz, dw, dv

        # affine scaling (predictor) step
        dx, dy, dz, dw, dv = newton(-(x * z), -(w * v) if nb else np.zeros(0))
        ap = min(1.0, _max_step(x, dx), _max_step(w, dw) if nb else np.inf)
        ad = min(1.0, _max_step(z, dz), _max_step(v, dv) if nb else np.inf)
        with np.errstate(over="ignore", invalid="ignore"):
            mu_aff = ((x + ap * dx) @ (z + ad * dz)
                      + ((w + ap * dw) @ (v + ad * dv) if nb else 0.0)) / (n + nb)
        sigma = min(1.0, (max(mu_aff, 0.0) / mu) ** 3) if mu > 0 else 0.1

        # corrector re-using the same factorization
        with np.errstate(over="ignore", invalid="ignore"):
            rxz = sigma * mu - x * z - dx * dz
            rwv = (sigma * mu - w * v - dw * dv) if nb else np.zeros(0)
        dx, dy, dz, dw, dv = newton(rxz, rwv)
        ap = min(1.0, 0.9995 * min(_max_step(x, dx), _max_step(w, dw) if nb else np.inf))
        ad = min(1.0, 0.9995 * min(_max_step(z, dz), _max_step(v, dv) if nb else np.inf))
        with np.errstate(over="ignore", invalid="ignore"):
            x += ap * dx
            if nb:
                w += ap * dw
                v += ad * dv
            y += ad * dy
            z += ad * dz

    if status == "iteration_limit" and best is not None:
        x, y, gap, _ = best
    return x, y, status, it, gap


def solve_lp(problem: LpProblem, tol_feas: float = 1e-8, tol_gap: float = 1e-8,
             max_iterations: int = 200) -> LpSolution:
    """Interior-point solve; pinned variables (lower == upper) are exact.

    Termination tolerances are relative to the problem's data magnitudes, so
    rescaling the cost vector does not move the minimizer.  Infeasibility and
    unboundedness are reported through ``status``, never raised.
    """
    pre = _substitute_pinned(problem)
    if pre.sub is None:
        x = pre.expand(np.zeros(0), problem.n)
        if pre.row_violation > tol_feas * (1.0 + float(np.abs(problem.rhs).max(initial=0.0))):
            return LpSolution(x, float(problem.costs @ x), "infeasible", 0,
                              problem.violation(x))
        return LpSolution(x, float(problem.costs @ x), "optimal", 0,
                          problem.violation(x))
    sub = pre.sub
    if sub.m == 0:
        inner = _bounds_only_solution(sub)
        x = pre.expand(inner.x, problem.n)
        obj = float(problem.costs @ x) if inner.status == "optimal" else -np.inf
        return LpSolution(x, obj, inner.status, 0, problem.violation(x))
    std = _standardize(sub)
    zvec, _, status, iters, gap = _mehrotra(
        std.a, std.b, std.c, std.u, tol_feas, tol_gap, max_iterations
    )
    x_sub = std.restore(zvec)
    x = pre.expand(x_sub, problem.n)
    obj = float(problem.costs @ x) if status != "unbounded" else -np.inf
    return LpSolution(x, obj, status, iters, problem.violation(x), gap)


# ---------------------------------------------------------------------------
# dense enumeration reference

_REF_MAX_N = 12
_REF_MAX_M = 24
_REF_BIG = 1e6
_REF_COMBO_BUDGET = 2_000_000
_REF_CHUNK = 32768


def _enumerate_vertices(costs, rows_dense, rhs, lo, hi, feas_tol):
    """Best vertex of a bounded polytope; returns (x, obj) or None."""
    n = costs.size
    planes = [rows_dense] if rows_dense.size else []
    offs = [rhs] if rows_dense.size else []
    eye = np.eye(n)
    planes += [eye, eye]
    offs += [lo, hi]
    h = np.vstack(planes) if planes else np.zeros((0, n))
    t = np.concatenate(offs) if offs else np.zeros(0)
    total = h.shape[0]
    count = math.comb(total, n)
    if count > _REF_COMBO_BUDGET:
        raise SizeLimitError(
            f"reference enumeration needs {count} candidate bases, over the "
            f"{_REF_COMBO_BUDGET} budget"
        )
    best_obj = np.inf
    best_x = None
    combos = itertools.combinations(range(total), n)
    while True:
        chunk = np.fromiter(
            itertools.chain.from_iterable(itertools.islice(combos, _REF_CHUNK)),
            dtype=np.int64,
        ).reshape(-1, n)
        if chunk.size == 0:
            break
        mats = h[chunk]                      # (B, n, n)
        rhsv = t[chunk]                      # (B, n)
        row_norms = np.linalg.norm(mats, axis=2)
        dets = np.linalg.det(mats)
        ok = np.abs(dets) > 1e-12 * np.prod(np.maximum(row_norms, 1e-30), axis=1)
        if not ok.any():
            continue
        xs = np.linalg.solve(mats[ok], rhsv[ok][..., None])[..., 0]
        feas = np.ones(xs.shape[0], dtype=bool)
        if rows_dense.size:
            feas &= (xs @ rows_dense.T <= rhs + feas_tol).all(axis=1)
        feas &= (xs >= lo - feas_tol).all(axis=1)
        feas &= (xs <= hi + feas_tol).all(axis=1)
        if not feas.any():
            continue
        objs = xs[feas] @ costs
        k = int(np.argmin(objs))
        if objs[k] < best_obj:
            best_obj = float(objs[k])
            best_x = xs[feas][k]
    if best_x is None:
        return None
    return best_x, best_obj


def solve_lp_dense_reference(problem: LpProblem) -> LpSolution:
    """Exact optimum of a tiny LP by enumerating candidate vertices.

    Gated at n <= 12, m <= 24 and additionally by a combination budget.
    Infinite bounds are replaced by a +-1e6 box for the vertex sweep, so
    problem data should stay well inside that range; unboundedness is decided
    separately from a recession-direction subproblem.
    """
    if problem.n > _REF_MAX_N or problem.m > _REF_MAX_M:
        raise SizeLimitError(
            f"reference solver gated at n <= {_REF_MAX_N}, m <= {_REF_MAX_M}; "
            f"got n = {problem.n}, m = {problem.m}"
        )
    pre = _substitute_pinned(problem)
    if pre.sub is None:
        x = pre.expand(np.zeros(0), problem.n)
        status = "infeasible" if pre.row_violation > 1e-9 else "optimal"
        return LpSolution(x, float(problem.costs @ x), status, 0, problem.violation(x))
    sub = pre.sub
    scale = max(
        1.0,
        float(np.abs(sub.rhs).max(initial=0.0)),
        float(np.abs(sub.lower[np.isfinite(sub.lower)]).max(initial=0.0)),
        float(np.abs(sub.upper[np.isfinite(sub.upper)]).max(initial=0.0)),
    )
    feas_tol = 1e-7 * scale
    lo = np.where(np.isfinite(sub.lower), sub.lower, -_REF_BIG)
    hi = np.where(np.isfinite(sub.upper), sub.upper, _REF_BIG)
    rows_dense = sub.rows.toarray() if sub.m else np.zeros((0, sub.n))

    free_some = (~np.isfinite(sub.lower)) | (~np.isfinite(sub.upper))
    if free_some.any():
        # min c d over the recession cone, d boxed to the unit cube on the
        # directions that are actually unbounded
        dlo = np.where(np.isfinite(sub.lower), 0.0, -1.0)
        dhi = np.where(np.isfinite(sub.upper), 0.0, 1.0)
        rec = _enumerate_vertices(
            sub.costs, rows_dense, np.zeros(sub.m), dlo, dhi, 1e-9
        )
        if rec is not None and rec[1] < -1e-9:
            x = pre.expand(np.clip(np.zeros(sub.n), lo, hi), problem.n)
            return LpSolution(x, -np.inf, "unbounded", 0, problem.violation(x))

    hit = _enumerate_vertices(sub.costs, rows_dense, sub.rhs, lo, hi, feas_tol)
    if hit is None:
        x = pre.expand(np.clip(np.zeros(sub.n), lo, hi), problem.n)
        return LpSolution(x, np.inf, "infeasible", 0, problem.violation(x))
    x = pre.expand(hit[0], problem.n)
    return LpSolution(x, float(problem.costs @ x), "optimal", 0, problem.violation(x))
