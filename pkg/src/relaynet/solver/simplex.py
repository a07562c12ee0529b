"""Bounded-variable primal simplex over dense arrays.

Two-phase method with a slack crash: inequality rows whose slack starts
feasible enter the basis directly, artificials cover only the rest, and
phase one is skipped entirely when no artificials are needed. Nonbasic
variables rest at a finite bound (or at zero when free), so variable bounds
never become rows. Pricing is Devex with deterministic tie-breaking and an
automatic switch to Bland's rule under prolonged degeneracy to prevent
cycling. All comparisons use a 1e-9 tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import SolveError
from ..milp.model import INF, MilpModel

OPT_TOL = 1e-9
PIVOT_TOL = 1e-10
TIE_TOL = 1e-12
DEGENERATE_LIMIT = 80
REFACTOR_EVERY = 150

_AT_LO, _AT_HI, _BASIC, _FREE = 0, 1, 2, 3

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_UNBOUNDED = "unbounded"


@dataclass
class LpResult:
    status: str
    x: np.ndarray | None
    objective: float | None
    iterations: int


@dataclass
class StandardForm:
    """Equality computational form of a model: A x = b with bounds.

    Columns are the structural variables followed by one slack per
    inequality row (nonnegative slack for <=, nonpositive for >=).
    """

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    n_structural: int
    slack_of_row: np.ndarray  # column id of the row's slack, -1 for equalities

    @classmethod
    def from_model(cls, model: MilpModel) -> "StandardForm":
        m = model.num_rows
        n = model.num_variables
        n_slack = sum(1 for r in model.rows if r.sense != "=")
        A = np.zeros((m, n + n_slack), order="F")
        b = np.zeros(m)
        lo = np.zeros(n + n_slack)
        hi = np.zeros(n + n_slack)
        c = np.zeros(n + n_slack)
        slack_of_row = np.full(m, -1, dtype=int)
        for j, v in enumerate(model.variables):
            lo[j], hi[j], c[j] = v.lb, v.ub, v.obj
        slack = n
        for i, row in enumerate(model.rows):
            b[i] = row.rhs
            for j, coef in row.coeffs:
                A[i, j] += coef
            if row.sense != "=":
                A[i, slack] = 1.0
                if row.sense == "<=":
                    lo[slack], hi[slack] = 0.0, INF
                else:
                    lo[slack], hi[slack] = -INF, 0.0
                slack_of_row[i] = slack
                slack += 1
        return cls(
            A=A, b=b, c=c, lo=lo, hi=hi, n_structural=n, slack_of_row=slack_of_row
        )

    def solve(
        self, lo_override: np.ndarray | None = None, hi_override: np.ndarray | None = None
    ) -> LpResult:
        """Solve with optionally tightened structural bounds."""
        lo = self.lo.copy()
        hi = self.hi.copy()
        if lo_override is not None:
            lo[: self.n_structural] = lo_override
        if hi_override is not None:
            hi[: self.n_structural] = hi_override
        if np.any(lo > hi):
            return LpResult(STATUS_INFEASIBLE, None, None, 0)
        result = _simplex(self.A, self.b, self.c, lo, hi, self.slack_of_row)
        if result.status == STATUS_OPTIMAL:
            x = result.x[: self.n_structural]  # type: ignore[index]
            obj = math.fsum(float(self.c[j] * x[j]) for j in range(self.n_structural))
            return LpResult(STATUS_OPTIMAL, x, obj, result.iterations)
        return result


def _bounds_only(c: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> LpResult:
    x = np.zeros(len(c))
    for j in range(len(c)):
        if c[j] > OPT_TOL:
            if math.isinf(lo[j]):
                return LpResult(STATUS_UNBOUNDED, None, None, 0)
            x[j] = lo[j]
        elif c[j] < -OPT_TOL:
            if math.isinf(hi[j]):
                return LpResult(STATUS_UNBOUNDED, None, None, 0)
            x[j] = hi[j]
        else:
            x[j] = lo[j] if math.isfinite(lo[j]) else (hi[j] if math.isfinite(hi[j]) else 0.0)
    return LpResult(STATUS_OPTIMAL, x, None, 0)


def _simplex(
    A: np.ndarray,
    b: np.ndarray,
    c: np.ndarray,
    lo: np.ndarray,
    hi: np.ndarray,
    slack_of_row: np.ndarray,
) -> LpResult:
    m, n = A.shape
    if m == 0:
        return _bounds_only(c, lo, hi)

    x = np.where(np.isfinite(lo), lo, np.where(np.isfinite(hi), hi, 0.0))
    status = np.where(
        np.isfinite(lo), _AT_LO, np.where(np.isfinite(hi), _AT_HI, _FREE)
    ).astype(np.int8)

    # Slack crash: a row whose slack starts inside its own bounds is covered
    # by that slack; the rest get an artificial column.
    x_ns = x.copy()
    for i in range(m):
        s = slack_of_row[i]
        if s >= 0:
            x_ns[s] = 0.0
    residual = b - A @ x_ns

    basis = np.empty(m, dtype=int)
    binv_diag = np.ones(m)
    art_rows: list[int] = []
    for i in range(m):
        s = slack_of_row[i]
        r = residual[i]
        if s >= 0 and lo[s] - 1e-12 <= r <= hi[s] + 1e-12:
            basis[i] = s
            x[s] = r
            status[s] = _BASIC
        else:
            art_rows.append(i)
            binv_diag[i] = 1.0 if r >= 0 else -1.0
            if s >= 0:
                x[s] = 0.0 if math.isfinite(lo[s]) else 0.0
                status[s] = _AT_LO if math.isfinite(lo[s]) else _AT_HI

    n_art = len(art_rows)
    if n_art:
        art_cols = np.zeros((m, n_art), order="F")
        for t, i in enumerate(art_rows):
            art_cols[i, t] = binv_diag[i]
            basis[i] = n + t
        A_ext = np.asfortranarray(np.hstack([A, art_cols]))
        lo_ext = np.concatenate([lo, np.zeros(n_art)])
        hi_ext = np.concatenate([hi, np.full(n_art, INF)])
        x_ext = np.concatenate([x, np.abs(residual[art_rows])])
        status_ext = np.concatenate([status, np.full(n_art, _BASIC, dtype=np.int8)])
    else:
        A_ext = A
        lo_ext, hi_ext, x_ext, status_ext = lo, hi, x, status

    binv = np.diag(binv_diag)
    state = _SimplexState(A_ext, b, lo_ext, hi_ext, x_ext, status_ext, basis, binv)

    iters1 = 0
    if n_art:
        c1 = np.zeros(n + n_art)
        c1[n:] = 1.0
        iters1 = state.optimize(c1)
        art_level = state.x[n:]
        phase1_obj = float(np.sum(art_level[art_level > 0]))
        scale = max(1.0, float(np.max(np.abs(b)))) if m else 1.0
        if phase1_obj > 1e-7 * scale:
            return LpResult(STATUS_INFEASIBLE, None, None, iters1)
        state.lo[n:] = 0.0
        state.hi[n:] = 0.0
        nonbasic_art = np.setdiff1d(np.arange(n, n + n_art), state.basis)
        state.x[nonbasic_art] = 0.0

    c2 = np.concatenate([c, np.zeros(n_art)]) if n_art else c
    iters2 = state.optimize(c2)
    if state.unbounded:
        return LpResult(STATUS_UNBOUNDED, None, None, iters1 + iters2)

    state.refactorize()
    err = float(np.max(np.abs(state.A @ state.x - b)))
    if err > 1e-6 * max(1.0, float(np.max(np.abs(b)))):
        raise SolveError(f"simplex finished with primal residual {err:.3e}")
    xout = np.clip(state.x[:n], lo, hi)
    return LpResult(STATUS_OPTIMAL, xout, None, iters1 + iters2)


class _SimplexState:
    """Mutable basis state shared by both phases."""

    def __init__(self, A, b, lo, hi, x, status, basis, binv):
        self.A = A
        self.b = b
        self.lo = lo
        self.hi = hi
        self.x = x
        self.status = status
        self.basis = basis
        self.binv = binv
        self.unbounded = False
        self.pivots_since_refactor = 0

    def refactorize(self) -> None:
        B = self.A[:, self.basis]
        try:
            self.binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise SolveError("singular basis during refactorization") from exc
        xn = self.x.copy()
        xn[self.basis] = 0.0
        self.x[self.basis] = self.binv @ (self.b - self.A @ xn)
        self.pivots_since_refactor = 0

    def optimize(self, c: np.ndarray) -> int:
        m, n_ext = self.A.shape
        fixed = self.lo == self.hi
        max_iterations = 2000 + 50 * (m + n_ext)
        degenerate_run = 0
        bland = False
        iterations = 0
        refactor_retry = False
        devex = np.ones(n_ext)

        while True:
            if iterations > max_iterations:
                raise SolveError(f"simplex iteration limit {max_iterations} exceeded")

            cb = c[self.basis]
            y = self.binv.T @ cb
            d = c - y @ self.A
            at_lo = self.status == _AT_LO
            at_hi = self.status == _AT_HI
            free = self.status == _FREE
            eligible = (
                ((at_lo & (d < -OPT_TOL)) | (at_hi & (d > OPT_TOL)) | (free & (np.abs(d) > OPT_TOL)))
                & ~fixed
                & (self.status != _BASIC)
            )
            if not eligible.any():
                return iterations

            if bland:
                j = int(np.flatnonzero(eligible)[0])
            else:
                score = np.where(eligible, d * d / devex, -1.0)
                j = int(np.argmax(score))

            direction = 1.0
            if at_hi[j] or (free[j] and d[j] > 0):
                direction = -1.0

            alpha = self.binv @ self.A[:, j]
            delta = direction * alpha
            xb = self.x[self.basis]
            lob = self.lo[self.basis]
            hib = self.hi[self.basis]

            with np.errstate(divide="ignore", invalid="ignore"):
                t_cand = np.full(m, INF)
                pos = delta > PIVOT_TOL
                t_cand[pos] = (xb[pos] - lob[pos]) / delta[pos]
                neg = delta < -PIVOT_TOL
                t_cand[neg] = (xb[neg] - hib[neg]) / delta[neg]
            t_cand[~np.isfinite(t_cand)] = INF
            np.maximum(t_cand, 0.0, out=t_cand)

            t_rows = float(np.min(t_cand)) if m else INF
            t_bound = self.hi[j] - self.lo[j]
            t = min(t_rows, t_bound)

            if not math.isfinite(t):
                self.unbounded = True
                return iterations

            iterations += 1
            if t <= TIE_TOL:
                degenerate_run += 1
                if degenerate_run > DEGENERATE_LIMIT:
                    bland = True
            else:
                degenerate_run = 0
                bland = False

            if t_bound <= t_rows + TIE_TOL and math.isfinite(t_bound):
                # Bound flip: variable jumps to its other bound, basis unchanged.
                self.x[self.basis] = xb - t_bound * delta
                self.x[j] = self.hi[j] if direction > 0 else self.lo[j]
                self.status[j] = _AT_HI if direction > 0 else _AT_LO
                continue

            ties = np.flatnonzero(t_cand <= t + TIE_TOL)
            if bland:
                r = int(ties[np.argmin(self.basis[ties])])
            else:
                best = ties[np.abs(alpha[ties]) == np.max(np.abs(alpha[ties]))]
                r = int(best[np.argmin(self.basis[best])])

            if abs(alpha[r]) < PIVOT_TOL:
                if refactor_retry:
                    raise SolveError("persistent numerical singularity in ratio test")
                self.refactorize()
                refactor_retry = True
                continue
            refactor_retry = False

            leaving = int(self.basis[r])
            self.x[self.basis] = xb - t * delta
            if self.status[j] == _FREE:
                entering_value = self.x[j] + direction * t
            else:
                entering_value = (self.lo[j] if direction > 0 else self.hi[j]) + direction * t
            if delta[r] > 0:
                self.status[leaving] = _AT_LO
                self.x[leaving] = self.lo[leaving]
            else:
                self.status[leaving] = _AT_HI
                self.x[leaving] = self.hi[leaving]

            # Devex reference-weight update from the pivot row.
            pivot_row_tableau = self.binv[r] @ self.A
            ratio = pivot_row_tableau / alpha[r]
            cand = ratio * ratio * devex[j]
            np.maximum(devex, cand, out=devex)
            devex[leaving] = max(devex[j] / (alpha[r] * alpha[r]), 1.0)

            self.basis[r] = j
            self.status[j] = _BASIC
            self.x[j] = entering_value

            pivot_row = self.binv[r] / alpha[r]
            self.binv -= np.outer(alpha, pivot_row)
            self.binv[r] = pivot_row

            self.pivots_since_refactor += 1
            if self.pivots_since_refactor >= REFACTOR_EVERY:
                self.refactorize()


@dataclass
class LpSolution:
    """Public LP result with values keyed by model variable id."""

    status: str
    objective: float | None
    values: dict[int, float] | None
    iterations: int


def solve_lp(model: MilpModel) -> LpSolution:
    """Solve the LP relaxation of a model (integrality dropped)."""
    sf = StandardForm.from_model(model)
    res = sf.solve()
    if res.status != STATUS_OPTIMAL:
        return LpSolution(res.status, None, None, res.iterations)
    values = {j: float(res.x[j]) for j in range(model.num_variables)}  # type: ignore[index]
    return LpSolution(STATUS_OPTIMAL, model.objective_value(values), values, res.iterations)
