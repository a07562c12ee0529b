"""Best-bound branch and bound over the LP relaxation.

Search runs in two regimes. Until a first incumbent exists the solver dives
depth-first, always descending into the rounding-matched child while the
sibling waits in the open-node heap; without an incumbent best-bound search
cannot prune and wanders bound plateaus. With an incumbent it switches to
best-bound rounds: the best BATCH_SIZE open nodes (by bound, ties by node
id) are popped, their LP relaxations solved, and the results processed in
node-id order. The batch size is a constant, so the worker count only
decides how the batch LPs are computed and never changes the explored tree,
the incumbent sequence, or the final answer. Branching is most-fractional
by default (ties toward the lowest variable id) with an optional
pseudo-cost rule.
"""

from __future__ import annotations

import heapq
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError
from ..milp.model import MilpModel
from .simplex import (
    STATUS_INFEASIBLE,
    STATUS_OPTIMAL,
    STATUS_UNBOUNDED,
    LpResult,
    StandardForm,
)

BATCH_SIZE = 4

OPTIMAL = "optimal"
FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
LIMIT = "limit"

BRANCH_MOST_FRACTIONAL = "most-fractional"
BRANCH_PSEUDO_COST = "pseudo-cost"


@dataclass(frozen=True)
class SolveOptions:
    """Tolerances and limits for solve_milp.

    ``workers`` parallelizes the LP solves of each exploration round; any
    value yields identical results.
    """

    rel_gap_tol: float = 1e-6
    int_feas_tol: float = 1e-6
    time_limit_s: float | None = None
    node_limit: int | None = None
    branching: str = BRANCH_MOST_FRACTIONAL
    seed: int = 0
    workers: int = 1

    def __post_init__(self) -> None:
        if self.rel_gap_tol <= 0 or self.int_feas_tol <= 0:
            raise ValidationError("tolerances must be positive")
        if self.branching not in (BRANCH_MOST_FRACTIONAL, BRANCH_PSEUDO_COST):
            raise ValidationError(f"unknown branching rule {self.branching!r}")
        if self.workers < 1:
            raise ValidationError("workers must be at least 1")


@dataclass
class SolveStats:
    nodes: int = 0
    lp_iterations: int = 0
    wall_time_s: float = 0.0
    incumbents: tuple[float, ...] = ()


@dataclass
class MilpSolution:
    """Outcome of a MILP solve or an imported solution.

    ``bound`` is the best proven lower bound (minimization); for an optimal
    solve its relative gap to the objective is within rel_gap_tol.
    """

    status: str
    objective: float | None
    values: dict[int, float] | None
    bound: float
    stats: SolveStats = field(default_factory=SolveStats)


@dataclass
class _Node:
    node_id: int
    bound: float
    lo: np.ndarray
    hi: np.ndarray
    branch_var: int | None = None
    branch_dir: str | None = None
    parent_frac: float = 0.0

    def __lt__(self, other: "_Node") -> bool:
        return (self.bound, self.node_id) < (other.bound, other.node_id)


class _PseudoCosts:
    """Average per-unit objective gains observed for each branch direction."""

    def __init__(self, model: MilpModel, int_ids: np.ndarray):
        init = np.array([abs(model.variables[int(j)].obj) + 1e-6 for j in int_ids])
        self.up_sum = init.copy()
        self.up_cnt = np.ones(len(int_ids))
        self.down_sum = init.copy()
        self.down_cnt = np.ones(len(int_ids))
        self.pos = {int(j): i for i, j in enumerate(int_ids)}

    def record(self, var: int, direction: str, unit_gain: float) -> None:
        i = self.pos[var]
        if direction == "up":
            self.up_sum[i] += unit_gain
            self.up_cnt[i] += 1.0
        else:
            self.down_sum[i] += unit_gain
            self.down_cnt[i] += 1.0

    def score(self, frac: np.ndarray) -> np.ndarray:
        up = self.up_sum / self.up_cnt
        down = self.down_sum / self.down_cnt
        return np.maximum(up * (1.0 - frac), 1e-12) * np.maximum(down * frac, 1e-12)


class _Search:
    """Shared state of one branch-and-bound run."""

    def __init__(self, model: MilpModel, opts: SolveOptions):
        self.model = model
        self.opts = opts
        self.t0 = time.monotonic()
        self.sf = StandardForm.from_model(model)
        self.int_ids = np.array(
            [j for j, v in enumerate(model.variables) if v.is_integer], dtype=int
        )
        self.lo0 = np.array([v.lb for v in model.variables])
        self.hi0 = np.array([v.ub for v in model.variables])
        self.stats = SolveStats()
        self.incumbents: list[float] = []
        self.inc_obj: float | None = None
        self.inc_values: dict[int, float] | None = None
        self.heap: list[_Node] = [_Node(0, -math.inf, self.lo0, self.hi0)]
        self.next_id = 1
        self.pseudo = (
            _PseudoCosts(model, self.int_ids)
            if opts.branching == BRANCH_PSEUDO_COST
            else None
        )

    def solve_node(self, node: _Node) -> LpResult:
        res = self.sf.solve(node.lo, node.hi)
        return res

    def over_limits(self) -> bool:
        if self.opts.node_limit is not None and self.stats.nodes >= self.opts.node_limit:
            return True
        return (
            self.opts.time_limit_s is not None
            and time.monotonic() - self.t0 > self.opts.time_limit_s
        )

    def gap_closed(self, bound: float) -> bool:
        return self.inc_obj is not None and self.inc_obj - bound <= self.opts.rel_gap_tol * max(
            1.0, abs(self.inc_obj)
        )

    def prunable(self, bound: float) -> bool:
        return self.inc_obj is not None and bound >= self.inc_obj - self.opts.rel_gap_tol * max(
            1.0, abs(self.inc_obj)
        )

    def fractionality(self, x: np.ndarray) -> np.ndarray:
        if not len(self.int_ids):
            return np.empty(0)
        frac = np.abs(x[self.int_ids] - np.round(x[self.int_ids]))
        return np.where(frac <= self.opts.int_feas_tol, 0.0, frac)

    def snap(self, x: np.ndarray) -> dict[int, float]:
        values = {j: float(x[j]) for j in range(self.model.num_variables)}
        for j in self.int_ids:
            values[int(j)] = float(round(x[int(j)]))
        return values

    def accept_incumbent(self, x: np.ndarray) -> None:
        values = self.snap(x)
        obj = self.model.objective_value(values)
        if self.inc_obj is None or obj < self.inc_obj - 1e-12 * max(1.0, abs(obj)):
            self.inc_obj = obj
            self.inc_values = values
            self.incumbents.append(obj)

    def make_children(self, node: _Node, res: LpResult) -> tuple[_Node, _Node]:
        """Down and up children on the branch variable of this node."""
        frac = self.fractionality(res.x)
        if self.pseudo is not None:
            score = self.pseudo.score(np.minimum(frac, 1.0 - frac))
            score[frac <= 0.0] = -math.inf
            pick = int(np.argmax(score))
        else:
            pick = int(np.argmax(np.minimum(frac, 1.0 - frac)))
        var = int(self.int_ids[pick])
        xval = float(res.x[var])
        fpart = xval - math.floor(xval)
        lo_dn, hi_dn = node.lo.copy(), node.hi.copy()
        hi_dn[var] = math.floor(xval)
        down = _Node(self.next_id, res.objective, lo_dn, hi_dn, var, "down", fpart)
        self.next_id += 1
        lo_up, hi_up = node.lo.copy(), node.hi.copy()
        lo_up[var] = math.ceil(xval)
        up = _Node(self.next_id, res.objective, lo_up, hi_up, var, "up", fpart)
        self.next_id += 1
        return down, up

    def record_gain(self, node: _Node, node_bound: float) -> None:
        if self.pseudo is None or node.branch_var is None:
            return
        gain = max(node_bound - node.bound, 0.0)
        width = node.parent_frac if node.branch_dir == "down" else 1.0 - node.parent_frac
        self.pseudo.record(node.branch_var, node.branch_dir, gain / max(width, 1e-6))

    def rounding_dive(self, lo: np.ndarray, hi: np.ndarray, x0: np.ndarray, mode: str) -> None:
        """Heuristic: repeatedly pin integral-within-tol variables and round
        one fractional variable, re-solving the LP, until an integer point
        appears or the restricted LP goes infeasible. Feeds the incumbent;
        never touches the tree partition."""
        lo = lo.copy()
        hi = hi.copy()
        x = x0
        ids = self.int_ids
        for _ in range(len(ids) + 1):
            frac = self.fractionality(x)
            if not frac.size or float(frac.max()) <= 0.0:
                self.accept_incumbent(x)
                return
            rounded = np.round(x[ids])
            settled = frac <= 0.0
            fix = np.clip(rounded, lo[ids], hi[ids])
            lo[ids[settled]] = fix[settled]
            hi[ids[settled]] = fix[settled]
            pick = int(np.argmax(np.minimum(frac, 1.0 - frac)))
            j = int(ids[pick])
            if mode == "ceil":
                target = math.ceil(x[j])
            else:
                target = round(x[j])
            target = float(min(max(target, lo[j]), hi[j]))
            lo[j] = hi[j] = target
            res = self.sf.solve(lo, hi)
            self.stats.lp_iterations += res.iterations
            if res.status != STATUS_OPTIMAL:
                return
            x = res.x


def solve_milp(model: MilpModel, opts: SolveOptions | None = None) -> MilpSolution:
    """Exact branch and bound; returns the optimum within the gap tolerance.

    Deterministic for a fixed (model, opts): identical runs produce the same
    incumbent sequence, node count, and solution regardless of workers.
    """
    opts = opts or SolveOptions()
    search = _Search(model, opts)

    def finish(status: str, bound: float) -> MilpSolution:
        inc_obj, inc_values = search.inc_obj, search.inc_values
        if inc_values is not None and status in (OPTIMAL, LIMIT):
            inc_values = _refine_continuous(search, inc_values)
            inc_obj = model.objective_value(inc_values)
            if status == OPTIMAL and bound > inc_obj:
                bound = inc_obj
        search.stats.wall_time_s = time.monotonic() - search.t0
        search.stats.incumbents = tuple(search.incumbents)
        return MilpSolution(status, inc_obj, inc_values, bound, search.stats)

    executor = (
        ThreadPoolExecutor(max_workers=opts.workers) if opts.workers > 1 else None
    )
    try:
        # Root node plus the rounding-dive heuristic: best-bound search
        # cannot prune until some incumbent exists.
        root = heapq.heappop(search.heap)
        root_res = search.solve_node(root)
        search.stats.nodes += 1
        search.stats.lp_iterations += root_res.iterations
        if root_res.status == STATUS_UNBOUNDED:
            return finish(UNBOUNDED, -math.inf)
        if root_res.status == STATUS_INFEASIBLE:
            return finish(INFEASIBLE, math.inf)
        assert root_res.objective is not None and root_res.x is not None
        root_frac = search.fractionality(root_res.x)
        if not root_frac.size or float(root_frac.max()) <= 0.0:
            search.accept_incumbent(root_res.x)
            return finish(OPTIMAL, root_res.objective)
        search.rounding_dive(search.lo0, search.hi0, root_res.x, "nearest")
        if search.inc_obj is None:
            search.rounding_dive(search.lo0, search.hi0, root_res.x, "ceil")
        down, up = search.make_children(root, root_res)
        heapq.heappush(search.heap, down)
        heapq.heappush(search.heap, up)

        # Best-bound phase.
        while search.heap:
            best_bound = search.heap[0].bound
            if search.gap_closed(best_bound):
                return finish(OPTIMAL, best_bound)
            if search.over_limits():
                return finish(LIMIT, best_bound)

            batch = []
            while search.heap and len(batch) < BATCH_SIZE:
                node = heapq.heappop(search.heap)
                if search.prunable(node.bound):
                    continue  # parent bound already disqualifies the subtree
                batch.append(node)
            if not batch:
                break
            if executor is not None:
                results = list(executor.map(search.solve_node, batch))
            else:
                results = [search.solve_node(node) for node in batch]
            search.stats.nodes += len(batch)
            for res in results:
                search.stats.lp_iterations += res.iterations

            order = sorted(range(len(batch)), key=lambda i: batch[i].node_id)
            for i in order:
                node, res = batch[i], results[i]
                if res.status == STATUS_UNBOUNDED:
                    return finish(UNBOUNDED, -math.inf)
                if res.status != STATUS_OPTIMAL:
                    continue
                assert res.objective is not None and res.x is not None
                search.record_gain(node, res.objective)
                if search.prunable(res.objective):
                    continue
                frac = search.fractionality(res.x)
                if not frac.size or float(frac.max()) <= 0.0:
                    search.accept_incumbent(res.x)
                    continue
                down, up = search.make_children(node, res)
                heapq.heappush(search.heap, down)
                heapq.heappush(search.heap, up)

        if search.inc_obj is None:
            return finish(INFEASIBLE, math.inf)
        return finish(OPTIMAL, search.inc_obj)
    finally:
        if executor is not None:
            executor.shutdown(wait=False)


def _refine_continuous(search: _Search, values: dict[int, float]) -> dict[int, float]:
    """Re-solve the continuous part with integers pinned to their rounded
    values, cleaning LP noise off flows; keeps the incumbent when that LP
    turns out infeasible at the pinned bounds."""
    int_ids = search.int_ids
    model = search.model
    if not len(int_ids) or len(int_ids) == model.num_variables:
        return values
    lo = search.lo0.copy()
    hi = search.hi0.copy()
    for j in int_ids:
        lo[int(j)] = hi[int(j)] = values[int(j)]
    res = search.sf.solve(lo, hi)
    search.stats.lp_iterations += res.iterations
    if res.status != STATUS_OPTIMAL:
        return values
    refined = {j: float(res.x[j]) for j in range(model.num_variables)}
    for j in int_ids:
        refined[int(j)] = values[int(j)]
    return refined
