"""Simplex and branch-and-bound solvers for :class:`~dcnshuffle.optmodel.OptModel`.

The LP engine is a bounded-variable revised simplex with an explicit dense
basis inverse. Every row gets a slack whose bounds encode the row sense, so
the slack basis is always a valid start; rows it cannot satisfy get an
artificial column and a phase-1 pass. Pricing is Dantzig's rule, switching to
Bland's rule after ``5 * (rows + cols)`` consecutive degenerate pivots.

Branch-and-bound explores nodes in best-bound order, branches on the most
fractional binary (lowest id on ties) and warm-starts every child from its
parent's basis with the dual simplex.
"""

from __future__ import annotations

import hashlib
import heapq
import math
from dataclasses import dataclass, field, replace
from typing import Callable, TextIO

import numpy as np
import scipy.sparse as sp

from .errors import ModelError, ResourceError, SolverError
from .optmodel import EQ, GE, LE, OptModel

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-6
INT_TOL = 1e-6
PRIMAL_TOL = 1e-9  # internal target, well inside FEAS_TOL
DUAL_TOL = 1e-9
REFACTOR_EVERY = 64

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass
class LpSolution:
    status: str
    objective_value: float
    x: np.ndarray
    iteration_count: int = 0
    basis_tag: str = ""
    dual_bound: float | None = None
    duals: np.ndarray | None = None

    @property
    def variable_values(self) -> dict[int, float]:
        return {i: float(v) for i, v in enumerate(self.x)}

    def value(self, var_id: int) -> float:
        return float(self.x[var_id])


@dataclass
class MilpSolution:
    status: str
    incumbent: LpSolution | None
    best_bound: float
    explored_nodes: int
    lp_iterations: int = 0

    @property
    def objective_value(self) -> float:
        return self.incumbent.objective_value if self.incumbent else math.nan

    @property
    def x(self) -> np.ndarray:
        return self.incumbent.x

    def value(self, var_id: int) -> float:
        return self.incumbent.value(var_id)


class _Tracer:
    def __init__(self, sink):
        self.sink = sink

    def __call__(self, line: str) -> None:
        if self.sink is None:
            return
        if callable(self.sink) and not hasattr(self.sink, "write"):
            self.sink(line)
        else:
            self.sink.write(line + "\n")


# -- standard form -------------------------------------------------------------


@dataclass
class _StandardForm:
    """``min c x  s.t.  [A I art] x = b,  lb <= x <= ub``."""

    A: sp.csc_matrix
    b: np.ndarray
    c: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    n_struct: int
    sign: float  # +1 for min models, -1 for max
    binary: np.ndarray
    cols: list = field(default_factory=list)  # cached (indices, data) per column

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @classmethod
    def from_model(cls, model: OptModel) -> _StandardForm:
        problems = model.validate()
        if problems:
            raise ModelError("; ".join(problems))
        c_obj, A, senses, rhs, lower, upper, binary = model.arrays()
        m, n = A.shape
        sign = -1.0 if model.objective_sense == "max" else 1.0
        s_lb = np.empty(m)
        s_ub = np.empty(m)
        for i, s in enumerate(senses):
            if s == LE:
                s_lb[i], s_ub[i] = 0.0, math.inf
            elif s == GE:
                s_lb[i], s_ub[i] = -math.inf, 0.0
            elif s == EQ:
                s_lb[i], s_ub[i] = 0.0, 0.0
            else:
                raise ModelError(f"bad sense {s!r}")
        full = sp.hstack([A, sp.identity(m, format="csc")], format="csc")
        return cls(
            full, rhs.astype(float), np.concatenate([sign * c_obj, np.zeros(m)]),
            np.concatenate([lower, s_lb]), np.concatenate([upper, s_ub]), n, sign,
            np.concatenate([binary, np.zeros(m, dtype=bool)]),
        )

    def add_artificials(self, rows: list[int], signs: list[float]) -> None:
        if not rows:
            return
        art = sp.csc_matrix((signs, (rows, range(len(rows)))), shape=(self.m, len(rows)))
        self.A = sp.hstack([self.A, art], format="csc")
        k = len(rows)
        self.c = np.concatenate([self.c, np.zeros(k)])
        self.lb = np.concatenate([self.lb, np.zeros(k)])
        self.ub = np.concatenate([self.ub, np.full(k, math.inf)])
        self.binary = np.concatenate([self.binary, np.zeros(k, dtype=bool)])
        self.cols = []

    def column(self, j: int):
        if not self.cols:
            A = self.A
            self.cols = [
                (A.indices[A.indptr[k]:A.indptr[k + 1]], A.data[A.indptr[k]:A.indptr[k + 1]])
                for k in range(A.shape[1])
            ]
        return self.cols[j]


# -- simplex engine ------------------------------------------------------------


class _Simplex:
    def __init__(self, sf: _StandardForm, lb: np.ndarray, ub: np.ndarray, trace: _Tracer):
        self.sf = sf
        self.lb = lb
        self.ub = ub
        self.trace = trace
        self.m = sf.m
        self.iterations = 0
        self.AT = sf.A.T.tocsr()
        self.basis = np.arange(sf.n_struct, sf.n_struct + self.m)
        self.is_basic = np.zeros(sf.n, dtype=bool)
        self.at_upper = np.zeros(sf.n, dtype=bool)
        self.x = np.zeros(sf.n)
        self.Binv = np.eye(self.m)
        self.since_refactor = 0

    # -- helpers --

    def _place_nonbasic(self, j: int) -> None:
        lo, hi = self.lb[j], self.ub[j]
        if self.at_upper[j] and hi < math.inf:
            self.x[j] = hi
        elif lo > -math.inf:
            self.x[j] = lo
            self.at_upper[j] = False
        elif hi < math.inf:
            self.x[j] = hi
            self.at_upper[j] = True
        else:
            self.x[j] = 0.0
            self.at_upper[j] = False

    def _refactor(self) -> None:
        B = self.sf.A[:, self.basis].toarray()
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError:
            raise SolverError("numerically singular basis") from None
        if not np.all(np.isfinite(self.Binv)):
            raise SolverError("numerically singular basis")
        xn = self.x.copy()
        xn[self.basis] = 0.0
        self.x[self.basis] = self.Binv @ (self.sf.b - self.sf.A @ xn)
        self.since_refactor = 0

    def _column(self, j: int) -> np.ndarray:
        idx, data = self.sf.column(j)
        return self.Binv[:, idx] @ data

    def _pivot(self, r: int, q: int, alpha: np.ndarray) -> None:
        """Replace basis row ``r`` by column ``q`` (``alpha = Binv A_q``)."""
        leaving = self.basis[r]
        row = self.Binv[r] / alpha[r]
        self.Binv -= np.outer(alpha, row)
        self.Binv[r] = row
        self.basis[r] = q
        self.is_basic[leaving] = False
        self.is_basic[q] = True
        self.at_upper[q] = False
        self.since_refactor += 1
        if self.since_refactor >= max(REFACTOR_EVERY, self.m // 8):
            self._refactor()

    def _reduced_costs(self, cost: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        y = cost[self.basis] @ self.Binv
        d = cost - self.AT @ y
        d[self.basis] = 0.0
        return y, d

    def start_cold(self) -> None:
        """Slack basis; rows whose slack would break its bounds get an artificial."""
        sf = self.sf
        n_struct = sf.n_struct
        self.is_basic[:] = False
        self.at_upper[:] = False
        for j in range(n_struct):
            self._place_nonbasic(j)
        residual = sf.b - sf.A[:, :n_struct] @ self.x[:n_struct]
        rows, signs = [], []
        for i in range(self.m):
            s = n_struct + i
            lo, hi = self.lb[s], self.ub[s]
            if lo - PRIMAL_TOL <= residual[i] <= hi + PRIMAL_TOL:
                continue
            rows.append(i)
            signs.append(1.0 if residual[i] > hi else -1.0)
        n_old = sf.n
        sf.add_artificials(rows, signs)
        k = len(rows)
        self.lb = np.concatenate([self.lb, np.zeros(k)])
        self.ub = np.concatenate([self.ub, np.full(k, math.inf)])
        self.AT = sf.A.T.tocsr()
        self.is_basic = np.concatenate([self.is_basic, np.zeros(k, dtype=bool)])
        self.at_upper = np.concatenate([self.at_upper, np.zeros(k, dtype=bool)])
        self.x = np.concatenate([self.x, np.zeros(k)])
        self.basis = np.arange(n_struct, n_struct + self.m)
        for t, i in enumerate(rows):
            s = n_struct + i
            self.at_upper[s] = residual[i] > self.ub[s]
            self._place_nonbasic(s)
            self.basis[i] = n_old + t
        self.is_basic[self.basis] = True
        self._refactor()
        self.artificials = np.arange(n_old, n_old + k)

    def start_warm(self, basis: np.ndarray, at_upper: np.ndarray) -> None:
        self.basis = basis.copy()
        self.is_basic[:] = False
        self.is_basic[self.basis] = True
        self.at_upper = at_upper.copy()
        for j in np.flatnonzero(~self.is_basic):
            self._place_nonbasic(j)
        self._refactor()

    # -- primal simplex --

    def primal(self, cost: np.ndarray, phase: int, max_iter: int) -> str:
        sf = self.sf
        bland = False
        degenerate = 0
        fallback_after = 5 * (self.m + sf.n)
        lb, ub = self.lb, self.ub
        fixed = lb == ub
        free = (lb == -math.inf) & (ub == math.inf)
        while True:
            if self.iterations >= max_iter:
                raise SolverError(f"iteration limit {max_iter} reached")
            _, d = self._reduced_costs(cost)
            nb = ~self.is_basic & ~fixed
            inc = nb & (~self.at_upper | free) & (d < -DUAL_TOL)
            dec = nb & (self.at_upper | free) & (d > DUAL_TOL)
            cand = inc | dec
            if not cand.any():
                return OPTIMAL
            if bland:
                q = int(np.flatnonzero(cand)[0])
            else:
                score = np.where(cand, np.abs(d), 0.0)
                q = int(np.argmax(score))
            direction = 1.0 if inc[q] else -1.0
            alpha = self._column(q)
            delta = -direction * alpha
            xb = self.x[self.basis]
            lbb = lb[self.basis]
            ubb = ub[self.basis]
            down = delta < -PIVOT_TOL
            up = delta > PIVOT_TOL
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.full(self.m, math.inf)
                ratio[down] = (xb[down] - lbb[down]) / -delta[down]
                ratio[up] = (ubb[up] - xb[up]) / delta[up]
                relaxed = np.full(self.m, math.inf)
                relaxed[down] = (xb[down] - lbb[down] + PRIMAL_TOL) / -delta[down]
                relaxed[up] = (ubb[up] - xb[up] + PRIMAL_TOL) / delta[up]
            ratio = np.where(np.isnan(ratio), math.inf, ratio)
            relaxed = np.where(np.isnan(relaxed), math.inf, relaxed)
            flip = ub[q] - lb[q]
            t_max = float(relaxed.min()) if self.m else math.inf
            if t_max == math.inf and flip == math.inf:
                return UNBOUNDED
            self.iterations += 1
            if flip <= t_max:
                self.x[q] += direction * flip
                self.x[self.basis] = xb + delta * flip
                self.at_upper[q] = direction > 0
                degenerate = 0
                bland = False
                self.trace(f"primal{phase} it={self.iterations} flip j={q}")
                continue
            ok = ratio <= t_max
            if bland:
                cands = np.flatnonzero(ok)
                tmin = ratio[cands].min()
                ties = cands[ratio[cands] <= tmin + 1e-12]
                r = int(ties[np.argmin(self.basis[ties])])
            else:
                r = int(np.argmax(np.where(ok, np.abs(delta), -1.0)))
            step = max(float(ratio[r]), 0.0)
            leaving = self.basis[r]
            self.x[q] += direction * step
            self.x[self.basis] = xb + delta * step
            to_upper = bool(delta[r] > 0)
            self.x[leaving] = ub[leaving] if to_upper else lb[leaving]
            self.trace(
                f"primal{phase} it={self.iterations} enter={q} leave={leaving} step={step:.6g}"
            )
            self._pivot(r, q, alpha)
            self.at_upper[leaving] = to_upper
            if step <= 1e-12:
                degenerate += 1
                if degenerate > fallback_after and not bland:
                    bland = True
                    self.trace(f"primal{phase} switching to Bland's rule")
            else:
                degenerate = 0
                bland = False

    # -- dual simplex --

    def dual(self, cost: np.ndarray, max_iter: int) -> str:
        """Dual simplex from a dual-feasible basis; returns OPTIMAL, INFEASIBLE or 'stalled'."""
        lb, ub = self.lb, self.ub
        fixed = lb == ub
        free = (lb == -math.inf) & (ub == math.inf)
        start = self.iterations
        while True:
            if self.iterations - start >= max_iter:
                return "stalled"
            xb = self.x[self.basis]
            lbb = lb[self.basis]
            ubb = ub[self.basis]
            below = lbb - xb
            above = xb - ubb
            viol = np.maximum(below, above)
            r = int(np.argmax(viol))
            if viol[r] <= PRIMAL_TOL:
                return OPTIMAL
            to_lower = below[r] > above[r]
            target = lbb[r] if to_lower else ubb[r]
            _, d = self._reduced_costs(cost)
            rho = self.Binv[r]
            alpha_r = self.AT @ rho
            nb = ~self.is_basic & ~fixed
            can_inc = nb & (~self.at_upper | free)
            can_dec = nb & (self.at_upper | free)
            if to_lower:  # x_Br must rise: dx_B = -alpha_rj * dx_j
                elig = (can_inc & (alpha_r < -PIVOT_TOL)) | (can_dec & (alpha_r > PIVOT_TOL))
            else:
                elig = (can_inc & (alpha_r > PIVOT_TOL)) | (can_dec & (alpha_r < -PIVOT_TOL))
            if not elig.any():
                return INFEASIBLE
            idx = np.flatnonzero(elig)
            ratios = np.abs(d[idx]) / np.abs(alpha_r[idx])
            best = ratios.min()
            ties = idx[ratios <= best + 1e-12]
            q = int(ties[np.argmax(np.abs(alpha_r[ties]))])
            alpha = self._column(q)
            if abs(alpha[r]) < PIVOT_TOL:
                return "stalled"
            dq = (xb[r] - target) / alpha[r]
            leaving = self.basis[r]
            self.x[q] += dq
            self.x[self.basis] = xb - alpha * dq
            self.x[leaving] = target
            self.iterations += 1
            self.trace(f"dual it={self.iterations} enter={q} leave={leaving}")
            self._pivot(r, q, alpha)
            self.at_upper[leaving] = not to_lower

    def dual_feasible(self, cost: np.ndarray) -> bool:
        """Flip bounded nonbasics with wrong-signed reduced costs; False if impossible."""
        _, d = self._reduced_costs(cost)
        lb, ub = self.lb, self.ub
        for j in np.flatnonzero(~self.is_basic):
            if lb[j] == ub[j]:
                continue
            if d[j] < -DUAL_TOL and not self.at_upper[j]:
                if ub[j] == math.inf:
                    return False
                self.at_upper[j] = True
            elif d[j] > DUAL_TOL and (self.at_upper[j] or lb[j] == -math.inf):
                if lb[j] == -math.inf:
                    return False
                self.at_upper[j] = False
            else:
                continue
            self._place_nonbasic(j)
        self._refactor()
        return True

    # -- reporting --

    def dual_bound(self, cost: np.ndarray) -> float:
        """Lagrangian bound ``y b + min_box d x`` for the min-form objective."""
        y, _ = self._reduced_costs(cost)
        d = cost - self.AT @ y
        bound = float(y @ self.sf.b)
        for j in np.flatnonzero(np.abs(d) > DUAL_TOL):
            v = self.lb[j] if d[j] > 0 else self.ub[j]
            if math.isinf(v):
                return -math.inf
            bound += d[j] * v
        return bound


def _basis_tag(basis: np.ndarray) -> str:
    return hashlib.sha1(np.sort(basis).tobytes()).hexdigest()[:12]


def _finish(sim: _Simplex, sf: _StandardForm, status: str) -> LpSolution:
    n = sf.n_struct
    if status != OPTIMAL:
        return LpSolution(status, math.nan, sim.x[:n].copy(), sim.iterations, _basis_tag(sim.basis))
    sim._refactor()
    x = sim.x[:n].copy()
    # snap values sitting within tolerance of a bound
    lo, hi = sim.lb[:n], sim.ub[:n]
    x = np.where(np.abs(x - lo) <= 1e-11, lo, x)
    x = np.where(np.abs(x - hi) <= 1e-11, hi, x)
    obj = float(sf.sign * (sf.c[:n] @ x))
    y, _ = sim._reduced_costs(sf.c)
    bound = sim.dual_bound(sf.c)
    return LpSolution(
        OPTIMAL, obj + 0.0, x, sim.iterations, _basis_tag(sim.basis),
        sf.sign * bound, sf.sign * y[: sf.m].copy(),
    )


def _max_iter(sf: _StandardForm) -> int:
    return 50 * (sf.m + sf.n) + 1000


def _solve_cold(sf: _StandardForm, lb, ub, trace: _Tracer) -> tuple[_Simplex, str]:
    sim = _Simplex(sf, lb.copy(), ub.copy(), trace)
    sim.start_cold()
    limit = _max_iter(sf)
    arts = sim.artificials
    if len(arts):
        phase1 = np.zeros(sf.n)
        phase1[arts] = 1.0
        status = sim.primal(phase1, 1, limit)
        infeas = float(sim.x[arts].sum())
        if status != OPTIMAL or infeas > 1e-7 * max(1.0, float(np.abs(sf.b).max(initial=0.0))):
            return sim, INFEASIBLE
        sim.ub[arts] = 0.0
        sf.ub[arts] = 0.0
    status = sim.primal(sf.c, 2, limit)
    return sim, status


def solve_lp(model: OptModel, trace: TextIO | Callable | None = None, *, relax: bool = False) -> LpSolution:
    """Solve an LP (a model without binaries, or any model with ``relax=True``).

    Raises:
        ModelError: If the model has binaries and ``relax`` is false.
        SolverError: On an unrecoverable numerical failure.
    """
    if model.binaries and not relax:
        raise ModelError("model has binary variables; use solve_milp or relax=True")
    sf = _StandardForm.from_model(model)
    tracer = _Tracer(trace)
    sim, status = _solve_cold(sf, sf.lb, sf.ub, tracer)
    return _finish(sim, sf, status)


# -- branch and bound ----------------------------------------------------------


@dataclass(order=True)
class _Node:
    bound: float
    seq: int
    fixes: dict = field(compare=False)
    basis: np.ndarray | None = field(compare=False, default=None)
    at_upper: np.ndarray | None = field(compare=False, default=None)


def _node_lp(sf, node: _Node, tracer) -> tuple[_Simplex, str]:
    lb = sf.lb.copy()
    ub = sf.ub.copy()
    for j, v in node.fixes.items():
        lb[j] = ub[j] = v
    if node.basis is not None:
        sim = _Simplex(sf, lb, ub, tracer)
        try:
            sim.start_warm(node.basis, node.at_upper)
            if sim.dual_feasible(sf.c):
                status = sim.dual(sf.c, _max_iter(sf))
                if status == OPTIMAL:
                    status = sim.primal(sf.c, 2, _max_iter(sf))
                if status in (OPTIMAL, INFEASIBLE):
                    return sim, status
        except SolverError:
            pass
        tracer(f"bnb warm start failed for node {node.seq}; cold start")
    sf_cold = _StandardForm(
        sf.A[:, : sf.n_struct + sf.m], sf.b, sf.c[: sf.n_struct + sf.m],
        sf.lb[: sf.n_struct + sf.m], sf.ub[: sf.n_struct + sf.m], sf.n_struct, sf.sign,
        sf.binary[: sf.n_struct + sf.m],
    )
    lb_c = lb[: sf.n_struct + sf.m]
    ub_c = ub[: sf.n_struct + sf.m]
    return _solve_cold(sf_cold, lb_c, ub_c, tracer)


def solve_milp(
    model: OptModel,
    node_limit: int = 10**6,
    trace: TextIO | Callable | None = None,
) -> MilpSolution:
    """Exact optimum over the binary variables by LP-based branch-and-bound.

    Raises:
        ResourceError: If ``node_limit`` nodes are explored without closing the gap.
    """
    sf = _StandardForm.from_model(model)
    tracer = _Tracer(trace)
    root_sim, status = _solve_cold(sf, sf.lb, sf.ub, tracer)
    binaries = np.flatnonzero(sf.binary[: sf.n_struct])
    iterations = root_sim.iterations
    if status == UNBOUNDED:
        raise SolverError("LP relaxation is unbounded")
    if status == INFEASIBLE:
        return MilpSolution(INFEASIBLE, None, math.inf * sf.sign, 1, iterations)

    incumbent: LpSolution | None = None
    inc_obj = math.inf  # min form
    heap: list[_Node] = []
    explored = 0
    seq = 0
    pending: tuple[_Node, _Simplex, str] | None = (_Node(-math.inf, 0, {}), root_sim, status)

    def gap_tol(v: float) -> float:
        return 1e-6 * max(1.0, abs(v))

    while pending is not None or heap:
        if pending is None:
            node = heapq.heappop(heap)
            if node.bound >= inc_obj - gap_tol(inc_obj):
                heapq.heappush(heap, node)
                break
            sim, status = _node_lp(sf, node, tracer)
            iterations += sim.iterations
        else:
            node, sim, status = pending
            pending = None
        explored += 1
        if explored > node_limit:
            best = min([inc_obj] + [h.bound for h in heap])
            raise ResourceError(
                f"node budget {node_limit} exhausted; incumbent={sf.sign * inc_obj:.9g} "
                f"bound={sf.sign * best:.9g}",
                incumbent=incumbent, best_bound=sf.sign * best, explored_nodes=explored,
            )
        if status == INFEASIBLE:
            tracer(f"bnb node={node.seq} infeasible")
            continue
        if status != OPTIMAL:
            raise SolverError(f"node {node.seq}: LP status {status}")
        sol = _finish(sim, sim.sf, status)
        obj_min = sf.sign * sol.objective_value
        tracer(f"bnb node={node.seq} fixes={len(node.fixes)} obj={sol.objective_value:.9g}")
        if obj_min >= inc_obj - gap_tol(inc_obj):
            continue
        xb = sol.x[binaries]
        frac = np.minimum(xb - np.floor(xb), np.ceil(xb) - xb)
        if binaries.size == 0 or frac.max() <= INT_TOL:
            sol.x[binaries] = np.round(xb)
            obj_min = float(sf.c[: sf.n_struct] @ sol.x)
            sol = replace(sol, objective_value=sf.sign * obj_min + 0.0)
            incumbent, inc_obj = sol, obj_min
            tracer(f"bnb incumbent {sol.objective_value:.9g} at node {node.seq}")
            continue
        j = int(binaries[int(np.argmax(np.round(frac, 12)))])
        warm_basis = warm_upper = None
        if sim.sf is sf or (sim.sf.n == sf.n and sf.n == sf.n_struct + sf.m):
            warm_basis, warm_upper = sim.basis.copy(), sim.at_upper.copy()
        for v in (1.0, 0.0):
            seq += 1
            fixes = dict(node.fixes)
            fixes[j] = v
            heapq.heappush(heap, _Node(obj_min, seq, fixes, warm_basis, warm_upper))

    if incumbent is None:
        return MilpSolution(INFEASIBLE, None, math.inf * sf.sign, explored, iterations)
    best = min([inc_obj] + [h.bound for h in heap])
    return MilpSolution(OPTIMAL, incumbent, sf.sign * best, explored, iterations)


def solve(model: OptModel, **kwargs) -> LpSolution | MilpSolution:
    """Dispatch to :func:`solve_lp` or :func:`solve_milp` depending on binaries."""
    if model.binaries:
        return solve_milp(model, **kwargs)
    return solve_lp(model, **kwargs)


# -- certification ----------------------------------------------------------------


@dataclass
class Certificate:
    max_violation: float
    violations: list[tuple[str, str, float]]
    tolerance: float

    @property
    def ok(self) -> bool:
        return self.max_violation <= self.tolerance

    def __str__(self) -> str:
        if self.ok:
            return f"certified (max violation {self.max_violation:.3g})"
        worst = sorted(self.violations, key=lambda v: -v[2])[:5]
        return f"max violation {self.max_violation:.3g}: " + ", ".join(
            f"{kind} {name} by {amt:.3g}" for kind, name, amt in worst
        )


def check_solution(model: OptModel, solution, tolerance: float = FEAS_TOL) -> Certificate:
    """Re-evaluate every row, bound and integrality mark of ``model`` at ``solution``.

    Works from the model's term lists, independently of the solver's matrices.
    ``solution`` may be an :class:`LpSolution`, a :class:`MilpSolution` or a
    plain sequence of values.
    """
    if isinstance(solution, MilpSolution):
        solution = solution.incumbent
    values = solution.x if hasattr(solution, "x") else solution
    values = [float(v) for v in values]
    if len(values) != len(model.variables):
        raise ModelError("solution length does not match the model")
    violations = []
    worst = 0.0

    def note(kind, name, amount):
        nonlocal worst
        if amount > 0:
            worst = max(worst, amount)
            if amount > tolerance:
                violations.append((kind, name, amount))

    for v in model.variables:
        x = values[v.id]
        if math.isnan(x):
            note("bound", v.name, math.inf)
            continue
        note("bound", v.name, v.lower - x)
        note("bound", v.name, x - v.upper)
        if v.is_binary:
            note("integrality", v.name, abs(x - round(x)))
    for c in model.constraints:
        lhs = math.fsum(a * values[i] for i, a in c.terms)
        if c.sense == LE:
            note("row", c.tag, lhs - c.rhs)
        elif c.sense == GE:
            note("row", c.tag, c.rhs - lhs)
        else:
            note("row", c.tag, abs(lhs - c.rhs))
    return Certificate(worst, violations, tolerance)
