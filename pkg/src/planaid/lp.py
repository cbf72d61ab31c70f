"""Self-contained LP / 0-1 MILP solver: dense two-phase simplex + branch and bound.

The simplex is a bounded-variable tableau implementation: upper bounds are
handled in the ratio test (including bound flips) instead of as extra rows.
Pivoting uses Dantzig's rule and switches to Bland's rule permanently after a
streak of degenerate pivots, which guarantees termination.

Two arithmetic modes share the code path: float64 numpy arrays (default) and
exact ``fractions.Fraction`` object arrays with zero tolerances
(``SolveOptions(exact=True)``). Exact mode makes optimal objectives
reproducible bit-for-bit under any column permutation.

Branch and bound is best-bound first (ties FIFO), branching on the most
fractional binary (ties lowest index); callers must supply finite bounds, no
big-M values are invented here.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

import numpy as np

__all__ = [
    "LpError",
    "LpNumericsError",
    "LinearProgram",
    "SolveOptions",
    "SolveReport",
    "solve_lp",
    "solve_milp",
    "write_lp_file",
]

INF = math.inf

LE, GE, EQ = "<=", ">=", "="


class LpError(ValueError):
    """Malformed program (bad bounds, unknown relation, non-finite data)."""


class LpNumericsError(ArithmeticError):
    """The solver produced a solution that fails its own feasibility check."""


@dataclass
class _Var:
    name: str
    lo: float
    hi: float
    binary: bool


class LinearProgram:
    """A linear program under incremental construction.

    Constraints are (sparse coefficient mapping, relation, rhs); objective
    coefficients are set per-variable at creation time or via
    :meth:`set_objective`.
    """

    def __init__(self, sense: str = "max", name: str = ""):
        if sense not in ("min", "max"):
            raise LpError(f"sense must be 'min' or 'max', got {sense!r}")
        self.sense = sense
        self.name = name
        self.variables: list[_Var] = []
        self.objective: dict[int, float] = {}
        self.constraints: list[tuple[dict[int, float], str, float]] = []

    def add_var(
        self,
        name: str | None = None,
        lo: float = 0.0,
        hi: float = INF,
        binary: bool = False,
        obj: float = 0.0,
    ) -> int:
        if binary:
            lo, hi = max(lo, 0.0), min(hi, 1.0)
        if lo > hi:
            raise LpError(f"variable {name!r}: lower bound {lo} above upper bound {hi}")
        j = len(self.variables)
        self.variables.append(_Var(name or f"v{j}", lo, hi, binary))
        if obj:
            if not math.isfinite(obj):
                raise LpError("non-finite objective coefficient")
            self.objective[j] = float(obj)
        return j

    def add_constraint(self, coeffs: Mapping[int, float], rel: str, rhs: float) -> int:
        if rel not in (LE, GE, EQ):
            raise LpError(f"relation must be one of <=, >=, =, got {rel!r}")
        row = {}
        for j, a in coeffs.items():
            if not (0 <= j < len(self.variables)):
                raise LpError(f"constraint references unknown variable {j}")
            if not math.isfinite(a):
                raise LpError("non-finite constraint coefficient")
            if a:
                row[int(j)] = float(a)
        if not math.isfinite(rhs):
            raise LpError("non-finite right-hand side")
        self.constraints.append((row, rel, float(rhs)))
        return len(self.constraints) - 1

    def set_objective(self, coeffs: Mapping[int, float]) -> None:
        for c in coeffs.values():
            if not math.isfinite(c):
                raise LpError("non-finite objective coefficient")
        self.objective = {int(j): float(c) for j, c in coeffs.items() if c}

    @property
    def binaries(self) -> tuple[int, ...]:
        return tuple(j for j, v in enumerate(self.variables) if v.binary)


@dataclass(frozen=True)
class SolveOptions:
    feas_tol: float = 1e-7
    opt_tol: float = 1e-9
    int_tol: float = 1e-6
    iter_limit: int = 50_000
    node_limit: int = 1_000_000
    bland_after: int = 40  # degenerate pivots in a row before switching rules
    exact: bool = False


@dataclass(frozen=True)
class SolveReport:
    status: str  # optimal | infeasible | unbounded | iteration-limit | node-limit
    objective: object | None = None
    values: tuple | None = None
    iterations: int = 0
    nodes: int = 0
    bound_gap: float = 0.0
    incumbents: tuple = ()

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


def _num(value, exact: bool):
    return Fraction(value) if exact else float(value)


def _as_float(v) -> float:
    return v if isinstance(v, float) else float(v)


# ---------------------------------------------------------------------------
# standardization: min c'x, Ax = b, 0 <= x <= ub


@dataclass
class _Standard:
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    ub: np.ndarray
    col_map: list  # ("var", j, lo) | ("mirror", j, hi) | ("pos"|"neg", j, 0) | ("slack", row, 0)
    fixed: dict
    slack_for_row: list
    b_sign_ok: list  # per kept row: original rhs was >= 0 (slack may start basic)
    n_vars: int


def _standardize(lp: LinearProgram, lo, hi, exact: bool):
    n = len(lp.variables)
    zero = _num(0, exact)
    one = _num(1, exact)
    sense = -one if lp.sense == "max" else one

    fixed: dict[int, object] = {}
    col_map: list = []
    col_of: dict[int, list] = {}
    for j in range(n):
        l, h = lo[j], hi[j]
        if l > h:
            return "infeasible"
        if l == h:
            fixed[j] = _num(l, exact)
        elif not math.isinf(l):
            col_of[j] = [(len(col_map), "var")]
            col_map.append(("var", j, _num(l, exact)))
        elif not math.isinf(h):
            col_of[j] = [(len(col_map), "mirror")]
            col_map.append(("mirror", j, _num(h, exact)))
        else:
            col_of[j] = [(len(col_map), "pos"), (len(col_map) + 1, "neg")]
            col_map.append(("pos", j, zero))
            col_map.append(("neg", j, zero))
    n_struct = len(col_map)

    def expand(coeffs, rhs, flip: bool):
        """Substitute fixed vars, shift/mirror/split, return (row dict, new rhs)."""
        sgn = -one if flip else one
        row: dict[int, object] = {}
        acc = sgn * _num(rhs, exact)
        for j, a in coeffs.items():
            a = sgn * _num(a, exact)
            if j in fixed:
                acc = acc - a * fixed[j]
                continue
            for col, kind in col_of[j]:
                ref = col_map[col][2]
                if kind == "var":
                    row[col] = row.get(col, zero) + a
                    acc = acc - a * ref
                elif kind == "mirror":
                    row[col] = row.get(col, zero) - a
                    acc = acc - a * ref
                elif kind == "pos":
                    row[col] = row.get(col, zero) + a
                else:
                    row[col] = row.get(col, zero) - a
        return row, acc

    kept = []
    rtol = 0 if exact else 1e-9
    for coeffs, rel, rhs in lp.constraints:
        row, acc = expand(coeffs, rhs, flip=(rel == GE))
        needs_slack = rel != EQ
        if not row:  # empty after substitution: decide feasibility directly
            if needs_slack:
                if acc < -rtol:
                    return "infeasible"
            elif abs(acc) > rtol:
                return "infeasible"
            continue
        kept.append((row, acc, needs_slack))

    c_std = [zero] * n_struct
    for j, cj in lp.objective.items():
        cj = sense * _num(cj, exact)
        if j in fixed:
            continue
        for col, kind in col_of[j]:
            if kind in ("var", "pos"):
                c_std[col] = c_std[col] + cj
            else:
                c_std[col] = c_std[col] - cj

    ub: list = []
    for kind, j, ref in col_map:
        if kind == "var":
            h = hi[j]
            ub.append(INF if math.isinf(h) else _num(h, exact) - ref)
        elif kind == "mirror":
            l = lo[j]
            ub.append(INF if math.isinf(l) else ref - _num(l, exact))
        else:
            ub.append(INF)

    m = len(kept)
    n_slack = sum(1 for *_r, s in kept if s)
    dtype = object if exact else float
    A = np.zeros((m, n_struct + n_slack), dtype=dtype)
    b = np.empty(m, dtype=dtype)
    slack_for_row: list = []
    b_sign_ok: list = []
    s_idx = n_struct
    for i, (row, acc, needs_slack) in enumerate(kept):
        for col, a in row.items():
            A[i, col] = a
        b[i] = acc
        b_sign_ok.append(acc >= zero)
        if needs_slack:
            A[i, s_idx] = one
            slack_for_row.append(s_idx)
            col_map.append(("slack", i, zero))
            ub.append(INF)
            s_idx += 1
        else:
            slack_for_row.append(None)
    c_full = np.array(list(c_std) + [zero] * n_slack, dtype=dtype)

    if not exact:
        # power-of-two row equilibration: exact in binary floating point
        for i in range(m):
            mx = max(float(np.max(np.abs(A[i]))), abs(float(b[i])))
            if mx > 0.0:
                scale = math.ldexp(1.0, -math.frexp(mx)[1])
                if scale != 1.0:
                    A[i] *= scale
                    b[i] *= scale

    return _Standard(
        A=A,
        b=b,
        c=c_full,
        ub=np.array(ub, dtype=object if exact else float),
        col_map=col_map,
        fixed=fixed,
        slack_for_row=slack_for_row,
        b_sign_ok=b_sign_ok,
        n_vars=n,
    )


# ---------------------------------------------------------------------------
# bounded-variable simplex


class _Tableau:
    def __init__(self, std: _Standard, options: SolveOptions):
        self.opt = options
        self.exact = options.exact
        self.zero = _num(0, self.exact)
        self.tol = self.zero if self.exact else options.opt_tol
        self.ztol = self.zero if self.exact else 1e-11
        self.iterations = 0
        self.bland = False
        self._streak = 0

        m, n = std.A.shape
        dtype = object if self.exact else float
        T = np.array(std.A, dtype=dtype, copy=True)
        xB = np.array(std.b, dtype=dtype, copy=True)
        for i in range(m):
            if xB[i] < self.zero:
                T[i] = -T[i]
                xB[i] = -xB[i]
        basis: list[int] = []
        need_art: list[int] = []
        for i in range(m):
            s = std.slack_for_row[i]
            if s is not None and std.b_sign_ok[i]:
                basis.append(s)
            else:
                basis.append(-1)
                need_art.append(i)
        self.n_real = n
        self.art_cols: list[int] = []
        if need_art:
            ext = np.zeros((m, n + len(need_art)), dtype=dtype)
            ext[:, :n] = T
            for k, i in enumerate(need_art):
                ext[i, n + k] = _num(1, self.exact)
                basis[i] = n + k
                self.art_cols.append(n + k)
            T = ext
        self.T = T
        self.xB = xB
        self.basis = basis
        ub_ext = list(std.ub) + [INF] * len(need_art)
        self.ub = np.array(ub_ext, dtype=object if self.exact else float)
        self.at_upper = np.zeros(self.T.shape[1], dtype=bool)
        self.frozen = np.zeros(self.T.shape[1], dtype=bool)  # artificials that left

    # -- core loop ----------------------------------------------------------

    def run(self, c) -> str:
        d = self._reduced_costs(c)
        basic = np.zeros(self.T.shape[1], dtype=bool)
        for j in self.basis:
            basic[j] = True
        while True:
            if self.iterations >= self.opt.iter_limit:
                return "iteration-limit"
            q, direction = self._entering(d, basic)
            if q is None:
                return "optimal"
            hit = self._ratio_test(q, direction)
            if hit is None:
                return "unbounded"
            t, p, leave_at_upper = hit
            self.iterations += 1
            if (t <= self.ztol) if not self.exact else (t == 0):
                self._streak += 1
                if self._streak > self.opt.bland_after:
                    self.bland = True
            else:
                self._streak = 0
            col = self.T[:, q]
            if p is None:  # bound flip
                if direction > 0:
                    self.xB = self.xB - self.ub[q] * col
                    self.at_upper[q] = True
                else:
                    self.xB = self.xB + self.ub[q] * col
                    self.at_upper[q] = False
                continue
            if direction > 0:
                self.xB = self.xB - t * col
                enter_val = t
            else:
                self.xB = self.xB + t * col
                enter_val = self.ub[q] - t
            leaving = self.basis[p]
            self._pivot(p, q)
            dq = d[q]
            if dq != 0:
                d = d - dq * self.T[p]
            self.xB[p] = enter_val
            self.basis[p] = q
            basic[leaving] = False
            basic[q] = True
            self.at_upper[leaving] = leave_at_upper
            self.at_upper[q] = False
            if leaving >= self.n_real:  # an artificial never re-enters
                self.frozen[leaving] = True
            if not self.exact:
                self.xB[np.abs(self.xB) < 1e-12] = 0.0
                d[np.abs(d) < 1e-12] = 0.0

    def _pivot(self, p: int, q: int) -> None:
        piv = self.T[p, q]
        Tp = self.T[p] / piv
        colc = self.T[:, q].copy()
        self.T = self.T - np.outer(colc, Tp)
        self.T[p] = Tp

    def _reduced_costs(self, c):
        cB = np.array([c[j] for j in self.basis], dtype=c.dtype)
        return c - (cB @ self.T if len(self.basis) else 0)

    def _entering(self, d, basic):
        tol = self.tol
        open_lower = (~basic) & (~self.at_upper) & (~self.frozen)
        open_upper = (~basic) & self.at_upper
        lower_viol = open_lower & (d < -tol)
        upper_viol = open_upper & (d > tol)
        if self.bland:
            cand = np.nonzero(lower_viol | upper_viol)[0]
            if len(cand) == 0:
                return None, 0
            q = int(cand[0])
            return q, (-1 if self.at_upper[q] else +1)
        best_q, best_mag, best_dir = None, None, 0
        idx = np.nonzero(lower_viol)[0]
        if len(idx):
            mags = -d[idx]
            k = int(np.argmax(mags))
            best_q, best_mag, best_dir = int(idx[k]), mags[k], +1
        idx = np.nonzero(upper_viol)[0]
        if len(idx):
            mags = d[idx]
            k = int(np.argmax(mags))
            if best_mag is None or mags[k] > best_mag or (
                mags[k] == best_mag and int(idx[k]) < best_q
            ):
                best_q, best_mag, best_dir = int(idx[k]), mags[k], -1
        return best_q, best_dir

    def _ratio_test(self, q: int, direction: int):
        """Largest feasible step for the entering column. Returns
        (t, row | None, leaving_at_upper), row None meaning a bound flip;
        returns None when the step is unbounded."""
        if self.exact:
            return self._ratio_exact(q, direction)
        col = self.T[:, q] if direction > 0 else -self.T[:, q]
        xB, ub = self.xB, self.ub
        basis = np.array(self.basis, dtype=int)
        ztol = 1e-11

        ts, rows, uppers = [], [], []
        pos = np.nonzero(col > ztol)[0]
        if len(pos):
            ts.append(np.maximum(xB[pos], 0.0) / col[pos])
            rows.append(pos)
            uppers.append(np.zeros(len(pos), dtype=bool))
        ub_b = ub[basis]
        neg = np.nonzero((col < -ztol) & np.isfinite(ub_b))[0]
        if len(neg):
            ts.append(np.maximum(ub_b[neg] - xB[neg], 0.0) / (-col[neg]))
            rows.append(neg)
            uppers.append(np.ones(len(neg), dtype=bool))
        own = ub[q] if np.isfinite(ub[q]) else None
        if not ts:
            if own is None:
                return None
            return own, None, None
        t_all = np.concatenate(ts)
        r_all = np.concatenate(rows)
        u_all = np.concatenate(uppers)
        tmin = float(t_all.min())
        if own is not None and own <= tmin:
            return own, None, None
        winners = np.nonzero(t_all == tmin)[0]
        # Bland-compatible leaving rule: lowest basis variable index among ties
        k = winners[int(np.argmin(basis[r_all[winners]]))]
        return tmin, int(r_all[k]), bool(u_all[k])

    def _ratio_exact(self, q: int, direction: int):
        col = self.T[:, q]
        sign = 1 if direction > 0 else -1
        best_t, best_row, best_upper = None, None, None
        if not math.isinf(_as_float(self.ub[q])):
            best_t = self.ub[q]
        for i in range(len(self.basis)):
            a = col[i] * sign
            if a > 0:
                t = self.xB[i] / a
                upper = False
            elif a < 0:
                u = self.ub[self.basis[i]]
                if math.isinf(_as_float(u)):
                    continue
                t = (u - self.xB[i]) / (-a)
                upper = True
            else:
                continue
            if (
                best_t is None
                or t < best_t
                or (
                    t == best_t
                    and best_row is not None
                    and self.basis[i] < self.basis[best_row]
                )
            ):
                best_t, best_row, best_upper = t, i, upper
        if best_t is None:
            return None
        return best_t, best_row, best_upper

    # -- phase 1 ------------------------------------------------------------

    def phase1(self) -> str:
        if not self.art_cols:
            return "optimal"
        dtype = object if self.exact else float
        c1 = np.zeros(self.T.shape[1], dtype=dtype)
        for j in self.art_cols:
            c1[j] = _num(1, self.exact)
        status = self.run(c1)
        if status == "unbounded":
            raise LpNumericsError("phase-1 objective unbounded")
        if status != "optimal":
            return status
        resid = sum(
            (self.xB[p] for p in range(len(self.basis)) if self.basis[p] >= self.n_real),
            self.zero,
        )
        feas = self.zero if self.exact else self.opt.feas_tol
        if resid > feas:
            return "infeasible"
        self._drop_artificials()
        return "optimal"

    def _drop_artificials(self) -> None:
        drop_rows = []
        for p in range(len(self.basis)):
            if self.basis[p] < self.n_real:
                continue
            row = self.T[p, : self.n_real]
            if self.exact:
                cand = [j for j in range(self.n_real) if row[j] != 0]
            else:
                cand = list(np.nonzero(np.abs(row) > 1e-9)[0])
            if not cand:
                drop_rows.append(p)
                continue
            mags = [abs(row[j]) for j in cand]
            pick = int(cand[int(np.argmax(mags))])
            self._pivot(p, pick)
            self.basis[p] = pick
            if self.at_upper[pick]:
                # entering from its upper bound with a zero-length step
                self.xB[p] = self.ub[pick]
                self.at_upper[pick] = False
            else:
                self.xB[p] = self.zero
        if drop_rows:
            keep = [i for i in range(len(self.basis)) if i not in set(drop_rows)]
            self.T = self.T[keep]
            self.xB = self.xB[keep]
            self.basis = [self.basis[i] for i in keep]
        self.T = self.T[:, : self.n_real]
        self.ub = self.ub[: self.n_real]
        self.at_upper = self.at_upper[: self.n_real]
        self.frozen = self.frozen[: self.n_real]
        self.art_cols = []

    def solution(self):
        x = np.zeros(self.n_real, dtype=object if self.exact else float)
        if self.exact:
            x[:] = self.zero
        for j in range(self.n_real):
            if self.at_upper[j]:
                x[j] = self.ub[j]
        for p, j in enumerate(self.basis):
            x[j] = self.xB[p]
        return x


def _solve_std(std: _Standard, options: SolveOptions):
    tab = _Tableau(std, options)
    status = tab.phase1()
    if status != "optimal":
        return status, None, tab.iterations
    c2 = np.array(std.c, dtype=object if options.exact else float, copy=True)
    status = tab.run(c2)
    if status != "optimal":
        return status, None, tab.iterations
    return "optimal", tab.solution(), tab.iterations


def _py(v):
    """Normalize numpy scalars to plain Python numbers; Fractions pass through."""
    return float(v) if isinstance(v, (float, np.floating)) else v


def _extract(lp: LinearProgram, std: _Standard, x_std, exact: bool):
    values: list = [None] * std.n_vars
    for j, v in std.fixed.items():
        values[j] = _py(v)
    for col, (kind, j, ref) in enumerate(std.col_map):
        if kind == "var":
            values[j] = _py(x_std[col] + ref)
        elif kind == "mirror":
            values[j] = _py(ref - x_std[col])
        elif kind == "pos":
            values[j] = _py(x_std[col] - x_std[col + 1])
    obj = _num(0, exact)
    for j, cj in lp.objective.items():
        obj = obj + _num(cj, exact) * values[j]
    return tuple(values), _py(obj)


def _check_primal(lp: LinearProgram, values, options: SolveOptions) -> None:
    if options.exact:
        for j, var in enumerate(lp.variables):
            v = values[j]
            if v < Fraction(var.lo) if not math.isinf(var.lo) else False:
                raise LpNumericsError(f"variable {var.name} below lower bound")
            if not math.isinf(var.hi) and v > Fraction(var.hi):
                raise LpNumericsError(f"variable {var.name} above upper bound")
        for row, rel, rhs in lp.constraints:
            lhs = sum((Fraction(a) * values[j] for j, a in row.items()), Fraction(0))
            r = Fraction(rhs)
            if (rel == LE and lhs > r) or (rel == GE and lhs < r) or (rel == EQ and lhs != r):
                raise LpNumericsError(f"row violated exactly: {float(lhs)} {rel} {rhs}")
        return
    tol = options.feas_tol
    for j, var in enumerate(lp.variables):
        v = _as_float(values[j])
        scale = 1.0 + abs(v)
        if v < var.lo - tol * scale or v > var.hi + tol * scale:
            raise LpNumericsError(f"variable {var.name} = {v} outside [{var.lo}, {var.hi}]")
    for row, rel, rhs in lp.constraints:
        lhs = sum(a * _as_float(values[j]) for j, a in row.items())
        scale = 1.0 + abs(rhs) + sum(abs(a) for a in row.values())
        if rel == LE and lhs > rhs + tol * scale:
            raise LpNumericsError(f"row violated: {lhs} <= {rhs}")
        if rel == GE and lhs < rhs - tol * scale:
            raise LpNumericsError(f"row violated: {lhs} >= {rhs}")
        if rel == EQ and abs(lhs - rhs) > tol * scale:
            raise LpNumericsError(f"row violated: {lhs} = {rhs}")


def _solve_bounds(lp: LinearProgram, lo, hi, options: SolveOptions) -> SolveReport:
    std = _standardize(lp, lo, hi, options.exact)
    if std == "infeasible":
        return SolveReport(status="infeasible")
    if std.A.shape[1] == 0:  # everything fixed away
        values = tuple(std.fixed[j] for j in range(std.n_vars))
        obj = _num(0, options.exact)
        for j, cj in lp.objective.items():
            obj = obj + _num(cj, options.exact) * values[j]
        try:
            _check_primal_bounds_only(lp, values, lo, hi, options)
        except LpNumericsError:
            return SolveReport(status="infeasible")
        return SolveReport(status="optimal", objective=obj, values=values)
    status, x_std, iters = _solve_std(std, options)
    if status != "optimal":
        return SolveReport(status=status, iterations=iters)
    values, obj = _extract(lp, std, x_std, options.exact)
    _check_primal(lp, values, options)
    return SolveReport(status="optimal", objective=obj, values=values, iterations=iters)


def _check_primal_bounds_only(lp, values, lo, hi, options) -> None:
    tol = 0 if options.exact else options.feas_tol
    for row, rel, rhs in lp.constraints:
        lhs = sum(a * _as_float(values[j]) for j, a in row.items())
        if rel == LE and lhs > rhs + tol:
            raise LpNumericsError("fixed solution violates a row")
        if rel == GE and lhs < rhs - tol:
            raise LpNumericsError("fixed solution violates a row")
        if rel == EQ and abs(lhs - rhs) > tol:
            raise LpNumericsError("fixed solution violates a row")


def solve_lp(lp: LinearProgram, options: SolveOptions | None = None) -> SolveReport:
    """Two-phase simplex solve; binaries are not allowed here."""
    if lp.binaries:
        raise LpError("solve_lp called on a program with binary variables; use solve_milp")
    options = options or SolveOptions()
    lo = [v.lo for v in lp.variables]
    hi = [v.hi for v in lp.variables]
    return _solve_bounds(lp, lo, hi, options)


def solve_milp(lp: LinearProgram, options: SolveOptions | None = None) -> SolveReport:
    """Best-bound branch and bound over the binary variables of ``lp``.

    ``report.nodes`` counts solved relaxations (the root included);
    ``report.incumbents`` is the monotone history of incumbent objectives.
    """
    options = options or SolveOptions()
    bins = lp.binaries
    if not bins:
        rep = solve_lp(lp, options)
        return SolveReport(
            status=rep.status,
            objective=rep.objective,
            values=rep.values,
            iterations=rep.iterations,
            nodes=1,
        )
    bin_set = set(bins)
    base_lo = [v.lo for v in lp.variables]
    base_hi = [v.hi for v in lp.variables]
    maximize = lp.sense == "max"
    int_tol = options.int_tol
    prune_tol = 0 if options.exact else max(options.opt_tol, 1e-9)

    nodes = 0
    iterations = 0
    incumbent: SolveReport | None = None
    incumbents: list = []
    heap: list = []
    seq = 0

    def node_key(obj) -> float:
        f = _as_float(obj)
        return -f if maximize else f

    def relax(lo, hi, count: bool = True):
        nonlocal nodes, iterations
        if count:
            nodes += 1
        rep = _solve_bounds(lp, lo, hi, options)
        iterations += rep.iterations
        return rep

    def most_fractional(values):
        worst_j, worst_f = None, -1.0
        for j in bins:
            v = _as_float(values[j])
            f = abs(v - round(v))
            if f > int_tol and f > worst_f:
                worst_j, worst_f = j, f
        return worst_j

    def accept(lo, hi, rep):
        nonlocal incumbent
        lo2, hi2 = list(lo), list(hi)
        for j in bins:
            lo2[j] = hi2[j] = float(round(_as_float(rep.values[j])))
        clean = relax(lo2, hi2, count=False)  # polish: exact binaries, clean continuations
        cand = clean if clean.status == "optimal" else rep
        if incumbent is None or _improves(cand.objective, incumbent.objective, maximize, 0):
            incumbent = cand
            incumbents.append(cand.objective)

    root = relax(base_lo, base_hi)
    if root.status in ("unbounded", "iteration-limit"):
        return SolveReport(status=root.status, nodes=nodes, iterations=iterations)
    if root.status == "optimal":
        j = most_fractional(root.values)
        if j is None:
            accept(base_lo, base_hi, root)
        else:
            heapq.heappush(heap, (node_key(root.objective), seq, base_lo, base_hi, root))
            seq += 1

    status = "optimal"
    while heap:
        if nodes >= options.node_limit:
            status = "node-limit"
            break
        _key, _s, lo, hi, rep = heapq.heappop(heap)
        if incumbent is not None and not _improves(
            rep.objective, incumbent.objective, maximize, prune_tol
        ):
            break  # best-first: no remaining node can beat the incumbent
        j = most_fractional(rep.values)
        if j is None:  # integral nodes are consumed on push; guard anyway
            accept(lo, hi, rep)
            continue
        for val in (0.0, 1.0):
            lo2, hi2 = list(lo), list(hi)
            lo2[j] = hi2[j] = val
            child = relax(lo2, hi2)
            if child.status == "iteration-limit":
                return SolveReport(status="iteration-limit", nodes=nodes, iterations=iterations)
            if child.status != "optimal":
                continue
            if incumbent is not None and not _improves(
                child.objective, incumbent.objective, maximize, prune_tol
            ):
                continue
            if most_fractional(child.values) is None:
                accept(lo2, hi2, child)
            else:
                heapq.heappush(heap, (node_key(child.objective), seq, lo2, hi2, child))
                seq += 1

    if incumbent is None:
        return SolveReport(
            status="node-limit" if status == "node-limit" else "infeasible",
            nodes=nodes,
            iterations=iterations,
        )
    gap = 0.0
    if heap and status == "node-limit":
        best_open = min(h[0] for h in heap)
        bound = -best_open if maximize else best_open
        gap = abs(bound - _as_float(incumbent.objective))
    values = tuple(
        float(round(_as_float(v))) if j in bin_set else v
        for j, v in enumerate(incumbent.values)
    )
    return SolveReport(
        status=status,
        objective=incumbent.objective,
        values=values,
        iterations=iterations,
        nodes=nodes,
        bound_gap=gap,
        incumbents=tuple(incumbents),
    )


def _improves(a, b, maximize: bool, tol) -> bool:
    """True when objective a is better than b by more than tol."""
    fa, fb = _as_float(a), _as_float(b)
    return fa > fb + tol if maximize else fa < fb - tol


def write_lp_file(lp: LinearProgram, path) -> None:
    """Dump in CPLEX LP text format for cross-checking with external solvers."""
    lines = ["Maximize" if lp.sense == "max" else "Minimize"]
    terms = [
        f"{'+' if c >= 0 else '-'} {abs(c):.12g} {lp.variables[j].name}"
        for j, c in sorted(lp.objective.items())
    ]
    lines.append(" obj: " + (" ".join(terms) if terms else "0 " + lp.variables[0].name))
    lines.append("Subject To")
    for i, (row, rel, rhs) in enumerate(lp.constraints):
        terms = [
            f"{'+' if a >= 0 else '-'} {abs(a):.12g} {lp.variables[j].name}"
            for j, a in sorted(row.items())
        ]
        lines.append(f" c{i}: " + " ".join(terms) + f" {rel} {rhs:.12g}")
    lines.append("Bounds")
    for v in lp.variables:
        if v.binary:
            continue
        lo = "-inf" if math.isinf(v.lo) else f"{v.lo:.12g}"
        hi = "+inf" if math.isinf(v.hi) else f"{v.hi:.12g}"
        lines.append(f" {lo} <= {v.name} <= {hi}")
    bins = [lp.variables[j].name for j in lp.binaries]
    if bins:
        lines.append("Binary")
        lines.append(" " + " ".join(bins))
    lines.append("End")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
