"""Dense two-phase simplex solver for small linear programs.

Minimizes ``c @ x`` subject to ``a_ub @ x <= b_ub``, ``a_eq @ x == b_eq`` and
per-variable bounds.  Columns are equilibrated to unit magnitude before
iterating, so constraint rows that mix wildly different coefficient scales
do not force pivots on near-zero elements.  Every pivot choice is fixed by a
deterministic rule (first improving column, then largest pivot element among
ratio ties, then lowest basis index), which makes repeated solves
byte-identical; the iteration cap backstops the cycling protection a strict
Bland rule would give.  Solutions are verified against the original program
before being reported optimal.  Sized for the few-dozen-variable subproblems
this package builds, not for large or sparse systems.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

Bound = tuple[float | None, float | None]

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NUMERICAL_FAILURE = "numerical-failure"


@dataclass(frozen=True)
class LinearProgram:
    """Minimization problem; a missing bound side is None, default (0, None)."""

    c: np.ndarray
    a_ub: np.ndarray
    b_ub: np.ndarray
    a_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    bounds: tuple[Bound, ...] | None = None

    def __post_init__(self) -> None:
        c = np.atleast_1d(np.asarray(self.c, dtype=float))
        n = c.size
        a_ub = np.asarray(self.a_ub, dtype=float).reshape(-1, n)
        b_ub = np.atleast_1d(np.asarray(self.b_ub, dtype=float))
        if a_ub.shape[0] != b_ub.size:
            raise ValueError("a_ub and b_ub row counts differ")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "a_ub", a_ub)
        object.__setattr__(self, "b_ub", b_ub)
        if (self.a_eq is None) != (self.b_eq is None):
            raise ValueError("a_eq and b_eq must be given together")
        if self.a_eq is not None:
            a_eq = np.asarray(self.a_eq, dtype=float).reshape(-1, n)
            b_eq = np.atleast_1d(np.asarray(self.b_eq, dtype=float))
            if a_eq.shape[0] != b_eq.size:
                raise ValueError("a_eq and b_eq row counts differ")
            object.__setattr__(self, "a_eq", a_eq)
            object.__setattr__(self, "b_eq", b_eq)
        if self.bounds is not None:
            bounds = tuple(self.bounds)
            if len(bounds) != n:
                raise ValueError("one bound pair per variable required")
            for lo, hi in bounds:
                if lo is not None and hi is not None and lo > hi:
                    raise ValueError("lower bound exceeds upper bound")
            object.__setattr__(self, "bounds", bounds)

    @property
    def n_vars(self) -> int:
        return self.c.size


@dataclass(frozen=True)
class LpSolution:
    """Solver outcome; x and objective are None unless status is optimal."""

    status: str
    x: np.ndarray | None
    objective: float | None
    iterations: int


def _term_string(coeffs: np.ndarray) -> str:
    parts = [f"{v:+.6g}*x{j}" for j, v in enumerate(coeffs) if v != 0.0]
    return " ".join(parts) if parts else "0"


def dump(lp: LinearProgram) -> str:
    """Readable rendering of a program, for traces and debugging."""
    lines = [f"min {_term_string(lp.c)}"]
    for row, rhs in zip(lp.a_ub, lp.b_ub):
        lines.append(f"  {_term_string(row)} <= {rhs:.6g}")
    if lp.a_eq is not None:
        for row, rhs in zip(lp.a_eq, lp.b_eq):
            lines.append(f"  {_term_string(row)} == {rhs:.6g}")
    bounds = lp.bounds or ((0.0, None),) * lp.n_vars
    rendered = ", ".join(
        f"x{j} in [{'-inf' if lo is None else f'{lo:.6g}'}, {'inf' if hi is None else f'{hi:.6g}'}]"
        for j, (lo, hi) in enumerate(bounds)
    )
    lines.append(f"  {rendered}")
    return "\n".join(lines)


def _pivot(tab: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    tab[row] /= tab[row, col]
    for i in range(tab.shape[0]):
        if i != row and tab[i, col] != 0.0:
            tab[i] -= tab[i, col] * tab[row]
    # keep the basic column an exact unit vector
    tab[:, col] = 0.0
    tab[row, col] = 1.0
    basis[row] = col


def _iterate(tab: np.ndarray, basis: np.ndarray, cost: np.ndarray, tol: float, max_iters: int) -> tuple[str, int]:
    """Run simplex pivots under Bland's rule until optimal or unbounded."""
    m, width = tab.shape
    n_cols = width - 1
    for it in range(max_iters):
        reduced = cost - cost[basis] @ tab[:, :n_cols] if m else cost.copy()
        is_basic = np.zeros(n_cols, dtype=bool)
        is_basic[basis] = True
        entering = -1
        for j in range(n_cols):
            if not is_basic[j] and reduced[j] < -tol:
                entering = j
                break
        if entering < 0:
            return OPTIMAL, it
        candidates = [
            (tab[i, -1] / tab[i, entering], i, tab[i, entering])
            for i in range(m)
            if tab[i, entering] > tol
        ]
        if not candidates:
            return UNBOUNDED, it
        least = min(ratio for ratio, _, _ in candidates)
        tied = [(i, coef) for ratio, i, coef in candidates if ratio <= least + tol]
        # among blocking rows, a large pivot element keeps the tableau well
        # conditioned; the basis index settles exact ties deterministically
        best_row = max(tied, key=lambda rc: (rc[1], -basis[rc[0]]))[0]
        _pivot(tab, basis, best_row, entering)
    raise RuntimeError("simplex iteration limit reached")


def solve_lp(lp: LinearProgram, tol: float = 1e-9, max_iters: int = 10000) -> LpSolution:
    """Solve a linear program; statuses are optimal, infeasible or unbounded."""
    n = lp.n_vars
    bounds = lp.bounds or ((0.0, None),) * n

    # Map each variable onto nonnegative standard-form columns.  A finite
    # lower bound shifts, an upper-only bound flips sign, a free variable
    # splits into a difference of two columns.
    offsets = np.zeros(n)
    transform_cols: list[tuple[int, float]] = []
    upper_rows: list[tuple[int, float]] = []
    for j, (lo, hi) in enumerate(bounds):
        if lo is not None:
            offsets[j] = lo
            transform_cols.append((j, 1.0))
            if hi is not None:
                upper_rows.append((len(transform_cols) - 1, hi - lo))
        elif hi is not None:
            offsets[j] = hi
            transform_cols.append((j, -1.0))
        else:
            transform_cols.append((j, 1.0))
            transform_cols.append((j, -1.0))
    n_std = len(transform_cols)
    transform = np.zeros((n, n_std))
    for k, (j, coef) in enumerate(transform_cols):
        transform[j, k] = coef

    a_ub = lp.a_ub @ transform
    b_ub = lp.b_ub - lp.a_ub @ offsets
    if upper_rows:
        extra = np.zeros((len(upper_rows), n_std))
        for i, (k, _) in enumerate(upper_rows):
            extra[i, k] = 1.0
        a_ub = np.vstack([a_ub, extra])
        b_ub = np.concatenate([b_ub, [ub for _, ub in upper_rows]])
    m_ub = b_ub.size
    if lp.a_eq is not None:
        a_eq = lp.a_eq @ transform
        b_eq = lp.b_eq - lp.a_eq @ offsets
    else:
        a_eq = np.zeros((0, n_std))
        b_eq = np.zeros(0)
    m = m_ub + b_eq.size

    # equilibrate: rescale every structural column to unit peak magnitude so
    # no admissible pivot element sits orders of magnitude below the rest of
    # its column
    col_peak = np.max(np.abs(np.vstack([a_ub, a_eq])), axis=0, initial=0.0)
    col_scale = np.where(col_peak > 0.0, 1.0 / np.where(col_peak > 0.0, col_peak, 1.0), 1.0)
    a_ub = a_ub * col_scale
    a_eq = a_eq * col_scale

    # Standard form rows [A | slack | artificial | rhs] with nonnegative rhs.
    body = np.vstack([a_ub, a_eq])
    rhs = np.concatenate([b_ub, b_eq])
    slack = np.vstack([np.eye(m_ub), np.zeros((b_eq.size, m_ub))])
    negative = rhs < 0.0
    body[negative] *= -1.0
    slack[negative] *= -1.0
    rhs = np.abs(rhs)
    needs_artificial = np.ones(m, dtype=bool)
    needs_artificial[:m_ub] = negative[:m_ub]
    art_rows = np.flatnonzero(needs_artificial)
    artificial = np.zeros((m, art_rows.size))
    for k, i in enumerate(art_rows):
        artificial[i, k] = 1.0
    art_start = n_std + m_ub
    tab = np.hstack([body, slack, artificial, rhs[:, None]])

    basis = np.empty(m, dtype=int)
    next_art = art_start
    for i in range(m):
        if needs_artificial[i]:
            basis[i] = next_art
            next_art += 1
        else:
            basis[i] = n_std + i

    iterations = 0
    if art_rows.size:
        phase1_cost = np.zeros(tab.shape[1] - 1)
        phase1_cost[art_start:] = 1.0
        status, used = _iterate(tab, basis, phase1_cost, tol, max_iters)
        iterations += used
        if status != OPTIMAL:
            raise RuntimeError("phase 1 of the simplex method cannot be unbounded")
        feas_gap = phase1_cost[basis] @ tab[:, -1]
        if feas_gap > tol * max(1.0, float(np.max(rhs, initial=0.0))):
            return LpSolution(INFEASIBLE, None, None, iterations)
        # Drive leftover artificials out of the basis; a row with no real
        # pivot candidate is redundant and dropped.
        drop: list[int] = []
        for i in range(m):
            if basis[i] >= art_start:
                row = np.abs(tab[i, :art_start])
                if np.max(row, initial=0.0) > tol:
                    _pivot(tab, basis, i, int(np.argmax(row)))
                else:
                    drop.append(i)
        if drop:
            keep = [i for i in range(m) if i not in drop]
            tab = tab[keep]
            basis = basis[keep]
    tab = np.delete(tab, np.s_[art_start:-1], axis=1)

    cost = np.zeros(tab.shape[1] - 1)
    cost[:n_std] = (lp.c @ transform) * col_scale
    status, used = _iterate(tab, basis, cost, tol, max_iters)
    iterations += used
    if status != OPTIMAL:
        return LpSolution(status, None, None, iterations)
    y = np.zeros(tab.shape[1] - 1)
    y[basis] = tab[:, -1]
    x = offsets + transform @ (col_scale * y[:n_std])
    if _worst_violation(lp, x) > 1e-8 * (1.0 + float(np.max(np.abs(rhs), initial=0.0))):
        return LpSolution(NUMERICAL_FAILURE, None, None, iterations)
    return LpSolution(OPTIMAL, x, float(lp.c @ x), iterations)


def _worst_violation(lp: LinearProgram, x: np.ndarray) -> float:
    """Largest constraint or bound violation of a point, zero when feasible."""
    worst = float(np.max(lp.a_ub @ x - lp.b_ub, initial=0.0))
    if lp.a_eq is not None and lp.a_eq.size:
        worst = max(worst, float(np.max(np.abs(lp.a_eq @ x - lp.b_eq), initial=0.0)))
    for xj, (lo, hi) in zip(x, lp.bounds or ((0.0, None),) * lp.n_vars):
        if lo is not None:
            worst = max(worst, lo - float(xj))
        if hi is not None:
            worst = max(worst, float(xj) - hi)
    return worst
