"""Tests for the two-phase simplex solver.

Small programs are checked against hand solutions and brute-force vertex
enumeration; randomized programs with mixed bound types are cross-checked
against scipy's HiGHS interface.
"""

from itertools import combinations

import numpy as np
import pytest
from scipy.optimize import linprog

from fblmac.simplex import INFEASIBLE, OPTIMAL, UNBOUNDED, LinearProgram, LpSolution, dump, solve_lp

FREE = (None, None)


def test_unique_vertex_hand_example():
    lp = LinearProgram(
        c=[-2.0, -1.0],
        a_ub=[[1.0, 1.0], [1.0, 0.0], [0.0, 1.0]],
        b_ub=[4.0, 2.0, 3.0],
    )
    sol = solve_lp(lp)
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(-6.0, abs=1e-9)
    np.testing.assert_allclose(sol.x, [2.0, 2.0], atol=1e-9)


def test_equality_constraint():
    lp = LinearProgram(
        c=[1.0, 2.0],
        a_ub=np.zeros((0, 2)),
        b_ub=[],
        a_eq=[[1.0, 1.0]],
        b_eq=[2.0],
    )
    sol = solve_lp(lp)
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(2.0, abs=1e-9)
    np.testing.assert_allclose(sol.x, [2.0, 0.0], atol=1e-9)


def test_bound_handling_shift_flip_free_fixed():
    # shifted lower bound
    sol = solve_lp(LinearProgram(c=[1.0], a_ub=np.zeros((0, 1)), b_ub=[], bounds=((-5.0, None),)))
    assert sol.status == OPTIMAL and sol.objective == pytest.approx(-5.0, abs=1e-9)
    # flipped upper-only bound
    sol = solve_lp(LinearProgram(c=[-1.0], a_ub=np.zeros((0, 1)), b_ub=[], bounds=((None, 2.0),)))
    assert sol.status == OPTIMAL and sol.objective == pytest.approx(-2.0, abs=1e-9)
    # free variable pinned by an equality
    sol = solve_lp(LinearProgram(c=[1.0], a_ub=np.zeros((0, 1)), b_ub=[], a_eq=[[1.0]], b_eq=[3.0], bounds=(FREE,)))
    assert sol.status == OPTIMAL and sol.objective == pytest.approx(3.0, abs=1e-9)
    # two-sided interval
    sol = solve_lp(LinearProgram(c=[-1.0], a_ub=np.zeros((0, 1)), b_ub=[], bounds=((0.0, 3.5),)))
    assert sol.status == OPTIMAL and sol.objective == pytest.approx(-3.5, abs=1e-9)
    # degenerate interval fixes the variable
    sol = solve_lp(LinearProgram(c=[1.0], a_ub=np.zeros((0, 1)), b_ub=[], bounds=((2.0, 2.0),)))
    assert sol.status == OPTIMAL and sol.objective == pytest.approx(2.0, abs=1e-9)


def test_infeasible_and_unbounded_detection():
    sol = solve_lp(LinearProgram(c=[1.0], a_ub=[[1.0]], b_ub=[-1.0]))
    assert sol.status == INFEASIBLE
    assert sol.x is None and sol.objective is None
    sol = solve_lp(LinearProgram(c=[-1.0], a_ub=np.zeros((0, 1)), b_ub=[]))
    assert sol.status == UNBOUNDED
    sol = solve_lp(LinearProgram(c=[-1.0, 0.0], a_ub=[[1.0, -1.0]], b_ub=[10.0], bounds=(FREE, FREE)))
    assert sol.status == UNBOUNDED


def test_beale_cycling_example():
    # classic degenerate program that cycles without an anti-cycling rule
    lp = LinearProgram(
        c=[-0.75, 150.0, -0.02, 6.0],
        a_ub=[
            [0.25, -60.0, -0.04, 9.0],
            [0.5, -90.0, -0.02, 3.0],
            [0.0, 0.0, 1.0, 0.0],
        ],
        b_ub=[0.0, 0.0, 1.0],
    )
    sol = solve_lp(lp)
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(-0.05, abs=1e-9)


def test_validation_errors():
    with pytest.raises(ValueError):
        LinearProgram(c=[1.0, 2.0], a_ub=[[1.0, 0.0]], b_ub=[1.0, 2.0])
    with pytest.raises(ValueError):
        LinearProgram(c=[1.0], a_ub=[[1.0]], b_ub=[1.0], a_eq=[[1.0]], b_eq=None)
    with pytest.raises(ValueError):
        LinearProgram(c=[1.0], a_ub=[[1.0]], b_ub=[1.0], bounds=((2.0, 1.0),))
    with pytest.raises(ValueError):
        LinearProgram(c=[1.0, 1.0], a_ub=[[1.0, 0.0]], b_ub=[1.0], bounds=((0.0, None),))


def test_dump_is_readable():
    lp = LinearProgram(c=[1.0, -2.0], a_ub=[[1.0, 1.0]], b_ub=[4.0], bounds=((0.0, None), FREE))
    text = dump(lp)
    assert "min" in text and "<= 4" in text and "x1" in text


def _vertex_enumeration_minimum(a_ub: np.ndarray, b_ub: np.ndarray, c: np.ndarray) -> float:
    """Minimum of c @ x over a full-dimensional bounded polyhedron a_ub x <= b_ub."""
    n = c.size
    best = np.inf
    for rows in combinations(range(b_ub.size), n):
        square = a_ub[list(rows)]
        if abs(np.linalg.det(square)) < 1e-10:
            continue
        x = np.linalg.solve(square, b_ub[list(rows)])
        if np.all(a_ub @ x <= b_ub + 1e-9):
            best = min(best, float(c @ x))
    return best


def test_matches_vertex_enumeration_on_random_polytopes():
    rng = np.random.default_rng(101)
    box = 10.0
    for _ in range(60):
        n = int(rng.integers(2, 5))
        m = int(rng.integers(2, 7))
        a = rng.normal(size=(m, n))
        interior = rng.uniform(-1.0, 1.0, size=n)
        b = a @ interior + rng.uniform(0.1, 2.0, size=m)
        a_full = np.vstack([a, np.eye(n), -np.eye(n)])
        b_full = np.concatenate([b, np.full(n, box), np.full(n, box)])
        c = rng.normal(size=n)
        expected = _vertex_enumeration_minimum(a_full, b_full, c)
        sol = solve_lp(LinearProgram(c=c, a_ub=a_full, b_ub=b_full, bounds=(FREE,) * n))
        assert sol.status == OPTIMAL
        assert sol.objective == pytest.approx(expected, abs=1e-7)


def _random_program(rng: np.random.Generator) -> LinearProgram:
    n = int(rng.integers(2, 7))
    m_ub = int(rng.integers(1, 7))
    m_eq = int(rng.integers(0, 3)) if n > 2 else 0
    bounds = []
    for _ in range(n):
        kind = rng.integers(4)
        if kind == 0:
            bounds.append((0.0, None))
        elif kind == 1:
            bounds.append((float(rng.uniform(-3.0, 0.0)), float(rng.uniform(0.5, 4.0))))
        elif kind == 2:
            bounds.append((None, float(rng.uniform(0.0, 4.0))))
        else:
            bounds.append(FREE)
    return LinearProgram(
        c=rng.normal(size=n),
        a_ub=rng.normal(size=(m_ub, n)),
        b_ub=rng.normal(size=m_ub),
        a_eq=rng.normal(size=(m_eq, n)) if m_eq else None,
        b_eq=rng.normal(size=m_eq) if m_eq else None,
        bounds=tuple(bounds),
    )


def test_matches_scipy_on_random_programs():
    rng = np.random.default_rng(202)
    statuses = {OPTIMAL: 0, INFEASIBLE: 0, UNBOUNDED: 0}
    for _ in range(200):
        lp = _random_program(rng)
        sol = solve_lp(lp)
        reference = linprog(
            lp.c,
            A_ub=lp.a_ub,
            b_ub=lp.b_ub,
            A_eq=lp.a_eq,
            b_eq=lp.b_eq,
            bounds=list(lp.bounds),
            method="highs",
        )
        expected = {0: OPTIMAL, 2: INFEASIBLE, 3: UNBOUNDED}[reference.status]
        assert sol.status == expected
        statuses[sol.status] += 1
        if sol.status == OPTIMAL:
            assert sol.objective == pytest.approx(reference.fun, rel=1e-7, abs=1e-7)
            assert np.all(lp.a_ub @ sol.x <= lp.b_ub + 1e-7)
            if lp.a_eq is not None:
                np.testing.assert_allclose(lp.a_eq @ sol.x, lp.b_eq, atol=1e-7)
    # the sweep must exercise every outcome
    assert min(statuses.values()) > 0


def test_mixed_scale_rows_keep_the_solution_feasible():
    """Rows mixing 1e-9-scale and O(10) coefficients once forced a pivot on a
    near-zero element, after which the tableau drifted out of the feasible
    region while still reporting optimal."""
    lp = LinearProgram(
        c=[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
        a_ub=[
            [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.7930455050338103, 1.794047172593647, 1.3148351491183639, -1.0],
            [0.0, 0.0, 0.0, -1.1638159864993358e-09, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0, -0.02460726048683505, 0.0, 0.0, -1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0, 0.0, -0.003925728046105439, 0.0, 0.0, -1.0, 0.0],
            [-2.997573281864737, 1.0, 1.0, 41.62762027993678, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, -0.8469404323595152, 1.0, 0.0, 5.392653448327667, 0.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
            [1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        ],
        b_ub=[-1.9580420524240045e-07, -3.9599199987819953e-10, -0.02961262736531087,
              -0.021336808343923055, 12.887106791277835, 5.3672169166657, 0.0, 10.0, 10.0],
        bounds=((0.0, None), (0.0, None), (0.0, None), (0.11563752056248688, None),
                (0.9421523843196302, None), (4.553013787219599, None),
                (0.0, 1.0), (0.0, 1.0), (0.0, 1.0), FREE),
    )
    sol = solve_lp(lp)
    assert sol.status == OPTIMAL
    assert np.all(lp.a_ub @ sol.x <= lp.b_ub + 1e-7)
    for value, (lo, hi) in zip(sol.x, lp.bounds):
        if lo is not None:
            assert value >= lo - 1e-9
        if hi is not None:
            assert value <= hi + 1e-9
    reference = linprog(lp.c, A_ub=lp.a_ub, b_ub=lp.b_ub, bounds=list(lp.bounds), method="highs")
    assert sol.objective <= reference.fun + 1e-9


def test_repeated_solves_are_bit_identical():
    rng = np.random.default_rng(303)
    lp = _random_program(rng)
    while solve_lp(lp).status != OPTIMAL:
        lp = _random_program(rng)
    first = solve_lp(lp)
    second = solve_lp(lp)
    assert first.objective == second.objective
    assert np.array_equal(first.x, second.x)
    assert first.iterations == second.iterations


def test_solution_record_fields():
    sol = solve_lp(LinearProgram(c=[1.0], a_ub=[[1.0]], b_ub=[5.0]))
    assert isinstance(sol, LpSolution)
    assert sol.iterations >= 0
    assert sol.x.shape == (1,)
