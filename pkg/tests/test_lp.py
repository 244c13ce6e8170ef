import numpy as np
import pytest

from surropt.errors import InputError, ResourceLimitError
from surropt.lp import FEAS_TOL, LinearProgram, dump_lp, solve_lp

from _oracles import enumerate_lp_optimum


def make_random_lp(rng, with_upper=None):
    """A feasible, bounded LP with <= rows around a random interior point."""
    if with_upper is None:
        with_upper = bool(rng.integers(0, 2))
    n = int(rng.integers(2, 7 if with_upper else 9))
    m = int(rng.integers(1, 7))
    A = rng.normal(size=(m, n))
    x0 = rng.uniform(0.0, 2.0, size=n)
    b = A @ x0 + rng.uniform(0.1, 1.0, size=m)
    if with_upper:
        c = rng.normal(size=n)
        upper = x0 + rng.uniform(0.5, 3.0, size=n)
    else:
        c = np.abs(rng.normal(size=n)) + 0.01  # bounded below without uppers
        upper = np.full(n, np.inf)
    return LinearProgram(c=c, A=A, b=b, senses=("<=",) * m, upper=upper), x0


class TestTrivial:
    def test_max_bounded_single_var(self):
        lp = LinearProgram(c=[1.0], A=[[1.0]], b=[1.0], senses=("<=",), maximize=True)
        sol = solve_lp(lp)
        assert sol.status == "optimal"
        assert sol.x[0] == pytest.approx(1.0, abs=1e-9)
        assert sol.objective == pytest.approx(1.0, abs=1e-9)

    def test_min_sum_with_cover(self):
        lp = LinearProgram(c=[1.0, 1.0], A=[[1.0, 1.0]], b=[2.0], senses=(">=",))
        sol = solve_lp(lp)
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(2.0, abs=1e-9)

    def test_equality_row(self):
        lp = LinearProgram(
            c=[2.0, 3.0], A=[[1.0, 1.0]], b=[4.0], senses=("==",), upper=[3.0, 3.0]
        )
        sol = solve_lp(lp)
        assert sol.objective == pytest.approx(9.0, abs=1e-9)

    def test_free_variable(self):
        lp = LinearProgram(
            c=[0.0, 1.0],
            A=[[1.0, -1.0], [-1.0, -1.0]],
            b=[2.0, -2.0],
            senses=("<=", "<="),
            lower=[-np.inf, -np.inf],
        )
        sol = solve_lp(lp)
        assert sol.objective == pytest.approx(0.0, abs=1e-9)

    def test_infeasible(self):
        lp = LinearProgram(c=[1.0], A=[[1.0]], b=[-1.0], senses=("<=",))
        assert solve_lp(lp).status == "infeasible"

    def test_unbounded(self):
        lp = LinearProgram(c=[-1.0], A=[[1.0]], b=[-5.0], senses=(">=",))
        assert solve_lp(lp).status == "unbounded"


class TestAgainstEnumeration:
    @pytest.mark.parametrize("rule", ["auto", "bland"])
    def test_random_instances(self, rule):
        rng = np.random.default_rng(2024)
        for _ in range(40):
            lp, _ = make_random_lp(rng)
            sol = solve_lp(lp, pivot_rule=rule)
            assert sol.status == "optimal"
            ref = enumerate_lp_optimum(lp.c, lp.A, lp.b, upper=lp.upper)
            assert ref is not None
            assert sol.objective == pytest.approx(ref[0], abs=1e-7)

    def test_weak_duality_spot_check(self):
        rng = np.random.default_rng(7)
        for _ in range(5):
            lp, x0 = make_random_lp(rng, with_upper=True)
            sol = solve_lp(lp)
            assert sol.status == "optimal"
            # random convex combinations of feasible points stay feasible
            pts = [x0, sol.x]
            for _ in range(1000):
                w = rng.uniform(size=len(pts))
                w /= w.sum()
                x = sum(wk * np.asarray(p) for wk, p in zip(w, pts))
                val = float(lp.c @ x)
                assert val >= sol.objective - 1e-7 * max(1.0, abs(sol.objective))


class TestDeterminism:
    def test_identical_runs(self):
        rng = np.random.default_rng(99)
        lp, _ = make_random_lp(rng)
        a = solve_lp(lp)
        b = solve_lp(lp)
        assert a.iterations == b.iterations
        assert np.array_equal(a.x, b.x)
        assert a.objective == b.objective


class TestValidation:
    def test_dimension_mismatch(self):
        with pytest.raises(InputError):
            LinearProgram(c=[1.0, 2.0], A=[[1.0]], b=[1.0], senses=("<=",))

    def test_bad_sense(self):
        with pytest.raises(InputError):
            LinearProgram(c=[1.0], A=[[1.0]], b=[1.0], senses=("<",))

    def test_crossed_bounds(self):
        with pytest.raises(InputError):
            LinearProgram(
                c=[1.0], A=[[1.0]], b=[1.0], senses=("<=",), lower=[2.0], upper=[1.0]
            )

    def test_nonfinite_matrix(self):
        with pytest.raises(InputError):
            LinearProgram(c=[np.nan], A=[[1.0]], b=[1.0], senses=("<=",))

    def test_pivot_cap(self):
        rng = np.random.default_rng(13)
        A = rng.uniform(0.5, 2.0, size=(4, 4))
        lp = LinearProgram(
            c=[-1.0, -2.0, -3.0, -4.0],
            A=A,
            b=A.sum(axis=1),
            senses=("<=",) * 4,
        )
        assert solve_lp(lp).iterations > 1
        with pytest.raises(ResourceLimitError):
            solve_lp(lp, max_pivots=1)

    def test_solution_satisfies_constraints(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            lp, _ = make_random_lp(rng)
            sol = solve_lp(lp)
            resid = lp.A @ sol.x - lp.b
            assert np.all(resid <= FEAS_TOL * max(1.0, np.abs(lp.b).max()))
            assert np.all(sol.x >= lp.lower - FEAS_TOL)
            assert np.all(sol.x <= lp.upper + FEAS_TOL)

    def test_dump_layout(self):
        lp = LinearProgram(c=[1.0], A=[[2.0]], b=[3.0], senses=("<=",))
        text = dump_lp(lp)
        assert "min 1 vars, 1 rows" in text
        assert "r0: 2 <= 3" in text
