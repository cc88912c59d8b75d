"""Matrix game solver against closed forms, independent LPs, and properties."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import reference
from builders import one_state, random_dense_game
from ergopump.matrix_game import (
    MatrixGameError,
    local_value,
    local_values,
    solve_matrix_game,
    solve_value,
)


def _assert_saddle(matrix, sol, tol=1e-9):
    matrix = np.asarray(matrix, dtype=float)
    assert np.min(sol.row_strategy @ matrix) >= sol.value - tol
    assert np.max(matrix @ sol.col_strategy) <= sol.value + tol
    assert sol.duality_gap <= tol
    for strategy in (sol.row_strategy, sol.col_strategy):
        assert strategy.min() >= 0.0
        assert abs(strategy.sum() - 1.0) <= 1e-12


class TestKnownGames:
    def test_one_by_one(self):
        sol = solve_matrix_game([[4.25]])
        assert sol.value == pytest.approx(4.25)
        assert sol.row_strategy.tolist() == [1.0]
        assert sol.col_strategy.tolist() == [1.0]

    def test_matching_pennies(self):
        sol = solve_matrix_game([[1, -1], [-1, 1]])
        assert sol.value == pytest.approx(0.0, abs=1e-12)
        assert np.allclose(sol.row_strategy, [0.5, 0.5], atol=1e-12)
        assert np.allclose(sol.col_strategy, [0.5, 0.5], atol=1e-12)

    def test_mixed_2x2_against_closed_form(self):
        A = [[3.0, 1.0], [0.0, 2.0]]
        sol = solve_matrix_game(A)
        assert sol.value == pytest.approx(1.5, abs=1e-12)
        row, col = reference.strategies_2x2(A)
        assert np.allclose(sol.row_strategy, row, atol=1e-10)
        assert np.allclose(sol.col_strategy, col, atol=1e-10)
        assert reference.value_support_enum(A) == pytest.approx(1.5, abs=1e-9)

    def test_exact_mode_matches(self):
        sol = solve_matrix_game([[3, 1], [0, 2]], exact=True)
        assert sol.value_exact == pytest.approx(1.5)
        assert [float(f) for f in sol.row_exact] == [0.5, 0.5]
        assert [float(f) for f in sol.col_exact] == [0.25, 0.75]
        assert sol.duality_gap == 0.0


class TestRandomMatrices:
    @pytest.mark.parametrize("seed", range(10))
    def test_saddle_and_oracles(self, seed):
        rng = np.random.default_rng(seed)
        for _ in range(20):
            shape = rng.integers(1, 7, size=2)
            A = rng.uniform(-10, 10, size=shape)
            sol = solve_matrix_game(A)
            _assert_saddle(A, sol)
            assert sol.value == pytest.approx(reference.value_lp(A), abs=1e-8)
            if shape[0] == shape[1] == 2:
                assert sol.value == pytest.approx(reference.value_2x2(A), abs=1e-10)

    def test_determinism(self):
        rng = np.random.default_rng(99)
        A = rng.uniform(-5, 5, size=(4, 5))
        first = solve_matrix_game(A)
        second = solve_matrix_game(A)
        assert first.value == second.value
        assert first.row_strategy.tobytes() == second.row_strategy.tobytes()
        assert first.col_strategy.tobytes() == second.col_strategy.tobytes()

    def test_exact_agrees_with_float(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            A = rng.integers(-5, 6, size=(3, 3)).astype(float)
            plain = solve_matrix_game(A)
            paranoid = solve_matrix_game(A, exact=True)
            assert plain.value == pytest.approx(float(paranoid.value_exact), abs=1e-9)


class TestProperties:
    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(-50, 50), min_size=4, max_size=4),
           st.floats(-100, 100))
    def test_shift_equivariance(self, entries, shift):
        A = np.array(entries).reshape(2, 2)
        base = solve_matrix_game(A).value
        shifted = solve_matrix_game(A + shift).value
        assert shifted == pytest.approx(base + shift, abs=1e-8)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_negation_transpose_duality(self, seed):
        rng = np.random.default_rng(seed)
        A = rng.uniform(-10, 10, size=(rng.integers(1, 5), rng.integers(1, 5)))
        sol = solve_matrix_game(A)
        dual = solve_matrix_game(-A.T)
        assert dual.value == pytest.approx(-sol.value, abs=1e-8)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_monotonicity(self, seed):
        rng = np.random.default_rng(seed)
        shape = (rng.integers(1, 5), rng.integers(1, 5))
        A = rng.uniform(-10, 10, size=shape)
        B = A + rng.uniform(0, 5, size=shape)
        assert solve_matrix_game(A).value <= solve_matrix_game(B).value + 1e-9


class TestLocalValue:
    def test_self_loop_constant(self):
        g = one_state(2.5)
        for c in (0.0, 100.0):
            assert local_value(g, 0, np.array([c])).value == pytest.approx(2.5)

    def test_uniform_shift_invariance(self):
        rng = np.random.default_rng(21)
        g = random_dense_game(rng, n=3)
        x = rng.normal(size=3)
        for v in range(3):
            assert local_value(g, v, x).value == pytest.approx(
                local_value(g, v, x + 42.0).value, abs=1e-9)

    def test_single_state_pump_is_lipschitz(self):
        # lowering one state's potential by delta moves each local value
        # by at most delta
        rng = np.random.default_rng(13)
        for trial in range(10):
            g = random_dense_game(rng, n=3)
            x = rng.normal(size=3) * 5
            delta = float(rng.uniform(0, 3))
            target = int(rng.integers(0, 3))
            bumped = x.copy()
            bumped[target] -= delta
            for v in range(3):
                before = local_value(g, v, x).value
                after = local_value(g, v, bumped).value
                assert abs(after - before) <= delta + 1e-9

    def test_local_values_vector_matches(self):
        rng = np.random.default_rng(2)
        g = random_dense_game(rng, n=4)
        x = rng.normal(size=4)
        vec = local_values(g, x)
        for v in range(4):
            assert vec[v] == pytest.approx(local_value(g, v, x).value, abs=1e-12)


class TestErrors:
    def test_rejects_bad_tol(self):
        with pytest.raises(ValueError):
            solve_matrix_game([[1.0]], tol=0.0)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            solve_matrix_game([[np.inf, 0.0], [0.0, 1.0]])

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            solve_matrix_game(np.zeros((0, 2)))

    def test_solve_value_matches_full_solver(self):
        rng = np.random.default_rng(17)
        A = rng.uniform(-3, 3, size=(4, 4))
        assert solve_value(A.tolist()) == pytest.approx(
            solve_matrix_game(A).value, abs=1e-12)
