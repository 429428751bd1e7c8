import numpy as np
import pytest

from transfix.engine import iterate_to_fixpoint
from transfix.errors import InnerDivergence, NonConvergence, SignalUndefined
from transfix.games import (NestedGame, SemanticGame, SignalSchedule, affine_nested_game, affine_signal_game,
                            composed_affine, equilibrium_check, inner_equilibrium_affine, play, play_round,
                            solve_inner, solve_nested, union_signal_game, verify_nested_uniqueness)
from transfix.ordinal import OMEGA
from transfix.space import CONTRACTION, MetricSpace, PowersetLattice, builtin_measure

R = MetricSpace(1)


def midpoint(signal=None):
    signal = signal or SignalSchedule.constant(4.0)
    return SemanticGame(R, lambda x, d: (x + d) / 2, signal, builtin_measure("distance-to-signal", R),
                        kind=CONTRACTION, factor=0.5)


def three_quarters():
    # inner Y -> X/2 regardless of Y; outer (X, Y) -> (X + Y)/2 + 1; composed X -> 3X/4 + 1
    return NestedGame(R, R, lambda X, Y: (X + Y) / 2 + 1, lambda X, Y: X / 2 + 0 * Y,
                      inner_kind=CONTRACTION, inner_factor=0.5, outer_kind=CONTRACTION, outer_factor=0.75)


class TestPlayRound:
    def test_midpoint_step(self):
        x, d = play_round(midpoint(), 0.0, 0)
        assert x[0] == 2.0 and d == 2.0

    def test_already_at_target(self):
        x, d = play_round(midpoint(), 4.0, 0)
        assert x[0] == 4.0 and d == 0.0

    def test_lattice_game_measure(self):
        lat = PowersetLattice(["a", "b"])
        g = union_signal_game(lat, SignalSchedule.constant(["b"]))
        x, d = play_round(g, frozenset("a"), 0)
        assert x == frozenset("ab")
        assert d == len(frozenset("ab") ^ frozenset("b"))

    def test_explicit_rounds_then_tail(self):
        sched = SignalSchedule({0: 10.0, 2: -2.0}, 4.0)
        g = midpoint(sched)
        assert play_round(g, 0.0, 0)[0][0] == 5.0
        assert play_round(g, 0.0, 1)[0][0] == 2.0
        assert play_round(g, 0.0, 2)[0][0] == -1.0
        assert sched.tail_start == 3

    def test_signal_undefined(self):
        sched = SignalSchedule({0: 1.0})
        with pytest.raises(SignalUndefined):
            sched.at(1)
        with pytest.raises(SignalUndefined):
            midpoint(sched)


class TestPlay:
    def test_converges_to_tail_target(self):
        cert = play(midpoint(), 0.0, OMEGA)
        assert abs(cert.value[0] - 4.0) <= cert.residual / 0.5 + 1e-12
        assert cert.trace.measure == "distance-to-signal"

    def test_no_closure_before_tail(self):
        # x = 0 is fixed under the first signal, but the tail still moves it
        g = midpoint(SignalSchedule({0: 0.0, 1: 0.0}, 4.0))
        cert = play(g, 0.0, OMEGA)
        assert cert.closure >= 2
        assert abs(cert.value[0] - 4.0) < 1e-8

    def test_discrepancy_descends_after_tail(self):
        g = affine_signal_game(R, 0.5, 0.5, 0.0, SignalSchedule({0: 10.0, 1: -3.0, 2: 7.0}, 4.0),
                               measure="distance-to-signal")
        cert = play(g, 0.0, OMEGA)
        tail = [r.discrepancy for r in cert.trace.stages if r.stage >= 3]
        assert all(b <= a for a, b in zip(tail, tail[1:]))
        assert tail[-1] <= 1e-9

    def test_union_game(self):
        lat = PowersetLattice(list("abcd"))
        g = union_signal_game(lat, SignalSchedule({0: ["a"], 1: ["c"]}, ["b"]))
        cert = play(g, [], OMEGA)
        assert cert.value == frozenset("abc")
        assert cert.residual == 0.0


class TestSolveInner:
    def test_constant_in_y(self):
        cert = solve_inner(three_quarters(), 6.0, 0.0)
        assert cert.value[0] == 3.0 and cert.closure == 1

    def test_averaging_inner(self):
        n = NestedGame(R, R, lambda X, Y: Y, lambda X, Y: (Y + X) / 2, inner_kind=CONTRACTION, inner_factor=0.5)
        assert abs(solve_inner(n, 6.0, 0.0).value[0] - 6.0) <= 1e-9

    def test_expanding_inner_undeclared(self):
        n = NestedGame(R, R, lambda X, Y: Y, lambda X, Y: 2 * Y + X)
        with pytest.raises(InnerDivergence) as info:
            solve_inner(n, 1.0, 1.0)
        assert isinstance(info.value.cause, NonConvergence)

    def test_expanding_inner_declared_contraction(self):
        n = NestedGame(R, R, lambda X, Y: Y, lambda X, Y: 2 * Y + X, inner_kind=CONTRACTION, inner_factor=0.9)
        with pytest.raises(InnerDivergence):
            solve_inner(n, 1.0, 1.0)


class TestSolveNested:
    def test_three_quarters(self):
        cert = solve_nested(three_quarters(), 0.0, 0.0)
        # X = 3X/4 + 1 gives X = 4 and Y* = X/2 = 2
        assert abs(cert.value[0] - 4.0) <= cert.residual / 0.25 + 1e-12
        assert abs(cert.inner_value[0] - 2.0) <= 1e-8
        assert all(r.inner_closure is not None for r in cert.trace.stages)
        assert equilibrium_check(three_quarters(), cert.value)

    def test_three_quarters_matches_plain_iteration(self):
        phi = lambda x: 0.75 * x + 1.0
        for x0 in (-20.0, 0.0, 50.0):
            x = x0
            for _ in range(400):
                x = phi(x)
            assert abs(solve_nested(three_quarters(), x0, 0.0).value[0] - x) < 1e-8

    def test_identity_composition_is_not_unique(self):
        n = NestedGame(R, R, lambda X, Y: Y, lambda X, Y: (Y + X) / 2, inner_kind=CONTRACTION, inner_factor=0.5)
        result = verify_nested_uniqueness(n, [(0.0, 0.0), (1.0, 0.0), (5.0, 2.0)])
        assert result.status == "multiple"
        assert len(result.values) == 3

    def test_translation_diverges(self):
        n = NestedGame(R, R, lambda X, Y: (X + Y) / 2, lambda X, Y: (Y + X + 2) / 2,
                       inner_kind=CONTRACTION, inner_factor=0.5)
        # the sliced inner fixed point is Y = X + 2, so the outer step is X -> X + 1
        assert abs(solve_inner(n, 3.0, 0.0).value[0] - 5.0) < 1e-9
        with pytest.raises(NonConvergence):
            solve_nested(n, 0.0, 0.0, limit_cap=200)

    def test_inner_failure_aborts_outer(self):
        n = NestedGame(R, R, lambda X, Y: Y, lambda X, Y: 2 * Y + X)
        with pytest.raises(InnerDivergence):
            solve_nested(n, 1.0, 1.0)


class TestEquilibriumCheck:
    def test_fixed(self):
        g = midpoint()
        assert equilibrium_check(g, 4.0)

    def test_not_fixed(self):
        assert not equilibrium_check(midpoint(), 0.0)

    def test_nested(self):
        assert equilibrium_check(three_quarters(), 4.0)
        assert not equilibrium_check(three_quarters(), 3.0)


def random_nested(rng, n, m):
    """Affine nested game whose inner and composed maps are contractions."""
    def scaled(rows, cols, norm):
        M = rng.normal(size=(rows, cols))
        return M * norm / np.linalg.norm(M, 2)
    while True:
        A, B, C = scaled(n, n, 0.3), scaled(n, m, 0.3), scaled(m, n, 0.5)
        D = scaled(m, m, rng.uniform(0.1, 0.8))
        game = affine_nested_game(MetricSpace(n), MetricSpace(m), A, B, rng.normal(size=n), C, D,
                                  rng.normal(size=m))
        if game.outer_kind == CONTRACTION:
            return game


class TestComposition:
    @pytest.mark.parametrize("seed", range(6))
    def test_composed_equivalence(self, seed):
        rng = np.random.default_rng(seed)
        game = random_nested(rng, int(rng.integers(1, 4)), int(rng.integers(1, 4)))
        phi = composed_affine(game)
        x0 = rng.normal(size=game.outer_space.dim)
        direct = iterate_to_fixpoint(phi, x0, OMEGA).value
        nested = solve_nested(game, x0, np.zeros(game.inner_space.dim))
        assert np.max(np.abs(direct - nested.value)) <= 1e-8
        assert np.allclose(nested.inner_value, inner_equilibrium_affine(game, nested.value), atol=1e-8)
        assert equilibrium_check(game, nested.value)

    @pytest.mark.parametrize("seed", range(4))
    def test_start_independence(self, seed):
        rng = np.random.default_rng(100 + seed)
        game = random_nested(rng, 2, 2)
        starts = [(rng.normal(scale=20, size=2), rng.normal(scale=20, size=2)) for _ in range(3)]
        result = verify_nested_uniqueness(game, starts)
        assert result.status == "unique"

    def test_closed_form_of_composed_matrix(self):
        game = affine_nested_game(R, R, 0.5, 0.5, 1.0, 0.5, 0.0, 0.0)
        phi = composed_affine(game)
        assert phi(np.array([0.0]))[0] == pytest.approx(1.0)
        assert phi(np.array([4.0]))[0] == pytest.approx(4.0)
