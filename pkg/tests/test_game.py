import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import closed_form_2x2_value
from roadgame.errors import DomainError
from roadgame.game import (MIXED, PURE, best_response_cycle,
                           build_payoff_matrix, find_pure_nash, solve_zero_sum)
from roadgame.synth import make_fleet

PENNIES = np.array([[1.0, -1.0], [-1.0, 1.0]])
SADDLE = np.array([[3.0, 1.0], [5.0, 2.0]])


class TestSolveZeroSum:
    def test_matching_pennies(self):
        eq = solve_zero_sum(PENNIES, epsilon=1e-6)
        assert eq.value == pytest.approx(0.0, abs=1e-9)
        assert eq.attacker_strategy == pytest.approx([0.5, 0.5], abs=1e-9)
        assert eq.defender_strategy == pytest.approx([0.5, 0.5], abs=1e-9)
        assert eq.kind == MIXED

    def test_2x2_closed_form(self):
        m = np.array([[3.0, 1.0], [0.0, 2.0]])
        eq = solve_zero_sum(m, epsilon=1e-6)
        assert eq.value == pytest.approx(closed_form_2x2_value(3, 1, 0, 2), abs=1e-9)
        assert eq.value == pytest.approx(1.5, abs=1e-9)
        assert eq.attacker_strategy == pytest.approx([0.5, 0.5], abs=1e-9)
        assert eq.defender_strategy == pytest.approx([0.25, 0.75], abs=1e-9)

    def test_saddle_matrix_agrees_with_pure_search(self):
        saddles = find_pure_nash(SADDLE)
        assert saddles == [(1, 1)]
        eq = solve_zero_sum(SADDLE, epsilon=1e-6)
        assert eq.value == pytest.approx(SADDLE[1, 1], abs=1e-9)
        assert eq.kind == PURE
        assert int(np.argmax(eq.attacker_strategy)) == 1
        assert int(np.argmax(eq.defender_strategy)) == 1

    def test_certificate_recomputable_from_vectors(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            m = rng.random((4, 5))
            eq = solve_zero_sum(m, epsilon=1e-6)
            lower = float((eq.attacker_strategy @ m).min())
            upper = float((m @ eq.defender_strategy).max())
            assert lower >= eq.value - eq.epsilon - 1e-12
            assert upper <= eq.value + eq.epsilon + 1e-12
            assert abs(max(0.5 * (upper - lower), 0.0) - eq.epsilon) <= 1e-12

    def test_strategies_are_distributions(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            eq = solve_zero_sum(rng.random((3, 3)), epsilon=1e-6)
            for vec in (eq.attacker_strategy, eq.defender_strategy):
                assert (vec >= 0).all()
                assert abs(float(vec.sum()) - 1.0) <= 1e-9

    def test_negation_with_role_swap_flips_value(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            m = rng.random((3, 4))
            v = solve_zero_sum(m, epsilon=1e-6).value
            v_swapped = solve_zero_sum(-m.T, epsilon=1e-6).value
            assert v_swapped == pytest.approx(-v, abs=2e-6)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.floats(min_value=0.0, max_value=1.0, allow_nan=False),
                    min_size=9, max_size=9))
    def test_value_within_pure_envelope(self, entries):
        m = np.array(entries).reshape(3, 3)
        eq = solve_zero_sum(m, epsilon=1e-6)
        maximin = m.min(axis=1).max()
        minimax = m.max(axis=0).min()
        assert maximin - 1e-9 <= eq.value <= minimax + 1e-9

    def test_epsilon_validation(self):
        with pytest.raises(DomainError):
            solve_zero_sum(PENNIES, epsilon=0.0)

    def test_matrix_validation(self):
        with pytest.raises(DomainError):
            solve_zero_sum(np.zeros((0, 0)))

    def test_uncertifiable_tolerance_reports_best_achieved(self):
        from roadgame.errors import SolverError
        m = np.random.default_rng(1).random((50, 60))
        baseline = solve_zero_sum(m, epsilon=1e-6)
        assert baseline.epsilon > 0  # LP rounding leaves a certifiable gap
        with pytest.raises(SolverError) as exc:
            solve_zero_sum(m, epsilon=baseline.epsilon / 10)
        assert exc.value.achieved_epsilon == baseline.epsilon


class TestFindPureNash:
    def test_matching_pennies_has_none(self):
        assert find_pure_nash(PENNIES) == []
        assert find_pure_nash(np.array([[1.0, 0.0], [0.0, 1.0]])) == []

    def test_constant_matrix_single_cell(self):
        assert find_pure_nash(np.array([[0.7]])) == [(0, 0)]

    def test_ties_are_all_reported(self):
        m = np.array([[1.0, 1.0], [0.0, 0.0]])
        assert find_pure_nash(m) == [(0, 0), (0, 1)]


class TestBestResponseCycle:
    def test_saddle_terminates_at_saddle(self):
        for start in [(0, 0), (0, 1), (1, 0), (1, 1)]:
            cells = best_response_cycle(SADDLE, start)
            assert cells[-1] == (1, 1)

    def test_matching_pennies_four_cycle(self):
        cells = best_response_cycle(PENNIES, (0, 0))
        assert len(cells) == 4
        assert set(cells) == {(0, 0), (0, 1), (1, 0), (1, 1)}

    def test_single_cell_fixed_point(self):
        assert best_response_cycle(np.array([[2.0]]), (0, 0)) == [(0, 0)]

    def test_start_bounds(self):
        with pytest.raises(DomainError):
            best_response_cycle(PENNIES, (2, 0))


class TestBuildPayoffMatrix:
    def test_single_cell_equals_round_metric(self, planted32):
        from roadgame.simulate import run_round
        fleet = make_fleet(planted32, 4, 2, 500.0, seed=1)
        pm = build_payoff_matrix(planted32, fleet, ["random"], ["shortest"],
                                 k=2, ambush_delay_s=600.0, seeds=[7])
        direct = run_round(planted32, fleet, "random", "shortest", 2, 600.0, 7)
        assert pm.payoff[0, 0] == direct.late_fraction
        assert pm.samples_per_cell == 1

    def test_bridge_attack_dominates_random_on_planted(self, planted32):
        fleet = make_fleet(planted32, 6, 2, 500.0, seed=2, warehouse="a01x00",
                           stop_prefixes=("b",))
        pm = build_payoff_matrix(planted32, fleet, ["betweenness", "random"],
                                 ["shortest"], k=2, ambush_delay_s=600.0,
                                 seeds=list(range(6)))
        assert pm.payoff[0, 0] >= pm.payoff[1, 0]

    def test_duplicate_seeds_bit_identical(self, planted32):
        fleet = make_fleet(planted32, 3, 2, 500.0, seed=3)
        pm = build_payoff_matrix(planted32, fleet, ["random"], ["mixnet"],
                                 k=3, ambush_delay_s=600.0, seeds=[5, 5])
        assert pm.per_seed[0, 0, 0] == pm.per_seed[0, 0, 1]

    def test_entries_in_unit_interval(self, planted32):
        fleet = make_fleet(planted32, 3, 2, 500.0, seed=4)
        pm = build_payoff_matrix(planted32, fleet, ["degree", "eigen_c"],
                                 ["shortest", "inverse"], k=2,
                                 ambush_delay_s=600.0, seeds=[0, 1])
        assert ((pm.payoff >= 0) & (pm.payoff <= 1)).all()

    def test_validation(self, planted32):
        fleet = make_fleet(planted32, 2, 1, 500.0, seed=5)
        with pytest.raises(DomainError):
            build_payoff_matrix(planted32, fleet, [], ["shortest"], 1, 600.0, [0])
        with pytest.raises(DomainError):
            build_payoff_matrix(planted32, fleet, ["random"], ["shortest"], 1, 600.0, [])

    def test_unavoidable_bridge_yields_pure_nash_in_dominant_row(self):
        from roadgame.synth import generate_city
        net = generate_city("two_cluster", size_a=16, size_b=16, bridges=1,
                            edge_time_s=60)
        fleet = make_fleet(net, 6, 2, 400.0, seed=1, warehouse="a01x00",
                           stop_prefixes=("b",))
        pm = build_payoff_matrix(net, fleet, ["betweenness", "random", "degree"],
                                 ["shortest", "inverse", "mixnet"], k=1,
                                 ambush_delay_s=600.0, seeds=[0, 1, 2])
        # one bridge, one attacker on it: every defense loses everything
        assert (pm.payoff[0] == 1.0).all()
        saddles = find_pure_nash(pm)
        assert saddles and all(i == 0 for i, _ in saddles)
        eq = solve_zero_sum(pm)
        assert eq.value == pytest.approx(1.0, abs=1e-6)
