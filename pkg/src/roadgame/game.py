"""Payoff-matrix construction and zero-sum equilibrium computation.

The attacker picks rows and maximises expected late fraction; the
defender picks columns and minimises it.  Mixed equilibria come from a
linear program, but the returned tolerance is always re-certified from
the returned strategy vectors rather than trusted from the solver.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import DomainError, SolverError
from .simulate import JobCard, run_round
from .network import RoadNetwork

PURE = "pure"
MIXED = "mixed"

_ONE_HOT_TOL = 1e-9


@dataclass(frozen=True)
class PayoffMatrix:
    """Expected late fraction per (attack, defense) cell.

    ``per_seed`` keeps the individual round outcomes (attacks x defenses
    x seeds) so confidence intervals can be reported downstream.
    """

    attacks: tuple[str, ...]
    defenses: tuple[str, ...]
    payoff: np.ndarray
    per_seed: np.ndarray
    seeds: tuple[int, ...]

    @property
    def samples_per_cell(self) -> int:
        return len(self.seeds)


@dataclass(frozen=True)
class Equilibrium:
    kind: str
    attacker_strategy: np.ndarray
    defender_strategy: np.ndarray
    value: float
    epsilon: float


def _as_matrix(matrix) -> np.ndarray:
    if isinstance(matrix, PayoffMatrix):
        return np.asarray(matrix.payoff, dtype=float)
    out = np.asarray(matrix, dtype=float)
    if out.ndim != 2 or out.size == 0:
        raise DomainError("payoff matrix must be 2-D and nonempty")
    return out


def build_payoff_matrix(net: RoadNetwork, fleet: Sequence[JobCard],
                        attack_list: Sequence[str], defense_list: Sequence[str],
                        k: int, ambush_delay_s: float, seeds: Sequence[int],
                        nested_plans: bool = False) -> PayoffMatrix:
    """Simulate every (attack, defense, seed) round; cell = mean late fraction."""
    if not attack_list or not defense_list:
        raise DomainError("strategy lists must be nonempty")
    if not seeds:
        raise DomainError("at least one seed is required")
    per_seed = np.zeros((len(attack_list), len(defense_list), len(seeds)))
    for i, attack in enumerate(attack_list):
        for j, defense in enumerate(defense_list):
            for s, seed in enumerate(seeds):
                metrics = run_round(net, fleet, attack, defense, k,
                                    ambush_delay_s, seed, nested_plans)
                per_seed[i, j, s] = metrics.late_fraction
    return PayoffMatrix(tuple(attack_list), tuple(defense_list),
                        per_seed.mean(axis=2), per_seed, tuple(seeds))


def find_pure_nash(matrix) -> list[tuple[int, int]]:
    """All saddle cells: column maxima that are also row minima (ties kept)."""
    a = _as_matrix(matrix)
    col_max = a.max(axis=0)
    row_min = a.min(axis=1)
    saddles = []
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            if a[i, j] == col_max[j] and a[i, j] == row_min[i]:
                saddles.append((i, j))
    return saddles


def _solve_maximin(a: np.ndarray) -> np.ndarray:
    """LP for the row player's maximin mixed strategy of matrix ``a``."""
    m, n = a.shape
    # variables: x_0..x_{m-1}, v ; maximise v s.t. A^T x >= v, sum x = 1
    c = np.zeros(m + 1)
    c[-1] = -1.0
    a_ub = np.hstack([-a.T, np.ones((n, 1))])
    b_ub = np.zeros(n)
    a_eq = np.zeros((1, m + 1))
    a_eq[0, :m] = 1.0
    b_eq = np.ones(1)
    bounds = [(0.0, None)] * m + [(None, None)]
    result = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
                     bounds=bounds, method="highs")
    if not result.success:
        raise SolverError(f"linear program failed: {result.message}")
    x = np.maximum(result.x[:m], 0.0)
    return x / x.sum()


def solve_zero_sum(matrix, epsilon: float = 1e-6) -> Equilibrium:
    """Mixed-strategy solution with a certified epsilon guarantee.

    The guarantee min_j x^T A e_j >= v - eps and max_i e_i^T A y <= v + eps
    is recomputed from the returned vectors; failure to certify within
    the requested tolerance raises with the best achieved epsilon.
    """
    if not epsilon > 0:
        raise DomainError("epsilon must be > 0")
    a = _as_matrix(matrix)
    x = _solve_maximin(a)
    y = _solve_maximin(-a.T)
    lower = float((x @ a).min())
    upper = float((a @ y).max())
    value = 0.5 * (lower + upper)
    achieved = max(0.5 * (upper - lower), 0.0)
    if achieved > epsilon:
        raise SolverError(
            f"could not certify tolerance {epsilon:g}; achieved {achieved:g}",
            achieved_epsilon=achieved)
    kind = PURE if (x.max() >= 1 - _ONE_HOT_TOL and y.max() >= 1 - _ONE_HOT_TOL) else MIXED
    return Equilibrium(kind, x, y, value, achieved)


def best_response_cycle(matrix, start: tuple[int, int]) -> list[tuple[int, int]]:
    """Alternating best-response trajectory from a starting cell.

    The attacker best-responds to the current column, then the defender
    to the resulting row (ties break to the smallest index).  The cell
    sequence is recorded at each change and iteration stops when a cell
    repeats or a full round leaves the cell fixed; a length-1 result is a
    pure saddle.
    """
    a = _as_matrix(matrix)
    row, col = start
    if not (0 <= row < a.shape[0] and 0 <= col < a.shape[1]):
        raise DomainError(f"start cell {start} outside matrix")
    visited = [(row, col)]
    seen = {(row, col)}
    while True:
        moved = False
        new_row = int(np.argmax(a[:, col]))
        if new_row != row:
            row = new_row
            moved = True
            if (row, col) in seen:
                return visited
            visited.append((row, col))
            seen.add((row, col))
        new_col = int(np.argmin(a[row, :]))
        if new_col != col:
            col = new_col
            moved = True
            if (row, col) in seen:
                return visited
            visited.append((row, col))
            seen.add((row, col))
        if not moved:
            return visited
