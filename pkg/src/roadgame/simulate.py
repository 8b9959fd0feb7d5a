"""Tour execution against attack plans, delivery classification, metrics.

A courier walks its planned route edge by edge; each traversal of an
occupied edge costs one fixed ambush delay, after which the courier
continues from the far endpoint.  Early arrival waits (without penalty)
until the window opens.  A delivery is late when it arrives after the
window closes, and critically late when the lateness exceeds half the
window size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .attacks import AttackPlan, select_attack_edges
from .errors import DomainError, ValidationError
from .network import RoadNetwork
from .routing import RoutePlan, plan_route
from .rng import derive_seed

ON_TIME = "on_time"
LATE = "late"
CRITICALLY_LATE = "critically_late"

DEFAULT_AMBUSH_DELAY_S = 600.0


@dataclass(frozen=True)
class Stop:
    node_id: str
    window_start_s: float
    window_end_s: float

    def __post_init__(self):
        if not self.window_start_s < self.window_end_s:
            raise ValidationError(
                f"stop {self.node_id!r}: window start must precede window end")

    @property
    def window_size_s(self) -> float:
        return self.window_end_s - self.window_start_s


@dataclass(frozen=True)
class JobCard:
    """One courier's daily tour: warehouse -> stops in order -> warehouse."""

    courier_id: str
    warehouse: str
    stops: tuple[Stop, ...]
    day_start_s: float = 0.0

    def __post_init__(self):
        if not self.stops:
            raise ValidationError(f"job card {self.courier_id!r} has no stops")


@dataclass(frozen=True)
class TourResult:
    courier_id: str
    arrivals: tuple[float, ...]
    statuses: tuple[str, ...]
    ambush_count: int
    tour_time_s: float


@dataclass(frozen=True)
class RoundMetrics:
    late_fraction: float
    critical_fraction_of_late: float
    mean_tour_time_s: float
    p95_tour_time_s: float
    total_deliveries: int
    total_ambushes: int


def classify_arrival(arrival_s: float, stop: Stop) -> str:
    if arrival_s <= stop.window_end_s:
        return ON_TIME
    if arrival_s - stop.window_end_s > 0.5 * stop.window_size_s:
        return CRITICALLY_LATE
    return LATE


def apply_window_multiplier(fleet: Sequence[JobCard], multiplier: float) -> list[JobCard]:
    """Scale every stop's window size by ``multiplier``, keeping its start."""
    if multiplier < 1:
        raise DomainError(f"window multiplier must be >= 1, got {multiplier}")
    scaled = []
    for card in fleet:
        stops = tuple(
            Stop(s.node_id, s.window_start_s,
                 s.window_start_s + multiplier * s.window_size_s)
            for s in card.stops)
        scaled.append(replace(card, stops=stops))
    return scaled


def run_tour(net: RoadNetwork, plan: RoutePlan, card: JobCard,
             attack: AttackPlan, ambush_delay_s: float = DEFAULT_AMBUSH_DELAY_S) -> TourResult:
    """Execute one tour under an attack plan.

    Raises DomainError when the route does not structurally match the
    card.  A plan whose walk failed marks all remaining deliveries as
    critically late with infinite arrival.
    """
    if not ambush_delay_s > 0:
        raise DomainError("ambush delay must be > 0")
    points = [card.warehouse] + [s.node_id for s in card.stops] + [card.warehouse]
    expected_legs = len(points) - 1
    if plan.failed_leg is None:
        if len(plan.legs) != expected_legs:
            raise DomainError(
                f"route has {len(plan.legs)} legs, card needs {expected_legs}")
    elif len(plan.legs) != plan.failed_leg:
        raise DomainError("failed route carries legs beyond the failure point")

    attacked = attack.edges
    clock = card.day_start_s
    ambushes = 0
    arrivals: list[float] = []
    statuses: list[str] = []
    node = card.warehouse
    tour_time = math.inf

    for i, leg in enumerate(plan.legs):
        for eid in leg:
            edge = net.edges.get(eid)
            if edge is None or node not in (edge.u, edge.v):
                raise DomainError(f"leg {i} does not continue from {node!r}")
            clock += edge.travel_time_s
            if eid in attacked:
                clock += ambush_delay_s
                ambushes += 1
            node = edge.other(node)
        if node != points[i + 1]:
            raise DomainError(f"leg {i} ends at {node!r}, card expects {points[i + 1]!r}")
        if i < len(card.stops):
            stop = card.stops[i]
            arrival = max(clock, stop.window_start_s)
            clock = arrival
            arrivals.append(arrival)
            statuses.append(classify_arrival(arrival, stop))
        else:
            tour_time = clock - card.day_start_s

    if plan.failed_leg is not None:
        for _ in range(len(card.stops) - len(arrivals)):
            arrivals.append(math.inf)
            statuses.append(CRITICALLY_LATE)
        tour_time = math.inf

    return TourResult(card.courier_id, tuple(arrivals), tuple(statuses),
                      ambushes, tour_time)


def metrics_from_tours(tours: Iterable[TourResult]) -> RoundMetrics:
    tours = list(tours)
    total = sum(len(t.statuses) for t in tours)
    late = sum(1 for t in tours for s in t.statuses if s != ON_TIME)
    critical = sum(1 for t in tours for s in t.statuses if s == CRITICALLY_LATE)
    times = np.array([t.tour_time_s for t in tours])
    return RoundMetrics(
        late_fraction=late / total if total else 0.0,
        critical_fraction_of_late=critical / late if late else 0.0,
        mean_tour_time_s=float(times.mean()) if len(times) else 0.0,
        p95_tour_time_s=float(np.percentile(times, 95)) if len(times) else 0.0,
        total_deliveries=total,
        total_ambushes=sum(t.ambush_count for t in tours),
    )


@dataclass(frozen=True)
class RoundDetails:
    """Everything one round produced; metrics plus replayable pieces."""

    attack: AttackPlan
    routes: dict[str, RoutePlan]
    tours: dict[str, TourResult]
    metrics: RoundMetrics


def run_round_details(net: RoadNetwork, fleet: Sequence[JobCard], attack_strategy: str,
                      defense_strategy: str, k: int,
                      ambush_delay_s: float = DEFAULT_AMBUSH_DELAY_S,
                      seed: int = 0, nested_plans: bool = False) -> RoundDetails:
    """One full round: attack phase, then defense routing, then all tours.

    Bit-reproducible given the seed: attack and per-courier route RNG are
    independent substreams keyed by purpose and courier id, so results do
    not depend on execution order.  With ``nested_plans`` the per-seed
    random plan is a prefix of a single permutation, so enlarging k only
    ever adds edges.
    """
    if not fleet:
        raise DomainError("fleet must be nonempty")
    ids = [card.courier_id for card in fleet]
    if len(set(ids)) != len(ids):
        raise DomainError("duplicate courier ids in fleet")

    if nested_plans:
        attack_seed = derive_seed(seed, "attack")
    else:
        attack_seed = derive_seed(seed, "attack", k)
    attack = select_attack_edges(net, attack_strategy, k, seed=attack_seed)

    routes: dict[str, RoutePlan] = {}
    tours: dict[str, TourResult] = {}
    for card in sorted(fleet, key=lambda c: c.courier_id):
        route_seed = derive_seed(seed, "route", card.courier_id)
        route = plan_route(net, card, defense_strategy, seed=route_seed)
        routes[card.courier_id] = route
        tours[card.courier_id] = run_tour(net, route, card, attack, ambush_delay_s)

    return RoundDetails(attack, routes, tours, metrics_from_tours(tours.values()))


def run_round(net: RoadNetwork, fleet: Sequence[JobCard], attack_strategy: str,
              defense_strategy: str, k: int,
              ambush_delay_s: float = DEFAULT_AMBUSH_DELAY_S,
              seed: int = 0, nested_plans: bool = False) -> RoundMetrics:
    return run_round_details(net, fleet, attack_strategy, defense_strategy, k,
                             ambush_delay_s, seed, nested_plans).metrics


def reclassify_with_multiplier(fleet: Sequence[JobCard], details: RoundDetails,
                               multiplier: float) -> RoundMetrics:
    """Metrics the same round would yield with scaled delivery windows.

    Valid because arrivals never depend on window ends and window starts
    are unchanged by scaling; only the lateness classification moves.
    """
    scaled = apply_window_multiplier(fleet, multiplier)
    tours = []
    for card in scaled:
        old = details.tours[card.courier_id]
        statuses = tuple(classify_arrival(arrival, stop)
                         for arrival, stop in zip(old.arrivals, card.stops))
        tours.append(replace(old, statuses=statuses))
    return metrics_from_tours(tours)
