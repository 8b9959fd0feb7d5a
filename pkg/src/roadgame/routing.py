"""Courier routing strategies: job card -> realised route over the network.

A route is a sequence of legs, one per consecutive stop pair
(warehouse -> stops... -> warehouse), each leg an edge-id path.  All
strategies are deterministic given their seed; the caller keys that seed
by (courier, round) so fleet routing is order-insensitive.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

from .analysis import centrality
from .errors import DomainError
from .network import RoadNetwork, edge_disjoint_paths, shortest_path
from .rng import substream

if TYPE_CHECKING:
    from .simulate import JobCard

DEFENSE_STRATEGIES = ("shortest", "random_walk", "disjoint", "inverse", "mixnet")

# A random walk that has not reached its leg target within this many
# steps per node is abandoned; the tour is then marked failed.
WALK_STEP_CAP_FACTOR = 50


@dataclass(frozen=True)
class RoutePlan:
    """Planned legs for one courier; ``failed_leg`` marks an abandoned walk."""

    strategy: str
    legs: tuple[tuple[str, ...], ...]
    seed: int
    failed_leg: int | None = None


def inverse_centrality_scores(net: RoadNetwork) -> dict[str, float]:
    """Per-edge avoidance score blending degree, betweenness and eigenvector.

    For an oriented edge (i, j) the score is the product of node j's
    three centralities over their sum (degree centrality taken as
    deg(j)/|E|); an undirected edge takes the smaller of its two
    orientations, and a zero denominator scores 0.  Pure topology: the
    same network always yields bit-identical scores.
    """
    cached = net._cache.get("inverse_scores")
    if cached is not None:
        return cached
    num_edges = net.num_edges
    betw = centrality(net, "betweenness").node_scores
    eig = centrality(net, "eigenvector").node_scores

    def oriented(j: str) -> float:
        c_deg = net.degree(j) / num_edges
        c_bet = betw[j]
        c_eig = eig[j]
        denom = c_deg + c_bet + c_eig
        if denom == 0:
            return 0.0
        return (c_deg * c_bet * c_eig) / denom

    node_score = {v: oriented(v) for v in net.node_ids}
    scores = {eid: min(node_score[net.edges[eid].u], node_score[net.edges[eid].v])
              for eid in net.edge_ids}
    net._cache["inverse_scores"] = scores
    return scores


def _random_walk_leg(net: RoadNetwork, src: str, dst: str, rng,
                     step_cap: int) -> tuple[str, ...] | None:
    """Uniform neighbour walk until dst; None when the cap is exceeded."""
    if src == dst:
        return ()
    path: list[str] = []
    node = src
    for _ in range(step_cap):
        incident = net.adjacency[node]
        eid, nxt = incident[int(rng.integers(len(incident)))]
        path.append(eid)
        node = nxt
        if node == dst:
            return tuple(path)
    return None


def plan_route(net: RoadNetwork, card: "JobCard", strategy: str, seed: int = 0) -> RoutePlan:
    """Route the card's tour with the given defense strategy.

    mixnet draws one fresh uniform(0, 1) score per edge per call, so each
    courier-round gets its own score vector.
    """
    if strategy not in DEFENSE_STRATEGIES:
        raise DomainError(f"unknown defense strategy {strategy!r}")
    points = [card.warehouse] + [stop.node_id for stop in card.stops] + [card.warehouse]
    for node in points:
        if node not in net.nodes:
            raise DomainError(f"job card stop {node!r} is not in the network")

    legs: list[tuple[str, ...]] = []
    failed_leg: int | None = None

    if strategy == "mixnet":
        rng = substream(seed, "mixnet-scores")
        draws = rng.random(net.num_edges)
        weights = {eid: float(draws[i]) for i, eid in enumerate(net.edge_ids)}
        for a, b in zip(points, points[1:]):
            path, _ = shortest_path(net, a, b, weights)
            legs.append(tuple(path))
    elif strategy == "inverse":
        weights = inverse_centrality_scores(net)
        for a, b in zip(points, points[1:]):
            path, _ = shortest_path(net, a, b, weights)
            legs.append(tuple(path))
    elif strategy == "shortest":
        for a, b in zip(points, points[1:]):
            path, _ = shortest_path(net, a, b)
            legs.append(tuple(path))
    elif strategy == "disjoint":
        rng = substream(seed, "disjoint-choice")
        for a, b in zip(points, points[1:]):
            if a == b:
                legs.append(())
                continue
            options = edge_disjoint_paths(net, a, b)
            choice = options[int(rng.integers(len(options)))]
            legs.append(tuple(choice))
    else:  # random_walk
        rng = substream(seed, "random-walk")
        step_cap = WALK_STEP_CAP_FACTOR * net.num_nodes
        for i, (a, b) in enumerate(zip(points, points[1:])):
            leg = _random_walk_leg(net, a, b, rng, step_cap)
            if leg is None:
                failed_leg = i
                break
            legs.append(leg)

    return RoutePlan(strategy=strategy, legs=tuple(legs), seed=seed, failed_leg=failed_leg)


def leg_node_sequence(net: RoadNetwork, start: str, leg: tuple[str, ...]) -> list[str]:
    """Node sequence visited by a leg, starting at ``start``."""
    nodes = [start]
    current = start
    for eid in leg:
        edge = net.edges.get(eid)
        if edge is None:
            raise DomainError(f"leg references unknown edge {eid!r}")
        if current not in (edge.u, edge.v):
            raise DomainError(f"edge {eid!r} does not touch node {current!r}")
        current = edge.other(current)
        nodes.append(current)
    return nodes


def write_route_plan(plans: dict[str, RoutePlan], path) -> None:
    """Export routes as courier_id,leg_index,edge_id,order rows."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("courier_id,leg_index,edge_id,order\n")
        for courier_id in sorted(plans):
            plan = plans[courier_id]
            for leg_index, leg in enumerate(plan.legs):
                for order, eid in enumerate(leg):
                    fh.write(f"{courier_id},{leg_index},{eid},{order}\n")
