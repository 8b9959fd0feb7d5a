"""Ambush-interdiction games on road networks: attacks, defenses, simulation."""

from .analysis import (CentralityScores, Partition, agglomerative_modularity,
                       centrality, estimate_visit_frequencies, flow_partition,
                       map_equation_codelength, mixing_partition,
                       mixing_transition_matrix, modularity, partition_cutset,
                       spectral_bisect)
from .attacks import (ATTACK_STRATEGIES, AttackPlan, empty_attack_plan,
                      select_attack_edges, strategy_edge_ranking)
from .errors import (ConvergenceError, DomainError, ParseError, RoadGameError,
                     SolverError, ValidationError)
from .experiment import ExperimentConfig, emit_reports, run_matrix, run_sweep
from .game import (Equilibrium, PayoffMatrix, best_response_cycle,
                   build_payoff_matrix, find_pure_nash, solve_zero_sum)
from .network import (Edge, EdgeSet, Node, RoadNetwork, conductance,
                      edge_disjoint_paths, load_network, save_network,
                      shortest_path)
from .routing import (DEFENSE_STRATEGIES, RoutePlan, inverse_centrality_scores,
                      leg_node_sequence, plan_route)
from .simulate import (JobCard, RoundMetrics, Stop, TourResult,
                       apply_window_multiplier, metrics_from_tours,
                       reclassify_with_multiplier, run_round,
                       run_round_details, run_tour)
from .synth import (TraceTolerance, generate_city, make_fleet, parse_jobcards,
                    synthesize_traces, write_jobcards, write_leg_audit)

__all__ = [name for name in dir() if not name.startswith("_")]
