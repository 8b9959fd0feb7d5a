"""Configuration-driven experiment runner: matrices, sweeps, reports.

Configs are flat ``key = value`` text (lists comma-separated) so a run is
fully described by bytes that hash stably; every output is a pure
function of (config, seeds).  Cells and sweep points are independent
simulations and may be dispatched to a process pool -- results are
collected in task order, so worker count never changes any output byte.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from .attacks import ATTACK_STRATEGIES
from .errors import DomainError, ParseError, ValidationError
from .game import Equilibrium, PayoffMatrix, find_pure_nash, solve_zero_sum
from .network import RoadNetwork, load_network
from .routing import DEFENSE_STRATEGIES
from .simulate import (JobCard, RoundMetrics, reclassify_with_multiplier,
                       run_round, run_round_details)
from .synth import generate_city, make_fleet, parse_jobcards

DEFAULT_DEFENSES = ("shortest", "inverse", "mixnet")
DEFAULT_WINDOW_MULTIPLIERS = tuple(round(1.0 + 0.25 * i, 2) for i in range(11))  # 1.0 .. 3.5
DEFAULT_ATTACKER_COUNTS = (1, 5, 10, 20, 30, 40, 50)
DEFAULT_SEEDS = tuple(range(10))

ROUND_HEADER = ("attack,defense,k,M,window_mult,late_frac,crit_frac_of_late,"
                "mean_tour_s,p95_tour_s,ambushes")
SWEEP_HEADER = ("attack,defense,k,M,window_mult,seed,late_frac,crit_frac_of_late,"
                "mean_tour_s,p95_tour_s,ambushes")


def _fmt(x: float) -> str:
    return f"{x:.9g}"


@dataclass(frozen=True)
class ExperimentConfig:
    # network source
    network_kind: str = "grid"  # files | grid | geometric | two_cluster
    nodes_file: str = ""
    edges_file: str = ""
    grid_rows: int = 8
    grid_cols: int = 8
    edge_time_s: float = 60.0
    geo_n: int = 64
    geo_radius_m: float = 200.0
    geo_side_m: float = 1000.0
    cluster_size_a: int = 16
    cluster_size_b: int = 16
    bridges: int = 2
    bridge_time_s: float = -1.0  # <0 -> edge_time_s
    bypass_count: int = 0
    bypass_time_s: float = -1.0  # <0 -> 10 * edge_time_s
    city_seed: int = 0
    # fleet source
    fleet_kind: str = "random"  # file | random
    jobcards_file: str = ""
    fleet_couriers: int = 10
    fleet_stops: int = 4
    fleet_slack_s: float = 900.0
    fleet_day_start_s: float = 0.0
    fleet_warehouse: str = "auto"
    fleet_stop_prefixes: tuple[str, ...] = ()
    fleet_seed: int = 0
    # game settings
    attacks: tuple[str, ...] = ATTACK_STRATEGIES
    defenses: tuple[str, ...] = DEFAULT_DEFENSES
    k: int = 30
    ambush_delay_s: float = 600.0
    window_multipliers: tuple[float, ...] = DEFAULT_WINDOW_MULTIPLIERS
    attacker_counts: tuple[int, ...] = DEFAULT_ATTACKER_COUNTS
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    nested_plans: bool = False
    output_dir: str = "out"
    workers: int = 1

    def __post_init__(self):
        if self.k < 1:
            raise ValidationError("k must be >= 1")
        if not self.attacks or not self.defenses or not self.seeds:
            raise ValidationError("strategy lists and seeds must be nonempty")
        for strategy in self.attacks:
            if strategy not in ATTACK_STRATEGIES:
                raise ValidationError(f"unknown attack strategy {strategy!r}")
        for strategy in self.defenses:
            if strategy not in DEFENSE_STRATEGIES:
                raise ValidationError(f"unknown defense strategy {strategy!r}")
        if any(m < 1 for m in self.window_multipliers):
            raise ValidationError("window multipliers must be >= 1")
        if any(k < 1 for k in self.attacker_counts):
            raise ValidationError("attacker counts must be >= 1")
        if self.workers < 1:
            raise ValidationError("workers must be >= 1")

    # -- serialisation --------------------------------------------------

    def resolved_lines(self) -> tuple[str, ...]:
        """Canonical ``key = value`` lines covering every experiment field.

        ``workers`` is excluded: it only dispatches work and never changes
        an output byte, so it must not perturb the config hash.
        """
        lines = []
        for key, value in sorted(vars(self).items()):
            if key == "workers":
                continue
            if isinstance(value, tuple):
                rendered = ",".join(_fmt(v) if isinstance(v, float) else str(v)
                                    for v in value)
            elif isinstance(value, bool):
                rendered = "true" if value else "false"
            elif isinstance(value, float):
                rendered = _fmt(value)
            else:
                rendered = str(value)
            lines.append(f"{key} = {rendered}")
        return tuple(lines)

    def config_hash(self) -> str:
        payload = "\n".join(self.resolved_lines()).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()

    # -- construction ---------------------------------------------------

    @classmethod
    def from_mapping(cls, raw: dict[str, str]) -> "ExperimentConfig":
        kwargs = {}
        defaults = cls()
        for key, text in raw.items():
            if not hasattr(defaults, key):
                raise ParseError(f"unknown config key {key!r}")
            current = getattr(defaults, key)
            if isinstance(current, bool):
                kwargs[key] = text.strip().lower() in ("1", "true", "yes", "on")
            elif isinstance(current, int):
                kwargs[key] = int(text)
            elif isinstance(current, float):
                kwargs[key] = float(text)
            elif isinstance(current, tuple):
                items = [part.strip() for part in text.split(",") if part.strip()]
                if current and isinstance(current[0], float):
                    kwargs[key] = tuple(float(v) for v in items)
                elif current and isinstance(current[0], int):
                    kwargs[key] = tuple(int(v) for v in items)
                else:
                    kwargs[key] = tuple(items)
            else:
                kwargs[key] = text.strip()
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        raw: dict[str, str] = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ParseError(f"{path}:{lineno}: expected 'key = value'")
                key, _, value = line.partition("=")
                raw[key.strip()] = value.strip()
        return cls.from_mapping(raw)

    # -- scenario building ------------------------------------------------

    def build_network(self) -> RoadNetwork:
        if self.network_kind == "files":
            if not self.nodes_file or not self.edges_file:
                raise ValidationError("network_kind=files needs nodes_file and edges_file")
            return load_network(self.nodes_file, self.edges_file)
        if self.network_kind == "grid":
            return generate_city("grid", rows=self.grid_rows, cols=self.grid_cols,
                                 edge_time_s=self.edge_time_s)
        if self.network_kind == "geometric":
            return generate_city("geometric", seed=self.city_seed, n=self.geo_n,
                                 radius_m=self.geo_radius_m, side_m=self.geo_side_m)
        if self.network_kind == "two_cluster":
            return generate_city(
                "two_cluster", size_a=self.cluster_size_a, size_b=self.cluster_size_b,
                bridges=self.bridges, edge_time_s=self.edge_time_s,
                bridge_time_s=self.bridge_time_s if self.bridge_time_s > 0 else None,
                bypass_count=self.bypass_count,
                bypass_time_s=self.bypass_time_s if self.bypass_time_s > 0 else None)
        raise ValidationError(f"unknown network_kind {self.network_kind!r}")

    def build_fleet(self, net: RoadNetwork) -> list[JobCard]:
        if self.fleet_kind == "file":
            if not self.jobcards_file:
                raise ValidationError("fleet_kind=file needs jobcards_file")
            return parse_jobcards(self.jobcards_file)
        if self.fleet_kind == "random":
            warehouse = None if self.fleet_warehouse == "auto" else self.fleet_warehouse
            return make_fleet(net, self.fleet_couriers, self.fleet_stops,
                              self.fleet_slack_s, seed=self.fleet_seed,
                              day_start_s=self.fleet_day_start_s, warehouse=warehouse,
                              stop_prefixes=self.fleet_stop_prefixes or None)
        raise ValidationError(f"unknown fleet_kind {self.fleet_kind!r}")


# -- per-process scenario cache (worker pools rebuild once per process) -------

_SCENARIO_CACHE: dict[tuple[str, ...], tuple[RoadNetwork, list[JobCard]]] = {}


def _scenario(cfg_lines: tuple[str, ...]) -> tuple[RoadNetwork, list[JobCard]]:
    cached = _SCENARIO_CACHE.get(cfg_lines)
    if cached is None:
        cfg = ExperimentConfig.from_mapping(
            {k.strip(): v.strip() for k, v in
             (line.partition("=")[::2] for line in cfg_lines)})
        net = cfg.build_network()
        cached = (net, cfg.build_fleet(net))
        _SCENARIO_CACHE.clear()  # keep at most one scenario per process
        _SCENARIO_CACHE[cfg_lines] = cached
    return cached


def _metrics_tuple(m: RoundMetrics) -> tuple:
    return (m.late_fraction, m.critical_fraction_of_late, m.mean_tour_time_s,
            m.p95_tour_time_s, m.total_deliveries, m.total_ambushes)


def _matrix_cell_task(args) -> tuple:
    cfg_lines, attack, defense, seed = args
    cfg = _config_from_lines(cfg_lines)
    net, fleet = _scenario(cfg_lines)
    metrics = run_round(net, fleet, attack, defense, cfg.k, cfg.ambush_delay_s,
                        seed, cfg.nested_plans)
    return (attack, defense, seed) + _metrics_tuple(metrics)


def _window_sweep_task(args) -> list[tuple]:
    cfg_lines, attack, defense, seed = args
    cfg = _config_from_lines(cfg_lines)
    net, fleet = _scenario(cfg_lines)
    details = run_round_details(net, fleet, attack, defense, cfg.k,
                                cfg.ambush_delay_s, seed, cfg.nested_plans)
    rows = []
    for mult in cfg.window_multipliers:
        metrics = reclassify_with_multiplier(fleet, details, mult)
        rows.append((attack, defense, cfg.k, mult, seed) + _metrics_tuple(metrics))
    return rows


def _attacker_sweep_task(args) -> list[tuple]:
    cfg_lines, attack, defense, seed = args
    cfg = _config_from_lines(cfg_lines)
    net, fleet = _scenario(cfg_lines)
    rows = []
    for k in cfg.attacker_counts:
        metrics = run_round(net, fleet, attack, defense, k, cfg.ambush_delay_s,
                            seed, cfg.nested_plans)
        rows.append((attack, defense, k, 1.0, seed) + _metrics_tuple(metrics))
    return rows


def _config_from_lines(cfg_lines: tuple[str, ...]) -> ExperimentConfig:
    return ExperimentConfig.from_mapping(
        {key.strip(): value.strip() for key, _, value in
         (line.partition("=") for line in cfg_lines)})


def _map_tasks(fn, tasks, workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


# -- matrix -------------------------------------------------------------------


@dataclass(frozen=True)
class MatrixResult:
    config: ExperimentConfig
    payoff: PayoffMatrix
    cell_metrics: dict[tuple[str, str, int], RoundMetrics]
    pure_equilibria: list[tuple[int, int]]
    mixed: Equilibrium


def run_matrix(cfg: ExperimentConfig) -> MatrixResult:
    """Full attack x defense payoff matrix plus its equilibria."""
    lines = cfg.resolved_lines()
    tasks = [(lines, attack, defense, seed)
             for attack in cfg.attacks
             for defense in cfg.defenses
             for seed in cfg.seeds]
    results = _map_tasks(_matrix_cell_task, tasks, cfg.workers)

    cell_metrics: dict[tuple[str, str, int], RoundMetrics] = {}
    per_seed = np.zeros((len(cfg.attacks), len(cfg.defenses), len(cfg.seeds)))
    for row in results:
        attack, defense, seed = row[0], row[1], row[2]
        metrics = RoundMetrics(*row[3:])
        cell_metrics[(attack, defense, seed)] = metrics
        i = cfg.attacks.index(attack)
        j = cfg.defenses.index(defense)
        s = cfg.seeds.index(seed)
        per_seed[i, j, s] = metrics.late_fraction

    payoff = PayoffMatrix(cfg.attacks, cfg.defenses, per_seed.mean(axis=2),
                          per_seed, cfg.seeds)
    pure = find_pure_nash(payoff)
    mixed = solve_zero_sum(payoff)
    return MatrixResult(cfg, payoff, cell_metrics, pure, mixed)


def run_sweep(cfg: ExperimentConfig, axis: str) -> list[tuple]:
    """Sweep rows (attack, defense, k, window_mult, seed, metrics...)."""
    if axis not in ("window", "attackers"):
        raise DomainError(f"unknown sweep axis {axis!r}")
    lines = cfg.resolved_lines()
    tasks = [(lines, attack, defense, seed)
             for attack in cfg.attacks
             for defense in cfg.defenses
             for seed in cfg.seeds]
    fn = _window_sweep_task if axis == "window" else _attacker_sweep_task
    nested = _map_tasks(fn, tasks, cfg.workers)
    return [row for group in nested for row in group]


# -- report emission -----------------------------------------------------------


def _write_lines(path: Path, lines: list[str]) -> None:
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def emit_reports(cfg: ExperimentConfig, out_dir,
                 matrix: MatrixResult | None = None,
                 window_rows: list[tuple] | None = None,
                 attacker_rows: list[tuple] | None = None) -> None:
    """Write the standard report files; absent sections yield header-only files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    payoff_lines = ["attack,defense,payoff_mean,payoff_std,n"]
    critical_lines = ["attack,defense,critical_pct_of_late"]
    equilibria_lines = ["kind,player,strategy,probability,value,epsilon"]
    if matrix is not None:
        pm = matrix.payoff
        for i, attack in enumerate(pm.attacks):
            for j, defense in enumerate(pm.defenses):
                samples = pm.per_seed[i, j]
                payoff_lines.append(
                    f"{attack},{defense},{_fmt(pm.payoff[i, j])},"
                    f"{_fmt(float(samples.std()))},{len(samples)}")
                crit = [matrix.cell_metrics[(attack, defense, seed)].critical_fraction_of_late
                        for seed in cfg.seeds]
                critical_lines.append(
                    f"{attack},{defense},{_fmt(100.0 * sum(crit) / len(crit))}")
        for i, j in matrix.pure_equilibria:
            value = _fmt(pm.payoff[i, j])
            equilibria_lines.append(f"pure,attacker,{pm.attacks[i]},1,{value},0")
            equilibria_lines.append(f"pure,defender,{pm.defenses[j]},1,{value},0")
        mixed = matrix.mixed
        for i, attack in enumerate(pm.attacks):
            equilibria_lines.append(
                f"mixed,attacker,{attack},{_fmt(float(mixed.attacker_strategy[i]))},"
                f"{_fmt(mixed.value)},{_fmt(mixed.epsilon)}")
        for j, defense in enumerate(pm.defenses):
            equilibria_lines.append(
                f"mixed,defender,{defense},{_fmt(float(mixed.defender_strategy[j]))},"
                f"{_fmt(mixed.value)},{_fmt(mixed.epsilon)}")

    def sweep_lines(rows: list[tuple] | None) -> list[str]:
        lines = [SWEEP_HEADER]
        for row in rows or []:
            attack, defense, k, mult, seed, late, crit, mean_t, p95_t, total, ambushes = row
            lines.append(f"{attack},{defense},{k},{_fmt(cfg.ambush_delay_s)},{_fmt(mult)},"
                         f"{seed},{_fmt(late)},{_fmt(crit)},{_fmt(mean_t)},{_fmt(p95_t)},"
                         f"{ambushes}")
        return lines

    _write_lines(out / "payoff_matrix.csv", payoff_lines)
    _write_lines(out / "critical_delays.csv", critical_lines)
    _write_lines(out / "equilibria.csv", equilibria_lines)
    _write_lines(out / "sweep_window.csv", sweep_lines(window_rows))
    _write_lines(out / "sweep_attackers.csv", sweep_lines(attacker_rows))

    manifest = [f"config_hash = {cfg.config_hash()}",
                f"seeds = {','.join(str(s) for s in cfg.seeds)}"]
    manifest.extend(cfg.resolved_lines())
    _write_lines(out / "manifest.txt", manifest)
