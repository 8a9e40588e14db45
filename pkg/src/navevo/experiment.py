"""Evolution run orchestration: generation loop, periodic held-out
test-set evaluation, checkpoint/resume and artifact persistence.

Artifact layout inside the run directory:

    config.txt        config snapshot (canonical key order)
    fitness.csv       generation, avg/max fitness, best-so-far, species
    stats.csv         per-generation champion id and solved counts
    champions/        genome files saved at every test generation
    reports/          test-set summary and per-maze detail CSVs
    checkpoint.pkl    resumable state (rewritten every generation)
    fitness.png       fitness curves (written at run end)
    meta.txt          wall-clock timestamps (the only non-reproducible file)

Every artifact byte except meta.txt is a pure function of
(config snapshot, master_seed).
"""

from __future__ import annotations

import hashlib
import os
import pickle
import random
import time
from dataclasses import dataclass, field

from .config import ExperimentConfig, save_config
from .env import (Maze, MazeParams, astar_length, default_resolution,
                  generate_maze, load_maze, save_maze)
from .evaluation import (EpisodeLimits, TestSetReport, evaluate_generation,
                         evaluate_test_set, load_test_mazes, nobearing_arena,
                         orientation_angles, select_champions, task_by_name,
                         write_detail_csv, write_report_csv)
from .neat import (Genome, Population, init_population, load_genome,
                   save_genome, speciate_and_reproduce)

FITNESS_HEADER = ("generation,avg_fitness,max_fitness,best_so_far,"
                  "species_count,gru_node_mean\n")
STATS_HEADER = "generation,champion_id,max_solved,episodes_per_genome\n"


def derive_seed(master_seed: int, *tags) -> int:
    label = ":".join(str(t) for t in (master_seed,) + tags)
    return int.from_bytes(hashlib.sha256(label.encode()).digest()[:8], "big")


@dataclass
class RunArtifacts:
    out_dir: str

    @property
    def config_path(self):
        return os.path.join(self.out_dir, "config.txt")

    @property
    def fitness_log(self):
        return os.path.join(self.out_dir, "fitness.csv")

    @property
    def stats_log(self):
        return os.path.join(self.out_dir, "stats.csv")

    @property
    def champions_dir(self):
        return os.path.join(self.out_dir, "champions")

    @property
    def reports_dir(self):
        return os.path.join(self.out_dir, "reports")

    @property
    def checkpoint_path(self):
        return os.path.join(self.out_dir, "checkpoint.pkl")

    @property
    def test_mazes_dir(self):
        return os.path.join(self.out_dir, "test_mazes")

    @property
    def summary_path(self):
        return os.path.join(self.out_dir, "summary.txt")


@dataclass
class _RunState:
    population: Population
    rng: random.Random
    generation: int = 1
    best_so_far: float = 0.0
    fitness_rows: list[str] = field(default_factory=list)
    stats_rows: list[str] = field(default_factory=list)
    rankings: list[list[Genome]] = field(default_factory=list)


def build_maze_set(out_dir: str, count: int, params: MazeParams,
                   base_seed: int) -> list[tuple[str, Maze, float]]:
    """Generate `count` mazes (seed base_seed + i), save them with an
    index of shortest-path lengths, and return the loaded set.

    Mazes are reloaded from disk before measuring so the index matches
    the 6-decimal file quantization exactly.
    """
    os.makedirs(out_dir, exist_ok=True)
    resolution = default_resolution(params.side_m)
    entries = []
    for i in range(count):
        maze = generate_maze(params, base_seed + i)
        name = f"maze_{i:04d}"
        path = os.path.join(out_dir, name + ".maze")
        save_maze(maze, path)
        maze = load_maze(path)
        astar = astar_length(maze, maze.start_pose[:2], maze.target, resolution)
        entries.append((name, maze, astar))
    with open(os.path.join(out_dir, "index.csv"), "w", encoding="utf-8") as fh:
        fh.write("maze_id,file,astar_m\n")
        for name, _, astar in entries:
            fh.write(f"{name},{name}.maze,{astar:.6f}\n")
    return entries


def training_mazes(config: ExperimentConfig, generation: int
                   ) -> list[tuple[Maze, float]]:
    """The generation's shared training mazes, derived from the master
    seed and the generation index so resume does not perturb the stream."""
    params = config.maze_params()
    resolution = default_resolution(params.side_m)
    out = []
    for i in range(config.mazes_per_generation):
        maze = generate_maze(params, derive_seed(config.master_seed,
                                                 "train", generation, i))
        astar = astar_length(maze, maze.start_pose[:2], maze.target, resolution)
        out.append((maze, astar))
    return out


def _write_rows(path, header, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header)
        fh.writelines(rows)


def _plot_fitness(art: RunArtifacts) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    gens, avg, mx, best = [], [], [], []
    with open(art.fitness_log, encoding="utf-8") as fh:
        fh.readline()
        for line in fh:
            parts = line.strip().split(",")
            gens.append(int(parts[0]))
            avg.append(float(parts[1]))
            mx.append(float(parts[2]))
            best.append(float(parts[3]))
    fig, ax = plt.subplots(figsize=(8, 5))
    ax.plot(gens, avg, label="avg fitness")
    ax.plot(gens, mx, label="max fitness")
    ax.plot(gens, best, label="best so far")
    ax.set_xlabel("generation")
    ax.set_ylabel("fitness")
    ax.legend()
    fig.tight_layout()
    fig.savefig(os.path.join(art.out_dir, "fitness.png"))
    plt.close(fig)


def compare_runs(fitness_logs: list[str], labels: list[str], out_png: str,
                 column: str = "best_so_far") -> None:
    """Overlay a fitness-log column from several runs on one plot."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    col = {"avg_fitness": 1, "max_fitness": 2, "best_so_far": 3}[column]
    fig, ax = plt.subplots(figsize=(8, 5))
    for path, label in zip(fitness_logs, labels):
        xs, ys = [], []
        with open(path, encoding="utf-8") as fh:
            fh.readline()
            for line in fh:
                parts = line.strip().split(",")
                xs.append(int(parts[0]))
                ys.append(float(parts[col]))
        ax.plot(xs, ys, label=label)
    ax.set_xlabel("generation")
    ax.set_ylabel(column)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_png)
    plt.close(fig)


def _test_champions(config: ExperimentConfig, art: RunArtifacts,
                    state: _RunState, test_mazes, jobs: int) -> None:
    gen = state.generation
    champs = select_champions(state.rankings)
    reports: list[tuple[str, TestSetReport]] = []
    task = task_by_name(config.task)
    limits = EpisodeLimits(time_limit_s=config.time_limit_s)
    for slot, genome in champs:
        tag = f"gen{gen:05d}_{slot}_g{genome.id}"
        gpath = os.path.join(art.champions_dir, tag + ".genome")
        save_genome(genome, gpath)
        # evaluate what was written so the report matches the file exactly
        saved = load_genome(gpath, genome_id=genome.id)
        if config.task == "bearing":
            report = evaluate_test_set(saved, test_mazes, limits, task)
        else:
            arena = nobearing_arena()
            rows = []
            sx, sy, _ = arena.start_pose
            astar = astar_length(arena, (sx, sy), arena.target,
                                 default_resolution(arena.side))
            oriented = [(f"orient_{k}",
                         Maze(arena.side, arena.walls, (sx, sy, th),
                              arena.target), astar)
                        for k, th in enumerate(orientation_angles())]
            report = evaluate_test_set(saved, oriented, limits, task)
        reports.append((tag, report))
        write_detail_csv(os.path.join(art.reports_dir, tag + "_detail.csv"),
                         report)
    write_report_csv(os.path.join(art.reports_dir,
                                  f"test_gen{gen:05d}.csv"), reports)


def run_experiment(config: ExperimentConfig, out_dir: str, jobs: int = 1,
                   resume: bool = False) -> RunArtifacts:
    """Execute the generational loop; resumable from the last checkpoint."""
    art = RunArtifacts(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    os.makedirs(art.champions_dir, exist_ok=True)
    os.makedirs(art.reports_dir, exist_ok=True)
    neat_cfg = config.neat_config()
    task = task_by_name(config.task)
    limits = EpisodeLimits(time_limit_s=config.time_limit_s)

    if resume:
        with open(art.checkpoint_path, "rb") as fh:
            saved_config, state = pickle.load(fh)
        if saved_config != config:
            raise ValueError("checkpoint config does not match the given config")
    else:
        save_config(config, art.config_path)
        state = _RunState(
            population=init_population(neat_cfg,
                                       derive_seed(config.master_seed, "init")),
            rng=random.Random(derive_seed(config.master_seed, "evolve")))

    use_test_set = config.task == "bearing" and config.test_maze_count > 0
    test_mazes = None
    if use_test_set:
        if os.path.exists(os.path.join(art.test_mazes_dir, "index.csv")):
            test_mazes = load_test_mazes(art.test_mazes_dir)
        else:
            test_mazes = build_maze_set(art.test_mazes_dir,
                                        config.test_maze_count,
                                        config.maze_params(), config.test_seed)

    started = time.time()
    arena = nobearing_arena() if config.task == "nobearing" else None

    while state.generation <= config.generations:
        gen = state.generation
        pop = state.population
        if config.task == "bearing":
            mazes = training_mazes(config, gen)
            records = evaluate_generation(pop.genomes, task, mazes=mazes,
                                          limits=limits, jobs=jobs)
        else:
            records = evaluate_generation(pop.genomes, task, arena=arena,
                                          limits=limits, jobs=jobs)
        avg = sum(r.fitness for r in records) / len(records)
        mx = max(r.fitness for r in records)
        state.best_so_far = max(state.best_so_far, mx)
        champion = pop.champion()
        max_solved = max(r.solved_count for r in records)
        episodes = (config.mazes_per_generation if config.task == "bearing"
                    else len(orientation_angles()))
        state.fitness_rows.append(
            f"{gen},{avg:.9f},{mx:.9f},{state.best_so_far:.9f},"
            f"{len(pop.species)},{pop.gru_node_mean():.6f}\n")
        state.stats_rows.append(
            f"{gen},{champion.id},{max_solved},{episodes}\n")
        _write_rows(art.fitness_log, FITNESS_HEADER, state.fitness_rows)
        _write_rows(art.stats_log, STATS_HEADER, state.stats_rows)

        state.rankings.append([g.copy() for g in pop.genomes])
        if len(state.rankings) > 3:
            state.rankings.pop(0)

        if use_test_set and config.test_every > 0 and gen % config.test_every == 0:
            _test_champions(config, art, state, test_mazes, jobs)

        if gen < config.generations:
            state.population = speciate_and_reproduce(pop, neat_cfg, state.rng)
        state.generation += 1

        tmp = art.checkpoint_path + ".tmp"
        with open(tmp, "wb") as fh:
            pickle.dump((config, state), fh)
        os.replace(tmp, art.checkpoint_path)

    with open(os.path.join(art.out_dir, "meta.txt"), "w", encoding="utf-8") as fh:
        fh.write(f"started_unix {started:.0f}\nfinished_unix {time.time():.0f}\n")
    champion = state.population.champion()
    with open(art.summary_path, "w", encoding="utf-8") as fh:
        fh.write(f"task {config.task}\ngru_enabled {config.gru_enabled}\n"
                 f"generations {config.generations}\n"
                 f"best_so_far {state.best_so_far:.9f}\n"
                 f"final_champion_id {champion.id}\n"
                 f"final_champion_fitness {champion.fitness:.9f}\n")
    _plot_fitness(art)
    return art
