"""Fitness functions, batch evaluation and champion selection.

Two task variants share the episode machinery:

  bearing    - 12 proximity sensors + target range + two bearing
               channels (15 sensor inputs), procedurally generated
               mazes, 300 s episodes, fitness 1/sqrt(l) on success.
  nobearing  - target range only (1 sensor input), empty 10 m arena,
               corner start with 5 starting orientations, 80 s
               episodes, fitness (L - d)^3 summed over orientations.

A crash divides an episode's fitness by 10 in both variants.
"""

from __future__ import annotations

import math
import multiprocessing as mp
import os
import statistics
from dataclasses import dataclass

import numpy as np

from . import kernels
from .env import Maze, astar_length, default_resolution, load_maze
from .geometry import Rect, TWO_PI
from .neat import Genome, Network, build_network
from .params import (AXLE_LENGTH, MAX_WHEEL_SPEED, N_SUBSTEPS, ROBOT_RADIUS,
                     TARGET_RADIUS, WALL_THICKNESS)
from .sim import (EpisodeLimits, EpisodeResult, SensorConfig, evolved12,
                  no_proximity, run_episode)


@dataclass(frozen=True)
class Task:
    name: str
    sensor: SensorConfig
    use_proximity: bool
    use_bearing: bool
    n_sensor_inputs: int
    time_limit_s: float


BEARING = Task("bearing", evolved12(), True, True, 15, 300.0)
NOBEARING = Task("nobearing", no_proximity(), False, False, 1, 80.0)

NOBEARING_ARENA_SIDE = 10.0
NOBEARING_START = (1.0, 1.0)
NOBEARING_TARGET = (9.0, 9.0)
N_ORIENTATIONS = 5


def task_by_name(name: str) -> Task:
    if name == "bearing":
        return BEARING
    if name == "nobearing":
        return NOBEARING
    raise ValueError(f"unknown task {name!r}")


def nobearing_arena() -> Maze:
    """Empty square arena: perimeter walls only, corner start, opposing
    corner target."""
    s = NOBEARING_ARENA_SIDE
    t = WALL_THICKNESS
    walls = (Rect(0.0, 0.0, s, t), Rect(0.0, s - t, s, s),
             Rect(0.0, 0.0, t, s), Rect(s - t, 0.0, s, s))
    return Maze(side=s, walls=walls,
                start_pose=(NOBEARING_START[0], NOBEARING_START[1], 0.0),
                target=NOBEARING_TARGET)


def orientation_angles(n: int = N_ORIENTATIONS) -> list[float]:
    return [i * TWO_PI / n for i in range(n)]


# ---------------------------------------------------------------------------
# fitness
# ---------------------------------------------------------------------------

def fitness_bearing(result: EpisodeResult, astar_m: float) -> float:
    """1/sqrt(trajectory / shortest-path) when solved, else 0; a crash
    divides the value by 10."""
    if astar_m <= 0.0:
        raise ValueError("astar_m must be positive")
    if result.solved:
        l = max(result.trajectory_length / astar_m, 1e-9)
        f = 1.0 / math.sqrt(l)
    else:
        f = 0.0
    if result.crashed:
        f /= 10.0
    return f


def fitness_nobearing(result: EpisodeResult, arena: Maze) -> float:
    """(L - d)^3 with L the arena diagonal and d the final distance to
    the target; a crash divides the value by 10."""
    big_l = arena.side * math.sqrt(2.0)
    f = max(big_l - result.final_target_range, 0.0) ** 3
    if result.crashed:
        f /= 10.0
    return f


# ---------------------------------------------------------------------------
# episode execution for genomes (fused kernel path)
# ---------------------------------------------------------------------------

def run_network_episode(network: Network, maze: Maze, limits: EpisodeLimits,
                        task: Task, start_pose=None) -> EpisodeResult:
    """Run one episode of a compiled network with the fused kernel.

    Matches sim.run_episode tick for tick; the network state is
    implicitly fresh (episode state lives inside the kernel call).
    """
    sx, sy, sth = start_pose if start_pose is not None else maze.start_pose
    n_ticks = int(round(limits.time_limit_s / limits.control_dt))
    angles = task.sensor.angles if task.use_proximity else ()
    solved, traj, crashed, ticks, _, _, _, fdist = kernels.run_network_episode(
        maze.wall_array, sx, sy, sth, maze.target[0], maze.target[1],
        np.asarray(angles, dtype=np.float64), task.sensor.range_m,
        task.use_proximity, task.use_bearing,
        network.kinds, network.eval_order, network.in_off, network.in_src,
        network.in_w, network.in_rec, network.gru, network.input_idx,
        network.out_left, network.out_right,
        n_ticks, limits.control_dt, N_SUBSTEPS,
        limits.control_dt / N_SUBSTEPS,
        MAX_WHEEL_SPEED, AXLE_LENGTH, ROBOT_RADIUS, TARGET_RADIUS)
    return EpisodeResult(solved=bool(solved), trajectory_length=float(traj),
                         crashed=bool(crashed),
                         elapsed=ticks * limits.control_dt,
                         final_target_range=float(fdist))


@dataclass
class FitnessRecord:
    genome_id: int
    fitness: float
    solved_count: int
    results: list[EpisodeResult]


def _eval_bearing_genome(genome: Genome, mazes: list[tuple[Maze, float]],
                         limits: EpisodeLimits) -> FitnessRecord:
    net = build_network(genome)
    results = [run_network_episode(net, maze, limits, BEARING)
               for maze, _ in mazes]
    scores = [fitness_bearing(r, astar_m)
              for r, (_, astar_m) in zip(results, mazes)]
    return FitnessRecord(genome.id, sum(scores) / len(scores),
                         sum(r.solved for r in results), results)


def _eval_nobearing_genome(genome: Genome, arena: Maze,
                           limits: EpisodeLimits) -> FitnessRecord:
    net = build_network(genome)
    sx, sy, _ = arena.start_pose
    results = [run_network_episode(net, arena, limits, NOBEARING,
                                   start_pose=(sx, sy, th))
               for th in orientation_angles()]
    fitness = sum(fitness_nobearing(r, arena) for r in results)
    return FitnessRecord(genome.id, fitness,
                         sum(r.solved for r in results), results)


_WORKER_CTX: dict = {}


def _init_worker(ctx):
    _WORKER_CTX.update(ctx)


def _worker_eval(genome: Genome) -> FitnessRecord:
    ctx = _WORKER_CTX
    if ctx["task"] == "bearing":
        return _eval_bearing_genome(genome, ctx["mazes"], ctx["limits"])
    return _eval_nobearing_genome(genome, ctx["arena"], ctx["limits"])


def evaluate_generation(genomes: list[Genome], task: Task,
                        mazes: list[tuple[Maze, float]] | None = None,
                        arena: Maze | None = None,
                        limits: EpisodeLimits | None = None,
                        jobs: int = 1) -> list[FitnessRecord]:
    """Evaluate every genome on the shared episode set and assign
    genome.fitness. Results are independent of evaluation order."""
    if limits is None:
        limits = EpisodeLimits(time_limit_s=task.time_limit_s)
    if task.name == "bearing":
        if not mazes:
            raise ValueError("bearing evaluation needs (maze, astar_m) pairs")
        ctx = {"task": "bearing", "mazes": mazes, "limits": limits}
    else:
        arena = arena if arena is not None else nobearing_arena()
        ctx = {"task": "nobearing", "arena": arena, "limits": limits}

    if jobs > 1:
        kernels.warmup()
        with mp.get_context("fork").Pool(jobs, initializer=_init_worker,
                                         initargs=(ctx,)) as pool:
            records = pool.map(_worker_eval, genomes,
                               chunksize=max(1, len(genomes) // (4 * jobs)))
    else:
        _init_worker(ctx)
        records = [_worker_eval(g) for g in genomes]
    for g, rec in zip(genomes, records):
        g.fitness = rec.fitness
    return records


# ---------------------------------------------------------------------------
# held-out test set
# ---------------------------------------------------------------------------

@dataclass
class BatchRow:
    maze_id: str
    solved: bool
    trajectory_m: float
    astar_m: float
    crashed: bool
    elapsed_s: float

    @property
    def ratio(self) -> float:
        return self.trajectory_m / self.astar_m if self.solved else math.nan


@dataclass
class TestSetReport:
    rows: list[BatchRow]

    @property
    def total(self) -> int:
        return len(self.rows)

    @property
    def success_count(self) -> int:
        return sum(r.solved for r in self.rows)

    @property
    def success_pct(self) -> float:
        return 100.0 * self.success_count / self.total if self.rows else 0.0

    @property
    def ratios(self) -> list[float]:
        return [r.ratio for r in self.rows if r.solved]

    @property
    def ratio_mean(self) -> float:
        rs = self.ratios
        return sum(rs) / len(rs) if rs else math.nan

    @property
    def ratio_median(self) -> float:
        rs = self.ratios
        return statistics.median(rs) if rs else math.nan


def evaluate_test_set(subject, test_mazes: list[tuple[str, Maze, float]],
                      limits: EpisodeLimits | None = None,
                      task: Task = BEARING,
                      sensor: SensorConfig | None = None) -> TestSetReport:
    """Run one episode per maze and report success and path-length ratios
    (ratios over solved mazes only).

    `subject` is a Genome, a Network, or a per-tick controller callable
    (run through the step-by-step simulator with `sensor`).
    """
    if limits is None:
        limits = EpisodeLimits(time_limit_s=task.time_limit_s)
    rows = []
    if isinstance(subject, Genome):
        subject = build_network(subject)
    for maze_id, maze, astar_m in test_mazes:
        if isinstance(subject, Network):
            res = run_network_episode(subject, maze, limits, task)
        else:
            res = run_episode(subject, maze, limits,
                              sensor if sensor is not None else task.sensor)
        rows.append(BatchRow(maze_id=maze_id, solved=res.solved,
                             trajectory_m=res.trajectory_length,
                             astar_m=astar_m, crashed=res.crashed,
                             elapsed_s=res.elapsed))
    return TestSetReport(rows=rows)


def select_champions(rankings: list[list[Genome]]) -> list[tuple[str, Genome]]:
    """3 best of the current generation, 2 best of the previous, 1 best
    from two generations ago (truncated when history is short); ties
    break toward the lower genome id. Duplicates across slots are kept.

    `rankings` is ordered oldest first; each entry is that generation's
    genomes ranked by training fitness before reproduction.
    """
    quota = (3, 2, 1)
    out: list[tuple[str, Genome]] = []
    for age in range(min(3, len(rankings))):
        ranked = sorted(rankings[-1 - age], key=lambda g: (-g.fitness, g.id))
        for rank, genome in enumerate(ranked[:quota[age]], start=1):
            out.append((f"gen-{age}_rank{rank}", genome))
    return out


# ---------------------------------------------------------------------------
# CSV emitters (fixed formatting so reruns are byte-identical)
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x:.6f}"


def write_batch_csv(path, rows: list[BatchRow], algorithm: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("maze_id,algorithm,solved,trajectory_m,astar_m,ratio,"
                 "crashed,elapsed_s\n")
        for r in rows:
            fh.write(f"{r.maze_id},{algorithm},{int(r.solved)},"
                     f"{_fmt(r.trajectory_m)},{_fmt(r.astar_m)},"
                     f"{_fmt(r.ratio)},{int(r.crashed)},{_fmt(r.elapsed_s)}\n")


def write_report_csv(path, reports: list[tuple[str, TestSetReport]]) -> None:
    """Summary rows, one per evaluated genome (id column is free-form)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("genome_id,mazes_total,solved,success_pct,ratio_mean,"
                 "ratio_median\n")
        for gid, rep in reports:
            fh.write(f"{gid},{rep.total},{rep.success_count},"
                     f"{_fmt(rep.success_pct)},{_fmt(rep.ratio_mean)},"
                     f"{_fmt(rep.ratio_median)}\n")


def write_detail_csv(path, report: TestSetReport) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("maze_id,solved,trajectory_m,astar_m,ratio\n")
        for r in report.rows:
            fh.write(f"{r.maze_id},{int(r.solved)},{_fmt(r.trajectory_m)},"
                     f"{_fmt(r.astar_m)},{_fmt(r.ratio)}\n")


def load_test_mazes(directory) -> list[tuple[str, Maze, float]]:
    """Load a gen-mazes output directory (index.csv plus maze files)."""
    index = os.path.join(directory, "index.csv")
    out = []
    if os.path.exists(index):
        with open(index, encoding="utf-8") as fh:
            header = fh.readline()
            if not header.startswith("maze_id,"):
                raise ValueError(f"{index}:1: bad index header")
            for line in fh:
                maze_id, fname, astar_m = line.strip().split(",")
                maze = load_maze(os.path.join(directory, fname))
                out.append((maze_id, maze, float(astar_m)))
        return out
    for fname in sorted(os.listdir(directory)):
        if not fname.endswith(".maze"):
            continue
        maze = load_maze(os.path.join(directory, fname))
        astar = astar_length(maze, maze.start_pose[:2], maze.target,
                             default_resolution(maze.side))
        out.append((fname[:-5], maze, astar))
    return out
