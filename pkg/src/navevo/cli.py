"""Command-line entry point.

Subcommands:
    gen-mazes   generate a maze set with an index of shortest-path lengths
    baseline    run a bug-algorithm baseline over a maze set, write CSV
    evolve      run or resume an evolution experiment
    eval        evaluate a saved genome over a maze set, write report CSVs
    astar       print the shortest-path length of a maze file
    replay      run one episode and write an SVG of the trajectory
"""

from __future__ import annotations

import argparse
import os
import sys

from .bug import controller_for
from .config import ConfigError, ExperimentConfig, load_config
from .env import (MazeFormatError, MazeGenerationError, MazeParams,
                  astar_length, default_resolution, load_maze)
from .evaluation import (EpisodeLimits, evaluate_test_set, load_test_mazes,
                         task_by_name, write_batch_csv, write_detail_csv,
                         write_report_csv)
from .neat import GenomeFormatError, build_network, load_genome
from .sim import ibug24, run_episode, trajectory_svg


def _default_jobs() -> int:
    env = os.environ.get("NAVEVO_JOBS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="navevo")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-mazes", help="generate a maze set")
    g.add_argument("--count", type=int, required=True)
    g.add_argument("--side", type=float, default=14.0)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--density", type=float, default=0.5)
    g.add_argument("--loop-prob", type=float, default=0.5)

    b = sub.add_parser("baseline", help="run a bug baseline over a maze set")
    b.add_argument("--algo", choices=("ibug", "com"), required=True)
    b.add_argument("--mazes", required=True)
    b.add_argument("--report", required=True)
    b.add_argument("--time-limit", type=float, default=300.0)

    e = sub.add_parser("evolve", help="run or resume an experiment")
    e.add_argument("--config", required=True)
    e.add_argument("--out", default=None,
                   help="run directory (default runs/<task>_s<seed>)")
    e.add_argument("--resume", default=None, metavar="DIR",
                   help="resume from this run directory's checkpoint")
    e.add_argument("--jobs", type=int, default=_default_jobs())

    v = sub.add_parser("eval", help="evaluate a genome over a maze set")
    v.add_argument("--genome", required=True)
    v.add_argument("--mazes", required=True)
    v.add_argument("--report", required=True)
    v.add_argument("--task", choices=("bearing", "nobearing"), default="bearing")
    v.add_argument("--time-limit", type=float, default=300.0)

    a = sub.add_parser("astar", help="print a maze's shortest-path length")
    a.add_argument("--maze", required=True)
    a.add_argument("--resolution", type=int, default=None)

    r = sub.add_parser("replay", help="replay an episode to an SVG")
    r.add_argument("--genome", default=None)
    r.add_argument("--algo", choices=("ibug", "com"), default=None)
    r.add_argument("--maze", required=True)
    r.add_argument("--svg", required=True)
    r.add_argument("--task", choices=("bearing", "nobearing"), default="bearing")
    r.add_argument("--time-limit", type=float, default=300.0)
    return p


def _cmd_gen_mazes(args) -> int:
    from .experiment import build_maze_set
    params = MazeParams(side_m=args.side, room_density=args.density,
                        loop_probability=args.loop_prob)
    entries = build_maze_set(args.out, args.count, params, args.seed)
    print(f"wrote {len(entries)} mazes to {args.out}")
    return 0


def _cmd_baseline(args) -> int:
    mazes = load_test_mazes(args.mazes)
    controller = controller_for(args.algo)
    limits = EpisodeLimits(time_limit_s=args.time_limit)
    report = evaluate_test_set(controller, mazes, limits, sensor=ibug24())
    write_batch_csv(args.report, report.rows, args.algo)
    print(f"{args.algo}: {report.success_count}/{report.total} solved "
          f"({report.success_pct:.1f}%), ratio mean {report.ratio_mean:.4f} "
          f"median {report.ratio_median:.4f}")
    return 0


def _cmd_evolve(args) -> int:
    from .experiment import run_experiment
    if args.resume:
        out_dir = args.resume
        config = load_config(os.path.join(out_dir, "config.txt"))
        art = run_experiment(config, out_dir, jobs=args.jobs, resume=True)
    else:
        config = load_config(args.config)
        out_dir = args.out or os.path.join(
            "runs", f"{config.task}_s{config.master_seed}")
        art = run_experiment(config, out_dir, jobs=args.jobs)
    print(f"run complete: {art.out_dir}")
    return 0


def _cmd_eval(args) -> int:
    genome = load_genome(args.genome)
    mazes = load_test_mazes(args.mazes)
    task = task_by_name(args.task)
    limits = EpisodeLimits(time_limit_s=args.time_limit)
    report = evaluate_test_set(genome, mazes, limits, task)
    write_report_csv(args.report, [(os.path.basename(args.genome), report)])
    detail = os.path.splitext(args.report)[0] + "_detail.csv"
    write_detail_csv(detail, report)
    print(f"{report.success_count}/{report.total} solved "
          f"({report.success_pct:.1f}%), ratio mean {report.ratio_mean:.4f} "
          f"median {report.ratio_median:.4f}")
    return 0


def _cmd_astar(args) -> int:
    maze = load_maze(args.maze)
    resolution = args.resolution or default_resolution(maze.side)
    length = astar_length(maze, maze.start_pose[:2], maze.target, resolution)
    if length == float("inf"):
        print("unreachable")
        return 3
    print(f"{length:.6f}")
    return 0


def _cmd_replay(args) -> int:
    if (args.genome is None) == (args.algo is None):
        print("error: replay needs exactly one of --genome / --algo",
              file=sys.stderr)
        return 2
    maze = load_maze(args.maze)
    limits = EpisodeLimits(time_limit_s=args.time_limit)
    if args.genome:
        task = task_by_name(args.task)
        net = build_network(load_genome(args.genome))

        def controller(obs, _net=net, _task=task):
            if _task.use_bearing:
                inputs = obs.proximity + [obs.target_range, obs.bearing_cw,
                                          obs.bearing_ccw]
            else:
                inputs = [obs.target_range]
            return _net.activate(inputs)

        controller.reset = net.reset
        sensor = task.sensor
    else:
        controller = controller_for(args.algo)
        sensor = ibug24()
    result = run_episode(controller, maze, limits, sensor,
                         record_trajectory=True)
    trajectory_svg(maze, result.trajectory, args.svg)
    print(f"solved={result.solved} length={result.trajectory_length:.3f} "
          f"crashed={result.crashed} elapsed={result.elapsed:.1f}")
    return 0


_COMMANDS = {
    "gen-mazes": _cmd_gen_mazes,
    "baseline": _cmd_baseline,
    "evolve": _cmd_evolve,
    "eval": _cmd_eval,
    "astar": _cmd_astar,
    "replay": _cmd_replay,
}


def cli_dispatch(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (MazeFormatError, GenomeFormatError, ConfigError,
            MazeGenerationError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_dispatch())


if __name__ == "__main__":
    main()
