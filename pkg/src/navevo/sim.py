"""Deterministic fixed-timestep differential-drive simulation.

A control tick is CONTROL_DT seconds, integrated as N_SUBSTEPS exact
unicycle arcs with contact clamping, so walls are impenetrable. Sensing
is ray-cast proximity plus target range and two complementary bearing
channels. Episodes are pure functions of (controller, maze, limits).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .env import Maze
from .geometry import TWO_PI, wrap_angle
from .params import (AXLE_LENGTH, CONTROL_DT, MAX_WHEEL_SPEED, N_SUBSTEPS,
                     ROBOT_RADIUS, TARGET_RADIUS)


@dataclass
class RobotState:
    x: float
    y: float
    heading: float                # [0, 2*pi)
    left_speed: float = 0.0
    right_speed: float = 0.0
    crashed: bool = False


@dataclass(frozen=True)
class SensorConfig:
    """Proximity ray layout in the robot frame."""

    layout: str                   # 'evolved12' | 'ibug24' | 'none'
    angles: tuple[float, ...]
    range_m: float


def evolved12() -> SensorConfig:
    """12 rays equally spaced around the robot, 0.2 m range."""
    angles = tuple(wrap_angle(i * TWO_PI / 12.0) for i in range(12))
    return SensorConfig(layout="evolved12", angles=angles, range_m=0.2)


def ibug24() -> SensorConfig:
    """20 rays in a +-60 degree frontal wedge, two at +-90, one rear; 2 m range."""
    wedge = [math.radians(-60.0 + i * 120.0 / 19.0) for i in range(20)]
    angles = tuple(wrap_angle(a) for a in wedge + [math.pi / 2, -math.pi / 2, math.pi])
    return SensorConfig(layout="ibug24", angles=angles, range_m=2.0)


def no_proximity() -> SensorConfig:
    """Proximity disabled (distance-only task)."""
    return SensorConfig(layout="none", angles=(), range_m=0.2)


@dataclass
class Observation:
    proximity: list[float]
    target_range: float
    bearing_cw: float             # cw turn to face target, / 2*pi, in [0, 1)
    bearing_ccw: float            # 1 - bearing_cw, in (0, 1]


@dataclass
class EpisodeResult:
    solved: bool
    trajectory_length: float
    crashed: bool
    elapsed: float
    final_target_range: float
    trajectory: list[tuple[float, float]] | None = None


@dataclass(frozen=True)
class EpisodeLimits:
    time_limit_s: float
    control_dt: float = CONTROL_DT


def step_kinematics(state: RobotState, dt: float, maze: Maze) -> RobotState:
    """Integrate one exact unicycle arc over dt with contact clamping."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    x, y, th, crashed = kernels.advance_tick(
        state.x, state.y, state.heading, state.left_speed, state.right_speed,
        dt, 1, maze.wall_array, ROBOT_RADIUS, AXLE_LENGTH, state.crashed)
    return replace(state, x=x, y=y, heading=th, crashed=bool(crashed))


def raycast(maze: Maze, origin: tuple[float, float], angle: float,
            max_range: float) -> float | None:
    """Distance to the nearest wall along the ray, None beyond max_range."""
    if max_range <= 0.0:
        raise ValueError("max_range must be positive")
    t = kernels.ray_hit(origin[0], origin[1], math.cos(angle), math.sin(angle),
                        maze.wall_array, max_range)
    return None if t < 0.0 else float(t)


def observe(state: RobotState, maze: Maze, config: SensorConfig) -> Observation:
    """Proximity readings (1 = touching, 0 = nothing in range) plus target
    range and the two complementary bearing channels."""
    tx, ty = maze.target
    dist = math.hypot(tx - state.x, ty - state.y)
    cw = ((state.heading - math.atan2(ty - state.y, tx - state.x)) % TWO_PI) / TWO_PI
    prox: list[float] = []
    if config.angles:
        buf = np.empty(len(config.angles), dtype=np.float64)
        kernels.proximity_scan(state.x, state.y, state.heading,
                               np.asarray(config.angles), config.range_m,
                               maze.wall_array, buf)
        prox = buf.tolist()
    return Observation(proximity=prox, target_range=dist,
                       bearing_cw=cw, bearing_ccw=1.0 - cw)


def run_episode(controller, maze: Maze, limits: EpisodeLimits,
                sensor: SensorConfig, record_trajectory: bool = False) -> EpisodeResult:
    """Run one episode: observe -> controller -> step, until the target is
    reached (range < TARGET_RADIUS), the controller emits a non-finite
    command (treated as a crash, episode ends), or the time limit runs out.
    Wall contact sets the crashed flag but the episode continues.

    `controller` maps Observation -> (left_speed, right_speed); if it has a
    reset() method it is called before the episode starts.
    """
    if hasattr(controller, "reset"):
        controller.reset()
    dt = limits.control_dt
    n_ticks = int(round(limits.time_limit_s / dt))
    dt_sub = dt / N_SUBSTEPS
    walls = maze.wall_array
    tx, ty = maze.target
    x, y, th = maze.start_pose
    crashed = False
    solved = False
    traj_len = 0.0
    ticks = 0
    trajectory = [(x, y)] if record_trajectory else None

    for k in range(n_ticks):
        dist = math.hypot(tx - x, ty - y)
        if dist < TARGET_RADIUS:
            solved = True
            ticks = k
            break
        state = RobotState(x=x, y=y, heading=th, crashed=crashed)
        obs = observe(state, maze, sensor)
        vl, vr = controller(obs)
        if not (math.isfinite(vl) and math.isfinite(vr)):
            crashed = True
            ticks = k
            break
        vl = min(max(vl, -MAX_WHEEL_SPEED), MAX_WHEEL_SPEED)
        vr = min(max(vr, -MAX_WHEEL_SPEED), MAX_WHEEL_SPEED)
        px, py = x, y
        x, y, th, crashed = kernels.advance_tick(
            x, y, th, vl, vr, dt_sub, N_SUBSTEPS, walls,
            ROBOT_RADIUS, AXLE_LENGTH, crashed)
        traj_len += math.hypot(x - px, y - py)
        if record_trajectory:
            trajectory.append((x, y))
        ticks = k + 1

    final_dist = math.hypot(tx - x, ty - y)
    if not solved and final_dist < TARGET_RADIUS:
        solved = True
    return EpisodeResult(solved=solved, trajectory_length=traj_len,
                         crashed=bool(crashed), elapsed=ticks * dt,
                         final_target_range=final_dist, trajectory=trajectory)


def trajectory_svg(maze: Maze, trajectory, path, width_px: int = 700) -> None:
    """Write a simple SVG of the maze and an optional trajectory polyline."""
    s = maze.side
    k = width_px / s
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width_px}" '
             f'height="{width_px}" viewBox="0 0 {width_px} {width_px}">',
             f'<rect width="{width_px}" height="{width_px}" fill="white"/>']
    for r in maze.walls:
        parts.append(
            f'<rect x="{r.x0 * k:.1f}" y="{(s - r.y1) * k:.1f}" '
            f'width="{(r.x1 - r.x0) * k:.1f}" height="{(r.y1 - r.y0) * k:.1f}" '
            f'fill="#444"/>')
    sx, sy, sth = maze.start_pose
    tx, ty = maze.target
    parts.append(f'<circle cx="{sx * k:.1f}" cy="{(s - sy) * k:.1f}" '
                 f'r="{ROBOT_RADIUS * k:.1f}" fill="#2a7" />')
    parts.append(f'<line x1="{sx * k:.1f}" y1="{(s - sy) * k:.1f}" '
                 f'x2="{(sx + 0.25 * math.cos(sth)) * k:.1f}" '
                 f'y2="{(s - sy - 0.25 * math.sin(sth)) * k:.1f}" '
                 f'stroke="#2a7" stroke-width="2"/>')
    parts.append(f'<circle cx="{tx * k:.1f}" cy="{(s - ty) * k:.1f}" '
                 f'r="{TARGET_RADIUS * k:.1f}" fill="none" stroke="#d33" '
                 f'stroke-width="2"/>')
    if trajectory:
        pts = " ".join(f"{px * k:.1f},{(s - py) * k:.1f}" for px, py in trajectory)
        parts.append(f'<polyline points="{pts}" fill="none" stroke="#36c" '
                     f'stroke-width="1.5"/>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
