"""Hand-designed navigation baselines run on the tick simulator.

Both baselines use the wedge sensor layout (ibug24) and are written as
per-tick controllers so they run through sim.run_episode like any
evolved network.

  IBugController: movement primitives u_ori (rotate ccw until aligned
  with the target), u_fwd (straight until obstacle standoff, target, or
  a local intensity maximum) and u_fol (counterclockwise left-wall
  following until a local intensity maximum), composed by the
  hit/leave-intensity loop: remember the intensity at the end of every
  forward leg, and keep wall-following until the current intensity
  exceeds the remembered value.

  ComController: drive straight at the target; on contact follow the
  boundary to the left; leave as soon as the ray toward the target is
  clear for a fixed lookahead. Memoryless, so specific loop geometries
  trap it forever.

Intensity is 1/(1 + distance): strictly decreasing, 1 at the target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .env import Maze
from .geometry import TWO_PI, signed_angle
from .params import AXLE_LENGTH, CONTROL_DT, MAX_WHEEL_SPEED, N_SUBSTEPS, ROBOT_RADIUS
from . import kernels
from .sim import (EpisodeLimits, EpisodeResult, Observation, RobotState,
                  SensorConfig, ibug24, observe, run_episode)

ALIGN_TOL = 0.02          # rad, u_ori alignment tolerance
FWD_STOP = 0.22           # m, center-to-wall frontal standoff for u_fwd
TURN_DIST = 0.25          # m, follower front distance that forces a right turn
STANDOFF = 0.15           # m, left-side following distance (center to wall)
V_FOLLOW = 0.15           # m/s, following cruise speed
K_SIDE = 3.0              # rad/s per meter of side error
HYSTERESIS = 1e-6         # intensity local-max hysteresis
REL_TOL = 1e-9            # relative tolerance for the moved-since-leave test
COM_LOOKAHEAD = 1.0       # m, Com leave condition lookahead

_MAX_OMEGA = 2.0 * MAX_WHEEL_SPEED / AXLE_LENGTH


def intensity(distance: float) -> float:
    """Signal intensity at a given distance from the target."""
    if distance < 0.0:
        raise ValueError("distance must be non-negative")
    return 1.0 / (1.0 + distance)


def _beam_distance(obs: Observation, angles, lo: float, hi: float,
                   range_m: float) -> float | None:
    """Nearest hit among rays whose mount angle lies in [lo, hi] (radians,
    robot frame, signed). None when nothing is in range."""
    best = None
    for reading, mount in zip(obs.proximity, angles):
        a = signed_angle(mount)
        if lo <= a <= hi and reading > 0.0:
            d = (1.0 - reading) * range_m
            if best is None or d < best:
                best = d
    return best


def _signed_bearing(obs: Observation) -> float:
    """Bearing to the target, ccw positive, in (-pi, pi]."""
    return signed_angle(-obs.bearing_cw * TWO_PI)


def _wheels(v: float, omega: float) -> tuple[float, float]:
    vl = v - 0.5 * omega * AXLE_LENGTH
    vr = v + 0.5 * omega * AXLE_LENGTH
    scale = max(abs(vl), abs(vr)) / MAX_WHEEL_SPEED
    if scale > 1.0:
        vl /= scale
        vr /= scale
    return vl, vr


@dataclass
class IbugState:
    """Bookkeeping of the hit/leave intensities and the current phase."""

    i_leave: float = 0.0
    i_hit: float = 0.0
    phase: str = "orient"     # orient | forward | follow
    last_intensity: float = 0.0


class _WallFollower:
    """Counterclockwise left-wall following on the wedge sensor layout."""

    def __init__(self, sensor: SensorConfig):
        self.sensor = sensor
        self.lost_wall_ticks = 0

    def command(self, obs: Observation) -> tuple[float, float]:
        rng = self.sensor.range_m
        angles = self.sensor.angles
        front = _beam_distance(obs, angles, -math.radians(25), math.radians(25), rng)
        left = _beam_distance(obs, angles, math.radians(55), math.radians(95), rng)
        if front is not None and front <= TURN_DIST:
            # inner corner: pivot right until the way ahead is clear
            return _wheels(0.0, -_MAX_OMEGA)
        if left is None:
            # outer corner or no wall yet: arc left to wrap around it
            self.lost_wall_ticks += 1
            return _wheels(V_FOLLOW, 0.9 * _MAX_OMEGA * 0.45)
        err = left - STANDOFF
        omega = max(-0.6 * _MAX_OMEGA, min(0.6 * _MAX_OMEGA, K_SIDE * err))
        return _wheels(V_FOLLOW, omega)


class IBugController:
    """Per-tick controller realizing the intensity-bug control loop."""

    def __init__(self, sensor: SensorConfig | None = None):
        self.sensor = sensor if sensor is not None else ibug24()
        self.reset()

    def reset(self):
        self.state = IbugState()
        self.follower = _WallFollower(self.sensor)
        self._started = False
        self._prev_i = None
        self._rising = False

    # -- phase helpers ------------------------------------------------

    def _enter(self, phase: str):
        self.state.phase = phase
        self._prev_i = None
        self._rising = False

    def _local_max(self, i_now: float) -> bool:
        """Intensity decreased this tick after having increased before."""
        if self._prev_i is not None:
            if i_now > self._prev_i + HYSTERESIS:
                self._rising = True
            elif self._rising and i_now < self._prev_i - HYSTERESIS:
                return True
        return False

    def _moved(self, i_now: float) -> bool:
        ref = max(abs(i_now), abs(self.state.i_leave))
        return abs(i_now - self.state.i_leave) > REL_TOL * max(ref, 1e-300)

    # -- main tick ----------------------------------------------------

    def __call__(self, obs: Observation) -> tuple[float, float]:
        st = self.state
        i_now = intensity(obs.target_range)
        if not self._started:
            # the hit/leave registers start at the initial intensity
            st.i_leave = i_now
            st.i_hit = i_now
            self._started = True

        for _ in range(3):  # allow orient->forward fallthrough in one tick
            if st.phase == "orient":
                beta = _signed_bearing(obs)
                if abs(beta) <= ALIGN_TOL:
                    self._enter("forward")
                    continue
                remaining = beta % TWO_PI  # ccw-only rotation
                omega = min(_MAX_OMEGA, remaining / CONTROL_DT)
                cmd = _wheels(0.0, omega)
                break
            if st.phase == "forward":
                front = _beam_distance(obs, self.sensor.angles,
                                       -math.radians(25), math.radians(25),
                                       self.sensor.range_m)
                blocked = front is not None and front <= FWD_STOP
                peaked = self._local_max(i_now)
                if blocked or peaked:
                    if self._moved(i_now):
                        st.i_hit = i_now
                    self._enter("follow")
                    continue
                self._prev_i = i_now
                cmd = (MAX_WHEEL_SPEED, MAX_WHEEL_SPEED)
                break
            # follow
            if self._local_max(i_now):
                if i_now > st.i_hit:
                    st.i_leave = i_now
                    self._enter("orient")
                    continue
                self._prev_i = None  # keep following: restart peak tracking
                self._rising = False
            else:
                self._prev_i = i_now
            cmd = self.follower.command(obs)
            break
        else:
            cmd = (0.0, 0.0)
        st.last_intensity = i_now
        return cmd


@dataclass
class ComState:
    mode: str = "to_target"   # to_target | boundary_following
    hit_point: tuple[float, float] | None = None


class ComController:
    """Straight-at-target with greedy leave-on-clear boundary following."""

    def __init__(self, sensor: SensorConfig | None = None):
        self.sensor = sensor if sensor is not None else ibug24()
        self.reset()

    def reset(self):
        self.state = ComState()
        self.follower = _WallFollower(self.sensor)

    def _line_clear(self, obs: Observation) -> bool:
        """The ray toward the target is clear for the leave lookahead
        (verified against the nearest wedge ray; not clear when no ray
        points near the target direction)."""
        beta = _signed_bearing(obs)
        step = math.radians(7.0)
        d = _beam_distance(obs, self.sensor.angles, beta - step, beta + step,
                           self.sensor.range_m)
        if abs(beta) > math.radians(62.0):
            return False
        effective = min(COM_LOOKAHEAD, obs.target_range)
        return d is None or d > effective

    def __call__(self, obs: Observation) -> tuple[float, float]:
        st = self.state
        if st.mode == "to_target":
            front = _beam_distance(obs, self.sensor.angles,
                                   -math.radians(25), math.radians(25),
                                   self.sensor.range_m)
            if front is not None and front <= FWD_STOP:
                st.mode = "boundary_following"
                return self.follower.command(obs)
            beta = _signed_bearing(obs)
            if abs(beta) > 0.15:
                # turn in place toward the target (shortest direction)
                omega = max(-_MAX_OMEGA, min(_MAX_OMEGA, 4.0 * beta))
                return _wheels(0.0, omega)
            return _wheels(MAX_WHEEL_SPEED, 2.0 * beta)
        # boundary_following
        if self._line_clear(obs):
            st.mode = "to_target"
            beta = _signed_bearing(obs)
            return _wheels(0.0, max(-_MAX_OMEGA, min(_MAX_OMEGA, 4.0 * beta)))
        return self.follower.command(obs)


# ---------------------------------------------------------------------------
# standalone primitive executors (tests and analysis)
# ---------------------------------------------------------------------------

class _PhaseOnly(IBugController):
    """IBug controller pinned to a single phase; sets .done on the tick
    the phase's own stop condition fires."""

    def __init__(self, phase: str):
        super().__init__()
        self._phase = phase
        self.done = False

    def reset(self):
        super().reset()
        self.done = False
        self.state.phase = self._phase

    def __call__(self, obs):
        st = self.state
        i_now = intensity(obs.target_range)
        if not self._started:
            st.i_leave = i_now
            st.i_hit = i_now
            self._started = True
        if st.phase == "orient":
            beta = _signed_bearing(obs)
            if abs(beta) <= ALIGN_TOL:
                self.done = True
                return 0.0, 0.0
            remaining = beta % TWO_PI
            return _wheels(0.0, min(_MAX_OMEGA, remaining / CONTROL_DT))
        if st.phase == "forward":
            front = _beam_distance(obs, self.sensor.angles,
                                   -math.radians(25), math.radians(25),
                                   self.sensor.range_m)
            if (front is not None and front <= FWD_STOP) or self._local_max(i_now):
                self.done = True
                return 0.0, 0.0
            self._prev_i = i_now
            return MAX_WHEEL_SPEED, MAX_WHEEL_SPEED
        if self._local_max(i_now):
            self.done = True
            return 0.0, 0.0
        self._prev_i = i_now
        return self.follower.command(obs)


def run_primitive(phase: str, state: RobotState, maze: Maze,
                  max_ticks: int = 3000) -> tuple[RobotState, list[RobotState]]:
    """Execute one movement primitive from `state` until its stop
    condition (or the tick budget); returns (final state, per-tick trace)."""
    ctrl = _PhaseOnly(phase)
    ctrl.reset()
    sensor = ctrl.sensor
    walls = maze.wall_array
    dt_sub = CONTROL_DT / N_SUBSTEPS
    cur = RobotState(state.x, state.y, state.heading, crashed=state.crashed)
    trace = [cur]
    tx, ty = maze.target
    for _ in range(max_ticks):
        obs = observe(cur, maze, sensor)
        if obs.target_range < 0.3:
            break
        vl, vr = ctrl(obs)
        if ctrl.done:
            break
        x, y, th, crashed = kernels.advance_tick(
            cur.x, cur.y, cur.heading, vl, vr, dt_sub, N_SUBSTEPS,
            walls, ROBOT_RADIUS, AXLE_LENGTH, cur.crashed)
        cur = RobotState(x, y, th, vl, vr, bool(crashed))
        trace.append(cur)
    return cur, trace


def u_ori(state: RobotState, maze: Maze) -> RobotState:
    """Rotate counterclockwise in place until aligned with the target."""
    return run_primitive("orient", state, maze)[0]


def u_fwd(state: RobotState, maze: Maze) -> RobotState:
    """Drive straight until obstacle standoff, target, or an intensity
    local maximum along the line of motion."""
    return run_primitive("forward", state, maze)[0]


def u_fol(state: RobotState, maze: Maze) -> RobotState:
    """Follow the wall to the left (counterclockwise) until an intensity
    local maximum."""
    return run_primitive("follow", state, maze)[0]


# ---------------------------------------------------------------------------
# episode entry points
# ---------------------------------------------------------------------------

def run_ibug(maze: Maze, limits: EpisodeLimits,
             record_trajectory: bool = False) -> EpisodeResult:
    return run_episode(IBugController(), maze, limits, ibug24(),
                       record_trajectory=record_trajectory)


def run_com(maze: Maze, limits: EpisodeLimits,
            record_trajectory: bool = False) -> EpisodeResult:
    return run_episode(ComController(), maze, limits, ibug24(),
                       record_trajectory=record_trajectory)


def controller_for(algo: str):
    if algo == "ibug":
        return IBugController()
    if algo == "com":
        return ComController()
    raise ValueError(f"unknown baseline {algo!r}")
