"""Maze environments.

Procedural indoor-maze generation (recursive room division with door
gaps, plus wall detachments that create corridor loops), occupancy
rasterization with robot-radius inflation, and the grid shortest-path
oracle used to normalize trajectory lengths.
"""

from __future__ import annotations

import hashlib
import heapq
import math
import random
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .geometry import Rect, point_rect_distance, rect_array
from .params import CELLS_PER_METER, ROBOT_RADIUS, WALL_THICKNESS

SQRT2 = math.sqrt(2.0)

MIN_ROOM = 1.4              # m, smallest room side the divider will create
DOOR_MIN, DOOR_MAX = 0.7, 1.1
PLACE_CLEARANCE = 0.25      # m, wall clearance for start/target placement
MIN_SEPARATION_FRAC = 0.4   # min start-target distance as fraction of side
MAX_GENERATION_ATTEMPTS = 64


class MazeGenerationError(RuntimeError):
    """Raised when no solvable layout is found within the retry budget."""


class MazeFormatError(ValueError):
    """Malformed maze file; message carries file name and line number."""


@dataclass(frozen=True)
class Maze:
    """Axis-aligned wall-segment environment with start pose and target."""

    side: float
    walls: tuple[Rect, ...]
    start_pose: tuple[float, float, float]   # x, y, heading
    target: tuple[float, float]

    @cached_property
    def wall_array(self) -> np.ndarray:
        return rect_array(self.walls)

    @cached_property
    def _grid_cache(self) -> dict:
        return {}

    def grid(self, resolution: int, inflate: float = ROBOT_RADIUS) -> "OccupancyGrid":
        key = (resolution, inflate)
        if key not in self._grid_cache:
            self._grid_cache[key] = rasterize(self, resolution, inflate=inflate)
        return self._grid_cache[key]


@dataclass
class OccupancyGrid:
    """Boolean occupancy matrix; cells[iy, ix] covers
    [ix*cell_size, (ix+1)*cell_size] x [iy*cell_size, (iy+1)*cell_size]."""

    resolution: int
    cell_size: float
    cells: np.ndarray = field(repr=False)

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        ix = min(max(int(x / self.cell_size), 0), self.resolution - 1)
        iy = min(max(int(y / self.cell_size), 0), self.resolution - 1)
        return ix, iy


@dataclass(frozen=True)
class MazeParams:
    side_m: float = 14.0
    room_density: float = 0.5
    loop_probability: float = 0.5


def _q6(v: float) -> float:
    return round(v, 6)


def _derived_rng(seed: int, attempt: int) -> random.Random:
    digest = hashlib.sha256(f"maze:{seed}:{attempt}".encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def default_resolution(side_m: float) -> int:
    return max(10, int(round(side_m * CELLS_PER_METER)))


class _DivisionWall:
    """One recursive-division wall: an axis-aligned strip with door gaps."""

    def __init__(self, vertical: bool, pos: float, lo: float, hi: float):
        self.vertical = vertical
        self.pos = pos          # min coordinate across the wall thickness
        self.lo = lo
        self.hi = hi
        self.gaps: list[tuple[float, float]] = []

    def add_gap(self, g0: float, g1: float):
        self.gaps.append((max(g0, self.lo), min(g1, self.hi)))

    def segments(self) -> list[Rect]:
        out = []
        edges = [self.lo]
        for g0, g1 in sorted(self.gaps):
            edges.extend((g0, g1))
        edges.append(self.hi)
        for i in range(0, len(edges), 2):
            a, b = edges[i], edges[i + 1]
            if b - a < 0.05:
                continue
            if self.vertical:
                out.append(Rect(self.pos, a, self.pos + WALL_THICKNESS, b))
            else:
                out.append(Rect(a, self.pos, b, self.pos + WALL_THICKNESS))
        return out


def _divide(rng: random.Random, walls: list[_DivisionWall],
            x0: float, y0: float, x1: float, y1: float,
            density: float, force: bool):
    w, h = x1 - x0, y1 - y0
    can_v = w >= 2 * MIN_ROOM + WALL_THICKNESS
    can_h = h >= 2 * MIN_ROOM + WALL_THICKNESS
    if not (can_v or can_h):
        return
    if not force and rng.random() >= density:
        return
    if can_v and can_h:
        vertical = rng.random() < w / (w + h)
    else:
        vertical = can_v
    door = rng.uniform(DOOR_MIN, DOOR_MAX)
    if vertical:
        pos = rng.uniform(x0 + MIN_ROOM, x1 - MIN_ROOM - WALL_THICKNESS)
        wall = _DivisionWall(True, pos, y0, y1)
        g0 = rng.uniform(y0, y1 - door)
        wall.add_gap(g0, g0 + door)
        walls.append(wall)
        _divide(rng, walls, x0, y0, pos, y1, density, False)
        _divide(rng, walls, pos + WALL_THICKNESS, y0, x1, y1, density, False)
    else:
        pos = rng.uniform(y0 + MIN_ROOM, y1 - MIN_ROOM - WALL_THICKNESS)
        wall = _DivisionWall(False, pos, x0, x1)
        g0 = rng.uniform(x0, x1 - door)
        wall.add_gap(g0, g0 + door)
        walls.append(wall)
        _divide(rng, walls, x0, y0, x1, pos, density, False)
        _divide(rng, walls, x0, pos + WALL_THICKNESS, x1, y1, density, False)


def _carve_loops(rng: random.Random, division_walls: list[_DivisionWall],
                 loop_probability: float):
    """Open extra gaps so the layout is not simply connected.

    Detaching both ends of a wall leaves a free-standing section that
    corridors can loop around; an extra mid-wall door creates a room
    cycle when a later wall abuts the stretch between the doors.
    """
    if loop_probability <= 0.0 or not division_walls:
        return
    chosen = [w for w in division_walls if rng.random() < loop_probability]
    detachable = [w for w in division_walls if w.hi - w.lo > 4.0 * DOOR_MAX]
    if not any(w in detachable for w in chosen) and detachable:
        chosen.append(rng.choice(detachable))
    for wall in chosen:
        door = rng.uniform(DOOR_MIN, DOOR_MAX)
        if wall in detachable and rng.random() < 0.7:
            wall.add_gap(wall.lo, wall.lo + door)
            wall.add_gap(wall.hi - door, wall.hi)
        else:
            g0 = rng.uniform(wall.lo, wall.hi - door)
            wall.add_gap(g0, g0 + door)


def _sample_free_point(rng: random.Random, maze_walls: list[Rect], side: float,
                       clearance: float) -> tuple[float, float] | None:
    for _ in range(200):
        x = rng.uniform(clearance, side - clearance)
        y = rng.uniform(clearance, side - clearance)
        if all(point_rect_distance(x, y, r) > clearance for r in maze_walls):
            return x, y
    return None


def generate_maze(params: MazeParams, seed: int) -> Maze:
    """Generate a solvable maze, deterministic in (params, seed).

    Retries internally on layouts where no valid start/target pair is
    found and raises MazeGenerationError after a bounded attempt count.
    """
    if params.side_m <= 4 * ROBOT_RADIUS:
        raise ValueError(f"side_m {params.side_m} too small for the robot")
    for attempt in range(MAX_GENERATION_ATTEMPTS):
        rng = _derived_rng(seed, attempt)
        maze = _try_generate(params, rng)
        if maze is not None:
            return maze
    raise MazeGenerationError(
        f"no solvable maze for params={params} seed={seed} "
        f"after {MAX_GENERATION_ATTEMPTS} attempts")


def _try_generate(params: MazeParams, rng: random.Random) -> Maze | None:
    s = params.side_m
    t = WALL_THICKNESS
    walls: list[Rect] = [
        Rect(0.0, 0.0, s, t),
        Rect(0.0, s - t, s, s),
        Rect(0.0, 0.0, t, s),
        Rect(s - t, 0.0, s, s),
    ]
    division_walls: list[_DivisionWall] = []
    if params.room_density > 0.0:
        _divide(rng, division_walls, t, t, s - t, s - t,
                params.room_density, force=True)
        _carve_loops(rng, division_walls, params.loop_probability)
        for dw in division_walls:
            walls.extend(dw.segments())

    start = _sample_free_point(rng, walls, s, PLACE_CLEARANCE)
    if start is None:
        return None
    min_sep = MIN_SEPARATION_FRAC * s
    target = None
    for _ in range(200):
        cand = _sample_free_point(rng, walls, s, PLACE_CLEARANCE)
        if cand is not None and math.dist(start, cand) >= min_sep:
            target = cand
            break
    if target is None:
        return None
    heading = rng.uniform(0.0, 2.0 * math.pi)

    maze = Maze(
        side=_q6(s),
        walls=tuple(Rect(_q6(r.x0), _q6(r.y0), _q6(r.x1), _q6(r.y1)) for r in walls),
        start_pose=(_q6(start[0]), _q6(start[1]), _q6(heading)),
        target=(_q6(target[0]), _q6(target[1])),
    )
    if not math.isfinite(astar_length(maze, start, target,
                                      default_resolution(s))):
        return None
    return maze


def rasterize(maze: Maze, resolution: int, inflate: float = ROBOT_RADIUS) -> OccupancyGrid:
    """Occupancy grid: a cell is occupied iff its square lies within
    `inflate` of some wall rectangle (disc inflation, exact distance)."""
    if resolution < 10:
        raise ValueError("resolution must be >= 10")
    cell = maze.side / resolution
    lo = np.arange(resolution) * cell
    hi = lo + cell
    occ = np.zeros((resolution, resolution), dtype=bool)
    r2 = inflate * inflate
    for w in maze.walls:
        gx = np.maximum(np.maximum(w.x0 - hi, lo - w.x1), 0.0)
        gy = np.maximum(np.maximum(w.y0 - hi, lo - w.y1), 0.0)
        occ |= (gx[None, :] ** 2 + gy[:, None] ** 2) <= r2
    return OccupancyGrid(resolution=resolution, cell_size=cell, cells=occ)


def point_in_free_space(maze: Maze, p: tuple[float, float], clearance: float) -> bool:
    """True iff the disc of radius `clearance` at p intersects no wall."""
    x, y = p
    if not (0.0 <= x <= maze.side and 0.0 <= y <= maze.side):
        return False
    return all(point_rect_distance(x, y, r) > clearance for r in maze.walls)


def _snap_free(grid: OccupancyGrid, ix: int, iy: int) -> tuple[int, int] | None:
    """Nearest free cell by BFS ring search (endpoint quantization guard)."""
    if not grid.cells[iy, ix]:
        return ix, iy
    res = grid.resolution
    max_r = int(math.ceil(ROBOT_RADIUS / grid.cell_size)) + 2
    for r in range(1, max_r + 1):
        best = None
        for dy in range(-r, r + 1):
            for dx in range(-r, r + 1):
                if max(abs(dx), abs(dy)) != r:
                    continue
                x2, y2 = ix + dx, iy + dy
                if 0 <= x2 < res and 0 <= y2 < res and not grid.cells[y2, x2]:
                    d = dx * dx + dy * dy
                    if best is None or d < best[0]:
                        best = (d, x2, y2)
        if best is not None:
            return best[1], best[2]
    return None


_OCTILE_DIRS = ((1, 0, 1.0), (-1, 0, 1.0), (0, 1, 1.0), (0, -1, 1.0),
                (1, 1, SQRT2), (1, -1, SQRT2), (-1, 1, SQRT2), (-1, -1, SQRT2))


def astar_path(maze: Maze, a: tuple[float, float], b: tuple[float, float],
               resolution: int) -> tuple[float, list[tuple[float, float]]]:
    """8-connected grid shortest path between the cells containing a and b.

    Returns (length_m, waypoints at cell centers); (inf, []) when the
    grid is disconnected between the endpoints.
    """
    grid = maze.grid(resolution)
    cell = grid.cell_size
    start = _snap_free(grid, *grid.cell_of(*a))
    goal = _snap_free(grid, *grid.cell_of(*b))
    if start is None or goal is None:
        return math.inf, []
    res = grid.resolution
    occ = grid.cells
    straight = cell
    diag = cell * SQRT2

    def h(ix, iy):
        dx = abs(ix - goal[0])
        dy = abs(iy - goal[1])
        if dx < dy:
            dx, dy = dy, dx
        return straight * (dx - dy) + diag * dy

    g = np.full((res, res), np.inf)
    came: dict[tuple[int, int], tuple[int, int]] = {}
    g[start[1], start[0]] = 0.0
    heap = [(h(*start), start)]
    found = False
    while heap:
        f, (ix, iy) = heapq.heappop(heap)
        gc = g[iy, ix]
        if f > gc + h(ix, iy) + 1e-12:
            continue
        if (ix, iy) == goal:
            found = True
            break
        for dx, dy, step in _OCTILE_DIRS:
            x2, y2 = ix + dx, iy + dy
            if not (0 <= x2 < res and 0 <= y2 < res) or occ[y2, x2]:
                continue
            g2 = gc + step * cell
            if g2 < g[y2, x2]:
                g[y2, x2] = g2
                came[(x2, y2)] = (ix, iy)
                heapq.heappush(heap, (g2 + h(x2, y2), (x2, y2)))
    if not found:
        return math.inf, []
    path = [goal]
    node = goal
    while node != start:
        node = came[node]
        path.append(node)
    path.reverse()
    pts = [((ix + 0.5) * cell, (iy + 0.5) * cell) for ix, iy in path]
    return g[goal[1], goal[0]], pts


def astar_length(maze: Maze, a: tuple[float, float], b: tuple[float, float],
                 resolution: int) -> float:
    """Shortest 8-connected grid path length in meters (inf if unreachable)."""
    length, _ = astar_path(maze, a, b, resolution)
    return length


# ---------------------------------------------------------------------------
# maze file format: line-oriented text, fixed 6-decimal numbers
# ---------------------------------------------------------------------------

def save_maze(maze: Maze, path) -> None:
    lines = [f"maze v1 {maze.side:.6f}"]
    for r in maze.walls:
        lines.append(f"wall {r.x0:.6f} {r.y0:.6f} {r.x1:.6f} {r.y1:.6f}")
    x, y, th = maze.start_pose
    lines.append(f"start {x:.6f} {y:.6f} {th:.6f}")
    tx, ty = maze.target
    lines.append(f"target {tx:.6f} {ty:.6f}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_maze(path) -> Maze:
    def fail(lineno, msg):
        raise MazeFormatError(f"{path}:{lineno}: {msg}")

    walls: list[Rect] = []
    side = start = target = None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split()
            try:
                if lineno == 1:
                    if parts[:2] != ["maze", "v1"] or len(parts) != 3:
                        fail(lineno, f"bad header {line!r}")
                    side = float(parts[2])
                elif parts[0] == "wall" and len(parts) == 5:
                    walls.append(Rect(*map(float, parts[1:])))
                elif parts[0] == "start" and len(parts) == 4:
                    start = tuple(map(float, parts[1:]))
                elif parts[0] == "target" and len(parts) == 3:
                    target = tuple(map(float, parts[1:]))
                else:
                    fail(lineno, f"unrecognized line {line!r}")
            except (ValueError, TypeError) as exc:
                if isinstance(exc, MazeFormatError):
                    raise
                fail(lineno, f"cannot parse {line!r}: {exc}")
    if side is None or start is None or target is None:
        raise MazeFormatError(f"{path}: missing header, start or target line")
    return Maze(side=side, walls=tuple(walls), start_pose=start, target=target)
