"""Hot numeric kernels, JIT-compiled with numba.

Everything here operates on flat float64/int arrays so that the episode
loop (sensing -> network tick -> wheel kinematics) runs without Python
overhead. The pure-Python wrappers in `sim` and `neat.network` call
these same kernels, so the fused episode runner and the step-by-step
path produce identical floating-point trajectories.

Conventions:
  - walls: (W, 4) float64 array of axis-aligned rects [x0, y0, x1, y1]
  - angles in radians; headings normalized to [0, 2*pi)
  - node kind codes: 0 = input, 1 = hidden, 2 = gru, 3 = output
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

TWO_PI = 2.0 * math.pi

KIND_INPUT = 0
KIND_HIDDEN = 1
KIND_GRU = 2
KIND_OUTPUT = 3

# substep bisection iterations for contact clamping
_BISECT_ITERS = 32


@njit(cache=True)
def min_wall_distance(x, y, walls):
    """Distance from a point to the nearest wall rect (inf when no walls)."""
    best = 1e30
    for i in range(walls.shape[0]):
        dx = walls[i, 0] - x
        if x - walls[i, 2] > dx:
            dx = x - walls[i, 2]
        if dx < 0.0:
            dx = 0.0
        dy = walls[i, 1] - y
        if y - walls[i, 3] > dy:
            dy = y - walls[i, 3]
        if dy < 0.0:
            dy = 0.0
        d = math.sqrt(dx * dx + dy * dy)
        if d < best:
            best = d
    return best


@njit(cache=True)
def ray_hit(ox, oy, dx, dy, walls, max_range):
    """First intersection parameter of a ray with the walls.

    Returns the hit distance in (0, max_range], 0.0 if the origin is
    inside a wall, and -1.0 when nothing is hit within max_range.
    """
    best = max_range + 1.0
    for i in range(walls.shape[0]):
        t_enter = -1e30
        t_exit = 1e30
        if dx != 0.0:
            t1 = (walls[i, 0] - ox) / dx
            t2 = (walls[i, 2] - ox) / dx
            if t1 > t2:
                t1, t2 = t2, t1
            if t1 > t_enter:
                t_enter = t1
            if t2 < t_exit:
                t_exit = t2
        elif ox < walls[i, 0] or ox > walls[i, 2]:
            continue
        if dy != 0.0:
            t1 = (walls[i, 1] - oy) / dy
            t2 = (walls[i, 3] - oy) / dy
            if t1 > t2:
                t1, t2 = t2, t1
            if t1 > t_enter:
                t_enter = t1
            if t2 < t_exit:
                t_exit = t2
        elif oy < walls[i, 1] or oy > walls[i, 3]:
            continue
        if t_enter <= t_exit and t_exit >= 0.0:
            t = t_enter if t_enter > 0.0 else 0.0
            if t < best:
                best = t
    if best <= max_range:
        return best
    return -1.0


@njit(cache=True)
def proximity_scan(x, y, heading, angles, sensor_range, walls, out):
    """Normalized proximity readings: 1 - hit/range, 0 when nothing in range."""
    for i in range(angles.shape[0]):
        a = heading + angles[i]
        t = ray_hit(x, y, math.cos(a), math.sin(a), walls, sensor_range)
        if t >= 0.0:
            out[i] = 1.0 - t / sensor_range
        else:
            out[i] = 0.0


@njit(cache=True)
def _arc_endpoint(x, y, th, v, w, dt):
    """Exact unicycle arc: constant v (m/s) and w (rad/s) over dt."""
    if abs(w) < 1e-12:
        return x + v * dt * math.cos(th), y + v * dt * math.sin(th), th
    r = v / w
    th2 = th + w * dt
    nx = x + r * (math.sin(th2) - math.sin(th))
    ny = y - r * (math.cos(th2) - math.cos(th))
    return nx, ny, th2


@njit(cache=True)
def advance_tick(x, y, th, vl, vr, dt_sub, n_sub, walls, radius, axle, crashed):
    """Integrate one control tick as n_sub exact-arc substeps.

    A substep whose endpoint would put the robot disc in contact with a
    wall is clamped just short of contact (bisection on the arc
    parameter) and the crashed flag is set. Returns (x, y, th, crashed).
    """
    v = 0.5 * (vl + vr)
    w = (vr - vl) / axle
    speed = abs(vl)
    if abs(vr) > speed:
        speed = abs(vr)
    # no wall can be reached this tick: skip the contact queries
    check = True
    if speed * dt_sub * n_sub + 1e-9 < min_wall_distance(x, y, walls) - radius:
        check = False
    for _ in range(n_sub):
        nx, ny, nth = _arc_endpoint(x, y, th, v, w, dt_sub)
        if check and min_wall_distance(nx, ny, walls) <= radius:
            t_lo = 0.0
            t_hi = 1.0
            for _ in range(_BISECT_ITERS):
                t_mid = 0.5 * (t_lo + t_hi)
                mx, my, _ = _arc_endpoint(x, y, th, v, w, dt_sub * t_mid)
                if min_wall_distance(mx, my, walls) <= radius:
                    t_hi = t_mid
                else:
                    t_lo = t_mid
            nx, ny, nth = _arc_endpoint(x, y, th, v, w, dt_sub * t_lo)
            crashed = True
        x = nx
        y = ny
        th = nth % TWO_PI
    return x, y, th, crashed


@njit(cache=True)
def net_tick(kinds, eval_order, in_off, in_src, in_w, in_rec, gru,
             input_idx, inputs, vals_prev, vals_cur, hidden):
    """One synchronous network tick.

    Forward links read this tick's values (sources precede consumers in
    eval_order); recurrent links read the previous tick's values. Plain
    hidden/output nodes apply the logistic sigmoid; gru nodes apply the
    gated update to their summed input and output the new hidden state.
    """
    for i in range(input_idx.shape[0]):
        vals_cur[input_idx[i]] = inputs[i]
    for oi in range(eval_order.shape[0]):
        idx = eval_order[oi]
        a = 0.0
        for k in range(in_off[idx], in_off[idx + 1]):
            if in_rec[k] != 0:
                a += in_w[k] * vals_prev[in_src[k]]
            else:
                a += in_w[k] * vals_cur[in_src[k]]
        if kinds[idx] == KIND_GRU:
            h = hidden[idx]
            z = 1.0 / (1.0 + math.exp(-(gru[idx, 0] * a + gru[idx, 1] * h + gru[idx, 2])))
            r = 1.0 / (1.0 + math.exp(-(gru[idx, 3] * a + gru[idx, 4] * h + gru[idx, 5])))
            c = math.tanh(gru[idx, 6] * a + gru[idx, 7] * (r * h) + gru[idx, 8])
            hn = (1.0 - z) * h + z * c
            hidden[idx] = hn
            vals_cur[idx] = hn
        else:
            if a > 60.0:
                vals_cur[idx] = 1.0
            elif a < -60.0:
                vals_cur[idx] = 0.0
            else:
                vals_cur[idx] = 1.0 / (1.0 + math.exp(-a))


@njit(cache=True)
def run_network_episode(walls, sx, sy, sth, tx, ty,
                        sensor_angles, sensor_range, use_proximity, use_bearing,
                        kinds, eval_order, in_off, in_src, in_w, in_rec, gru,
                        input_idx, out_left, out_right,
                        n_ticks, control_dt, n_sub, dt_sub,
                        vmax, axle, radius, target_radius):
    """Fused episode loop for a network controller.

    Identical tick sequence to sim.run_episode: observe, check target,
    activate, clamp wheel speeds, integrate. Returns
    (solved, trajectory_len, crashed, ticks_used, x, y, th, final_dist).
    """
    n_nodes = kinds.shape[0]
    vals_prev = np.zeros(n_nodes, dtype=np.float64)
    vals_cur = np.zeros(n_nodes, dtype=np.float64)
    hidden = np.zeros(n_nodes, dtype=np.float64)
    inputs = np.zeros(input_idx.shape[0], dtype=np.float64)
    prox = np.zeros(sensor_angles.shape[0], dtype=np.float64)

    x = sx
    y = sy
    th = sth
    solved = False
    crashed = False
    traj = 0.0
    ticks = 0

    for k in range(n_ticks):
        dist = math.hypot(tx - x, ty - y)
        if dist < target_radius:
            solved = True
            ticks = k
            break
        j = 0
        if use_proximity:
            proximity_scan(x, y, th, sensor_angles, sensor_range, walls, prox)
            for s in range(prox.shape[0]):
                inputs[j] = prox[s]
                j += 1
        inputs[j] = dist
        j += 1
        if use_bearing:
            cw = ((th - math.atan2(ty - y, tx - x)) % TWO_PI) / TWO_PI
            inputs[j] = cw
            inputs[j + 1] = 1.0 - cw
            j += 2
        inputs[j] = 1.0  # bias

        for i in range(n_nodes):
            vals_prev[i] = vals_cur[i]
        net_tick(kinds, eval_order, in_off, in_src, in_w, in_rec, gru,
                 input_idx, inputs, vals_prev, vals_cur, hidden)
        vl = (vals_cur[out_left] - 0.5) * 2.0 * vmax
        vr = (vals_cur[out_right] - 0.5) * 2.0 * vmax
        if not (math.isfinite(vl) and math.isfinite(vr)):
            crashed = True
            ticks = k
            break
        if vl > vmax:
            vl = vmax
        elif vl < -vmax:
            vl = -vmax
        if vr > vmax:
            vr = vmax
        elif vr < -vmax:
            vr = -vmax
        px = x
        py = y
        x, y, th, crashed = advance_tick(x, y, th, vl, vr, dt_sub, n_sub,
                                         walls, radius, axle, crashed)
        traj += math.hypot(x - px, y - py)
        ticks = k + 1

    final_dist = math.hypot(tx - x, ty - y)
    if not solved and final_dist < target_radius:
        solved = True
    return solved, traj, crashed, ticks, x, y, th, final_dist


def warmup():
    """Force-compile every kernel (cheap dummy calls); useful before forking workers."""
    walls = np.array([[0.0, 0.0, 1.0, 0.1]], dtype=np.float64)
    min_wall_distance(0.5, 0.5, walls)
    ray_hit(0.5, 0.5, 0.0, -1.0, walls, 2.0)
    out = np.zeros(2, dtype=np.float64)
    proximity_scan(0.5, 0.5, 0.0, np.array([0.0, 1.0]), 2.0, walls, out)
    advance_tick(0.5, 0.5, 0.0, 0.1, 0.1, 0.01, 2, walls, 0.085, 0.14, False)
    kinds = np.array([KIND_INPUT, KIND_INPUT, KIND_OUTPUT, KIND_OUTPUT], dtype=np.int8)
    order = np.array([2, 3], dtype=np.int32)
    in_off = np.array([0, 0, 0, 1, 2], dtype=np.int32)
    in_src = np.array([0, 1], dtype=np.int32)
    in_w = np.array([0.5, -0.5], dtype=np.float64)
    in_rec = np.zeros(2, dtype=np.uint8)
    gru = np.zeros((4, 9), dtype=np.float64)
    input_idx = np.array([0, 1], dtype=np.int32)
    vals = np.zeros(4)
    net_tick(kinds, order, in_off, in_src, in_w, in_rec, gru,
             input_idx, np.array([0.3, 1.0]), vals.copy(), vals.copy(), vals.copy())
    run_network_episode(walls, 0.5, 0.5, 0.0, 0.9, 0.5,
                        np.zeros(0, dtype=np.float64), 0.2, False, False,
                        kinds, order, in_off, in_src, in_w, in_rec, gru,
                        input_idx, 2, 3,
                        5, 0.1, 10, 0.01, 0.2, 0.14, 0.085, 0.3)
