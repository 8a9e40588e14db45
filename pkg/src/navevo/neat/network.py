"""Phenotype network: flat-array interpreter for a genome.

Nodes are evaluated once per tick in a fixed topological order of the
non-recurrent links; recurrent links read the previous tick's source
activation. Output nodes are logistic units mapped linearly to wheel
speeds in [-MAX_WHEEL_SPEED, MAX_WHEEL_SPEED].
"""

from __future__ import annotations

import heapq

import numpy as np

from .. import kernels
from ..params import MAX_WHEEL_SPEED
from .genome import GRU, HIDDEN, INPUT, OUTPUT, Genome

_KIND_CODE = {INPUT: kernels.KIND_INPUT, HIDDEN: kernels.KIND_HIDDEN,
              GRU: kernels.KIND_GRU, OUTPUT: kernels.KIND_OUTPUT}


class Network:
    """Executable form of a genome; holds the recurrent state between ticks."""

    def __init__(self, genome: Genome):
        nodes = sorted(genome.nodes, key=lambda n: n.id)
        self.index = {n.id: i for i, n in enumerate(nodes)}
        n = len(nodes)
        self.kinds = np.array([_KIND_CODE[nd.kind] for nd in nodes], dtype=np.int8)
        self.input_idx = np.array([i for i, nd in enumerate(nodes)
                                   if nd.kind == INPUT], dtype=np.int32)
        out = [i for i, nd in enumerate(nodes) if nd.kind == OUTPUT]
        if len(out) != 2:
            raise ValueError(f"expected 2 output nodes, got {len(out)}")
        self.out_left, self.out_right = out
        self.n_sensor_inputs = len(self.input_idx) - 1  # last input is the bias

        self.gru = np.zeros((n, 9), dtype=np.float64)
        for nd in nodes:
            if nd.gru is not None:
                self.gru[self.index[nd.id]] = nd.gru.as_tuple()

        # topological order over non-recurrent links (enabled or not),
        # ties broken by node id for determinism
        adj: dict[int, list[int]] = {}
        indeg = {nd.id: 0 for nd in nodes}
        for l in genome.links:
            if not l.recurrent:
                adj.setdefault(l.src, []).append(l.dst)
                indeg[l.dst] += 1
        frontier = sorted(nid for nid, d in indeg.items() if d == 0)
        heapq.heapify(frontier)
        order = []
        while frontier:
            nid = heapq.heappop(frontier)
            order.append(nid)
            for nxt in adj.get(nid, ()):
                indeg[nxt] -= 1
                if indeg[nxt] == 0:
                    heapq.heappush(frontier, nxt)
        if len(order) != n:
            raise ValueError("non-recurrent links contain a cycle")
        self.eval_order = np.array(
            [self.index[nid] for nid in order
             if nodes[self.index[nid]].kind != INPUT], dtype=np.int32)

        # CSR of enabled incoming links per node, innovation order
        incoming: dict[int, list] = {i: [] for i in range(n)}
        for l in sorted(genome.links, key=lambda x: x.innovation):
            if l.enabled:
                incoming[self.index[l.dst]].append(
                    (self.index[l.src], l.weight, l.recurrent))
        off = [0]
        src, w, rec = [], [], []
        for i in range(n):
            for s, wt, rc in incoming[i]:
                src.append(s)
                w.append(wt)
                rec.append(1 if rc else 0)
            off.append(len(src))
        self.in_off = np.array(off, dtype=np.int32)
        self.in_src = np.array(src, dtype=np.int32)
        self.in_w = np.array(w, dtype=np.float64)
        self.in_rec = np.array(rec, dtype=np.uint8)

        self.vals = np.zeros(n, dtype=np.float64)
        self.vals_prev = np.zeros(n, dtype=np.float64)
        self.hidden = np.zeros(n, dtype=np.float64)

    def reset(self) -> None:
        """Zero all activations and GRU hidden state (idempotent)."""
        self.vals[:] = 0.0
        self.vals_prev[:] = 0.0
        self.hidden[:] = 0.0

    def activate(self, inputs) -> tuple[float, float]:
        """One synchronous tick; returns the two wheel speed commands.

        `inputs` are the sensor values only; the bias input is appended
        internally as 1.0.
        """
        if len(inputs) != self.n_sensor_inputs:
            raise ValueError(f"expected {self.n_sensor_inputs} inputs, "
                             f"got {len(inputs)}")
        buf = np.empty(len(inputs) + 1, dtype=np.float64)
        buf[:-1] = inputs
        buf[-1] = 1.0
        self.vals_prev[:] = self.vals
        kernels.net_tick(self.kinds, self.eval_order, self.in_off, self.in_src,
                         self.in_w, self.in_rec, self.gru, self.input_idx,
                         buf, self.vals_prev, self.vals, self.hidden)
        vl = (self.vals[self.out_left] - 0.5) * 2.0 * MAX_WHEEL_SPEED
        vr = (self.vals[self.out_right] - 0.5) * 2.0 * MAX_WHEEL_SPEED
        return vl, vr

    def node_value(self, node_id: int) -> float:
        """Current activation of a node, by genome node id (for tests)."""
        return float(self.vals[self.index[node_id]])


def build_network(genome: Genome) -> Network:
    return Network(genome)


def reset_state(network: Network) -> Network:
    network.reset()
    return network
