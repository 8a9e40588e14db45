"""Genome representation and mutation operators.

Node ids and link innovation numbers are allocated by a shared
InnovationTable so that identical structural mutations made anywhere in
the population within one generation receive identical numbers, which
keeps genomes alignable for distance computation and crossover.

Link direction invariant: non-recurrent links always form a DAG (over
enabled and disabled genes alike); a proposed link that would close a
cycle, or a self-loop, is stored as recurrent and reads the previous
tick's source activation.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace

INPUT, HIDDEN, GRU, OUTPUT = "input", "hidden", "gru", "output"
_KINDS = (INPUT, HIDDEN, GRU, OUTPUT)

N_GRU_PARAMS = 9  # w_z, u_z, b_z, w_r, u_r, b_r, w_c, u_c, b_c


class GenomeFormatError(ValueError):
    """Malformed genome file; message carries file name and line number."""


@dataclass
class GruParams:
    """Gate parameters of a scalar GRU node.

    The runtime hidden state h lives in the phenotype network and is
    zeroed at every episode reset; the genome only carries the weights.
    """

    w_z: float = 0.0
    u_z: float = 0.0
    b_z: float = 0.0
    w_r: float = 0.0
    u_r: float = 0.0
    b_r: float = 0.0
    w_c: float = 0.0
    u_c: float = 0.0
    b_c: float = 0.0

    def as_tuple(self) -> tuple[float, ...]:
        return (self.w_z, self.u_z, self.b_z, self.w_r, self.u_r, self.b_r,
                self.w_c, self.u_c, self.b_c)

    @classmethod
    def from_iter(cls, values) -> "GruParams":
        vals = list(values)
        if len(vals) != N_GRU_PARAMS:
            raise ValueError(f"expected {N_GRU_PARAMS} gru params, got {len(vals)}")
        return cls(*vals)

    @classmethod
    def random(cls, rng: random.Random) -> "GruParams":
        return cls(*(rng.uniform(-1.0, 1.0) for _ in range(N_GRU_PARAMS)))


@dataclass
class NodeGene:
    id: int
    kind: str
    gru: GruParams | None = None

    def copy(self) -> "NodeGene":
        return NodeGene(self.id, self.kind,
                        None if self.gru is None else replace(self.gru))


@dataclass
class LinkGene:
    innovation: int
    src: int
    dst: int
    weight: float
    enabled: bool = True
    recurrent: bool = False

    def copy(self) -> "LinkGene":
        return LinkGene(self.innovation, self.src, self.dst, self.weight,
                        self.enabled, self.recurrent)


@dataclass
class Genome:
    id: int
    nodes: list[NodeGene]
    links: list[LinkGene]
    fitness: float = 0.0
    species_id: int = -1

    def copy(self, new_id: int | None = None) -> "Genome":
        return Genome(id=self.id if new_id is None else new_id,
                      nodes=[n.copy() for n in self.nodes],
                      links=[l.copy() for l in self.links],
                      fitness=self.fitness, species_id=self.species_id)

    @property
    def n_inputs(self) -> int:
        """Input-side node count (sensor inputs plus the bias input)."""
        return sum(1 for n in self.nodes if n.kind == INPUT)

    @property
    def n_outputs(self) -> int:
        return sum(1 for n in self.nodes if n.kind == OUTPUT)

    def gru_node_count(self) -> int:
        return sum(1 for n in self.nodes if n.kind == GRU)

    def node_by_id(self, nid: int) -> NodeGene:
        for n in self.nodes:
            if n.id == nid:
                return n
        raise KeyError(nid)

    def link_pairs(self) -> set[tuple[int, int]]:
        return {(l.src, l.dst) for l in self.links}


class InnovationTable:
    """Run-scoped allocator for node ids and link innovation numbers.

    Per-generation memo tables make identical structural mutations
    (same split link / same endpoint pair, same node kind) reuse the
    same numbers; begin_generation() clears the memos but never the
    counters, so numbers stay globally unique within a run.
    """

    def __init__(self, next_node_id: int = 0, next_innovation: int = 0):
        self.next_node_id = next_node_id
        self.next_innovation = next_innovation
        self._splits: dict[tuple[int, str], tuple[int, int, int]] = {}
        self._links: dict[tuple[int, int], int] = {}

    def begin_generation(self) -> None:
        self._splits.clear()
        self._links.clear()

    def link_innovation(self, src: int, dst: int) -> int:
        key = (src, dst)
        if key not in self._links:
            self._links[key] = self.next_innovation
            self.next_innovation += 1
        return self._links[key]

    def split_numbers(self, link_innovation: int, kind: str) -> tuple[int, int, int]:
        """(new_node_id, in_link_innovation, out_link_innovation) for a split."""
        key = (link_innovation, kind)
        if key not in self._splits:
            node_id = self.next_node_id
            self.next_node_id += 1
            self._splits[key] = (node_id, self.next_innovation,
                                 self.next_innovation + 1)
            self.next_innovation += 2
        return self._splits[key]


def minimal_genome(genome_id: int, n_sensor_inputs: int, n_outputs: int,
                   rng: random.Random, table: InnovationTable) -> Genome:
    """Fully connected input->output genome, weights uniform in [-1, 1].

    Input-side nodes are the sensor inputs in order followed by one bias
    input that callers feed the constant 1.0.
    """
    n_in = n_sensor_inputs + 1
    nodes = [NodeGene(i, INPUT) for i in range(n_in)]
    nodes += [NodeGene(n_in + i, OUTPUT) for i in range(n_outputs)]
    table.next_node_id = max(table.next_node_id, n_in + n_outputs)
    links = []
    for dst in range(n_in, n_in + n_outputs):
        for src in range(n_in):
            links.append(LinkGene(table.link_innovation(src, dst), src, dst,
                                  rng.uniform(-1.0, 1.0)))
    links.sort(key=lambda l: l.innovation)
    return Genome(id=genome_id, nodes=nodes, links=links)


def _forward_reachable(genome: Genome, start: int, goal: int) -> bool:
    """True if goal is reachable from start along non-recurrent links
    (enabled or disabled)."""
    adj: dict[int, list[int]] = {}
    for l in genome.links:
        if not l.recurrent:
            adj.setdefault(l.src, []).append(l.dst)
    stack = [start]
    seen = {start}
    while stack:
        node = stack.pop()
        if node == goal:
            return True
        for nxt in adj.get(node, ()):
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return False


def mutate_weights(genome: Genome, power: float, gru_power: float,
                   severe_prob: float, rng: random.Random) -> Genome:
    """Perturb every link weight and GRU parameter independently.

    Each value gets u ~ U(-power, power) added, except with probability
    severe_prob the perturbation replaces the value outright.
    """
    g = genome.copy()
    for link in g.links:
        u = rng.uniform(-power, power)
        if rng.random() < severe_prob:
            link.weight = u
        else:
            link.weight += u
    for node in g.nodes:
        if node.gru is None:
            continue
        vals = list(node.gru.as_tuple())
        for i in range(N_GRU_PARAMS):
            u = rng.uniform(-gru_power, gru_power)
            if rng.random() < severe_prob:
                vals[i] = u
            else:
                vals[i] += u
        node.gru = GruParams.from_iter(vals)
    return g


def mutate_add_link(genome: Genome, rng: random.Random,
                    table: InnovationTable) -> Genome:
    """Add one link between a previously unconnected eligible pair.

    Destinations are non-input nodes; sources may be any node including
    outputs. Pairs that would close a forward cycle (or self-loops) are
    added as recurrent. No-op when the genome is saturated.
    """
    existing = genome.link_pairs()
    candidates = []
    dst_nodes = [n.id for n in genome.nodes if n.kind != INPUT]
    for src in (n.id for n in genome.nodes):
        for dst in dst_nodes:
            if (src, dst) not in existing:
                candidates.append((src, dst))
    if not candidates:
        return genome
    src, dst = candidates[rng.randrange(len(candidates))]
    recurrent = src == dst or _forward_reachable(genome, dst, src)
    g = genome.copy()
    g.links.append(LinkGene(table.link_innovation(src, dst), src, dst,
                            rng.uniform(-1.0, 1.0), True, recurrent))
    g.links.sort(key=lambda l: l.innovation)
    return g


def _split_link(genome: Genome, rng: random.Random, table: InnovationTable,
                kind: str) -> Genome:
    enabled = [l for l in genome.links if l.enabled]
    if not enabled:
        return genome
    target = enabled[rng.randrange(len(enabled))]
    node_id, in_innov, out_innov = table.split_numbers(target.innovation, kind)
    g = genome.copy()
    for l in g.links:
        if l.innovation == target.innovation:
            l.enabled = False
    gru = GruParams.random(rng) if kind == GRU else None
    g.nodes.append(NodeGene(node_id, kind, gru))
    g.nodes.sort(key=lambda n: n.id)
    # in-link carries the original recurrency; out-link is a fresh forward edge
    g.links.append(LinkGene(in_innov, target.src, node_id, 1.0, True,
                            target.recurrent))
    g.links.append(LinkGene(out_innov, node_id, target.dst, target.weight,
                            True, False))
    g.links.sort(key=lambda l: l.innovation)
    return g


def mutate_add_node(genome: Genome, rng: random.Random,
                    table: InnovationTable) -> Genome:
    """Split a random enabled link with a new sigmoid hidden node."""
    return _split_link(genome, rng, table, HIDDEN)


def mutate_add_gru_node(genome: Genome, rng: random.Random,
                        table: InnovationTable) -> Genome:
    """Split a random enabled link with a new GRU node; gate parameters
    start uniform in [-1, 1] and the hidden state starts at zero."""
    return _split_link(genome, rng, table, GRU)


def compatibility_distance(g1: Genome, g2: Genome,
                           c1: float = 1.0, c2: float = 1.0,
                           c3: float = 0.4) -> float:
    """c1*excess/N + c2*disjoint/N + c3*mean weight difference.

    Matching GRU nodes contribute the mean absolute difference of their
    nine parameters to the weight term. N is the larger link count,
    taken as 1 for small genomes (< 20 links).
    """
    links1 = {l.innovation: l for l in g1.links}
    links2 = {l.innovation: l for l in g2.links}
    if not links1 and not links2:
        return 0.0
    max1 = max(links1) if links1 else -1
    max2 = max(links2) if links2 else -1
    excess = disjoint = 0
    diffs = []
    for innov, l in links1.items():
        if innov in links2:
            diffs.append(abs(l.weight - links2[innov].weight))
        elif innov > max2:
            excess += 1
        else:
            disjoint += 1
    for innov in links2:
        if innov not in links1:
            if innov > max1:
                excess += 1
            else:
                disjoint += 1
    gru1 = {n.id: n.gru for n in g1.nodes if n.gru is not None}
    for n in g2.nodes:
        if n.gru is not None and n.id in gru1:
            a = gru1[n.id].as_tuple()
            b = n.gru.as_tuple()
            diffs.append(sum(abs(x - y) for x, y in zip(a, b)) / N_GRU_PARAMS)
    n_genes = max(len(links1), len(links2))
    big_n = n_genes if n_genes >= 20 else 1
    w = sum(diffs) / len(diffs) if diffs else 0.0
    return c1 * excess / big_n + c2 * disjoint / big_n + c3 * w


def crossover(parent1: Genome, parent2: Genome, rng: random.Random,
              child_id: int) -> Genome:
    """NEAT crossover: matching genes from a random parent, disjoint and
    excess genes from the fitter parent; a gene disabled in either
    parent stays disabled in the child with probability 0.75."""
    p1, p2 = parent1, parent2
    if (p2.fitness, -len(p2.links), -p2.id) > (p1.fitness, -len(p1.links), -p1.id):
        p1, p2 = p2, p1
    other = {l.innovation: l for l in p2.links}
    links = []
    for l1 in p1.links:
        l2 = other.get(l1.innovation)
        if l2 is not None:
            gene = (l1 if rng.random() < 0.5 else l2).copy()
            gene.recurrent = l1.recurrent
            if not (l1.enabled and l2.enabled) and rng.random() < 0.75:
                gene.enabled = False
            else:
                gene.enabled = True
        else:
            gene = l1.copy()
        links.append(gene)
    return Genome(id=child_id, nodes=[n.copy() for n in p1.nodes], links=links)


def validate_genome(genome: Genome, n_sensor_inputs: int | None = None,
                    n_outputs: int | None = None) -> None:
    """Raise AssertionError on any structural invariant violation."""
    ids = [n.id for n in genome.nodes]
    assert len(ids) == len(set(ids)), "duplicate node ids"
    node_map = {n.id: n for n in genome.nodes}
    for n in genome.nodes:
        assert n.kind in _KINDS, f"bad kind {n.kind}"
        assert (n.gru is not None) == (n.kind == GRU), "gru params mismatch"
    innovs = [l.innovation for l in genome.links]
    assert len(innovs) == len(set(innovs)), "duplicate innovations"
    pairs = [(l.src, l.dst) for l in genome.links]
    assert len(pairs) == len(set(pairs)), "duplicate (src, dst) pair"
    for l in genome.links:
        assert l.src in node_map and l.dst in node_map, "dangling endpoint"
        assert node_map[l.dst].kind != INPUT, "link into an input node"
    # forward links must be acyclic
    adj: dict[int, list[int]] = {}
    indeg = {n.id: 0 for n in genome.nodes}
    for l in genome.links:
        if not l.recurrent:
            adj.setdefault(l.src, []).append(l.dst)
            indeg[l.dst] += 1
    frontier = [nid for nid, d in indeg.items() if d == 0]
    seen = 0
    while frontier:
        nid = frontier.pop()
        seen += 1
        for nxt in adj.get(nid, ()):
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                frontier.append(nxt)
    assert seen == len(genome.nodes), "forward links contain a cycle"
    if n_sensor_inputs is not None:
        assert genome.n_inputs == n_sensor_inputs + 1, "input arity"
    if n_outputs is not None:
        assert genome.n_outputs == n_outputs, "output arity"


# ---------------------------------------------------------------------------
# genome file format: line-oriented text, fixed 9-decimal weights
# ---------------------------------------------------------------------------

def save_genome(genome: Genome, path) -> None:
    lines = ["genome v1"]
    for n in genome.nodes:
        lines.append(f"node {n.id} {n.kind}")
        if n.gru is not None:
            params = " ".join(f"{v:.9f}" for v in n.gru.as_tuple())
            lines.append(f"gru {n.id} {params}")
    for l in genome.links:
        lines.append(f"link {l.innovation} {l.src} {l.dst} {l.weight:.9f} "
                     f"{int(l.enabled)} {int(l.recurrent)}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_genome(path, genome_id: int = 0) -> Genome:
    def fail(lineno, msg):
        raise GenomeFormatError(f"{path}:{lineno}: {msg}")

    nodes: list[NodeGene] = []
    by_id: dict[int, NodeGene] = {}
    links: list[LinkGene] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split()
            try:
                if lineno == 1:
                    if parts != ["genome", "v1"]:
                        fail(lineno, f"bad header {line!r}")
                elif parts[0] == "node" and len(parts) == 3:
                    kind = parts[2]
                    if kind not in _KINDS:
                        fail(lineno, f"unknown node kind {kind!r}")
                    node = NodeGene(int(parts[1]), kind)
                    nodes.append(node)
                    by_id[node.id] = node
                elif parts[0] == "gru" and len(parts) == 2 + N_GRU_PARAMS:
                    nid = int(parts[1])
                    if nid not in by_id:
                        fail(lineno, f"gru line for unknown node {nid}")
                    by_id[nid].gru = GruParams.from_iter(map(float, parts[2:]))
                elif parts[0] == "link" and len(parts) == 7:
                    links.append(LinkGene(int(parts[1]), int(parts[2]),
                                          int(parts[3]), float(parts[4]),
                                          parts[5] == "1", parts[6] == "1"))
                else:
                    fail(lineno, f"unrecognized line {line!r}")
            except (ValueError, TypeError) as exc:
                if isinstance(exc, GenomeFormatError):
                    raise
                fail(lineno, f"cannot parse {line!r}: {exc}")
    if not nodes:
        raise GenomeFormatError(f"{path}: no node lines")
    genome = Genome(id=genome_id, nodes=nodes, links=links)
    try:
        validate_genome(genome)
    except AssertionError as exc:
        raise GenomeFormatError(f"{path}: invalid genome: {exc}")
    return genome
