"""Population management: speciation, fitness sharing, reproduction.

Reproduction is a single-threaded synchronization point: species are
processed in id order and offspring in slot order, so a run is a pure
function of (config, seed). When GRU mode is on, offspring come from
mutation only; plain NEAT uses crossover followed by mutation.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .genome import (Genome, InnovationTable, compatibility_distance,
                     crossover, minimal_genome, mutate_add_gru_node,
                     mutate_add_link, mutate_add_node, mutate_weights)


@dataclass
class NeatConfig:
    population_size: int = 150
    n_sensor_inputs: int = 15
    n_outputs: int = 2
    gru_enabled: bool = True
    weight_mutate_prob: float = 0.8
    severe_prob: float = 0.1
    weight_power: float = 1.5
    gru_power: float = 1.5
    add_link_rate: float = 0.05
    add_node_rate: float = 0.005
    add_gru_rate: float = 0.003
    survival_threshold: float = 0.55
    compat_threshold: float = 3.0
    compat_c1: float = 1.0
    compat_c2: float = 1.0
    compat_c3: float = 0.4
    stagnation_limit: int = 15
    elite_min_size: int = 5


@dataclass
class Species:
    id: int
    representative: Genome
    members: list[Genome] = field(default_factory=list)
    staleness: int = 0
    best_fitness: float = float("-inf")


@dataclass
class Population:
    genomes: list[Genome]
    species: list[Species]
    generation: int
    table: InnovationTable
    next_genome_id: int
    next_species_id: int

    def champion(self) -> Genome:
        return max(self.genomes, key=lambda g: (g.fitness, -g.id))

    def gru_node_mean(self) -> float:
        return sum(g.gru_node_count() for g in self.genomes) / len(self.genomes)


def _ranked(members: list[Genome]) -> list[Genome]:
    return sorted(members, key=lambda g: (-g.fitness, g.id))


def _speciate(genomes: list[Genome], species: list[Species],
              cfg: NeatConfig, next_species_id: int) -> tuple[list[Species], int]:
    """Assign each genome to the first species whose representative is
    within the compatibility threshold, else found a new species."""
    for s in species:
        s.members = []
    for g in genomes:
        placed = False
        for s in species:
            d = compatibility_distance(g, s.representative, cfg.compat_c1,
                                       cfg.compat_c2, cfg.compat_c3)
            if d < cfg.compat_threshold:
                s.members.append(g)
                g.species_id = s.id
                placed = True
                break
        if not placed:
            s = Species(id=next_species_id, representative=g.copy(), members=[g])
            g.species_id = s.id
            next_species_id += 1
            species.append(s)
    species = [s for s in species if s.members]
    return species, next_species_id


def init_population(cfg: NeatConfig, seed: int) -> Population:
    """Minimal genomes: sensor inputs + bias fully connected to outputs,
    weights uniform in [-1, 1]; deterministic in seed."""
    rng = random.Random(seed)
    table = InnovationTable()
    genomes = [minimal_genome(i, cfg.n_sensor_inputs, cfg.n_outputs, rng, table)
               for i in range(cfg.population_size)]
    species, next_sid = _speciate(genomes, [], cfg, 1)
    table.begin_generation()
    return Population(genomes=genomes, species=species, generation=1,
                      table=table, next_genome_id=cfg.population_size,
                      next_species_id=next_sid)


def mutate_genome(genome: Genome, rng: random.Random, table: InnovationTable,
                  cfg: NeatConfig) -> Genome:
    """Standard offspring mutation pipeline (weights, then structure)."""
    g = genome
    if rng.random() < cfg.weight_mutate_prob:
        g = mutate_weights(g, cfg.weight_power, cfg.gru_power,
                           cfg.severe_prob, rng)
    if rng.random() < cfg.add_link_rate:
        g = mutate_add_link(g, rng, table)
    if rng.random() < cfg.add_node_rate:
        g = mutate_add_node(g, rng, table)
    if cfg.gru_enabled and rng.random() < cfg.add_gru_rate:
        g = mutate_add_gru_node(g, rng, table)
    return g


def _allocate_offspring(species: list[Species], pop_size: int) -> list[int]:
    """Offspring per species proportional to summed adjusted fitness
    (fitness / species size), largest-remainder rounded to pop_size.
    An all-zero generation falls back to a uniform split."""
    scores = []
    for s in species:
        n = len(s.members)
        scores.append(sum(max(g.fitness, 0.0) for g in s.members) / n)
    total = sum(scores)
    if total <= 0.0:
        scores = [1.0] * len(species)
        total = float(len(species))
    raw = [sc / total * pop_size for sc in scores]
    counts = [int(r) for r in raw]
    remainder = pop_size - sum(counts)
    order = sorted(range(len(species)), key=lambda i: (counts[i] - raw[i],
                                                       species[i].id))
    for i in range(remainder):
        counts[order[i % len(order)]] += 1
    return counts


def speciate_and_reproduce(pop: Population, cfg: NeatConfig,
                           rng: random.Random) -> Population:
    """Produce the next generation.

    Within each species the top floor(survival_threshold * size) + 1
    genomes by fitness are eligible parents. Species stagnant for more
    than the stagnation limit are dropped unless they hold the
    population champion. The champion of every species with at least
    elite_min_size members is copied unchanged.
    """
    champion = pop.champion()
    species = sorted(pop.species, key=lambda s: s.id)

    for s in species:
        best = max(g.fitness for g in s.members)
        if best > s.best_fitness:
            s.best_fitness = best
            s.staleness = 0
        else:
            s.staleness += 1
    alive = [s for s in species
             if s.staleness <= cfg.stagnation_limit
             or any(g.id == champion.id for g in s.members)]
    if not alive:
        alive = [s for s in species if any(g.id == champion.id for g in s.members)]

    counts = _allocate_offspring(alive, cfg.population_size)
    pop.table.begin_generation()
    offspring: list[Genome] = []
    next_id = pop.next_genome_id
    for s, n_off in zip(alive, counts):
        if n_off == 0:
            continue
        ranked = _ranked(s.members)
        parents = ranked[:int(cfg.survival_threshold * len(ranked)) + 1]
        slots = n_off
        if len(s.members) >= cfg.elite_min_size:
            offspring.append(ranked[0].copy())  # champion survives unchanged
            slots -= 1
        for _ in range(slots):
            p1 = parents[rng.randrange(len(parents))]
            if cfg.gru_enabled or len(parents) == 1:
                child = p1.copy(new_id=next_id)
            else:
                p2 = parents[rng.randrange(len(parents))]
                child = crossover(p1, p2, rng, child_id=next_id)
            next_id += 1
            child.fitness = 0.0
            offspring.append(mutate_genome(child, rng, pop.table, cfg))

    # carry species forward with a fresh representative from this generation
    carried = []
    for s in alive:
        rep = s.members[rng.randrange(len(s.members))]
        carried.append(Species(id=s.id, representative=rep.copy(),
                               staleness=s.staleness,
                               best_fitness=s.best_fitness))
    new_species, next_sid = _speciate(offspring, carried, cfg,
                                      pop.next_species_id)
    return Population(genomes=offspring, species=new_species,
                      generation=pop.generation + 1, table=pop.table,
                      next_genome_id=next_id, next_species_id=next_sid)
