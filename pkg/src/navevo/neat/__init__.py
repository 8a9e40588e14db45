"""NEAT with optional gated-recurrent-unit hidden nodes.

Genomes evolve structure and weights from minimal fully connected
networks. GRU nodes are inserted by the same split mutation as plain
hidden nodes and their nine gate parameters are perturbed alongside
link weights. Speciation by structural compatibility protects new
structure; reproduction is mutation-only when GRU mode is enabled.
"""

from .genome import (Genome, GenomeFormatError, GruParams, InnovationTable,
                     LinkGene, NodeGene, compatibility_distance, crossover,
                     load_genome, minimal_genome, mutate_add_gru_node,
                     mutate_add_link, mutate_add_node, mutate_weights,
                     save_genome, validate_genome)
from .network import Network, build_network
from .population import (NeatConfig, Population, Species, init_population,
                         speciate_and_reproduce)

__all__ = [
    "Genome", "GenomeFormatError", "GruParams", "InnovationTable", "LinkGene",
    "NodeGene", "compatibility_distance", "crossover", "load_genome",
    "minimal_genome", "mutate_add_gru_node", "mutate_add_link",
    "mutate_add_node", "mutate_weights", "save_genome", "validate_genome",
    "Network", "build_network",
    "NeatConfig", "Population", "Species", "init_population",
    "speciate_and_reproduce",
]
