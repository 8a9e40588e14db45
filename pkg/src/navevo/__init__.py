"""Neuroevolution navigation workbench.

Evolves NEAT and NEAT-GRU wheel-speed controllers for a simulated
differential-drive robot in procedurally generated indoor mazes, and
benchmarks them against hand-designed bug-algorithm baselines (Com and
an intensity-guided bug) using success rate and trajectory-length per
shortest-path-length metrics.
"""

__version__ = "0.1.0"
