"""Experiment configuration: flat key = value text files.

Unknown keys are errors so a typo cannot silently change an experiment.
Defaults mirror the two task setups; a written snapshot parses back to
an identical config.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .env import MazeParams
from .neat import NeatConfig


class ConfigError(ValueError):
    """Malformed config file; message carries file name and line number."""


@dataclass
class ExperimentConfig:
    task: str = "bearing"                 # bearing | nobearing
    gru_enabled: bool = True
    population_size: int = 150
    generations: int = 1000
    time_limit_s: float = 300.0
    mazes_per_generation: int = 10
    maze_side_m: float = 14.0
    maze_room_density: float = 0.5
    maze_loop_probability: float = 0.5
    test_every: int = 25
    test_maze_count: int = 209
    test_seed: int = 9001
    master_seed: int = 1
    survival_threshold: float = 0.55
    weight_mutate_prob: float = 0.8
    severe_prob: float = 0.1
    weight_power: float = 1.5
    gru_power: float = 1.5
    add_link_rate: float = 0.05
    add_node_rate: float = 0.005
    add_gru_rate: float = 0.003
    compat_threshold: float = 3.0
    stagnation_limit: int = 15

    def __post_init__(self):
        if self.task not in ("bearing", "nobearing"):
            raise ConfigError(f"unknown task {self.task!r}")
        for name in ("maze_room_density", "maze_loop_probability",
                     "survival_threshold", "weight_mutate_prob", "severe_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {v}")

    @classmethod
    def defaults(cls, task: str, gru_enabled: bool = True,
                 **overrides) -> "ExperimentConfig":
        base = dict(task=task, gru_enabled=gru_enabled)
        if task == "nobearing":
            base.update(generations=5000, time_limit_s=80.0,
                        survival_threshold=0.4, weight_power=0.5,
                        gru_power=0.5, add_node_rate=0.006,
                        add_gru_rate=0.006, test_maze_count=0)
        base.update(overrides)
        return cls(**base)

    def n_sensor_inputs(self) -> int:
        return 15 if self.task == "bearing" else 1

    def neat_config(self) -> NeatConfig:
        return NeatConfig(
            population_size=self.population_size,
            n_sensor_inputs=self.n_sensor_inputs(),
            n_outputs=2,
            gru_enabled=self.gru_enabled,
            weight_mutate_prob=self.weight_mutate_prob,
            severe_prob=self.severe_prob,
            weight_power=self.weight_power,
            gru_power=self.gru_power,
            add_link_rate=self.add_link_rate,
            add_node_rate=self.add_node_rate,
            add_gru_rate=self.add_gru_rate,
            survival_threshold=self.survival_threshold,
            compat_threshold=self.compat_threshold,
            stagnation_limit=self.stagnation_limit,
        )

    def maze_params(self) -> MazeParams:
        return MazeParams(side_m=self.maze_side_m,
                          room_density=self.maze_room_density,
                          loop_probability=self.maze_loop_probability)


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _parse_value(name: str, text: str, where: str):
    ftype = _FIELD_TYPES[name]
    if ftype == "bool":
        if text.lower() in ("true", "1", "yes"):
            return True
        if text.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"{where}: bad boolean {text!r} for {name}")
    try:
        if ftype == "int":
            return int(text)
        if ftype == "float":
            return float(text)
    except ValueError:
        raise ConfigError(f"{where}: bad number {text!r} for {name}")
    return text


def load_config(path) -> ExperimentConfig:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value, "
                                  f"got {line!r}")
            key, _, val = line.partition("=")
            key = key.strip()
            val = val.strip()
            if key not in _FIELD_TYPES:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            if key in values:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            values[key] = _parse_value(key, val, f"{path}:{lineno}")
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(f"{path}: {exc}")


def save_config(config: ExperimentConfig, path) -> None:
    lines = []
    for f in fields(ExperimentConfig):
        v = getattr(config, f.name)
        if isinstance(v, bool):
            v = "true" if v else "false"
        lines.append(f"{f.name} = {v}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
