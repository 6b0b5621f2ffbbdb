"""Experiment configuration read from INI-style ``key = value`` files.

Sections and keys (all optional, defaults shown)::

    [instance]
    n = 10              ; agents
    m = 100             ; constraints per agent
    d = 5               ; decision dimension
    radius = 0.2        ; interval half-width of every uncertain entry
    file =              ; load a saved instance instead of generating one
    box = 1e6           ; half-width of the bounding box

    [schedule]
    kind = static       ; static | periodic | ring
    degree = 3          ; in-degree of the random static digraph
    diameter =          ; resample the random digraph until it has this diameter
    edges =             ; explicit static edges "0>1 1>2 ..." (overrides degree)
    graphs =            ; periodic: edge lists separated by "|"
    L = 1               ; window length of joint strong connectivity
    activation = 1.0    ; probability that a node is awake at a tick

    [levels]
    epsilon = 0.1       ; network accuracy, split evenly over agents
    delta = 1e-8        ; network confidence, split evenly over agents

    [run]
    seed = 0
    mode = deferred     ; deferred | sync
    round_cap = 100000
    halt = auto         ; auto (2*diameter+1 static, 2nL+1 otherwise) or an integer
    stop = all          ; all | first
    n_val = 10000       ; Monte Carlo samples for a-posteriori validation
    coupling = joint    ; joint | shared

    [output]
    dir = .
"""
from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass
from pathlib import Path


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    n: int = 10
    m: int = 100
    d: int = 5
    radius: float = 0.2
    instance_file: str | None = None
    box: float = 1e6

    schedule_kind: str = "static"
    degree: int = 3
    target_diameter: int | None = None
    edges: str | None = None
    graphs: str | None = None
    L: int = 1
    activation: float = 1.0

    epsilon: float = 0.1
    delta: float = 1e-8

    seed: int = 0
    mode: str = "deferred"
    round_cap: int = 100_000
    halt: str = "auto"
    stop: str = "all"
    n_val: int = 10_000
    coupling: str = "joint"

    out_dir: str = "."

    @property
    def epsilon_i(self) -> float:
        return self.epsilon / self.n

    @property
    def delta_i(self) -> float:
        return self.delta / self.n

    def replace(self, **changes) -> "ExperimentConfig":
        cfg = dataclasses.replace(self, **{k: v for k, v in changes.items() if v is not None})
        cfg.check()
        return cfg

    def check(self) -> "ExperimentConfig":
        def bad(field, msg):
            raise ConfigError(f"{field}: {msg}")

        if self.n < 1:
            bad("instance.n", "must be >= 1")
        if self.d < 1 or self.m < self.d:
            bad("instance.m", f"need m >= d >= 1 (m={self.m}, d={self.d})")
        if self.radius < 0:
            bad("instance.radius", "must be >= 0")
        if self.box <= 0:
            bad("instance.box", "must be > 0")
        if self.schedule_kind not in ("static", "periodic", "ring"):
            bad("schedule.kind", f"unknown kind {self.schedule_kind!r}")
        if self.schedule_kind == "periodic" and not self.graphs:
            bad("schedule.graphs", "periodic schedules need explicit graphs")
        if self.L < 1:
            bad("schedule.L", "must be >= 1")
        if not 0 < self.activation <= 1:
            bad("schedule.activation", "must lie in (0, 1]")
        if not 0 < self.epsilon_i < 1:
            bad("levels.epsilon", "per-agent accuracy must lie in (0, 1)")
        if not 0 < self.delta_i <= 1:
            bad("levels.delta", "per-agent confidence must lie in (0, 1]")
        if self.mode not in ("deferred", "sync"):
            bad("run.mode", f"expected deferred or sync, got {self.mode!r}")
        if self.stop not in ("all", "first"):
            bad("run.stop", f"expected all or first, got {self.stop!r}")
        if self.coupling not in ("joint", "shared"):
            bad("run.coupling", f"expected joint or shared, got {self.coupling!r}")
        if self.round_cap < 1:
            bad("run.round_cap", "must be >= 1")
        if self.n_val < 1:
            bad("run.n_val", "must be >= 1")
        if self.halt != "auto":
            try:
                int(self.halt)
            except ValueError:
                bad("run.halt", f"expected 'auto' or an integer, got {self.halt!r}")
        return self


# (section, key) -> (attribute, parser)
_FIELDS = {
    ("instance", "n"): ("n", int),
    ("instance", "m"): ("m", int),
    ("instance", "d"): ("d", int),
    ("instance", "radius"): ("radius", float),
    ("instance", "file"): ("instance_file", str),
    ("instance", "box"): ("box", float),
    ("schedule", "kind"): ("schedule_kind", str),
    ("schedule", "degree"): ("degree", int),
    ("schedule", "diameter"): ("target_diameter", int),
    ("schedule", "edges"): ("edges", str),
    ("schedule", "graphs"): ("graphs", str),
    ("schedule", "l"): ("L", int),
    ("schedule", "activation"): ("activation", float),
    ("levels", "epsilon"): ("epsilon", float),
    ("levels", "delta"): ("delta", float),
    ("run", "seed"): ("seed", int),
    ("run", "mode"): ("mode", str),
    ("run", "round_cap"): ("round_cap", int),
    ("run", "halt"): ("halt", str),
    ("run", "stop"): ("stop", str),
    ("run", "n_val"): ("n_val", int),
    ("run", "coupling"): ("coupling", str),
    ("output", "dir"): ("out_dir", str),
}


def _int(text: str) -> int:
    value = float(text)
    if value != int(value):
        raise ValueError(text)
    return int(value)


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    cfg = ExperimentConfig()
    for section in parser.sections():
        for key, raw in parser.items(section):
            spot = (section.lower(), key.lower())
            if spot not in _FIELDS:
                raise ConfigError(f"{source}: unknown field [{section}] {key}")
            attr, conv = _FIELDS[spot]
            raw = raw.strip()
            if raw == "":
                continue
            try:
                value = _int(raw) if conv is int else conv(raw)
            except ValueError:
                raise ConfigError(f"{source}: [{section}] {key}: cannot parse {raw!r} as {conv.__name__}") from None
            setattr(cfg, attr, value)
    try:
        return cfg.check()
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return parse_config(text, str(path))


TABLE_ROWS = {
    1: dict(n=10, degree=3, target_diameter=4),
    2: dict(n=20, degree=4, target_diameter=4),
    3: dict(n=50, degree=6, target_diameter=4),
    4: dict(n=100, degree=7, target_diameter=4),
}


def table_row_config(row: int, **overrides) -> ExperimentConfig:
    """Preset for one row of the benchmark table (m=100, d=5, radius 0.2, eps 0.1, delta 1e-8)."""
    if row not in TABLE_ROWS:
        raise ConfigError(f"unknown table row {row}; choose from {sorted(TABLE_ROWS)}")
    base = ExperimentConfig(m=100, d=5, radius=0.2, epsilon=0.1, delta=1e-8, **TABLE_ROWS[row])
    return base.replace(**overrides)
