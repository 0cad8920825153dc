"""Sectioned key=value model configuration.

Example::

    [model]
    dim = 2
    lattice = 1 0; 0 1        # basis vectors k_1; k_2 (rationals such as 1/2 allowed)
    norm = euclidean          # or sup

    [conformal]
    c0 = 1.0
    modes = 1 0 0.3 0.0       # n_1 .. n_m a b, modes separated by ';'

    [cone]
    eps = 0.2

    [solver]
    seed = 0
    depth = 5
    grid = 2
    h = 1e-3
"""
from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .conformal import ConformalFactor, FourierMode, TorusModel
from .geometry import Lattice, MinkowskiSpace

DEFAULTS = {
    "model": {"dim": "2", "lattice": None, "norm": "euclidean"},
    "conformal": {"c0": "1.0", "modes": ""},
    "cone": {"eps": "0.2"},
    "solver": {"seed": "0", "depth": "5", "grid": "2", "h": "1e-3"},
}

KEYS_HELP = """config keys (all optional, defaults in brackets):
  [model]     dim [2], lattice [identity; basis vectors separated by ';'],
              norm [euclidean|sup]
  [conformal] c0 [1.0], modes ['n_1 .. n_m a b' entries separated by ';']
  [cone]      eps [0.2], must be > 0
  [solver]    seed [0], depth [5], grid [2], h [1e-3]"""


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


@dataclass
class ModelConfig:
    dim: int = 2
    lattice: list[list[str]] = field(default_factory=list)
    norm: str = "euclidean"
    c0: float = 1.0
    modes: list[tuple[list[int], float, float]] = field(default_factory=list)
    eps: float = 0.2
    seed: int = 0
    depth: int = 5
    grid: int = 2
    h: float = 1e-3
    defaults_applied: list[str] = field(default_factory=list)
    source: str = "<defaults>"

    def basis(self) -> np.ndarray:
        vecs = np.array([[float(Fraction(c)) for c in row] for row in self.lattice])
        return vecs.T

    def build_model(self) -> TorusModel:
        space = MinkowskiSpace(self.dim, self.norm)
        lattice = Lattice(self.basis(), space)
        modes = [FourierMode(tuple(n), a, b) for n, a, b in self.modes]
        return TorusModel(space, lattice, ConformalFactor(self.c0, modes, lattice))

    def as_dict(self) -> dict:
        d = asdict(self)
        d["modes"] = [{"freq": list(n), "a": a, "b": b} for n, a, b in self.modes]
        return d

    @property
    def digest(self) -> str:
        d = self.as_dict()
        d.pop("source")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


def _number(section: str, key: str, raw: str, kind):
    try:
        return kind(raw)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r} as {kind.__name__}") from None


def parse_config(text: str, source: str = "<string>") -> ModelConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    known = set(DEFAULTS)
    for sec in parser.sections():
        if sec not in known:
            raise ConfigError(f"{source}: unknown section [{sec}]")
        for key in parser[sec]:
            if key not in DEFAULTS[sec]:
                raise ConfigError(f"{source}: unknown key {key!r} in [{sec}]")

    cfg = ModelConfig(source=source)
    applied = []

    def get(sec, key):
        if parser.has_option(sec, key):
            return parser.get(sec, key).strip()
        applied.append(f"{sec}.{key}")
        return DEFAULTS[sec][key]

    cfg.dim = _number("model", "dim", get("model", "dim"), int)
    if cfg.dim < 2:
        raise ConfigError(f"[model] dim: must be >= 2, got {cfg.dim}")
    raw = get("model", "lattice")
    if raw is None:
        cfg.lattice = [["1" if i == j else "0" for j in range(cfg.dim)] for i in range(cfg.dim)]
    else:
        rows = [r.split() for r in raw.split(";") if r.strip()]
        if len(rows) != cfg.dim or any(len(r) != cfg.dim for r in rows):
            raise ConfigError(f"[model] lattice: need {cfg.dim} basis vectors of length {cfg.dim}")
        for r in rows:
            for c in r:
                _number("model", "lattice", c, Fraction)
        cfg.lattice = rows
    cfg.norm = get("model", "norm")
    if cfg.norm not in ("euclidean", "sup"):
        raise ConfigError(f"[model] norm: must be 'euclidean' or 'sup', got {cfg.norm!r}")

    cfg.c0 = _number("conformal", "c0", get("conformal", "c0"), float)
    modes = []
    for k, entry in enumerate(e for e in get("conformal", "modes").split(";") if e.strip()):
        parts = entry.split()
        if len(parts) != cfg.dim + 2:
            raise ConfigError(f"[conformal] modes: entry {k + 1} needs {cfg.dim} integers and "
                              f"two amplitudes, got {entry.strip()!r}")
        freq = [_number("conformal", "modes", p, int) for p in parts[:cfg.dim]]
        a, b = (_number("conformal", "modes", p, float) for p in parts[cfg.dim:])
        modes.append((freq, a, b))
    cfg.modes = modes

    cfg.eps = _number("cone", "eps", get("cone", "eps"), float)
    if not cfg.eps > 0:
        raise ConfigError(f"[cone] eps: margin must be > 0, got {cfg.eps}")
    cfg.seed = _number("solver", "seed", get("solver", "seed"), int)
    cfg.depth = _number("solver", "depth", get("solver", "depth"), int)
    if cfg.depth < 3:
        raise ConfigError(f"[solver] depth: must be >= 3, got {cfg.depth}")
    cfg.grid = _number("solver", "grid", get("solver", "grid"), int)
    if cfg.grid < 0:
        raise ConfigError(f"[solver] grid: must be >= 0, got {cfg.grid}")
    cfg.h = _number("solver", "h", get("solver", "h"), float)
    if not cfg.h > 0:
        raise ConfigError(f"[solver] h: step must be > 0, got {cfg.h}")
    cfg.defaults_applied = applied

    try:
        model = cfg.build_model()
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    inrad = float(model.space.dist_to_cone_boundary(model.space.time_axis))
    if cfg.eps >= inrad:
        raise ConfigError(f"[cone] eps: margin must be below {inrad:.6g} for a nonempty cap")
    return cfg


def load_config(path) -> ModelConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, str(path))
