"""Run configuration: a flat ``key = value`` file with dotted keys.

Grammar
-------
One assignment per line, ``key = value`` or ``key: value``.  Blank lines and
lines starting with ``#`` or ``;`` are ignored.  Keys are dotted
(``box.L``, ``packet.dx``, ``run.representation`` ...).  An INI section
header ``[box]`` may be used instead, in which case ``L = 1`` below it
means ``box.L``.  Unknown keys are an error.

Example::

    # reference packet, non-relativistic
    box.L = 1
    box.q = 0
    packet.x0 = 0.5
    packet.dx = 0.03
    packet.k0 = 10
    run.representation = worldline
    run.nx = 256
    run.nt = 256
    output.formats = pgm, csv, json

All lengths, times and wave numbers are physical (the box defines the
units only through ``box.L``, ``box.M``, ``box.hbar``).
"""
import configparser
import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .errors import ConfigError

REPRESENTATIONS = ("direct", "four_term", "worldline", "revival")
PACKET_KINDS = ("gaussian", "eigenstate", "csv")
FORMATS = ("pgm", "csv", "json", "png")


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to compute and export one carpet."""

    L: float = 1.0
    M: float = 1.0
    hbar: float = 1.0
    q: float = 0.0
    packet_kind: str = "gaussian"
    x0: float = 0.5
    dx: float = 0.03
    k0: float = 10.0
    mode: int = 1
    csv_path: Optional[str] = None
    representation: str = "direct"
    nx: int = 256
    nt: int = 256
    tau_min: float = 0.0
    tau_max: float = 1.0
    m_max: Optional[int] = None
    eps_trunc: float = 1e-12
    tol: float = 1e-5
    budget_tol: float = 1e-9
    r_max: int = 8
    workers: int = 1
    out_dir: str = "."
    prefix: str = "carpet"
    formats: tuple = ("pgm", "csv", "json")

    def __post_init__(self):
        validate(self)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def as_keys(self):
        """Flat ``{dotted key: value}`` echo, the inverse of :func:`parse_config`."""
        return {key: getattr(self, attr) for key, (attr, _) in KEYS.items()}


def _int(v):
    f = float(v)
    if not f.is_integer():
        raise ValueError(f"{v!r} is not an integer")
    return int(f)


def _optional_int(v):
    return None if str(v).strip().lower() in ("", "auto", "none") else _int(v)


def _optional_str(v):
    v = str(v).strip()
    return v or None


def _formats(v):
    if isinstance(v, (tuple, list)):
        return tuple(v)
    return tuple(f.strip().lower() for f in str(v).split(",") if f.strip())


KEYS = {
    "box.L": ("L", float),
    "box.M": ("M", float),
    "box.hbar": ("hbar", float),
    "box.q": ("q", float),
    "packet.kind": ("packet_kind", str),
    "packet.x0": ("x0", float),
    "packet.dx": ("dx", float),
    "packet.k0": ("k0", float),
    "packet.mode": ("mode", _int),
    "packet.csv": ("csv_path", _optional_str),
    "run.representation": ("representation", str),
    "run.nx": ("nx", _int),
    "run.nt": ("nt", _int),
    "run.tau_min": ("tau_min", float),
    "run.tau_max": ("tau_max", float),
    "run.m_max": ("m_max", _optional_int),
    "run.eps_trunc": ("eps_trunc", float),
    "run.tol": ("tol", float),
    "run.budget_tol": ("budget_tol", float),
    "run.r_max": ("r_max", _int),
    "run.workers": ("workers", _int),
    "output.dir": ("out_dir", str),
    "output.prefix": ("prefix", str),
    "output.formats": ("formats", _formats),
}


def _positive(name, v):
    if not (math.isfinite(v) and v > 0):
        raise ConfigError(f"{name} must be positive and finite, got {v!r}")


def validate(cfg):
    """Raise :class:`ConfigError` for any inconsistent setting."""
    for name in ("L", "M", "hbar", "dx", "eps_trunc", "tol", "budget_tol"):
        _positive(name, getattr(cfg, name))
    if not (math.isfinite(cfg.q) and 0 <= cfg.q < 1):
        raise ConfigError(f"box.q must lie in [0, 1), got {cfg.q!r}")
    if cfg.packet_kind not in PACKET_KINDS:
        raise ConfigError(f"packet.kind must be one of {PACKET_KINDS}, got {cfg.packet_kind!r}")
    if cfg.representation not in REPRESENTATIONS:
        raise ConfigError(f"run.representation must be one of {REPRESENTATIONS}, got {cfg.representation!r}")
    if cfg.packet_kind == "csv" and not cfg.csv_path:
        raise ConfigError("packet.kind = csv needs packet.csv")
    if cfg.packet_kind == "eigenstate" and cfg.mode < 1:
        raise ConfigError("packet.mode must be at least 1")
    if cfg.packet_kind == "gaussian" and not 0 < cfg.x0 < cfg.L:
        raise ConfigError("packet.x0 must lie inside the box")
    if cfg.nx < 2 or cfg.nt < 1:
        raise ConfigError("grid needs run.nx >= 2 and run.nt >= 1")
    if not (math.isfinite(cfg.tau_min) and math.isfinite(cfg.tau_max)) or cfg.tau_max < cfg.tau_min:
        raise ConfigError("need finite run.tau_min <= run.tau_max")
    if cfg.nt > 1 and cfg.tau_max == cfg.tau_min:
        raise ConfigError("run.tau_max must exceed run.tau_min when run.nt > 1")
    if cfg.m_max is not None and cfg.m_max < 1:
        raise ConfigError("run.m_max must be at least 1")
    if cfg.r_max < 1 or cfg.workers < 1:
        raise ConfigError("run.r_max and run.workers must be at least 1")
    bad = [f for f in cfg.formats if f not in FORMATS]
    if bad:
        raise ConfigError(f"unknown output formats {bad}; choose from {FORMATS}")
    if cfg.q != 0 and cfg.representation in ("four_term", "revival"):
        raise ConfigError(f"representation {cfg.representation!r} needs box.q = 0")
    if cfg.packet_kind == "csv" and cfg.representation == "worldline":
        raise ConfigError("the worldline truncation budget needs an analytic envelope; sampled packets have none")
    if cfg.packet_kind == "eigenstate" and cfg.representation == "revival":
        raise ConfigError("the revival representation needs a localized packet")


def parse_config(text, base=None):
    """Parse configuration text into a :class:`RunConfig` (over ``base`` defaults)."""
    parser = configparser.ConfigParser(
        interpolation=None, comment_prefixes=("#", ";"), inline_comment_prefixes=("#",), strict=True
    )
    parser.optionxform = str
    try:
        parser.read_string("[__top__]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}") from None
    changes = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            dotted = key if section == "__top__" else f"{section}.{key}"
            if dotted not in KEYS:
                raise ConfigError(f"unknown configuration key {dotted!r}")
            attr, conv = KEYS[dotted]
            try:
                changes[attr] = conv(raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {dotted}: {exc}") from None
    base = base or RunConfig()
    return base.replace(**changes)


def load_config(path):
    """Read a configuration file; relative ``packet.csv`` paths resolve against it."""
    path = Path(path)
    text = path.read_text()  # OSError propagates: an I/O failure, not a bad config
    cfg = parse_config(text)
    if cfg.csv_path and not Path(cfg.csv_path).is_absolute():
        cfg = cfg.replace(csv_path=str(path.parent / cfg.csv_path))
    return cfg


def override(cfg, **flags):
    """Apply command-line overrides; ``None`` means "keep"."""
    changes = {k: v for k, v in flags.items() if v is not None}
    if not changes:
        return cfg
    try:
        return cfg.replace(**changes)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
