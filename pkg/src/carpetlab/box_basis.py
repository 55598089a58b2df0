"""Particle-in-a-box basis: wave numbers, energies, eigenfunctions, phases.

All representation modules work in scaled coordinates ``u = x / L`` and
``tau = t / T`` where ``T = 4 M L**2 / (hbar pi)`` is the revival time.
In those units the non-relativistic phase of mode ``m`` is
``exp(-2 pi i m**2 tau)`` and the slightly relativistic dispersion
``H_r = H_nr (1 - H_nr / (2 M c**2))`` only rescales the exponent to
``m**2 (1 - q m**2 / 2)`` with ``q = E_1 / (M c**2)``.

Mode indices are signed machine integers; ``m**4`` must not overflow,
which limits ``|m| <= 50_000`` for 64-bit integers.
"""
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import PerturbativityWarning

MAX_MODE = 50_000


@dataclass(frozen=True)
class BoxConfig:
    """Box length, particle mass, hbar and relativistic ratio ``q``.

    ``q`` is the ground-state energy divided by the rest energy; ``q = 0``
    is the non-relativistic box.
    """

    length: float = 1.0
    mass: float = 1.0
    hbar: float = 1.0
    rel_q: float = 0.0

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError(f"box length must be positive, got {self.length}")
        if not self.mass > 0:
            raise ValueError(f"mass must be positive, got {self.mass}")
        if not self.hbar > 0:
            raise ValueError(f"hbar must be positive, got {self.hbar}")
        if not self.rel_q >= 0:
            raise ValueError(f"rel_q must be non-negative, got {self.rel_q}")

    @property
    def revival_time(self):
        return 4.0 * self.mass * self.length**2 / (self.hbar * math.pi)

    @property
    def e1(self):
        """Non-relativistic ground-state energy ``hbar**2 pi**2 / (2 M L**2)``."""
        return (self.hbar * math.pi) ** 2 / (2.0 * self.mass * self.length**2)

    @property
    def omega1(self):
        return 2.0 * math.pi / self.revival_time

    @property
    def rest_energy(self):
        """``M c**2``; infinite for the non-relativistic box."""
        return math.inf if self.rel_q == 0 else self.e1 / self.rel_q

    @property
    def speed_of_light(self):
        return math.sqrt(self.rest_energy / self.mass)

    def to_scaled(self, x, t):
        return np.asarray(x) / self.length, np.asarray(t) / self.revival_time

    def from_scaled(self, u, tau):
        return np.asarray(u) * self.length, np.asarray(tau) * self.revival_time


@dataclass(frozen=True)
class ScaledPoint:
    u: float
    tau: float

    def __post_init__(self):
        if not 0.0 <= self.u <= 1.0:
            raise ValueError(f"scaled position must lie in [0, 1], got {self.u}")


def wave_number(cfg, m):
    k = np.asarray(m) * math.pi / cfg.length
    return float(k) if np.ndim(k) == 0 else k


def scaled_energy(cfg, m):
    """Energy of mode ``m`` in units of ``E_1``: ``m**2 (1 - q m**2 / 2)``."""
    m = np.asarray(m, dtype=np.int64)
    if np.any(np.abs(m) > MAX_MODE):
        raise OverflowError(f"|m| must not exceed {MAX_MODE}")
    m2 = (m * m).astype(float)
    if cfg.rel_q == 0:
        return m2
    if np.any(cfg.rel_q * m2 / 2.0 >= 1.0):
        warnings.warn(
            f"q m^2 / 2 >= 1 for q={cfg.rel_q}: the relativistic correction "
            "dominates and the energy decreases with m",
            PerturbativityWarning,
            stacklevel=2,
        )
    return m2 * (1.0 - cfg.rel_q * m2 / 2.0)


def energy(cfg, m):
    """Eigenenergy ``m**2 E_1 (1 - q m**2 / 2)`` in physical units.

    Emits :class:`PerturbativityWarning` when ``q m**2 / 2 >= 1``.
    """
    e = scaled_energy(cfg, m) * cfg.e1
    return float(e) if np.ndim(e) == 0 else e


def eigenfunction(cfg, m, x):
    """Box eigenfunction ``sqrt(2/L) sin(m pi x / L)`` for ``m >= 1``."""
    if np.any(np.asarray(m) <= 0):
        raise ValueError("energy eigenfunctions are indexed from m = 1")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(x > cfg.length):
        raise ValueError("x must lie inside the box [0, L]")
    val = math.sqrt(2.0 / cfg.length) * np.sin(np.asarray(m) * math.pi * x / cfg.length)
    return float(val) if np.ndim(val) == 0 else val


def phase_factor(cfg, m, tau):
    """Time factor ``exp(-i E_m t / hbar)`` at scaled time ``tau``.

    The exponent is reduced modulo one before multiplying by ``2 pi`` so
    that the non-relativistic phase is exactly periodic in ``tau``.
    """
    tau = np.asarray(tau, dtype=float)
    if cfg.rel_q == 0:
        # integer exponents: the period in tau is exactly one
        tau = np.mod(tau, 1.0)
    cycles = np.mod(scaled_energy(cfg, m) * tau, 1.0)
    val = np.exp(-2j * math.pi * cycles)
    return complex(val) if np.ndim(val) == 0 else val
