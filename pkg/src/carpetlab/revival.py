"""Fractional-revival representation of the box wave function.

Near ``t = (p/r) T + dt`` the amplitude is a finite-weight superposition of
freely propagated copies of the initial packet and of its mirror image,
displaced by multiples of ``2 L / r``::

    psi(x, t) = sum_l G_l [phi(x - 2 L l / r, dt) - phi(-x + 2 L l / r, dt)]

with Gauss-sum weights ``G_l = (1/r) sum_{k<r} exp[-2 pi i (k**2 p / r - k l / r)]``.
The translates run along lines of constant time only; compare the
world-line sum, whose lines are vertical or tilted.
"""
import math
from dataclasses import dataclass

import numpy as np

from .errors import QuadratureError, TruncationError
from .wavepacket import GaussianPacket, _gauss_legendre

IMAGE_TOL = 1e-10
MAX_IMAGES = 64


@dataclass(frozen=True)
class FractionTime:
    """Time ``(numerator / denominator) T + offset`` with the fraction reduced.

    ``offset`` is in physical time units.
    """

    numerator: int
    denominator: int
    offset: float = 0.0

    def __post_init__(self):
        if self.denominator < 1:
            raise ValueError("fraction denominator must be positive")
        if self.numerator < 0:
            raise ValueError("fraction numerator must be non-negative")
        g = math.gcd(self.numerator, self.denominator)
        object.__setattr__(self, "numerator", self.numerator // g)
        object.__setattr__(self, "denominator", self.denominator // g)

    def scaled_time(self, cfg):
        return self.numerator / self.denominator + self.offset / cfg.revival_time

    def is_extrapolated(self, cfg):
        """True outside the tested window ``|dt| <= T / (20 r**2)``."""
        return abs(self.offset) > cfg.revival_time / (20.0 * self.denominator**2)


def gauss_sum(ft, l):
    """Weight ``G_l`` of the ``l``-th translate; periodic in ``l`` with period ``r``."""
    p, r = ft.numerator, ft.denominator
    k = np.arange(r)
    l = np.asarray(l)
    # exponents reduced mod r in integers before scaling
    e = np.mod(np.multiply.outer(np.ones_like(l), k * k * p) - np.multiply.outer(l, k), r)
    out = np.exp(-2j * math.pi * e / r).sum(axis=-1) / r
    return complex(out) if out.ndim == 0 else out


def gauss_table(ft):
    l = np.arange(ft.denominator)
    return l, gauss_sum(ft, l)


def free_propagate(packet, cfg, dt, n_nodes=None):
    """Packet evolved for time ``dt`` by the free-particle propagator.

    Gaussians use the closed form with complex width
    ``a = dx**2 + i hbar dt / (2 M)``.  Any other callable is integrated
    against ``sqrt(M / (2 pi i hbar dt)) exp(i M (x - x')**2 / (2 hbar dt))``
    on Gauss-Legendre nodes covering its support.

    Returns a vectorized callable ``x -> phi(x, dt)``.
    """
    if dt == 0:
        return packet
    M, hbar = cfg.mass, cfg.hbar
    if isinstance(packet, GaussianPacket):
        s2 = packet.width**2
        a = s2 + 1j * hbar * dt / (2 * M)
        v = hbar * packet.mean_k / M
        pref = (2 * math.pi * s2) ** -0.25 * np.sqrt(s2 / a)

        def evolved(x):
            x = np.asarray(x, dtype=float)
            return pref * np.exp(
                -((x - packet.center - v * dt) ** 2) / (4 * a)
                + 1j * packet.mean_k * x
                - 1j * hbar * packet.mean_k**2 * dt / (2 * M)
            )

        evolved.spread = math.sqrt(abs(a) ** 2 / s2)
        evolved.drift = v * dt
        return evolved
    return _propagate_quadrature(packet, cfg, dt, n_nodes)


def _propagate_quadrature(packet, cfg, dt, n_nodes=None, max_nodes=200_000):
    M, hbar = cfg.mass, cfg.hbar
    a, b = packet.support()
    kmax = packet.max_wavenumber()
    pref = np.sqrt(M / (2j * math.pi * hbar * dt))

    def nodes_for(x):
        span = max(abs(x.max() - a), abs(x.min() - b), b - a)
        # local wave number of the chirp plus the packet's own bandwidth
        freq = M * span / (hbar * abs(dt)) + kmax
        n = n_nodes or int(math.ceil(3.0 * freq * (b - a) / math.pi)) + 32
        if n > max_nodes:
            raise QuadratureError(
                f"free-propagator chirp needs {n} nodes (> {max_nodes}); dt is too small for quadrature"
            )
        return _gauss_legendre(a, b, n)

    def evolved(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        xs, ws = nodes_for(x)
        src = packet(xs) * ws
        out = np.empty(x.shape, dtype=complex)
        for chunk in np.array_split(np.arange(x.size), max(1, x.size // 128)):
            kern = np.exp(1j * M * (x[chunk, None] - xs[None, :]) ** 2 / (2 * hbar * dt))
            out[chunk] = pref * (kern @ src)
        return out

    return evolved


def image_count(packet, cfg, ft):
    """Smallest ``l_max`` for which all dropped translates are below ``1e-10`` on ``[0, L]``."""
    if not isinstance(packet, GaussianPacket):
        return MAX_IMAGES
    L = cfg.length
    s2 = packet.width**2
    spread = math.hypot(1.0, cfg.hbar * ft.offset / (2 * cfg.mass * s2)) * packet.width
    drift = abs(cfg.hbar * packet.mean_k * ft.offset / cfg.mass)
    # |phi| <= exp(-d**2 / (4 spread**2)) relative to its peak
    reach = 2 * spread * math.sqrt(math.log(1.0 / IMAGE_TOL))
    far = L + max(abs(packet.center), abs(L - packet.center)) + drift + reach
    return int(math.ceil(ft.denominator * far / (2 * L))) + 1


def psi_revival(packet, cfg, ft, x, l_max=None):
    """Amplitude at ``t = ft``'s time as a sum of displaced free copies (physical units).

    Only the quadratic dispersion is represented.

    Raises
    ------
    TruncationError
        If more than 64 translates on each side would be needed.
    """
    if cfg.rel_q != 0:
        raise ValueError("the revival representation needs q = 0")
    needed = image_count(packet, cfg, ft)
    if l_max is None:
        l_max = needed
    if l_max > MAX_IMAGES or l_max < needed and isinstance(packet, GaussianPacket):
        raise TruncationError(
            f"revival sum needs {needed} translates each side (allowed {min(l_max, MAX_IMAGES)})"
        )
    x = np.asarray(x, dtype=float)
    L, r = cfg.length, ft.denominator
    evolved = free_propagate(packet, cfg, ft.offset)
    l = np.arange(-l_max, l_max + 1)
    weights = gauss_sum(ft, l)
    shift = 2.0 * L * l / r
    xx = np.multiply.outer(x, np.ones(l.size))
    images = evolved((xx - shift).ravel()).reshape(xx.shape) - evolved((shift - xx).ravel()).reshape(xx.shape)
    out = images @ weights
    return complex(out) if out.ndim == 0 else out


def density_revival(packet, cfg, ft, u, l_max=None):
    """Scaled density ``L |psi_revival|**2`` at scaled positions ``u``."""
    u = np.asarray(u, dtype=float)
    return cfg.length * np.abs(psi_revival(packet, cfg, ft, u * cfg.length, l_max)) ** 2


def nearest_fraction(cfg, tau, r_max=8, packet=None):
    """Fraction time closest to scaled ``tau`` with denominator at most ``r_max``.

    With a Gaussian packet the candidate needing the fewest translates wins;
    otherwise the smallest offset.
    """
    best = None
    for r in range(1, r_max + 1):
        p = round(tau * r)
        if p < 0:
            continue
        ft = FractionTime(int(p), r, (tau - p / r) * cfg.revival_time)
        if packet is not None and isinstance(packet, GaussianPacket):
            key = (image_count(packet, cfg, ft), abs(ft.offset))
        else:
            key = (abs(ft.offset), r)
        if best is None or key < best[0]:
            best = (key, ft)
    return best[1]


def density_revival_grid(packet, cfg, u, tau, r_max=8):
    """``(nt, nx)`` densities, each row from its best fraction-time expansion.

    Returns the grid and a per-row flag marking rows outside the tested
    offset window.
    """
    u = np.asarray(u, dtype=float)
    rows, flags = [], []
    for t in np.asarray(tau, dtype=float):
        ft = nearest_fraction(cfg, float(t), r_max, packet)
        rows.append(density_revival(packet, cfg, ft, u))
        flags.append(ft.is_extrapolated(cfg))
    return np.array(rows), np.array(flags)
