"""Wigner functions of the expansion coefficients and of the mirrored state.

Two phase-space pictures of the same initial packet:

``coefficient space``
    ``Psi(mu, xi) = int d rho conj(psi[mu + rho/2]) psi[mu - rho/2] exp(-i pi rho xi)``
    built from the continuous extension ``psi[mu]`` of ``psi_m``.

``position space``
    ``Phi(x, p) = (1 / 2 pi hbar) int dy chi(x + y/2) conj(chi(x - y/2)) exp(-i p y / hbar)``
    for the odd superposition ``chi(x) = phi(x) - phi(-x)``.

They are related by ``Psi(mu, xi) = 2 pi hbar Phi(L xi, pi hbar mu / L)``.
Note where the complex conjugate sits: at ``mu + rho/2`` in the first, at
``x - y/2`` in the second.  Swapping either still gives a real function,
so both placements are pinned by regression tests.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import QuadratureError
from .wavepacket import coefficient_continuous

TAIL_TOL = 1e-10
IMAG_TOL = 1e-9


def _trapezoid_nodes(half_width, n_nodes):
    rho = np.linspace(-half_width, half_width, n_nodes)
    w = np.full(n_nodes, rho[1] - rho[0])
    w[0] = w[-1] = w[1] / 2
    return rho, w


@dataclass(frozen=True)
class WignerSlice:
    """Quadrature setup for ``Psi(mu, xi)`` of one set of coefficients."""

    source: object
    half_width: float
    n_nodes: int = 1024
    tail_bound: float = field(default=0.0, compare=False)

    @property
    def nodes(self):
        return _trapezoid_nodes(self.half_width, self.n_nodes)

    def psi(self, mu):
        """``psi[mu]``; zero outside ``|mu| <= m_max`` for interpolated coefficients."""
        s = self.source
        mu = np.asarray(mu, dtype=float)
        if s.continuous_form is not None:
            return coefficient_continuous(s, mu)
        inside = np.abs(mu) <= s.m_max
        out = np.zeros(mu.shape, dtype=complex)
        out[inside] = coefficient_continuous(s, mu[inside])
        return out

    def integrand(self, mu):
        """Weighted integrand ``w_k conj(psi[mu + rho_k/2]) psi[mu - rho_k/2]``.

        Shape ``mu.shape + (n_nodes,)``.
        """
        rho, w = self.nodes
        mu = np.asarray(mu, dtype=float)[..., None]
        return w * np.conj(self.psi(mu + rho / 2)) * self.psi(mu - rho / 2)


def spectral_extent(s, n_widths=12.0):
    """Half-width in ``mu`` beyond which ``psi[mu]`` is negligible."""
    env = s.bounds()
    if env is not None:
        return env.spectral_extent(n_widths)
    if s.continuous_form is None:
        return float(s.m_max)
    return min(s.mean_mode + n_widths * s.mode_width, 4.0 * s.m_max)


def make_slice(s, n_nodes=1024, n_widths=12.0, half_width=None):
    """Build a :class:`WignerSlice`, checking that the rho-integrand has decayed at the ends.

    Raises
    ------
    QuadratureError
        When ``|psi|`` beyond ``half_width / 2`` exceeds ``1e-10`` of its peak.
    """
    extent = spectral_extent(s, n_widths)
    R = 2.0 * extent if half_width is None else float(half_width)
    probe = WignerSlice(s, R, n_nodes)
    inner = np.linspace(-R / 2, R / 2, 2049)
    outer = np.linspace(R / 2, R / 2 + 4 * max(extent, 1.0), 257)
    peak = np.max(np.abs(probe.psi(inner)))
    tail = float(np.max(np.abs(probe.psi(outer))) / peak) if peak > 0 else 0.0
    if s.continuous_form is None:
        tail = 0.0 if R >= 2 * s.m_max else 1.0
    if tail > TAIL_TOL:
        raise QuadratureError(
            f"psi[mu] has not decayed at |mu| = {R / 2:g} (relative size {tail:.2e}); widen the slice"
        )
    return WignerSlice(s, R, n_nodes, tail_bound=tail)


def wigner_coeff_complex(ws, mu, xi):
    """Raw quadrature of ``Psi(mu, xi)`` including its (spurious) imaginary part."""
    rho, _ = ws.nodes
    mu, xi = np.broadcast_arrays(np.asarray(mu, dtype=float), np.asarray(xi, dtype=float))
    g = ws.integrand(mu)
    return np.sum(g * np.exp(-1j * math.pi * xi[..., None] * rho), axis=-1)


def wigner_coeff(ws, mu, xi):
    """Coefficient-space Wigner function ``Psi(mu, xi)`` (real).

    The imaginary residue of the quadrature must stay below ``1e-9``
    relative to ``max |psi|**2``; it is dropped from the result.
    """
    raw = wigner_coeff_complex(ws, mu, xi)
    scale = max(np.max(np.abs(ws.psi(np.linspace(-ws.half_width / 2, ws.half_width / 2, 513)))) ** 2, 1e-300)
    resid = float(np.max(np.abs(raw.imag), initial=0.0)) / scale
    if resid > IMAG_TOL:
        raise QuadratureError(f"Wigner quadrature left an imaginary residue of {resid:.2e}")
    out = raw.real
    return float(out) if out.ndim == 0 else out


def mirrored_state(packet):
    """Odd superposition ``x -> phi(x) - phi(-x)`` of a packet and its mirror image."""

    def chi(x):
        x = np.asarray(x, dtype=float)
        return packet(x) - packet(-x)

    return chi


def momentum_j(cfg, j):
    """Momentum ``j pi hbar / (2 L)`` attached to the ``j``-th world-line family."""
    return np.asarray(j) * math.pi * cfg.hbar / (2.0 * cfg.length)


def _position_grid(packet, x, p, hbar, n_nodes=None):
    a, b = packet.support()
    extent = max(abs(a), abs(b))
    span = 4.0 * extent + 2.0 * float(np.max(np.abs(x), initial=0.0))
    kmax = packet.max_wavenumber() * 2.0 + float(np.max(np.abs(p), initial=0.0)) / hbar
    if n_nodes is None:
        # 2 pi / h at least four times the highest frequency of the integrand
        h = 2 * math.pi / (4.0 * kmax)
        if hasattr(packet, "width"):
            h = min(h, packet.width / 4.0)
        n_nodes = int(math.ceil(span / h)) | 1
    return _trapezoid_nodes(span / 2, n_nodes)


def wigner_position(packet, cfg, x, p, n_nodes=None):
    """Phase-space Wigner function ``Phi(x, p)`` of ``phi(x) - phi(-x)``.

    ``x`` and ``p`` broadcast; the ``y``-integral uses the trapezoidal rule
    on a grid sized from the packet's support and bandwidth.
    """
    x, p = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(p, dtype=float))
    hbar = cfg.hbar
    y, w = _position_grid(packet, x, p, hbar, n_nodes)
    chi = mirrored_state(packet)
    out = np.empty(x.shape)
    flat_x, flat_p, flat_out = x.ravel(), p.ravel(), out.ravel()
    for chunk in np.array_split(np.arange(flat_x.size), max(1, flat_x.size // 64)):
        xi = flat_x[chunk, None]
        integrand = chi(xi + y / 2) * np.conj(chi(xi - y / 2)) * np.exp(-1j * flat_p[chunk, None] * y / hbar)
        flat_out[chunk] = (integrand @ w).real / (2 * math.pi * hbar)
    return float(out) if out.ndim == 0 else out


@dataclass
class CorrespondenceReport:
    max_deviation: float
    tol: float
    n_samples: int
    scale: float
    mu: np.ndarray = field(repr=False, default=None)
    xi: np.ndarray = field(repr=False, default=None)

    @property
    def passed(self):
        return self.max_deviation < self.tol


def correspondence_pair(ws, packet, cfg, mu, xi):
    """Both sides of ``Psi(mu, xi) = 2 pi hbar Phi(L xi, pi hbar mu / L)``."""
    lhs = wigner_coeff(ws, mu, xi)
    rhs = 2 * math.pi * cfg.hbar * wigner_position(
        packet, cfg, cfg.length * np.asarray(xi), math.pi * cfg.hbar * np.asarray(mu) / cfg.length
    )
    return lhs, rhs


def verify_correspondence(ws, packet, cfg, samples=200, tol=1e-6, seed=0, mu_range=None, xi_range=None):
    """Largest deviation between the two Wigner pictures at random ``(mu, xi)``.

    By default ``mu`` is drawn from the spectral support of the slice and
    ``xi`` from ``[-1, 1]`` (twice the box in scaled position).
    """
    rng = np.random.default_rng(seed)
    mu_hi = ws.half_width / 2 if mu_range is None else mu_range
    xi_hi = 1.0 if xi_range is None else xi_range
    mu = rng.uniform(-mu_hi, mu_hi, samples)
    xi = rng.uniform(-xi_hi, xi_hi, samples)
    lhs, rhs = correspondence_pair(ws, packet, cfg, mu, xi)
    dev = float(np.max(np.abs(np.atleast_1d(lhs) - np.atleast_1d(rhs))))
    return CorrespondenceReport(dev, tol, samples, float(np.max(np.abs(lhs))), mu, xi)


def density_phase_space(packet, cfg, u, tau, j_max, l_max, n_nodes=None):
    """Scaled density from slices of ``Phi`` along the world lines.

    ``W(u, tau) = (pi hbar / 2) sum_{j,l} (-1)^{jl} Phi(L chi_{j,l}, p_j)`` with
    ``chi_{j,l} = u - 2 j tau - l``; a slow cross-check for a handful of points.
    """
    from .resum import parity_sign

    u = float(u)
    tau = float(tau)
    j = np.arange(-j_max, j_max + 1)
    l = np.arange(-l_max, l_max + 1)
    jj, ll = np.meshgrid(j, l, indexing="ij")
    chi = u - 2 * jj * tau - ll
    phi_w = wigner_position(packet, cfg, cfg.length * chi, momentum_j(cfg, jj), n_nodes=n_nodes)
    return float(math.pi * cfg.hbar / 2 * np.sum(parity_sign(jj, ll) * phi_w))
