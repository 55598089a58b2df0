"""Re-indexing and Poisson resummation of double sums over integer pairs.

For ``I = sum_{m,n} f_{m,n}`` three equivalent evaluations are provided:

* :func:`reindex_even_odd` splits the pairs by the parity of ``m + n``::

      I = sum_{r,s} f_{s+r, s-r} + sum_{r,s} f_{s+r+1, s-r}

* :func:`resum_I1` applies Poisson summation along the difference index::

      I = 1/2 sum_{l,j} (-1)^{jl} int d rho f[(j + rho)/2, (j - rho)/2] exp(i pi l rho)

* :func:`resum_I2` does the same along the sum index::

      I = 1/2 sum_{l,j} (-1)^{jl} int d sigma f[(sigma + j)/2, (sigma - j)/2] exp(i pi l sigma)

The continuous extension ``f[a, b]`` must agree with ``f_{m,n}`` on
integers.  Truncation is driven by a user supplied envelope dominating
``|f|``; sampled values are never used to decide where a sum may stop.
"""
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import QuadratureError, TruncationError


@dataclass(frozen=True)
class SummandSpec:
    """Summand ``f`` with its continuous extension and a dominating envelope.

    All three callables take broadcastable arrays ``(a, b)``.  ``center`` is
    a point near the bulk of the envelope and ``bandwidth`` an estimate of
    the oscillation frequency (cycles per unit index) of ``f`` itself.
    """

    discrete: Callable
    continuous: Callable
    envelope: Callable
    center: tuple = (0.0, 0.0)
    bandwidth: float = 1.0


@dataclass
class ResumResult:
    value: complex
    tail_estimate: float
    j_range: tuple
    l_bound: int
    n_nodes: int


def parity_sign(j, l):
    """``(-1)**(j l)``: ``1`` for even ``j``, ``(-1)**l`` for odd ``j``."""
    j = np.asarray(j)
    l = np.asarray(l)
    return np.where((j % 2 != 0) & (l % 2 != 0), -1, 1)


def exact_sum(values):
    """Order-independent complex sum with correctly rounded parts."""
    values = np.ravel(values)
    return complex(math.fsum(values.real), math.fsum(values.imag))


def envelope_radius(spec, tol=1e-14, max_radius=100_000):
    """Smallest integer half-width of a square around ``spec.center`` whose
    boundary envelope is below ``tol`` times the envelope at the centre."""
    ca, cb = spec.center
    peak = float(spec.envelope(np.asarray(ca), np.asarray(cb)))
    radius = 1
    while radius <= max_radius:
        t = np.arange(-radius, radius + 1, dtype=float)
        edge = np.concatenate([
            spec.envelope(ca + t, cb - radius), spec.envelope(ca + t, cb + radius),
            spec.envelope(ca - radius, cb + t), spec.envelope(ca + radius, cb + t),
        ])
        if np.max(edge) <= tol * peak:
            return radius
        radius = int(math.ceil(radius * 1.25)) if radius > 8 else radius + 1
    raise TruncationError(f"envelope does not decay within radius {max_radius}")


def _default_box(spec, tol):
    r = envelope_radius(spec, tol)
    ca, cb = spec.center
    return (math.floor(ca - r), math.ceil(ca + r)), (math.floor(cb - r), math.ceil(cb + r))


def sum_direct(spec, m_bounds=None, n_bounds=None, tail_tol=1e-14):
    """Plain double sum over ``m`` in ``m_bounds`` and ``n`` in ``n_bounds`` (inclusive).

    Raises :class:`TruncationError` if the envelope on the edge of the box
    exceeds ``tail_tol`` of its value at the centre.
    """
    if m_bounds is None or n_bounds is None:
        m_auto, n_auto = _default_box(spec, tail_tol)
        m_bounds = m_bounds or m_auto
        n_bounds = n_bounds or n_auto
    m = np.arange(m_bounds[0], m_bounds[1] + 1)
    n = np.arange(n_bounds[0], n_bounds[1] + 1)
    mm, nn = np.meshgrid(m, n, indexing="ij")
    peak = float(spec.envelope(np.asarray(spec.center[0]), np.asarray(spec.center[1])))
    edge = np.concatenate([spec.envelope(mm[[0, -1], :], nn[[0, -1], :]).ravel(),
                           spec.envelope(mm[:, [0, -1]], nn[:, [0, -1]]).ravel()])
    if peak > 0 and np.max(edge) > tail_tol * peak:
        raise TruncationError(
            f"summand envelope is {np.max(edge) / peak:.2e} of its peak on the truncation boundary"
        )
    return exact_sum(spec.discrete(mm, nn))


def reindex_parts(spec, m_bounds=None, n_bounds=None, tail_tol=1e-14):
    """The two re-indexed sums ``(sum f_{s+r, s-r}, sum f_{s+r+1, s-r})`` separately.

    The first collects the pairs with ``m + n`` even, the second those with
    ``m + n`` odd; both run over the same ``(m, n)`` box as :func:`sum_direct`.
    """
    if m_bounds is None or n_bounds is None:
        m_bounds, n_bounds = _default_box(spec, tail_tol)
    lo = min(m_bounds[0], n_bounds[0])
    hi = max(m_bounds[1], n_bounds[1])
    s = np.arange(lo - 1, hi + 1)
    r = np.arange(-(hi - lo) - 1, hi - lo + 2)
    ss, rr = np.meshgrid(s, r, indexing="ij")
    parts = []
    for shift in (0, 1):
        m, n = ss + rr + shift, ss - rr
        keep = (m >= m_bounds[0]) & (m <= m_bounds[1]) & (n >= n_bounds[0]) & (n <= n_bounds[1])
        parts.append(exact_sum(spec.discrete(m[keep], n[keep])))
    return tuple(parts)


def reindex_even_odd(spec, m_bounds=None, n_bounds=None, tail_tol=1e-14):
    """Evaluate the even/odd re-indexed form over the same ``(m, n)`` box as :func:`sum_direct`."""
    even, odd = reindex_parts(spec, m_bounds, n_bounds, tail_tol)
    return exact_sum(np.array([even, odd]))


def _line_extent(profile, tol, start=1.0, limit=1e6):
    """Half-width ``h`` such that ``profile(t)`` is below ``tol`` for ``|t| >= h``."""
    peak = float(np.max(profile(np.linspace(-start, start, 65))))
    h = start
    while h < limit:
        t = np.linspace(h, 2 * h, 65)
        if max(np.max(profile(t)), np.max(profile(-t))) <= tol * peak:
            return h
        h *= 1.5
    raise TruncationError("envelope does not decay along the integration line")


def trapezoid_rule(center, half_width, step):
    n = int(math.ceil(2 * half_width / step)) + 1
    t = np.linspace(center - half_width, center + half_width, n)
    w = np.full(n, t[1] - t[0])
    w[0] = w[-1] = w[0] / 2
    return t, w


def _resum(spec, l_bound, j_bound, step, tol, symmetric):
    ca, cb = spec.center
    # outer index j runs along m+n for I1 and along m-n for I2
    j_center = (ca - cb) if symmetric else (ca + cb)
    t_center = (ca + cb) if symmetric else (ca - cb)

    def args(j, t):
        return ((t + j) / 2, (t - j) / 2) if symmetric else ((j + t) / 2, (j - t) / 2)

    if j_bound is None:
        # a square of half-width r in (m, n) maps to |j - j_center| <= 2 r
        j_bound = 2 * envelope_radius(spec, tol)
    j = np.arange(int(math.floor(j_center - j_bound)), int(math.ceil(j_center + j_bound)) + 1)
    half = _line_extent(lambda d: np.max(spec.envelope(*args(j[:, None], t_center + d[None, :])), axis=0), tol)
    if step is None:
        step = 1.0 / (8.0 * (l_bound + spec.bandwidth))
    t, w = trapezoid_rule(t_center, half, step)
    if t.size > 2_000_000:
        raise QuadratureError(f"{t.size} quadrature nodes needed; lower l_bound or bandwidth")
    l = np.arange(-l_bound, l_bound + 1)
    fourier = np.exp(1j * math.pi * np.multiply.outer(t, l)) * w[:, None]
    terms = np.empty((j.size, l.size), dtype=complex)
    for i, jj in enumerate(j):
        terms[i] = spec.continuous(*args(float(jj), t)) @ fourier
    terms *= parity_sign(j[:, None], l[None, :])
    # envelope integral over the lines just outside the kept j-range
    t_env = np.linspace(t_center - half, t_center + half, 513)
    outside = np.concatenate([j[:1] - np.arange(1, 4), j[-1:] + np.arange(1, 4)])
    spill = np.sum(spec.envelope(*args(outside[:, None].astype(float), t_env[None, :]))) * (t_env[1] - t_env[0])
    value = 0.5 * exact_sum(terms)
    return ResumResult(value, float(0.5 * spill * l.size), (int(j[0]), int(j[-1])), int(l_bound), int(t.size))


def resum_I1(spec, l_bound=8, j_bound=None, step=None, tol=1e-16):
    """Poisson resummation along ``m - n`` with an asymmetric integration variable.

    Parameters
    ----------
    spec : SummandSpec
    l_bound : int
        Poisson orders ``|l| <= l_bound`` are kept.
    j_bound : float, optional
        Half-width of the ``j = m + n`` window; from the envelope by default.
    step : float, optional
        Trapezoid spacing in ``rho``; ``1 / (8 (l_bound + bandwidth))`` by default.
    tol : float
        Relative envelope level used to cut the ``j`` window and the
        integration range.

    Returns
    -------
    ResumResult
    """
    return _resum(spec, l_bound, j_bound, step, tol, symmetric=False)


def resum_I2(spec, l_bound=8, j_bound=None, step=None, tol=1e-16):
    """Poisson resummation along ``m + n``; ``j = m - n`` labels the lines."""
    return _resum(spec, l_bound, j_bound, step, tol, symmetric=True)


def poisson_sum(g_continuous, l_bound, center, half_width, step):
    """Right-hand side ``sum_l int g[mu] exp(2 pi i l mu) d mu`` of the 1-D Poisson formula."""
    mu, w = trapezoid_rule(center, half_width, step)
    l = np.arange(-l_bound, l_bound + 1)
    vals = g_continuous(mu) * w
    return exact_sum(np.exp(2j * math.pi * np.multiply.outer(l, mu)) @ vals)


def gaussian_summand(a0, b0, wa, wb, corr=0.0, freq=(0.0, 0.0), amplitude=1.0):
    """Correlated 2-D Gaussian ``f[a, b]`` with an optional linear phase.

    ``wa``, ``wb`` are standard deviations and ``corr`` the correlation
    coefficient in ``(-1, 1)``; the envelope is the modulus itself.
    """
    if not -1 < corr < 1:
        raise ValueError("correlation must lie strictly between -1 and 1")
    norm = 1.0 / (1.0 - corr * corr)

    def modulus(a, b):
        x = (np.asarray(a, dtype=float) - a0) / wa
        y = (np.asarray(b, dtype=float) - b0) / wb
        return amplitude * np.exp(-0.5 * norm * (x * x - 2 * corr * x * y + y * y))

    def f(a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        return modulus(a, b) * np.exp(2j * math.pi * (freq[0] * a + freq[1] * b))

    bw = abs(freq[0]) + abs(freq[1]) + 1.0 / min(wa, wb)
    return SummandSpec(discrete=f, continuous=f, envelope=modulus, center=(a0, b0), bandwidth=bw)


def box_density_summand(s, cfg, u, tau):
    """Summand of the scaled density ``W(u, tau) = sum_{m,n} f_{m,n}`` over all integer pairs.

    ``f_{m,n} = 1/2 conj(psi_m) psi_n exp(-i pi (m - n) u) exp(2 pi i (e_m - e_n) tau)``
    with ``e_m`` the scaled energy.  Requires Gaussian coefficients (for the
    analytic extension and envelope).
    """
    from .wavepacket import coefficient, coefficient_continuous

    if s.gaussian is None:
        raise ValueError("box_density_summand needs Gaussian coefficients")
    mu0, dm = s.gaussian[0], s.gaussian[1]
    q = cfg.rel_q
    su = s.gaussian[3]
    amp = math.sqrt(math.sqrt(8 * math.pi) * su / 2)  # max of the |psi[mu]| envelope

    def energy(mu):
        mu2 = mu * mu
        return mu2 * (1.0 - q * mu2 / 2.0)

    def phase(a, b):
        return np.exp(-1j * math.pi * (a - b) * u + 2j * math.pi * (energy(a) - energy(b)) * tau)

    def continuous(a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        return 0.5 * np.conj(coefficient_continuous(s, a)) * coefficient_continuous(s, b) * phase(a, b)

    def discrete(m, n):
        m = np.asarray(m)
        n = np.asarray(n)
        inside = (np.abs(m) <= s.m_max) & (np.abs(n) <= s.m_max)
        cm = np.where(inside, coefficient(s, np.clip(m, -s.m_max, s.m_max)), 0)
        cn = np.where(inside, coefficient(s, np.clip(n, -s.m_max, s.m_max)), 0)
        return 0.5 * np.conj(cm) * cn * phase(m.astype(float), n.astype(float))

    def env1(mu):
        return amp * (np.exp(-((mu - mu0) ** 2) / (4 * dm * dm)) + np.exp(-((mu + mu0) ** 2) / (4 * dm * dm)))

    def envelope(a, b):
        return 0.5 * env1(np.asarray(a, dtype=float)) * env1(np.asarray(b, dtype=float))

    return SummandSpec(discrete, continuous, envelope, center=(0.0, 0.0), bandwidth=2.0 + abs(s.gaussian[2]))
