"""Density as a superposition of Wigner-function slices along world lines.

For the quadratic dispersion the scaled density is

    W(u, tau) = 1/4 sum_{j,l} (-1)^{jl} Psi(j/2, chi_{j,l}(u, tau)),
    chi_{j,l} = u - 2 j tau - l,

so every term is a fixed profile ``Psi(j/2, .)`` transported along the
straight line ``chi_{j,l} = 0`` of slope ``j``.  With the first
relativistic correction the same Poisson resummation gives

    W = 1/4 sum_{j,l} (-1)^{jl} int d rho conj(psi[(j+rho)/2]) psi[(j-rho)/2]
        exp{-i pi rho [u - 2 j tau (1 - q (j**2 + rho**2) / 4) - l]},

whose lines bend because the drift now depends on ``rho``.

Truncation of the formally infinite ``(j, l)`` sums is controlled by a
:class:`WorldlineBudget` whose tail estimate comes from analytic Gaussian
envelopes of ``psi[mu]``, never from sampled values.
"""
import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceededError
from .resum import parity_sign
from .wigner import make_slice

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class WorldlineBudget:
    """Retained line families ``j_window`` and position cut ``l_bound``.

    Terms with ``|chi_{j,l}| > l_bound`` are dropped; ``tail_estimate``
    bounds everything dropped (in scaled density units).
    """

    j_window: np.ndarray
    l_bound: float
    tail_estimate: float
    tol: float = DEFAULT_TOL
    n_nodes: int = 1024

    def __post_init__(self):
        j = np.sort(np.asarray(self.j_window))
        if not np.array_equal(j, np.sort(-j)):
            raise ValueError("j_window must be symmetric under j -> -j")

    @property
    def ok(self):
        return self.tail_estimate < self.tol


def _envelope(s):
    env = s.bounds()
    if env is None:
        raise ValueError("worldline truncation bounds need an analytic envelope (Gaussian packet or eigenstate)")
    return env


def coefficient_bound(s, mu):
    """Upper bound on ``|Psi(mu, xi)|`` valid for every ``xi``."""
    return _envelope(s).coefficient_bound(mu)


def position_bound(s, xi):
    """Upper bound on ``|Psi(mu, xi)|`` valid for every ``mu``."""
    return _envelope(s).position_bound(xi)


def make_budget(s, tol=DEFAULT_TOL, l_bound=None, j_max=None, n_nodes=1024):
    """Truncation budget for the ``(j, l)`` sums from the Gaussian envelope.

    The ``j`` window keeps every family whose envelope bound is not
    negligible; the smallest terms are dropped while their summed bound
    stays below ``tol / 2``.  ``l_bound`` defaults to the envelope's
    position scale plus enough widths for the dropped ``l`` tail to stay
    below ``tol / 4``.
    """
    env = _envelope(s)
    u0, su = env.position_scale()
    j_hi = int(math.ceil(2 * env.spectral_extent(40.0)))
    j_all = np.arange(-j_hi, j_hi + 1)
    bound_j = coefficient_bound(s, j_all / 2)
    k = np.arange(64)

    def l_tail(lb):
        # both sides of the kept |chi| <= lb band, per family
        c = 2 * position_bound(s, lb + k + 1e-12)
        return 0.25 * np.sum(np.minimum(bound_j[:, None], c[None, :]), axis=1)

    if l_bound is None:
        n_w = 4.0
        while np.sum(l_tail(u0 + n_w * su)) >= tol / 4 and n_w < 40:
            n_w += 0.25
        l_bound = u0 + n_w * su
    # at most this many l per j satisfy |chi| <= l_bound
    n_l = 2 * math.floor(l_bound) + 2
    per_j = 0.25 * n_l * bound_j
    if j_max is not None:
        keep = np.abs(j_all) <= j_max
    else:
        order = np.argsort(per_j, kind="stable")
        dropped = np.cumsum(per_j[order])
        keep = np.ones(j_all.size, dtype=bool)
        keep[order[dropped < tol / 2]] = False
        # keep the window symmetric
        keep = keep | keep[::-1]
    tail = float(np.sum(per_j[~keep]) + np.sum(l_tail(l_bound)[keep]))
    return WorldlineBudget(j_all[keep], float(l_bound), tail, tol, n_nodes)


class _Integrands:
    """Weighted rho-integrands ``w_k conj(psi[(j+rho)/2]) psi[(j-rho)/2]`` per family ``j``."""

    def __init__(self, s, budget):
        self.slice = make_slice(s, n_nodes=budget.n_nodes)
        self.rho, w = self.slice.nodes
        self.j = np.asarray(budget.j_window)
        mu = self.j / 2.0
        g = np.conj(self.slice.psi(mu[:, None] + self.rho / 2)) * self.slice.psi(mu[:, None] - self.rho / 2)
        self.g = g * w


def _assert_budget(budget):
    if not budget.ok:
        raise BudgetExceededError(
            f"worldline tail estimate {budget.tail_estimate:.2e} exceeds tolerance {budget.tol:.1e}"
        )


def _evaluate(s, cfg, budget, u, tau, integrands=None, j_subset=None):
    u, tau = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(tau, dtype=float))
    shape = u.shape
    u, tau = u.ravel(), tau.ravel()
    ints = integrands if integrands is not None else _Integrands(s, budget)
    rho = ints.rho
    q = cfg.rel_q
    lb = budget.l_bound
    r_eff = ints.slice.half_width
    out = np.zeros(u.size)
    rows = range(ints.j.size) if j_subset is None else [int(np.nonzero(ints.j == jj)[0][0]) for jj in j_subset]
    t_vals, inverse = np.unique(tau, return_inverse=True)
    for it, t in enumerate(t_vals):
        idx = np.nonzero(inverse == it)[0]
        uu = u[idx]
        plane = np.exp(-1j * math.pi * np.multiply.outer(uu, rho))
        acc = np.zeros(idx.size)
        for row in rows:
            j = int(ints.j[row])
            if q == 0:
                drift = 2.0 * j * t
                g = ints.g[row] * np.exp(1j * math.pi * rho * drift)
                margin = 0.0
            else:
                drift = 2.0 * j * t * (1.0 - q * j * j / 4.0)
                bend = -2.0 * j * t * q * rho * rho / 4.0
                g = ints.g[row] * np.exp(1j * math.pi * rho * (drift + bend))
                margin = 2.0 * abs(j * t) * q * (j * j + 3 * r_eff * r_eff) / 4.0
            l_lo = math.ceil(uu.min() - drift - lb - margin)
            l_hi = math.floor(uu.max() - drift + lb + margin)
            if l_hi < l_lo:
                continue
            ls = np.arange(l_lo, l_hi + 1)
            v = g[None, :] * np.exp(1j * math.pi * np.multiply.outer(ls, rho))
            vals = (v @ plane.T).real
            acc += parity_sign(j, ls) @ vals
        out[idx] = acc / 4.0
    return out.reshape(shape)


def chi(j, l, u, tau):
    """Line coordinate ``u - 2 j tau - l``; zero on the world line of family ``(j, l)``."""
    return np.asarray(u) - 2.0 * np.asarray(j) * np.asarray(tau) - np.asarray(l)


def density_worldline(s, cfg, u, tau, budget=None):
    """Scaled density from the ``(j, l)`` world-line sum (quadratic dispersion).

    Raises
    ------
    BudgetExceededError
        When the budget's tail estimate exceeds its tolerance.
    """
    if cfg.rel_q != 0:
        raise ValueError("density_worldline needs q = 0; use density_worldline_relativistic")
    budget = budget or make_budget(s)
    _assert_budget(budget)
    return _evaluate(s, cfg, budget, u, tau)


def density_worldline_relativistic(s, cfg, u, tau, budget=None):
    """Scaled density from the resummed double sum with energies ``m**2 (1 - q m**2 / 2)``.

    The rho-integral carries the cubic phase exactly; quadrature nodes are
    doubled relative to the straight-line case.
    """
    from .box_basis import scaled_energy

    budget = budget or make_budget(s, n_nodes=2048)
    _assert_budget(budget)
    # surfaces the perturbativity warning for the retained modes
    scaled_energy(cfg, np.arange(0, int(np.max(np.abs(budget.j_window))) + 1))
    return _evaluate(s, cfg, budget, u, tau)


def worldline_contribution(s, cfg, u, tau, j_values, budget=None):
    """Partial sum restricted to the families in ``j_values`` (no tail check)."""
    budget = budget or make_budget(s)
    missing = set(int(j) for j in j_values) - set(int(j) for j in budget.j_window)
    if missing:
        raise ValueError(f"families {sorted(missing)} are outside the budget window")
    return _evaluate(s, cfg, budget, u, tau, j_subset=list(j_values))


def density_worldline_grid(s, cfg, u, tau, budget=None):
    """``(nt, nx)`` grid of :func:`density_worldline` or its relativistic form."""
    uu, tt = np.meshgrid(np.asarray(u, dtype=float), np.asarray(tau, dtype=float))
    if cfg.rel_q == 0:
        return density_worldline(s, cfg, uu, tt, budget)
    return density_worldline_relativistic(s, cfg, uu, tt, budget)
