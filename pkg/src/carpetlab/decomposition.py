"""Direct eigenbasis evaluation of the amplitude and density, and the
split of the density into co-propagating (canal) and counter-propagating
(classical) double sums.

Every function here takes scaled ``u`` and ``tau`` (any broadcastable
shapes) and returns scaled quantities: the amplitude is ``sqrt(L) psi``
and the density ``L |psi|**2``, so that ``int_0^1 W du = 1``.
"""
import math
from dataclasses import dataclass

import numpy as np

from .box_basis import phase_factor


@dataclass(frozen=True)
class FourTerms:
    """Co-propagating (``qc``) and counter-propagating (``cl``) contributions."""

    i_qc_plus: np.ndarray
    i_qc_minus: np.ndarray
    i_cl_plus: np.ndarray
    i_cl_minus: np.ndarray

    def total(self):
        return (self.i_qc_plus + self.i_qc_minus + self.i_cl_plus + self.i_cl_minus).real


def _prepare(u, tau):
    u, tau = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(tau, dtype=float))
    return u, tau


def psi_direct(s, cfg, u, tau):
    """Scaled amplitude ``sum_m psi_m sqrt(2) sin(m pi u) exp(-i E_m t / hbar)``."""
    u, tau = _prepare(u, tau)
    m = s.modes
    basis = math.sqrt(2.0) * np.sin(np.multiply.outer(u, m) * math.pi)
    phases = phase_factor(cfg, m, tau[..., None])
    return np.sum(basis * phases * s.coeffs, axis=-1)


def psi_compact(s, cfg, u, tau):
    """Two-sided form ``(1 / (i sqrt 2)) sum_m psi_m exp(i pi m u) exp(-i E_m t / hbar)``."""
    u, tau = _prepare(u, tau)
    m, c = s.two_sided()
    waves = np.exp(1j * math.pi * np.multiply.outer(u, m))
    phases = phase_factor(cfg, m, tau[..., None])
    return np.sum(waves * phases * c, axis=-1) / (1j * math.sqrt(2.0))


def density_direct(s, cfg, u, tau):
    """Scaled probability density ``|psi_direct|**2``."""
    return np.abs(psi_direct(s, cfg, u, tau)) ** 2


def density_direct_grid(s, cfg, u, tau):
    """Density on the tensor grid ``tau x u`` as an ``(nt, nx)`` array."""
    u = np.asarray(u, dtype=float)
    tau = np.asarray(tau, dtype=float)
    basis = math.sqrt(2.0) * np.sin(np.multiply.outer(u, s.modes) * math.pi)
    evolved = phase_factor(cfg, s.modes, tau[:, None]) * s.coeffs
    return np.abs(evolved @ basis.T) ** 2


def four_terms(s, cfg, u, tau):
    """The four double sums over ``m, n = 1 .. m_max`` at each point.

    Only defined for the quadratic dispersion, where
    ``k_m**2 - k_n**2 = (k_m + k_n)(k_m - k_n)`` lets the time dependence be
    written as a shift of position along world lines.
    """
    if cfg.rel_q != 0:
        raise ValueError("the four-term split needs the non-relativistic dispersion (q = 0)")
    u, tau = _prepare(u, tau)
    m = s.modes
    mm, nn = np.meshgrid(m, m, indexing="ij")
    weight = np.conj(s.coeffs)[:, None] * s.coeffs[None, :]
    total, diff = mm + nn, mm - nn
    uu = u[..., None, None]
    tt = np.mod(tau, 1.0)[..., None, None]
    # exp{±i pi (m+n) [u ± 2 (m-n) tau]} and exp{±i pi (m-n) [u ± 2 (m+n) tau]}
    qc_p = np.exp(1j * math.pi * total * (uu + 2 * diff * tt))
    qc_m = np.exp(-1j * math.pi * total * (uu - 2 * diff * tt))
    cl_p = np.exp(1j * math.pi * diff * (uu + 2 * total * tt))
    cl_m = np.exp(-1j * math.pi * diff * (uu - 2 * total * tt))
    red = lambda arr: np.sum(weight * arr, axis=(-2, -1))  # noqa: E731
    return FourTerms(
        i_qc_plus=-0.5 * red(qc_p),
        i_qc_minus=-0.5 * red(qc_m),
        i_cl_plus=0.5 * red(cl_p),
        i_cl_minus=0.5 * red(cl_m),
    )


def density_four_term(s, cfg, u, tau):
    return four_terms(s, cfg, u, tau).total()


def density_four_term_grid(s, cfg, u, tau):
    u = np.asarray(u, dtype=float)
    return np.stack([density_four_term(s, cfg, u, t) for t in np.asarray(tau, dtype=float)])


def phase_lines(m, n):
    """World-line slopes ``(m - n, m + n)`` of the mode pair ``(m, n)``.

    Pairs with equal difference share the steep (canal) lines, pairs with
    equal sum share the flat (classical) ones.
    """
    return m - n, m + n


def degeneracy_classes(m_max, kind="difference"):
    """Group mode pairs ``1 <= m, n <= m_max`` by shared slope."""
    idx = 0 if kind == "difference" else 1
    classes = {}
    for m in range(1, m_max + 1):
        for n in range(1, m_max + 1):
            classes.setdefault(phase_lines(m, n)[idx], []).append((m, n))
    return classes
