"""Initial wave packets and their expansion in box eigenstates.

Gaussian convention::

    phi(x) = (2 pi dx**2)**(-1/4) exp(-(x - x0)**2 / (4 dx**2)) exp(i k0 x)

so ``dx`` is the standard deviation of ``|phi|**2``.  The spectral width of
``|psi_m|**2`` is then ``L / (2 pi dx)`` modes, which is why the convention
matters when comparing carpets by eye.

Coefficients ``psi_m`` are stored for ``m = 1 .. m_max`` only.  The two-sided
sum uses ``psi_{-m} = -psi_m`` and ``psi_0 = 0``, applied by
:func:`coefficient` on access.
"""
import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import TruncationError, WallOverlapWarning

DEFAULT_EPS_TRUNC = 1e-8
MAX_AUTO_MODES = 512
NORM_TOL = 1e-8


@dataclass(frozen=True)
class GaussianPacket:
    """Gaussian packet with centre ``center``, width ``width`` and mean wave number ``mean_k``."""

    center: float
    width: float
    mean_k: float = 0.0

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError(f"packet width must be positive, got {self.width}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        s = self.width
        return (2 * math.pi * s * s) ** -0.25 * np.exp(
            -((x - self.center) ** 2) / (4 * s * s) + 1j * self.mean_k * x
        )

    def fourier(self, k):
        """Analytic ``int phi(x) exp(i k x) dx`` over the whole real line."""
        k = np.asarray(k, dtype=float)
        s = self.width
        kk = k + self.mean_k
        return (8 * math.pi * s * s) ** 0.25 * np.exp(1j * kk * self.center - (s * kk) ** 2)

    def wall_ratio(self, length):
        """Largest ``|phi|`` at the two walls relative to the peak."""
        d = min(self.center, length - self.center)
        return math.exp(-d * d / (4 * self.width**2))

    def support(self, n_widths=12.0):
        return self.center - n_widths * self.width, self.center + n_widths * self.width

    def max_wavenumber(self, n_widths=12.0):
        return abs(self.mean_k) + n_widths / (2 * self.width)

    def check_walls(self, length):
        if not 0 < self.center < length:
            raise ValueError(f"packet centre {self.center} lies outside the box (0, {length})")
        if self.wall_ratio(length) > 1e-6:
            warnings.warn(
                f"packet amplitude at the walls is {self.wall_ratio(length):.2e} of its peak; "
                "wall-extended formulas assume it is negligible",
                WallOverlapWarning,
                stacklevel=3,
            )


class SampledPacket:
    """Wave function given by samples on a uniform grid covering ``[0, L]``.

    Values between samples come from linear interpolation; integrals over
    the box use the trapezoidal rule on the sample grid itself, which is
    spectrally accurate for packets that vanish smoothly at the walls.
    """

    def __init__(self, x, values):
        x = np.asarray(x, dtype=float)
        values = np.asarray(values, dtype=complex)
        if x.ndim != 1 or x.shape != values.shape or x.size < 3:
            raise ValueError("sampled packet needs matching 1-D x and value arrays")
        h = np.diff(x)
        if np.any(h <= 0) or np.ptp(h) > 1e-9 * h.mean():
            raise ValueError("sampled packet grid must be uniform and increasing")
        self.x = x
        self.values = values
        self.dx = float(h.mean())

    @classmethod
    def from_csv(cls, path):
        """Read ``x, Re phi, Im phi`` rows; one optional header line is skipped."""
        rows = []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                try:
                    rows.append([float(v) for v in row[:3]])
                except ValueError:
                    if rows:
                        raise
                    continue  # header
        if not rows:
            raise ValueError(f"no samples found in {path}")
        data = np.array(rows)
        if data.shape[1] != 3:
            raise ValueError("sampled packet CSV needs three columns: x, re, im")
        return cls(data[:, 0], data[:, 1] + 1j * data[:, 2])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        re = np.interp(x, self.x, self.values.real, left=0.0, right=0.0)
        im = np.interp(x, self.x, self.values.imag, left=0.0, right=0.0)
        return re + 1j * im

    def weights(self):
        w = np.full(self.x.size, self.dx)
        w[0] = w[-1] = self.dx / 2
        return w

    def support(self, n_widths=None):
        return float(self.x[0]), float(self.x[-1])

    def max_wavenumber(self, n_widths=None):
        return math.pi / self.dx

    def check_walls(self, length):
        if self.x[0] > 1e-12 * length or abs(self.x[-1] - length) > 1e-9 * length:
            raise ValueError("sampled packet grid must span the box [0, L]")


@dataclass(frozen=True)
class SpectralCoefficients:
    """Truncated expansion coefficients ``psi_1 .. psi_mmax`` of an initial packet.

    ``continuous_form`` maps real ``mu`` to ``psi[mu]``; ``gaussian`` holds
    ``(mu0, dm, u0, su)`` for Gaussian sources, i.e. the spectral centre
    ``k0 L / pi``, spectral width ``L / (2 pi dx)``, and the scaled centre and
    width in position.
    """

    coeffs: np.ndarray
    residual: float = 0.0
    length: float = 1.0
    continuous_form: Optional[Callable] = field(default=None, compare=False)
    gaussian: Optional[tuple] = None
    source: Optional[object] = field(default=None, compare=False)
    envelope: Optional[object] = field(default=None, compare=False)

    def bounds(self):
        """Analytic envelope of ``psi[mu]`` used for truncation bounds, or ``None``."""
        if self.envelope is not None:
            return self.envelope
        if self.gaussian is not None:
            return GaussianEnvelope(*self.gaussian)
        return None

    @classmethod
    def from_array(cls, coeffs, length=1.0):
        coeffs = np.asarray(coeffs, dtype=complex)
        return cls(coeffs=coeffs, residual=float(1.0 - np.sum(np.abs(coeffs) ** 2)), length=length)

    @property
    def m_max(self):
        return int(self.coeffs.size)

    @property
    def modes(self):
        return np.arange(1, self.m_max + 1)

    def two_sided(self):
        """Modes ``-m_max .. m_max`` and their odd-extended coefficients."""
        m = np.arange(-self.m_max, self.m_max + 1)
        return m, coefficient(self, m)

    @property
    def mean_mode(self):
        p = np.abs(self.coeffs) ** 2
        return float(np.sum(self.modes * p) / np.sum(p))

    @property
    def mode_width(self):
        p = np.abs(self.coeffs) ** 2
        mbar = self.mean_mode
        return float(np.sqrt(np.sum((self.modes - mbar) ** 2 * p) / np.sum(p)))


def _gaussian_coefficients(packet, length, mu):
    k = np.asarray(mu, dtype=float) * math.pi / length
    return math.sqrt(2.0 / length) / 2j * (packet.fourier(k) - packet.fourier(-k))


def _check_norm(norm):
    if abs(norm - 1.0) > NORM_TOL:
        raise ValueError(f"initial packet is not normalized: int |phi|^2 dx = {norm!r}")


def _gauss_legendre(a, b, n, order=32):
    """About ``n`` Gauss-Legendre nodes on ``[a, b]``, as panels of fixed ``order``.

    Panels keep node generation linear in ``n``; a single high-order rule
    costs an ``n x n`` eigenproblem.
    """
    if n <= order:
        t, w = np.polynomial.legendre.leggauss(n)
        return 0.5 * (b - a) * t + 0.5 * (b + a), 0.5 * (b - a) * w
    t, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, -(-n // order) + 1)
    half = 0.5 * np.diff(edges)[:, None]
    mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
    return (mid + half * t).ravel(), (half * w).ravel()


def _sine_transform(nodes, weights, values, length):
    """Closure ``mu -> sqrt(2/L) sum_k w_k phi(x_k) sin(mu pi x_k / L)``."""
    wv = weights * values
    scale = math.sqrt(2.0 / length)

    def psi(mu):
        mu = np.asarray(mu, dtype=float)
        out = scale * (np.sin(np.multiply.outer(mu, nodes) * (math.pi / length)) @ wv)
        return out

    return psi


def _select_mmax(coeffs, eps, m_max):
    tail = 1.0 - np.cumsum(np.abs(coeffs) ** 2)
    if m_max is None:
        ok = np.nonzero(tail < eps)[0]
        if ok.size == 0:
            raise TruncationError(
                f"truncation residual {tail[-1]:.3e} exceeds {eps:.1e} even at m_max={coeffs.size}"
            )
        m_max = int(ok[0]) + 1
    residual = float(tail[m_max - 1])
    if residual > eps:
        raise TruncationError(
            f"truncation residual {residual:.3e} exceeds {eps:.1e} at m_max={m_max}; raise m_max"
        )
    return m_max, residual


def project(packet, cfg, m_max=None, eps_trunc=DEFAULT_EPS_TRUNC, method="auto"):
    """Expansion coefficients ``psi_m = int_0^L phi(x) u_m(x) dx``.

    Parameters
    ----------
    packet : GaussianPacket, SampledPacket or callable
        Initial wave function in physical units.
    cfg : BoxConfig
    m_max : int, optional
        Number of retained modes.  By default the smallest count whose
        truncation residual ``1 - sum |psi_m|**2`` is below ``eps_trunc``
        (at most 512).
    eps_trunc : float
        Allowed truncation residual.
    method : {"auto", "quadrature"}
        ``"auto"`` uses the closed form for Gaussians; ``"quadrature"``
        forces Gauss-Legendre on ``[0, L]`` with ``8 m_max`` nodes.

    Raises
    ------
    TruncationError
        If the residual at ``m_max`` exceeds ``eps_trunc``.
    """
    if m_max is not None and m_max < 1:
        raise ValueError("m_max must be at least 1")
    L = cfg.length
    n_modes = MAX_AUTO_MODES if m_max is None else m_max
    modes = np.arange(1, n_modes + 1)
    gaussian = None
    if hasattr(packet, "check_walls"):
        packet.check_walls(L)

    if isinstance(packet, GaussianPacket) and method == "auto":
        coeffs = _gaussian_coefficients(packet, L, modes)

        def continuous(mu, _p=packet):
            return _gaussian_coefficients(_p, L, mu)

        gaussian = (
            packet.mean_k * L / math.pi,
            L / (2 * math.pi * packet.width),
            packet.center / L,
            packet.width / L,
        )
    else:
        if isinstance(packet, SampledPacket):
            nodes, weights, values = packet.x, packet.weights(), packet.values
        else:
            nodes, weights = _gauss_legendre(0.0, L, max(8 * n_modes, 64))
            values = np.asarray(packet(nodes), dtype=complex)
        _check_norm(float(np.sum(weights * np.abs(values) ** 2)))
        continuous = _sine_transform(nodes, weights, values, L)
        coeffs = continuous(modes)

    m_max, residual = _select_mmax(coeffs, eps_trunc, m_max)
    return SpectralCoefficients(
        coeffs=np.asarray(coeffs[:m_max], dtype=complex),
        residual=residual,
        length=L,
        continuous_form=continuous,
        gaussian=gaussian,
        source=packet,
    )


@dataclass(frozen=True)
class GaussianEnvelope:
    """Bounds on ``|Psi(mu, xi)|`` for the coefficients of a Gaussian packet.

    ``mu0, dm`` are the spectral centre and width, ``u0, su`` the scaled
    position centre and width.
    """

    mu0: float
    dm: float
    u0: float
    su: float

    def coefficient_bound(self, mu):
        """Bound valid for every ``xi``."""
        c2 = math.sqrt(8 * math.pi) * self.su / 2
        mu = np.asarray(mu, dtype=float)
        g = lambda d: np.exp(-(d**2) / (2 * self.dm**2))  # noqa: E731
        return c2 * math.sqrt(8 * math.pi) * self.dm * (g(mu - self.mu0) + 2 * g(mu) + g(mu + self.mu0))

    def position_bound(self, xi):
        """Bound valid for every ``mu``."""
        xi = np.asarray(xi, dtype=float)
        g = lambda d: np.exp(-(d**2) / (2 * self.su**2))  # noqa: E731
        return 2.0 * (g(xi - self.u0) + 2 * g(xi) + g(xi + self.u0))

    def spectral_extent(self, n_widths=12.0):
        return abs(self.mu0) + n_widths * self.dm

    def position_scale(self):
        """Start and step of the ``l_bound`` search."""
        return abs(self.u0), self.su


@dataclass(frozen=True)
class EigenstateEnvelope:
    """Bounds for the extension ``psi[mu] = g(mu - m) - g(mu + m)``, ``g(d) = sinc(d) exp(-d**2 / (2 w**2))``.

    ``|sinc| <= 1`` gives the bound in ``mu``; the compact Fourier support of
    ``sinc`` confines ``Psi`` to ``|xi| <= 1`` up to a Gaussian tail of
    width ``1 / (pi w sqrt 2)``.
    """

    mode: int
    window: float

    def coefficient_bound(self, mu):
        mu = np.asarray(mu, dtype=float)
        w, m = self.window, self.mode
        e = lambda d: np.exp(-(d**2) / w**2)  # noqa: E731
        return 2 * math.sqrt(math.pi) * w * (e(mu - m) + 2 * e(mu) + e(mu + m))

    def position_bound(self, xi):
        excess = np.maximum(np.abs(np.asarray(xi, dtype=float)) - 1.0, 0.0)
        w = self.window
        return 8 * math.sqrt(math.pi) * w * np.exp(-((math.pi * w * excess) ** 2))

    def spectral_extent(self, n_widths=12.0):
        return self.mode + n_widths * self.window

    def position_scale(self):
        return 1.0, 1.0 / (math.pi * self.window * math.sqrt(2.0))


def eigenstate(cfg, m, window=2.0, m_max=None):
    """Coefficients of the single eigenstate ``u_m``.

    The continuous extension ``psi[mu]`` is a Gaussian-windowed ``sinc``
    pair, which equals ``delta_{mu, m}`` at positive integers and decays
    fast enough in both Wigner arguments for the world-line sum.
    """
    if m < 1:
        raise ValueError("eigenstates are indexed from 1")
    n = max(m, m_max or 0)
    c = np.zeros(n, dtype=complex)
    c[m - 1] = 1.0
    w = float(window)

    def continuous(mu):
        mu = np.asarray(mu, dtype=float)
        g = lambda d: np.sinc(d) * np.exp(-(d**2) / (2 * w * w))  # noqa: E731
        return (g(mu - m) - g(mu + m)).astype(complex)

    return SpectralCoefficients(
        coeffs=c, residual=0.0, length=cfg.length, continuous_form=continuous, envelope=EigenstateEnvelope(m, w)
    )


def coefficient(s, m):
    """``psi_m`` with the odd extension ``psi_{-m} = -psi_m``, ``psi_0 = 0``."""
    m = np.asarray(m)
    if np.any(np.abs(m) > s.m_max):
        raise IndexError(f"mode index beyond m_max={s.m_max}")
    mi = m.astype(np.int64)
    padded = np.concatenate(([0j], s.coeffs))
    out = np.sign(mi) * padded[np.abs(mi)]
    return complex(out) if out.ndim == 0 else out


def coefficient_continuous(s, mu):
    """Continuous extension ``psi[mu]``, odd in ``mu`` and equal to ``psi_m`` at integers.

    Uses the packet's own sine transform when available, otherwise
    band-limited (sinc) interpolation of the odd-extended coefficients,
    which is only defined for ``|mu| <= m_max``.
    """
    mu = np.asarray(mu, dtype=float)
    if s.continuous_form is not None:
        out = s.continuous_form(mu)
    else:
        if np.any(np.abs(mu) > s.m_max):
            raise ValueError("interpolated psi[mu] is limited to |mu| <= m_max")
        m, c = s.two_sided()
        out = np.sinc(np.subtract.outer(mu, m)) @ c
    return complex(out) if np.ndim(out) == 0 else out


@dataclass
class FactorizationReport:
    status: str
    residual: float
    tol: float
    plus: Optional[np.ndarray] = None
    minus: Optional[np.ndarray] = None

    @property
    def passed(self):
        return self.status == "pass"


def check_factorization(s, tol=1e-10, modes=None):
    """Probe ``conj(psi_m) psi_n = A_{m+n} B_{m-n}`` on a range of modes.

    The log of ``conj(psi_m) psi_n`` is fitted by least squares as a sum of
    a function of ``m + n`` and a function of ``m - n``; the reported
    residual is the largest deviation of the reconstructed products,
    relative to ``max |psi_m|**2``.
    """
    modes = s.modes if modes is None else np.asarray(modes)
    c = coefficient(s, modes)
    amp = np.abs(c)
    if np.any(amp == 0) or amp.size == 0:
        return FactorizationReport("indeterminate", math.nan, tol)
    n = modes.size
    if n == 1:
        return FactorizationReport("pass", 0.0, tol, plus=np.array([amp[0] ** 2]), minus=np.ones(1))
    log_c = np.log(amp) + 1j * np.unwrap(np.angle(c))
    mm, nn = np.meshgrid(modes, modes, indexing="ij")
    target = (np.conj(log_c)[:, None] + log_c[None, :]).ravel()
    sums = (mm + nn).ravel()
    diffs = (mm - nn).ravel()
    s_vals, s_idx = np.unique(sums, return_inverse=True)
    r_vals, r_idx = np.unique(diffs, return_inverse=True)
    design = np.zeros((target.size, s_vals.size + r_vals.size))
    rows = np.arange(target.size)
    design[rows, s_idx] = 1.0
    design[rows, s_vals.size + r_idx] = 1.0
    re = np.linalg.lstsq(design, target.real, rcond=None)[0]
    im = np.linalg.lstsq(design, target.imag, rcond=None)[0]
    coef = re + 1j * im
    plus, minus = np.exp(coef[: s_vals.size]), np.exp(coef[s_vals.size:])
    products = (np.conj(c)[:, None] * c[None, :]).ravel()
    fitted = plus[s_idx] * minus[r_idx]
    residual = float(np.max(np.abs(products - fitted)) / np.max(amp) ** 2)
    return FactorizationReport("pass" if residual < tol else "fail", residual, tol, plus, minus)
