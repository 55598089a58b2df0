import math

import numpy as np
import pytest

from carpetlab import BoxConfig, GaussianPacket, QuadratureError, project
from carpetlab.wavepacket import SpectralCoefficients, eigenstate
from carpetlab.wigner import (
    correspondence_pair,
    make_slice,
    mirrored_state,
    momentum_j,
    verify_correspondence,
    wigner_coeff,
    wigner_coeff_complex,
    wigner_position,
)


def two_gaussian_wigner(packet, x, p, hbar):
    """Closed-form Wigner function of ``phi(x) - phi(-x)`` on the whole line."""
    s, x0, k0 = packet.width, packet.center, packet.mean_k
    k = p / hbar
    own = np.exp(-((x - x0) ** 2) / (2 * s * s) - 2 * s * s * (k - k0) ** 2)
    mirror = np.exp(-((x + x0) ** 2) / (2 * s * s) - 2 * s * s * (k + k0) ** 2)
    cross = np.exp(-(x**2) / (2 * s * s) - 2 * s * s * k**2) * np.cos(2 * (k0 * x - x0 * k))
    return (own + mirror - 2 * cross) / (math.pi * hbar)


@pytest.fixture(scope="module")
def ws(ref_oracle):
    return make_slice(ref_oracle)


def test_slice_reports_decayed_tail(ws):
    assert ws.tail_bound < 1e-10
    assert ws.n_nodes == 1024


def test_slice_too_narrow_is_refused(ref_oracle):
    with pytest.raises(QuadratureError):
        make_slice(ref_oracle, half_width=6.0)


def test_raw_integral_is_real(ws, rng):
    mu = rng.uniform(-20, 20, 100)
    xi = rng.uniform(-1, 1, 100)
    raw = wigner_coeff_complex(ws, mu, xi)
    assert np.max(np.abs(raw.imag)) < 1e-9


def test_matches_two_gaussian_closed_form(ws, cfg, ref_packet):
    mu, xi = np.meshgrid(np.linspace(-15, 15, 64), np.linspace(-1, 1, 64))
    got = wigner_coeff(ws, mu, xi)
    want = 2 * math.pi * cfg.hbar * two_gaussian_wigner(ref_packet, cfg.length * xi, math.pi * mu, cfg.hbar)
    assert np.max(np.abs(got - want)) < 1e-8 * np.max(np.abs(want))
    # own terms at (+-k0 L / pi, +-x0 / L), cross term oscillating at mu = 0
    mu_fine = np.linspace(-15, 15, 3001)
    for x0 in (0.5, -0.5):
        row = wigner_coeff(ws, mu_fine, np.full_like(mu_fine, x0))
        assert mu_fine[np.argmax(row)] == pytest.approx(math.copysign(10 / math.pi, x0), abs=0.02)
        assert np.max(row) == pytest.approx(2.0, rel=1e-4)
    cross = wigner_coeff(ws, np.zeros(201), np.linspace(-0.1, 0.1, 201))
    assert np.max(np.abs(cross)) == pytest.approx(4.0, rel=1e-6)


def test_xi_marginal_is_twice_coefficient_square(ws):
    # int exp(-i pi rho xi) d xi = 2 delta(rho)
    xi = np.linspace(-3, 3, 6001)
    for mu in (0.0, 1.7, 3.2, -5.5):
        vals = wigner_coeff(ws, np.full_like(xi, mu), xi)
        marginal = np.trapezoid(vals, xi)
        assert marginal == pytest.approx(2 * abs(ws.psi(mu)) ** 2, abs=1e-6)


def test_inversion_symmetry(ws, rng):
    mu = rng.uniform(-15, 15, 50)
    xi = rng.uniform(-1, 1, 50)
    assert np.max(np.abs(wigner_coeff(ws, mu, xi) - wigner_coeff(ws, -mu, -xi))) < 1e-12


def test_halving_the_step(ref_oracle, rng):
    coarse = make_slice(ref_oracle, n_nodes=1024)
    fine = make_slice(ref_oracle, n_nodes=2047)
    mu = rng.uniform(-15, 15, 40)
    xi = rng.uniform(-1, 1, 40)
    assert np.max(np.abs(wigner_coeff(coarse, mu, xi) - wigner_coeff(fine, mu, xi))) < 1e-8


def test_conjugate_placement_regression(ws, cfg, ref_packet):
    """Moving the conjugate to mu - rho/2 gives Psi(mu, -xi): still real, but wrong."""
    mu = np.array([3.1, 3.1, -2.0, 0.4])
    xi = np.array([0.45, -0.3, 0.52, 0.2])
    rho, w = ws.nodes
    swapped = np.sum(
        w * ws.psi(mu[:, None] + rho / 2) * np.conj(ws.psi(mu[:, None] - rho / 2)) * np.exp(-1j * math.pi * xi[:, None] * rho),
        axis=-1,
    )
    assert np.max(np.abs(swapped.imag)) < 1e-9
    _, rhs = correspondence_pair(ws, ref_packet, cfg, mu, xi)
    assert np.max(np.abs(wigner_coeff(ws, mu, xi) - rhs)) < 1e-6
    assert np.max(np.abs(swapped.real - rhs)) > 1e-1


def test_position_space_conjugate_regression(cfg, ref_packet):
    x, p = 0.47, 12.0
    chi = mirrored_state(ref_packet)
    y = np.linspace(-4, 4, 40001)
    wrong = np.trapezoid(np.conj(chi(x + y / 2)) * chi(x - y / 2) * np.exp(-1j * p * y), y).real / (2 * math.pi)
    right = wigner_position(ref_packet, cfg, x, p)
    assert right == pytest.approx(float(two_gaussian_wigner(ref_packet, x, p, 1.0)), abs=1e-9)
    assert abs(wrong - right) > 1e-2


def test_position_space_parity(cfg, ref_packet, rng):
    x = rng.uniform(-1, 1, 50)
    p = rng.uniform(-60, 60, 50)
    a = wigner_position(ref_packet, cfg, x, p)
    b = wigner_position(ref_packet, cfg, -x, -p)
    assert np.max(np.abs(a - b)) < 1e-12


def test_position_space_normalization(cfg, ref_packet):
    x = np.linspace(-0.75, 0.75, 101)
    p = np.arange(-150.0, 151.0, 1.0)
    xx, pp = np.meshgrid(x, p, indexing="ij")
    total = np.trapezoid(np.trapezoid(wigner_position(ref_packet, cfg, xx, pp), p, axis=1), x)
    chi = mirrored_state(ref_packet)
    xs = np.linspace(-1, 1, 20001)
    assert total == pytest.approx(np.trapezoid(np.abs(chi(xs)) ** 2, xs), abs=1e-6)


def test_mirror_free_limit(cfg):
    # far from the origin the mirror image and cross term vanish
    packet = GaussianPacket(center=0.5, width=0.03, mean_k=10.0)
    assert wigner_position(packet, cfg, 0.5, 10.0) == pytest.approx(1 / math.pi, abs=1e-9)
    x, p = 0.52, 14.0
    single = math.exp(-((x - 0.5) ** 2) / (2 * 0.03**2) - 2 * 0.03**2 * (p - 10) ** 2) / math.pi
    assert wigner_position(packet, cfg, x, p) == pytest.approx(single, abs=1e-9)


def test_correspondence_reference_packet(ws, cfg, ref_packet):
    report = verify_correspondence(ws, ref_packet, cfg, samples=200, tol=1e-6)
    assert report.n_samples == 200
    assert report.passed, report.max_deviation


def test_correspondence_origin(ws, cfg, ref_packet):
    lhs, rhs = correspondence_pair(ws, ref_packet, cfg, 0.0, 0.0)
    assert lhs == pytest.approx(rhs, abs=1e-9)


def test_correspondence_with_doubled_hbar(ref_packet):
    cfg2 = BoxConfig(hbar=2.0)
    s = project(ref_packet, cfg2, m_max=64)
    report = verify_correspondence(make_slice(s), ref_packet, cfg2, samples=100, tol=1e-6, seed=3)
    assert report.passed, report.max_deviation


@pytest.mark.parametrize(
    "packet", [GaussianPacket(0.4, 0.04, 0.0), GaussianPacket(0.6, 0.04, -25.0), GaussianPacket(0.3, 0.02, 40.0)]
)
def test_correspondence_corpus(cfg, packet):
    s = project(packet, cfg, eps_trunc=1e-14)
    report = verify_correspondence(make_slice(s), packet, cfg, samples=60, tol=1e-6, seed=7)
    assert report.passed, report.max_deviation


def test_eigenstate_wigner_is_finite():
    s = eigenstate(BoxConfig(), 2)
    ws = make_slice(s)
    v = wigner_coeff(ws, np.array([2.0, -2.0, 0.0]), np.array([0.1, -0.1, 0.0]))
    assert np.all(np.isfinite(v))
    assert v[0] == pytest.approx(v[1], abs=1e-12)


def test_interpolated_coefficients_have_compact_support():
    s = SpectralCoefficients.from_array(np.array([0.6, 0.8j]))
    ws = make_slice(s, half_width=4.0)
    assert ws.psi(np.array([2.5]))[0] == 0


def test_momentum_of_family(cfg):
    assert momentum_j(cfg, 4) == pytest.approx(2 * math.pi)
    assert momentum_j(BoxConfig(hbar=2.0, length=2.0), 1) == pytest.approx(math.pi / 2)
