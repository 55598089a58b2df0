import numpy as np
import pytest

from carpetlab import BoxConfig, GaussianPacket, project

REFERENCE = dict(center=0.5, width=0.03, mean_k=10.0)


@pytest.fixture(scope="session")
def cfg():
    return BoxConfig()


@pytest.fixture(scope="session")
def cfg_rel():
    return BoxConfig(rel_q=1e-6)


@pytest.fixture(scope="session")
def ref_packet():
    return GaussianPacket(**REFERENCE)


@pytest.fixture(scope="session")
def ref_coeffs(cfg, ref_packet):
    """Reference-packet coefficients at the automatically selected truncation."""
    return project(ref_packet, cfg)


@pytest.fixture(scope="session")
def ref_oracle(cfg, ref_packet):
    """Reference-packet coefficients at m_max = 64, accurate enough to serve as a pointwise oracle."""
    return project(ref_packet, cfg, m_max=64)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line per acceptance criterion; returns the recorder."""
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, [])

    def record(n, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
