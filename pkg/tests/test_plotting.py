import pytest

pytest.importorskip("matplotlib")

from carpetlab.carpet import compute_carpet, export  # noqa: E402
from carpetlab.config import RunConfig  # noqa: E402
from carpetlab.plotting import render_difference, render_panels  # noqa: E402

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


@pytest.fixture(scope="module")
def grids():
    rc = RunConfig(nx=32, nt=16)
    return compute_carpet(rc), compute_carpet(rc.replace(q=1e-6))


def test_png_export(grids, tmp_path):
    path = export(grids[0], "png", tmp_path / "carpet.png")
    assert path.read_bytes()[:8] == PNG_MAGIC


def test_panels_and_difference(grids, tmp_path):
    a = render_panels(grids, tmp_path / "panels.png", titles=["q = 0", "q = 1e-6"])
    b = render_difference(grids[1], grids[0], tmp_path / "diff.png")
    assert a.read_bytes()[:8] == PNG_MAGIC
    assert b.read_bytes()[:8] == PNG_MAGIC
