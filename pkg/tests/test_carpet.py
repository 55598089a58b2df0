import json

import numpy as np
import pytest

import carpetlab.carpet as carpet_mod
from carpetlab import ConfigError, TruncationError, __version__
from carpetlab.carpet import (
    CarpetGrid,
    canal_shift,
    compare,
    compute_carpet,
    cross_check,
    csv_text,
    export,
    export_all,
    meta,
    periodicity_violation,
    pgm_bytes,
    read_pgm,
    row_minima,
    subcell_minimum,
)
from carpetlab.config import RunConfig, load_config, override, parse_config


@pytest.fixture(scope="module")
def small():
    return RunConfig(nx=48, nt=12)


@pytest.fixture(scope="module")
def direct_small(small):
    return compute_carpet(small)


# ------------------------------------------------------------------ config


def test_dotted_and_sectioned_configs_agree():
    dotted = """
    # reference packet, non-relativistic
    box.L = 1
    box.q = 0
    packet.x0 = 0.5
    packet.dx = 0.03
    packet.k0 = 10
    run.representation = worldline   # inline comment
    run.nx = 64
    output.formats = pgm, csv
    """
    sectioned = """
    [box]
    L = 1
    q: 0
    [packet]
    x0 = 0.5
    dx = 0.03
    k0 = 10
    [run]
    representation = worldline
    nx = 64
    [output]
    formats = pgm,csv
    """
    a = parse_config("\n".join(line.strip() for line in dotted.splitlines()))
    b = parse_config("\n".join(line.strip() for line in sectioned.splitlines()))
    assert a == b
    assert a.representation == "worldline" and a.nx == 64 and a.formats == ("pgm", "csv")


def test_key_echo_round_trips():
    rc = RunConfig(q=1e-6, representation="worldline", nx=32, m_max=50, formats=("pgm",))
    text = "\n".join(f"{k} = {','.join(v) if isinstance(v, tuple) else ('auto' if v is None else v)}"
                     for k, v in rc.as_keys().items() if k != "packet.csv")
    assert parse_config(text) == rc


@pytest.mark.parametrize(
    "text",
    [
        "box.width = 2",
        "[box]\nwidth = 2",
        "run.nx = 12.5",
        "run.nx = many",
        "box.q = 1.5",
        "box.L = -1",
        "run.representation = fourier",
        "packet.kind = csv",
        "packet.kind = csv\npacket.csv = x.csv\nrun.representation = worldline",
        "packet.kind = eigenstate\nrun.representation = revival",
        "box.q = 1e-6\nrun.representation = four_term",
        "box.q = 1e-6\nrun.representation = revival",
        "output.formats = pgm, tiff",
        "run.tau_min = 1\nrun.tau_max = 0",
        "packet.x0 = 1.5",
        "this is not an assignment",
    ],
)
def test_invalid_configs_rejected(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_load_config_resolves_relative_csv(tmp_path):
    (tmp_path / "run.cfg").write_text("packet.kind = csv\npacket.csv = packet.csv\n")
    rc = load_config(tmp_path / "run.cfg")
    assert rc.csv_path == str(tmp_path / "packet.csv")


def test_missing_config_is_an_io_error(tmp_path):
    with pytest.raises(OSError):
        load_config(tmp_path / "absent.cfg")


def test_override():
    rc = RunConfig()
    assert override(rc) is rc
    assert override(rc, nx=10, nt=None).nx == 10
    with pytest.raises(ConfigError):
        override(rc, nx=1)
    with pytest.raises(ConfigError):
        override(rc, colour="blue")


# ------------------------------------------------------------------ compute


def test_grid_layout(direct_small, small):
    g = direct_small
    assert g.values.shape == (small.nt, small.nx)
    assert g.u_range == (0.0, 1.0) and g.tau_range == (0.0, 1.0)
    assert g.representation == "direct"
    assert g.provenance["config"]["run.nx"] == small.nx
    assert g.provenance["m_max"] == 40


@pytest.mark.parametrize("rep,tol", [("four_term", 1e-12), ("worldline", 1e-5), ("revival", 1e-5)])
def test_representations_agree(direct_small, small, rep, tol):
    g = compute_carpet(small, rep)
    assert g.representation == rep
    assert np.max(np.abs(g.values - direct_small.values)) < tol * np.max(direct_small.values)


def test_revival_provenance(small):
    g = compute_carpet(small, "revival")
    fr = g.provenance["fractions"]
    assert len(fr) == small.nt
    assert all(len(f) == 4 for f in fr)


def test_worldline_provenance(small):
    g = compute_carpet(small.replace(nt=2), "worldline")
    b = g.provenance["budget"]
    assert b["j_min"] == -b["j_max"]
    assert b["tail_estimate"] < b["tol"]


def test_row_norms():
    g = compute_carpet(RunConfig(nx=256, nt=16))
    assert np.max(np.abs(g.row_norms() - 1)) < 1e-4


def test_values_non_negative_at_tolerance(small):
    g = compute_carpet(small, "worldline")
    assert np.min(g.values) >= -10 * small.budget_tol


def test_time_periodicity_nonrelativistic(direct_small):
    assert periodicity_violation(direct_small) == 0.0


def test_relativistic_carpet_breaks_periodicity():
    g = compute_carpet(RunConfig(nx=64, nt=9, q=1e-6))
    assert periodicity_violation(g) > 1e-3


def test_eigenstate_rows_identical(tmp_path):
    rc = RunConfig(packet_kind="eigenstate", mode=2, nx=65, nt=7)
    g = compute_carpet(rc)
    assert np.max(np.abs(g.values - 2 * np.sin(2 * np.pi * g.u) ** 2)) < 1e-12
    pix = np.frombuffer(pgm_bytes(g).split(b"\n", 3)[3], dtype=">u2").reshape(7, 65)
    assert all(np.array_equal(pix[0], p) for p in pix)


def test_parallel_rows_are_deterministic(small):
    a = compute_carpet(small)
    b = compute_carpet(small.replace(workers=4))
    assert np.array_equal(a.values, b.values)


def test_row_errors_are_located(small, monkeypatch):
    def boom(*args, **kwargs):
        raise TruncationError("tail too large")

    monkeypatch.setattr(carpet_mod, "density_direct_grid", boom)
    with pytest.raises(TruncationError, match=r"\[row 0, tau = 0\.0\]"):
        compute_carpet(small)


def test_dark_canals_of_reference_packet():
    g = compute_carpet(RunConfig(nx=256, nt=256))
    mean = g.values.mean(axis=1)

    def along(slope):
        tau = g.tau[(g.tau > 0.02) & (g.tau < 0.48)]
        rows = np.searchsorted(g.tau, tau)
        cols = np.rint(np.mod(slope * g.tau[rows], 1.0) * (g.nx - 1)).astype(int)
        return g.values[rows, cols] / mean[rows]

    # the u = 8 tau family (j = 4) is a canal; the u = 2 tau line is not
    assert np.all(along(8.0) < 1.0)
    assert np.mean(along(8.0)) < 0.2
    assert np.mean(along(2.0)) > 0.5


# ------------------------------------------------------------------ cross-check


def test_cross_check_report(small):
    report = cross_check(small.replace(nx=32, nt=8), ["direct", "four_term", "worldline"])
    assert report.passed
    assert len(report.pairs) == 3
    rows = report.rows()
    assert rows[0] == "first,second,max_abs,rms,max_rel,tol,status"
    assert rows[1].startswith("direct,four_term,") and rows[1].endswith(",PASS")
    four = report.pairs[0]
    assert four.max_rel < 1e-12 and four.rms <= four.max_abs


def test_cross_check_fails_at_impossible_tolerance(small):
    report = cross_check(small.replace(nx=16, nt=4), ["direct", "worldline"], tol=1e-15)
    assert not report.passed
    assert report.rows()[-1].endswith(",FAIL")


def test_cross_check_needs_two(small):
    with pytest.raises(ConfigError):
        cross_check(small, ["direct", "direct"])


def test_compare_shape_mismatch(direct_small):
    other = CarpetGrid(direct_small.values[:, :-1], direct_small.u[:-1], direct_small.tau, "x")
    with pytest.raises(ValueError):
        compare(direct_small, other, 1e-5)


# ------------------------------------------------------------------ export


def test_pgm_format(direct_small, tmp_path):
    data = pgm_bytes(direct_small)
    assert data.startswith(b"P5\n48 12\n65535\n")
    path = export(direct_small, "pgm", tmp_path / "c.pgm")
    pix = read_pgm(path)
    assert pix.shape == (12, 48)
    i = np.unravel_index(np.argmax(direct_small.values), pix.shape)
    assert pix[i] == 0
    want = np.rint(65535 * (1 - direct_small.values / direct_small.values.max()))
    assert np.array_equal(pix, want.astype(np.uint16))
    # walls carry no probability: white
    assert np.all(pix[:, 0] == 65535)


def test_csv_format(direct_small):
    lines = csv_text(direct_small).splitlines()
    assert lines[0] == "u,tau,W"
    assert len(lines) == 1 + 48 * 12
    u, tau, w = (float(v) for v in lines[1 + 48 * 3 + 5].split(","))
    assert (u, tau, w) == (direct_small.u[5], direct_small.tau[3], direct_small.values[3, 5])


def test_meta_sidecar(direct_small):
    info = json.loads(meta(direct_small))
    assert info["version"] == __version__
    assert info["representation"] == "direct"
    assert "dark" in info["colour_convention"]
    assert info["tolerances"]["eps_trunc"] == 1e-12
    assert info["tolerances"]["m_max"] == 40
    assert info["provenance"]["config"]["packet.dx"] == 0.03


def test_export_all_and_bit_identical_reruns(tmp_path, small):
    paths = []
    for k in range(2):
        rc = small.replace(out_dir=str(tmp_path / str(k)), formats=("pgm", "csv", "json"))
        paths.append(export_all(compute_carpet(rc), rc))
    names = [p.name for p in paths[0]]
    assert names == ["carpet_direct.pgm", "carpet_direct.csv", "carpet_direct.json"]
    for a, b in zip(paths[0][:2], paths[1][:2]):
        assert a.read_bytes() == b.read_bytes()
    # the sidecar echoes the output directory and nothing else differs
    ja, jb = (json.loads(p[2].read_text()) for p in paths)
    for j in (ja, jb):
        del j["provenance"]["config"]["output.dir"]
    assert ja == jb


def test_unknown_export_format(direct_small, tmp_path):
    with pytest.raises(ValueError):
        export(direct_small, "tiff", tmp_path / "x.tiff")


# ------------------------------------------------------------------ canal analysis


def test_row_minima_and_subcell():
    x = np.arange(20, dtype=float)
    row = (x - 7.3) ** 2 + 1
    assert row_minima(row).tolist() == [7]
    assert subcell_minimum(row, 7) == pytest.approx(7.3)
    assert row_minima(row, floor=2.0).size == 0


def _synthetic(center, n=64):
    u = np.linspace(0, 1, n)
    tau = np.array([0.49, 0.5, 0.51])
    vals = np.stack([1 - np.exp(-((u - center) ** 2) / 0.002)] * 3) + 1.0
    return CarpetGrid(vals, u, tau, "synthetic")


def test_canal_shift_on_synthetic_grids():
    ref, other = _synthetic(0.40), _synthetic(0.40 + 2 / 63)
    (shift,) = canal_shift(ref, other)
    assert shift.row == 1 and shift.cells == 2
    assert shift.subcell == pytest.approx(2.0, abs=0.05)
    (same,) = canal_shift(ref, ref)
    assert same.cells == 0 and same.subcell == 0
