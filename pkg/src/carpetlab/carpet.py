"""Carpet grids: evaluation by any representation, cross-checks and export.

A carpet is the scaled density ``W(u, tau)`` on the tensor grid
``u = linspace(0, 1, nx)``, ``tau = linspace(tau_min, tau_max, nt)``, stored
row-major with one row per time.  Rows are independent, so they may be
spread over worker threads; results are always assembled by row index.
"""
import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .box_basis import BoxConfig
from .config import RunConfig
from .decomposition import density_direct_grid, density_four_term
from .errors import CarpetError, ConfigError
from .revival import IMAGE_TOL, density_revival, nearest_fraction
from .wavepacket import GaussianPacket, SampledPacket, eigenstate, project
from .worldline import _assert_budget, _evaluate, _Integrands, make_budget

PGM_MAX = 65535
COLOUR_CONVENTION = "pixel = round(65535 * (1 - W / W_max)); dark = high probability; top row = tau_min"


@dataclass
class CarpetGrid:
    """Density ``values[i, k] = W(u[k], tau[i])`` plus a full parameter echo."""

    values: np.ndarray
    u: np.ndarray
    tau: np.ndarray
    representation: str
    provenance: dict = field(default_factory=dict)

    @property
    def nx(self):
        return int(self.u.size)

    @property
    def nt(self):
        return int(self.tau.size)

    @property
    def u_range(self):
        return (float(self.u[0]), float(self.u[-1]))

    @property
    def tau_range(self):
        return (float(self.tau[0]), float(self.tau[-1]))

    def row_norms(self):
        """Trapezoidal ``int_0^1 W du`` of every row."""
        return np.trapezoid(self.values, self.u, axis=1)


def box_of(rc):
    return BoxConfig(length=rc.L, mass=rc.M, hbar=rc.hbar, rel_q=rc.q)


def packet_of(rc):
    """Initial packet of a run (``None`` for a pure eigenstate)."""
    if rc.packet_kind == "gaussian":
        return GaussianPacket(center=rc.x0, width=rc.dx, mean_k=rc.k0)
    if rc.packet_kind == "csv":
        return SampledPacket.from_csv(rc.csv_path)
    return None


def coefficients_of(rc, cfg=None, packet=None):
    cfg = cfg or box_of(rc)
    if rc.packet_kind == "eigenstate":
        return eigenstate(cfg, rc.mode, m_max=rc.m_max)
    packet = packet if packet is not None else packet_of(rc)
    try:
        return project(packet, cfg, m_max=rc.m_max, eps_trunc=rc.eps_trunc)
    except ValueError as exc:
        if isinstance(exc, CarpetError):
            raise
        raise ConfigError(str(exc)) from None


def grid_axes(rc):
    u = np.linspace(0.0, 1.0, rc.nx)
    tau = np.linspace(rc.tau_min, rc.tau_max, rc.nt)
    return u, tau


def _point_error(exc, i, t):
    return type(exc)(f"{exc} [row {i}, tau = {t!r}]")


def _row_evaluator(rc, rep, cfg, packet, s, u, prov):
    if rep == "direct":
        return lambda t: density_direct_grid(s, cfg, u, np.array([t]))[0]
    if rep == "four_term":
        return lambda t: density_four_term(s, cfg, u, t)
    if rep == "worldline":
        n_nodes = 1024 if cfg.rel_q == 0 else 2048
        budget = make_budget(s, tol=rc.budget_tol, n_nodes=n_nodes)
        _assert_budget(budget)
        if cfg.rel_q != 0:
            from .box_basis import scaled_energy

            scaled_energy(cfg, np.arange(int(np.max(np.abs(budget.j_window))) + 1))
        ints = _Integrands(s, budget)
        prov["budget"] = {
            "j_min": int(budget.j_window.min()),
            "j_max": int(budget.j_window.max()),
            "l_bound": budget.l_bound,
            "tail_estimate": budget.tail_estimate,
            "tol": budget.tol,
            "n_nodes": budget.n_nodes,
        }
        return lambda t: _evaluate(s, cfg, budget, u, np.full(u.shape, t), integrands=ints)
    if rep == "revival":
        fractions = prov.setdefault("fractions", {})

        def row(t):
            ft = nearest_fraction(cfg, t, rc.r_max, packet)
            fractions[repr(t)] = (ft.numerator, ft.denominator, ft.offset, ft.is_extrapolated(cfg))
            return density_revival(packet, cfg, ft, u)

        return row
    raise ConfigError(f"unknown representation {rep!r}")


def compute_carpet(rc: RunConfig, representation=None):
    """Evaluate the carpet of ``rc`` with its (or the given) representation.

    Errors raised while evaluating a row are re-raised with the row index
    and time appended.
    """
    rep = representation or rc.representation
    if rep != rc.representation:
        rc = rc.replace(representation=rep)
    cfg = box_of(rc)
    packet = packet_of(rc)
    s = coefficients_of(rc, cfg, packet)
    u, tau = grid_axes(rc)
    prov = {
        "config": rc.as_keys(),
        "version": __version__,
        "m_max": s.m_max,
        "residual": s.residual,
        "revival_time": cfg.revival_time,
    }
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        row = _row_evaluator(rc, rep, cfg, packet, s, u, prov)

        def eval_row(i):
            try:
                return row(float(tau[i]))
            except CarpetError as exc:
                raise _point_error(exc, i, float(tau[i])) from exc

        if rc.workers > 1:
            with ThreadPoolExecutor(max_workers=rc.workers) as pool:
                rows = list(pool.map(eval_row, range(tau.size)))
        else:
            rows = [eval_row(i) for i in range(tau.size)]
    messages = sorted({f"{w.category.__name__}: {w.message}" for w in caught})
    for w in caught:
        warnings.warn_explicit(w.message, w.category, w.filename, w.lineno)
    prov["warnings"] = messages
    if rep == "revival":
        fr = prov.pop("fractions")
        prov["fractions"] = [fr[repr(float(t))] for t in tau]
        prov["image_tol"] = IMAGE_TOL
    values = np.array(rows, dtype=float).reshape(tau.size, u.size)
    return CarpetGrid(values, u, tau, rep, prov)


@dataclass
class PairDifference:
    first: str
    second: str
    max_abs: float
    rms: float
    scale: float
    tol: float

    @property
    def max_rel(self):
        return self.max_abs / self.scale if self.scale > 0 else self.max_abs

    @property
    def passed(self):
        return self.max_rel < self.tol


@dataclass
class CrossCheckReport:
    pairs: list
    grids: dict = field(repr=False, default_factory=dict)

    @property
    def passed(self):
        return all(p.passed for p in self.pairs)

    def rows(self):
        """Delimited lines ``first,second,max_abs,rms,max_rel,tol,status``."""
        out = ["first,second,max_abs,rms,max_rel,tol,status"]
        for p in self.pairs:
            status = "PASS" if p.passed else "FAIL"
            out.append(f"{p.first},{p.second},{p.max_abs:.6e},{p.rms:.6e},{p.max_rel:.6e},{p.tol:.1e},{status}")
        return out


def compare(a: CarpetGrid, b: CarpetGrid, tol):
    """Max-norm and RMS difference of two grids; relative to ``max W`` of the first."""
    if a.values.shape != b.values.shape:
        raise ValueError("grids differ in shape")
    d = a.values - b.values
    return PairDifference(
        a.representation,
        b.representation,
        float(np.max(np.abs(d))),
        float(np.sqrt(np.mean(d * d))),
        float(np.max(a.values)),
        tol,
    )


def cross_check(rc: RunConfig, reps, tol=None):
    """Pairwise differences between carpets of two or more representations."""
    reps = list(dict.fromkeys(reps))
    if len(reps) < 2:
        raise ConfigError("cross_check needs at least two distinct representations")
    tol = rc.tol if tol is None else tol
    grids = {r: compute_carpet(rc, r) for r in reps}
    pairs = [compare(grids[a], grids[b], tol) for i, a in enumerate(reps) for b in reps[i + 1 :]]
    return CrossCheckReport(pairs, grids)


# ---------------------------------------------------------------- export


def pgm_bytes(grid):
    """Binary 16-bit PGM; high probability is dark, first row is ``tau_min``."""
    w = grid.values
    w_max = float(np.max(w))
    if w_max > 0:
        level = np.rint(PGM_MAX * (1.0 - w / w_max))
    else:
        level = np.full(w.shape, float(PGM_MAX))
    pix = np.clip(level, 0, PGM_MAX).astype(">u2")
    header = f"P5\n{grid.nx} {grid.nt}\n{PGM_MAX}\n".encode("ascii")
    return header + pix.tobytes()


def read_pgm(path):
    """Pixel array of a file written by :func:`export` (for checks)."""
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM")
    nx, nt = (int(v) for v in parts[1].split())
    maxval = int(parts[2])
    dtype = ">u2" if maxval > 255 else "u1"
    return np.frombuffer(parts[3], dtype=dtype).reshape(nt, nx)


def csv_text(grid):
    uu, tt = np.meshgrid(grid.u, grid.tau)
    lines = ["u,tau,W"]
    lines += [f"{a:.17g},{b:.17g},{c:.17g}" for a, b, c in zip(uu.ravel(), tt.ravel(), grid.values.ravel())]
    return "\n".join(lines) + "\n"


def meta(grid):
    """Provenance sidecar: parameters, library version, tolerances, colour convention."""
    cfg = grid.provenance.get("config", {})
    info = {
        "version": grid.provenance.get("version", __version__),
        "representation": grid.representation,
        "nx": grid.nx,
        "nt": grid.nt,
        "u_range": list(grid.u_range),
        "tau_range": list(grid.tau_range),
        "w_max": float(np.max(grid.values)),
        "w_min": float(np.min(grid.values)),
        "colour_convention": COLOUR_CONVENTION,
        "tolerances": {
            "eps_trunc": cfg.get("run.eps_trunc"),
            "m_max": grid.provenance.get("m_max"),
            "truncation_residual": grid.provenance.get("residual"),
            "cross_check_tol": cfg.get("run.tol"),
            "budget_tol": cfg.get("run.budget_tol"),
            "image_tol": IMAGE_TOL,
        },
        "provenance": grid.provenance,
    }
    return json.dumps(info, indent=2, sort_keys=True, default=_jsonable) + "\n"


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, (tuple, set)):
        return list(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def export(grid, fmt, path):
    """Write ``grid`` as ``pgm``, ``csv``, ``json`` (metadata) or ``png``; returns the path."""
    path = Path(path)
    if fmt == "pgm":
        path.write_bytes(pgm_bytes(grid))
    elif fmt == "csv":
        path.write_text(csv_text(grid))
    elif fmt in ("json", "json-meta"):
        path.write_text(meta(grid))
    elif fmt == "png":
        from .plotting import render_carpet

        render_carpet(grid, path)
    else:
        raise ValueError(f"unknown export format {fmt!r}")
    return path


def export_all(grid, rc):
    """Write every format of ``rc.formats`` into ``rc.out_dir``."""
    out = Path(rc.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ext = {"json": "json", "pgm": "pgm", "csv": "csv", "png": "png"}
    return [export(grid, f, out / f"{rc.prefix}_{grid.representation}.{ext[f]}") for f in rc.formats]


# ---------------------------------------------------------------- canal analysis


def row_minima(row, floor=0.0):
    """Interior strict local minima of ``row`` whose value exceeds ``floor``."""
    row = np.asarray(row)
    i = np.nonzero((row[1:-1] < row[:-2]) & (row[1:-1] < row[2:]))[0] + 1
    return i[row[i] > floor]


def subcell_minimum(row, i):
    """Parabolic refinement of a local minimum at index ``i``."""
    a, b, c = row[i - 1], row[i], row[i + 1]
    den = a - 2 * b + c
    return float(i) if den == 0 else i + 0.5 * (a - c) / den


@dataclass
class CanalShift:
    row: int
    tau: float
    index_ref: int
    index_other: int
    subcell_ref: float
    subcell_other: float

    @property
    def cells(self):
        return abs(self.index_other - self.index_ref)

    @property
    def subcell(self):
        return abs(self.subcell_other - self.subcell_ref)


def canal_shift(ref, other, tau=0.5, floor_rel=1e-8, radius=3):
    """Displacement between the canals of two carpets closest to time ``tau``.

    The canal is the deepest interior minimum (relative to the row
    maximum) of ``ref`` in the row(s) nearest ``tau`` that contain one.
    Minima below ``floor_rel * max W`` are rounding noise in empty regions
    and are ignored.  The matching canal of ``other`` is its nearest
    interior minimum within ``radius`` cells.  When two rows are equally
    close to ``tau`` both are measured.
    """
    floor = floor_rel * float(np.max(ref.values))
    dist = np.abs(ref.tau - tau)
    order = np.argsort(dist, kind="stable")
    out = []
    best = None
    for i in order:
        if best is not None and dist[i] > best + 1e-12:
            break
        r0, r1 = ref.values[i], other.values[i]
        m0 = row_minima(r0, floor)
        if m0.size == 0:
            continue
        best = dist[i]
        k0 = int(m0[np.argmin(r0[m0] / r0.max())])
        m1 = row_minima(r1, floor)
        near = m1[np.abs(m1 - k0) <= radius] if m1.size else m1
        if near.size == 0:
            continue
        k1 = int(near[np.argmin(np.abs(near - k0))])
        out.append(CanalShift(int(i), float(ref.tau[i]), k0, k1, subcell_minimum(r0, k0), subcell_minimum(r1, k1)))
    return out


def periodicity_violation(grid):
    """``max |W(u, tau_max) - W(u, tau_min)|``; zero for an exactly periodic carpet over one period."""
    return float(np.max(np.abs(grid.values[-1] - grid.values[0])))
