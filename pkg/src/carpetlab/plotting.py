"""Optional PNG rendering of carpets with matplotlib.

PGM stays the reference output; these figures are for looking at.  The
grey map is reversed so that, as in the PGM, dark means high probability.
"""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _draw(ax, grid, cmap):
    (u0, u1), (t0, t1) = grid.u_range, grid.tau_range
    # first row at the top, matching the PGM layout
    im = ax.imshow(
        grid.values,
        cmap=cmap,
        origin="upper",
        aspect="auto",
        extent=(u0, u1, t1, t0),
        interpolation="nearest",
        vmin=0.0,
    )
    ax.set_xlabel("x / L")
    ax.set_ylabel("t / T")
    return im


def render_carpet(grid, path, cmap="gray_r", dpi=150, title=None):
    """Save one carpet as an image; returns ``path``."""
    fig, ax = plt.subplots(figsize=(4.0, 5.0), dpi=dpi)
    _draw(ax, grid, cmap)
    ax.set_title(title or grid.representation)
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def render_panels(grids, path, titles=None, cmap="gray_r", dpi=150):
    """Side-by-side carpets, e.g. the non-relativistic and relativistic runs."""
    fig, axes = plt.subplots(1, len(grids), figsize=(4.0 * len(grids), 5.0), dpi=dpi, squeeze=False)
    for k, (ax, g) in enumerate(zip(axes[0], grids)):
        _draw(ax, g, cmap)
        ax.set_title(titles[k] if titles else g.representation)
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def render_difference(a, b, path, dpi=150):
    """Signed difference ``a - b`` on a diverging map."""
    fig, ax = plt.subplots(figsize=(4.5, 5.0), dpi=dpi)
    d = a.values - b.values
    lim = float(abs(d).max()) or 1.0
    (u0, u1), (t0, t1) = a.u_range, a.tau_range
    im = ax.imshow(d, cmap="RdBu_r", origin="upper", aspect="auto", extent=(u0, u1, t1, t0), vmin=-lim, vmax=lim)
    fig.colorbar(im, ax=ax, label="ΔW")
    ax.set_xlabel("x / L")
    ax.set_ylabel("t / T")
    ax.set_title(f"{a.representation} - {b.representation}")
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path
