"""
Figure builders for the command outputs.

Each function returns a matplotlib figure; writing it (and recording its
checksum) is left to ``file_manager.ArtifactWriter.svg``.  Figures contain
only polylines, point clouds and raster cells.
"""
import matplotlib as mpl

mpl.use('Agg')
import matplotlib.pyplot as plt
import numpy as np

MANIFOLD_STYLE = {'stable': {'color': 'tab:blue', 'lw': 0.8}, 'unstable': {'color': 'tab:red', 'lw': 0.8}}


def _polyline(ax, polyline, **style):
    for chain in np.unique(polyline.chain):
        points = polyline.vertices[polyline.chain == chain]
        ax.plot(points[:, 0], points[:, 1], **style)


def plot_portrait(points=None, manifolds=(), orbits=(), title='', limits=None):
    fig, ax = plt.subplots(figsize=(6, 5))
    if points is not None and len(points):
        ax.plot(points[:, 0], points[:, 1], ',', color='black', alpha=0.6)
    for polyline in manifolds:
        _polyline(ax, polyline, **MANIFOLD_STYLE[polyline.side])
        kinks = polyline.kinks
        if len(kinks):
            ax.plot(kinks[:, 0], kinks[:, 1], 'o', ms=2, color=MANIFOLD_STYLE[polyline.side]['color'])
    for orbit in orbits:
        ax.plot(orbit.points[:, 0], orbit.points[:, 1], 'o', ms=4, mfc='none', label=orbit.itinerary)
    ax.axvline(0.0, color='grey', lw=0.5, ls='--')
    if limits is not None:
        ax.set_xlim(limits[0], limits[1])
        ax.set_ylim(limits[2], limits[3])
    if orbits:
        ax.legend(fontsize=7, loc='upper right')
    ax.set_xlabel('x')
    ax.set_ylabel('y')
    ax.set_title(title)
    fig.tight_layout()
    return fig


def plot_bifdiag(frame, parameter, corner=None, scaling=None):
    """Bifurcation values against n, and the successive ratios when ``scaling`` is given."""
    ncols = 2 if scaling is not None else 1
    fig, axes = plt.subplots(1, ncols, figsize=(5 * ncols, 4), squeeze=False)
    ax = axes[0, 0]
    for branch, group in frame.groupby('branch', sort=True):
        ax.plot(group['n'], group['xi_bcb'], 'o-', ms=3, label=f'branch {branch}')
    if corner is not None:
        ax.axhline(corner, color='black', lw=0.8, ls='--', label='corner')
    ax.set_xlabel('n')
    ax.set_ylabel(parameter)
    ax.legend(fontsize=8)
    if scaling is not None:
        ax = axes[0, 1]
        ax.plot(scaling['n'], scaling['ratio'], 'o-', ms=3, color='tab:green')
        ax.set_xlabel('n')
        ax.set_ylabel('ratio of successive distances')
    fig.tight_layout()
    return fig


def plot_tongues(raster, loci=(), dots=(), period_cap=30):
    """Raster of recorded periods with corner curves drawn on top."""
    fig, ax = plt.subplots(figsize=(7, 5.5))
    x_edges, y_edges = raster.axes[0].edges, raster.axes[1].edges
    periods = np.ma.masked_less_equal(raster.values().T, 0)
    mesh = ax.pcolormesh(x_edges, y_edges, periods, cmap='turbo', vmin=2, vmax=period_cap, shading='flat',
                         rasterized=False)
    fig.colorbar(mesh, ax=ax, label='period')
    for locus in loci:
        if len(locus):
            ax.plot(locus.samples[:, 0], locus.samples[:, 1], color='black', lw=1.2)
    for dot in dots:
        ax.plot(dot[0], dot[1], 'o', color='black', ms=4)
    ax.set_xlabel(raster.axes[0].name)
    ax.set_ylabel(raster.axes[1].name)
    fig.tight_layout()
    return fig


def plot_tent(tent, orbit_x):
    fig, ax = plt.subplots(figsize=(6, 3.5))
    steps = np.arange(len(tent))
    ax.plot(steps, tent, 'o-', ms=2, lw=0.6, label='skew tent')
    ax.plot(steps[:len(orbit_x)], orbit_x, 's', ms=2, mfc='none', label='normal form x')
    ax.set_xlabel('iterate')
    ax.set_ylabel('x')
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig
