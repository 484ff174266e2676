import hist
import numpy as np
from hist import Hist


def _grid_axis(values, name, label):
    values = np.asarray(values, dtype=float)
    if len(values) > 1:
        half = 0.5 * (values[-1] - values[0]) / (len(values) - 1)
    else:
        half = 0.5e-3 * max(1.0, abs(values[0]))
    return hist.axis.Regular(bins=len(values), start=values[0] - half, stop=values[-1] + half, name=name,
                             label=label)


def TH2F_grid(name, title, x_values, y_values):
    """2D histogram whose bin centres are the given grid points; ``title`` is 'name;x axis;y axis'."""
    b_x_axis_name = 'X'
    b_y_axis_name = 'Y'
    title_split = title.split(';')
    if len(title_split) > 1:
        b_x_axis_name = title_split[1]
    if len(title_split) > 2:
        b_y_axis_name = title_split[2]
    return Hist(
        _grid_axis(x_values, b_x_axis_name, b_x_axis_name),
        _grid_axis(y_values, b_y_axis_name, b_y_axis_name),
        label=name,
        name=title_split[0],
        storage=hist.storage.Weight(),
        )


def tongue_raster(tau_values, delta_values, periods):
    """Raster of recorded periods on the (tau_R, delta_R) grid; ``periods`` has shape (n_delta, n_tau)."""
    raster = TH2F_grid('tongues', 'tongues;tau_R;delta_R', tau_values, delta_values)
    periods = np.asarray(periods)
    tau_grid, delta_grid = np.meshgrid(np.asarray(tau_values, dtype=float), np.asarray(delta_values, dtype=float))
    mask = periods > 0
    fill_2Dhist(raster, tau_grid[mask], delta_grid[mask], weights=periods[mask].astype(float))
    return raster


def fill_2Dhist(raster, values_x, values_y, weights=None):
    if weights is None:
        raster.fill(np.ravel(values_x), np.ravel(values_y), threads=None)
    else:
        raster.fill(np.ravel(values_x), np.ravel(values_y), weight=np.ravel(weights))


def raster_periods(raster):
    """Recorded periods back from the raster, shape (n_delta, n_tau)."""
    return np.rint(raster.values().T).astype(int)
