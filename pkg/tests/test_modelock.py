import math

import numpy as np
import pytest

from python.boost_hist import TH2F_grid, raster_periods
from python.errors import ConfigError
from python.modelock import (
    RotationalWord,
    TongueGridSpec,
    canonical_rotation,
    enumerate_rotational,
    scan_tongues,
    simulate_cell,
)


def locked_grid(**overrides):
    values = {'tau_L': 0.5, 'delta_L': 0.05, 'mu': 1.0, 'tau_R': (-1.6, -1.6, 1), 'delta_R': (0.05, 0.05, 1),
              'period_cap': 2}
    values.update(overrides)
    return TongueGridSpec(**values)


def test_rotational_words():
    assert RotationalWord(1, 2).word == 'LR'
    assert RotationalWord(1, 3).word == 'LLR'
    assert RotationalWord(2, 3).word == 'LRR'
    assert RotationalWord(1, 4, ell=2).word == 'LLRR'
    assert RotationalWord(3, 5).period == 5
    assert str(RotationalWord(1, 2)) == 'LR'
    with pytest.raises(ValueError):
        RotationalWord(2, 4)
    with pytest.raises(ValueError):
        RotationalWord(1, 3, ell=3)


def test_rotational_words_have_ell_l_letters():
    for word in enumerate_rotational(12, spread='all'):
        assert word.word.count('L') == word.length_L


def test_canonical_rotation():
    assert canonical_rotation('RLL') == 'LLR'
    assert canonical_rotation('LRLR') == 'LRLR'


def test_sturmian_enumeration_count():
    words = enumerate_rotational(30)
    expected = sum(1 for n in range(2, 31) for m in range(1, n) if math.gcd(m, n) == 1)
    assert len(words) == expected
    assert [w.period for w in words] == sorted(w.period for w in words)


def test_all_spreads_are_deduplicated():
    words = [w.word for w in enumerate_rotational(4, spread='all')]
    assert words == ['LR', 'LRR', 'LLR', 'LRRR', 'LLRR', 'LLLR']
    with pytest.raises(ValueError):
        enumerate_rotational(1)
    with pytest.raises(ValueError):
        enumerate_rotational(5, spread='some')


def test_grid_spec_json():
    grid = TongueGridSpec.from_json({'tau_L': 2.0, 'delta_L': 0.75, 'mu': 1.0, 'tau_R': [-1, 1, 5],
                                     'delta_R': [0, 1, 3]})
    assert grid.shape == (3, 5)
    np.testing.assert_allclose(grid.tau_values, [-1, -0.5, 0, 0.5, 1])
    assert TongueGridSpec.from_json(grid.to_json()) == grid
    with pytest.raises(ConfigError, match='unknown fields'):
        TongueGridSpec.from_json({'tau_L': 2.0, 'delta_L': 0.75, 'mu': 1.0, 'grid': 3})
    with pytest.raises(ConfigError):
        TongueGridSpec.from_json({'tau_L': 2.0, 'delta_L': 0.75, 'mu': 1.0, 'tau_R': [1, -1, 5]})
    with pytest.raises(ConfigError):
        TongueGridSpec.from_json({'tau_L': 2.0, 'delta_L': 0.75, 'mu': 1.0, 'tau_R': [1, 2]})


def test_locked_cell_records_period_two():
    tongues = scan_tongues(locked_grid())
    cell = tongues.cell(0, 0)
    assert cell.period == 2
    assert cell.word == 'LR'
    assert cell.margin == pytest.approx(0.55 / 1.9025)
    assert cell.spectral_radius < 1.0
    assert tongues.failed == []
    assert tongues.cells() == [cell]


def test_expanding_cell_is_empty():
    grid = TongueGridSpec(tau_L=3.0, delta_L=2.0, mu=1.0, tau_R=(-3.0, -3.0, 1), delta_R=(2.0, 2.0, 1),
                          period_cap=8)
    tongues = scan_tongues(grid)
    assert tongues.periods[0, 0] == 0
    assert tongues.cell(0, 0).period is None
    assert tongues.cells() == []


def test_frame_and_raster():
    grid = locked_grid(tau_R=(-1.7, -1.5, 3), delta_R=(0.04, 0.06, 2), period_cap=4)
    tongues = scan_tongues(grid)
    frame = tongues.to_frame()
    assert list(frame.columns) == ['i', 'j', 'tau_R', 'delta_R', 'period']
    assert len(frame) == 6
    np.testing.assert_array_equal(frame['period'].to_numpy().reshape(2, 3), tongues.periods)
    np.testing.assert_array_equal(raster_periods(tongues.raster()), tongues.periods)


def test_scan_does_not_depend_on_workers():
    grid = locked_grid(tau_R=(-1.8, -1.2, 7), delta_R=(0.0, 0.2, 5), period_cap=6, rows_per_task=2)
    serial = scan_tongues(grid)
    parallel = scan_tongues(grid, workers=2)
    np.testing.assert_array_equal(serial.word_index, parallel.word_index)
    assert len(serial.statuses) == 3


def test_simulation_converges_to_recorded_orbit():
    grid = locked_grid()
    cell = scan_tongues(grid).cell(0, 0)
    rng = np.random.default_rng(3)
    assert all(simulate_cell(grid, cell, rng) for _ in range(5))


def test_grid_histogram_axes():
    raster = TH2F_grid('tongues', 'tongues;tau_R;delta_R', [0.0, 1.0, 2.0], [5.0])
    np.testing.assert_allclose(raster.axes[0].centers, [0.0, 1.0, 2.0])
    np.testing.assert_allclose(raster.axes[1].centers, [5.0])
    assert raster.axes[0].name == 'tau_R'
