"""
Mode-locking tongues of the border-collision normal form.

Rotational words code a rigid rotation by m/n: letter i is L when
(i m mod n) < ell.  For each grid cell in the (tau_R, delta_R) plane every
word is solved as an affine periodic orbit; a cell records the highest period
among the admissible orbits with spectral radius below one.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from python.boost_hist import tongue_raster
from python.errors import ConfigError
from python.normal_form import NormalFormParams
from python.periodic import canonical_rotation, solve_periodic
from python.pws_core import iterate
from python.sweep import run_tasks

logger = logging.getLogger(__name__)

ADMISSIBLE_TOL = 1e-10
SPREADS = ('sturmian', 'all')


@dataclass(frozen=True)
class RotationalWord:
    m: int
    n: int
    ell: int | None = None

    def __post_init__(self):
        if not 1 <= self.m < self.n or math.gcd(self.m, self.n) != 1:
            raise ValueError(f'need coprime 1 <= m < n, got m={self.m}, n={self.n}')
        if not 1 <= self.length_L <= self.n - 1:
            raise ValueError(f'need 1 <= ell <= n - 1, got ell={self.ell}')

    @property
    def length_L(self):
        return self.n - self.m if self.ell is None else self.ell

    @property
    def word(self):
        return ''.join('L' if (i * self.m) % self.n < self.length_L else 'R' for i in range(self.n))

    @property
    def period(self):
        return self.n

    def __str__(self):
        return self.word


def enumerate_rotational(period_cap, spread='sturmian'):
    """
    Rotational words for every coprime m/n with n <= period_cap, ordered by
    period.  ``spread='all'`` adds every interval length ell; words equal up
    to a cyclic rotation are listed once.
    """
    if period_cap < 2:
        raise ValueError('period_cap must be at least 2')
    if spread not in SPREADS:
        raise ValueError(f'spread must be one of {SPREADS}, got {spread!r}')
    words, seen = [], set()
    for n in range(2, period_cap + 1):
        for m in range(1, n):
            if math.gcd(m, n) != 1:
                continue
            ells = [n - m] if spread == 'sturmian' else range(1, n)
            for ell in ells:
                candidate = RotationalWord(m, n, ell)
                key = canonical_rotation(candidate.word)
                if key not in seen:
                    seen.add(key)
                    words.append(candidate)
    return words


@dataclass(frozen=True)
class TongueGridSpec:
    tau_L: float
    delta_L: float
    mu: float
    tau_R: tuple[float, float, int] = (-1.5, 1.5, 801)
    delta_R: tuple[float, float, int] = (0.0, 1.6, 601)
    period_cap: int = 30
    spread: str = 'sturmian'
    rows_per_task: int = 16

    def __post_init__(self):
        for name in ('tau_R', 'delta_R'):
            lo, hi, count = getattr(self, name)
            if int(count) < 1 or not (math.isfinite(lo) and math.isfinite(hi)) or hi < lo:
                raise ValueError(f'{name}: need a finite range and at least one grid point')
        if self.spread not in SPREADS:
            raise ValueError(f'spread must be one of {SPREADS}')

    @property
    def tau_values(self):
        lo, hi, count = self.tau_R
        return np.linspace(lo, hi, int(count))

    @property
    def delta_values(self):
        lo, hi, count = self.delta_R
        return np.linspace(lo, hi, int(count))

    @property
    def shape(self):
        return int(self.delta_R[2]), int(self.tau_R[2])

    def params(self, tau_R, delta_R):
        return NormalFormParams(self.tau_L, self.delta_L, float(tau_R), float(delta_R), self.mu)

    @classmethod
    def from_json(cls, doc, where='grid'):
        if not isinstance(doc, dict):
            raise ConfigError(f'{where}: expected an object')
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f'{where}: unknown fields {sorted(unknown)}')
        values = dict(doc)
        for name in ('tau_R', 'delta_R'):
            if name in values:
                item = values[name]
                if not (isinstance(item, list) and len(item) == 3):
                    raise ConfigError(f'{where}.{name}: expected [start, stop, points]')
                values[name] = (float(item[0]), float(item[1]), int(item[2]))
        try:
            return cls(**values)
        except (TypeError, ValueError) as err:
            raise ConfigError(f'{where}: {err}') from err

    def to_json(self):
        return {'tau_L': self.tau_L, 'delta_L': self.delta_L, 'mu': self.mu, 'tau_R': list(self.tau_R),
                'delta_R': list(self.delta_R), 'period_cap': self.period_cap, 'spread': self.spread,
                'rows_per_task': self.rows_per_task}


@dataclass(frozen=True)
class TongueCell:
    i: int
    j: int
    tau_R: float
    delta_R: float
    period: int | None
    word: str | None
    margin: float
    spectral_radius: float


def _spectral_radius(trace, det):
    disc = trace * trace - 4.0 * det
    root = np.sqrt(np.abs(disc))
    real = np.maximum(np.abs(trace + root), np.abs(trace - root)) / 2.0
    return np.where(disc < 0.0, np.sqrt(np.abs(det)), real)


def _scan_block(grid, words, row_start, row_stop):
    """Best word index, margin and spectral radius for the grid rows [row_start, row_stop)."""
    tau_R, delta_R = np.meshgrid(grid.tau_values, grid.delta_values[row_start:row_stop])
    shape = tau_R.shape
    best = np.full(shape, -1, dtype=int)
    best_period = np.zeros(shape, dtype=int)
    best_margin = np.full(shape, np.nan)
    best_radius = np.full(shape, np.nan)
    pieces = {'L': (np.full(shape, grid.tau_L), np.full(shape, grid.delta_L)), 'R': (tau_R, delta_R)}
    mu = grid.mu
    for index, word in enumerate(words):
        # composition p -> M p + c along the word, M = [[a, b], [c, d]]
        a, b, c, d = np.ones(shape), np.zeros(shape), np.zeros(shape), np.ones(shape)
        det = np.ones(shape)
        cx, cy = np.zeros(shape), np.zeros(shape)
        for letter in word:
            tau, delta = pieces[letter]
            a, b, c, d = tau * a + c, tau * b + d, -delta * a, -delta * b
            det = det * delta
            cx, cy = tau * cx + cy + mu, -delta * cx
        trace = a + d
        degeneracy = 1.0 - trace + det
        with np.errstate(divide='ignore', invalid='ignore'):
            x = ((1.0 - d) * cx + b * cy) / degeneracy
            y = (c * cx + (1.0 - a) * cy) / degeneracy
        margin = np.full(shape, np.inf)
        for letter in word:
            side = -1.0 if letter == 'L' else 1.0
            margin = np.minimum(margin, side * x)
            tau, delta = pieces[letter]
            x, y = tau * x + y + mu, -delta * x
        radius = _spectral_radius(trace, det)
        locked = (np.isfinite(margin) & (margin >= -ADMISSIBLE_TOL) & (radius < 1.0)
                  & (len(word) > best_period))
        best[locked] = index
        best_period[locked] = len(word)
        best_margin[locked] = margin[locked]
        best_radius[locked] = radius[locked]
    return best, best_margin, best_radius


@dataclass
class TongueGrid:
    grid: TongueGridSpec
    words: list[str]
    word_index: np.ndarray
    margins: np.ndarray
    radii: np.ndarray
    statuses: list = field(default_factory=list)

    @property
    def periods(self):
        lengths = np.array([len(w) for w in self.words] + [0])
        return lengths[self.word_index]

    @property
    def failed(self):
        return [s for s in self.statuses if not s.ok]

    def cell(self, i, j):
        index = int(self.word_index[i, j])
        return TongueCell(i=i, j=j, tau_R=float(self.grid.tau_values[j]), delta_R=float(self.grid.delta_values[i]),
                          period=len(self.words[index]) if index >= 0 else None,
                          word=self.words[index] if index >= 0 else None,
                          margin=float(self.margins[i, j]), spectral_radius=float(self.radii[i, j]))

    def cells(self):
        """Recorded cells in (row, column) order."""
        rows, cols = np.nonzero(self.word_index >= 0)
        return [self.cell(int(i), int(j)) for i, j in zip(rows, cols)]

    def to_frame(self):
        """Every cell as i, j, tau_R, delta_R, period (0 when no tongue is recorded)."""
        n_delta, n_tau = self.word_index.shape
        i, j = np.meshgrid(np.arange(n_delta), np.arange(n_tau), indexing='ij')
        return pd.DataFrame({
            'i': i.ravel(),
            'j': j.ravel(),
            'tau_R': self.grid.tau_values[j.ravel()],
            'delta_R': self.grid.delta_values[i.ravel()],
            'period': self.periods.ravel(),
        })

    def raster(self):
        return tongue_raster(self.grid.tau_values, self.grid.delta_values, self.periods)


def scan_tongues(grid, words=None, workers=1):
    """
    Highest stable admissible rotational period in every cell of ``grid``.

    Rows are scanned in blocks of ``grid.rows_per_task`` through the sweep
    engine; a failed block leaves its cells empty and is reported in the
    statuses.
    """
    if words is None:
        words = [w.word for w in enumerate_rotational(grid.period_cap, grid.spread)]
    words = sorted(words, key=len)
    n_delta, n_tau = grid.shape
    step = max(1, int(grid.rows_per_task))
    blocks = [(start, min(start + step, n_delta)) for start in range(0, n_delta, step)]
    logger.info('scanning %d x %d cells against %d words in %d blocks', n_delta, n_tau, len(words), len(blocks))
    results, statuses = run_tasks(_scan_block, [(grid, words, start, stop) for start, stop in blocks],
                                  workers=workers, names=[f'rows_{start}_{stop}' for start, stop in blocks])
    word_index = np.full((n_delta, n_tau), -1, dtype=int)
    margins = np.full((n_delta, n_tau), np.nan)
    radii = np.full((n_delta, n_tau), np.nan)
    for (start, stop), result in zip(blocks, results):
        if result is None:
            continue
        word_index[start:stop], margins[start:stop], radii[start:stop] = result
    return TongueGrid(grid=grid, words=words, word_index=word_index, margins=margins, radii=radii,
                      statuses=statuses)


def simulate_cell(grid, cell, rng, transient=1000, tol=1e-6):
    """
    Direct iteration from a random seed converges to the recorded orbit:
    after ``transient`` iterates the next point lies within ``tol`` of the orbit.
    """
    params = grid.params(cell.tau_R, cell.delta_R)
    spec = params.to_map()
    orbit = solve_periodic(spec, cell.word)
    scale = max(1.0, float(np.max(np.abs(orbit.points))))
    start = rng.uniform(-scale, scale, size=2)
    segment = iterate(spec, start, transient)
    if segment.escaped:
        return False
    distance = float(np.min(np.linalg.norm(orbit.points - segment.final, axis=1)))
    return distance < tol
