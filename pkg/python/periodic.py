"""
Periodic orbits of piecewise-smooth maps from their itineraries.

For affine pieces the orbit is the unique solution of the linear fixed-point
system of the composed map; admissibility is then a matter of checking every
orbit point against the closed region of its letter.  The module also builds
the single-round families that accumulate on a homoclinic corner, locates
their border-collision bifurcations and scans multi-round orbits for
stability.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import optimize

from python.errors import BracketError, NonUniqueOrbitError, NumericError
from python.normal_form import eigenvalues_from
from python.pws_core import as_point, check_itinerary, compose_along, evaluate
from python.sweep import run_tasks

logger = logging.getLogger(__name__)

CLOSURE_TOL = 1e-9
MAX_EXPANSIONS = 64


@dataclass(frozen=True)
class MapFamily:
    """One-parameter family obtained by varying the parameter ``name`` of ``base``."""

    base: object
    name: str

    def __call__(self, value):
        return self.base.with_params(**{self.name: value})


@dataclass(frozen=True)
class MapFamily2:
    base: object
    names: tuple[str, str]

    def __call__(self, first, second):
        return self.base.with_params(**{self.names[0]: first, self.names[1]: second})

    def fix(self, first):
        return MapFamily(self.base.with_params(**{self.names[0]: first}), self.names[1])


@dataclass(frozen=True)
class PeriodicOrbit:
    itinerary: str
    points: np.ndarray
    trace: float
    det: float
    eigenvalues: tuple
    margins: np.ndarray
    stability: str
    closure_residual: float

    @property
    def period(self):
        return len(self.itinerary)

    @property
    def admissibility_margin(self):
        return float(np.min(self.margins))

    @property
    def spectral_radius(self):
        return max(abs(v) for v in self.eigenvalues)

    def admissible(self, tol=1e-10):
        return self.admissibility_margin >= -tol


def stability_class(values, tol=1e-12):
    moduli = sorted(abs(v) for v in values)
    if any(math.isclose(m, 1.0, abs_tol=tol) for m in moduli):
        return 'nonhyperbolic'
    if moduli[1] < 1:
        return 'stable'
    if moduli[0] < 1:
        return 'saddle'
    return 'unstable'


def canonical_rotation(word):
    return min(word[i:] + word[:i] for i in range(len(word)))


def _rotation_shift(word):
    """Smallest i with word[i:] + word[:i] equal to the canonical rotation."""
    canonical = canonical_rotation(word)
    return next(i for i in range(len(word)) if word[i:] + word[:i] == canonical)


def _composed_det(spec, itin, p):
    """Determinant of the composition as the product of the per-letter determinants."""
    params = spec.param_dict
    point = as_point(p)
    det = 1.0
    for letter in itin:
        piece = spec.piece(letter)
        (a, b), (c, d) = piece.jacobian(point, params)
        det *= float(a * d - b * c)
        point = piece.value(point, params)
    return det


def _affine_composition(spec, itin):
    matrix = np.eye(2)
    offset = np.zeros(2)
    for letter in itin:
        a, b = spec.affine_part(letter)
        matrix = a @ matrix
        offset = a @ offset + b
    return matrix, offset


def solve_periodic(spec, itin, guess=None):
    """
    Periodic orbit following ``itin``.

    Affine words are solved exactly from (I - M) p = c for the composition
    p -> M p + c; other words use Newton iteration from ``guess``.
    """
    check_itinerary(spec, itin)
    if all(spec.piece(letter).is_affine for letter in itin):
        matrix, offset = _affine_composition(spec, itin)
        degeneracy = 1.0 - np.trace(matrix) + np.linalg.det(matrix)
        scale = max(1.0, abs(np.trace(matrix)), abs(np.linalg.det(matrix)))
        if abs(degeneracy) <= 1e-12 * scale:
            raise NonUniqueOrbitError(f'composition along {itin!r} has an eigenvalue 1')
        start = np.linalg.solve(np.eye(2) - matrix, offset)
    else:
        start = np.zeros(2) if guess is None else as_point(guess)

        def residual(p):
            image, jac = compose_along(spec, itin, p)
            return image - p, jac - np.eye(2)

        sol = optimize.root(residual, start, jac=True, method='hybr')
        if not sol.success:
            raise NonUniqueOrbitError(f'Newton iteration along {itin!r} failed: {sol.message}')
        start = sol.x

    params = spec.param_dict
    points = [start]
    for letter in itin:
        points.append(spec.piece(letter).value(points[-1], params))
    points = np.array(points)
    closure = float(np.linalg.norm(points[-1] - points[0]))
    points = points[:-1]
    # trace and det along the canonical rotation, so every rotation gives the same values
    shift = _rotation_shift(itin)
    canonical = itin[shift:] + itin[:shift]
    _, jac = compose_along(spec, canonical, points[shift])
    trace = float(np.trace(jac))
    det = _composed_det(spec, canonical, points[shift])
    values = eigenvalues_from(trace, det)
    margins = np.array([spec.region_margin(p, letter) for p, letter in zip(points, itin)])
    return PeriodicOrbit(itinerary=itin, points=points, trace=trace, det=det, eigenvalues=values,
                         margins=margins, stability=stability_class(values), closure_residual=closure)


def branch_letter(spec, branch):
    """Letter used at the split index: X is the smaller label, Y the other one."""
    if branch in spec.labels:
        return branch
    if branch not in ('X', 'Y'):
        raise ValueError(f"branch must be 'X', 'Y' or a piece label, got {branch!r}")
    ordered = sorted(spec.labels)
    return ordered[0] if branch == 'X' else ordered[1]


def round_word(saddle_label, excursion_word, switch_index, letter, k):
    word = excursion_word[:switch_index] + letter + excursion_word[switch_index + 1:]
    return saddle_label * k + word


@dataclass(frozen=True)
class SingleRoundFamily:
    excursion_word: str
    branch: str
    k: int
    switch_index: int
    saddle_label: str
    orbit: PeriodicOrbit | None = None
    bcb_parameter: float | None = None
    letter: str = ''

    @property
    def r(self):
        return len(self.excursion_word)

    @property
    def period(self):
        return self.k + self.r

    @property
    def itinerary(self):
        return round_word(self.saddle_label, self.excursion_word, self.switch_index, self.letter, self.k)

    @property
    def switch_point(self):
        """Index of the orbit point that lies on the switching manifold at the bifurcation."""
        return self.k + self.switch_index


def find_single_round(spec, saddle, excursion_word, branch, k, switch_index=0):
    """
    Single-round orbit: k saddle letters followed by the excursion word with the
    branch letter substituted at ``switch_index``.  ``saddle`` may be None when k = 0.
    """
    if k < 0 or not 0 <= switch_index < len(excursion_word):
        raise ValueError('need k >= 0 and a split index inside the excursion word')
    if k > 0 and saddle is None:
        raise ValueError('a saddle is required for k > 0')
    family = SingleRoundFamily(excursion_word=excursion_word, branch=branch, k=k, switch_index=switch_index,
                               saddle_label=saddle.side if saddle is not None else '',
                               letter=branch_letter(spec, branch))
    return replace(family, orbit=solve_periodic(spec, family.itinerary))


def excursion_from_corner(spec, saddle, corner):
    """
    Excursion word realised by the corner orbit: the letter at the eigenline
    crossing (the split index 0) followed by the letters of the kink orbit up
    to its return to the saddle's region.
    """
    point = corner.kink_id.crossing
    letters = [spec.select(point)]
    point = corner.kink_id.kink
    for _ in range(corner.iterations_used):
        letter = spec.select(point)
        letters.append(letter)
        point = evaluate(spec, point)[0]
    word = ''.join(letters)
    logger.debug('excursion word %s from the %s saddle', word, saddle.side)
    return word, 0


def _switch_margin(family_fn, seed, value):
    try:
        orbit = solve_periodic(family_fn(value), seed.itinerary)
    except NonUniqueOrbitError:
        return math.nan
    return float(orbit.margins[seed.switch_point])


def expand_bracket(func, x0, step, max_expansions=MAX_EXPANSIONS):
    """Nearest sign change of ``func`` around x0 by geometric expansion in both directions."""
    f0 = func(x0)
    if f0 == 0.0:
        return x0, x0
    last = {1: (x0, f0), -1: (x0, f0)}
    h = abs(step)
    for _ in range(max_expansions):
        for direction in (1, -1):
            candidate = x0 + direction * h
            fc = func(candidate)
            if not math.isfinite(fc):
                continue
            prev_x, prev_f = last[direction]
            if math.isfinite(prev_f) and np.sign(fc) != np.sign(prev_f):
                return tuple(sorted((prev_x, candidate)))
            last[direction] = (candidate, fc)
        h *= 2.0
    raise BracketError(f'no sign change found within {max_expansions} expansions around {x0}')


def _root_in(func, bracket, xtol, what):
    lo, hi = bracket
    if lo == hi:
        return lo
    f_lo, f_hi = func(lo), func(hi)
    if not (math.isfinite(f_lo) and math.isfinite(f_hi)) or np.sign(f_lo) == np.sign(f_hi):
        raise BracketError(f'{what}: no sign change over [{lo}, {hi}]')
    root = optimize.brentq(func, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=200)
    if not abs(func(root)) <= 1e-8:
        raise BracketError(f'{what}: sign change over [{lo}, {hi}] is a pole, not a root')
    return root


def locate_bcb(family_fn, seed, xi0=None, step=1e-3, bracket=None, xtol=1e-13):
    """
    Parameter at which the switching point of the family's orbit reaches the
    switching manifold.

    Either an explicit ``bracket`` or a seed value ``xi0`` (expanded
    geometrically from ``step``) must be given.
    """

    def func(value):
        return _switch_margin(family_fn, seed, value)

    if bracket is None:
        if xi0 is None:
            raise ValueError('locate_bcb needs a bracket or a seed parameter')
        bracket = expand_bracket(func, xi0, step)
    return _root_in(func, bracket, xtol, f'border collision of {seed.itinerary}')


def at_parameter(family_fn, seed, value):
    """The family re-solved at ``value`` and tagged with it as its bifurcation parameter."""
    return replace(seed, orbit=solve_periodic(family_fn(value), seed.itinerary), bcb_parameter=value)


@dataclass(frozen=True)
class BcbRecord:
    n: int
    branch: str
    xi: float
    x_on_switching: float
    trace: float
    det: float
    ok: bool = True
    message: str = ''


def bcb_sequence(family_fn, saddle, excursion_word, periods, corner, first_seed, switch_index=0, ratio=None):
    """
    Bifurcation values of the single-round families for each period in ``periods``.

    Each seed is predicted from the previous value by geometric accumulation
    on ``corner`` with ratio ``ratio`` (default the saddle's unstable
    eigenvalue, refined from the last two values once available).
    """
    ratio = abs(saddle.sigma) if ratio is None else ratio
    records = []
    found = []
    for n in periods:
        k = n - len(excursion_word)
        if found:
            guess_ratio = ratio
            if len(found) >= 2 and (found[-1] - corner) != 0:
                guess_ratio = (found[-2] - corner) / (found[-1] - corner)
            seed_value = corner + (found[-1] - corner) / guess_ratio
            step = abs(found[-1] - corner) * 0.05 or 1e-6
        else:
            seed_value = first_seed
            step = abs(first_seed - corner) * 0.05 or 1e-3
        try:
            spec = family_fn(seed_value)
            seed = find_single_round(spec, saddle, excursion_word, 'X', k, switch_index)
            value = locate_bcb(family_fn, seed, seed_value, step=step)
        except NumericError as err:
            logger.warning('period %d: no border collision found (%s)', n, err)
            records.extend(BcbRecord(n, branch, math.nan, math.nan, math.nan, math.nan, ok=False, message=str(err))
                           for branch in ('X', 'Y'))
            continue
        found.append(value)
        spec = family_fn(value)
        for branch in ('X', 'Y'):
            family = find_single_round(spec, saddle, excursion_word, branch, k, switch_index)
            orbit = family.orbit
            records.append(BcbRecord(n, branch, value, float(orbit.points[family.switch_point][0]),
                                     orbit.trace, orbit.det))
        logger.info('period %d: border collision at %.15g', n, value)
    return records


def scaling_ratios(values, corner):
    """(v_n - corner)/(v_{n+1} - corner) for consecutive values."""
    values = np.asarray(values, dtype=float)
    offsets = values - corner
    return offsets[:-1] / offsets[1:]


def scaling_slope(periods, values, corner):
    """Slope of log|v_n - corner| against n (approximately -log of the ratio)."""
    slope, _ = np.polyfit(np.asarray(periods, dtype=float), np.log(np.abs(np.asarray(values) - corner)), 1)
    return float(slope)


@dataclass(frozen=True)
class MultiRoundSpec:
    branches: tuple[str, ...]
    ks: tuple[int, ...]

    def __post_init__(self):
        if len(self.branches) != len(self.ks) or not self.ks:
            raise ValueError('need one branch and one k per round, q >= 1')
        if any(k < 1 for k in self.ks):
            raise ValueError('every round needs k >= 1')

    @property
    def q(self):
        return len(self.ks)

    def period(self, r):
        return sum(self.ks) + self.q * r

    def itinerary(self, spec, saddle_label, excursion_word, switch_index=0):
        return ''.join(round_word(saddle_label, excursion_word, switch_index, branch_letter(spec, branch), k)
                       for branch, k in zip(self.branches, self.ks))


def _canonical_rounds(rounds):
    return min(rounds[i:] + rounds[:i] for i in range(len(rounds)))


def enumerate_multi_round(max_q, max_period, r):
    """All q-round specs up to cyclic rotation of the rounds, q <= max_q and period <= max_period."""
    seen = set()
    specs = []
    for q in range(1, max_q + 1):
        budget = max_period - q * r
        if budget < q:
            break
        for ks in itertools.product(range(1, budget + 1), repeat=q):
            if sum(ks) > budget:
                continue
            for branches in itertools.product('XY', repeat=q):
                key = _canonical_rounds(tuple(zip(ks, branches)))
                if key in seen:
                    continue
                seen.add(key)
                specs.append(MultiRoundSpec(branches=tuple(b for _, b in key), ks=tuple(k for k, _ in key)))
    return specs


@dataclass(frozen=True)
class InstabilityEntry:
    itinerary: str
    q: int
    period: int
    parameter: float
    spectral_radius: float
    margin: float
    stability: str

    @property
    def flagged(self):
        return self.spectral_radius <= 1.0


@dataclass(frozen=True)
class InstabilityReport:
    entries: tuple[InstabilityEntry, ...]
    parameters: tuple[float, ...]
    candidates: int

    @property
    def flagged(self):
        return tuple(entry for entry in self.entries if entry.flagged)


def _scan_sample(family_fn, value, saddle_label, excursion_word, switch_index, specs, tol):
    spec = family_fn(value)
    found = []
    for multi in specs:
        itin = multi.itinerary(spec, saddle_label, excursion_word, switch_index)
        try:
            orbit = solve_periodic(spec, itin)
        except NonUniqueOrbitError:
            continue
        if orbit.admissible(tol):
            found.append(InstabilityEntry(itin, multi.q, orbit.period, value, orbit.spectral_radius,
                                          orbit.admissibility_margin, orbit.stability))
    return found


def scan_periodic_instability(family_fn, saddle, excursion_word, max_q, max_period, window, switch_index=0,
                              workers=1, tol=1e-10):
    """
    Solve every multi-round orbit with q <= max_q and period <= max_period at the
    sampled parameters ``window = (lo, hi, samples)`` and report the admissible ones.
    """
    lo, hi, samples = window
    values = np.linspace(lo, hi, int(samples)) if samples > 1 else np.array([lo])
    specs = enumerate_multi_round(max_q, max_period, len(excursion_word))
    logger.info('instability scan: %d candidate itineraries at %d parameter values', len(specs), len(values))
    results, statuses = run_tasks(
        _scan_sample,
        [(family_fn, float(v), saddle.side, excursion_word, switch_index, specs, tol) for v in values],
        workers=workers, names=[f'sample_{v:.6g}' for v in values])
    failed = [status for status in statuses if not status.ok]
    if failed:
        raise NumericError(f'instability scan failed at {len(failed)} parameter values: {failed[0].message}')
    entries = sorted(itertools.chain.from_iterable(results), key=lambda e: (e.period, e.itinerary, e.parameter))
    return InstabilityReport(entries=tuple(entries), parameters=tuple(float(v) for v in values),
                             candidates=len(specs))
