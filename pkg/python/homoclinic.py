"""
Homoclinic corners of a saddle fixed point.

The corner functional follows a kink of the unstable manifold forward until it
returns to the saddle's region and measures its signed distance to the local
stable eigenline.  A sign change of this functional over a parameter interval
brackets a homoclinic corner, which is refined with Brent's method and
continued along a curve in a parameter plane.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy import optimize

from python.errors import BracketError, BudgetError, EscapeError, NoKinkError, NumericError, PreconditionError
from python.manifolds import GrowthBudget, crossing_angle, grow_unstable
from python.normal_form import affine_fixed_point, saddle_eigenlines
from python.periodic import MAX_EXPANSIONS, expand_bracket
from python.pws_core import ESCAPE_RADIUS, border_collision_map, evaluate

logger = logging.getLogger(__name__)

CONFIRM = 20
MAX_RETURN = 1000
REGION_TOL = 1e-9


@dataclass(frozen=True)
class KinkProvenance:
    branch: int
    kink_index: int
    crossing: np.ndarray
    kink: np.ndarray

    def to_json(self):
        return {'branch': self.branch, 'kink_index': self.kink_index,
                'crossing': [float(v) for v in self.crossing], 'kink': [float(v) for v in self.kink]}


@dataclass(frozen=True)
class CornerDistance:
    value: float
    kink_id: KinkProvenance
    iterations_used: int
    point: np.ndarray
    confirmed: bool = True


def stable_line(saddle):
    """Point, unit direction and unit normal of E^s, the normal pointing to the v_u side."""
    normal = np.array([-saddle.v_s[1], saddle.v_s[0]])
    if float(np.dot(normal, saddle.v_u)) < 0:
        normal = -normal
    return saddle.point, saddle.v_s, normal


def signed_distance(saddle, p):
    point, _, normal = stable_line(saddle)
    return float(np.dot(normal, np.asarray(p) - point))


def _is_kink(spec, crossing, direction):
    """True when the pieces meeting at ``crossing`` send ``direction`` to different vectors."""
    labels = spec.region_of(crossing, tol=spec.tol)
    params = spec.param_dict
    images = [spec.piece(label).jacobian(crossing, params) @ direction for label in labels]
    return any(np.linalg.norm(a - b) > 1e-12 * (1.0 + np.linalg.norm(a)) for a in images for b in images)


def primary_kink(spec, saddle):
    """
    The switching crossing of the unstable eigenline nearest to the saddle and
    the kink it creates (its image).
    """
    _, unstable = saddle_eigenlines(saddle)
    options = [(t, 1) for t in (unstable.t_max,) if math.isfinite(t)]
    options += [(-t, -1) for t in (unstable.t_min,) if math.isfinite(t)]
    if not options:
        raise NoKinkError(f'unstable eigenline of the {saddle.side} fixed point never meets a switching curve')
    distance, branch = min(options)
    crossing = saddle.point + branch * distance * saddle.v_u
    if not _is_kink(spec, crossing, saddle.v_u):
        raise NoKinkError('pieces agree along the unstable direction: the manifold has no kink')
    return KinkProvenance(branch=branch, kink_index=0, crossing=crossing, kink=evaluate(spec, crossing)[0])


def tracked_kink(spec, saddle, kink_index=0, budget=None):
    """Kink number ``kink_index`` along the primary unstable branch."""
    first = primary_kink(spec, saddle)
    if kink_index == 0:
        return first
    polyline = grow_unstable(spec, saddle, budget or GrowthBudget(max_generations=12), branch=first.branch)
    kinks = polyline.kinks
    if kink_index >= len(kinks):
        raise BudgetError(f'only {len(kinks)} kinks grown, kink {kink_index} requested')
    return KinkProvenance(branch=first.branch, kink_index=kink_index, crossing=first.crossing,
                          kink=kinks[kink_index])


def _foot_confirmed(spec, saddle, p, confirm):
    """The projection of p onto E^s stays in the saddle's region for ``confirm`` iterates."""
    point, direction, _ = stable_line(saddle)
    foot = point + float(np.dot(np.asarray(p) - point, direction)) * direction
    for _ in range(confirm + 1):
        if spec.region_margin(foot, saddle.side) < -REGION_TOL:
            return False
        foot = evaluate(spec, foot)[0]
    return True


def kink_orbit(spec, kink, n, escape_radius=ESCAPE_RADIUS):
    points = [np.asarray(kink, dtype=float)]
    for i in range(n):
        points.append(evaluate(spec, points[-1])[0])
        if not np.all(np.isfinite(points[-1])) or np.linalg.norm(points[-1]) > escape_radius:
            raise EscapeError(f'kink orbit escaped after {i + 1} iterates', i + 1)
    return points


def detect_return(spec, saddle, kink, confirm=CONFIRM, max_return=MAX_RETURN):
    """First j >= 1 with f^j(kink) in the saddle's region and its E^s projection confirmed."""
    point = np.asarray(kink, dtype=float)
    for j in range(1, max_return + 1):
        point = evaluate(spec, point)[0]
        if not np.all(np.isfinite(point)) or np.linalg.norm(point) > ESCAPE_RADIUS:
            raise EscapeError(f'kink orbit escaped after {j} iterates', j)
        if spec.region_margin(point, saddle.side) >= -REGION_TOL and _foot_confirmed(spec, saddle, point, confirm):
            return j
    raise BudgetError(f'kink orbit did not settle near the {saddle.side} fixed point within {max_return} iterates')


def corner_distance(spec, saddle, budget=None, kink_index=0, return_index=None, confirm=CONFIRM):
    """
    Signed distance from the returning kink orbit to the local stable eigenline.

    With ``return_index`` given, the distance of that iterate is returned
    whether or not it lies in the saddle's region, which keeps the value
    continuous in the parameters.
    """
    kink = tracked_kink(spec, saddle, kink_index, budget)
    confirmed = True
    if return_index is None:
        return_index = detect_return(spec, saddle, kink.kink, confirm)
    else:
        confirmed = False
    point = kink_orbit(spec, kink.kink, return_index)[-1]
    return CornerDistance(value=signed_distance(saddle, point), kink_id=kink, iterations_used=return_index,
                          point=point, confirmed=confirmed)


def return_is_valid(spec, saddle, kink, return_index, tol=REGION_TOL):
    """The iterate ``return_index`` is the first one inside the saddle's region."""
    points = kink_orbit(spec, kink, return_index)
    if spec.region_margin(points[-1], saddle.side) < -tol:
        return False
    return all(spec.region_margin(p, saddle.side) < tol for p in points[1:-1])


@dataclass(frozen=True)
class _CornerFunctional:
    family: object
    saddle_side: str
    return_index: int
    kink_index: int = 0
    budget: GrowthBudget | None = None

    def saddle(self, value):
        spec = self.family(value)
        return spec, affine_fixed_point(spec, self.saddle_side)

    def __call__(self, value):
        spec, saddle = self.saddle(value)
        try:
            return corner_distance(spec, saddle, self.budget, self.kink_index, self.return_index).value
        except EscapeError:
            return math.nan


def _detect_index(family, saddle_side, values, kink_index=0, budget=None, confirm=CONFIRM):
    found = []
    for value in values:
        spec = family(value)
        saddle = affine_fixed_point(spec, saddle_side)
        try:
            kink = tracked_kink(spec, saddle, kink_index, budget)
            found.append(detect_return(spec, saddle, kink.kink, confirm))
        except NoKinkError:
            raise
        except NumericError as err:
            logger.debug('no return detected at %.10g: %s', value, err)
    if not found:
        raise BracketError('the kink orbit does not return to the saddle anywhere in the bracket')
    return min(found)


def locate_corner(family, bracket, saddle_side='L', kink_index=0, return_index=None, budget=None, xtol=1e-12):
    """
    Parameter of a homoclinic corner inside ``bracket`` for a one-parameter family.

    The return index is detected at the bracket ends and midpoint (the
    smallest one found) unless given; a family without kinks has no corner.
    """
    lo, hi = sorted(bracket)
    try:
        if return_index is None:
            return_index = _detect_index(family, saddle_side, (lo, 0.5 * (lo + hi), hi), kink_index, budget)
        functional = _CornerFunctional(family, saddle_side, return_index, kink_index, budget)
        f_lo, f_hi = functional(lo), functional(hi)
    except NoKinkError as err:
        raise BracketError(f'no homoclinic corner: {err}') from err
    if not (math.isfinite(f_lo) and math.isfinite(f_hi)) or np.sign(f_lo) == np.sign(f_hi):
        raise BracketError(f'corner distance does not change sign over [{lo}, {hi}] ({f_lo:.3g}, {f_hi:.3g})')
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    root = optimize.brentq(functional, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=200)
    logger.debug('corner at %.15g (return index %d)', root, return_index)
    return root


@dataclass(frozen=True)
class CornerLocus:
    names: tuple[str, str]
    samples: np.ndarray
    residuals: np.ndarray
    return_indices: np.ndarray
    stalled: bool = False
    messages: tuple[str, ...] = field(default_factory=tuple)

    def __len__(self):
        return len(self.samples)

    def to_frame(self):
        return pd.DataFrame({
            self.names[0]: self.samples[:, 0] if len(self.samples) else [],
            self.names[1]: self.samples[:, 1] if len(self.samples) else [],
            'residual': self.residuals,
        })


def _solve_on_line(line_family, saddle_side, predicted, width, return_index, kink_index, budget):
    functional = _CornerFunctional(line_family, saddle_side, return_index, kink_index, budget)
    lo, hi = expand_bracket(functional, predicted, width, MAX_EXPANSIONS)
    if lo == hi:
        return lo
    return optimize.brentq(functional, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=200)


def _continue_point(family2, first, predicted, width, return_index, saddle_side, kink_index, budget):
    """Corner on the line first = const, re-detecting the return index if the fixed one is invalid."""
    line = family2.fix(first)
    tried = set()
    while return_index not in tried:
        tried.add(return_index)
        second = _solve_on_line(line, saddle_side, predicted, width, return_index, kink_index, budget)
        spec = line(second)
        saddle = affine_fixed_point(spec, saddle_side)
        kink = tracked_kink(spec, saddle, kink_index, budget)
        if return_is_valid(spec, saddle, kink.kink, return_index):
            value = corner_distance(spec, saddle, budget, kink_index, return_index).value
            return second, value, return_index
        return_index = detect_return(spec, saddle, kink.kink)
        logger.debug('%s = %.6g: return index changes to %d', family2.names[0], first, return_index)
    raise BracketError(f'no valid corner near {family2.names[1]} = {predicted:.6g}')


def trace_corner_curve(family2, seed, step, span, saddle_side='L', kink_index=0, budget=None, seed_tol=1e-8):
    """
    Continue a homoclinic corner in the plane of the two family parameters.

    The first parameter is stepped by ``step`` in both directions from the seed
    within ``span``; the second one is predicted by the secant through the last
    two samples and re-solved.  A failed step stops that direction and flags
    the locus as stalled.
    """
    first0, second0 = seed
    messages = []
    try:
        spec = family2(first0, second0)
        saddle = affine_fixed_point(spec, saddle_side)
        kink = tracked_kink(spec, saddle, kink_index, budget)
        index0 = detect_return(spec, saddle, kink.kink)
        residual0 = corner_distance(spec, saddle, budget, kink_index, index0).value
        if abs(residual0) > seed_tol:
            raise BracketError(f'seed is not on a corner curve (distance {residual0:.3g})')
    except NumericError as err:
        logger.warning('corner continuation stalled at the seed: %s', err)
        return CornerLocus(names=family2.names, samples=np.empty((0, 2)), residuals=np.empty(0),
                           return_indices=np.empty(0, dtype=int), stalled=True, messages=(str(err),))

    lo, hi = sorted(span)
    samples = {first0: (second0, residual0, index0)}
    stalled = False
    for direction in (1, -1):
        history = [(first0, second0)]
        index = index0
        j = 1
        while True:
            first = first0 + direction * j * abs(step)
            if first < lo - 1e-12 or first > hi + 1e-12:
                break
            first = min(max(first, lo), hi)
            if len(history) >= 2:
                (u0, v0), (u1, v1) = history[-2], history[-1]
                predicted = v1 + (v1 - v0) * (first - u1) / (u1 - u0)
            else:
                predicted = history[-1][1]
            try:
                second, residual, index = _continue_point(family2, first, predicted, abs(step), index, saddle_side,
                                                          kink_index, budget)
            except NumericError as err:
                stalled = True
                messages.append(f'{family2.names[0]} = {first:.6g}: {err}')
                logger.warning('corner continuation stalled at %s = %.6g: %s', family2.names[0], first, err)
                break
            samples[first] = (second, residual, index)
            history.append((first, second))
            j += 1

    keys = sorted(samples)
    return CornerLocus(
        names=family2.names,
        samples=np.array([[key, samples[key][0]] for key in keys]),
        residuals=np.array([samples[key][1] for key in keys]),
        return_indices=np.array([samples[key][2] for key in keys], dtype=int),
        stalled=stalled,
        messages=tuple(messages),
    )


def check_extra_intersections(spec, saddle, return_index, samples=400, budget=None):
    """
    Points of the fundamental unstable segment between the crossing c and f(c)
    whose image after the kink's return iterates lies on E^s.

    Returns the sampled parameters s in (0, 1) of such extra crossings; an
    empty list means the corner is the only intersection.
    """
    kink = tracked_kink(spec, saddle, 0, budget)
    start = kink.crossing
    direction = kink.branch * saddle.v_u
    end = saddle.point + (start - saddle.point) * saddle.sigma
    if float(np.dot(end - start, direction)) < 0:
        end = start + (start - saddle.point) * abs(saddle.sigma)
    grid = np.linspace(0.0, 1.0, samples + 1)[1:-1]
    values = []
    for s in grid:
        point = start + s * (end - start)
        for _ in range(return_index + 1):
            point = evaluate(spec, point)[0]
        values.append(signed_distance(saddle, point))
    values = np.array(values)
    flips = np.flatnonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0)
    extra = [float(0.5 * (grid[i] + grid[i + 1])) for i in flips]
    if extra:
        logger.warning('%d extra intersections of the returning unstable segment with E^s', len(extra))
    return extra


@dataclass(frozen=True)
class TransversalityCertificate:
    fixed_point: np.ndarray
    side: str
    z_minus1: np.ndarray
    c_u: np.ndarray
    z_1: np.ndarray
    z_2: np.ndarray
    crossing: bool
    angle: float
    point: np.ndarray | None
    t: float | None
    s: float | None

    @property
    def segments(self):
        return (self.fixed_point, self.z_minus1), (self.z_1, self.z_2)

    def to_json(self):
        def vec(v):
            return None if v is None else [float(c) for c in v]

        return {
            'side': self.side, 'fixed_point': vec(self.fixed_point), 'z_minus1': vec(self.z_minus1),
            'c_u': vec(self.c_u), 'z_1': vec(self.z_1), 'z_2': vec(self.z_2), 'crossing': self.crossing,
            'angle': self.angle, 'point': vec(self.point), 't': self.t, 's': self.s,
        }


def _towards_switching(point, direction):
    return direction if direction[0] * point[0] < 0 else -direction


def transversality_certificate(reduced, xi_tilde, side=None):
    """
    Corner points of the manifolds of one fixed point of the reduced normal form
    and the crossing test between the stable segment [fixed point, z_{-1}] and
    the unstable segment [z_1, z_2].

    ``side`` defaults to the piece with positive trace (positive unstable eigenvalue).
    """
    spec = border_collision_map(reduced.tauX, reduced.deltaX, reduced.tauY, reduced.deltaY, xi_tilde,
                                labels=('X', 'Y'))
    fixed = {label: affine_fixed_point(spec, label) for label in ('X', 'Y')}
    inadmissible = [label for label, point in fixed.items() if not point.admissible]
    if inadmissible:
        raise PreconditionError(f'fixed points {inadmissible} are not admissible for xi = {xi_tilde}')
    if side is None:
        side = 'Y' if reduced.tauY > reduced.tauX else 'X'
    saddle = fixed[side]
    if not saddle.is_saddle:
        raise PreconditionError(f'fixed point of piece {side} is a {saddle.kind}, not a saddle')

    p = saddle.point
    v_s = _towards_switching(p, saddle.v_s)
    v_u = _towards_switching(p, saddle.v_u)
    z_minus1 = p - p[0] / v_s[0] * v_s
    c_u = p - p[0] / v_u[0] * v_u
    z_1 = evaluate(spec, c_u)[0]
    z_2 = evaluate(spec, z_1)[0]

    d_a = z_minus1 - p
    d_b = z_2 - z_1
    denom = d_a[0] * d_b[1] - d_a[1] * d_b[0]
    crossing, point, t, s, angle = False, None, None, None, crossing_angle(d_a, d_b)
    if denom != 0.0:
        diff = z_1 - p
        t = float((diff[0] * d_b[1] - diff[1] * d_b[0]) / denom)
        s = float((diff[0] * d_a[1] - diff[1] * d_a[0]) / denom)
        crossing = 0.0 <= t <= 1.0 and 0.0 <= s <= 1.0 and angle > 1e-6
        point = p + t * d_a
    logger.debug('certificate on %s: crossing=%s t=%s s=%s', side, crossing, t, s)
    return TransversalityCertificate(fixed_point=p, side=side, z_minus1=z_minus1, c_u=c_u, z_1=z_1, z_2=z_2,
                                     crossing=crossing, angle=angle, point=point, t=t, s=s)
