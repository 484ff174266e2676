"""
Piecewise-smooth continuous planar maps.

A map is an ordered set of polynomial pieces (total degree <= 3) together with
switching polynomials h_i(x, y).  Each piece owns a region given as a list of
(switching index, side) constraints, side = -1 meaning h_i <= 0 and side = +1
meaning h_i >= 0.  Regions are closed: points on a switching curve carry every
adjacent label and realized itineraries resolve the tie with the
lexicographically smallest label.

Maps whose pieces are all affine and whose switching curves are all lines are
evaluated through a plain-float kernel, which is what long orbits and Lyapunov
exponents use.
"""
from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, replace

import numpy as np
import pandas as pd
from scipy import optimize

from python.errors import ConfigError, EscapeError, InvalidPointError, NonInvertibleError

logger = logging.getLogger(__name__)

CONTINUITY_TOL = 1e-10
ESCAPE_RADIUS = 1e6
MAX_DEGREE = 3


@dataclass(frozen=True)
class Coefficient:
    """Sum of ``scale * prod(params[name])`` terms, an empty product being a constant."""

    terms: tuple[tuple[float, tuple[str, ...]], ...] = ()

    @classmethod
    def const(cls, value):
        return cls(((float(value), ()),))

    @classmethod
    def param(cls, name, scale=1.0):
        return cls(((float(scale), (name,)),))

    def __add__(self, other):
        return Coefficient(self.terms + other.terms)

    def scaled(self, factor):
        return Coefficient(tuple((scale * factor, names) for scale, names in self.terms))

    def times_param(self, name):
        return Coefficient(tuple((scale, (*names, name)) for scale, names in self.terms))

    def names(self):
        return {name for _, names in self.terms for name in names}

    def value(self, params):
        total = 0.0
        for scale, names in self.terms:
            prod = scale
            for name in names:
                prod *= params[name]
            total += prod
        return total

    def derivative(self, params, name):
        total = 0.0
        for scale, names in self.terms:
            count = names.count(name)
            if count == 0:
                continue
            rest = list(names)
            rest.remove(name)
            prod = scale * count
            for other in rest:
                prod *= params[other]
            total += prod
        return total

    def to_json(self):
        if all(not names for _, names in self.terms):
            return sum(scale for scale, _ in self.terms)
        if len(self.terms) == 1 and self.terms[0][0] == 1.0 and len(self.terms[0][1]) == 1:
            return self.terms[0][1][0]
        return [[scale, *names] for scale, names in self.terms]

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, bool):
            raise ConfigError(f'invalid coefficient {obj!r}')
        if isinstance(obj, (int, float)):
            return cls.const(obj)
        if isinstance(obj, str):
            return cls.param(obj)
        if isinstance(obj, list):
            terms = []
            for term in obj:
                if isinstance(term, (int, float)) and not isinstance(term, bool):
                    terms.append((float(term), ()))
                elif (isinstance(term, list) and term and isinstance(term[0], (int, float))
                      and all(isinstance(name, str) for name in term[1:])):
                    terms.append((float(term[0]), tuple(term[1:])))
                else:
                    raise ConfigError(f'invalid coefficient term {term!r}')
            return cls(tuple(terms))
        raise ConfigError(f'invalid coefficient {obj!r}')


def _poly_value(terms, params, x, y):
    total = 0.0
    for i, j, coef in terms:
        total += coef.value(params) * x**i * y**j
    return total


def _poly_gradient(terms, params, x, y):
    gx = 0.0
    gy = 0.0
    for i, j, coef in terms:
        c = coef.value(params)
        if i:
            gx += c * i * x ** (i - 1) * y**j
        if j:
            gy += c * j * x**i * y ** (j - 1)
    return gx, gy


def _poly_degree(terms):
    return max((i + j for i, j, _ in terms), default=0)


def _monomial_coefficient(terms, params, i, j):
    return sum(coef.value(params) for ti, tj, coef in terms if (ti, tj) == (i, j))


def _terms_to_json(terms):
    return [[i, j, coef.to_json()] for i, j, coef in terms]


def _terms_from_json(obj, where):
    if not isinstance(obj, list):
        raise ConfigError(f'{where}: expected a list of [i, j, coefficient] monomials')
    terms = []
    for item in obj:
        if not (isinstance(item, list) and len(item) == 3 and isinstance(item[0], int) and isinstance(item[1], int)):
            raise ConfigError(f'{where}: invalid monomial {item!r}')
        terms.append((item[0], item[1], Coefficient.from_json(item[2])))
    return tuple(terms)


@dataclass(frozen=True)
class SwitchingCurve:
    terms: tuple[tuple[int, int, Coefficient], ...]

    def value(self, p, params):
        return _poly_value(self.terms, params, p[0], p[1])

    def gradient(self, p, params):
        return _poly_gradient(self.terms, params, p[0], p[1])

    @property
    def is_linear(self):
        return _poly_degree(self.terms) <= 1

    def linear_coefficients(self, params):
        return (_monomial_coefficient(self.terms, params, 0, 0),
                _monomial_coefficient(self.terms, params, 1, 0),
                _monomial_coefficient(self.terms, params, 0, 1))


@dataclass(frozen=True)
class PolynomialPiece:
    """
    One smooth piece of a map.

    Args:
    ----
        label (string): single character used in itineraries
        x_terms (tuple): monomials (i, j, Coefficient) of the first image component
        y_terms (tuple): monomials of the second image component
        region (tuple): (switching index, side) constraints defining the closed region
    """

    label: str
    x_terms: tuple[tuple[int, int, Coefficient], ...]
    y_terms: tuple[tuple[int, int, Coefficient], ...]
    region: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if len(self.label) != 1:
            raise ValueError(f'piece label must be a single character, got {self.label!r}')
        if max(_poly_degree(self.x_terms), _poly_degree(self.y_terms)) > MAX_DEGREE:
            raise ValueError(f'piece {self.label}: total degree above {MAX_DEGREE}')
        for _, side in self.region:
            if side not in (-1, 1):
                raise ValueError(f'piece {self.label}: region side must be -1 or +1')

    @property
    def degree(self):
        return max(_poly_degree(self.x_terms), _poly_degree(self.y_terms))

    @property
    def is_affine(self):
        return self.degree <= 1

    def value(self, p, params):
        x, y = p
        return np.array([_poly_value(self.x_terms, params, x, y), _poly_value(self.y_terms, params, x, y)])

    def jacobian(self, p, params):
        x, y = p
        return np.array([_poly_gradient(self.x_terms, params, x, y), _poly_gradient(self.y_terms, params, x, y)])

    def param_derivative(self, p, params, name):
        x, y = p
        return np.array([
            sum(coef.derivative(params, name) * x**i * y**j for i, j, coef in self.x_terms),
            sum(coef.derivative(params, name) * x**i * y**j for i, j, coef in self.y_terms),
        ])

    def affine(self, params):
        if not self.is_affine:
            raise ValueError(f'piece {self.label} is not affine')
        matrix = np.array([
            [_monomial_coefficient(self.x_terms, params, 1, 0), _monomial_coefficient(self.x_terms, params, 0, 1)],
            [_monomial_coefficient(self.y_terms, params, 1, 0), _monomial_coefficient(self.y_terms, params, 0, 1)],
        ])
        offset = np.array([_monomial_coefficient(self.x_terms, params, 0, 0),
                           _monomial_coefficient(self.y_terms, params, 0, 0)])
        return matrix, offset

    def names(self):
        return set().union(*(coef.names() for _, _, coef in self.x_terms + self.y_terms))


class _AffineKernel:
    """Plain-float evaluation of an affine map with straight switching lines."""

    def __init__(self, spec):
        params = spec.param_dict
        self.entries = []
        for label in sorted(spec.labels):
            piece = spec.piece(label)
            matrix, offset = piece.affine(params)
            rows = []
            for idx, side in piece.region:
                c0, cx, cy = spec.switching[idx].linear_coefficients(params)
                norm = math.hypot(cx, cy) or 1.0
                rows.append((side * c0 / norm, side * cx / norm, side * cy / norm))
            self.entries.append((label, *(float(v) for v in matrix.ravel()), float(offset[0]), float(offset[1]),
                                 tuple(rows)))
        self.by_label = {entry[0]: entry for entry in self.entries}

    def select(self, x, y):
        best = None
        best_margin = -math.inf
        for entry in self.entries:
            margin = min((c0 + cx * x + cy * y for c0, cx, cy in entry[7]), default=math.inf)
            if margin >= 0.0:
                return entry
            if margin > best_margin:
                best, best_margin = entry, margin
        return best

    @staticmethod
    def apply(entry, x, y):
        return entry[1] * x + entry[2] * y + entry[5], entry[3] * x + entry[4] * y + entry[6]


@dataclass(frozen=True)
class PwsMapSpec:
    """Continuous piecewise-smooth planar map with named real parameters."""

    pieces: tuple[PolynomialPiece, ...]
    switching: tuple[SwitchingCurve, ...]
    params: tuple[tuple[str, float], ...] = ()
    kind: str = 'polynomial'
    tol: float = CONTINUITY_TOL

    def __post_init__(self):
        labels = [piece.label for piece in self.pieces]
        if len(set(labels)) != len(labels):
            raise ValueError(f'duplicate piece labels: {labels}')
        known = {name for name, _ in self.params}
        for piece in self.pieces:
            for idx, _ in piece.region:
                if not 0 <= idx < len(self.switching):
                    raise ValueError(f'piece {piece.label}: switching index {idx} out of range')
            missing = piece.names() - known
            if missing:
                raise ValueError(f'piece {piece.label}: unknown parameters {sorted(missing)}')
        for value in self.param_dict.values():
            if not math.isfinite(value):
                raise InvalidPointError('map parameters must be finite')

    @functools.cached_property
    def param_dict(self):
        return dict(self.params)

    @functools.cached_property
    def _pieces_by_label(self):
        return {piece.label: piece for piece in self.pieces}

    @property
    def labels(self):
        return tuple(piece.label for piece in self.pieces)

    @property
    def is_affine(self):
        return all(piece.is_affine for piece in self.pieces) and all(curve.is_linear for curve in self.switching)

    @functools.cached_property
    def affine_kernel(self):
        return _AffineKernel(self) if self.is_affine else None

    def piece(self, label):
        try:
            return self._pieces_by_label[label]
        except KeyError:
            raise ValueError(f'unknown piece label {label!r}; map has {self.labels}') from None

    def with_params(self, **values):
        current = self.param_dict
        unknown = set(values) - set(current)
        if unknown:
            raise ValueError(f'unknown parameters {sorted(unknown)}')
        return replace(self, params=tuple((name, float(values.get(name, value))) for name, value in self.params))

    def affine_part(self, label):
        return self.piece(label).affine(self.param_dict)

    def region_margin(self, p, label):
        """Signed distance-like margin of p inside the closed region of ``label`` (>= 0 inside)."""
        params = self.param_dict
        margin = math.inf
        for idx, side in self.piece(label).region:
            curve = self.switching[idx]
            gx, gy = curve.gradient(p, params)
            norm = math.hypot(gx, gy) or 1.0
            margin = min(margin, side * curve.value(p, params) / norm)
        return margin

    def region_of(self, p, tol=0.0):
        labels = tuple(label for label in self.labels if self.region_margin(p, label) >= -tol)
        if labels:
            return labels
        return (max(self.labels, key=lambda label: self.region_margin(p, label)),)

    def select(self, p):
        """Label used for the realized itinerary at p (smallest label on boundaries)."""
        kernel = self.affine_kernel
        if kernel is not None:
            return kernel.select(float(p[0]), float(p[1]))[0]
        return min(self.region_of(p))

    def continuity_defect(self, p):
        images = [self.piece(label).value(p, self.param_dict) for label in self.region_of(p, tol=self.tol)]
        return max((float(np.max(np.abs(a - b))) for a in images for b in images), default=0.0)

    def segment_crossings(self, a, b):
        """Sorted parameters t in (0, 1) where a + t (b - a) crosses a switching curve."""
        params = self.param_dict
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        found = []
        for curve in self.switching:
            ha = curve.value(a, params)
            hb = curve.value(b, params)
            if curve.is_linear:
                if ha * hb < 0.0:
                    found.append(ha / (ha - hb))
                continue
            grid = np.linspace(0.0, 1.0, 17)
            values = [curve.value(a + t * (b - a), params) for t in grid]
            for t0, t1, h0, h1 in zip(grid[:-1], grid[1:], values[:-1], values[1:]):
                if h0 * h1 < 0.0:
                    found.append(optimize.brentq(lambda t: curve.value(a + t * (b - a), params), t0, t1, xtol=1e-15))
        return sorted(t for t in found if 0.0 < t < 1.0)

    def invert_piece(self, label, q, guess=None):
        """Point p with piece(label)(p) = q, ignoring regions."""
        piece = self.piece(label)
        q = np.asarray(q, dtype=float)
        if piece.is_affine:
            matrix, offset = piece.affine(self.param_dict)
            if abs(np.linalg.det(matrix)) < 1e-300:
                raise NonInvertibleError(f'piece {label} is not invertible')
            return np.linalg.solve(matrix, q - offset)
        params = self.param_dict
        start = q if guess is None else np.asarray(guess, dtype=float)
        sol = optimize.root(lambda p: piece.value(p, params) - q, start,
                            jac=lambda p: piece.jacobian(p, params), method='hybr')
        if not sol.success:
            raise NonInvertibleError(f'piece {label}: no preimage found ({sol.message})')
        return sol.x

    def preimages(self, q, guess=None):
        """All (label, p) with p in the closed region of label and piece(label)(p) = q."""
        found = []
        for label in self.labels:
            try:
                p = self.invert_piece(label, q, guess)
            except NonInvertibleError:
                continue
            if self.region_margin(p, label) >= -self.tol:
                found.append((label, p))
        return found


def as_point(p):
    point = np.asarray(p, dtype=float).reshape(-1)
    if point.shape != (2,) or not np.all(np.isfinite(point)):
        raise InvalidPointError(f'expected a finite planar point, got {p!r}')
    return point


def check_itinerary(spec, itin):
    if not itin:
        raise ValueError('itinerary must contain at least one letter')
    unknown = set(itin) - set(spec.labels)
    if unknown:
        raise ValueError(f'itinerary {itin!r} uses labels {sorted(unknown)} not in {spec.labels}')
    return itin


def evaluate(spec, p):
    """Image of p and the label of the piece used."""
    x, y = as_point(p)
    kernel = spec.affine_kernel
    if kernel is not None:
        entry = kernel.select(x, y)
        return np.array(kernel.apply(entry, x, y)), entry[0]
    label = spec.select((x, y))
    return spec.piece(label).value((x, y), spec.param_dict), label


def compose_along(spec, itin, p):
    """
    Apply the pieces of ``itin`` in order, regardless of where the points fall.

    Returns the final point and the chain-rule product of the piece Jacobians.
    """
    check_itinerary(spec, itin)
    point = as_point(p)
    jac = np.eye(2)
    params = spec.param_dict
    for letter in itin:
        piece = spec.piece(letter)
        jac = piece.jacobian(point, params) @ jac
        point = piece.value(point, params)
    return point, jac


@dataclass(frozen=True)
class OrbitSegment:
    points: np.ndarray
    itinerary: str
    final_label: str
    escaped: bool = False
    escape_index: int | None = None

    def __len__(self):
        return len(self.points)

    @property
    def final(self):
        return self.points[-1]

    @property
    def labels(self):
        return self.itinerary + self.final_label

    def to_frame(self, start=0):
        points = self.points[start:]
        return pd.DataFrame({
            'i': np.arange(start, start + len(points)),
            'x': points[:, 0],
            'y': points[:, 1],
            'label': list(self.labels[start:]),
        })


def iterate(spec, p, n, escape_radius=ESCAPE_RADIUS):
    """Forward orbit of p with its realized itinerary, stopping once the norm exceeds escape_radius."""
    if n < 0 or escape_radius <= 0:
        raise ValueError('iterate needs n >= 0 and escape_radius > 0')
    x, y = as_point(p)
    points = [(x, y)]
    letters = []
    escape_index = None
    if math.hypot(x, y) > escape_radius:
        escape_index = 0
    kernel = spec.affine_kernel
    params = spec.param_dict
    step = 0
    while escape_index is None and step < n:
        if kernel is not None:
            entry = kernel.select(x, y)
            letters.append(entry[0])
            x, y = kernel.apply(entry, x, y)
        else:
            label = spec.select((x, y))
            letters.append(label)
            x, y = spec.piece(label).value((x, y), params)
            x, y = float(x), float(y)
        points.append((x, y))
        step += 1
        if not (math.isfinite(x) and math.isfinite(y)) or math.hypot(x, y) > escape_radius:
            escape_index = step
    final_label = spec.select((x, y)) if math.isfinite(x) and math.isfinite(y) else ''
    return OrbitSegment(np.array(points, dtype=float).reshape(-1, 2), ''.join(letters), final_label,
                        escaped=escape_index is not None, escape_index=escape_index)


def lyapunov_exponent(spec, p, n_transient, n_sample, escape_radius=ESCAPE_RADIUS):
    """
    Largest Lyapunov exponent from the growth of a tangent vector.

    The vector is renormalised at every step and the logarithms of the growth
    factors are averaged over ``n_sample`` iterates following the transient.
    """
    transient = iterate(spec, p, n_transient, escape_radius)
    if transient.escaped:
        raise EscapeError(f'orbit escaped during the transient at step {transient.escape_index}',
                          transient.escape_index)
    x, y = (float(v) for v in transient.final)
    vx, vy = math.sqrt(0.5), math.sqrt(0.5)
    kernel = spec.affine_kernel
    params = spec.param_dict
    total = 0.0
    for step in range(n_sample):
        if kernel is not None:
            entry = kernel.select(x, y)
            a, b, c, d = entry[1:5]
            x, y = kernel.apply(entry, x, y)
        else:
            piece = spec.piece(spec.select((x, y)))
            (a, b), (c, d) = piece.jacobian((x, y), params)
            x, y = (float(v) for v in piece.value((x, y), params))
        vx, vy = a * vx + b * vy, c * vx + d * vy
        norm = math.hypot(vx, vy)
        if norm == 0.0:
            return -math.inf
        total += math.log(norm)
        vx /= norm
        vy /= norm
        if not (math.isfinite(x) and math.isfinite(y)) or math.hypot(x, y) > escape_radius:
            raise EscapeError(f'orbit escaped while sampling at step {n_transient + step + 1}',
                              n_transient + step + 1)
    return total / n_sample


def border_collision_map(tau_L, delta_L, tau_R, delta_R, mu, labels=('L', 'R')):
    """
    The border-collision normal form x' = tau x + y + mu, y' = -delta x.

    The first label applies for x <= 0 and the second for x >= 0.  Parameters
    are named ``tau_<label>``, ``delta_<label>`` and ``mu``.
    """
    left, right = labels
    pieces = []
    for label, side in ((left, -1), (right, 1)):
        pieces.append(PolynomialPiece(
            label=label,
            x_terms=((1, 0, Coefficient.param(f'tau_{label}')), (0, 1, Coefficient.const(1.0)),
                     (0, 0, Coefficient.param('mu'))),
            y_terms=((1, 0, Coefficient.param(f'delta_{label}', -1.0)),),
            region=((0, side),),
        ))
    params = ((f'tau_{left}', float(tau_L)), (f'delta_{left}', float(delta_L)),
              (f'tau_{right}', float(tau_R)), (f'delta_{right}', float(delta_R)), ('mu', float(mu)))
    switching = (SwitchingCurve(((1, 0, Coefficient.const(1.0)),)),)
    return PwsMapSpec(pieces=tuple(pieces), switching=switching, params=params, kind='bcnf')


def map_to_json(spec):
    if spec.kind == 'bcnf':
        doc = {'kind': 'bcnf', **spec.param_dict}
        left, right = spec.labels
        if (left, right) != ('L', 'R'):
            doc['labels'] = [left, right]
        else:
            doc = {'kind': 'bcnf', 'tau_L': doc['tau_L'], 'delta_L': doc['delta_L'],
                   'tau_R': doc['tau_R'], 'delta_R': doc['delta_R'], 'mu': doc['mu']}
        return doc
    return {
        'kind': 'polynomial',
        'params': spec.param_dict,
        'switching': [_terms_to_json(curve.terms) for curve in spec.switching],
        'pieces': [
            {'label': piece.label, 'x': _terms_to_json(piece.x_terms), 'y': _terms_to_json(piece.y_terms),
             'region': [list(item) for item in piece.region]}
            for piece in spec.pieces
        ],
    }


def map_from_json(doc, where='map'):
    if not isinstance(doc, dict):
        raise ConfigError(f'{where}: expected an object')
    kind = doc.get('kind')
    if kind == 'bcnf':
        labels = doc.get('labels', ['L', 'R'])
        if not (isinstance(labels, list) and len(labels) == 2 and all(isinstance(s, str) and len(s) == 1 for s in labels)):
            raise ConfigError(f'{where}.labels: expected two single-character labels')
        left, right = labels
        values = {}
        for key in (f'tau_{left}', f'delta_{left}', f'tau_{right}', f'delta_{right}', 'mu'):
            value = doc.get(key)
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ConfigError(f'{where}.{key}: expected a finite number, got {value!r}')
            values[key] = float(value)
        return border_collision_map(values[f'tau_{left}'], values[f'delta_{left}'], values[f'tau_{right}'],
                                    values[f'delta_{right}'], values['mu'], labels=(left, right))
    if kind == 'polynomial':
        params = doc.get('params', {})
        if not isinstance(params, dict):
            raise ConfigError(f'{where}.params: expected an object of name: value')
        switching = tuple(SwitchingCurve(_terms_from_json(item, f'{where}.switching[{i}]'))
                          for i, item in enumerate(doc.get('switching', [])))
        pieces = []
        for i, item in enumerate(doc.get('pieces', [])):
            try:
                pieces.append(PolynomialPiece(
                    label=item['label'],
                    x_terms=_terms_from_json(item['x'], f'{where}.pieces[{i}].x'),
                    y_terms=_terms_from_json(item['y'], f'{where}.pieces[{i}].y'),
                    region=tuple((int(idx), int(side)) for idx, side in item.get('region', [])),
                ))
            except (KeyError, TypeError, ValueError) as err:
                raise ConfigError(f'{where}.pieces[{i}]: {err}') from err
        if not pieces:
            raise ConfigError(f'{where}.pieces: at least one piece is required')
        try:
            return PwsMapSpec(pieces=tuple(pieces), switching=switching,
                              params=tuple((str(k), float(v)) for k, v in params.items()))
        except ValueError as err:
            raise ConfigError(f'{where}: {err}') from err
    raise ConfigError(f"{where}.kind: expected 'bcnf' or 'polynomial', got {kind!r}")
