"""
Closed-form facilities for the two-dimensional border-collision normal form:
per-piece fixed points and their eigen-data, piece inverses and the
one-dimensional skew tent reduction.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from python.errors import NoFixedPointError, NonInvertibleError, NotASaddleError
from python.pws_core import as_point, border_collision_map, iterate

logger = logging.getLogger(__name__)

EIGEN_TOL = 1e-12


@dataclass(frozen=True)
class NormalFormParams:
    tau_L: float
    delta_L: float
    tau_R: float
    delta_R: float
    mu: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.tau_L, self.delta_L, self.tau_R, self.delta_R, self.mu)):
            raise ValueError('normal form parameters must be finite')

    def side(self, side):
        if side == 'L':
            return self.tau_L, self.delta_L
        if side == 'R':
            return self.tau_R, self.delta_R
        raise ValueError(f"side must be 'L' or 'R', got {side!r}")

    def to_map(self, labels=('L', 'R')):
        return border_collision_map(self.tau_L, self.delta_L, self.tau_R, self.delta_R, self.mu, labels=labels)

    @classmethod
    def from_map(cls, spec):
        if spec.kind != 'bcnf':
            raise ValueError(f'map of kind {spec.kind!r} is not a border-collision normal form')
        left, right = spec.labels
        p = spec.param_dict
        return cls(p[f'tau_{left}'], p[f'delta_{left}'], p[f'tau_{right}'], p[f'delta_{right}'], p['mu'])


@dataclass(frozen=True)
class SaddleData:
    """
    Fixed point of one affine piece with its classification.

    ``lam``/``sigma`` and the unit eigenvectors ``v_s``/``v_u`` are only set for
    saddles; foci and nodes carry their eigenvalues only.
    """

    point: np.ndarray
    side: str
    kind: str
    eigenvalues: tuple
    admissible: bool
    matrix: np.ndarray
    offset: np.ndarray
    spec: object = None
    lam: float | None = None
    sigma: float | None = None
    v_s: np.ndarray | None = None
    v_u: np.ndarray | None = None

    @property
    def is_saddle(self):
        return self.kind == 'saddle'

    @property
    def trace(self):
        return float(np.trace(self.matrix))

    @property
    def det(self):
        return float(np.linalg.det(self.matrix))


@dataclass(frozen=True)
class Eigenline:
    point: np.ndarray
    direction: np.ndarray
    t_min: float
    t_max: float

    def at(self, t):
        return self.point + t * self.direction

    def ends(self):
        return [self.at(t) for t in (self.t_min, self.t_max) if math.isfinite(t)]


@dataclass(frozen=True)
class SkewTentParams:
    slope_left: float
    slope_right: float
    offset: float

    def __post_init__(self):
        if self.slope_left == 0 or self.slope_right == 0:
            raise ValueError('skew tent slopes must be nonzero')


def eigenvalues_from(trace, det):
    """Roots of g^2 - trace g + det, real pair sorted by modulus or a complex-conjugate pair."""
    disc = trace * trace - 4.0 * det
    if disc < 0.0:
        root = complex(trace / 2.0, math.sqrt(-disc) / 2.0)
        return (root, root.conjugate())
    if trace == 0.0:
        half = math.sqrt(disc) / 2.0
        return (-half, half)
    q = 0.5 * (trace + math.copysign(math.sqrt(disc), trace))
    pair = sorted((q, det / q), key=abs) if q != 0.0 else (0.0, 0.0)
    return tuple(pair)


def unit_eigenvector(matrix, value):
    (a, b), (c, d) = matrix
    first = np.array([b, value - a])
    second = np.array([value - d, c])
    vec = first if np.linalg.norm(first) >= np.linalg.norm(second) else second
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        vec, norm = np.array([1.0, 0.0]), 1.0
    vec = vec / norm
    lead = vec[0] if vec[0] != 0.0 else vec[1]
    return -vec if lead < 0 else vec


def classify(values):
    if isinstance(values[0], complex):
        modulus = abs(values[0])
        if math.isclose(modulus, 1.0, abs_tol=EIGEN_TOL):
            return 'nonhyperbolic'
        return 'stable focus' if modulus < 1 else 'unstable focus'
    small, big = (abs(v) for v in values)
    if math.isclose(small, 1.0, abs_tol=EIGEN_TOL) or math.isclose(big, 1.0, abs_tol=EIGEN_TOL):
        return 'nonhyperbolic'
    if small < 1 < big:
        return 'saddle'
    return 'stable node' if big < 1 else 'unstable node'


def affine_fixed_point(spec, label):
    """Fixed point of the affine piece ``label`` of any map, classified by its eigenvalues."""
    matrix, offset = spec.affine_part(label)
    system = np.eye(2) - matrix
    if abs(np.linalg.det(system)) < EIGEN_TOL:
        raise NoFixedPointError(f'piece {label}: I - A is singular, no isolated fixed point')
    if spec.kind == 'bcnf':
        # x = mu / (1 - tau + delta), y = -delta x
        x = offset[0] / (1.0 - matrix[0, 0] - matrix[1, 0])
        point = np.array([x, matrix[1, 0] * x])
    else:
        point = np.linalg.solve(system, offset)
    values = eigenvalues_from(float(np.trace(matrix)), float(np.linalg.det(matrix)))
    kind = classify(values)
    admissible = spec.region_margin(point, label) >= -spec.tol
    extra = {}
    if kind == 'saddle':
        lam, sigma = values
        extra = {'lam': float(lam), 'sigma': float(sigma),
                 'v_s': unit_eigenvector(matrix, lam), 'v_u': unit_eigenvector(matrix, sigma)}
    logger.debug('piece %s fixed point %s: %s, eigenvalues %s', label, point, kind, values)
    return SaddleData(point=point, side=label, kind=kind, eigenvalues=values, admissible=admissible,
                      matrix=matrix, offset=offset, spec=spec, **extra)


def piece_fixed_point(params, side):
    return affine_fixed_point(params.to_map(), side)


def saddle_eigenlines(s):
    """
    Local stable and unstable eigenlines of a saddle, clipped to its own closed region.

    Returns (E^s, E^u) as ``Eigenline`` objects parametrised by arclength.
    """
    if not s.is_saddle:
        raise NotASaddleError(f'fixed point of piece {s.side} is a {s.kind}')
    lines = []
    params = s.spec.param_dict
    for direction in (s.v_s, s.v_u):
        t_min, t_max = -math.inf, math.inf
        for idx, side in s.spec.piece(s.side).region:
            curve = s.spec.switching[idx]
            if not curve.is_linear:
                continue
            c0, cx, cy = curve.linear_coefficients(params)
            base = side * (c0 + cx * s.point[0] + cy * s.point[1])
            rate = side * (cx * direction[0] + cy * direction[1])
            if rate > 0:
                t_min = max(t_min, -base / rate)
            elif rate < 0:
                t_max = min(t_max, -base / rate)
        lines.append(Eigenline(point=s.point, direction=direction, t_min=t_min, t_max=t_max))
    return lines[0], lines[1]


def invert_piece(params, side, q):
    """p with A p + (mu, 0) = q for the chosen side: p = (-y/delta, x - mu + tau y/delta)."""
    tau, delta = params.side(side)
    if delta == 0:
        raise NonInvertibleError(f'piece {side} has delta = 0')
    x, y = as_point(q)
    return np.array([-y / delta, x - params.mu + tau * y / delta])


def skew_tent_iterate(params, x0, n):
    values = np.empty(n + 1)
    x = float(x0)
    values[0] = x
    for i in range(n):
        x = (params.slope_left if x <= 0 else params.slope_right) * x + params.offset
        values[i + 1] = x
    return values


def tent_shadowing(params, x0, n):
    """
    Max deviation between the x-coordinates of the 2D normal form started at
    (x0, 0) and the skew tent orbit with the same slopes and offset mu.
    """
    tent = skew_tent_iterate(SkewTentParams(params.tau_L, params.tau_R, params.mu), x0, n)
    orbit = iterate(params.to_map(), (x0, 0.0), n)
    if orbit.escaped:
        return math.inf, tent, orbit
    return float(np.max(np.abs(orbit.points[:, 0] - tent))), tent, orbit


def normal_form_map(params, labels=('L', 'R')):
    """Border-collision normal form of ``params`` with the given piece labels."""
    return params.to_map(labels=labels)
