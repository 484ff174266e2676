"""
Local theory of a homoclinic corner in terms of the constants of the map near
the saddle and along the corner orbit.

The synthetic map G_k is the return map k + r written directly in linearised
coordinates, with an optional table of quadratic remainder terms.  With a zero
remainder the map is affine in (x, y) and its fixed points and border-collision
value have a closed form, which serves as the oracle for the numerical solvers.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from python.errors import ConfigError, GenericityError, NonUniqueOrbitError, NotObservableError
from python.homoclinic import transversality_certificate
from python.periodic import MapFamily, find_single_round, locate_bcb, solve_periodic
from python.pws_core import Coefficient, PolynomialPiece, PwsMapSpec, SwitchingCurve, border_collision_map
from python.sweep import run_tasks

logger = logging.getLogger(__name__)

QUADRATIC_MONOMIALS = ('xx', 'xy', 'yy', 'xxi', 'yxi', 'xixi')
OBSERVABILITY_TOL = 1e-12


@dataclass(frozen=True)
class UnfoldingParams:
    """
    Constants of the unfolding: saddle eigenvalues ``lam`` < 1 < ``sigma``, the
    excursion length ``r`` with split index ``s``, the linear coefficients of the
    two branches of the excursion map and the switching-curve slopes ``p1``, ``p3``.
    """

    lam: float
    sigma: float
    a1: float
    a2: float
    bX1: float
    bX2: float
    bY1: float
    bY2: float
    c1: float
    c2: float
    p1: float = 0.0
    p3: float = 0.0
    r: int = 2
    s: int = 1

    def __post_init__(self):
        values = [getattr(self, name) for name in self.__dataclass_fields__ if name not in ('r', 's')]
        if not all(math.isfinite(v) for v in values):
            raise ValueError('unfolding constants must be finite')
        if self.r < 2 or not 1 <= self.s <= self.r - 1:
            raise ValueError(f'need r >= 2 and 1 <= s <= r - 1, got r={self.r}, s={self.s}')

    def b(self, branch, index):
        return getattr(self, f'b{branch}{index}')

    def to_json(self):
        return asdict(self)

    @classmethod
    def from_json(cls, doc, where='unfolding'):
        if not isinstance(doc, dict):
            raise ConfigError(f'{where}: expected an object')
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f'{where}: unknown fields {sorted(unknown)}')
        try:
            return cls(**doc)
        except TypeError as err:
            raise ConfigError(f'{where}: {err}') from err
        except ValueError as err:
            raise ConfigError(f'{where}: {err}') from err


@dataclass(frozen=True)
class ReducedNormalFormParams:
    tauX: float
    deltaX: float
    tauY: float
    deltaY: float

    def to_map(self, xi_tilde):
        return border_collision_map(self.tauX, self.deltaX, self.tauY, self.deltaY, xi_tilde, labels=('X', 'Y'))


@dataclass(frozen=True)
class Condition:
    name: str
    passed: bool
    margin: float


@dataclass(frozen=True)
class GenericityReport:
    conditions: tuple[Condition, ...]

    @property
    def passed(self):
        return all(c.passed for c in self.conditions)

    @property
    def failed(self):
        return tuple(c.name for c in self.conditions if not c.passed)

    def require(self):
        if not self.passed:
            raise GenericityError(f'genericity conditions fail: {", ".join(self.failed)}', self.failed)
        return self

    def to_json(self):
        return {c.name: {'passed': c.passed, 'margin': c.margin} for c in self.conditions}


def validate_genericity(u):
    conditions = (
        Condition('saddle_eigenvalues', 0 < u.lam < 1 < u.sigma, min(u.lam, 1 - u.lam, u.sigma - 1)),
        Condition('dissipative', u.lam * u.sigma < 1, 1 - u.lam * u.sigma),
        Condition('transverse_return', u.a2 != 0, abs(u.a2)),
        Condition('corner', u.bX2 * u.bY2 < 0, -u.bX2 * u.bY2),
        Condition('unfolding_parameter', u.c2 != 0, abs(u.c2)),
    )
    return GenericityReport(conditions)


@dataclass(frozen=True)
class BranchPrediction:
    branch: str
    fixed_point: tuple[float, float]
    trace: float
    det: float
    gamma_u: float
    gamma_s: float
    v_u: tuple[float, float]
    v_s: tuple[float, float]


@dataclass(frozen=True)
class Predictions:
    k: int
    xi: float
    xi_k: float
    bcb_side: int
    admissible_side: int
    branches: dict = field(default_factory=dict)
    error_orders: dict = field(default_factory=lambda: {
        'fixed_point.x': 'sigma^-2k', 'fixed_point.y': 'lambda^k + sigma^-2k', 'trace': '1',
        'det': 'lambda^k', 'gamma_u': '1', 'gamma_s': 'lambda^k sigma^-k', 'xi_k': 'lambda^k + sigma^-2k',
    })


def predict(u, k, xi=0.0):
    """Leading-order fixed points, eigen-data and bifurcation value of the period k + r orbits."""
    validate_genericity(u).require()
    if k < 1:
        raise ValueError('k must be at least 1')
    lam_k, sigma_k = u.lam**k, u.sigma**k
    branches = {}
    for branch in ('X', 'Y'):
        b1, b2 = u.b(branch, 1), u.b(branch, 2)
        minor = u.a1 * b2 - u.a2 * b1
        gamma_s = minor * lam_k / b2
        branches[branch] = BranchPrediction(
            branch=branch,
            fixed_point=(lam_k, 1 + (1 / sigma_k - (u.c2 + b2 * u.p3) * xi) / b2),
            trace=b2 * sigma_k,
            det=minor * lam_k * sigma_k,
            gamma_u=b2 * sigma_k,
            gamma_s=gamma_s,
            v_u=(1.0, -gamma_s),
            v_s=(-1 / (b2 * sigma_k), 1.0),
        )
    return Predictions(k=k, xi=xi, xi_k=1 / (u.c2 * sigma_k), bcb_side=int(np.sign(u.c2)),
                       admissible_side=int(np.sign(u.bX2 * u.c2)), branches=branches)


def _quadratic_terms(table, scale):
    """Monomials in (x, y) of a remainder written in x, y - 1 and xi."""
    terms = []
    for name, value in (table or {}).items():
        if name not in QUADRATIC_MONOMIALS:
            raise ValueError(f'unknown remainder monomial {name!r}, expected one of {QUADRATIC_MONOMIALS}')
        c = float(value) * scale
        expansion = {
            'xx': [(2, 0, Coefficient.const(c))],
            'xy': [(1, 1, Coefficient.const(c)), (1, 0, Coefficient.const(-c))],
            'yy': [(0, 2, Coefficient.const(c)), (0, 1, Coefficient.const(-2 * c)), (0, 0, Coefficient.const(c))],
            'xxi': [(1, 0, Coefficient.param('xi', c))],
            'yxi': [(0, 1, Coefficient.param('xi', c)), (0, 0, Coefficient.param('xi', -c))],
            'xixi': [(0, 0, Coefficient(((c, ('xi', 'xi')),)))],
        }[name]
        terms.extend(expansion)
    return terms


@dataclass(frozen=True)
class SyntheticMap:
    """The return map G_k with its closed-form oracle (exact for a zero remainder)."""

    u: UnfoldingParams
    k: int
    spec: PwsMapSpec
    quadratic: dict | None = None

    @property
    def family(self):
        return MapFamily(self.spec, 'xi')

    @property
    def is_exact(self):
        return not any(any(v != 0 for v in table.values()) for table in (self.quadratic or {}).values())

    def linear_part(self, branch):
        """Rows of G_k's Jacobian and the xi-derivative for a zero remainder."""
        u = self.u
        lam_k, sigma_k = u.lam**self.k, u.sigma**self.k
        b1, b2 = u.b(branch, 1), u.b(branch, 2)
        matrix = np.array([[lam_k * (u.a1 + b1 * u.p1), lam_k * b1], [sigma_k * (u.a2 + b2 * u.p1), sigma_k * b2]])
        dxi = np.array([lam_k * (u.c1 + b1 * u.p3), sigma_k * (u.c2 + b2 * u.p3)])
        return matrix, dxi

    def fixed_point(self, branch, xi):
        """Closed-form fixed point (x, y) of the branch at xi."""
        if not self.is_exact:
            raise ValueError('closed form only exists for a zero remainder')
        z0, z1 = self._fixed_point_line(branch)
        x, big_y = z0 + xi * z1
        return np.array([x, big_y + 1.0])

    def _fixed_point_line(self, branch):
        u = self.u
        lam_k, sigma_k = u.lam**self.k, u.sigma**self.k
        matrix, dxi = self.linear_part(branch)
        system = np.eye(2) - matrix
        z0 = np.linalg.solve(system, np.array([lam_k, -1.0]))
        z1 = np.linalg.solve(system, dxi)
        return z0, z1

    def bcb(self):
        """Exact xi at which the fixed point reaches the switching curve."""
        u = self.u
        z0, z1 = self._fixed_point_line('X')
        return float(-(z0[1] + u.p1 * z0[0]) / (z1[1] + u.p1 * z1[0] + u.p3))


def build_synthetic_map(u, k, quadratic_terms=None):
    """
    G_k(x, y; xi) for both branches.  The switching curve is
    y - 1 + p1 x + p3 xi = 0, branch X below it and Y above it.

    ``quadratic_terms`` maps 'x' / 'y' to {monomial: coefficient} with
    monomials from QUADRATIC_MONOMIALS in x, y - 1 and xi.
    """
    validate_genericity(u).require()
    quadratic_terms = quadratic_terms or {}
    unknown = set(quadratic_terms) - {'x', 'y'}
    if unknown:
        raise ValueError(f'remainder components must be x or y, got {sorted(unknown)}')
    lam_k, sigma_k = u.lam**k, u.sigma**k
    switching = SwitchingCurve((
        (0, 0, Coefficient.const(-1.0) + Coefficient.param('xi', u.p3)),
        (1, 0, Coefficient.const(u.p1)),
        (0, 1, Coefficient.const(1.0)),
    ))
    pieces = []
    for branch, side in (('X', -1), ('Y', 1)):
        b1, b2 = u.b(branch, 1), u.b(branch, 2)
        x_terms = [
            (0, 0, Coefficient.const(lam_k * (1 - b1)) + Coefficient.param('xi', lam_k * (u.c1 + b1 * u.p3))),
            (1, 0, Coefficient.const(lam_k * (u.a1 + b1 * u.p1))),
            (0, 1, Coefficient.const(lam_k * b1)),
            *_quadratic_terms(quadratic_terms.get('x'), lam_k),
        ]
        y_terms = [
            (0, 0, Coefficient.const(-sigma_k * b2) + Coefficient.param('xi', sigma_k * (u.c2 + b2 * u.p3))),
            (1, 0, Coefficient.const(sigma_k * (u.a2 + b2 * u.p1))),
            (0, 1, Coefficient.const(sigma_k * b2)),
            *_quadratic_terms(quadratic_terms.get('y'), sigma_k),
        ]
        pieces.append(PolynomialPiece(branch, tuple(x_terms), tuple(y_terms), region=((0, side),)))
    spec = PwsMapSpec(pieces=tuple(pieces), switching=(switching,), params=(('xi', 0.0),))
    return SyntheticMap(u=u, k=k, spec=spec, quadratic=quadratic_terms or None)


def locate_synthetic_bcb(synthetic, seed_xi=None):
    """Border collision of the single-letter orbits of G_k located numerically."""
    if seed_xi is None:
        seed_xi = 1 / (synthetic.u.c2 * synthetic.u.sigma**synthetic.k)
    family = synthetic.family
    seed = find_single_round(family(seed_xi), None, 'X', 'X', 0)
    return locate_bcb(family, seed, seed_xi, step=abs(seed_xi) * 0.05 or 1e-6)


@dataclass(frozen=True)
class HattedMap:
    """
    Piecewise-linear part of the return map in coordinates centred on the
    border collision: x_hat = x - x_k, y_hat = h(x, y; xi), xi_hat = xi - xi_k.
    """

    a1: float
    a2: float
    bX1: float
    bX2: float
    bY1: float
    bY2: float
    c1: float
    c2: float
    k: int | None = None
    xi_k: float | None = None
    x_k: float | None = None
    synthetic: SyntheticMap | None = None

    def matrix(self, branch):
        return np.array([[self.a1, getattr(self, f'b{branch}1')], [self.a2, getattr(self, f'b{branch}2')]])

    @property
    def offset(self):
        return np.array([self.c1, self.c2])

    def change(self):
        """(M, m, t) with z_hat = M z + m xi + t."""
        u = self.synthetic.u
        return (np.array([[1.0, 0.0], [u.p1, 1.0]]), np.array([0.0, u.p3]), np.array([-self.x_k, -1.0]))

    def image(self, z_hat, xi_hat, branch=None):
        """Image of z_hat under the return map G_k written in hatted coordinates."""
        matrix, m, t = self.change()
        xi = xi_hat + self.xi_k
        z = np.linalg.solve(matrix, np.asarray(z_hat, dtype=float) - m * xi - t)
        spec = self.synthetic.spec.with_params(xi=xi)
        label = branch or spec.select(z)
        image = spec.piece(label).value(z, spec.param_dict)
        return matrix @ image + m * xi + t

    def leading_order_ratios(self):
        u = self.synthetic.u
        lam_k, sigma_k = u.lam**self.k, u.sigma**self.k
        ratios = {'a2': self.a2 / (u.a2 * sigma_k), 'c2': self.c2 / (u.c2 * sigma_k)}
        for branch in ('X', 'Y'):
            ratios[f'b{branch}2'] = getattr(self, f'b{branch}2') / (u.b(branch, 2) * sigma_k)
            if u.b(branch, 1):
                ratios[f'b{branch}1'] = getattr(self, f'b{branch}1') / (u.b(branch, 1) * lam_k)
        if u.a1:
            ratios['a1'] = self.a1 / (u.a1 * lam_k)
        return ratios


def hatted_transform(u, k, xi_k=None, quadratic_terms=None):
    """
    Coefficients of the return map in hatted coordinates, computed from the
    Jacobians of G_k at the colliding orbit point.
    """
    synthetic = build_synthetic_map(u, k, quadratic_terms)
    if xi_k is None:
        xi_k = synthetic.bcb() if synthetic.is_exact else locate_synthetic_bcb(synthetic)
    spec = synthetic.spec.with_params(xi=xi_k)
    point = solve_periodic(spec, 'X', guess=(u.lam**k, 1.0)).points[0]
    params = spec.param_dict
    change = np.array([[1.0, 0.0], [u.p1, 1.0]])
    inverse = np.linalg.inv(change)
    m = np.array([0.0, u.p3])
    hatted = {}
    for branch in ('X', 'Y'):
        piece = spec.piece(branch)
        jac = change @ piece.jacobian(point, params) @ inverse
        dxi = change @ piece.param_derivative(point, params, 'xi') - jac @ m + m
        hatted[branch] = (jac, dxi)
    (jac_x, dxi_x), (jac_y, _) = hatted['X'], hatted['Y']
    logger.debug('hatted coefficients at k=%d: a=%s c=%s', k, jac_x[:, 0], dxi_x)
    return HattedMap(a1=jac_x[0, 0], a2=jac_x[1, 0], bX1=jac_x[0, 1], bX2=jac_x[1, 1], bY1=jac_y[0, 1],
                     bY2=jac_y[1, 1], c1=dxi_x[0], c2=dxi_x[1], k=k, xi_k=xi_k, x_k=float(point[0]),
                     synthetic=synthetic)


@dataclass(frozen=True)
class TildedMap:
    reduced: ReducedNormalFormParams
    matrix: np.ndarray
    kappa: float
    scale: float
    hatted: HattedMap

    def to_tilded(self, z_hat, xi_hat):
        z = self.matrix @ np.asarray(z_hat, dtype=float) + np.array([0.0, self.kappa * xi_hat])
        return z, self.scale * xi_hat

    def from_tilded(self, z_tilde, xi_tilde):
        xi_hat = xi_tilde / self.scale
        z = np.linalg.solve(self.matrix, np.asarray(z_tilde, dtype=float) - np.array([0.0, self.kappa * xi_hat]))
        return z, xi_hat

    def companion(self, branch):
        tau = getattr(self.reduced, f'tau{branch}')
        delta = getattr(self.reduced, f'delta{branch}')
        return np.array([[tau, 1.0], [-delta, 0.0]])

    def roundtrip_error(self, branch):
        """Max deviation between the conjugated hatted linear part and the companion matrix."""
        conjugated = self.matrix @ self.hatted.matrix(branch) @ np.linalg.inv(self.matrix)
        return float(np.max(np.abs(conjugated - self.companion(branch))))


def tilded_transform(hatted, tol=OBSERVABILITY_TOL):
    """
    Affine change x~ = y^, y~ = a2 x^ - a1 y^ + (a1 c2 - a2 c1) xi^ to the
    border-collision normal form with offset xi~ = (c2 - a1 c2 + a2 c1) xi^.
    """
    a1, a2, c1, c2 = hatted.a1, hatted.a2, hatted.c1, hatted.c2
    scale_ref = max(1.0, abs(a2), abs(c2))
    if abs(a2) <= tol * scale_ref:
        raise NotObservableError('a2 vanishes: the return map is not observable')
    if abs(c2) <= tol * scale_ref:
        raise NotObservableError('c2 vanishes: xi does not unfold the border collision')
    kappa = a1 * c2 - a2 * c1
    scale = c2 - kappa
    if abs(scale) <= tol * scale_ref:
        raise NotObservableError('the parameter scaling of the normal form vanishes')
    matrix = np.array([[0.0, 1.0], [a2, -a1]])
    traces = {branch: float(np.trace(hatted.matrix(branch))) for branch in ('X', 'Y')}
    dets = {branch: float(np.linalg.det(hatted.matrix(branch))) for branch in ('X', 'Y')}
    reduced = ReducedNormalFormParams(tauX=traces['X'], deltaX=dets['X'], tauY=traces['Y'], deltaY=dets['Y'])
    return TildedMap(reduced=reduced, matrix=matrix, kappa=kappa, scale=scale, hatted=hatted)


@dataclass(frozen=True)
class FigFourQuadrant:
    sign_c2: int
    sign_bX2: int
    bcb_side: int
    existence_side: int

    @property
    def consistent(self):
        return self.bcb_side == self.sign_c2 and self.existence_side == self.sign_c2 * self.sign_bX2

    def to_json(self):
        return {**asdict(self), 'consistent': self.consistent}


def _both_admissible(spec):
    try:
        return all(solve_periodic(spec, label).admissible() for label in ('X', 'Y'))
    except NonUniqueOrbitError:
        return False


def existence_side(synthetic, xi_k, offset=1e-3):
    """Side of xi_k on which both single-letter orbits of G_k are admissible (0 if neither or both)."""
    delta = offset * abs(xi_k)
    above = _both_admissible(synthetic.spec.with_params(xi=xi_k + delta))
    below = _both_admissible(synthetic.spec.with_params(xi=xi_k - delta))
    if above == below:
        return 0
    return 1 if above else -1


def bifurcation_quadrants(u, k):
    """Measured border-collision side and existence side for the four sign choices of c2 and bX2."""
    quadrants = []
    for sign_c2 in (-1, 1):
        for sign_bX2 in (-1, 1):
            variant = replace(u, c2=sign_c2 * abs(u.c2), bX2=sign_bX2 * abs(u.bX2), bY2=-sign_bX2 * abs(u.bY2))
            synthetic = build_synthetic_map(variant, k)
            xi_k = synthetic.bcb()
            quadrants.append(FigFourQuadrant(sign_c2=sign_c2, sign_bX2=sign_bX2, bcb_side=int(np.sign(xi_k)),
                                             existence_side=existence_side(synthetic, xi_k)))
    return quadrants


def compose_rounds(u, ks, branches, xi=0.0):
    """Jacobian of a multi-round composition of zero-remainder return maps."""
    if len(ks) != len(branches):
        raise ValueError('need one branch per round')
    product = np.eye(2)
    for k, branch in zip(ks, branches):
        synthetic = build_synthetic_map(u, k)
        matrix, _ = synthetic.linear_part(branch)
        product = matrix @ product
    return product


def draw_params(rng):
    """Random generic constants: all conditions hold with margins bounded away from zero."""
    lam = rng.uniform(0.2, 0.6)
    sigma = rng.uniform(1.3, min(0.95 / lam, 2.5))

    def signed(low, high):
        return float(rng.choice((-1.0, 1.0)) * rng.uniform(low, high))

    bX2 = signed(0.5, 1.5)
    return UnfoldingParams(
        lam=float(lam), sigma=float(sigma), a1=float(rng.uniform(-1, 1)), a2=signed(0.5, 1.5),
        bX1=float(rng.uniform(-1, 1)), bX2=bX2,
        bY1=float(rng.uniform(-1, 1)), bY2=float(-np.sign(bX2) * rng.uniform(0.5, 1.5)),
        c1=float(rng.uniform(-0.25, 0.25)),
        c2=signed(0.5, 1.5), p1=float(rng.uniform(-0.25, 0.25)), p3=float(rng.uniform(-0.25, 0.25)),
    )


def fit_scaling(u, ks, values):
    """
    Least-squares fit of xi_k - sigma^-k / c2 by C1 lam^k + C2 sigma^-2k,
    weighted by the deviation itself; returns (C1, C2, rms relative residual).
    """
    ks = np.asarray(ks, dtype=float)
    deviation = np.asarray(values) - 1 / (u.c2 * u.sigma**ks)
    design = np.column_stack([u.lam**ks, u.sigma ** (-2 * ks)])
    weights = 1 / np.abs(deviation)
    coef, *_ = np.linalg.lstsq(design * weights[:, None], deviation * weights, rcond=None)
    residual = (design @ coef - deviation) * weights
    return float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(residual**2)))


@dataclass(frozen=True)
class DrawResult:
    index: int
    params: UnfoldingParams
    max_error: float
    C1: float
    C2: float
    fit_residual: float
    eigen_ratio_u: float
    eigen_ratio_s: float
    certificate_crossing: bool | None

    def to_json(self):
        return {**asdict(self), 'params': self.params.to_json()}


def _eigen_ratios(u, k):
    """Exact over leading-order unstable and stable eigenvalues of branch X at k."""
    synthetic = build_synthetic_map(u, k)
    matrix, _ = synthetic.linear_part('X')
    values = sorted(np.linalg.eigvals(matrix).real, key=abs)
    prediction = predict(u, k).branches['X']
    return float(values[1] / prediction.gamma_u), float(values[0] / prediction.gamma_s)


def run_draw(index, u, ks, eigen_k=12, certificate_k=None):
    """Oracle agreement, scaling fit, eigenvalue asymptotics and the transversality test for one draw."""
    numeric, exact = [], []
    for k in ks:
        synthetic = build_synthetic_map(u, k)
        exact.append(synthetic.bcb())
        numeric.append(locate_synthetic_bcb(synthetic))
    max_error = float(np.max(np.abs(np.array(numeric) - np.array(exact))))
    C1, C2, residual = fit_scaling(u, ks, numeric)
    ratio_u, ratio_s = _eigen_ratios(u, eigen_k)
    crossing = None
    if certificate_k is not None:
        tilded = tilded_transform(hatted_transform(u, certificate_k))
        try:
            crossing = transversality_certificate(tilded.reduced, float(np.sign(u.bX2))).crossing
        except Exception as err:
            logger.debug('draw %d: no certificate (%s)', index, err)
            crossing = False
    return DrawResult(index=index, params=u, max_error=max_error, C1=C1, C2=C2, fit_residual=residual,
                      eigen_ratio_u=ratio_u, eigen_ratio_s=ratio_s, certificate_crossing=crossing)


def _seeded_draw(index, seed_seq, ks, eigen_k, certificate_k):
    rng = np.random.default_rng(seed_seq)
    return run_draw(index, draw_params(rng), ks, eigen_k, certificate_k)


@dataclass(frozen=True)
class OracleReport:
    draws: tuple[DrawResult, ...]
    quadrants: tuple[FigFourQuadrant, ...]
    failed_tasks: tuple[str, ...]
    tolerances: dict

    @property
    def checks(self):
        tol = self.tolerances
        return {
            'oracle_agreement': all(d.max_error <= tol['oracle'] for d in self.draws),
            'scaling_fit': all(d.fit_residual < tol['fit'] for d in self.draws),
            'eigenvalue_asymptotics': all(abs(d.eigen_ratio_u - 1) <= tol['eigen'] and
                                          abs(d.eigen_ratio_s - 1) <= tol['eigen'] for d in self.draws),
            'quadrants': all(q.consistent for q in self.quadrants),
            'tasks': not self.failed_tasks,
        }

    @property
    def passed(self):
        return all(self.checks.values())

    def to_json(self):
        crossings = [d.certificate_crossing for d in self.draws if d.certificate_crossing is not None]
        return {
            'passed': self.passed,
            'checks': self.checks,
            'tolerances': self.tolerances,
            'draws': [d.to_json() for d in self.draws],
            'quadrants': [q.to_json() for q in self.quadrants],
            'transversality': {'checked': len(crossings), 'crossing': sum(bool(c) for c in crossings)},
            'failed_tasks': list(self.failed_tasks),
        }


DEFAULT_QUADRANT_PARAMS = UnfoldingParams(lam=0.5, sigma=1.5, a1=0.0, a2=1.0, bX1=-0.5, bX2=-1.0, bY1=-0.5,
                                          bY2=1.0, c1=0.0, c2=1.0)


def run_oracle_suite(n_draws=100, ks=tuple(range(6, 15)), seed=0, workers=1, eigen_k=12, certificate_k=None,
                     quadrant_params=DEFAULT_QUADRANT_PARAMS, quadrant_k=10, oracle_tol=1e-10, fit_tol=0.1,
                     eigen_tol=0.02):
    """
    Seeded random-draw validation of the border-collision predictions.

    Every draw gets its own child of ``numpy.random.SeedSequence(seed)``, so
    the report does not depend on the worker count.
    """
    children = np.random.SeedSequence(seed).spawn(n_draws)
    ks = tuple(int(k) for k in ks)
    results, statuses = run_tasks(_seeded_draw, [(i, child, ks, eigen_k, certificate_k)
                                                 for i, child in enumerate(children)],
                                  workers=workers, names=[f'draw_{i}' for i in range(n_draws)])
    failed = tuple(f'{s.name}: {s.message}' for s in statuses if not s.ok)
    quadrants = tuple(bifurcation_quadrants(quadrant_params, quadrant_k))
    report = OracleReport(draws=tuple(r for r in results if r is not None), quadrants=quadrants,
                          failed_tasks=failed,
                          tolerances={'oracle': oracle_tol, 'fit': fit_tol, 'eigen': eigen_tol})
    logger.info('oracle suite: %d draws, checks %s', len(report.draws), report.checks)
    return report
