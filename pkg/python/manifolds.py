"""
One-dimensional stable and unstable manifolds of saddle fixed points.

Manifolds are grown as polylines.  For affine pieces every segment maps to a
segment, so a segment is only split where it crosses a switching curve; the
image of the crossing point is a kink.  The stable manifold is grown with the
piece inverses: the preimage of a segment under each piece is clipped to that
piece's region, and clip points where the adjacent pieces differ are kinks of
age 0.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.spatial import cKDTree

from python.errors import NonInvertibleError, NotASaddleError
from python.normal_form import saddle_eigenlines
from python.pws_core import ESCAPE_RADIUS, evaluate
from python.sweep import run_tasks

logger = logging.getLogger(__name__)

SEED_DISTANCE = 1e-6
ANGLE_TOL = 1e-6
DENSE_SAMPLES = 1000
MATCH_TOL = 1e-10


@dataclass(frozen=True)
class GrowthBudget:
    max_vertices: int = 20000
    max_arclength: float = 1e3
    max_generations: int = 30

    def __post_init__(self):
        if self.max_vertices <= 0 or self.max_arclength <= 0 or self.max_generations <= 0:
            raise ValueError('growth budget entries must be positive')

    @classmethod
    def from_json(cls, doc):
        return cls(**{key: doc[key] for key in ('max_vertices', 'max_arclength', 'max_generations') if key in doc})


@dataclass(frozen=True)
class ManifoldPolyline:
    """
    Vertices of one branch of a manifold, possibly split into several chains.

    ``kink_age`` is -1 for ordinary vertices and the number of map
    applications since the creating switching crossing for kinks.
    """

    vertices: np.ndarray
    kink_age: np.ndarray
    generation: np.ndarray
    chain: np.ndarray
    side: str
    branch: int
    saddle: object
    words: tuple[str, ...] = ()
    truncated: bool = False
    reason: str = ''

    def __len__(self):
        return len(self.vertices)

    @property
    def kink_flags(self):
        return self.kink_age >= 0

    @property
    def kinks(self):
        return self.vertices[self.kink_flags]

    @property
    def n_kinks(self):
        return int(np.count_nonzero(self.kink_flags))

    def segments(self):
        """Array (m, 2, 2) of consecutive vertex pairs inside each chain."""
        if len(self.vertices) < 2:
            return np.empty((0, 2, 2))
        same = self.chain[1:] == self.chain[:-1]
        return np.stack([self.vertices[:-1][same], self.vertices[1:][same]], axis=1)

    @property
    def arclength(self):
        segs = self.segments()
        return float(np.sum(np.linalg.norm(segs[:, 1] - segs[:, 0], axis=1))) if len(segs) else 0.0

    def to_frame(self):
        return pd.DataFrame({
            'idx': np.arange(len(self.vertices)),
            'x': self.vertices[:, 0],
            'y': self.vertices[:, 1],
            'is_kink': self.kink_flags.astype(int),
            'generation': self.generation,
            'kink_age': self.kink_age,
            'chain': self.chain,
        })


@dataclass
class _Chain:
    points: list = field(default_factory=list)
    ages: list = field(default_factory=list)
    gens: list = field(default_factory=list)
    word: str = ''


def _check_saddle(saddle):
    if not saddle.is_saddle:
        raise NotASaddleError(f'fixed point of piece {saddle.side} is a {saddle.kind}')


def _step(value):
    """Second iterate for negative eigenvalues so that each branch maps to itself."""
    return 2 if value < 0 else 1


def _is_kink_point(spec, p):
    """p lies on a switching curve where the adjacent pieces have different Jacobians."""
    labels = spec.region_of(p, tol=spec.tol)
    if len(labels) < 2:
        return False
    params = spec.param_dict
    first = spec.piece(labels[0]).jacobian(p, params)
    return any(not np.allclose(first, spec.piece(label).jacobian(p, params), rtol=0.0, atol=1e-12)
               for label in labels[1:])


def _resample(points, ages, count):
    points = np.asarray(points)
    lengths = np.r_[0.0, np.cumsum(np.linalg.norm(np.diff(points, axis=0), axis=1))]
    if lengths[-1] == 0.0:
        return points, ages
    targets = np.linspace(0.0, lengths[-1], count)
    keep = np.flatnonzero(np.asarray(ages) >= 0)
    targets = np.unique(np.r_[targets, lengths[keep]])
    resampled = np.column_stack([np.interp(targets, lengths, points[:, 0]), np.interp(targets, lengths, points[:, 1])])
    new_ages = [-1] * len(targets)
    for index in keep:
        new_ages[int(np.searchsorted(targets, lengths[index]))] = ages[index]
    return resampled, new_ages


def _forward_chain(spec, points, ages):
    """Image of a polyline under the map with crossing images inserted as new kinks."""
    out_points = []
    out_ages = []
    for i, p in enumerate(points):
        if i > 0:
            a = points[i - 1]
            for t in spec.segment_crossings(a, p):
                crossing = a + t * (p - a)
                out_points.append(evaluate(spec, crossing)[0])
                out_ages.append(1 if _is_kink_point(spec, crossing) else -1)
        out_points.append(evaluate(spec, p)[0])
        if ages[i] >= 0:
            out_ages.append(ages[i] + 1)
        elif 0 < i < len(points) - 1 and _is_kink_point(spec, p):
            out_ages.append(1)
        else:
            out_ages.append(-1)
    return out_points, out_ages


def _budget_reached(total_vertices, total_length, budget):
    return total_vertices >= budget.max_vertices or total_length >= budget.max_arclength


def _linear_reach(spec, saddle, side, branch, seed_distance, budget):
    """
    Distance from the saddle at which the fundamental segment starts.

    Inside an affine saddle region the eigenline is invariant, so the seed is
    pushed out by whole eigenvalue factors while the far end of the segment
    stays in the region.
    """
    if not spec.is_affine or saddle.lam == 0.0:
        return seed_distance
    stable, unstable = saddle_eigenlines(saddle)
    line, value = (stable, saddle.lam) if side == 'stable' else (unstable, saddle.sigma)
    reach = min(line.t_max if branch > 0 else -line.t_min, budget.max_arclength)
    factor = abs(value) ** (-_step(value) if side == 'stable' else _step(value))
    distance = seed_distance
    while distance * factor * factor < reach:
        distance *= factor
    return distance


def _seed_points(saddle, direction, seed_distance, reach, branch):
    """Saddle, seed point and (if pushed out) the start of the fundamental segment."""
    points = [saddle.point, saddle.point + branch * seed_distance * direction]
    if reach > seed_distance:
        points.append(saddle.point + branch * reach * direction)
    return points


def grow_unstable(spec, saddle, budget=None, branch=1, seed_distance=SEED_DISTANCE, escape_radius=ESCAPE_RADIUS):
    """
    Grow one branch of the unstable manifold by mapping its newest generation forward.

    The fundamental segment is [p, f^m(p)] with p at ``seed_distance`` from the
    saddle along ``branch * v_u`` (m = 2 for a negative unstable eigenvalue), pushed
    out along the eigenline for affine maps.
    """
    _check_saddle(saddle)
    budget = budget or GrowthBudget()
    if not spec.is_affine:
        logger.warning('map has nonlinear pieces: manifold segments are resampled with %d points per generation',
                       DENSE_SAMPLES)
    step = _step(saddle.sigma)
    reach = _linear_reach(spec, saddle, 'unstable', branch, seed_distance, budget)
    points = _seed_points(saddle, saddle.v_u, seed_distance, reach, branch)
    image = np.array(points[-1])
    for _ in range(step):
        image = evaluate(spec, image)[0]
    newest = [points[-1], image]
    newest_ages = [-1, -1]
    points.append(image)
    ages = [-1] * len(points)
    gens = [0] * len(points)
    total_length = float(np.linalg.norm(image - saddle.point))
    truncated, reason = False, ''

    for generation in range(1, budget.max_generations + 1):
        if _budget_reached(len(points), total_length, budget):
            truncated, reason = True, 'budget'
            break
        chain, chain_ages = np.array(newest), list(newest_ages)
        if not spec.is_affine:
            chain, chain_ages = _resample(chain, chain_ages, DENSE_SAMPLES)
        for _ in range(step):
            chain, chain_ages = _forward_chain(spec, np.asarray(chain), chain_ages)
        chain = np.asarray(chain)
        escaped = np.flatnonzero(~np.all(np.isfinite(chain), axis=1) | (np.linalg.norm(chain, axis=1) > escape_radius))
        if len(escaped):
            chain, chain_ages = chain[:escaped[0]], chain_ages[:escaped[0]]
            truncated, reason = True, 'escape'
        # first vertex repeats the previous generation's last one
        new_points, new_ages = chain[1:], chain_ages[1:]
        room = budget.max_vertices - len(points)
        if len(new_points) > room:
            new_points, new_ages = new_points[:room], new_ages[:room]
            truncated, reason = True, 'budget'
        if len(new_points):
            total_length += float(np.sum(np.linalg.norm(np.diff(np.vstack([points[-1], new_points]), axis=0), axis=1)))
        points.extend(new_points)
        ages.extend(new_ages)
        gens.extend([generation] * len(new_points))
        newest, newest_ages = chain, chain_ages
        if truncated or len(chain) < 2:
            break
    else:
        truncated, reason = True, 'generations'

    logger.debug('unstable branch %+d of %s: %d vertices, %d kinks', branch, saddle.side, len(points),
                 sum(age >= 0 for age in ages))
    return ManifoldPolyline(vertices=np.array(points, dtype=float), kink_age=np.array(ages, dtype=int),
                            generation=np.array(gens, dtype=int), chain=np.zeros(len(points), dtype=int),
                            side='unstable', branch=branch, saddle=saddle, words=('',), truncated=truncated,
                            reason=reason)


def _inherit(age):
    return age + 1 if age >= 0 else -1


def _clip_age(spec, p):
    return 0 if _is_kink_point(spec, p) else -1


def _preimage_runs(spec, points, ages, label):
    """
    Preimage of a polyline under the piece ``label`` restricted to its region,
    as runs of (points, ages).  Clip points lie on a switching curve.
    """
    pre = [spec.invert_piece(label, p, guess=p) for p in points]
    runs = []
    current_points, current_ages = [], []

    def close():
        if len(current_points) >= 2:
            runs.append((list(current_points), list(current_ages)))
        current_points.clear()
        current_ages.clear()

    for i in range(1, len(pre)):
        a, b = pre[i - 1], pre[i]
        cuts = [0.0, *spec.segment_crossings(a, b), 1.0]
        for t0, t1 in zip(cuts[:-1], cuts[1:]):
            mid = a + 0.5 * (t0 + t1) * (b - a)
            if spec.region_margin(mid, label) < -spec.tol:
                close()
                continue
            if not current_points:
                current_points.append(a + t0 * (b - a))
                current_ages.append(_clip_age(spec, current_points[-1]) if t0 > 0.0 else _inherit(ages[i - 1]))
            current_points.append(a + t1 * (b - a) if t1 < 1.0 else b)
            current_ages.append(_clip_age(spec, current_points[-1]) if t1 < 1.0 else _inherit(ages[i]))
            if t1 < 1.0:
                close()
    close()
    return runs


def _close(p, q):
    return float(np.linalg.norm(np.asarray(p) - np.asarray(q))) <= MATCH_TOL * (1.0 + float(np.linalg.norm(p)))


def _stitch(runs):
    """Join runs that share an endpoint into maximal polylines."""
    pieces = [(list(points), list(ages), word) for points, ages, word in runs]
    merged = True
    while merged:
        merged = False
        for i, j in ((i, j) for i in range(len(pieces)) for j in range(len(pieces)) if i != j):
            points_i, ages_i, word_i = pieces[i]
            points_j, ages_j, word_j = pieces[j]
            if _close(points_i[-1], points_j[0]):
                joined = (points_i + points_j[1:], ages_i + ages_j[1:])
            elif _close(points_i[-1], points_j[-1]):
                joined = (points_i + points_j[-2::-1], ages_i + ages_j[-2::-1])
            else:
                continue
            word = word_i if word_i == word_j else f'{word_i}|{word_j}'
            pieces[i] = (*joined, word)
            del pieces[j]
            merged = True
            break
    return pieces


def grow_stable(spec, saddle, budget=None, branch=1, seed_distance=SEED_DISTANCE, escape_radius=ESCAPE_RADIUS):
    """
    Grow one branch of the stable manifold under the piece inverses.

    Every admissible preimage branch is followed, so the result may hold
    several chains; each chain carries the word of pieces used to reach it.
    A non-invertible piece truncates the growth.
    """
    _check_saddle(saddle)
    budget = budget or GrowthBudget()
    if not spec.is_affine:
        logger.warning('map has nonlinear pieces: manifold segments are resampled with %d points per generation',
                       DENSE_SAMPLES)
    step = _step(saddle.lam)
    reach = _linear_reach(spec, saddle, 'stable', branch, seed_distance, budget)
    seeds = _seed_points(saddle, saddle.v_s, seed_distance, reach, branch)
    start = seeds[-1]
    end = np.array(start)
    try:
        for _ in range(step):
            end = spec.invert_piece(saddle.side, end)
    except NonInvertibleError as err:
        logger.warning('stable growth stopped: %s', err)
        return ManifoldPolyline(vertices=np.array(seeds), kink_age=np.full(len(seeds), -1),
                                generation=np.zeros(len(seeds), dtype=int), chain=np.zeros(len(seeds), dtype=int),
                                side='stable', branch=branch, saddle=saddle, words=('',), truncated=True,
                                reason='non-invertible')

    chains = [_Chain([*seeds, end], [-1] * (len(seeds) + 1), [0] * (len(seeds) + 1), saddle.side * step)]
    active = [(0, [start, end], [-1, -1])]
    total_vertices = len(seeds) + 1
    total_length = float(np.linalg.norm(end - saddle.point))
    truncated, reason = False, ''

    for generation in range(1, budget.max_generations + 1):
        if _budget_reached(total_vertices, total_length, budget):
            truncated, reason = True, 'budget'
            break
        next_active = []
        try:
            for chain_id, points, ages in active:
                sources = [(points, ages, chains[chain_id].word)]
                for _ in range(step):
                    produced = []
                    for src_points, src_ages, word in sources:
                        if not spec.is_affine:
                            src_points, src_ages = _resample(src_points, src_ages, DENSE_SAMPLES)
                        for label in spec.labels:
                            produced.extend((run_points, run_ages, label + word) for run_points, run_ages
                                            in _preimage_runs(spec, src_points, src_ages, label))
                    sources = _stitch(produced)
                for run_points, run_ages, word in sources:
                    run_points = np.array(run_points)
                    norms = np.linalg.norm(run_points, axis=1)
                    if np.any(norms > escape_radius):
                        cut = int(np.argmax(norms > escape_radius))
                        run_points, run_ages = run_points[:cut], run_ages[:cut]
                        truncated, reason = True, 'escape'
                        if len(run_points) < 2:
                            continue
                    parent = chains[chain_id]
                    if _close(parent.points[-1], run_points[-1]) and not _close(parent.points[-1], run_points[0]):
                        run_points, run_ages = run_points[::-1], run_ages[::-1]
                    if _close(parent.points[-1], run_points[0]):
                        parent.points.extend(run_points[1:])
                        parent.ages.extend(run_ages[1:])
                        parent.gens.extend([generation] * (len(run_points) - 1))
                        target, added = chain_id, len(run_points) - 1
                    else:
                        chains.append(_Chain(list(run_points), list(run_ages), [generation] * len(run_points), word))
                        target, added = len(chains) - 1, len(run_points)
                    total_vertices += added
                    total_length += float(np.sum(np.linalg.norm(np.diff(run_points, axis=0), axis=1)))
                    next_active.append((target, list(run_points), list(run_ages)))
        except NonInvertibleError as err:
            logger.warning('stable growth stopped: %s', err)
            truncated, reason = True, 'non-invertible'
            break
        active = next_active
        if not active or truncated:
            break
    else:
        truncated, reason = True, 'generations'

    vertices, kink_age, gens, chain_ids = [], [], [], []
    for index, chain in enumerate(chains):
        vertices.extend(chain.points)
        kink_age.extend(chain.ages)
        gens.extend(chain.gens)
        chain_ids.extend([index] * len(chain.points))
    if len(vertices) > budget.max_vertices:
        vertices, kink_age = vertices[:budget.max_vertices], kink_age[:budget.max_vertices]
        gens, chain_ids = gens[:budget.max_vertices], chain_ids[:budget.max_vertices]
        truncated, reason = True, 'budget'
    logger.debug('stable branch %+d of %s: %d vertices in %d chains', branch, saddle.side, len(vertices), len(chains))
    return ManifoldPolyline(vertices=np.array(vertices, dtype=float), kink_age=np.array(kink_age, dtype=int),
                            generation=np.array(gens, dtype=int), chain=np.array(chain_ids, dtype=int),
                            side='stable', branch=branch, saddle=saddle, words=tuple(c.word for c in chains),
                            truncated=truncated, reason=reason)


def _grow(side, spec, saddle, budget, branch):
    grower = grow_stable if side == 'stable' else grow_unstable
    return grower(spec, saddle, budget, branch)


def grow_manifolds(spec, saddle, budget=None, branches=(1, -1), sides=('stable', 'unstable'), workers=1):
    """Requested branches of both manifolds, keyed by (side, branch); grown in parallel."""
    keys = [(side, branch) for side in sides for branch in branches]
    results, statuses = run_tasks(_grow, [(side, spec, saddle, budget, branch) for side, branch in keys],
                                  workers=workers, names=[f'{side}{branch:+d}' for side, branch in keys])
    return {key: result for key, result in zip(keys, results) if result is not None}, statuses


def _point_segment(p, a, b):
    """Closest points on segments [a, b] (arrays (m, 2)) to p, and their distances."""
    d = b - a
    length2 = np.einsum('ij,ij->i', d, d)
    t = np.where(length2 > 0, np.einsum('ij,ij->i', p - a, d) / np.where(length2 > 0, length2, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    closest = a + t[:, None] * d
    return closest, np.linalg.norm(p - closest, axis=1)


def _segment_intersection(p0, p1, q0, q1):
    """Parameters (t, s) of the crossing of [p0, p1] with [q0, q1] or None."""
    r = p1 - p0
    s_vec = q1 - q0
    denom = r[0] * s_vec[1] - r[1] * s_vec[0]
    if denom == 0.0:
        return None
    diff = q0 - p0
    t = (diff[0] * s_vec[1] - diff[1] * s_vec[0]) / denom
    s = (diff[0] * r[1] - diff[1] * r[0]) / denom
    if 0.0 <= t <= 1.0 and 0.0 <= s <= 1.0:
        return t, s
    return None


def segment_distance(a0, a1, b0, b1):
    """Minimum distance between two segments and the realising pair of points."""
    a0, a1, b0, b1 = (np.asarray(v, dtype=float) for v in (a0, a1, b0, b1))
    crossing = _segment_intersection(a0, a1, b0, b1)
    if crossing is not None:
        point = a0 + crossing[0] * (a1 - a0)
        return 0.0, (point, point)
    candidates = []
    for p, (c0, c1), first in ((a0, (b0, b1), True), (a1, (b0, b1), True), (b0, (a0, a1), False),
                               (b1, (a0, a1), False)):
        closest, dist = _point_segment(p, c0[None, :], c1[None, :])
        pair = (p, closest[0]) if first else (closest[0], p)
        candidates.append((float(dist[0]), pair))
    return min(candidates, key=lambda item: item[0])


def _segment_tree(polyline):
    segs = polyline.segments()
    mids = 0.5 * (segs[:, 0] + segs[:, 1])
    halves = 0.5 * np.linalg.norm(segs[:, 1] - segs[:, 0], axis=1)
    return segs, cKDTree(mids), float(np.max(halves)) if len(halves) else 0.0


def polyline_min_distance(a, b):
    """
    Minimum Euclidean distance between two polylines with the realising points.

    Candidate segment pairs come from a k-d tree over segment midpoints; each
    candidate pair is evaluated exactly.
    """
    segs_a = a.segments()
    if len(segs_a) == 0 or len(b.segments()) == 0:
        return math.inf, None
    segs_b, tree, half_b = _segment_tree(b)
    mids_a = 0.5 * (segs_a[:, 0] + segs_a[:, 1])
    halves_a = 0.5 * np.linalg.norm(segs_a[:, 1] - segs_a[:, 0], axis=1)
    _, nearest = tree.query(mids_a)
    best, witness = math.inf, None
    for i, j in enumerate(nearest):
        dist, pair = segment_distance(segs_a[i, 0], segs_a[i, 1], segs_b[j, 0], segs_b[j, 1])
        if dist < best:
            best, witness = dist, pair
    for i in range(len(segs_a)):
        for j in tree.query_ball_point(mids_a[i], best + halves_a[i] + half_b):
            dist, pair = segment_distance(segs_a[i, 0], segs_a[i, 1], segs_b[j, 0], segs_b[j, 1])
            if dist < best:
                best, witness = dist, pair
    return best, witness


@dataclass(frozen=True)
class Crossing:
    point: np.ndarray
    angle: float
    segment_a: int
    segment_b: int
    t: float
    s: float


def crossing_angle(da, db):
    cos = abs(float(np.dot(da, db))) / (np.linalg.norm(da) * np.linalg.norm(db))
    return math.acos(min(1.0, cos))


def transverse_intersections(a, b, angle_tol=ANGLE_TOL):
    """All crossings of two polylines whose angle exceeds ``angle_tol``, ordered along ``a``."""
    segs_a = a.segments()
    if len(segs_a) == 0 or len(b.segments()) == 0:
        return []
    segs_b, tree, half_b = _segment_tree(b)
    found = []
    for i, (p0, p1) in enumerate(segs_a):
        mid = 0.5 * (p0 + p1)
        radius = 0.5 * float(np.linalg.norm(p1 - p0)) + half_b
        for j in sorted(tree.query_ball_point(mid, radius)):
            q0, q1 = segs_b[j]
            hit = _segment_intersection(p0, p1, q0, q1)
            if hit is None:
                continue
            angle = crossing_angle(p1 - p0, q1 - q0)
            if angle <= angle_tol:
                continue
            point = p0 + hit[0] * (p1 - p0)
            if any(float(np.linalg.norm(point - other.point)) <= 1e-12 for other in found[-4:]):
                continue
            found.append(Crossing(point=point, angle=angle, segment_a=i, segment_b=j, t=hit[0], s=hit[1]))
    return found
