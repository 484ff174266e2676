"""
The sub-commands of the command line.

Each ``run_<command>`` takes a parsed ``ExperimentConfig``, writes its
artifacts and a ``manifest.json`` into the output directory and returns the
number of tasks it ran.  The manifest is written on success, on failure and on
interruption; failed tasks make the run partial (exit code 4) after all
surviving results have been written.
"""
import contextlib
import logging
import math
from dataclasses import asdict

import numpy as np
import pandas as pd
from tabulate import tabulate

from python import plotters
from python.errors import ConfigError, CornerUnfoldError, NumericError, PartialResultsError
from python.file_manager import ArtifactWriter, RunManifest
from python.homoclinic import (
    check_extra_intersections,
    corner_distance,
    locate_corner,
    trace_corner_curve,
    transversality_certificate,
)
from python.manifolds import GrowthBudget, grow_manifolds
from python.modelock import TongueGridSpec, scan_tongues, simulate_cell
from python.normal_form import NormalFormParams, affine_fixed_point, tent_shadowing
from python.parameters import Parameters
from python.periodic import (
    MapFamily,
    MapFamily2,
    bcb_sequence,
    excursion_from_corner,
    find_single_round,
    scaling_ratios,
    scaling_slope,
    scan_periodic_instability,
    solve_periodic,
)
from python.pws_core import iterate, lyapunov_exponent, map_from_json
from python.unfolding import (
    ReducedNormalFormParams,
    UnfoldingParams,
    hatted_transform,
    predict,
    run_oracle_suite,
    tilded_transform,
    validate_genericity,
)

logger = logging.getLogger(__name__)


@contextlib.contextmanager
def run_context(config, command, workers, out_dir):
    writer = ArtifactWriter(config.output_dir(out_dir))
    manifest = RunManifest(command=command, config_hash=config.digest(), seed=config.seed(), workers=workers)
    try:
        yield writer, manifest
    except KeyboardInterrupt:
        manifest.write(writer, 'interrupted')
        raise
    except CornerUnfoldError as err:
        manifest.notes.append(f'{type(err).__name__}: {err}')
        manifest.write(writer, 'partial' if isinstance(err, PartialResultsError) else 'failed')
        raise
    else:
        failed = manifest.failed_tasks
        manifest.write(writer, 'partial' if failed else 'ok')
        if failed:
            raise PartialResultsError(f'{len(failed)} tasks failed: {", ".join(failed)}', failed)


def load_map(config):
    if 'map' not in config:
        raise ConfigError('map: missing block')
    return map_from_json(config['map'], 'map')


def _saddle(spec, label):
    saddle = affine_fixed_point(spec, label)
    if not saddle.is_saddle:
        raise NumericError(f'fixed point of piece {label} is a {saddle.kind}, not a saddle')
    return saddle


def _orbit_cloud(spec, block):
    """The forward orbit of ``start`` with ``n`` points, the first ``transient`` dropped."""
    start = block.numbers('start', 2, [0.0, 0.0])
    n = block.integer('n', 10000, minimum=0)
    transient = block.integer('transient', 0, minimum=0)
    if n == 0:
        return pd.DataFrame({'i': [], 'x': [], 'y': [], 'label': []}), None
    segment = iterate(spec, start, n - 1, block.number('escape_radius', 1e6))
    frame = segment.to_frame()
    frame = frame[frame['i'] >= transient].reset_index(drop=True)
    return frame, segment


def _note_escape(manifest, segment):
    if segment is not None and segment.escaped:
        manifest.notes.append(f'orbit escaped at step {segment.escape_index}')
        logger.warning('orbit escaped at step %d', segment.escape_index)


def run_iterate(config, workers=1, plot=False, out_dir=None):
    spec = load_map(config)
    block = config.block('iterate')
    with run_context(config, 'iterate', workers, out_dir) as (writer, manifest):
        frame, segment = _orbit_cloud(spec, block)
        writer.csv('orbit.csv', frame)
        _note_escape(manifest, segment)
        if 'lyapunov' in block:
            sub = block.block('lyapunov')
            exponent = lyapunov_exponent(spec, block.numbers('start', 2, [0.0, 0.0]),
                                         sub.integer('transient', 1000, minimum=0),
                                         sub.integer('samples', 100000, minimum=1))
            writer.json('lyapunov.json', {'exponent': exponent})
            logger.info('largest Lyapunov exponent %.6g', exponent)
        if plot:
            writer.svg('orbit.svg', plotters.plot_portrait(frame[['x', 'y']].to_numpy(), title=config.name))
    return 1


def _manifold_frames(polylines):
    frames = []
    for (side, branch), polyline in sorted(polylines.items()):
        frame = polyline.to_frame()
        frame.insert(0, 'branch', branch)
        frame.insert(0, 'side', side)
        frames.append(frame)
    return pd.concat(frames, ignore_index=True) if frames else pd.DataFrame()


def _normal_form_params(spec):
    try:
        return NormalFormParams.from_map(spec)
    except ValueError as err:
        raise ConfigError(f'map: {err}') from err


def _reduced_from_map(spec):
    params = _normal_form_params(spec)
    return ReducedNormalFormParams(params.tau_L, params.delta_L, params.tau_R, params.delta_R), params.mu


def run_portrait(config, workers=1, plot=False, out_dir=None):
    spec = load_map(config)
    block = config.block('portrait')
    with run_context(config, 'portrait', workers, out_dir) as (writer, manifest):
        points, segment = None, None
        if 'orbit' in block:
            frame, segment = _orbit_cloud(spec, block.block('orbit'))
            writer.csv('orbit.csv', frame)
            _note_escape(manifest, segment)
            points = frame[['x', 'y']].to_numpy()

        polylines = {}
        if 'manifolds' in block:
            sub = block.block('manifolds')
            saddle = _saddle(spec, sub.string('saddle', spec.labels[0], spec.labels))
            budget = GrowthBudget.from_json(sub.get('budget', {}))
            branches = tuple(int(b) for b in sub.numbers('branches', None, [1, -1]))
            polylines, statuses = grow_manifolds(spec, saddle, budget, branches=branches, workers=workers)
            manifest.add_tasks(statuses)
            writer.csv('manifolds.csv', _manifold_frames(polylines))

        orbits = []
        for itinerary in block.get('periodic', []):
            orbit = solve_periodic(spec, itinerary)
            if not orbit.admissible():
                logger.warning('periodic orbit %s is not admissible (margin %.3g)', itinerary,
                               orbit.admissibility_margin)
            orbits.append(orbit)
        if orbits:
            writer.csv('periodic.csv', pd.concat([pd.DataFrame({
                'itinerary': o.itinerary, 'idx': np.arange(o.period), 'x': o.points[:, 0], 'y': o.points[:, 1],
                'stability': o.stability, 'margin': o.margins}) for o in orbits], ignore_index=True))

        if 'certificate' in block:
            sub = block.block('certificate')
            reduced, mu = _reduced_from_map(spec)
            certificate = transversality_certificate(reduced, mu, sub.get('side'))
            writer.json('certificate.json', certificate.to_json())
            logger.info('transversality certificate on %s: crossing=%s', certificate.side, certificate.crossing)

        if plot:
            limits = block.numbers('limits', 4) if 'limits' in block else None
            writer.svg('portrait.svg', plotters.plot_portrait(points, list(polylines.values()), orbits,
                                                              title=config.name, limits=limits))
    return 1 + len(polylines)


def _locate(spec, block):
    """Corner parameter from ``corner.value`` or by bracketing ``corner.bracket``."""
    if 'value' in block:
        return block.number('value')
    family = MapFamily(spec, block.string('family', 'delta_R'))
    return locate_corner(family, block.numbers('bracket', 2), block.string('saddle', spec.labels[0]),
                         kink_index=block.integer('kink_index', 0, minimum=0))


def run_bifdiag(config, workers=1, plot=False, out_dir=None):
    spec = load_map(config)
    block = config.block('bifdiag')
    corner_block = block.block('corner')
    parameter = corner_block.string('family', 'delta_R')
    saddle_label = corner_block.string('saddle', spec.labels[0], spec.labels)
    periods = block.numbers('periods', 2)
    periods = range(int(periods[0]), int(periods[1]) + 1)
    with run_context(config, 'bifdiag', workers, out_dir) as (writer, manifest):
        corner = _locate(spec, corner_block)
        family = MapFamily(spec, parameter)
        at_corner = family(corner)
        saddle = _saddle(at_corner, saddle_label)
        word, switch_index = excursion_from_corner(at_corner, saddle, corner_distance(at_corner, saddle))
        logger.info('corner at %s = %.15g, excursion word %s', parameter, corner, word)

        records = bcb_sequence(family, saddle, word, periods, corner, block.number('first_seed', corner),
                               switch_index)
        frame = pd.DataFrame({
            'n': [r.n for r in records], 'xi_bcb': [r.xi for r in records], 'branch': [r.branch for r in records],
            'x_on_switching': [r.x_on_switching for r in records], 'trace': [r.trace for r in records],
            'det': [r.det for r in records],
        })
        writer.csv('bifdiag.csv', frame)
        manifest.tasks.extend({'index': i, 'name': f'n_{r.n}', 'status': 'ok' if r.ok else 'failed',
                               'message': r.message} for i, r in enumerate(records) if r.branch == 'X')

        found = [(r.n, r.xi) for r in records if r.ok and r.branch == 'X']
        summary = {'parameter': parameter, 'corner': corner, 'excursion_word': word, 'sigma': saddle.sigma}
        scaling = None
        if len(found) >= 2:
            ns, values = zip(*found)
            ratios = scaling_ratios(values, corner)
            scaling = pd.DataFrame({'n': ns[:-1], 'xi_bcb': values[:-1], 'ratio': ratios})
            writer.csv('scaling.csv', scaling)
            summary['slope'] = scaling_slope(ns, values, corner)
            summary['slope_ratio'] = math.exp(-summary['slope'])
            print(tabulate(scaling.to_numpy(), headers=list(scaling.columns), floatfmt='.10g'))

        if 'curves' in block:
            writer.csv('bifdiag_curves.csv', _bifurcation_curves(spec, saddle_label, word, switch_index, records,
                                                                 block.block('curves')))

        if 'instability' in block:
            sub = block.block('instability')
            window = sub.numbers('window', 3)
            report = scan_periodic_instability(family, saddle, word, sub.integer('max_q', 3, minimum=1),
                                               sub.integer('max_period', 40, minimum=2),
                                               (window[0], window[1], int(window[2])), switch_index,
                                               workers=workers)
            writer.csv('instability.csv', pd.DataFrame([asdict(e) for e in report.entries],
                                                        columns=['itinerary', 'q', 'period', 'parameter',
                                                                 'spectral_radius', 'margin', 'stability']))
            summary['instability'] = {'candidates': report.candidates, 'admissible': len(report.entries),
                                      'stable_or_neutral': len(report.flagged)}
        writer.json('bifdiag.json', summary)
        if plot:
            writer.svg('bifdiag.svg', plotters.plot_bifdiag(frame[frame['branch'] == 'X'], parameter, corner,
                                                            scaling))
    return len(periods)


def _bifurcation_curves(spec, saddle_label, word, switch_index, records, block):
    """x-coordinate of the switching point of each family over a parameter window around its collision."""
    samples = block.integer('samples', 41, minimum=2)
    width = block.number('width', 0.02)
    parameter = block.string('family', 'delta_R')
    family = MapFamily(spec, parameter)
    rows = []
    for record in records:
        if not record.ok:
            continue
        k = record.n - len(word)
        for value in np.linspace(record.xi - width, record.xi + width, samples):
            at = family(float(value))
            try:
                saddle = _saddle(at, saddle_label)
                orbit = find_single_round(at, saddle, word, record.branch, k, switch_index)
            except NumericError:
                continue
            rows.append({'n': record.n, 'branch': record.branch, 'parameter': float(value),
                         'x': float(orbit.orbit.points[orbit.switch_point][0]),
                         'admissible': bool(orbit.orbit.admissible())})
    return pd.DataFrame(rows, columns=['n', 'branch', 'parameter', 'x', 'admissible'])


def run_corner(config, workers=1, plot=False, out_dir=None):
    spec = load_map(config)
    block = config.block('corner')
    parameter = block.string('family', 'delta_R')
    saddle_label = block.string('saddle', spec.labels[0], spec.labels)
    with run_context(config, 'corner', workers, out_dir) as (writer, manifest):
        corner = _locate(spec, block)
        at_corner = MapFamily(spec, parameter)(corner)
        saddle = _saddle(at_corner, saddle_label)
        distance = corner_distance(at_corner, saddle, kink_index=block.integer('kink_index', 0, minimum=0))
        word, _ = excursion_from_corner(at_corner, saddle, distance)
        extra = check_extra_intersections(at_corner, saddle, distance.iterations_used)
        writer.json('corner.json', {
            'parameter': parameter, 'value': corner, 'residual': distance.value,
            'return_index': distance.iterations_used, 'provenance': distance.kink_id.to_json(),
            'excursion_word': word, 'extra_intersections': extra,
        })
        loci = [_trace(spec, _sub(doc, index, 'corner.trace'), saddle_label, writer, manifest, index)
                for index, doc in enumerate(block.get('trace', []))]
    return 1 + len(loci)


def _sub(doc, index, where):
    if not isinstance(doc, dict):
        raise ConfigError(f'{where}[{index}]: expected an object')
    return Parameters(doc, f'{where}[{index}]')


def _trace(spec, block, saddle_label, writer, manifest, index):
    names = block.get('family', ['tau_R', 'delta_R'])
    if not (isinstance(names, list) and len(names) == 2 and all(isinstance(n, str) for n in names)):
        raise ConfigError(f'{block.where}.family: expected two parameter names')
    locus = trace_corner_curve(MapFamily2(spec, tuple(names)), block.numbers('seed', 2), block.number('step'),
                               block.numbers('span', 2), saddle_label)
    frame = locus.to_frame()
    frame['return_index'] = locus.return_indices
    writer.csv(f'corner_curve_{index}.csv', frame)
    manifest.tasks.append({'index': index, 'name': f'corner_curve_{index}',
                           'status': 'failed' if locus.stalled and not len(locus) else 'ok',
                           'message': '; '.join(locus.messages)})
    if locus.stalled:
        manifest.notes.append(f'corner curve {index} stalled: {"; ".join(locus.messages)}')
    return locus


def _tongues(config, block, workers, writer, manifest):
    grid = TongueGridSpec.from_json(block.get('grid', {}), f'{block.where}.grid')
    tongues = scan_tongues(grid, workers=workers)
    manifest.add_tasks(tongues.statuses)
    writer.csv('tongues.csv', tongues.to_frame())
    if 'simulate' in block:
        sub = block.block('simulate')
        cells = tongues.cells()
        rng = np.random.default_rng(np.random.SeedSequence(config.seed()))
        count = min(sub.integer('samples', 200, minimum=1), len(cells))
        chosen = sorted(rng.choice(len(cells), size=count, replace=False)) if count else []
        converged = [simulate_cell(grid, cells[i], rng, sub.integer('transient', 1000, minimum=0))
                     for i in chosen]
        fraction = float(np.mean(converged)) if converged else math.nan
        writer.json('simulation.json', {'samples': count, 'converged': int(sum(converged)), 'fraction': fraction})
        logger.info('direct simulation converged in %d of %d sampled cells', sum(converged), count)
    return grid, tongues


def run_tongues(config, workers=1, plot=False, out_dir=None):
    block = config.block('tongues')
    with run_context(config, 'tongues', workers, out_dir) as (writer, manifest):
        grid, tongues = _tongues(config, block, workers, writer, manifest)
        if plot:
            writer.svg('tongues.svg', plotters.plot_tongues(tongues.raster(), period_cap=grid.period_cap))
    return len(tongues.statuses)


def run_sweep(config, workers=1, plot=False, out_dir=None):
    spec = load_map(config)
    block = config.block('sweep')
    with run_context(config, 'sweep', workers, out_dir) as (writer, manifest):
        grid, tongues = _tongues(config, block, workers, writer, manifest)
        saddle_label = block.string('saddle', spec.labels[0], spec.labels)
        loci = [_trace(spec, _sub(doc, index, 'sweep.corner_curves'), saddle_label, writer, manifest, index)
                for index, doc in enumerate(block.get('corner_curves', []))]
        if plot:
            dots = [tuple(dot) for dot in block.get('dots', [])]
            writer.svg('sweep.svg', plotters.plot_tongues(tongues.raster(), loci, dots, grid.period_cap))
    return len(tongues.statuses) + len(loci)


def _params_report(doc, index, block):
    try:
        u = UnfoldingParams.from_json(doc, f'validate.params[{index}]')
    except ConfigError as err:
        return {'index': index, 'rejected': str(err)}
    genericity = validate_genericity(u)
    entry = {'index': index, 'params': u.to_json(), 'genericity': genericity.to_json()}
    if not genericity.passed:
        entry['rejected'] = list(genericity.failed)
        logger.warning('parameter set %d rejected: %s', index, ', '.join(genericity.failed))
        return entry
    k = block.integer('k', 10, minimum=1)
    prediction = predict(u, k)
    hatted = hatted_transform(u, k)
    tilded = tilded_transform(hatted)
    entry['prediction'] = {'k': k, 'xi_k': prediction.xi_k, 'bcb_side': prediction.bcb_side,
                           'admissible_side': prediction.admissible_side}
    entry['exact_xi_k'] = hatted.xi_k
    entry['reduced'] = asdict(tilded.reduced)
    try:
        certificate = transversality_certificate(tilded.reduced, float(np.sign(u.bX2)))
        entry['certificate'] = certificate.to_json()
    except NumericError as err:
        entry['certificate'] = {'error': str(err)}
    return entry


def run_validate(config, workers=1, plot=False, out_dir=None):
    """Random-draw suite; exits 3 when a check fails and 4 when draws could not be evaluated."""
    block = config.block('validate')
    ks = block.numbers('ks', 2, [6, 14])
    tolerances = block.block('tolerances', required=False)
    with run_context(config, 'validate', workers, out_dir) as (writer, manifest):
        certificate_k = block.get('certificate_k')
        report = run_oracle_suite(
            n_draws=block.integer('draws', 100, minimum=0), ks=range(int(ks[0]), int(ks[1]) + 1),
            seed=config.seed(), workers=workers, eigen_k=block.integer('eigen_k', 12, minimum=1),
            certificate_k=None if certificate_k is None else block.integer('certificate_k', minimum=1),
            quadrant_k=block.integer('quadrant_k', 10, minimum=1),
            oracle_tol=tolerances.number('oracle', 1e-10), fit_tol=tolerances.number('fit', 0.1),
            eigen_tol=tolerances.number('eigen', 0.02),
        )
        doc = report.to_json()
        doc['params'] = [_params_report(entry, i, block) for i, entry in enumerate(block.get('params', []))]
        writer.json('validate.json', doc)
        rows = [(name, 'pass' if ok else 'FAIL') for name, ok in report.checks.items()]
        rows += [(f'quadrant c2{q.sign_c2:+d} bX2{q.sign_bX2:+d}', 'pass' if q.consistent else 'FAIL')
                 for q in report.quadrants]
        print(tabulate(rows, headers=['check', 'result']))
        for index, failure in enumerate(report.failed_tasks):
            name, _, message = failure.partition(': ')
            manifest.tasks.append({'index': index, 'name': name, 'status': 'failed', 'message': message})
        failed = [name for name, ok in report.checks.items() if not ok and name != 'tasks']
        if failed:
            raise NumericError(f'validation checks failed: {", ".join(failed)}')
    return len(report.draws)


def run_tent(config, workers=1, plot=False, out_dir=None):
    spec = load_map(config)
    block = config.block('tent')
    params = _normal_form_params(spec)
    with run_context(config, 'tent', workers, out_dir) as (writer, manifest):
        deviation, tent, orbit = tent_shadowing(params, block.number('x0', 0.0), block.integer('n', 100, minimum=0))
        orbit_x = orbit.points[:, 0]
        frame = pd.DataFrame({'i': np.arange(len(tent)), 'tent': tent,
                              'x': np.concatenate([orbit_x, np.full(len(tent) - len(orbit_x), np.nan)])})
        writer.csv('tent.csv', frame)
        writer.json('tent.json', {'max_deviation': deviation, 'delta_L': params.delta_L, 'delta_R': params.delta_R})
        if orbit.escaped:
            manifest.notes.append(f'normal form orbit escaped at step {orbit.escape_index}')
        if plot:
            writer.svg('tent.svg', plotters.plot_tent(tent, orbit_x))
    return 1


COMMANDS = {
    'iterate': run_iterate,
    'portrait': run_portrait,
    'bifdiag': run_bifdiag,
    'sweep': run_sweep,
    'corner': run_corner,
    'validate': run_validate,
    'tongues': run_tongues,
    'tent': run_tent,
}
