import math

import numpy as np
import pytest

from python.errors import ConfigError, EscapeError, InvalidPointError
from python.pws_core import (
    Coefficient,
    PolynomialPiece,
    PwsMapSpec,
    SwitchingCurve,
    border_collision_map,
    compose_along,
    evaluate,
    iterate,
    lyapunov_exponent,
    map_from_json,
    map_to_json,
)


def test_boundary_point_uses_smallest_label(corner_map):
    image, label = evaluate(corner_map, (0.0, 5.0))
    np.testing.assert_allclose(image, [6.0, 0.0])
    assert label == 'L'
    assert corner_map.region_of((0.0, 5.0)) == ('L', 'R')


def test_evaluate_fixed_point_and_right_piece(corner_map):
    image, label = evaluate(corner_map, (-4.0, 3.0))
    np.testing.assert_allclose(image, [-4.0, 3.0])
    assert label == 'L'
    image, label = evaluate(corner_map, (2.0, 0.0))
    np.testing.assert_allclose(image, [-0.2, -2.7], atol=1e-14)
    assert label == 'R'


def test_non_finite_point_is_rejected(corner_map):
    with pytest.raises(InvalidPointError):
        evaluate(corner_map, (math.nan, 0.0))
    with pytest.raises(ValueError):
        evaluate(corner_map, (math.inf, 0.0))


def test_compose_along_single_letter(corner_map):
    point, jac = compose_along(corner_map, 'L', (-4.0, 3.0))
    np.testing.assert_allclose(point, [-4.0, 3.0])
    np.testing.assert_allclose(jac, [[2.0, 1.0], [-0.75, 0.0]])


def test_compose_along_ignores_realized_regions(corner_map):
    point, _ = compose_along(corner_map, 'RL', (0.0, 1.0))
    np.testing.assert_allclose(point, [5.0, -1.5])
    point, _ = compose_along(corner_map, 'LRL', (0.0, 1.0))
    np.testing.assert_allclose(point, [-2.1, 0.15], atol=1e-14)


def test_compose_along_chain_rule(corner_map):
    p = np.array([-0.3, 0.7])
    point, jac = compose_along(corner_map, 'LRRL', p)
    expected = np.eye(2)
    q = p
    for letter in 'LRRL':
        step_point, step_jac = compose_along(corner_map, letter, q)
        expected = step_jac @ expected
        q = step_point
    np.testing.assert_allclose(point, q)
    np.testing.assert_allclose(jac, expected, rtol=1e-12)


def test_compose_twice_equals_word_of_length_two(corner_map):
    p = (0.4, -0.2)
    first, _ = compose_along(corner_map, 'R', p)
    second, _ = compose_along(corner_map, 'R', first)
    both, _ = compose_along(corner_map, 'RR', p)
    np.testing.assert_allclose(both, second)


def test_continuity_on_the_switching_line(rng):
    for _ in range(200):
        tau_L, tau_R, mu, y = rng.uniform(-3, 3, size=4)
        delta_L, delta_R = rng.uniform(-2, 2, size=2)
        spec = border_collision_map(tau_L, delta_L, tau_R, delta_R, mu)
        assert spec.continuity_defect((0.0, y)) <= 1e-10


def test_iterate_fixed_point_is_constant(corner_map):
    orbit = iterate(corner_map, (-4.0, 3.0), 50)
    assert not orbit.escaped
    assert orbit.itinerary == 'L' * 50
    np.testing.assert_allclose(orbit.points, np.tile([-4.0, 3.0], (51, 1)))


def test_iterate_splits(corner_map):
    whole = iterate(corner_map, (0.0, 0.0), 300)
    first = iterate(corner_map, (0.0, 0.0), 120)
    rest = iterate(corner_map, first.final, 180)
    assert first.itinerary + rest.itinerary == whole.itinerary
    np.testing.assert_array_equal(np.vstack([first.points, rest.points[1:]]), whole.points)


def test_iterate_flags_escape():
    spec = border_collision_map(2.0, 0.0, 2.0, 0.0, 1.0)
    orbit = iterate(spec, (1.0, 0.0), 1000, escape_radius=1e3)
    assert orbit.escaped
    assert orbit.escape_index < 20
    assert len(orbit) == orbit.escape_index + 1


def test_orbit_frame_header(corner_map):
    frame = iterate(corner_map, (0.0, 0.0), 3).to_frame()
    assert list(frame.columns) == ['i', 'x', 'y', 'label']
    assert len(frame) == 4


def test_lyapunov_negative_at_stable_fixed_point():
    spec = border_collision_map(0.5, 0.05, -0.5, 0.1, 1.0)
    x = 1.0 / (1.0 + 0.5 + 0.1)
    exponent = lyapunov_exponent(spec, (x, -0.1 * x), 10, 2000)
    assert exponent == pytest.approx(math.log(math.sqrt(0.1)), abs=0.05)


def test_lyapunov_raises_on_escape():
    spec = border_collision_map(2.0, 0.0, 2.0, 0.0, 1.0)
    with pytest.raises(EscapeError):
        lyapunov_exponent(spec, (1.0, 0.0), 100, 100)


@pytest.mark.slow
def test_lyapunov_of_corner_attractor(corner_map):
    assert lyapunov_exponent(corner_map, (0.0, 0.0), 1000, 1_000_000) == pytest.approx(0.212, abs=0.02)


def test_map_json_round_trip(corner_map):
    doc = map_to_json(corner_map)
    assert doc == {'kind': 'bcnf', 'tau_L': 2.0, 'delta_L': 0.75, 'tau_R': -0.6, 'delta_R': 1.35, 'mu': 1.0}
    assert map_from_json(doc) == corner_map


def test_polynomial_map_json_round_trip():
    switching = SwitchingCurve(((1, 0, Coefficient.const(1.0)), (0, 2, Coefficient.param('a'))))
    pieces = (
        PolynomialPiece('A', ((1, 0, Coefficient.const(0.5)), (0, 0, Coefficient.param('a'))),
                        ((0, 1, Coefficient.const(0.3)),), ((0, -1),)),
        PolynomialPiece('B', ((1, 0, Coefficient.const(0.5)), (0, 0, Coefficient.param('a')),
                              (0, 2, Coefficient.const(0.0))),
                        ((0, 1, Coefficient.const(0.3)), (2, 1, Coefficient.param('a', 2.0))), ((0, 1),)),
    )
    spec = PwsMapSpec(pieces=pieces, switching=(switching,), params=(('a', 0.25),))
    again = map_from_json(map_to_json(spec))
    for p in [(-1.0, 0.5), (0.7, -0.2)]:
        np.testing.assert_allclose(evaluate(again, p)[0], evaluate(spec, p)[0])
    assert not spec.is_affine


def test_map_json_errors():
    with pytest.raises(ConfigError, match='tau_R'):
        map_from_json({'kind': 'bcnf', 'tau_L': 2.0, 'delta_L': 0.75, 'delta_R': 1.0, 'mu': 1.0})
    with pytest.raises(ConfigError):
        map_from_json([1, 2])


def test_preimages_of_normal_form(corner_map):
    found = dict(corner_map.preimages((6.0, 0.0)))
    np.testing.assert_allclose(found['L'], [0.0, 5.0])
    for label, p in found.items():
        np.testing.assert_allclose(corner_map.piece(label).value(p, corner_map.param_dict), [6.0, 0.0], atol=1e-12)
