from dataclasses import replace

import numpy as np
import pytest

from python.errors import ConfigError, GenericityError, NotObservableError
from python.unfolding import (
    DEFAULT_QUADRANT_PARAMS,
    HattedMap,
    UnfoldingParams,
    bifurcation_quadrants,
    build_synthetic_map,
    compose_rounds,
    fit_scaling,
    hatted_transform,
    locate_synthetic_bcb,
    predict,
    run_draw,
    run_oracle_suite,
    tilded_transform,
    validate_genericity,
)

U = DEFAULT_QUADRANT_PARAMS


def test_genericity_of_default_constants():
    report = validate_genericity(U)
    assert report.passed
    assert report.failed == ()
    assert set(report.to_json()) == {'saddle_eigenvalues', 'dissipative', 'transverse_return', 'corner',
                                     'unfolding_parameter'}


def test_genericity_failures_are_named():
    report = validate_genericity(replace(U, bY2=-1.0, sigma=2.5))
    assert report.failed == ('dissipative', 'corner')
    with pytest.raises(GenericityError) as err:
        report.require()
    assert err.value.failed == ('dissipative', 'corner')
    with pytest.raises(GenericityError):
        predict(replace(U, c2=0.0), 5)


def test_params_from_json():
    assert UnfoldingParams.from_json(U.to_json()) == U
    with pytest.raises(ConfigError, match='unknown fields'):
        UnfoldingParams.from_json({**U.to_json(), 'gamma': 1.0})
    with pytest.raises(ConfigError):
        UnfoldingParams.from_json({**U.to_json(), 'r': 1})
    with pytest.raises(ConfigError):
        UnfoldingParams.from_json({'lam': 0.5})


def test_leading_order_prediction():
    prediction = predict(U, 5)
    assert prediction.xi_k == pytest.approx(1.5**-5)
    assert prediction.bcb_side == 1
    assert prediction.admissible_side == -1
    x_branch = prediction.branches['X']
    assert x_branch.trace == pytest.approx(-(1.5**5))
    assert x_branch.gamma_s == pytest.approx(-0.5 * 0.5**5)
    assert x_branch.fixed_point[0] == pytest.approx(0.5**5)


def test_synthetic_bcb_closed_form():
    synthetic = build_synthetic_map(U, 5)
    assert synthetic.is_exact
    assert synthetic.bcb() == pytest.approx(1.5**-5 - 0.5**5, rel=1e-12)
    assert synthetic.bcb() == pytest.approx(0.100437, abs=1e-6)
    point = synthetic.fixed_point('X', synthetic.bcb())
    assert point[1] == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(synthetic.fixed_point('Y', synthetic.bcb()), point, atol=1e-12)


def test_numerical_bcb_matches_oracle():
    for k in (6, 10, 14):
        synthetic = build_synthetic_map(U, k)
        assert locate_synthetic_bcb(synthetic) == pytest.approx(synthetic.bcb(), abs=1e-12)


def test_quadratic_remainder():
    synthetic = build_synthetic_map(U, 8, {'y': {'xx': 0.3, 'yxi': -0.2}})
    assert not synthetic.is_exact
    with pytest.raises(ValueError):
        synthetic.fixed_point('X', 0.0)
    value = locate_synthetic_bcb(synthetic)
    assert value == pytest.approx(build_synthetic_map(U, 8).bcb(), rel=1e-3)
    with pytest.raises(ValueError):
        build_synthetic_map(U, 8, {'z': {'xx': 1.0}})
    with pytest.raises(ValueError):
        build_synthetic_map(U, 8, {'x': {'xxx': 1.0}})


def test_hatted_coefficients_scale_with_k():
    hatted = hatted_transform(U, 7)
    ratios = hatted.leading_order_ratios()
    for name in ('a2', 'c2', 'bX2', 'bY2', 'bX1', 'bY1'):
        assert ratios[name] == pytest.approx(1.0, rel=1e-12)
    assert hatted.xi_k == pytest.approx(1.5**-7 - 0.5**7)
    image = hatted.image((0.0, 0.0), 0.0)
    np.testing.assert_allclose(image, [0.0, 0.0], atol=1e-9)


def test_tilded_transform_reaches_normal_form():
    tilded = tilded_transform(hatted_transform(U, 7))
    for branch in ('X', 'Y'):
        assert tilded.roundtrip_error(branch) < 1e-9
    assert tilded.reduced.tauX == pytest.approx(-(1.5**7))
    assert tilded.reduced.deltaX == pytest.approx(0.5 * 0.75**7)
    z, xi = tilded.to_tilded((0.3, -0.2), 0.01)
    back, xi_back = tilded.from_tilded(z, xi)
    np.testing.assert_allclose(back, [0.3, -0.2])
    assert xi_back == pytest.approx(0.01)


def test_tilded_transform_needs_observability():
    hatted = HattedMap(a1=0.1, a2=0.0, bX1=0.0, bX2=-1.0, bY1=0.0, bY2=1.0, c1=0.0, c2=1.0)
    with pytest.raises(NotObservableError):
        tilded_transform(hatted)
    with pytest.raises(NotObservableError):
        tilded_transform(replace(hatted, a2=1.0, c2=0.0))


def test_bifurcation_quadrants_match_prediction():
    quadrants = bifurcation_quadrants(U, 10)
    assert len(quadrants) == 4
    assert {(q.sign_c2, q.sign_bX2) for q in quadrants} == {(-1, -1), (-1, 1), (1, -1), (1, 1)}
    for quadrant in quadrants:
        assert quadrant.consistent, quadrant
        assert quadrant.to_json()['consistent']


def test_compose_rounds():
    single = compose_rounds(U, (5,), ('X',))
    np.testing.assert_allclose(single, build_synthetic_map(U, 5).linear_part('X')[0])
    double = compose_rounds(U, (5, 6), ('X', 'Y'))
    expected = build_synthetic_map(U, 6).linear_part('Y')[0] @ single
    np.testing.assert_allclose(double, expected)
    with pytest.raises(ValueError):
        compose_rounds(U, (5, 6), ('X',))


def test_fit_scaling_recovers_exact_constants():
    ks = np.arange(6, 15)
    values = 1.5**-ks - 0.5**ks
    C1, C2, residual = fit_scaling(U, ks, values)
    assert C1 == pytest.approx(-1.0, rel=1e-8)
    assert C2 == pytest.approx(0.0, abs=1e-6)
    assert residual < 1e-8


def test_single_draw():
    result = run_draw(0, U, range(6, 10), eigen_k=12)
    assert result.max_error < 1e-10
    assert result.eigen_ratio_u == pytest.approx(1.0, abs=0.02)
    assert result.eigen_ratio_s == pytest.approx(1.0, abs=0.02)
    assert result.certificate_crossing is None
    assert result.to_json()['params'] == U.to_json()


def test_oracle_suite_is_reproducible():
    first = run_oracle_suite(n_draws=3, ks=range(6, 10), seed=7)
    second = run_oracle_suite(n_draws=3, ks=range(6, 10), seed=7)
    assert first.to_json() == second.to_json()
    assert len(first.draws) == 3
    assert first.checks['oracle_agreement']
    assert first.checks['quadrants']
    assert first.checks['tasks']
