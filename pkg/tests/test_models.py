import numpy as np
import pytest

from enkbf.models import (ModelDivergence, ModelSpec, l96_tendency, rk4_advance, rk4_step,
                          tendency)


def test_l63_origin_is_fixed_point():
    np.testing.assert_array_equal(tendency(ModelSpec.lorenz63(), np.zeros(3)), 0.0)


def test_l63_nontrivial_equilibrium():
    q = np.sqrt(72.0)
    np.testing.assert_allclose(tendency(ModelSpec.lorenz63(), np.array([q, q, 27.0])), 0.0,
                               atol=1e-12)


def test_l96_forcing_state_is_fixed_point():
    spec = ModelSpec.lorenz96()
    x = np.full(40, 8.0)
    np.testing.assert_array_equal(tendency(spec, x), 0.0)
    np.testing.assert_array_equal(rk4_advance(spec, x, 37), x)


def test_l96_tendency_by_hand():
    x = np.arange(1.0, 6.0)
    # q = 0: (x1 - x_{-2}) * x_{-1} - x0 + F = (2 - 4) * 5 - 1 + 8
    assert l96_tendency(x, 8.0)[0] == pytest.approx(-3.0)


def test_zero_steps_returns_copy():
    x = np.array([1.0, 2.0, 3.0])
    out = rk4_advance(ModelSpec.lorenz63(), x, 0)
    np.testing.assert_array_equal(out, x)
    assert out is not x


def test_compiled_integrator_matches_reference(rng):
    for spec, n in ((ModelSpec.lorenz63(), 3), (ModelSpec.lorenz96(), 40)):
        x = rng.normal(size=(n, 3)) + 1.0
        ref = x.copy()
        for _ in range(20):
            ref = rk4_step(lambda z: tendency(spec, z), ref, spec.dt)
        np.testing.assert_allclose(rk4_advance(spec, x, 20), ref, rtol=1e-13, atol=1e-13)


def test_vector_and_ensemble_shapes_agree(rng):
    spec = ModelSpec.lorenz96()
    x = rng.normal(size=(40, 2)) + 8.0
    ens = rk4_advance(spec, x, 5)
    np.testing.assert_array_equal(rk4_advance(spec, x[:, 1], 5), ens[:, 1])


def test_rk4_order_on_linear_problem():
    errs = []
    for dt in (0.1, 0.05, 0.025):
        x = np.array([1.0])
        for _ in range(int(round(1.0 / dt))):
            x = rk4_step(lambda z: -z, x, dt)
        errs.append(abs(x[0] - np.exp(-1.0)))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all((orders >= 3.8) & (orders <= 4.2))


def test_l96_rotation_commutes_with_tendency(rng):
    x = rng.normal(size=40) * 3 + 8
    for k in (1, 7, 39):
        np.testing.assert_allclose(l96_tendency(np.roll(x, k)), np.roll(l96_tendency(x), k),
                                   atol=1e-12)


def test_blowup_detected():
    spec = ModelSpec.lorenz63(dt=1.0)
    with pytest.raises(ModelDivergence):
        rk4_advance(spec, np.array([1e3, -1e3, 1e3]), 50)


def test_spec_validation():
    with pytest.raises(ValueError):
        ModelSpec(kind="l99")
    with pytest.raises(ValueError):
        ModelSpec(dt=0.0)
    with pytest.raises(ValueError):
        ModelSpec(kind="l96", n=3)
    with pytest.raises(ValueError):
        tendency(ModelSpec.lorenz63(), np.zeros(4))
    with pytest.raises(ValueError):
        rk4_advance(ModelSpec.lorenz63(), np.zeros(3), -1)
