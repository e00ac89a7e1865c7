"""Property tests for the algebraic and numerical invariants."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from enkbf.ensemble import Ensemble, Role, center, mean_and_perturbations, sample_covariance
from enkbf.filters import (FilterKind, MeanUpdateMode, Scheme, bgr09_perturbation_rhs, br10_rhs,
                           etkbf_step, mean_rhs, state_space_step)
from enkbf.localization import (InflationState, LocalizationConfig, adaptive_inflation_update,
                                gaspari_cohn, localize_observation_errors)
from enkbf.models import l96_tendency
from enkbf.observations import ObservationBatch, ObsErrorModel, ObsOperator
from enkbf.oracles import random_instance
from enkbf.pseudo_time import build_schedule, riccati_exact

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
seeds = st.integers(0, 2**32 - 1)


def ensembles(max_n=6, max_m=7):
    return st.tuples(st.integers(1, max_n), st.integers(2, max_m)).flatmap(
        lambda s: arrays(float, s, elements=finite))


@given(ensembles())
def test_centering_is_idempotent(x):
    mean, pert = mean_and_perturbations(Ensemble(x))
    mean2, pert2 = mean_and_perturbations(Ensemble(pert.values))
    scale = np.abs(x).max() + 1
    np.testing.assert_allclose(mean2, 0.0, atol=1e-12 * scale)
    np.testing.assert_allclose(pert2.values, pert.values, atol=1e-12 * scale)
    np.testing.assert_allclose(center(center(x)), center(x), atol=1e-12 * scale)


@given(seeds)
def test_weights_with_unit_column_sums_preserve_zero_mean(seed):
    rng = np.random.default_rng(seed)
    n, m = rng.integers(1, 8), rng.integers(2, 9)
    x = center(rng.normal(size=(n, m)) * 10)
    # unit row and column sums: W = I + (I - U) A (I - U)
    a = rng.normal(size=(m, m))
    w = np.eye(m) + center(center(a).T).T
    xw = x @ w
    scale = np.abs(x).max() * np.abs(w).max() * m
    np.testing.assert_allclose(xw.sum(axis=1), 0.0, atol=1e-8 * scale)
    p = sample_covariance(Ensemble(center(xw), Role.PERTURBATIONS))
    ref = x @ (w @ w.T / (m - 1)) @ x.T
    np.testing.assert_allclose(p, ref, rtol=1e-10, atol=1e-10 * np.abs(ref).max())


@given(seeds)
def test_unit_column_sums_alone_do_not_preserve_zero_mean(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(3, 8))
    x = center(rng.normal(size=(2, m)))
    w = rng.normal(size=(m, m))
    w += (1.0 - w.sum(axis=0)) / m          # columns sum to 1, rows generally do not
    np.testing.assert_allclose(w.sum(axis=0), 1.0, atol=1e-12)
    np.testing.assert_allclose((x @ w).sum(axis=1), x @ (w.sum(axis=1) - 1.0), atol=1e-10)


@given(st.sampled_from(["uniform", "doubling"]), st.integers(4, 40))
def test_schedules_sum_to_one(kind, n):
    sched = build_schedule(kind, n)
    assert len(sched) == n
    assert abs(sum(sched) - 1.0) <= 1e-12
    if kind == "doubling":
        assert np.all(np.diff(sched.increments) >= 0)


@given(seeds, st.floats(0.0, 1.0))
def test_riccati_symmetric_psd(seed, s):
    rng = np.random.default_rng(seed)
    n = rng.integers(1, 6)
    a = rng.normal(size=(n, n))
    h = ObsOperator(n, matrix=rng.normal(size=(rng.integers(1, 5), n)))
    r = ObsErrorModel(rng.uniform(0.1, 3.0, size=h.n_obs))
    p = riccati_exact(a @ a.T, h, r, s)
    np.testing.assert_array_equal(p, p.T)
    assert np.linalg.eigvalsh(p).min() >= -1e-10 * max(1.0, np.trace(p))


def _scalar_step(p, var, ds, scheme):
    pert = np.array([[1.0, -1.0]]) * np.sqrt(p / 2.0)
    obs = ObservationBatch(np.zeros(1), ObsOperator.identity(1), ObsErrorModel.uniform(1, var))
    x1, _ = state_space_step(pert, np.zeros(1), obs, ds, scheme, FilterKind.BGR09_STATE)
    return x1[0, 0] / pert[0, 0]


@given(st.floats(1e-3, 1e3), st.floats(1e-3, 10.0))
def test_scalar_euler_factor(beta, ds):
    factor = _scalar_step(beta, 1.0, ds, Scheme.EULER_FORWARD)
    assert np.isclose(factor, 1.0 - ds * beta / 2.0, rtol=1e-12, atol=1e-12)
    if ds > 4.0 / beta * (1 + 1e-9):
        assert factor < -1.0


@given(st.floats(1e-3, 1e3), st.floats(1e-3, 10.0))
def test_scalar_dsi_factor_is_stable_and_positive(beta, ds):
    factor = _scalar_step(beta, 1.0, ds, Scheme.DSI)
    assert np.isclose(factor, 1.0 - 0.5 * ds * beta / (ds * beta + 1.0), rtol=1e-12)
    assert 0.5 < factor <= 1.0


@settings(max_examples=50)
@given(seeds, st.sampled_from(list(Scheme)), st.floats(0.01, 1.0))
def test_etkbf_columns_stay_on_mean_manifold(seed, scheme, ds):
    ens, obs = random_instance(np.random.default_rng(seed))
    m = ens.shape[1]
    xm = ens.mean(axis=1)
    y = obs.operator.apply(ens - xm[:, None])
    base = obs.operator.apply(xm) - obs.y
    w, wm = np.eye(m), np.zeros(m)
    for _ in range(3):
        w, wm = etkbf_step(w, wm, y, base, obs.errors.variances, ds, scheme,
                           MeanUpdateMode.PER_STEP)
    if np.isfinite(w).all() and np.abs(w).max() < 1e6:
        np.testing.assert_allclose(w.sum(axis=0), 1.0, atol=1e-8 * m * max(1.0, np.abs(w).max()))


@settings(max_examples=50)
@given(seeds)
def test_full_ensemble_rhs_splits_into_perturbation_and_mean(seed):
    ens, obs = random_instance(np.random.default_rng(seed))
    xm = ens.mean(axis=1)
    pert = ens - xm[:, None]
    lhs = br10_rhs(ens, obs)
    rhs = bgr09_perturbation_rhs(pert, obs) + mean_rhs(pert, xm, obs)[:, None]
    np.testing.assert_allclose(lhs, rhs, atol=1e-12 * max(1.0, np.abs(lhs).max()))


@given(st.floats(0.1, 50.0))
def test_gaspari_cohn_boundaries(c):
    assert gaspari_cohn(0.0, c) == 1.0
    assert gaspari_cohn(2 * c, c) == 0.0
    for r in (1.0, 2.0):
        lo, hi = gaspari_cohn(r * c * (1 - 1e-12), c), gaspari_cohn(r * c * (1 + 1e-12), c)
        assert abs(lo - hi) < 1e-10
    vals = gaspari_cohn(np.linspace(0.0, 2.5 * c, 500), c)
    assert np.all(np.diff(vals) <= 1e-15) and vals.min() >= 0.0


@given(st.integers(0, 39), st.floats(0.5, 20.0), st.floats(0.1, 5.0))
def test_tapering_never_increases_weight(center_q, radius, var):
    obs = ObservationBatch(np.zeros(20), ObsOperator.every_other(40),
                           ObsErrorModel.uniform(20, var))
    _, tapered = localize_observation_errors(center_q, obs, LocalizationConfig(radius))
    assert np.all(tapered >= var)


@settings(max_examples=50)
@given(seeds, st.floats(0.0, 1.0), st.floats(1e-3, 1.0), st.floats(-1e3, 1e3))
def test_adaptive_inflation_stays_in_bounds(seed, delta0, kappa, shift):
    rng = np.random.default_rng(seed)
    y = rng.normal(size=(6, 5)) * rng.uniform(0, 3)
    d = rng.normal(size=6) * abs(shift)
    state = InflationState.adaptive_start(4, delta0, kappa=kappa, delta_max=1.0)
    new = adaptive_inflation_update(state, rng.integers(0, 4), d, y, rng.uniform(0.1, 2, 6))
    assert np.all(np.isfinite(new.delta))
    assert np.all((new.delta >= 0.0) & (new.delta <= 1.0 + 1e-12))


@given(arrays(float, 40, elements=st.floats(-20, 20)), st.integers(0, 39))
def test_l96_rotation_equivariance(x, k):
    np.testing.assert_allclose(l96_tendency(np.roll(x, k)), np.roll(l96_tendency(x), k),
                               atol=1e-12 * max(1.0, np.abs(x).max() ** 2))


@given(seeds, st.floats(-5, 5), st.floats(-5, 5))
def test_projection_is_linear(seed, a, b):
    rng = np.random.default_rng(seed)
    h = ObsOperator(5, matrix=rng.normal(size=(3, 5)))
    x, z = rng.normal(size=(5, 4)), rng.normal(size=(5, 4))
    np.testing.assert_allclose(h.apply(a * x + b * z), a * h.apply(x) + b * h.apply(z),
                               atol=1e-12 * 50)
