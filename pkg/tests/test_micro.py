"""Frozen-chain integration, drift estimation, and ergodicity diagnostics."""

import math
from dataclasses import replace

import numpy as np
import pytest

import mtem_sim as ms


def _system_without_scalar_forms():
    s = ms.builtin_example_7_1()
    return replace(s, coefficients=replace(s.coefficients, scalar_forms=None))


def _constant_fast_system(y_dot=0.0):
    s = ms.builtin_example_7_1()
    coeffs = replace(
        s.coefficients,
        fast_drift=lambda x, y: np.full(1, y_dot),
        fast_diffusion=lambda x, y: np.zeros((1, 1)),
        scalar_forms=None,
        averaged_drift=None,
        invariant_sampler=None,
    )
    return replace(s, coefficients=coeffs)


def test_zero_noise_recursion():
    s = ms.builtin_example_7_1()
    grid = ms.IncrementGrid.zeros(0.5, 2, 1)
    path = ms.frozen_em(s, np.array([1.0]), np.array([0.0]), 0.5, 2, grid)
    assert np.array_equal(path.states.ravel(), [0.0, 0.5, 0.75])
    assert path.diverged_at is None


def test_frozen_dynamics_with_zero_coefficients():
    s = _constant_fast_system(0.0)
    grid = ms.IncrementGrid.zeros(0.25, 10, 1)
    path = ms.frozen_em(s, np.array([2.0]), np.array([1.5]), 0.25, 10, grid)
    assert np.all(path.states == 1.5)


def test_mean_of_discrete_chain_matches_linear_recursion():
    # E[Y_m] = x + (y0 - x)(1 - dt)^m for the OU chain
    s = ms.builtin_example_7_1()
    m, dt, x = 20, 0.1, 2.0
    expected = x * (1.0 - (1.0 - dt) ** m)
    n = 100_000
    total = 0.0
    for j in range(n):
        grid = ms.micro_increments(ms.NoisePlan(13, j), 0, 1, dt, m)
        path = ms.frozen_em(s, np.array([x]), np.array([0.0]), dt, m, grid)
        total += path.states[m, 0]
    assert total / n == pytest.approx(expected, abs=0.01)


def test_scalar_and_generic_paths_agree_bit_for_bit():
    s = ms.builtin_example_7_1()
    s_generic = _system_without_scalar_forms()
    grid = ms.micro_increments(ms.NoisePlan(5, 0), 0, 1, 0.125, 200)
    a = ms.frozen_em(s, np.array([1.3]), np.array([-0.4]), 0.125, 200, grid)
    b = ms.frozen_em(s_generic, np.array([1.3]), np.array([-0.4]), 0.125, 200, grid)
    assert np.array_equal(a.states, b.states)
    ea = ms.estimate_drift(s, np.array([1.3]), a)
    eb = ms.estimate_drift(s_generic, np.array([1.3]), b)
    assert np.array_equal(ea.value, eb.value)


def test_estimator_of_constant_path():
    s = _constant_fast_system(0.0)
    grid = ms.IncrementGrid.zeros(0.5, 4, 1)
    path = ms.frozen_em(s, np.array([2.0]), np.array([3.0]), 0.5, 4, grid)
    est = ms.estimate_drift(s, np.array([2.0]), path)
    assert est.value[0] == pytest.approx(-(2.0**3) - 3.0)
    assert est.M_used == 4


def test_estimator_single_step():
    s = ms.builtin_example_7_1()
    grid = ms.micro_increments(ms.NoisePlan(3, 1), 0, 1, 0.5, 1)
    path = ms.frozen_em(s, np.array([1.0]), np.array([0.5]), 0.5, 1, grid)
    est = ms.estimate_drift(s, np.array([1.0]), path)
    y1 = path.states[1, 0]
    assert est.value[0] == -1.0 - y1


def test_estimator_excludes_start_point():
    # a path whose start differs wildly from the rest must not contribute
    s = _constant_fast_system(0.0)
    grid = ms.IncrementGrid.zeros(0.5, 3, 1)
    path = ms.frozen_em(s, np.array([0.0]), np.array([100.0]), 0.5, 3, grid)
    est = ms.estimate_drift(s, np.array([0.0]), path)
    assert est.value[0] == -100.0  # average of b(0, 100) over m=1..3


def test_estimator_is_linear_in_drift():
    s = ms.builtin_example_7_1()
    grid = ms.micro_increments(ms.NoisePlan(17, 0), 2, 1, 0.25, 50)
    path = ms.frozen_em(s, np.array([0.7]), np.array([0.0]), 0.25, 50, grid)
    c = s.coefficients
    s1 = replace(s, coefficients=replace(c, slow_drift=lambda x, y: -(x**3), scalar_forms=None))
    s2 = replace(s, coefficients=replace(c, slow_drift=lambda x, y: -y, scalar_forms=None))
    full = ms.estimate_drift(s, np.array([0.7]), path).value
    part = (
        ms.estimate_drift(s1, np.array([0.7]), path).value
        + ms.estimate_drift(s2, np.array([0.7]), path).value
    )
    assert np.allclose(full, part, rtol=0, atol=1e-15)


def test_ergodic_average_converges_to_averaged_drift():
    # stationary mean of the frozen chain at x=1 is 1, so the estimate -> -2
    s = ms.builtin_example_7_1()
    dt, m = 0.01, 1_000_000
    grid = ms.micro_increments(ms.NoisePlan(23, 0), 0, 1, dt, m)
    path = ms.frozen_em(s, np.array([1.0]), np.array([1.0]), dt, m, grid)
    est = ms.estimate_drift(s, np.array([1.0]), path)
    assert est.value[0] == pytest.approx(-2.0, abs=0.02)


def test_estimator_rejects_diverged_path():
    s = ms.builtin_example_7_1()
    states = np.array([[0.0], [np.inf], [np.nan]])
    path = ms.FrozenPath(frozen_x=np.array([0.0]), states=states, delta2=0.5, diverged_at=1)
    with pytest.raises(ms.EstimatorError) as err:
        ms.estimate_drift(s, np.array([0.0]), path)
    assert err.value.diverged_at == 1


def test_divergence_is_recorded_not_raised():
    s = ms.builtin_example_7_1()
    coeffs = replace(
        s.coefficients,
        fast_drift=lambda x, y: y**2,
        scalar_forms=None,
        averaged_drift=None,
        invariant_sampler=None,
    )
    s_bad = replace(s, coefficients=coeffs)
    grid = ms.IncrementGrid.zeros(1.0, 12, 1)
    path = ms.frozen_em(s_bad, np.array([0.0]), np.array([3.0]), 1.0, 12, grid)
    assert path.diverged_at is not None
    assert np.all(np.isnan(path.states[path.diverged_at + 1 :]))


def test_contraction_probe_matches_deterministic_recursion():
    # coupled chains share increments, so the gap obeys v <- (1 - dt) v exactly
    s = ms.builtin_example_7_1()
    dt = 0.1
    curve = ms.contraction_probe(
        s,
        np.array([1.0]),
        np.array([1.0]),
        np.array([0.0]),
        dt,
        64,
        50,
        ms.NoisePlan(31, 0),
        lipschitz=1.0,
    )
    beta = 2.0
    for m, gap in curve.pairs():
        exact = (1.0 - dt) ** (2 * m)
        if m == 0:
            assert gap == 1.0
        else:
            assert gap == pytest.approx(exact, rel=1e-12)
        assert gap <= math.exp(-beta * m * dt / 2.0) + 1e-15


def test_contraction_probe_guards():
    s = ms.builtin_example_7_1()
    with pytest.raises(ValueError, match="differ"):
        ms.contraction_probe(
            s, np.array([1.0]), np.array([1.0]), np.array([1.0]), 0.1, 8, 4, ms.NoisePlan(0, 0)
        )
    with pytest.raises(ValueError, match="stability"):
        ms.contraction_probe(
            s,
            np.array([1.0]),
            np.array([1.0]),
            np.array([0.0]),
            0.9,
            8,
            4,
            ms.NoisePlan(0, 0),
            lipschitz=2.0,
        )


def test_stability_threshold():
    assert ms.stability_threshold(2.0) == 1.0
    assert ms.stability_threshold(2.0, lipschitz=1.0) == 1.0
    assert ms.stability_threshold(2.0, lipschitz=4.0) == pytest.approx(2.0 / 32.0)
    with pytest.raises(ValueError):
        ms.stability_threshold(0.0)


def test_empirical_invariant_moments():
    s = ms.builtin_example_7_1()
    dt = 0.01
    draws = ms.empirical_invariant(
        s, np.array([3.0]), dt, 10_000, 100_000, 25, ms.NoisePlan(41, 0)
    )
    assert draws.shape == (100_000, 1)
    assert draws.mean() == pytest.approx(3.0, abs=0.02)
    assert draws.var(ddof=1) == pytest.approx(0.5, abs=0.02)


def test_empirical_invariant_deterministic_contraction():
    # with f = -y and no noise every draw collapses toward zero
    s = ms.builtin_example_7_1()
    coeffs = replace(
        s.coefficients,
        fast_drift=lambda x, y: -y,
        fast_diffusion=lambda x, y: np.zeros((1, 1)),
        scalar_forms=None,
        averaged_drift=None,
        invariant_sampler=None,
    )
    s_det = replace(s, coefficients=coeffs)
    burn_in, dt, y0 = 2000, 0.01, 5.0
    draws = ms.empirical_invariant(
        s_det,
        np.array([2.0]),
        dt,
        burn_in,
        50,
        1,
        ms.NoisePlan(1, 0),
        y_init=np.array([y0]),
    )
    assert np.all(np.abs(draws) <= math.exp(-burn_in * dt) * y0 + 1e-12)


def test_empirical_invariant_raises_on_divergence():
    s = ms.builtin_example_7_1()
    coeffs = replace(
        s.coefficients,
        fast_drift=lambda x, y: y**3,
        scalar_forms=None,
        averaged_drift=None,
        invariant_sampler=None,
    )
    s_bad = replace(s, coefficients=coeffs)
    with pytest.raises(ms.DivergenceError):
        ms.empirical_invariant(
            s_bad, np.array([0.0]), 1.0, 1, 10, 1, ms.NoisePlan(2, 0), y_init=np.array([4.0])
        )


def test_default_burn_in():
    s = ms.builtin_example_7_1()
    assert ms.default_burn_in(s, 2.0**-6) == math.ceil(8.0 / (2.0 * 2.0**-6))


def test_second_moment_stays_bounded():
    # running max over m of the sample second moment stays under
    # 2 (1 + |y0|^2 + |x|^2) for the benchmark chain at dt <= 1/4
    s = ms.builtin_example_7_1()
    x, y0, dt = 3.0, 1.0, 0.25
    n_samples, m_max = 10_000, 10_000
    budget = 2.0 * (1.0 + y0**2 + x**2)
    second_moment = np.zeros(m_max + 1)
    for j in range(n_samples):
        grid = ms.micro_increments(ms.NoisePlan(57, j), 0, 1, dt, m_max)
        path = ms.frozen_em(s, np.array([x]), np.array([y0]), dt, m_max, grid)
        assert path.diverged_at is None
        second_moment += path.states[:, 0] ** 2
    second_moment /= n_samples
    assert second_moment.max() < budget
