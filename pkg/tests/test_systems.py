"""System definitions, constructor contracts, and assumption probes."""

import numpy as np
import pytest
from dataclasses import replace

import mtem_sim as ms


def test_growth_exponent_validation():
    with pytest.raises(ValueError):
        ms.GrowthExponents(theta3=0.5)
    with pytest.raises(ValueError):
        ms.GrowthExponents(theta4=0.0)


def test_growth_profile_roundtrip():
    theta = ms.GrowthExponents(theta3=3.0, theta4=2.0)
    assert theta.truncation_exponent == 2.0
    for u in (0.0, 0.5, 1.0, 2.0, 7.0):
        v = ms.growth_profile(u, theta)
        assert ms.growth_profile_inverse(v, theta) == pytest.approx(u)


def test_system_spec_rejects_low_truncation_constant():
    base = ms.builtin_example_7_1()
    # profile(|x0|) = 1 + x0^2, so the floor at x0=1 is 3
    with pytest.raises(ValueError, match="truncation_K"):
        ms.SystemSpec(
            coefficients=base.coefficients,
            x0=[1.0],
            y0=[0.0],
            epsilon=1.0,
            truncation_K=2.0,
        )
    ok = ms.SystemSpec(
        coefficients=base.coefficients,
        x0=[1.0],
        y0=[0.0],
        epsilon=1.0,
        truncation_K=3.0,
    )
    assert ok.truncation_K == 3.0


def test_builtin_carries_published_truncation_constant():
    # the benchmark family pins K=2 for any start point
    s = ms.builtin_example_7_1(x0=12.0)
    assert s.truncation_K == 2.0
    assert s.x0[0] == 12.0


def test_builtin_coefficient_identity():
    # the evaluator equals the declared cubic formula bit-for-bit
    s = ms.builtin_example_7_1()
    rng = np.random.default_rng(1)
    for _ in range(200):
        x = rng.normal(size=1) * 5
        y = rng.normal(size=1) * 5
        b = s.coefficients.slow_drift(x, y)
        assert b[0] == -x[0] * x[0] * x[0] - y[0]
        assert float(b[0] + x[0] ** 3 + y[0]) == pytest.approx(0.0, abs=1e-12)


def test_builtin_averaged_drift_values():
    s = ms.builtin_example_7_1()
    assert s.coefficients.averaged_drift(np.array([1.0]))[0] == pytest.approx(-2.0)
    assert s.coefficients.averaged_drift(np.array([0.0]))[0] == 0.0


def test_builtin_invariant_sampler_moments():
    s = ms.builtin_example_7_1()
    rng = np.random.default_rng(7)
    draws = np.array(
        [s.coefficients.invariant_sampler(np.array([3.0]), rng)[0] for _ in range(100_000)]
    )
    assert draws.mean() == pytest.approx(3.0, abs=0.01)
    assert draws.var() == pytest.approx(0.5, abs=0.01)


def test_scalar_forms_agree_with_vector_forms():
    for name in ms.SYSTEM_REGISTRY:
        s = ms.make_system(name)
        sf = s.coefficients.scalar_forms
        assert sf is not None
        rng = np.random.default_rng(11)
        for _ in range(100):
            x, y = rng.normal(size=2) * 3
            xv, yv = np.array([x]), np.array([y])
            assert sf.slow_drift(x, y) == s.coefficients.slow_drift(xv, yv)[0]
            assert sf.fast_drift(x, y) == s.coefficients.fast_drift(xv, yv)[0]
            assert sf.slow_diffusion(x) == s.coefficients.slow_diffusion(xv)[0, 0]
            assert sf.fast_diffusion(x, y) == s.coefficients.fast_diffusion(xv, yv)[0, 0]
            if s.coefficients.averaged_drift is not None:
                assert sf.averaged_drift(x) == s.coefficients.averaged_drift(xv)[0]


def test_probe_passes_for_builtin():
    # the OU fast pair meets the contraction inequality with equality:
    # 2(y1-y2)(f(x,y1)-f(x,y2)) = -2|y1-y2|^2 with beta = 2
    s = ms.builtin_example_7_1()
    report = ms.probe_assumptions(s, 1000, 10.0, 123)
    assert report.pairwise_contraction.passed
    assert abs(report.pairwise_contraction.worst_margin) < 1e-9
    assert report.mean_square_dissipativity.passed
    # y*f + 0.5|g|^2 = xy - y^2 + 0.5, whose quadratic-in-y coefficient is -1
    assert report.mean_square_dissipativity.fitted["alpha"] == pytest.approx(1.0, abs=0.3)


def test_probe_fails_for_anti_dissipative_drift():
    s = ms.builtin_example_7_1()
    bad = replace(
        s.coefficients,
        fast_drift=lambda x, y: +y,
        dissipativity_beta=1.0,
        scalar_forms=None,
        averaged_drift=None,
        invariant_sampler=None,
    )
    sbad = ms.SystemSpec(
        coefficients=bad, x0=[1.0], y0=[0.0], epsilon=1.0, truncation_K=4.0
    )
    report = ms.probe_assumptions(sbad, 500, 5.0, 99)
    assert not report.pairwise_contraction.passed
    assert report.pairwise_contraction.worst_margin > 0.0
    assert not report.mean_square_dissipativity.passed


def test_probe_is_deterministic():
    s = ms.builtin_example_7_1()
    a = ms.probe_assumptions(s, 300, 4.0, 42)
    b = ms.probe_assumptions(s, 300, 4.0, 42)
    assert a.pairwise_contraction.worst_margin == b.pairwise_contraction.worst_margin
    assert a.mean_square_dissipativity.fitted == b.mean_square_dissipativity.fitted


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_probe_reports_nonfinite_evaluator():
    s = ms.builtin_example_7_1()
    bad = replace(
        s.coefficients,
        fast_drift=lambda x, y: y / 0.0,
        scalar_forms=None,
        averaged_drift=None,
        invariant_sampler=None,
    )
    sbad = ms.SystemSpec(
        coefficients=bad, x0=[0.0], y0=[0.0], epsilon=1.0, truncation_K=2.0
    )
    with pytest.raises(ms.ProbeError, match="fast_drift"):
        ms.probe_assumptions(sbad, 10, 1.0, 0)


def test_solver_config_validation_and_rounding():
    with pytest.raises(ValueError):
        ms.SolverConfig(delta1=0.0, delta2=0.5, M=1, T=1.0)
    with pytest.raises(ValueError):
        ms.SolverConfig(delta1=0.5, delta2=1.5, M=1, T=1.0)
    with pytest.raises(ValueError):
        ms.SolverConfig(delta1=0.5, delta2=0.5, M=0, T=1.0)
    cfg = ms.SolverConfig(delta1=0.25, delta2=0.5, M=1, T=1.1)
    assert cfg.T == pytest.approx(1.0)
    assert cfg.requested_T == 1.1
    assert cfg.n_macro_steps == 4
    exact = ms.SolverConfig(delta1=0.25, delta2=0.5, M=1, T=1.0)
    assert exact.requested_T is None


def test_registry_lookup():
    assert set(ms.SYSTEM_REGISTRY) == {"example-7.1", "linear-1d"}
    s = ms.make_system("example-7.1", x0=2.0)
    assert s.x0[0] == 2.0
    with pytest.raises(KeyError):
        ms.make_system("no-such-system")
