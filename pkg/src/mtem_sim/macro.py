"""Macro solvers for the slow component.

Four integrators share one stepping core so that the scheme identities hold
bit-for-bit:

* ``mtem_run``   - truncated EM driven by the micro-estimated averaged drift
  (the multiscale truncated Euler-Maruyama scheme, MTEM);
* ``tem_run``    - truncated EM driven by the closed-form averaged drift,
  available when the system knows it (TEM);
* ``pi_baseline_run`` - MTEM with the truncation removed (plain projective
  integration); diverges for super-linear drift and exists to demonstrate it;
* ``coupled_reference_run`` - joint EM on the full stiff system, as a
  reference for the averaging behaviour.

The truncation clamps the drift argument to a ball whose radius grows as the
macro step shrinks; the state itself is never clamped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigurationError, UnsupportedSystemError
from .micro import estimate_drift, frozen_em
from .noise import (
    IncrementGrid,
    NoisePlan,
    fast_increments,
    macro_increments,
    micro_increments,
)
from .systems import DIVERGENCE_THRESHOLD, SolverConfig, SystemSpec, Vector


@dataclass(frozen=True)
class TruncationMap:
    """Radial clamp to the ball of radius ``profile_inv(K / sqrt(delta1))``.

    Exponent 0 marks a globally Lipschitz drift: the growth profile is
    constant, no clamp is needed, and the cap is infinite.
    """

    K: float
    exponent: float
    delta1: float

    def __post_init__(self):
        if self.K <= 0.0:
            raise ValueError("K must be positive")
        if self.exponent < 0.0:
            raise ValueError("exponent must be non-negative")
        if not 0.0 < self.delta1 <= 1.0:
            raise ValueError("delta1 must be in (0, 1]")
        if self.exponent == 0.0:
            cap = math.inf
        else:
            if self.K / math.sqrt(self.delta1) <= 1.0:
                raise ValueError("K / sqrt(delta1) must exceed 1 for a finite cap")
            cap = (self.K / math.sqrt(self.delta1) - 1.0) ** (1.0 / self.exponent)
        object.__setattr__(self, "_cap", cap)

    @property
    def cap(self) -> float:
        return self._cap

    @classmethod
    def for_system(cls, sys: SystemSpec, delta1: float) -> "TruncationMap":
        return cls(
            K=sys.truncation_K,
            exponent=sys.coefficients.theta.truncation_exponent,
            delta1=delta1,
        )


def truncate(tmap: TruncationMap, x: Vector) -> Vector:
    """Clamp ``|x|`` to the map's cap, preserving direction; 0 maps to 0."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    norm = float(np.linalg.norm(x))
    if norm <= tmap.cap or norm == 0.0:
        return x
    return (tmap.cap / norm) * x


def _truncate_scalar(cap: float, x: float) -> float:
    if abs(x) <= cap:
        return x
    return math.copysign(cap, x)


@dataclass(frozen=True)
class MacroTrajectory:
    """Grid values of one macro run; nan after a divergence."""

    scheme: str
    times: np.ndarray
    slow_states: np.ndarray  # shape (N+1, dim_slow)
    fast_states: Optional[np.ndarray] = None
    diverged_at: Optional[int] = None

    @property
    def diverged(self) -> bool:
        return self.diverged_at is not None

    def component(self, i: int = 0) -> np.ndarray:
        return self.slow_states[:, i]


@dataclass(frozen=True)
class ExactAveragedPath:
    """Closed-form averaged-equation solution evaluated on the macro grid."""

    times: np.ndarray
    values: np.ndarray


def _coarse_grid(sys: SystemSpec, cfg: SolverConfig, plan: NoisePlan) -> IncrementGrid:
    n = cfg.n_macro_steps
    if cfg.zero_noise:
        return IncrementGrid.zeros(cfg.delta1, n, sys.coefficients.dim_noise_slow)
    _, coarse = macro_increments(
        plan, sys.coefficients.dim_noise_slow, cfg.delta1, n, cfg.refine_levels
    )
    return coarse


def _micro_grid(sys: SystemSpec, cfg: SolverConfig, plan: NoisePlan, n: int) -> IncrementGrid:
    if cfg.zero_noise:
        return IncrementGrid.zeros(cfg.delta2, cfg.M, sys.coefficients.dim_noise_fast)
    return micro_increments(plan, n, sys.coefficients.dim_noise_fast, cfg.delta2, cfg.M)


def _scalar_mode(sys: SystemSpec, exact_drift: bool) -> bool:
    sf = sys.coefficients.scalar_forms
    if not (sys.is_one_dimensional and sf is not None):
        return False
    if exact_drift and sf.averaged_drift is None:
        return False
    return True


def _macro_run(
    sys: SystemSpec,
    cfg: SolverConfig,
    plan: NoisePlan,
    *,
    truncation_active: bool,
    exact_drift: bool,
    scheme: str,
) -> MacroTrajectory:
    c = sys.coefficients
    if exact_drift and c.averaged_drift is None:
        raise ConfigurationError(f"{scheme} requires a closed-form averaged drift")
    n_steps = cfg.n_macro_steps
    times = np.arange(n_steps + 1) * cfg.delta1
    tmap = TruncationMap.for_system(sys, cfg.delta1)
    coarse = _coarse_grid(sys, cfg, plan)
    states = np.empty((n_steps + 1, c.dim_slow))
    diverged_at: Optional[int] = None

    if _scalar_mode(sys, exact_drift):
        sf = c.scalar_forms
        dw1 = coarse.increments[:, 0]
        cap = tmap.cap
        x = float(sys.x0[0])
        states[0, 0] = x
        for n in range(n_steps):
            x_star = _truncate_scalar(cap, x) if truncation_active else x
            if exact_drift:
                drift = sf.averaged_drift(x_star)
            else:
                path = frozen_em(
                    sys,
                    np.array([x_star]),
                    sys.y0,
                    cfg.delta2,
                    cfg.M,
                    _micro_grid(sys, cfg, plan, n),
                )
                if path.diverged_at is not None:
                    diverged_at = n + 1
                    states[n + 1 :] = np.nan
                    break
                drift = float(estimate_drift(sys, np.array([x_star]), path).value[0])
            x = x + drift * cfg.delta1 + sf.slow_diffusion(x) * dw1[n]
            states[n + 1, 0] = x
            if not abs(x) <= DIVERGENCE_THRESHOLD:
                diverged_at = n + 1
                states[n + 2 :] = np.nan
                break
        return MacroTrajectory(
            scheme=scheme, times=times, slow_states=states, diverged_at=diverged_at
        )

    x = sys.x0.copy()
    states[0] = x
    for n in range(n_steps):
        x_star = truncate(tmap, x) if truncation_active else x
        if exact_drift:
            drift = np.asarray(c.averaged_drift(x_star), dtype=float)
        else:
            path = frozen_em(
                sys, x_star, sys.y0, cfg.delta2, cfg.M, _micro_grid(sys, cfg, plan, n)
            )
            if path.diverged_at is not None:
                diverged_at = n + 1
                states[n + 1 :] = np.nan
                break
            drift = estimate_drift(sys, x_star, path).value
        sigma = np.asarray(c.slow_diffusion(x), dtype=float)
        x = x + drift * cfg.delta1 + sigma @ coarse.increments[n]
        states[n + 1] = x
        if not np.all(np.abs(x) <= DIVERGENCE_THRESHOLD):
            diverged_at = n + 1
            states[n + 2 :] = np.nan
            break
    return MacroTrajectory(
        scheme=scheme, times=times, slow_states=states, diverged_at=diverged_at
    )


def mtem_run(
    sys: SystemSpec,
    cfg: SolverConfig,
    plan: NoisePlan,
    *,
    exact_drift: bool = False,
) -> MacroTrajectory:
    """Run the multiscale truncated EM scheme.

    Each macro step clamps the state, restarts the fast chain at ``y0``,
    integrates it for ``M`` micro steps, and advances the slow state with the
    time-averaged drift estimate and the coarse slow-noise increment.

    ``exact_drift=True`` replaces the estimator with the system's closed-form
    averaged drift (the infinite-``M`` limit); the result then coincides
    bit-for-bit with :func:`tem_run` on the same plan.
    """
    return _macro_run(
        sys,
        cfg,
        plan,
        truncation_active=True,
        exact_drift=exact_drift,
        scheme="MTEM",
    )


def tem_run(sys: SystemSpec, cfg: SolverConfig, plan: NoisePlan) -> MacroTrajectory:
    """Truncated EM on the averaged equation with the closed-form drift."""
    return _macro_run(
        sys, cfg, plan, truncation_active=True, exact_drift=True, scheme="TEM"
    )


def pi_baseline_run(
    sys: SystemSpec, cfg: SolverConfig, plan: NoisePlan
) -> MacroTrajectory:
    """Projective-integration baseline: the multiscale scheme without the clamp.

    Divergence is expected for super-linear drift and is recorded, not raised.
    """
    return _macro_run(
        sys, cfg, plan, truncation_active=False, exact_drift=False, scheme="PI"
    )


def coupled_reference_run(
    sys: SystemSpec,
    cfg: SolverConfig,
    micro_substeps: int,
    plan: NoisePlan,
) -> MacroTrajectory:
    """Joint truncated EM on the full slow-fast system at step ``delta1/substeps``.

    ``micro_substeps`` must be a power of two so the slow noise reuses the
    macro fine grid: a reference path computed by fine-grid quadrature on the
    same plan then shares this run's slow Brownian path exactly.  The step
    must resolve the fast scale: ``h / epsilon <= 1/4``.
    """
    c = sys.coefficients
    eps = sys.epsilon
    if micro_substeps < 1 or micro_substeps & (micro_substeps - 1) != 0:
        raise ConfigurationError("micro_substeps must be a positive power of two")
    h = cfg.delta1 / micro_substeps
    if h / eps > 0.25 + 1e-12:
        raise ConfigurationError(
            f"substep h={h:g} must satisfy h/epsilon <= 1/4 (epsilon={eps:g})"
        )
    n_steps = cfg.n_macro_steps
    refine = micro_substeps.bit_length() - 1
    total = n_steps * micro_substeps
    if cfg.zero_noise:
        slow_grid = IncrementGrid.zeros(h, total, c.dim_noise_slow)
        fast_grid = IncrementGrid.zeros(h, total, c.dim_noise_fast)
    else:
        slow_grid, _ = macro_increments(plan, c.dim_noise_slow, cfg.delta1, n_steps, refine)
        fast_grid = fast_increments(plan, c.dim_noise_fast, h, total)

    times = np.arange(n_steps + 1) * cfg.delta1
    tmap = TruncationMap.for_system(sys, cfg.delta1)
    slow_states = np.empty((n_steps + 1, c.dim_slow))
    fast_states = np.empty((n_steps + 1, c.dim_fast))
    diverged_at: Optional[int] = None
    h_over_eps = h / eps
    inv_sqrt_eps = 1.0 / math.sqrt(eps)

    if _scalar_mode(sys, exact_drift=False):
        sf = c.scalar_forms
        dw1 = slow_grid.increments[:, 0]
        dw2 = fast_grid.increments[:, 0]
        cap = tmap.cap
        x = float(sys.x0[0])
        y = float(sys.y0[0])
        slow_states[0, 0] = x
        fast_states[0, 0] = y
        for k in range(total):
            x_star = _truncate_scalar(cap, x)
            x_new = x + sf.slow_drift(x_star, y) * h + sf.slow_diffusion(x) * dw1[k]
            y_new = y + sf.fast_drift(x, y) * h_over_eps + sf.fast_diffusion(x, y) * (
                dw2[k] * inv_sqrt_eps
            )
            x, y = x_new, y_new
            if not (abs(x) <= DIVERGENCE_THRESHOLD and abs(y) <= DIVERGENCE_THRESHOLD):
                diverged_at = k // micro_substeps + 1
                slow_states[diverged_at:] = np.nan
                fast_states[diverged_at:] = np.nan
                break
            if (k + 1) % micro_substeps == 0:
                idx = (k + 1) // micro_substeps
                slow_states[idx, 0] = x
                fast_states[idx, 0] = y
        return MacroTrajectory(
            scheme="COUPLED",
            times=times,
            slow_states=slow_states,
            fast_states=fast_states,
            diverged_at=diverged_at,
        )

    x = sys.x0.copy()
    y = sys.y0.copy()
    slow_states[0] = x
    fast_states[0] = y
    for k in range(total):
        x_star = truncate(tmap, x)
        sigma = np.asarray(c.slow_diffusion(x), dtype=float)
        g = np.asarray(c.fast_diffusion(x, y), dtype=float)
        x_new = (
            x
            + np.asarray(c.slow_drift(x_star, y), dtype=float) * h
            + sigma @ slow_grid.increments[k]
        )
        y_new = (
            y
            + np.asarray(c.fast_drift(x, y), dtype=float) * h_over_eps
            + g @ (fast_grid.increments[k] * inv_sqrt_eps)
        )
        x, y = x_new, y_new
        if not (
            np.all(np.abs(x) <= DIVERGENCE_THRESHOLD)
            and np.all(np.abs(y) <= DIVERGENCE_THRESHOLD)
        ):
            diverged_at = k // micro_substeps + 1
            slow_states[diverged_at:] = np.nan
            fast_states[diverged_at:] = np.nan
            break
        if (k + 1) % micro_substeps == 0:
            idx = (k + 1) // micro_substeps
            slow_states[idx] = x
            fast_states[idx] = y
    return MacroTrajectory(
        scheme="COUPLED",
        times=times,
        slow_states=slow_states,
        fast_states=fast_states,
        diverged_at=diverged_at,
    )


def exact_averaged_path(
    cfg: SolverConfig, x0: float, fine: IncrementGrid
) -> ExactAveragedPath:
    """Closed-form averaged-equation solution for the cubic benchmark system.

    For ``d xbar = (-xbar^3 - xbar) dt + xbar dW`` the solution is

        xbar(t) = x0 exp(-3t/2 + W(t))
                  / sqrt(1 + 2 x0^2 Int_0^t exp(-3s + 2 W(s)) ds).

    ``W`` is reconstructed from the fine increments and the integral is a
    left-endpoint Riemann sum on the fine grid; values are reported at the
    macro grid points.  Only one slow noise dimension is supported.
    """
    if fine.dim != 1:
        raise UnsupportedSystemError(
            "the closed-form averaged path requires one slow noise dimension"
        )
    delta = fine.dt
    factor = int(round(cfg.delta1 / delta))
    if factor < 1 or abs(factor * delta - cfg.delta1) > 1e-9 * cfg.delta1:
        raise ValueError("fine grid step must divide the macro step")
    if fine.n_steps % factor != 0:
        raise ValueError("fine grid length must be a whole number of macro steps")
    n_macro = fine.n_steps // factor

    t = np.arange(fine.n_steps + 1) * delta
    w = np.concatenate([[0.0], np.cumsum(fine.increments[:, 0])])
    integrand = np.exp(-3.0 * t[:-1] + 2.0 * w[:-1])
    integral = np.concatenate([[0.0], delta * np.cumsum(integrand)])
    values_fine = (
        float(x0)
        * np.exp(-1.5 * t + w)
        / np.sqrt(1.0 + 2.0 * float(x0) ** 2 * integral)
    )
    idx = np.arange(n_macro + 1) * factor
    return ExactAveragedPath(
        times=np.arange(n_macro + 1) * cfg.delta1, values=values_fine[idx]
    )
