"""Micro solver: Euler-Maruyama for the frozen fast equation.

With the slow state frozen at ``x``, the fast component follows

    Y_{m+1} = Y_m + f(x, Y_m) dt + g(x, Y_m) dW_m,

and the time average of ``b(x, Y_m)`` over ``m = 1..M`` (the start point is
excluded) estimates the averaged drift at ``x``.  This module also hosts the
ergodicity diagnostics: a coupled-pair contraction probe and an empirical
sampler of the chain's invariant law.

Divergence of a frozen path is data, not an exception: Monte Carlo layers
count diverged samples.  Single-trajectory diagnostics, which cannot proceed
past a divergence, raise instead.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DivergenceError, EstimatorError
from .noise import IncrementGrid, NoisePlan, StreamKind, micro_increments
from .systems import DIVERGENCE_THRESHOLD, SystemSpec, Vector

_CHUNK = 1 << 20


@dataclass(frozen=True)
class FrozenPath:
    """States of one frozen-equation EM run, including the start point."""

    frozen_x: Vector
    states: np.ndarray  # shape (M+1, dim_fast); nan beyond a divergence
    delta2: float
    diverged_at: Optional[int] = None

    @property
    def n_steps(self) -> int:
        return self.states.shape[0] - 1


@dataclass(frozen=True)
class DriftEstimate:
    """Time-average drift estimate ``(1/M) sum_{m=1..M} b(x, Y_m)``."""

    value: Vector
    M_used: int
    frozen_x: Vector


def _use_scalar(sys: SystemSpec) -> bool:
    return sys.is_one_dimensional and sys.coefficients.scalar_forms is not None


def _frozen_em_scalar(
    sys: SystemSpec, x: float, y0: float, delta2: float, M: int, dw: np.ndarray
) -> FrozenPath:
    sf = sys.coefficients.scalar_forms
    f, g = sf.fast_drift, sf.fast_diffusion
    out = np.empty(M + 1)
    out[0] = y = y0
    diverged_at = None
    for m in range(M):
        y = y + f(x, y) * delta2 + g(x, y) * dw[m]
        out[m + 1] = y
        if not abs(y) <= DIVERGENCE_THRESHOLD:  # also catches nan
            diverged_at = m + 1
            out[m + 2 :] = np.nan
            break
    return FrozenPath(
        frozen_x=np.array([x]),
        states=out.reshape(-1, 1),
        delta2=delta2,
        diverged_at=diverged_at,
    )


def frozen_em(
    sys: SystemSpec,
    frozen_x: Vector,
    y_init: Vector,
    delta2: float,
    M: int,
    noise: IncrementGrid,
) -> FrozenPath:
    """Integrate the frozen fast equation for ``M`` steps.

    ``noise`` must carry ``M`` increments of the fast-noise dimension.  A
    non-finite or threshold-crossing state marks the path diverged at that
    index; remaining entries are nan.
    """
    c = sys.coefficients
    frozen_x = np.atleast_1d(np.asarray(frozen_x, dtype=float))
    y_init = np.atleast_1d(np.asarray(y_init, dtype=float))
    if noise.n_steps != M:
        raise ValueError(f"noise grid has {noise.n_steps} steps, expected {M}")
    if noise.dim != c.dim_noise_fast:
        raise ValueError(
            f"noise grid dimension {noise.dim} != dim_noise_fast {c.dim_noise_fast}"
        )
    if not 0.0 < delta2 <= 1.0:
        raise ValueError("delta2 must be in (0, 1]")

    if _use_scalar(sys):
        return _frozen_em_scalar(
            sys, float(frozen_x[0]), float(y_init[0]), delta2, M, noise.increments[:, 0]
        )

    states = np.empty((M + 1, c.dim_fast))
    states[0] = y = y_init.copy()
    diverged_at = None
    increments = noise.increments
    f, g = c.fast_drift, c.fast_diffusion
    for m in range(M):
        y = y + np.asarray(f(frozen_x, y)) * delta2 + np.asarray(g(frozen_x, y)) @ increments[m]
        states[m + 1] = y
        if not np.all(np.abs(y) <= DIVERGENCE_THRESHOLD):
            diverged_at = m + 1
            states[m + 2 :] = np.nan
            break
    return FrozenPath(
        frozen_x=frozen_x, states=states, delta2=delta2, diverged_at=diverged_at
    )


def estimate_drift(sys: SystemSpec, frozen_x: Vector, path: FrozenPath) -> DriftEstimate:
    """Average ``b(frozen_x, Y_m)`` over ``m = 1..M`` along a frozen path.

    The start point ``Y_0`` is excluded from the average.  The result is a
    pure fold over the path: recomputing from the same states reproduces the
    value bit-for-bit.
    """
    frozen_x = np.atleast_1d(np.asarray(frozen_x, dtype=float))
    if path.diverged_at is not None:
        raise EstimatorError(path.diverged_at)
    if not np.array_equal(frozen_x, path.frozen_x):
        raise ValueError("path was generated with a different frozen point")
    M = path.n_steps
    if M < 1:
        raise ValueError("path must contain at least one step")

    sf = sys.coefficients.scalar_forms
    if _use_scalar(sys):
        b = sf.slow_drift
        x = float(frozen_x[0])
        ys = path.states[:, 0]
        total = 0.0
        for m in range(1, M + 1):
            total += b(x, ys[m])
        return DriftEstimate(
            value=np.array([total / M]), M_used=M, frozen_x=frozen_x
        )

    b = sys.coefficients.slow_drift
    total = np.zeros(sys.coefficients.dim_slow)
    for m in range(1, M + 1):
        total = total + np.asarray(b(frozen_x, path.states[m]), dtype=float)
    return DriftEstimate(value=total / M, M_used=M, frozen_x=frozen_x)


def stability_threshold(beta: float, lipschitz: float | None = None) -> float:
    """Largest micro step for which the coupled-pair contraction is assured.

    With a Lipschitz estimate ``L`` for the fast pair the threshold is
    ``min(beta / (2 L^2), 2 / beta, 1)``; without one only the weaker
    ``min(2 / beta, 1)`` guard is computable.
    """
    if beta <= 0.0:
        raise ValueError("beta must be positive")
    if lipschitz is None:
        return min(2.0 / beta, 1.0)
    if lipschitz <= 0.0:
        raise ValueError("lipschitz must be positive")
    return min(beta / (2.0 * lipschitz**2), 2.0 / beta, 1.0)


def _log_spaced_steps(M: int) -> list[int]:
    steps = [0]
    m = 1
    while m < M:
        steps.append(m)
        m *= 2
    steps.append(M)
    return steps


@dataclass(frozen=True)
class ContractionCurve:
    """Mean-square gap between coupled frozen chains at probe steps."""

    steps: list[int]
    mean_sq_gaps: list[float]
    n_samples: int
    diverged_count: int

    def pairs(self) -> list[tuple[int, float]]:
        return list(zip(self.steps, self.mean_sq_gaps))


def contraction_probe(
    sys: SystemSpec,
    frozen_x: Vector,
    y: Vector,
    z: Vector,
    delta2: float,
    M: int,
    n_samples: int,
    plan: NoisePlan,
    lipschitz: float | None = None,
) -> ContractionCurve:
    """Estimate ``E |Y^y_m - Y^z_m|^2`` for coupled chains at log-spaced m.

    Both chains in a pair consume identical increments, so the gap isolates
    the contraction of the dynamics.  Replicate ``s`` uses the micro stream
    at index ``s`` of the supplied plan.  Diverged pairs are excluded and
    counted.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if np.array_equal(y, z):
        raise ValueError("y and z must differ")
    beta = sys.coefficients.dissipativity_beta
    threshold = stability_threshold(beta, lipschitz)
    if lipschitz is not None and delta2 > threshold:
        raise ValueError(
            f"delta2={delta2} exceeds the contraction stability threshold {threshold}"
        )
    if lipschitz is None and delta2 > threshold:
        warnings.warn(
            f"delta2={delta2} exceeds the guard min(2/beta, 1)={threshold}; "
            "contraction is not assured",
            stacklevel=2,
        )
    steps = _log_spaced_steps(M)
    sums = np.zeros(len(steps))
    diverged = 0
    used = 0
    for s in range(n_samples):
        grid = micro_increments(plan, s, sys.coefficients.dim_noise_fast, delta2, M)
        path_y = frozen_em(sys, frozen_x, y, delta2, M, grid)
        path_z = frozen_em(sys, frozen_x, z, delta2, M, grid)
        if path_y.diverged_at is not None or path_z.diverged_at is not None:
            diverged += 1
            continue
        gaps = path_y.states[steps] - path_z.states[steps]
        sums += np.sum(gaps**2, axis=1)
        used += 1
    if used == 0:
        raise DivergenceError(0)
    return ContractionCurve(
        steps=steps,
        mean_sq_gaps=list(sums / used),
        n_samples=used,
        diverged_count=diverged,
    )


def default_burn_in(sys: SystemSpec, delta2: float) -> int:
    """Burn-in covering several contraction time constants: ceil(8/(beta dt))."""
    return int(math.ceil(8.0 / (sys.coefficients.dissipativity_beta * delta2)))


def decorrelating_thinning(sys: SystemSpec, delta2: float) -> int:
    """Draw spacing that brings the chain's autocorrelation under ~0.1.

    The coupled-pair contraction rate is beta/2 per unit time, so
    ``ceil(4.6 / (beta dt))`` steps separate draws by more than two
    e-folding times.  Used by the invariant-law experiment; the raw
    single-trajectory sampler defaults to thinning 1.
    """
    return max(
        1, int(math.ceil(4.6 / (sys.coefficients.dissipativity_beta * delta2)))
    )


def empirical_invariant(
    sys: SystemSpec,
    frozen_x: Vector,
    delta2: float,
    burn_in: int | None,
    n_draws: int,
    thinning: int,
    plan: NoisePlan,
    y_init: Vector | None = None,
) -> np.ndarray:
    """Sample the frozen chain's invariant law from one long trajectory.

    Returns ``n_draws`` states taken every ``thinning`` steps after
    ``burn_in`` (default ``ceil(8 / (beta delta2))``).  The chain starts at
    the frozen point unless ``y_init`` is given: the invariant law does not
    depend on the start, and starting at ``frozen_x`` removes most of the
    warm-up bias for dissipative systems.  Uses the plan's micro stream at
    index 0; divergence raises with the offending step index.
    """
    if n_draws < 1:
        raise ValueError("n_draws must be >= 1")
    if thinning < 1:
        raise ValueError("thinning must be >= 1")
    if burn_in is None:
        burn_in = default_burn_in(sys, delta2)
    if burn_in < 1:
        raise ValueError("burn_in must be >= 1")
    frozen_x = np.atleast_1d(np.asarray(frozen_x, dtype=float))
    start = frozen_x if y_init is None else np.atleast_1d(np.asarray(y_init, dtype=float))
    total = burn_in + n_draws * thinning
    gen = plan.generator(StreamKind.MICRO, 0)
    sqrt_dt = math.sqrt(delta2)
    c = sys.coefficients

    if _use_scalar(sys):
        sf = c.scalar_forms
        f, g = sf.fast_drift, sf.fast_diffusion
        x = float(frozen_x[0])
        yv = float(start[0])
        draws = np.empty(n_draws)
        k = 0
        step = 0
        while step < total:
            block = min(_CHUNK, total - step)
            dws = (gen.standard_normal(block) * sqrt_dt).tolist()
            for dw in dws:
                yv = yv + f(x, yv) * delta2 + g(x, yv) * dw
                step += 1
                if not abs(yv) <= DIVERGENCE_THRESHOLD:
                    raise DivergenceError(step)
                if step > burn_in and (step - burn_in) % thinning == 0:
                    draws[k] = yv
                    k += 1
        return draws.reshape(-1, 1)

    f, g = c.fast_drift, c.fast_diffusion
    yvec = start.copy()
    draws = np.empty((n_draws, c.dim_fast))
    k = 0
    step = 0
    while step < total:
        block = min(_CHUNK, total - step)
        dws = gen.standard_normal((block, c.dim_noise_fast)) * sqrt_dt
        for m in range(block):
            yvec = (
                yvec
                + np.asarray(f(frozen_x, yvec)) * delta2
                + np.asarray(g(frozen_x, yvec)) @ dws[m]
            )
            step += 1
            if not np.all(np.abs(yvec) <= DIVERGENCE_THRESHOLD):
                raise DivergenceError(step)
            if step > burn_in and (step - burn_in) % thinning == 0:
                draws[k] = yvec
                k += 1
    return draws
