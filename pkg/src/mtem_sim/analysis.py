"""Statistical post-processing of paired trajectories and estimator output."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DegenerateFitError
from .micro import estimate_drift, frozen_em
from .noise import NoisePlan, micro_increments
from .systems import SystemSpec, Vector


@dataclass(frozen=True)
class SmseSeries:
    """Sample mean-square error between paired paths, per grid point."""

    times: np.ndarray
    values: np.ndarray
    n_samples: int
    n_diverged: int

    @property
    def terminal(self) -> float:
        return float(self.values[-1])

    @property
    def supremum(self) -> float:
        return float(np.max(self.values))


def smse(
    pairs: Sequence[tuple[np.ndarray, np.ndarray]],
    times: np.ndarray | None = None,
    diverged: Sequence[bool] | None = None,
) -> SmseSeries:
    """Pointwise mean of squared gaps between reference and numerical paths.

    Every pair must live on the same grid.  Samples flagged diverged are
    excluded from the average and counted separately.  Paths may be 1-D
    (scalar state) or 2-D ``(grid, dim)``; gaps are squared Euclidean norms.
    """
    if len(pairs) == 0:
        raise ValueError("at least one path pair is required")
    if diverged is None:
        diverged = [False] * len(pairs)
    if len(diverged) != len(pairs):
        raise ValueError("diverged mask length must match the number of pairs")

    length = None
    total = None
    used = 0
    for (ref, num), bad in zip(pairs, diverged):
        ref = np.asarray(ref, dtype=float)
        num = np.asarray(num, dtype=float)
        if ref.shape != num.shape:
            raise ValueError(f"pair shapes differ: {ref.shape} vs {num.shape}")
        if length is None:
            length = ref.shape[0]
        elif ref.shape[0] != length:
            raise ValueError("all pairs must share one grid")
        if bad:
            continue
        gap = ref - num
        sq = gap**2 if gap.ndim == 1 else np.sum(gap**2, axis=1)
        total = sq if total is None else total + sq
        used += 1
    if used == 0:
        raise ValueError("every sample was flagged diverged")
    values = total / used
    if times is None:
        times = np.arange(length, dtype=float)
    times = np.asarray(times, dtype=float)
    if times.shape[0] != length:
        raise ValueError("times length must match the grid")
    return SmseSeries(
        times=times, values=values, n_samples=used, n_diverged=sum(map(bool, diverged))
    )


def fit_slope(levels: Sequence[tuple[float, float]]) -> float:
    """Least-squares slope of ``log2(smse)`` against the level index ``q``."""
    if len(levels) < 3:
        raise DegenerateFitError("slope fit requires at least 3 levels")
    qs = np.array([float(q) for q, _ in levels])
    vals = np.array([float(v) for _, v in levels])
    if np.any(vals <= 0.0):
        raise DegenerateFitError("slope fit requires strictly positive values")
    return float(np.polyfit(qs, np.log2(vals), 1)[0])


@dataclass(frozen=True)
class LevelResult:
    """One refinement level of a convergence sweep."""

    q: int
    delta1: float
    delta2: float
    M: int
    smse: float
    diverged: int
    wall_seconds: float


@dataclass(frozen=True)
class ConvergenceReport:
    """Per-level errors of a step-size sweep plus the fitted decay slope.

    The slope is fitted only over levels with zero diverged samples; it is
    nan when fewer than three such levels exist.
    """

    levels: list[LevelResult]
    n_samples: int

    def __post_init__(self):
        qs = [lv.q for lv in self.levels]
        if qs != sorted(qs) or len(set(qs)) != len(qs):
            raise ValueError("levels must be strictly increasing in q")
        if any(lv.smse < 0.0 for lv in self.levels):
            raise ValueError("smse values must be non-negative")

    @property
    def fitted_slope(self) -> float:
        clean = [(lv.q, lv.smse) for lv in self.levels if lv.diverged == 0]
        if len(clean) < 3:
            return float("nan")
        return fit_slope(clean)


def w2_1d(sample_a: np.ndarray, sample_b: np.ndarray) -> float:
    """Exact empirical quadratic Wasserstein distance in one dimension.

    For equal sample sizes this is the root-mean-square gap between sorted
    order statistics.  Unequal sizes are handled by deterministic quantile
    subsampling of the larger sample down to the smaller size.
    """
    a = np.sort(np.ravel(np.asarray(sample_a, dtype=float)))
    b = np.sort(np.ravel(np.asarray(sample_b, dtype=float)))
    if a.size == 0 or b.size == 0:
        raise ValueError("samples must be non-empty")
    if a.size != b.size:
        if a.size > b.size:
            a = _quantile_subsample(a, b.size)
        else:
            b = _quantile_subsample(b, a.size)
    return float(np.sqrt(np.mean((a - b) ** 2)))


def _quantile_subsample(sorted_sample: np.ndarray, size: int) -> np.ndarray:
    idx = np.floor((np.arange(size) + 0.5) * sorted_sample.size / size).astype(int)
    return sorted_sample[idx]


@dataclass(frozen=True)
class EstimatorErrorPoint:
    M: int
    mse: float
    stderr: float


@dataclass(frozen=True)
class EstimatorErrorCurve:
    points: list[EstimatorErrorPoint]
    n_samples: int
    diverged_count: int


def estimator_error_curve(
    sys: SystemSpec,
    x: Vector,
    delta2: float,
    M_values: Sequence[int],
    n_samples: int,
    plan: NoisePlan,
) -> EstimatorErrorCurve:
    """Monte Carlo mean-square error of the drift estimator per micro budget.

    Requires the closed-form averaged drift as the ground truth.  All ``M``
    values share each replicate's path prefix (common random numbers), which
    tightens ratio comparisons without biasing the per-``M`` errors.
    Replicate ``s`` uses the plan's micro stream at index ``s``.
    """
    c = sys.coefficients
    if c.averaged_drift is None:
        raise ConfigurationError("estimator_error_curve requires averaged_drift")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    m_values = sorted(int(m) for m in M_values)
    if len(m_values) == 0 or m_values[0] < 1:
        raise ValueError("M_values must be positive integers")
    m_max = m_values[-1]
    target = np.asarray(c.averaged_drift(x), dtype=float)

    scalar = (
        sys.is_one_dimensional and c.scalar_forms is not None
    )
    sq_errors: dict[int, list[float]] = {m: [] for m in m_values}
    diverged = 0
    for s in range(n_samples):
        grid = micro_increments(plan, s, c.dim_noise_fast, delta2, m_max)
        path = frozen_em(sys, x, sys.y0, delta2, m_max, grid)
        if path.diverged_at is not None:
            diverged += 1
            continue
        checkpoints = iter(m_values)
        next_m = next(checkpoints)
        if scalar:
            b = c.scalar_forms.slow_drift
            xs = float(x[0])
            ts = float(target[0])
            ys = path.states[:, 0]
            running = 0.0
            for m in range(1, m_max + 1):
                running += b(xs, ys[m])
                if m == next_m:
                    err = running / m - ts
                    sq_errors[m].append(err * err)
                    next_m = next(checkpoints, None)
                    if next_m is None:
                        break
            continue
        b = c.slow_drift
        running = np.zeros(c.dim_slow)
        for m in range(1, m_max + 1):
            running = running + np.asarray(b(x, path.states[m]), dtype=float)
            if m == next_m:
                err = running / m - target
                sq_errors[m].append(float(err @ err))
                next_m = next(checkpoints, None)
                if next_m is None:
                    break
    used = n_samples - diverged
    if used == 0:
        raise ValueError("every replicate diverged")
    points = []
    for m in m_values:
        errs = np.array(sq_errors[m])
        points.append(
            EstimatorErrorPoint(
                M=m,
                mse=float(np.mean(errs)),
                stderr=float(np.std(errs, ddof=1) / math.sqrt(len(errs)))
                if len(errs) > 1
                else 0.0,
            )
        )
    return EstimatorErrorCurve(points=points, n_samples=used, diverged_count=diverged)


@dataclass(frozen=True)
class AveragedDriftEstimate:
    value: Vector
    stderr: Vector
    n_reps: int
    diverged_count: int


def estimate_averaged_drift(
    sys: SystemSpec,
    x: Vector,
    delta2: float,
    M: int,
    n_reps: int,
    plan: NoisePlan,
    y_init: Vector | None = None,
) -> AveragedDriftEstimate:
    """Monte Carlo averaged-drift estimate with a standard error.

    Averages the time-average estimator over ``n_reps`` independent frozen
    chains (micro stream index = replicate index).  Chains start at the
    frozen point unless ``y_init`` is given, which removes most warm-up bias;
    the ergodic limit does not depend on the start.  Used to cross-validate a
    user-supplied closed-form averaged drift.
    """
    c = sys.coefficients
    x = np.atleast_1d(np.asarray(x, dtype=float))
    start = x if y_init is None else np.atleast_1d(np.asarray(y_init, dtype=float))
    values = []
    diverged = 0
    for r in range(n_reps):
        grid = micro_increments(plan, r, c.dim_noise_fast, delta2, M)
        path = frozen_em(sys, x, start, delta2, M, grid)
        if path.diverged_at is not None:
            diverged += 1
            continue
        values.append(estimate_drift(sys, x, path).value)
    if not values:
        raise ValueError("every replicate diverged")
    arr = np.stack(values)
    stderr = (
        np.std(arr, axis=0, ddof=1) / math.sqrt(arr.shape[0])
        if arr.shape[0] > 1
        else np.zeros(arr.shape[1])
    )
    return AveragedDriftEstimate(
        value=np.mean(arr, axis=0),
        stderr=stderr,
        n_reps=len(values),
        diverged_count=diverged,
    )
