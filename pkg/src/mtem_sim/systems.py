"""Slow-fast SDE system definitions.

A system couples a slow component ``x`` and a fast component ``y``::

    dx = b(x, y) dt            + sigma(x) dW1
    dy = f(x, y) dt / eps      + g(x, y) dW2 / sqrt(eps)

``b`` may grow super-linearly in ``x``; the fast pair ``(f, g)`` is assumed
contractive in ``y`` so that the frozen equation (``x`` held fixed) has a
unique invariant law.  Systems are described by plain evaluators plus the
structural constants the solvers need: the growth exponents that shape the
truncation radius and the contraction rate ``beta`` of the fast dynamics.

Everything here is immutable after construction; evaluators must be pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import ProbeError

Vector = np.ndarray

#: states whose magnitude passes this are treated as diverged everywhere
DIVERGENCE_THRESHOLD = 1e10


@dataclass(frozen=True)
class GrowthExponents:
    """Polynomial growth exponents of the slow drift.

    ``theta3``/``theta4`` bound ``|b(x, y)|`` by a polynomial in ``|x|`` and
    ``|y|`` and determine the truncation profile; ``theta1``/``theta2`` are
    local-Lipschitz exponents kept as metadata for the assumption probes.
    """

    theta1: float = 1.0
    theta2: float = 1.0
    theta3: float = 1.0
    theta4: float = 1.0

    def __post_init__(self):
        if self.theta3 < 1.0 or self.theta4 < 1.0:
            raise ValueError("theta3 and theta4 must be >= 1")

    @property
    def truncation_exponent(self) -> float:
        """Exponent ``max(theta3, theta4) - 1`` driving the truncation radius."""
        return max(self.theta3, self.theta4) - 1.0


def growth_profile(u: float, exponents: GrowthExponents) -> float:
    """The profile ``1 + u**(max(theta3, theta4) - 1)`` used to size the cap."""
    return 1.0 + float(u) ** exponents.truncation_exponent


def growth_profile_inverse(v: float, exponents: GrowthExponents) -> float:
    """Inverse of :func:`growth_profile` on ``v >= 1``."""
    e = exponents.truncation_exponent
    if e <= 0.0:
        raise ValueError("truncation exponent must be positive to invert")
    if v < 1.0:
        raise ValueError("growth profile inverse is defined for v >= 1")
    return (v - 1.0) ** (1.0 / e)


@dataclass(frozen=True)
class ScalarCoefficients:
    """Optional float-in/float-out forms of the coefficients.

    For one-dimensional systems the solvers run orders of magnitude faster on
    plain floats than on 1-element arrays.  Families that provide these forms
    must keep them exactly consistent with the vector evaluators (the test
    suite asserts agreement on random points).
    """

    slow_drift: Callable[[float, float], float]
    slow_diffusion: Callable[[float], float]
    fast_drift: Callable[[float, float], float]
    fast_diffusion: Callable[[float, float], float]
    averaged_drift: Optional[Callable[[float], float]] = None


@dataclass(frozen=True)
class CoefficientSet:
    """Evaluators and structural constants for one slow-fast system.

    Shapes: ``slow_drift(x, y) -> (dim_slow,)``,
    ``slow_diffusion(x) -> (dim_slow, dim_noise_slow)``,
    ``fast_drift(x, y) -> (dim_fast,)``,
    ``fast_diffusion(x, y) -> (dim_fast, dim_noise_fast)``.

    ``averaged_drift`` and ``invariant_sampler`` are optional closed forms:
    the drift of the averaged equation and an exact sampler of the frozen
    process's invariant law, used as oracles when known.
    """

    dim_slow: int
    dim_fast: int
    dim_noise_slow: int
    dim_noise_fast: int
    slow_drift: Callable[[Vector, Vector], Vector]
    slow_diffusion: Callable[[Vector], Vector]
    fast_drift: Callable[[Vector, Vector], Vector]
    fast_diffusion: Callable[[Vector, Vector], Vector]
    theta: GrowthExponents
    dissipativity_beta: float
    averaged_drift: Optional[Callable[[Vector], Vector]] = None
    invariant_sampler: Optional[Callable[[Vector, np.random.Generator], Vector]] = None
    scalar_forms: Optional[ScalarCoefficients] = None

    def __post_init__(self):
        for name in ("dim_slow", "dim_fast", "dim_noise_slow", "dim_noise_fast"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if self.dissipativity_beta <= 0.0:
            raise ValueError("dissipativity_beta must be positive")


@dataclass(frozen=True)
class SystemSpec:
    """A coefficient set with initial data and truncation constant.

    ``truncation_K`` scales the state cap used by the truncated macro solver.
    The constructor enforces ``truncation_K >= 1 + profile(|x0|)`` unless
    ``enforce_k_bound=False``; the worked-example registry entry relaxes the
    bound because its published scheme fixes ``K = 2`` for every start point.
    """

    coefficients: CoefficientSet
    x0: Vector
    y0: Vector
    epsilon: float
    truncation_K: float
    enforce_k_bound: bool = field(default=True, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "x0", np.atleast_1d(np.asarray(self.x0, dtype=float)))
        object.__setattr__(self, "y0", np.atleast_1d(np.asarray(self.y0, dtype=float)))
        c = self.coefficients
        if self.x0.shape != (c.dim_slow,):
            raise ValueError(f"x0 must have shape ({c.dim_slow},), got {self.x0.shape}")
        if self.y0.shape != (c.dim_fast,):
            raise ValueError(f"y0 must have shape ({c.dim_fast},), got {self.y0.shape}")
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        k_floor = 1.0 + growth_profile(float(np.linalg.norm(self.x0)), c.theta)
        if self.enforce_k_bound and self.truncation_K < k_floor:
            raise ValueError(
                f"truncation_K={self.truncation_K} is below the admissible floor "
                f"1 + profile(|x0|) = {k_floor}"
            )

    @property
    def is_one_dimensional(self) -> bool:
        c = self.coefficients
        return (
            c.dim_slow == c.dim_fast == c.dim_noise_slow == c.dim_noise_fast == 1
        )

    def with_initial(self, x0, y0=None, epsilon: float | None = None) -> "SystemSpec":
        """Same system restarted elsewhere, keeping the truncation constant."""
        return replace(
            self,
            x0=np.atleast_1d(np.asarray(x0, dtype=float)),
            y0=self.y0 if y0 is None else np.atleast_1d(np.asarray(y0, dtype=float)),
            epsilon=self.epsilon if epsilon is None else float(epsilon),
        )


@dataclass(frozen=True)
class SolverConfig:
    """Step sizes and horizon for one run.

    The horizon is rounded down to a whole number of macro steps at
    construction; ``requested_T`` keeps the pre-rounding value when they
    differ.  ``refine_levels`` sets the fine-grid factor ``2**r`` used by the
    closed-form reference path quadrature and the coupled reference solver.
    """

    delta1: float
    delta2: float
    M: int
    T: float
    refine_levels: int = 4
    seed: int = 0
    zero_noise: bool = False
    requested_T: Optional[float] = None

    def __post_init__(self):
        if not 0.0 < self.delta1 <= 1.0:
            raise ValueError("delta1 must be in (0, 1]")
        if not 0.0 < self.delta2 <= 1.0:
            raise ValueError("delta2 must be in (0, 1]")
        if self.M < 1:
            raise ValueError("M must be a positive integer")
        if self.T <= 0.0:
            raise ValueError("T must be positive")
        if self.refine_levels < 0:
            raise ValueError("refine_levels must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        n = int(math.floor(self.T / self.delta1 + 1e-9))
        if n < 1:
            raise ValueError("T must cover at least one macro step")
        effective = n * self.delta1
        if abs(effective - self.T) > 1e-12 * max(1.0, self.T):
            object.__setattr__(self, "requested_T", self.T)
        object.__setattr__(self, "T", effective)

    @property
    def n_macro_steps(self) -> int:
        return int(round(self.T / self.delta1))


# ---------------------------------------------------------------------------
# Assumption probes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one structural-assumption spot check."""

    name: str
    passed: bool
    worst_margin: float
    witness: tuple
    fitted: dict


@dataclass(frozen=True)
class AssumptionReport:
    """Spot-check results for the fast-dynamics structural assumptions."""

    pairwise_contraction: CheckResult
    mean_square_dissipativity: CheckResult

    @property
    def all_passed(self) -> bool:
        return self.pairwise_contraction.passed and self.mean_square_dissipativity.passed


def _uniform_in_ball(rng: np.random.Generator, dim: int, radius: float) -> Vector:
    direction = rng.standard_normal(dim)
    norm = np.linalg.norm(direction)
    if norm == 0.0:
        return np.zeros(dim)
    return direction / norm * radius * rng.random() ** (1.0 / dim)


def _checked_eval(fn, name: str, *args) -> Vector:
    out = np.asarray(fn(*args), dtype=float)
    if not np.all(np.isfinite(out)):
        raise ProbeError(name, tuple(np.asarray(a).tolist() for a in args))
    return out


def probe_assumptions(
    sys: SystemSpec,
    n_points: int,
    radius: float,
    rng_seed: int,
) -> AssumptionReport:
    """Spot-check the fast-dynamics assumptions on random points.

    Both checks sample ``n_points`` uniform points in the ball of the given
    radius.  The pairwise-contraction check tests

        2 (y1-y2)^T (f(x,y1) - f(x,y2)) + |g(x,y1) - g(x,y2)|^2
            <= -beta |y1-y2|^2

    with the system's declared ``beta``.  The dissipativity check fits the
    tightest constants ``alpha, L`` in

        y^T f(x,y) + 0.5 |g(x,y)|^2 <= -alpha |y|^2 + L (1 + |x|^2)

    by least squares (``alpha``) plus an exact envelope (``L``); it passes
    when the fitted ``alpha`` is positive.  These are finite spot checks, not
    proofs: they exist to catch sign errors in user-supplied coefficients.
    """
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    rng = np.random.default_rng(rng_seed)
    c = sys.coefficients
    beta = c.dissipativity_beta

    # pairwise contraction in y at matched x
    worst_margin = -np.inf
    worst_witness: tuple = ()
    for _ in range(n_points):
        x = _uniform_in_ball(rng, c.dim_slow, radius)
        y1 = _uniform_in_ball(rng, c.dim_fast, radius)
        y2 = _uniform_in_ball(rng, c.dim_fast, radius)
        f1 = _checked_eval(c.fast_drift, "fast_drift", x, y1)
        f2 = _checked_eval(c.fast_drift, "fast_drift", x, y2)
        g1 = _checked_eval(c.fast_diffusion, "fast_diffusion", x, y1)
        g2 = _checked_eval(c.fast_diffusion, "fast_diffusion", x, y2)
        gap = y1 - y2
        lhs = 2.0 * float(gap @ (f1 - f2)) + float(np.sum((g1 - g2) ** 2))
        margin = lhs + beta * float(gap @ gap)
        if margin > worst_margin:
            worst_margin = margin
            worst_witness = (x.copy(), y1.copy(), y2.copy())
    scale = max(1.0, radius**2 * beta)
    contraction = CheckResult(
        name="pairwise_contraction",
        passed=worst_margin <= 1e-9 * scale,
        worst_margin=worst_margin,
        witness=worst_witness,
        fitted={"beta": beta},
    )

    # mean-square dissipativity with fitted constants
    ys = np.empty(n_points)
    xs = np.empty(n_points)
    vals = np.empty(n_points)
    points = []
    for i in range(n_points):
        x = _uniform_in_ball(rng, c.dim_slow, radius)
        y = _uniform_in_ball(rng, c.dim_fast, radius)
        fy = _checked_eval(c.fast_drift, "fast_drift", x, y)
        gy = _checked_eval(c.fast_diffusion, "fast_diffusion", x, y)
        vals[i] = float(y @ fy) + 0.5 * float(np.sum(gy**2))
        ys[i] = float(y @ y)
        xs[i] = 1.0 + float(x @ x)
        points.append((x, y))
    design = np.column_stack([-ys, xs])
    coef, *_ = np.linalg.lstsq(design, vals, rcond=None)
    alpha_hat = float(coef[0])
    if alpha_hat > 0.0:
        envelope = (vals + alpha_hat * ys) / xs
        l_hat = float(np.max(envelope))
        worst_idx = int(np.argmax(envelope))
        dissipativity = CheckResult(
            name="mean_square_dissipativity",
            passed=True,
            worst_margin=0.0,
            witness=points[worst_idx],
            fitted={"alpha": alpha_hat, "L": l_hat},
        )
    else:
        worst_idx = int(np.argmax(np.where(ys > 0, vals / np.maximum(ys, 1e-300), -np.inf)))
        dissipativity = CheckResult(
            name="mean_square_dissipativity",
            passed=False,
            worst_margin=float(vals[worst_idx]),
            witness=points[worst_idx],
            fitted={"alpha": alpha_hat},
        )

    return AssumptionReport(
        pairwise_contraction=contraction,
        mean_square_dissipativity=dissipativity,
    )


# ---------------------------------------------------------------------------
# Built-in systems
# ---------------------------------------------------------------------------


def builtin_example_7_1(
    x0: float = 1.0, y0: float = 1.0, epsilon: float = 1e-3
) -> SystemSpec:
    """The cubic-slow / Ornstein-Uhlenbeck-fast benchmark system.

    Coefficients ``b(x, y) = -x^3 - y``, ``sigma(x) = x``,
    ``f(x, y) = x - y``, ``g = 1``.  The frozen fast process is an OU chain
    whose invariant law is Normal(x, 1/2), so the averaged drift is known in
    closed form: ``-x^3 - x``.  The truncation constant is fixed at ``K = 2``
    to match the published cap ``(2 / sqrt(delta1) - 1)**(1/2)`` regardless of
    the start point, hence ``enforce_k_bound=False``.
    """

    # written as products so the scalar forms below are bit-identical
    def slow_drift(x, y):
        return -x * x * x - y

    def slow_diffusion(x):
        return np.asarray(x, dtype=float).reshape(1, 1)

    def fast_drift(x, y):
        return x - y

    def fast_diffusion(x, y):
        return np.ones((1, 1))

    def averaged_drift(x):
        return -x * x * x - x

    def invariant_sampler(x, rng):
        return np.atleast_1d(rng.normal(loc=float(x[0]), scale=math.sqrt(0.5)))

    scalar = ScalarCoefficients(
        slow_drift=lambda x, y: -x * x * x - y,
        slow_diffusion=lambda x: x,
        fast_drift=lambda x, y: x - y,
        fast_diffusion=lambda x, y: 1.0,
        averaged_drift=lambda x: -x * x * x - x,
    )

    coefficients = CoefficientSet(
        dim_slow=1,
        dim_fast=1,
        dim_noise_slow=1,
        dim_noise_fast=1,
        slow_drift=slow_drift,
        slow_diffusion=slow_diffusion,
        fast_drift=fast_drift,
        fast_diffusion=fast_diffusion,
        theta=GrowthExponents(theta1=2.0, theta2=1.0, theta3=3.0, theta4=2.0),
        dissipativity_beta=2.0,
        averaged_drift=averaged_drift,
        invariant_sampler=invariant_sampler,
        scalar_forms=scalar,
    )
    return SystemSpec(
        coefficients=coefficients,
        x0=np.array([float(x0)]),
        y0=np.array([float(y0)]),
        epsilon=float(epsilon),
        truncation_K=2.0,
        enforce_k_bound=False,
    )


def builtin_linear_1d(
    slow_rate: float = 1.0,
    coupling: float = 1.0,
    noise_scale: float = 1.0,
    x0: float = 1.0,
    y0: float = 0.0,
    epsilon: float = 1e-3,
) -> SystemSpec:
    """Fully linear family ``b = -a x - c y``, ``sigma = s x``, OU fast part.

    The averaged drift is ``-(a + c) x``.  Useful as a globally Lipschitz
    control case; it has no closed-form reference path wired up, so the
    trajectory and convergence experiments reject it.
    """
    a, cpl, s = float(slow_rate), float(coupling), float(noise_scale)

    coefficients = CoefficientSet(
        dim_slow=1,
        dim_fast=1,
        dim_noise_slow=1,
        dim_noise_fast=1,
        slow_drift=lambda x, y: -a * x - cpl * y,
        slow_diffusion=lambda x: s * np.asarray(x, dtype=float).reshape(1, 1),
        fast_drift=lambda x, y: x - y,
        fast_diffusion=lambda x, y: np.ones((1, 1)),
        theta=GrowthExponents(theta1=1.0, theta2=1.0, theta3=1.0, theta4=1.0),
        dissipativity_beta=2.0,
        averaged_drift=lambda x: -(a + cpl) * x,
        invariant_sampler=lambda x, rng: np.atleast_1d(
            rng.normal(loc=float(x[0]), scale=math.sqrt(0.5))
        ),
        scalar_forms=ScalarCoefficients(
            slow_drift=lambda x, y: -a * x - cpl * y,
            slow_diffusion=lambda x: s * x,
            fast_drift=lambda x, y: x - y,
            fast_diffusion=lambda x, y: 1.0,
            averaged_drift=lambda x: -(a + cpl) * x,
        ),
    )
    return SystemSpec(
        coefficients=coefficients,
        x0=np.array([float(x0)]),
        y0=np.array([float(y0)]),
        epsilon=float(epsilon),
        truncation_K=1e6,
        enforce_k_bound=False,
    )


@dataclass(frozen=True)
class SystemFamily:
    """Registry entry: a named closed-form coefficient family."""

    name: str
    description: str
    factory: Callable[..., SystemSpec]
    has_exact_averaged_path: bool


SYSTEM_REGISTRY: dict[str, SystemFamily] = {
    "example-7.1": SystemFamily(
        name="example-7.1",
        description=(
            "cubic slow drift -x^3 - y with multiplicative slow noise x, "
            "OU fast process x - y with unit noise; averaged drift -x^3 - x"
        ),
        factory=builtin_example_7_1,
        has_exact_averaged_path=True,
    ),
    "linear-1d": SystemFamily(
        name="linear-1d",
        description=(
            "linear slow drift -a x - c y with slow noise s x, OU fast "
            "process; averaged drift -(a + c) x (control case)"
        ),
        factory=builtin_linear_1d,
        has_exact_averaged_path=False,
    ),
}


def make_system(name: str, **params) -> SystemSpec:
    """Instantiate a registered family by name with keyword parameters."""
    if name not in SYSTEM_REGISTRY:
        known = ", ".join(sorted(SYSTEM_REGISTRY))
        raise KeyError(f"unknown system {name!r}; registered: {known}")
    return SYSTEM_REGISTRY[name].factory(**params)
