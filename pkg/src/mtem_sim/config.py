"""JSON experiment configuration: schema, loading, validation.

A config is a single JSON document.  ``validate_config`` performs full
structural and semantic validation without running anything and raises
``ValidationError`` carrying every problem found, so a bad config is fixed in
one round trip.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import ValidationError
from .systems import SYSTEM_REGISTRY, SystemSpec, make_system

EXPERIMENTS = (
    "diverge-demo",
    "trajectory",
    "converge",
    "invariant-check",
    "estimator-curve",
    "averaging-check",
)

_SOLVER_KEYS = {
    "delta1",
    "delta2",
    "M",
    "T",
    "refine_levels",
    "seed",
    "zero_noise",
    "micro_substeps",
}
_TOP_KEYS = {
    "experiment",
    "system",
    "solver",
    "samples",
    "q_levels",
    "epsilon_levels",
    "delta2_levels",
    "m_levels",
    "draws",
    "smse_time",
    "output_dir",
    "threads",
}

DEFAULT_DELTA2_LEVELS = (2.0**-4, 2.0**-6, 2.0**-8)
DEFAULT_M_LEVELS = (2**8, 2**10, 2**12)


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description."""

    experiment: str
    system_name: str
    system_params: dict
    delta1: Optional[float]
    delta2: Optional[float]
    M: Optional[int]
    T: float
    refine_levels: int
    seed: int
    zero_noise: bool
    micro_substeps: Optional[int]
    samples: int
    q_levels: Optional[tuple[int, ...]]
    epsilon_levels: Optional[tuple[float, ...]]
    delta2_levels: tuple[float, ...]
    m_levels: tuple[int, ...]
    draws: int
    smse_time: str
    output_dir: str
    threads: object  # int or "auto"
    raw: dict = field(repr=False)

    def build_system(self) -> SystemSpec:
        return make_system(self.system_name, **self.system_params)


def resolve_threads(threads) -> int:
    """Apply the MTEM_THREADS override and the "auto" rule."""
    env = os.environ.get("MTEM_THREADS")
    if env is not None:
        threads = env
    if isinstance(threads, str):
        if threads == "auto":
            return os.cpu_count() or 1
        try:
            threads = int(threads)
        except ValueError:
            raise ValidationError([f"threads must be a positive integer or 'auto', got {threads!r}"])
    if not isinstance(threads, int) or threads < 1:
        raise ValidationError([f"threads must be a positive integer or 'auto', got {threads!r}"])
    return threads


def _check_positive_unit(value, name, problems) -> Optional[float]:
    if value is None:
        return None
    if not isinstance(value, (int, float)) or not (0.0 < float(value) <= 1.0):
        problems.append(f"{name} must be in (0,1]")
        return None
    return float(value)


def validate_config(config_path: str | Path) -> ExperimentConfig:
    """Parse and fully validate a config file; raise with all problems."""
    path = Path(config_path)
    if not path.exists():
        raise ValidationError([f"config file not found: {path}"])
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError([f"config is not valid JSON: {exc}"])
    return validate_config_dict(raw)


def validate_config_dict(raw: dict) -> ExperimentConfig:
    problems: list[str] = []
    if not isinstance(raw, dict):
        raise ValidationError(["config root must be a JSON object"])
    for key in raw:
        if key not in _TOP_KEYS:
            problems.append(f"unknown config field {key!r}")

    experiment = raw.get("experiment")
    if experiment not in EXPERIMENTS:
        problems.append(
            f"experiment must be one of {', '.join(EXPERIMENTS)}; got {experiment!r}"
        )

    system_name, system_params = None, {}
    system_raw = raw.get("system")
    if isinstance(system_raw, str):
        system_name = system_raw
    elif isinstance(system_raw, dict):
        system_name = system_raw.get("name")
        system_params = {k: v for k, v in system_raw.items() if k != "name"}
    else:
        problems.append("system must be a registry name or an object with a 'name'")
    system = None
    if system_name is not None:
        if system_name not in SYSTEM_REGISTRY:
            problems.append(
                f"unknown system {system_name!r}; registered: "
                f"{', '.join(sorted(SYSTEM_REGISTRY))}"
            )
        else:
            try:
                system = make_system(system_name, **system_params)
            except (TypeError, ValueError) as exc:
                problems.append(f"system parameters rejected: {exc}")

    solver_raw = raw.get("solver")
    if not isinstance(solver_raw, dict):
        problems.append("solver must be an object")
        solver_raw = {}
    for key in solver_raw:
        if key not in _SOLVER_KEYS:
            problems.append(f"unknown solver field {key!r}")

    delta1 = _check_positive_unit(solver_raw.get("delta1"), "delta1", problems)
    delta2 = _check_positive_unit(solver_raw.get("delta2"), "delta2", problems)

    M = solver_raw.get("M")
    if M is not None and (not isinstance(M, int) or M < 1):
        problems.append("M must be a positive integer")
        M = None

    T = solver_raw.get("T")
    if not isinstance(T, (int, float)) or float(T) <= 0.0:
        problems.append("T must be a positive number")
        T = 1.0
    T = float(T)

    refine_levels = solver_raw.get("refine_levels", 4)
    if not isinstance(refine_levels, int) or refine_levels < 0:
        problems.append("refine_levels must be a non-negative integer")
        refine_levels = 4

    seed = solver_raw.get("seed", 0)
    if not isinstance(seed, int) or not 0 <= seed < 2**64:
        problems.append("seed must be a 64-bit unsigned integer")
        seed = 0

    zero_noise = solver_raw.get("zero_noise", False)
    if not isinstance(zero_noise, bool):
        problems.append("zero_noise must be a boolean")
        zero_noise = False

    micro_substeps = solver_raw.get("micro_substeps")
    if micro_substeps is not None and (
        not isinstance(micro_substeps, int)
        or micro_substeps < 1
        or micro_substeps & (micro_substeps - 1) != 0
    ):
        problems.append("micro_substeps must be a positive power of two")
        micro_substeps = None

    samples = raw.get("samples", 1)
    if not isinstance(samples, int) or samples < 1:
        problems.append("samples must be a positive integer")
        samples = 1

    q_levels = raw.get("q_levels")
    if q_levels is not None:
        if (
            not isinstance(q_levels, list)
            or not q_levels
            or not all(isinstance(q, int) and q >= 1 for q in q_levels)
            or sorted(set(q_levels)) != q_levels
        ):
            problems.append("q_levels must be a strictly increasing list of integers >= 1")
            q_levels = None
        else:
            q_levels = tuple(q_levels)

    epsilon_levels = raw.get("epsilon_levels")
    if epsilon_levels is not None:
        if (
            not isinstance(epsilon_levels, list)
            or not epsilon_levels
            or not all(isinstance(e, (int, float)) and e > 0 for e in epsilon_levels)
        ):
            problems.append("epsilon_levels must be a non-empty list of positive numbers")
            epsilon_levels = None
        else:
            epsilon_levels = tuple(float(e) for e in epsilon_levels)

    delta2_levels = raw.get("delta2_levels")
    if delta2_levels is None:
        delta2_levels = DEFAULT_DELTA2_LEVELS
    elif (
        not isinstance(delta2_levels, list)
        or not delta2_levels
        or not all(isinstance(d, (int, float)) and 0 < d <= 1 for d in delta2_levels)
    ):
        problems.append("delta2_levels must be a non-empty list of numbers in (0,1]")
        delta2_levels = DEFAULT_DELTA2_LEVELS
    else:
        delta2_levels = tuple(float(d) for d in delta2_levels)

    m_levels = raw.get("m_levels")
    if m_levels is None:
        m_levels = DEFAULT_M_LEVELS
    elif (
        not isinstance(m_levels, list)
        or not m_levels
        or not all(isinstance(m, int) and m >= 1 for m in m_levels)
        or sorted(set(m_levels)) != m_levels
    ):
        problems.append("m_levels must be a strictly increasing list of positive integers")
        m_levels = DEFAULT_M_LEVELS
    else:
        m_levels = tuple(m_levels)

    draws = raw.get("draws", 100_000)
    if not isinstance(draws, int) or draws < 1:
        problems.append("draws must be a positive integer")
        draws = 100_000

    smse_time = raw.get("smse_time", "terminal")
    if smse_time not in ("terminal", "sup"):
        problems.append("smse_time must be 'terminal' or 'sup'")
        smse_time = "terminal"

    output_dir = raw.get("output_dir")
    if not isinstance(output_dir, str) or not output_dir:
        problems.append("output_dir must be a non-empty string")
        output_dir = "."

    threads = raw.get("threads", 1)
    if not (threads == "auto" or (isinstance(threads, int) and threads >= 1)):
        problems.append("threads must be a positive integer or 'auto'")
        threads = 1

    # experiment-specific requirements
    def require_solver(fields: list[str]):
        values = {"delta1": delta1, "delta2": delta2, "M": M}
        for name in fields:
            if values[name] is None:
                problems.append(f"experiment {experiment!r} requires solver.{name}")

    def require_exact_path():
        if system_name in SYSTEM_REGISTRY and not SYSTEM_REGISTRY[
            system_name
        ].has_exact_averaged_path:
            problems.append(
                f"experiment {experiment!r} requires a system with a closed-form "
                f"averaged solution; {system_name!r} has none"
            )

    if experiment == "diverge-demo":
        require_solver(["delta1", "delta2", "M"])
    elif experiment == "trajectory":
        require_solver(["delta1", "delta2", "M"])
        require_exact_path()
    elif experiment == "converge":
        if q_levels is None:
            problems.append("experiment 'converge' requires q_levels")
        require_exact_path()
    elif experiment == "invariant-check":
        if system is not None and system.coefficients.invariant_sampler is None:
            problems.append(
                "experiment 'invariant-check' requires a system with an exact "
                "invariant sampler"
            )
    elif experiment == "estimator-curve":
        require_solver(["delta2"])
        if system is not None and system.coefficients.averaged_drift is None:
            problems.append(
                "experiment 'estimator-curve' requires a system with a closed-form "
                "averaged drift"
            )
    elif experiment == "averaging-check":
        require_solver(["delta1"])
        if epsilon_levels is None:
            problems.append("experiment 'averaging-check' requires epsilon_levels")
        require_exact_path()
        if (
            micro_substeps is not None
            and delta1 is not None
            and epsilon_levels is not None
        ):
            for eps in epsilon_levels:
                h = delta1 / micro_substeps
                if h / eps > 0.25 + 1e-12:
                    problems.append(
                        f"substep h={h:g} violates the guard h/epsilon <= 1/4 "
                        f"at epsilon={eps:g}"
                    )

    if problems:
        raise ValidationError(problems)

    return ExperimentConfig(
        experiment=experiment,
        system_name=system_name,
        system_params=system_params,
        delta1=delta1,
        delta2=delta2,
        M=M,
        T=T,
        refine_levels=refine_levels,
        seed=seed,
        zero_noise=zero_noise,
        micro_substeps=micro_substeps,
        samples=samples,
        q_levels=q_levels,
        epsilon_levels=epsilon_levels,
        delta2_levels=delta2_levels,
        m_levels=m_levels,
        draws=draws,
        smse_time=smse_time,
        output_dir=output_dir,
        threads=threads,
        raw=raw,
    )


def auto_substeps(delta1: float, epsilon: float) -> int:
    """Smallest power of two making the coupled substep resolve the fast scale."""
    target = epsilon / 4.0
    k = max(0, math.ceil(math.log2(delta1 / target))) if delta1 > target else 0
    return 2**k
