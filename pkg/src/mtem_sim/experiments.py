"""Experiment orchestration: Monte Carlo drivers and CSV persistence.

All randomness is addressed through per-sample noise plans, and cross-sample
reductions run in fixed sample order on the coordinating process, so the
numeric CSV content is a pure function of the config regardless of worker
count.  The ``wall_seconds`` column and manifest timings are measurements and
sit outside that determinism contract.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    ConvergenceReport,
    LevelResult,
    estimator_error_curve,
    w2_1d,
)
from .config import ExperimentConfig, auto_substeps, resolve_threads, validate_config
from .macro import coupled_reference_run, exact_averaged_path, mtem_run, pi_baseline_run
from .micro import decorrelating_thinning, empirical_invariant
from .noise import NoisePlan, StreamKind, macro_increments
from .systems import SolverConfig, SystemSpec

CSV_SCHEMAS = {
    "converge": ["q", "delta1", "delta2", "M", "smse", "diverged", "wall_seconds"],
    "trajectory": ["sample", "t", "exact", "mtem"],
    "diverge-demo": ["sample", "t", "value", "scheme"],
    "invariant-check": ["delta2", "w2", "n_draws"],
    "estimator-curve": ["M", "mse", "stderr"],
    "averaging-check": ["epsilon", "terminal_msq_gap", "stderr"],
}


@dataclass(frozen=True)
class ResultBundle:
    """Everything one experiment run produced."""

    manifest: dict
    csv_paths: list[Path]


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_csv(path: Path, header: list[str], rows) -> None:
    """UTF-8, LF line endings, round-trip-exact decimal floats."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


# ---------------------------------------------------------------------------
# sample workers (top-level so process pools can import them)
# ---------------------------------------------------------------------------


def _build(payload: dict) -> tuple[SystemSpec, SolverConfig, NoisePlan]:
    from .systems import make_system

    sys = make_system(payload["system_name"], **payload["system_params"])
    cfg = SolverConfig(**payload["solver"])
    plan = NoisePlan(cfg.seed, payload["sample"])
    return sys, cfg, plan


def _paired_exact_mtem(payload: dict):
    sys, cfg, plan = _build(payload)
    if cfg.zero_noise:
        from .noise import IncrementGrid

        fine = IncrementGrid.zeros(
            cfg.delta1 / 2**cfg.refine_levels,
            cfg.n_macro_steps * 2**cfg.refine_levels,
            sys.coefficients.dim_noise_slow,
        )
    else:
        fine, _ = macro_increments(
            plan,
            sys.coefficients.dim_noise_slow,
            cfg.delta1,
            cfg.n_macro_steps,
            cfg.refine_levels,
        )
    exact = exact_averaged_path(cfg, float(sys.x0[0]), fine)
    traj = mtem_run(sys, cfg, plan)
    return exact, traj


def _worker(payload: dict):
    task = payload["task"]
    if task == "converge-sample":
        exact, traj = _paired_exact_mtem(payload)
        if traj.diverged:
            return (float("nan"), 1)
        sq = (exact.values - traj.component()) ** 2
        value = float(sq[-1]) if payload["smse_time"] == "terminal" else float(np.max(sq))
        return (value, 0)
    if task == "trajectory-sample":
        exact, traj = _paired_exact_mtem(payload)
        return (exact.times, exact.values, traj.component(), traj.diverged_at)
    if task == "diverge-sample":
        sys, cfg, plan = _build(payload)
        pi = pi_baseline_run(sys, cfg, plan)
        mt = mtem_run(sys, cfg, plan)
        return (
            pi.times,
            pi.component(),
            pi.diverged_at,
            mt.component(),
            mt.diverged_at,
        )
    if task == "averaging-sample":
        sys, cfg, plan = _build(payload)
        sys = sys.with_initial(sys.x0, sys.y0, epsilon=payload["epsilon"])
        coupled = coupled_reference_run(sys, cfg, payload["micro_substeps"], plan)
        if cfg.zero_noise:
            from .noise import IncrementGrid

            fine = IncrementGrid.zeros(
                cfg.delta1 / payload["micro_substeps"],
                cfg.n_macro_steps * payload["micro_substeps"],
                sys.coefficients.dim_noise_slow,
            )
        else:
            fine, _ = macro_increments(
                plan,
                sys.coefficients.dim_noise_slow,
                cfg.delta1,
                cfg.n_macro_steps,
                payload["micro_substeps"].bit_length() - 1,
            )
        exact = exact_averaged_path(cfg, float(sys.x0[0]), fine)
        if coupled.diverged:
            return (float("nan"), 1)
        gap = float(exact.values[-1] - coupled.component()[-1])
        return (gap * gap, 0)
    if task == "invariant-level":
        from .systems import make_system

        sys = make_system(payload["system_name"], **payload["system_params"])
        delta2 = payload["delta2"]
        plan = NoisePlan(payload["seed"], payload["level_index"])
        thinning = payload["thinning"]
        if thinning is None:
            thinning = decorrelating_thinning(sys, delta2)
        draws = empirical_invariant(
            sys,
            sys.x0,
            delta2,
            burn_in=None,
            n_draws=payload["draws"],
            thinning=thinning,
            plan=plan,
        )
        ref_gen = NoisePlan(payload["seed"], 0).generator(StreamKind.REFERENCE)
        reference = np.array(
            [
                float(sys.coefficients.invariant_sampler(sys.x0, ref_gen)[0])
                for _ in range(payload["draws"])
            ]
        )
        return (delta2, w2_1d(draws[:, 0], reference), payload["draws"])
    raise ValueError(f"unknown task {task!r}")


def _map_tasks(tasks: list[dict], threads: int) -> list:
    if threads <= 1 or len(tasks) <= 1:
        return [_worker(p) for p in tasks]
    results = [None] * len(tasks)
    with ProcessPoolExecutor(max_workers=threads) as pool:
        futures = {pool.submit(_worker, p): i for i, p in enumerate(tasks)}
        for fut in as_completed(futures):
            results[futures[fut]] = fut.result()
    return results


# ---------------------------------------------------------------------------
# experiment drivers
# ---------------------------------------------------------------------------


def _solver_dict(cfg: ExperimentConfig, **overrides) -> dict:
    base = {
        "delta1": cfg.delta1,
        "delta2": cfg.delta2,
        "M": cfg.M,
        "T": cfg.T,
        "refine_levels": cfg.refine_levels,
        "seed": cfg.seed,
        "zero_noise": cfg.zero_noise,
    }
    base.update(overrides)
    return base


def _system_fields(cfg: ExperimentConfig) -> dict:
    return {"system_name": cfg.system_name, "system_params": cfg.system_params}


def _run_converge(cfg: ExperimentConfig, threads: int):
    rows = []
    levels = []
    for q in cfg.q_levels:
        solver = _solver_dict(cfg, delta1=2.0**-q, delta2=2.0**-q, M=2 ** (2 * q))
        tasks = [
            {
                "task": "converge-sample",
                **_system_fields(cfg),
                "solver": solver,
                "sample": j,
                "smse_time": cfg.smse_time,
            }
            for j in range(cfg.samples)
        ]
        start = time.perf_counter()
        results = _map_tasks(tasks, threads)
        wall = time.perf_counter() - start
        clean = [v for v, d in results if d == 0]
        diverged = sum(d for _, d in results)
        level_smse = float(np.mean(clean)) if clean else float("nan")
        levels.append(
            LevelResult(
                q=q,
                delta1=2.0**-q,
                delta2=2.0**-q,
                M=2 ** (2 * q),
                smse=level_smse,
                diverged=diverged,
                wall_seconds=wall,
            )
        )
        rows.append((q, 2.0**-q, 2.0**-q, 2 ** (2 * q), level_smse, diverged, wall))
    report = ConvergenceReport(levels=levels, n_samples=cfg.samples)
    summary = {
        "fitted_slope": report.fitted_slope,
        "levels": [
            {"q": lv.q, "smse": lv.smse, "diverged": lv.diverged} for lv in levels
        ],
    }
    return [("converge.csv", CSV_SCHEMAS["converge"], rows)], summary


def _run_trajectory(cfg: ExperimentConfig, threads: int):
    tasks = [
        {
            "task": "trajectory-sample",
            **_system_fields(cfg),
            "solver": _solver_dict(cfg),
            "sample": j,
        }
        for j in range(cfg.samples)
    ]
    results = _map_tasks(tasks, threads)
    rows = []
    diverged = 0
    for j, (times, exact_vals, mtem_vals, diverged_at) in enumerate(results):
        if diverged_at is not None:
            diverged += 1
        for k in range(len(times)):
            if diverged_at is not None and k >= diverged_at:
                break
            rows.append((j, float(times[k]), float(exact_vals[k]), float(mtem_vals[k])))
    return (
        [("trajectory.csv", CSV_SCHEMAS["trajectory"], rows)],
        {"diverged_samples": diverged},
    )


def _run_diverge_demo(cfg: ExperimentConfig, threads: int):
    tasks = [
        {
            "task": "diverge-sample",
            **_system_fields(cfg),
            "solver": _solver_dict(cfg),
            "sample": j,
        }
        for j in range(cfg.samples)
    ]
    results = _map_tasks(tasks, threads)
    rows = []
    counts = {"PI": 0, "MTEM": 0}
    for j, (times, pi_vals, pi_div, mt_vals, mt_div) in enumerate(results):
        if pi_div is not None:
            counts["PI"] += 1
        if mt_div is not None:
            counts["MTEM"] += 1
        for scheme, vals, div in (("PI", pi_vals, pi_div), ("MTEM", mt_vals, mt_div)):
            for k in range(len(times)):
                value = float(vals[k])
                if not math.isfinite(value):
                    break
                rows.append((j, float(times[k]), value, scheme))
                if div is not None and k >= div:
                    break
    return (
        [("diverge-demo.csv", CSV_SCHEMAS["diverge-demo"], rows)],
        {"diverged_samples": counts},
    )


def _run_invariant_check(cfg: ExperimentConfig, threads: int):
    tasks = [
        {
            "task": "invariant-level",
            **_system_fields(cfg),
            "delta2": d2,
            "draws": cfg.draws,
            "thinning": None,
            "seed": cfg.seed,
            "level_index": i,
        }
        for i, d2 in enumerate(cfg.delta2_levels)
    ]
    results = _map_tasks(tasks, threads)
    rows = [(d2, w2, n) for d2, w2, n in results]
    return (
        [("invariant-check.csv", CSV_SCHEMAS["invariant-check"], rows)],
        {"w2": {str(d2): w2 for d2, w2, _ in results}},
    )


def _run_estimator_curve(cfg: ExperimentConfig, threads: int):
    sys = cfg.build_system()
    curve = estimator_error_curve(
        sys,
        sys.x0,
        cfg.delta2,
        cfg.m_levels,
        cfg.samples,
        NoisePlan(cfg.seed, 0),
    )
    rows = [(p.M, p.mse, p.stderr) for p in curve.points]
    return (
        [("estimator-curve.csv", CSV_SCHEMAS["estimator-curve"], rows)],
        {"diverged_samples": curve.diverged_count},
    )


def _run_averaging_check(cfg: ExperimentConfig, threads: int):
    rows = []
    per_eps = {}
    for eps in cfg.epsilon_levels:
        substeps = cfg.micro_substeps or auto_substeps(cfg.delta1, eps)
        refine = substeps.bit_length() - 1
        solver = _solver_dict(cfg, delta2=cfg.delta2 or 0.5, M=cfg.M or 1, refine_levels=refine)
        tasks = [
            {
                "task": "averaging-sample",
                **_system_fields(cfg),
                "solver": solver,
                "sample": j,
                "epsilon": eps,
                "micro_substeps": substeps,
            }
            for j in range(cfg.samples)
        ]
        results = _map_tasks(tasks, threads)
        clean = [v for v, d in results if d == 0]
        diverged = sum(d for _, d in results)
        mean = float(np.mean(clean)) if clean else float("nan")
        stderr = (
            float(np.std(clean, ddof=1) / math.sqrt(len(clean)))
            if len(clean) > 1
            else 0.0
        )
        rows.append((eps, mean, stderr))
        per_eps[str(eps)] = {
            "terminal_msq_gap": mean,
            "stderr": stderr,
            "micro_substeps": substeps,
            "diverged": diverged,
        }
    return (
        [("averaging-check.csv", CSV_SCHEMAS["averaging-check"], rows)],
        {"levels": per_eps},
    )


_DRIVERS = {
    "converge": _run_converge,
    "trajectory": _run_trajectory,
    "diverge-demo": _run_diverge_demo,
    "invariant-check": _run_invariant_check,
    "estimator-curve": _run_estimator_curve,
    "averaging-check": _run_averaging_check,
}


def run_validated(cfg: ExperimentConfig) -> ResultBundle:
    """Run an already-validated experiment config and persist its bundle."""
    threads = resolve_threads(cfg.threads)
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    tables, summary = _DRIVERS[cfg.experiment](cfg, threads)
    wall = time.perf_counter() - start

    csv_paths = []
    for name, header, rows in tables:
        path = out_dir / name
        write_csv(path, header, rows)
        csv_paths.append(path)

    manifest = {
        "experiment": cfg.experiment,
        "config": cfg.raw,
        "seed": cfg.seed,
        "version": __version__,
        "threads": threads,
        "wall_seconds": wall,
        "summary": summary,
        "csv_files": [p.name for p in csv_paths],
    }
    import json

    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return ResultBundle(manifest=manifest, csv_paths=csv_paths)


def run_experiment(config_path) -> ResultBundle:
    """Validate a config file, run it, and write the result bundle."""
    cfg = validate_config(config_path)
    return run_validated(cfg)
