"""Deterministic, hierarchically seeded Brownian increment streams.

Every number produced here is a pure function of the tuple
``(master_seed, sample_index, kind, n, position)``.  Sub-seeds are derived
with ``numpy.random.SeedSequence`` spawn keys (a splittable, collision-free
counter scheme) feeding Philox counter-based generators, so Monte Carlo
samples can be generated in any order, on any number of workers, with
bit-identical results.

Stream layout:

* ``MACRO``  - one stream per sample for the slow Brownian motion. Increments
  are always drawn on the fine grid (step ``delta1 / 2**r``) and coarse
  increments are exact block sums, so a reference path computed by fine-grid
  quadrature and a macro solver stepping at ``delta1`` share one Brownian
  path by construction.
* ``MICRO``  - an independent stream per macro step index ``n`` for the fast
  chain restarted at that step.
* ``FINE``   - alias kind for consumers that need the fine grid directly
  (the coupled reference solver's slow noise).
* ``FAST``   - the coupled reference solver's fast noise.
* ``REFERENCE`` - draws for exact invariant-law reference samples.

Gaussians come from ``Generator.standard_normal`` (ziggurat); the method is
pinned by this module's tests because persisted outputs depend on it.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import IntEnum

import numpy as np
from numpy.random import Generator, Philox, SeedSequence

from .errors import NoisePlanningError

#: refuse to materialize grids beyond this many scalar increments (~8 GiB)
_MAX_GRID_ENTRIES = 2**30


class StreamKind(IntEnum):
    MACRO = 0
    MICRO = 1
    FINE = 2
    FAST = 3
    REFERENCE = 4


@dataclass(frozen=True)
class NoisePlan:
    """Addresses one Monte Carlo sample's family of noise streams."""

    master_seed: int
    sample_index: int = 0

    def __post_init__(self):
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if self.sample_index < 0:
            raise ValueError("sample_index must be non-negative")

    def for_sample(self, sample_index: int) -> "NoisePlan":
        return replace(self, sample_index=sample_index)

    def generator(self, kind: StreamKind, n: int = 0) -> Generator:
        """A fresh generator for the stream ``(sample_index, kind, n)``."""
        seq = SeedSequence(
            entropy=self.master_seed,
            spawn_key=(self.sample_index, int(kind), n),
        )
        return Generator(Philox(seq))


@dataclass(frozen=True)
class IncrementGrid:
    """Equally spaced Brownian increments, one row per step."""

    dt: float
    increments: np.ndarray  # shape (n_steps, dim)

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        inc = np.asarray(self.increments, dtype=float)
        if inc.ndim != 2:
            raise ValueError("increments must be a 2-D array (n_steps, dim)")
        object.__setattr__(self, "increments", inc)

    @property
    def n_steps(self) -> int:
        return self.increments.shape[0]

    @property
    def dim(self) -> int:
        return self.increments.shape[1]

    @classmethod
    def zeros(cls, dt: float, n_steps: int, dim: int) -> "IncrementGrid":
        return cls(dt=dt, increments=np.zeros((n_steps, dim)))

    def block_sum(self, factor: int) -> "IncrementGrid":
        """Aggregate ``factor`` consecutive increments into one coarse step."""
        if factor < 1 or self.n_steps % factor != 0:
            raise ValueError("factor must divide the number of steps")
        coarse = self.increments.reshape(-1, factor, self.dim).sum(axis=1)
        return IncrementGrid(dt=self.dt * factor, increments=coarse)


def _draw(gen: Generator, n_steps: int, dim: int, dt: float) -> np.ndarray:
    if n_steps * dim > _MAX_GRID_ENTRIES:
        raise NoisePlanningError(
            f"grid of {n_steps} x {dim} increments exceeds the addressable range"
        )
    return gen.standard_normal((n_steps, dim)) * np.sqrt(dt)


def macro_increments(
    plan: NoisePlan,
    dim: int,
    delta1: float,
    n_steps: int,
    refine_levels: int = 0,
) -> tuple[IncrementGrid, IncrementGrid]:
    """Fine and coarse slow-noise grids sharing one Brownian path.

    Fine increments are i.i.d. Normal(0, (delta1 / 2**r) I); the coarse grid
    is their exact block sum, so both describe the same path at two
    resolutions.  With ``refine_levels=0`` the two grids coincide.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if refine_levels < 0:
        raise ValueError("refine_levels must be non-negative")
    factor = 2**refine_levels
    fine_steps = n_steps * factor
    gen = plan.generator(StreamKind.MACRO)
    fine = IncrementGrid(
        dt=delta1 / factor, increments=_draw(gen, fine_steps, dim, delta1 / factor)
    )
    coarse = fine.block_sum(factor)
    return fine, coarse


def micro_increments(
    plan: NoisePlan,
    macro_index: int,
    dim: int,
    delta2: float,
    M: int,
) -> IncrementGrid:
    """Fast-noise grid for the micro chain restarted at macro step ``n``.

    Streams for distinct macro indices are mutually independent and
    independent of the macro stream (distinct sub-seed derivation).
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    if macro_index < 0:
        raise ValueError("macro_index must be non-negative")
    gen = plan.generator(StreamKind.MICRO, macro_index)
    return IncrementGrid(dt=delta2, increments=_draw(gen, M, dim, delta2))


def fast_increments(
    plan: NoisePlan,
    dim: int,
    dt: float,
    n_steps: int,
) -> IncrementGrid:
    """Dedicated fast-noise grid for the coupled reference solver."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    gen = plan.generator(StreamKind.FAST)
    return IncrementGrid(dt=dt, increments=_draw(gen, n_steps, dim, dt))
