"""Seeded generators for vectors, witnesses, and functional families.

Everything here is deterministic in the supplied generator or seed.
Families that will be combined share a single tail ratio, since exact
arithmetic refuses to mix distinct geometric ratios.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateBasis
from .seqspace import (
    ELL2,
    LinearFunctional,
    SpaceConfig,
    Subspace,
    TailVector,
    functional_from_representer,
    norm,
)


def sample_tail_vector(
    rng: np.random.Generator,
    ratio: float | None = None,
    max_anchor: int = 5,
    max_period: int = 3,
    tail_chance: float = 0.75,
) -> TailVector:
    """One random vector; pass ratio to force a specific (or zero) tail."""
    anchor = int(rng.integers(0, max_anchor + 1))
    prefix = rng.standard_normal(anchor)
    if ratio is None:
        if rng.random() > tail_chance:
            return TailVector(prefix)
        ratio = float(rng.uniform(-0.9, 0.9))
    if ratio == 0.0:
        return TailVector(prefix)
    coeffs = rng.standard_normal(int(rng.integers(1, max_period + 1)))
    return TailVector(prefix, coeffs, ratio)


def sample_witness_subspace(
    rng: np.random.Generator,
    dim: int,
    ratio: float | None = None,
    space: SpaceConfig = ELL2,
) -> Subspace:
    """Random subspace whose basis shares one tail ratio, tails nonzero."""
    if ratio is None:
        ratio = float(rng.uniform(0.2, 0.8)) * (1 if rng.random() < 0.5 else -1)
    for _ in range(50):
        basis = []
        for _ in range(dim):
            v = sample_tail_vector(rng, ratio=ratio)
            if v.has_zero_tail or norm(v) < 1e-3:
                v = TailVector(rng.standard_normal(3), rng.standard_normal(2), ratio)
            basis.append(v)
        try:
            return Subspace(tuple(basis), space)
        except DegenerateBasis:
            continue
    raise DegenerateBasis("could not sample an independent witness basis")


def odd_coordinate_witness(
    dim: int = 3, ratio: float = 0.5, tail_scale: float = 0.5, anchor: int = 7
) -> Subspace:
    """Unit coordinates on odd indices plus a shared odd-supported tail.

    Vector i is e_{2i-1} plus a period-2 geometric tail past `anchor`
    whose even-offset coefficients vanish, keeping all mass on odd
    coordinates.
    """
    basis = []
    for i in range(1, dim + 1):
        prefix = np.zeros(anchor)
        prefix[2 * i - 2] = 1.0
        basis.append(TailVector(prefix, (0.0, tail_scale), ratio))
    return Subspace(tuple(basis))


def sample_lemma_functionals(
    rng: np.random.Generator, count: int, ratio: float | None = None
) -> list[LinearFunctional]:
    """Independent functionals whose representers share one tail ratio."""
    if ratio is None:
        ratio = float(rng.uniform(0.2, 0.8)) * (1 if rng.random() < 0.5 else -1)
    for _ in range(50):
        reps = tuple(
            TailVector(rng.standard_normal(int(rng.integers(1, 5))), rng.standard_normal(2), ratio)
            for _ in range(count)
        )
        try:
            Subspace(reps)
        except DegenerateBasis:
            continue
        return [functional_from_representer(r, ELL2) for r in reps]
    raise DegenerateBasis("could not sample independent functional representers")
