from enum import IntEnum, StrEnum

import numpy as np


class Coordinate(StrEnum):
    """
    The three coordinate functions of a face radial curve. The enum order is the
    column order used in every array and file (`x`, `y`, `z`).
    """

    x = "x"
    y = "y"
    z = "z"

    @property
    def index(self) -> int:
        return list(Coordinate).index(self)


class SensitivityProvenance(StrEnum):
    """
    Where a sensitivity bound came from. A data-driven bound is computed from the
    confidential data itself and weakens the formal privacy guarantee; it is always
    reported as such.
    """

    data_driven = "data-driven"
    supplied = "supplied"


class Stage(StrEnum):
    """Artifact directories of the pipeline, in the order the stages run."""

    dataset = "dataset"
    preprocessed = "preprocessed"
    curves = "curves"
    release = "release"
    baseline = "baseline"
    evaluation = "evaluation"
    verification = "verification"


class Reference(StrEnum):
    """Which non-private summary the evaluation compares the private outputs against."""

    pointwise = "pointwise"
    rkhs = "rkhs"
    both = "both"


class Stream(IntEnum):
    """First key component of the subseeds of each randomized stage."""

    dataset = 0
    release = 1
    baseline = 2
    verification = 3


def derive_seed(master: int, *key: int) -> int:
    """
    Derives a reproducible 63-bit subseed from a master seed and an integer key, e.g.
    `(curve_index, coordinate_index)`. The subseed only depends on the key, never on the
    order in which releases are computed, so parallel runs are reproducible.

    Args:
        master: The master seed of the run.
        key: Non-negative integers identifying the release.

    Returns:
        (int): The subseed.
    """
    sequence = np.random.SeedSequence(master, spawn_key=tuple(key))
    return int(sequence.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """
    Returns a counter-based (Philox) generator for `seed`, optionally extended by `key`.
    """
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(seed, spawn_key=tuple(key)))
    )
