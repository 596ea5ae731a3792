"""Reproducible Brownian increments with exact dyadic coarsening.

Each path owns an independent Philox counter-based generator.  Its 128-bit
key is derived from ``(master_seed, path_index)`` by numpy's ``SeedSequence``
hash (entropy = master seed, spawn key = path index), so any path can be
regenerated alone and parallel evaluation order is irrelevant.  Standard
normals come from the inverse normal CDF applied to open-interval uniforms
``((bits >> 11) + 0.5) * 2**-53``.
"""

from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from scipy.special import ndtri

from .errors import DomainError, MismatchError
from .model import Grid

__all__ = ["SeedRecord", "BrownianPath", "sample_path", "coarsen", "derive_seed",
           "GENERATOR_NAME"]

GENERATOR_NAME = "philox4x64-seedseq-ndtri"
_SEED_MASK = (1 << 64) - 1


class SeedRecord(NamedTuple):
    master_seed: int
    path_index: int
    generator: str = GENERATOR_NAME


@dataclass(frozen=True)
class BrownianPath:
    """Increments W(t_{j+1}) - W(t_j) of an r-dimensional Wiener process.

    ``increments`` has shape ``(N, r)``; ``coarsenings`` counts how many times
    the path was coarsened from the generated resolution.
    """

    wiener_dim: int
    grid: Grid
    increments: np.ndarray
    seed_record: SeedRecord
    coarsenings: int = 0

    def __post_init__(self):
        self.increments.setflags(write=False)
        if self.increments.shape != (self.grid.n_steps, self.wiener_dim):
            raise MismatchError(
                f"increments shape {self.increments.shape} does not match "
                f"({self.grid.n_steps}, {self.wiener_dim})")

    def terminal_value(self):
        """W(T) by a pairwise tree sum that mirrors coarsening.

        Adjacent pairs are summed level by level while the length is even, so
        the result is bit-identical for a path and its coarsened version.
        """
        level = np.asarray(self.increments)
        while level.shape[0] > 1 and level.shape[0] % 2 == 0:
            level = level[0::2] + level[1::2]
        total = level[0].copy()
        for row in level[1:]:
            total += row
        return total

    def coarsen(self):
        return coarsen(self)


def _check_seed(master_seed):
    if int(master_seed) != master_seed or not (0 <= master_seed <= _SEED_MASK):
        raise DomainError(f"master seed must be an unsigned 64-bit integer, got {master_seed!r}")
    return int(master_seed)


def derive_seed(master_seed, *labels):
    """Child 64-bit seed for a labelled sub-stream, e.g. a refinement level."""
    seq = np.random.SeedSequence(_check_seed(master_seed), spawn_key=tuple(int(x) for x in labels))
    return int(seq.generate_state(1, np.uint64)[0])


def _bit_generator(master_seed, path_index):
    seq = np.random.SeedSequence(master_seed, spawn_key=(path_index,))
    key = seq.generate_state(2, np.uint64)
    return np.random.Philox(key=key)


def standard_normals(master_seed, path_index, count):
    """``count`` standard normal draws for one path."""
    raw = _bit_generator(master_seed, path_index).random_raw(count)
    uniforms = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53
    return ndtri(uniforms)


def sample_path(master_seed, path_index, grid, r=1):
    """Sample one Brownian path on ``grid``.

    Args:
        master_seed: unsigned 64-bit run seed.
        path_index: non-negative path counter.
        grid: uniform time grid.
        r: Wiener dimension.

    Returns:
        BrownianPath whose increments are independent N(0, h) draws; the
        output depends only on the arguments.
    """
    master_seed = _check_seed(master_seed)
    if int(path_index) != path_index or path_index < 0:
        raise DomainError(f"path_index must be a non-negative integer, got {path_index!r}")
    if int(r) != r or r < 1:
        raise DomainError(f"wiener dimension must be positive, got {r!r}")
    path_index, r = int(path_index), int(r)
    z = standard_normals(master_seed, path_index, grid.n_steps * r)
    increments = (np.sqrt(grid.h) * z).reshape(grid.n_steps, r)
    return BrownianPath(r, grid, increments, SeedRecord(master_seed, path_index))


def coarsen(path):
    """Halve the resolution by summing adjacent increment pairs.

    Raises:
        DomainError: if the number of steps is odd.
    """
    n = path.grid.n_steps
    if n % 2:
        raise DomainError(f"cannot coarsen a path with an odd number of steps ({n})")
    inc = path.increments
    coarse = inc[0::2] + inc[1::2]
    return replace(path, grid=Grid(n // 2, path.grid.horizon), increments=coarse,
                   coarsenings=path.coarsenings + 1)
