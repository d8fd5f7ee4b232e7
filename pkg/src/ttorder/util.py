"""Small combinatorial helpers shared by the tensor and spectra modules."""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from .errors import ValidationError


def subsets(n: int, k: int) -> list[tuple[int, ...]]:
    """All k-subsets of range(n), lexicographically ordered."""
    return list(itertools.combinations(range(n), k))


def subset_bit_index(subset, n_modes: int) -> int:
    """Flat index of the basis state occupying `subset`; site 0 is the most significant bit."""
    idx = 0
    for p in subset:
        idx |= 1 << (n_modes - 1 - p)
    return idx


@lru_cache(maxsize=64)
def subset_table(n_modes: int, n_particles: int):
    """Column-index array and flat tensor indices of all n_particles-subsets.

    Returns (cols, flat) where cols has shape (C(n_modes, n_particles),
    n_particles) listing subsets lexicographically and flat[i] is the
    coefficient index of the basis state occupying cols[i].
    """
    subs = subsets(n_modes, n_particles)
    cols = np.array(subs, dtype=np.intp).reshape(len(subs), n_particles)
    flat = np.array([subset_bit_index(s, n_modes) for s in subs], dtype=np.intp)
    cols.setflags(write=False)
    flat.setflags(write=False)
    return cols, flat


@lru_cache(maxsize=32)
def popcounts(n_modes: int) -> np.ndarray:
    """Number of occupied sites for every flat index of a 2**n_modes array."""
    idx = np.arange(1 << n_modes, dtype=np.int64)
    out = np.zeros(idx.shape, dtype=np.int64)
    for b in range(n_modes):
        out += (idx >> b) & 1
    out.setflags(write=False)
    return out


def as_permutation(order, n: int) -> np.ndarray:
    """Validate and return `order` as an int array permuting range(n)."""
    arr = np.asarray(order, dtype=np.intp)
    if arr.shape != (n,) or not np.array_equal(np.sort(arr), np.arange(n)):
        raise ValidationError(f"not a permutation of range({n}): {order!r}")
    return arr
