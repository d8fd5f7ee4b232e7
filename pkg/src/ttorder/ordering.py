"""Orbital ordering schemes: canonical, Fiedler, and prefactor optimization.

All schemes return an OrderingResult whose `order` maps new position to old
site label.  Prefactor-based schemes pick a left block (the "active" subset)
minimizing det(G) * det(Id - G) with G the subset Gram matrix; positions
inside each block keep ascending original labels, which leaves the mid-cut
spectrum untouched.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import CapExceededError, ValidationError
from .rdm import slater_mutual_information
from .tensor import CorrelatedState, PartialIsometry
from .util import as_permutation, subsets

DEFAULT_EXHAUSTIVE_CAP = 10 ** 6

_SUBSET_CHUNK = 50000


class DegenerateFiedlerWarning(UserWarning):
    """The information graph is disconnected; the Fiedler vector is not unique."""


@dataclass(frozen=True)
class OrderingResult:
    """A permutation of the site labels plus how it was obtained.

    `objective` and `bipartition` are populated by the prefactor schemes;
    `seed` marks annealed searches; `degenerate` flags a non-unique Fiedler
    vector.
    """

    order: np.ndarray
    method: str
    objective: float | None = None
    bipartition: tuple[int, ...] | None = None
    seed: int | None = None
    degenerate: bool = False

    def __post_init__(self):
        arr = as_permutation(self.order, len(np.asarray(self.order)))
        arr.setflags(write=False)
        object.__setattr__(self, "order", arr)
        if self.objective is not None and self.objective < -1e-12:
            raise ValidationError(f"negative objective {self.objective!r}")

    @property
    def n_modes(self) -> int:
        return self.order.size

    def to_dict(self) -> dict:
        """JSON-ready form; site labels are reported 1-based."""
        return {
            "method": self.method,
            "permutation": [int(p) + 1 for p in self.order],
            "objective": self.objective,
            "bipartition": None if self.bipartition is None
            else [int(p) + 1 for p in self.bipartition],
            "seed": self.seed,
            "degenerate": self.degenerate,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "OrderingResult":
        return cls(
            order=np.array([int(p) - 1 for p in data["permutation"]], dtype=np.intp),
            method=str(data["method"]),
            objective=None if data.get("objective") is None else float(data["objective"]),
            bipartition=None if data.get("bipartition") is None
            else tuple(int(p) - 1 for p in data["bipartition"]),
            seed=None if data.get("seed") is None else int(data["seed"]),
            degenerate=bool(data.get("degenerate", False)),
        )


@dataclass(frozen=True)
class AnnealConfig:
    """Simulated-annealing schedule: geometric cooling from tau0 by decay.

    max_iter=None means ceil(C(L, N) / 2) swaps, matching the exhaustive
    search cost only up to a constant.
    """

    tau0: float = 1.0
    decay: float = 0.99
    max_iter: int | None = None
    seed: int = 0

    def __post_init__(self):
        if not self.tau0 > 0:
            raise ValidationError("tau0 must be positive")
        if not 0 < self.decay < 1:
            raise ValidationError("decay must lie in (0, 1)")
        if self.max_iter is not None and self.max_iter < 1:
            raise ValidationError("max_iter must be at least 1")

    def iterations(self, n_orbitals: int, subset_size: int) -> int:
        if self.max_iter is not None:
            return int(self.max_iter)
        return max(1, math.ceil(math.comb(n_orbitals, subset_size) / 2))


def canonical_order(n_orbitals: int) -> OrderingResult:
    """Identity ordering: keep the basis exactly as given."""
    return OrderingResult(order=np.arange(n_orbitals, dtype=np.intp), method="canonical")


def fiedler_order(im: np.ndarray) -> OrderingResult:
    """Sort sites by the Fiedler vector of the mutual-information Laplacian.

    The Laplacian is diag(row sums) - IM; the Fiedler vector is the
    eigenvector of its second-smallest eigenvalue, computed after deflating
    the constant vector so the result is well defined even when the graph is
    disconnected.  Its sign is fixed so the first entry of largest magnitude
    is positive, and ties in the sort keep the original site order.

    A disconnected graph (second eigenvalue numerically zero) emits a
    DegenerateFiedlerWarning; an all-zero matrix returns the identity.
    """
    im = np.asarray(im, dtype=np.float64)
    l = im.shape[0]
    if im.ndim != 2 or im.shape != (l, l):
        raise ValidationError("expected a square matrix")
    if np.max(np.abs(im - im.T)) > 1e-10:
        raise ValidationError("mutual information matrix must be symmetric")
    if np.max(np.abs(np.diag(im))) > 1e-10:
        raise ValidationError("mutual information matrix must have zero diagonal")
    if np.min(im) < -1e-10:
        raise ValidationError("mutual information entries must be nonnegative")
    im = np.clip(im, 0.0, None)
    if np.max(im) <= 0.0:
        warnings.warn("all-zero mutual information; returning the identity order",
                      DegenerateFiedlerWarning)
        return OrderingResult(order=np.arange(l, dtype=np.intp), method="fiedler",
                              degenerate=True)
    lap = np.diag(im.sum(axis=1)) - im
    # Shift the constant eigenvector above everything else so the smallest
    # eigenpair of the deflated matrix is exactly the Fiedler pair.
    shift = float(np.trace(lap)) + 1.0
    deflated = lap + (shift / l) * np.ones((l, l))
    eigvals, eigvecs = np.linalg.eigh(deflated)
    fiedler = eigvecs[:, 0]
    degenerate = bool(eigvals[0] <= 1e-12 * shift)
    if degenerate:
        warnings.warn("disconnected information graph: Fiedler vector chosen "
                      "inside the null space after deflation",
                      DegenerateFiedlerWarning)
    top = int(np.argmax(np.abs(fiedler)))
    if fiedler[top] < 0:
        fiedler = -fiedler
    order = np.argsort(fiedler, kind="stable").astype(np.intp)
    return OrderingResult(order=order, method="fiedler", degenerate=degenerate)


def _objective_batch(entries: np.ndarray, subset_array: np.ndarray) -> np.ndarray:
    """det(G) * det(Id - G) for every row of subset_array, G the subset Gram."""
    n = entries.shape[0]
    sub = np.moveaxis(entries[:, subset_array], 1, 0)   # (m, n, size)
    gram = sub @ np.swapaxes(sub, 1, 2)
    return np.linalg.det(gram) * np.linalg.det(np.eye(n)[None, :, :] - gram)


def prefactor_objective(orbitals: PartialIsometry, subset) -> float:
    """Mid-cut pairing invariant of putting `subset` left of the cut."""
    idx = np.array(sorted(int(i) for i in subset), dtype=np.intp)[None, :]
    return float(_objective_batch(orbitals.entries, idx)[0])


def _subset_order(subset, n_orbitals: int) -> np.ndarray:
    left = sorted(subset)
    right = [q for q in range(n_orbitals) if q not in set(left)]
    return np.array(left + right, dtype=np.intp)


def best_prefactor_order(orbitals: PartialIsometry, subset_size: int | None = None,
                         cap: int = DEFAULT_EXHAUSTIVE_CAP) -> OrderingResult:
    """Exhaustive minimizer of the mid-cut pairing invariant.

    Scans all subsets of `subset_size` (default: the particle number) as the
    left block, lexicographically, keeping the first minimizer.  Raises
    CapExceededError when the subset count exceeds `cap`; use the annealed
    variant then.
    """
    l = orbitals.n_orbitals
    size = orbitals.n_particles if subset_size is None else int(subset_size)
    if not 1 <= size <= l - 1:
        raise ValidationError(f"subset size {size} outside 1..{l - 1}")
    count = math.comb(l, size)
    if count > cap:
        raise CapExceededError(
            f"{count} subsets exceed the exhaustive cap {cap}; "
            "use anneal_prefactor_order instead"
        )
    all_subsets = np.array(subsets(l, size), dtype=np.intp)
    best_val = math.inf
    best_row = 0
    for lo in range(0, count, _SUBSET_CHUNK):
        vals = _objective_batch(orbitals.entries, all_subsets[lo:lo + _SUBSET_CHUNK])
        row = int(np.argmin(vals))
        if vals[row] < best_val:
            best_val = float(vals[row])
            best_row = lo + row
    subset = tuple(int(i) for i in all_subsets[best_row])
    return OrderingResult(order=_subset_order(subset, l), method="prefactor_exact",
                          objective=max(best_val, 0.0), bipartition=subset)


def _anneal_subset(objective, n_orbitals: int, start_subset, config: AnnealConfig):
    """Algorithm: swap one active and one virtual site per step; accept
    improvements, accept uphill moves with Metropolis probability
    exp(-(new - old) / tau) under a geometrically decaying temperature."""
    rng = np.random.default_rng(config.seed)
    active = sorted(int(i) for i in start_subset)
    virtual = sorted(set(range(n_orbitals)) - set(active))
    if not active or not virtual:
        raise ValidationError("both blocks must be nonempty")
    current = objective(active)
    best_val, best_set = current, list(active)
    tau = config.tau0
    for _ in range(config.iterations(n_orbitals, len(active))):
        tau = max(tau * config.decay, 1e-300)
        pick_a = int(rng.integers(len(active)))
        pick_v = int(rng.integers(len(virtual)))
        trial = sorted(active[:pick_a] + active[pick_a + 1:] + [virtual[pick_v]])
        value = objective(trial)
        accept = value < current
        if not accept:
            accept = math.exp(min((current - value) / tau, 0.0)) > rng.random()
        if accept:
            out = active[pick_a]
            active = trial
            virtual = sorted(set(virtual) - {virtual[pick_v]} | {out})
            current = value
            if value < best_val:
                best_val, best_set = value, list(trial)
    return best_set, max(best_val, 0.0)


def anneal_prefactor_order(orbitals: PartialIsometry, config: AnnealConfig | None = None,
                           start="fiedler") -> OrderingResult:
    """Simulated-annealing search for a small mid-cut pairing invariant.

    `start` is "fiedler" (first-N labels of the Fiedler order, the default),
    "random", or an explicit subset.  Results are deterministic given the
    config seed; the best subset seen anywhere along the chain is returned.
    """
    config = config or AnnealConfig()
    l, n = orbitals.n_orbitals, orbitals.n_particles
    if isinstance(start, str) and start == "fiedler":
        start_subset = sorted(int(i) for i in
                              fiedler_order(slater_mutual_information(orbitals)).order[:n])
    elif isinstance(start, str) and start == "random":
        rng = np.random.default_rng(config.seed)
        start_subset = sorted(int(i) for i in rng.choice(l, size=n, replace=False))
    elif isinstance(start, str):
        raise ValidationError(f"unknown start {start!r}")
    else:
        start_subset = sorted(int(i) for i in start)
        if len(start_subset) != n:
            raise ValidationError(f"start subset must have {n} sites")

    entries = orbitals.entries
    eye = np.eye(n)

    def objective(subset):
        block = entries[:, subset]
        gram = block @ block.T
        return float(np.linalg.det(gram) * np.linalg.det(eye - gram))

    best_set, best_val = _anneal_subset(objective, l, start_subset, config)
    return OrderingResult(order=_subset_order(best_set, l), method="prefactor_anneal",
                          objective=best_val, bipartition=tuple(best_set),
                          seed=config.seed)


def _weighted_objective_batch(state: CorrelatedState, subset_array: np.ndarray,
                              cut: int) -> np.ndarray:
    """sum_t |amp_t| * p_t over the candidate left blocks in subset_array."""
    l = state.n_orbitals
    n = state.n_particles
    total = np.zeros(len(subset_array))
    for amp, index_set in state.terms:
        entries = state.orbitals.entries[list(index_set), :]
        if cut <= l - n and cut >= n:
            # Mid-zone: the right Gram is Id - G exactly, one Gram per subset.
            total += abs(amp) * _objective_batch(entries, subset_array)
            continue
        vals = np.empty(len(subset_array))
        for r, row in enumerate(subset_array):
            left = entries[:, row]
            right = np.delete(entries, row, axis=1)
            if cut <= l - n:
                wfac = np.linalg.det(right @ right.T)
                vfac = (np.linalg.det(left.T @ left) if cut <= n
                        else np.linalg.det(left @ left.T))
            elif cut >= n:
                vfac = np.linalg.det(left @ left.T)
                wfac = np.linalg.det(right.T @ right)
            else:
                vfac = wfac = 0.0
            vals[r] = max(float(vfac), 0.0) * max(float(wfac), 0.0)
        total += abs(amp) * vals
    return total


def best_weighted_prefactor_order(state: CorrelatedState, cut: int | None = None,
                                  cap: int = DEFAULT_EXHAUSTIVE_CAP,
                                  anneal: AnnealConfig | None = None) -> OrderingResult:
    """Minimize the amplitude-weighted sum of per-determinant invariants.

    Enumerates the left blocks of size `cut` (default L // 2) of an unordered
    bipartition and scores each by sum_t |amp_t| * p_t, the pairing invariant
    of every component determinant under that split.  Ties keep the
    lexicographically first block.  If the subset count exceeds `cap`, the
    annealed search with the same weighted objective is used when an
    AnnealConfig is supplied, and CapExceededError is raised otherwise.
    """
    l = state.n_orbitals
    cut = l // 2 if cut is None else int(cut)
    if not 1 <= cut <= l - 1:
        raise ValidationError(f"cut {cut} outside 1..{l - 1}")
    count = math.comb(l, cut)
    if count > cap:
        if anneal is None:
            raise CapExceededError(
                f"{count} bipartitions exceed the exhaustive cap {cap}; "
                "supply an AnnealConfig to search approximately"
            )

        def objective(subset):
            arr = np.array(sorted(subset), dtype=np.intp)[None, :]
            return float(_weighted_objective_batch(state, arr, cut)[0])

        start = sorted(range(cut))
        best_set, best_val = _anneal_subset(objective, l, start, anneal)
        return OrderingResult(order=_subset_order(best_set, l),
                              method="weighted_prefactor", objective=best_val,
                              bipartition=tuple(best_set), seed=anneal.seed)
    all_subsets = np.array(subsets(l, cut), dtype=np.intp)
    best_val = math.inf
    best_row = 0
    for lo in range(0, count, _SUBSET_CHUNK):
        vals = _weighted_objective_batch(state, all_subsets[lo:lo + _SUBSET_CHUNK], cut)
        row = int(np.argmin(vals))
        if vals[row] < best_val:
            best_val = float(vals[row])
            best_row = lo + row
    subset = tuple(int(i) for i in all_subsets[best_row])
    return OrderingResult(order=_subset_order(subset, l), method="weighted_prefactor",
                          objective=max(best_val, 0.0), bipartition=subset)
