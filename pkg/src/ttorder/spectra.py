"""Singular-value spectra of matricization cuts and related invariants.

Provides the dense SVD oracle, the particle-sector block fast path built on
compound matrices, the pairing prefactor p(k, L, N) whose value every product
sigma_j^2 * sigma_{d+1-j}^2 of a determinant state must equal, a successive-SVD
tensor-train factorization, and the superposition (Weyl-type) tail bound.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegeneracyError, ValidationError
from .tensor import OccupationTensor, PartialIsometry, matricize, slater_tensor
from .util import subsets

#: Singular values below this fraction of the largest one count as zero.
RANK_REL_TOL = 1e-12

#: Smallest-singular-value cutoff for the full-rank condition of the block path.
FULL_RANK_TOL = 1e-10


def _rank_of(values: np.ndarray) -> int:
    if values.size == 0 or values[0] <= 0.0:
        return 0
    return int(np.count_nonzero(values > RANK_REL_TOL * values[0]))


@dataclass(frozen=True)
class CutSpectrum:
    """Sorted singular values of one matricization cut.

    `prefactor` is carried only for single-determinant states; its presence
    asserts the determinant rank bound min(2^k, 2^N, 2^(L-k)) and enables the
    inversion-symmetry check.  Superpositions keep `prefactor=None` (their
    rank may exceed 2^N).
    """

    k: int
    n_modes: int
    values: np.ndarray
    rank: int
    prefactor: float | None = None
    n_particles: int | None = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 1 or (vals.size and (np.any(vals < 0) or np.any(np.diff(vals) > 0))):
            raise ValidationError("singular values must be nonnegative and descending")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if (self.prefactor is not None and self.n_particles is not None
                and self.rank > self.pairing_count):
            raise ValidationError(
                f"rank {self.rank} exceeds min(2^k, 2^N, 2^(L-k)) = {self.pairing_count}"
            )

    @property
    def pairing_count(self) -> int:
        """Number d of paired values: min(2^k, 2^N, 2^(L-k)) when N is known."""
        if self.n_particles is None:
            return self.rank
        return min(1 << self.k, 1 << self.n_particles, 1 << (self.n_modes - self.k))


def cut_spectrum(tensor: OccupationTensor, k: int, *, prefactor: float | None = None) -> CutSpectrum:
    """Dense-SVD spectrum of the cut-k matricization (the oracle path)."""
    values = np.linalg.svd(matricize(tensor, k), compute_uv=False)
    return CutSpectrum(k=k, n_modes=tensor.n_modes, values=values, rank=_rank_of(values),
                       prefactor=prefactor, n_particles=tensor.n_particles)


def cut_prefactor(orbitals: PartialIsometry, k: int) -> float:
    """Pairing invariant p(k, L, N) of a determinant state at cut k.

    Product of two Gram determinants of the left/right column blocks, each
    taken in the orientation that can be nonsingular.  When both k and L-k
    are strictly smaller than N no orientation survives and the invariant is
    zero (the matricization rank collapses below min(2^k, 2^N, 2^(L-k))).
    """
    n, l = orbitals.n_particles, orbitals.n_orbitals
    if not 1 <= k <= l - 1:
        raise ValidationError(f"cut {k} outside 1..{l - 1}")
    v = orbitals.entries[:, :k]
    w = orbitals.entries[:, k:]
    if k <= l - n:
        wfac = np.linalg.det(w @ w.T)
        vfac = np.linalg.det(v.T @ v) if k <= n else np.linalg.det(v @ v.T)
    elif k >= n:
        vfac = np.linalg.det(v @ v.T)
        wfac = np.linalg.det(w.T @ w)
    else:
        return 0.0
    return max(float(vfac), 0.0) * max(float(wfac), 0.0)


def inversion_residual(spectrum: CutSpectrum) -> float:
    """Largest relative defect of sigma_j^2 * sigma_{d+1-j}^2 = prefactor.

    Pairs the j-th largest with the j-th smallest of the d leading values,
    d = pairing_count.  Requires the spectrum to carry its prefactor.
    """
    p = spectrum.prefactor
    if p is None:
        raise ValidationError("spectrum carries no prefactor")
    d = spectrum.pairing_count
    vals = np.zeros(d)
    have = min(d, spectrum.values.size)
    vals[:have] = spectrum.values[:have]
    products = (vals ** 2) * (vals[::-1] ** 2)
    return float(np.max(np.abs(products - p)) / max(p, 1e-300))


def compound_matrix(a, j: int) -> np.ndarray:
    """Matrix of all order-j minors of `a`, subsets in lexicographic order.

    Entry (sigma, tau) is det(a[sigma, tau]); the order-0 compound is [[1]].
    Rectangular input is allowed, giving a C(m, j) x C(n, j) result.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValidationError("expected a matrix")
    m, n = a.shape
    if not 0 <= j <= min(m, n):
        raise ValidationError(f"minor order {j} outside 0..{min(m, n)}")
    if j == 0:
        return np.ones((1, 1))
    if j == 1:
        return a.copy()
    row_idx = np.array(subsets(m, j), dtype=np.intp)    # (R, j)
    col_idx = np.array(subsets(n, j), dtype=np.intp)    # (C, j)
    sub = a[row_idx[:, None, :, None], col_idx[None, :, None, :]]  # (R, C, j, j)
    return np.linalg.det(sub)


def _assert_full_rank(block: np.ndarray, side: str) -> None:
    smallest = np.linalg.svd(block, compute_uv=False)[-1]
    if smallest <= FULL_RANK_TOL:
        raise DegeneracyError(
            f"{side} column block is rank-deficient "
            f"(smallest singular value {smallest:.3e} <= {FULL_RANK_TOL:.0e}); "
            "fall back to the dense spectrum"
        )


def _block_singular_values(orbitals: PartialIsometry, k: int) -> np.ndarray:
    n, l = orbitals.n_particles, orbitals.n_orbitals
    v = orbitals.entries[:, :k]
    w = orbitals.entries[:, k:]
    if not (k <= l - n or k >= n):
        raise DegeneracyError(
            f"no block formula covers cut {k} for {n} particles in {l} orbitals; "
            "use the dense spectrum"
        )
    _assert_full_rank(v, "left")
    _assert_full_rank(w, "right")
    j_lo = max(0, n - (l - k))
    j_hi = min(k, n)
    values = []
    if k <= l - n:
        # C_j C_j^T = det(W W^T) * Lambda^j(V^T (W W^T)^{-1} V); factor the Gram
        # through the SVD of W so no near-singular matrix is ever inverted.
        pw, sw, _ = np.linalg.svd(w, full_matrices=False)
        scale = float(np.prod(sw))
        x = (pw / sw).T @ v
        for j in range(j_lo, j_hi + 1):
            sv = np.linalg.svd(compound_matrix(x, j), compute_uv=False)
            values.append(scale * sv)
    else:
        pv, sv_, _ = np.linalg.svd(v, full_matrices=False)
        scale = float(np.prod(sv_))
        y = (pv / sv_).T @ w
        for j in range(j_lo, j_hi + 1):
            sv = np.linalg.svd(compound_matrix(y, n - j), compute_uv=False)
            values.append(scale * sv)
    return np.concatenate(values) if values else np.zeros(0)


def slater_cut_spectrum(orbitals: PartialIsometry, k: int, method: str = "dense") -> CutSpectrum:
    """Cut spectrum of a determinant state, with its prefactor attached.

    method="dense" builds the 2**L tensor and runs a full SVD; method="block"
    computes per-sector singular values from compound-matrix Gram factors and
    never touches the dense tensor.  The block path requires full-rank column
    blocks and k <= L-N or k >= N, and raises DegeneracyError otherwise.
    """
    n, l = orbitals.n_particles, orbitals.n_orbitals
    if not 1 <= k <= l - 1:
        raise ValidationError(f"cut {k} outside 1..{l - 1}")
    p = cut_prefactor(orbitals, k)
    if method == "dense":
        return cut_spectrum(slater_tensor(orbitals), k, prefactor=p)
    if method != "block":
        raise ValidationError(f"unknown method {method!r}")
    raw = _block_singular_values(orbitals, k)
    full = np.zeros(min(1 << k, 1 << (l - k)))
    raw = np.sort(raw)[::-1]
    full[:min(raw.size, full.size)] = raw[:full.size]
    return CutSpectrum(k=k, n_modes=l, values=full, rank=_rank_of(full),
                       prefactor=p, n_particles=n)


def partitioned_cauchy_binet(a, b, tset, uset) -> tuple[float, float]:
    """Both sides of the subset-pinned Cauchy-Binet identity.

    With a of shape (m, n), b of shape (n, m) and [n] split into disjoint
    tset (size j) and uset (size n-j), returns

    * lhs: sum over S in C(uset, m-j) of det(a[:, S+T]) det(b[S+T, :]),
    * rhs: (-1)^j det [[0, b[T, :]], [a[:, T], a[:, U] b[U, :]]].

    For j = 0 both sides reduce to det(a b).
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape != b.shape[::-1]:
        raise ValidationError(f"incompatible shapes {a.shape} and {b.shape}")
    m, n = a.shape
    tset = sorted(int(i) for i in tset)
    uset = sorted(int(i) for i in uset)
    j = len(tset)
    if j > m:
        raise ValidationError(f"|T| = {j} exceeds the row count {m}")
    if set(tset) & set(uset) or sorted(tset + uset) != list(range(n)):
        raise ValidationError("tset and uset must partition the column range")
    lhs = 0.0
    for s in itertools.combinations(uset, m - j):
        sel = sorted(s + tuple(tset))
        lhs += np.linalg.det(a[:, sel]) * np.linalg.det(b[sel, :])
    top = np.hstack([np.zeros((j, j)), b[tset, :]])
    bottom = np.hstack([a[:, tset], a[:, uset] @ b[uset, :]])
    rhs = (-1.0) ** j * np.linalg.det(np.vstack([top, bottom]))
    return float(lhs), float(rhs)


@dataclass(frozen=True)
class TTDecomposition:
    """Tensor-train factorization with cores of shape (r_{k-1}, 2, r_k).

    `discarded_weight` is sqrt of the summed squares of all singular values
    dropped during the successive SVDs; the reconstruction error is bounded
    by it.
    """

    cores: tuple[np.ndarray, ...]
    ranks: tuple[int, ...]
    threshold: float
    discarded_weight: float = 0.0

    @property
    def n_modes(self) -> int:
        return len(self.cores)

    @property
    def max_rank(self) -> int:
        return max(self.ranks) if self.ranks else 1

    def contract(self) -> np.ndarray:
        """Flat coefficient array reassembled from the cores."""
        out = self.cores[0].reshape(2, -1)
        for core in self.cores[1:]:
            out = np.tensordot(out, core, axes=([-1], [0]))
        return out.reshape(-1)


def tt_decompose(tensor: OccupationTensor, threshold: float = 0.0) -> TTDecomposition:
    """Left-to-right successive-SVD tensor-train factorization.

    At every cut, singular values at or below max(threshold, 1e-12) times the
    cut's largest singular value are discarded, so threshold=0 keeps exactly
    the numerically nonzero ranks of each matricization.
    """
    if threshold < 0:
        raise ValidationError("threshold must be nonnegative")
    l = tensor.n_modes
    rel = max(float(threshold), RANK_REL_TOL)
    cores = []
    ranks = []
    discarded_sq = 0.0
    mat = tensor.coefficients.reshape(1, -1)
    r_prev = 1
    for _ in range(l - 1):
        mat = mat.reshape(r_prev * 2, -1)
        u, s, vt = np.linalg.svd(mat, full_matrices=False)
        keep = int(np.count_nonzero(s > rel * s[0])) if s[0] > 0 else 1
        keep = max(keep, 1)
        discarded_sq += float(np.sum(s[keep:] ** 2))
        cores.append(u[:, :keep].reshape(r_prev, 2, keep))
        mat = s[:keep, None] * vt[:keep]
        ranks.append(keep)
        r_prev = keep
    cores.append(mat.reshape(r_prev, 2, 1))
    return TTDecomposition(cores=tuple(cores), ranks=tuple(ranks),
                           threshold=float(threshold),
                           discarded_weight=math.sqrt(discarded_sq))


def weyl_violation(component_spectra, amplitudes, total: CutSpectrum, assignments) -> float:
    """Largest defect of the superposition tail bound; <= 0 means it holds.

    Each assignment (j, parts) with sum(parts) == j asserts
    sigma_j(total) <= sum_t |amplitudes[t]| * sigma_{parts[t]}(component t);
    a part of 0 refers to that component's largest singular value, and parts
    beyond a component's stored spectrum contribute nothing.
    """
    comps = list(component_spectra)
    amps = [abs(float(a)) for a in amplitudes]
    if len(comps) != len(amps):
        raise ValidationError("one amplitude per component spectrum is required")
    worst = -math.inf
    for j, parts in assignments:
        parts = [int(p) for p in parts]
        if len(parts) != len(comps) or any(p < 0 for p in parts) or sum(parts) != int(j):
            raise ValidationError(f"malformed assignment ({j}, {parts})")
        if not 1 <= int(j):
            raise ValidationError(f"index {j} must be positive")
        lhs = float(total.values[j - 1]) if j <= total.values.size else 0.0
        rhs = 0.0
        for amp, spec, part in zip(amps, comps, parts):
            idx = max(part, 1)
            rhs += amp * (float(spec.values[idx - 1]) if idx <= spec.values.size else 0.0)
        worst = max(worst, lhs - rhs)
    return worst
