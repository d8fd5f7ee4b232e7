"""Occupation-number tensors of Slater determinants and their superpositions.

Conventions used throughout the library:

* Sites (orbitals) are indexed 0..L-1.  A basis state is the bitstring
  (mu_0, ..., mu_{L-1}) of occupations; its flat coefficient index puts
  site 0 in the MOST significant bit, ``index = sum(mu_p << (L-1-p))``.
* A mode ordering is a permutation mapping new position -> old site label:
  ``order[p]`` is the old label of the site placed at position p.
* All amplitudes are real.  Complex input is rejected up front.
"""

from __future__ import annotations

import numpy as np

from .errors import CapacityError, ConsistencyError, ValidationError
from .util import as_permutation, popcounts, subset_bit_index, subset_table, subsets

#: Hard cap on the number of modes; a dense tensor stores 2**L coefficients.
DEFAULT_MODE_CAP = 20

ISOMETRY_TOL = 1e-12
NORM_TOL = 1e-12
SECTOR_TOL = 1e-14

_DET_CHUNK = 65536


def _as_real_array(values, name: str) -> np.ndarray:
    arr = np.asarray(values)
    if np.iscomplexobj(arr):
        if np.any(arr.imag != 0):
            raise ValidationError(f"{name} must be real valued")
        arr = arr.real
    return np.array(arr, dtype=np.float64)


class PartialIsometry:
    """Real N x L matrix with orthonormal rows holding orbital coefficients.

    Row i expands the i-th occupied orbital over the L background basis
    functions; column j weights site j.
    """

    def __init__(self, entries, *, mode_cap: int = DEFAULT_MODE_CAP, tol: float = ISOMETRY_TOL):
        arr = _as_real_array(entries, "isometry entries")
        if arr.ndim != 2:
            raise ValidationError(f"expected a 2d array, got shape {arr.shape}")
        n, l = arr.shape
        if not 1 <= n <= l:
            raise ValidationError(f"need 1 <= rows <= columns, got {n} x {l}")
        if l > mode_cap:
            raise CapacityError(
                f"{l} orbitals exceed the dense mode cap {mode_cap}; "
                f"a tensor would hold 2**{l} coefficients"
            )
        residual = np.linalg.norm(arr @ arr.T - np.eye(n))
        if residual > tol:
            raise ValidationError(
                f"rows are not orthonormal (residual {residual:.3e} > {tol:.1e})"
            )
        arr.setflags(write=False)
        self.entries = arr
        self.mode_cap = mode_cap

    @property
    def n_particles(self) -> int:
        return self.entries.shape[0]

    @property
    def n_orbitals(self) -> int:
        return self.entries.shape[1]

    def column(self, j: int) -> np.ndarray:
        return self.entries[:, j]

    def row_subset(self, rows) -> "PartialIsometry":
        """Sub-isometry of the given rows (orthonormality is inherited)."""
        return PartialIsometry(self.entries[list(rows), :], mode_cap=self.mode_cap)

    def permuted(self, order) -> "PartialIsometry":
        """Isometry with columns rearranged so position p holds old column order[p]."""
        order = as_permutation(order, self.n_orbitals)
        return PartialIsometry(self.entries[:, order], mode_cap=self.mode_cap)

    def __repr__(self) -> str:
        return f"PartialIsometry(n_particles={self.n_particles}, n_orbitals={self.n_orbitals})"


class OccupationTensor:
    """Dense array of 2**L real coefficients over occupation bitstrings.

    Carries a definite particle number: coefficients away from the
    n_particles sector must vanish.
    """

    def __init__(self, coefficients, n_particles: int, *, validate: bool = True,
                 norm_tol: float = NORM_TOL, sector_tol: float = SECTOR_TOL):
        arr = _as_real_array(coefficients, "coefficients").reshape(-1)
        n_modes = arr.size.bit_length() - 1
        if arr.size != 1 << n_modes or n_modes < 1:
            raise ValidationError(f"coefficient count {arr.size} is not a power of two")
        if not 0 <= n_particles <= n_modes:
            raise ValidationError(f"particle number {n_particles} outside 0..{n_modes}")
        if validate:
            norm = np.linalg.norm(arr)
            if abs(norm - 1.0) > norm_tol:
                raise ValidationError(f"coefficients have norm {norm!r}, expected 1")
            off = popcounts(n_modes) != n_particles
            worst = np.max(np.abs(arr[off])) if np.any(off) else 0.0
            if worst > sector_tol:
                raise ConsistencyError(
                    f"support outside the {n_particles}-particle sector "
                    f"(max coefficient {worst:.3e})"
                )
        arr.setflags(write=False)
        self.coefficients = arr
        self.n_particles = int(n_particles)
        self.n_modes = n_modes

    def norm(self) -> float:
        return float(np.linalg.norm(self.coefficients))

    def as_array(self) -> np.ndarray:
        """View with one binary axis per site."""
        return self.coefficients.reshape((2,) * self.n_modes)

    def matricize(self, k: int) -> np.ndarray:
        return matricize(self, k)

    def __repr__(self) -> str:
        return f"OccupationTensor(n_modes={self.n_modes}, n_particles={self.n_particles})"


class CorrelatedState:
    """Normalized superposition of Slater determinants over a shared orbital family.

    Each term is (amplitude, index_set) where index_set picks rows of
    `orbitals`; all sets have the same cardinality and are distinct, and the
    squared amplitudes sum to one.
    """

    def __init__(self, orbitals: PartialIsometry, terms, *, tol: float = 1e-12):
        if not terms:
            raise ValidationError("at least one term is required")
        m = orbitals.n_particles
        clean = []
        for amp, index_set in terms:
            amp = float(_as_real_array(amp, "amplitude"))
            index_set = tuple(sorted(int(i) for i in index_set))
            if len(set(index_set)) != len(index_set):
                raise ValidationError(f"index set {index_set} has repeats")
            if index_set and not (0 <= index_set[0] and index_set[-1] < m):
                raise ValidationError(f"index set {index_set} outside 0..{m - 1}")
            clean.append((amp, index_set))
        sizes = {len(s) for _, s in clean}
        if len(sizes) != 1 or not min(sizes) >= 1:
            raise ValidationError("all index sets must share one nonzero cardinality")
        if len({s for _, s in clean}) != len(clean):
            raise ValidationError("index sets must be distinct")
        total = sum(a * a for a, _ in clean)
        if abs(total - 1.0) > tol:
            raise ValidationError(f"squared amplitudes sum to {total!r}, expected 1")
        self.orbitals = orbitals
        self.terms = tuple(clean)

    @property
    def n_particles(self) -> int:
        return len(self.terms[0][1])

    @property
    def n_orbitals(self) -> int:
        return self.orbitals.n_orbitals

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    def term_isometry(self, t: int) -> PartialIsometry:
        return self.orbitals.row_subset(self.terms[t][1])

    def dominant_term(self) -> int:
        """Index of the term with the largest |amplitude| (first on ties)."""
        amps = [abs(a) for a, _ in self.terms]
        return int(np.argmax(amps))

    def permuted(self, order) -> "CorrelatedState":
        return CorrelatedState(self.orbitals.permuted(order), self.terms)

    def __repr__(self) -> str:
        return (f"CorrelatedState(n_terms={self.n_terms}, "
                f"n_particles={self.n_particles}, n_orbitals={self.n_orbitals})")


def _slater_coefficients(entries: np.ndarray) -> np.ndarray:
    """Flat coefficient array of the determinant state of an (N, L) row-orthonormal matrix."""
    n, l = entries.shape
    cols, flat = subset_table(l, n)
    out = np.zeros(1 << l)
    for lo in range(0, len(flat), _DET_CHUNK):
        chunk = cols[lo:lo + _DET_CHUNK]
        mats = entries[:, chunk]            # (n, m, n)
        mats = np.moveaxis(mats, 1, 0)      # (m, n, n)
        out[flat[lo:lo + _DET_CHUNK]] = np.linalg.det(mats)
    return out


def slater_tensor(orbitals: PartialIsometry) -> OccupationTensor:
    """Occupation tensor of the Slater determinant built from `orbitals`.

    The coefficient of a basis state occupying sites i_1 < ... < i_N is the
    determinant of the corresponding N columns of the isometry; all other
    coefficients vanish.  The result has unit norm.
    """
    return OccupationTensor(_slater_coefficients(orbitals.entries), orbitals.n_particles)


def correlated_tensor(state: CorrelatedState, n_modes: int | None = None) -> OccupationTensor:
    """Occupation tensor of a superposition of Slater determinants.

    Raises ConsistencyError if the numerical norm of the sum strays from 1 by
    more than 1e-8, which signals non-orthonormal orbital rows.
    """
    if n_modes is not None and n_modes != state.n_orbitals:
        raise ValidationError(
            f"requested {n_modes} modes but the orbital family has {state.n_orbitals}"
        )
    coeffs = np.zeros(1 << state.n_orbitals)
    for amp, index_set in state.terms:
        coeffs += amp * _slater_coefficients(state.orbitals.entries[list(index_set), :])
    norm = np.linalg.norm(coeffs)
    if abs(norm - 1.0) > 1e-8:
        raise ConsistencyError(
            f"superposition norm {norm!r} deviates from 1 beyond 1e-8; "
            "cross terms between the determinants do not cancel"
        )
    return OccupationTensor(coeffs, state.n_particles, norm_tol=1e-8)


def reorder_modes(tensor: OccupationTensor, order) -> OccupationTensor:
    """Relabel the sites so that position p carries old site order[p].

    The relabeling is fermionic: every adjacent transposition flips the sign
    of basis states with both swapped sites occupied.  The output therefore
    equals the occupation tensor of the same physical state re-expanded over
    the permuted basis; for Slater input it coincides exactly with rebuilding
    from the column-permuted isometry.
    """
    l = tensor.n_modes
    order = as_permutation(order, l)
    arr = tensor.as_array().copy()
    cur = list(range(l))
    for tgt in range(l):
        src = cur.index(order[tgt])
        while src > tgt:
            arr = np.swapaxes(arr, src - 1, src)
            both = [slice(None)] * l
            both[src - 1] = 1
            both[src] = 1
            arr[tuple(both)] *= -1.0
            cur[src - 1], cur[src] = cur[src], cur[src - 1]
            src -= 1
    flat = np.ascontiguousarray(arr).reshape(-1)
    return OccupationTensor(flat, tensor.n_particles)


def matricize(tensor: OccupationTensor, k: int) -> np.ndarray:
    """2**k x 2**(L-k) matrix with rows indexed by the first k occupations.

    Row and column indices are big-endian in the site bits, so the row index
    of (mu_0, ..., mu_{k-1}) is ``sum(mu_p << (k-1-p))``.
    """
    l = tensor.n_modes
    if not 1 <= k <= l - 1:
        raise ValidationError(f"cut {k} outside 1..{l - 1}")
    return tensor.coefficients.reshape(1 << k, 1 << (l - k))


def sector_blocks(tensor: OccupationTensor, k: int, *, tol: float = 1e-10) -> list[np.ndarray]:
    """Particle-number blocks C_0..C_min(k, N) of the cut-k matricization.

    Block j collects basis states with j particles left of the cut.  Its rows
    are indexed by the j-subsets of the left sites and its columns by the
    (N-j)-subsets of the right sites, both lexicographic.  Together the blocks
    carry the whole tensor; leftover weight means the tensor leaks outside the
    N-particle sector and raises ConsistencyError.
    """
    l, n = tensor.n_modes, tensor.n_particles
    if not 1 <= k <= l - 1:
        raise ValidationError(f"cut {k} outside 1..{l - 1}")
    coeffs = tensor.coefficients
    blocks = []
    captured = 0.0
    for j in range(0, min(k, n) + 1):
        rows = subsets(k, j)
        if n - j > l - k:
            blocks.append(np.zeros((len(rows), 0)))
            continue
        cols = subsets(l - k, n - j)
        left = np.array([subset_bit_index(s, k) for s in rows], dtype=np.intp)
        right = np.array([subset_bit_index(s, l - k) for s in cols], dtype=np.intp)
        block = coeffs[(left[:, None] << (l - k)) + right[None, :]]
        captured += float(np.sum(block * block))
        blocks.append(block)
    total = float(np.sum(coeffs * coeffs))
    if abs(captured - total) > tol:
        raise ConsistencyError(
            f"blocks capture squared weight {captured!r} of {total!r}; "
            "the tensor has support outside its particle sector"
        )
    return blocks
