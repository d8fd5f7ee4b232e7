"""One- and two-orbital reduced density matrices, entropies, mutual information.

Two-orbital matrices are written in the product basis (00, 01, 10, 11) where
the first slot is the smaller site index i and 1 means occupied.  Brute-force
partial traces work for any occupation tensor; the closed forms apply to
single Slater determinants and must agree with them.
"""

from __future__ import annotations

import numpy as np

from .errors import ConsistencyError, ValidationError
from .tensor import OccupationTensor, PartialIsometry
from .util import subsets

IM_NEGATIVE_TOL = 1e-10


def _site_axes_front(tensor: OccupationTensor, sites) -> np.ndarray:
    arr = tensor.as_array()
    arr = np.moveaxis(arr, sites, range(len(sites)))
    return arr.reshape(1 << len(sites), -1)


def one_orbital_rdm(tensor: OccupationTensor, i: int) -> np.ndarray:
    """2x2 reduced density matrix of site i by exact partial trace."""
    if not 0 <= i < tensor.n_modes:
        raise ValidationError(f"site {i} outside 0..{tensor.n_modes - 1}")
    mat = _site_axes_front(tensor, [i])
    return mat @ mat.T


def two_orbital_rdm(tensor: OccupationTensor, i: int, j: int) -> np.ndarray:
    """4x4 reduced density matrix of sites i < j by exact partial trace."""
    if not 0 <= i < j < tensor.n_modes:
        raise ValidationError(f"need 0 <= i < j < {tensor.n_modes}, got ({i}, {j})")
    mat = _site_axes_front(tensor, [i, j])
    return mat @ mat.T


def slater_one_orbital_rdm(orbitals: PartialIsometry, i: int) -> np.ndarray:
    """Closed form for a determinant state: diag(1 - |u_i|^2, |u_i|^2)."""
    if not 0 <= i < orbitals.n_orbitals:
        raise ValidationError(f"site {i} outside 0..{orbitals.n_orbitals - 1}")
    occ = float(orbitals.column(i) @ orbitals.column(i))
    return np.diag([1.0 - occ, occ])


def _offdiag_general(u: np.ndarray, i: int, j: int) -> float:
    # Alternating sum of bordered determinants over the subsets of the sites
    # strictly between i and j; batched per subset size.  The core block for
    # subset gamma is Id - U_{between \ gamma} U_{between \ gamma}^T, built as
    # a low-rank update of the all-removed base.
    n = u.shape[0]
    between = list(range(i + 1, j))
    base = np.eye(n) - u[:, between] @ u[:, between].T
    total = 0.0
    for size in range(0, j - i):
        gammas = subsets(len(between), size)
        blocks = np.empty((len(gammas), n + size + 1, n + size + 1))
        for g, picks in enumerate(gammas):
            gam = [between[p] for p in picks]
            u_gam = u[:, gam]
            blocks[g, :size + 1, :size + 1] = 0.0
            blocks[g, :size + 1, size + 1:] = u[:, gam + [j]].T
            blocks[g, size + 1:, :size + 1] = u[:, [i] + gam]
            blocks[g, size + 1:, size + 1:] = base + u_gam @ u_gam.T
        total += (-1.0) ** (size + 1) * float(np.sum(np.linalg.det(blocks)))
    return total


def _offdiag_pairwise(u: np.ndarray, i: int, j: int) -> float:
    # Valid for two-particle states: c_ij - 2 sum_m (c_mm c_ij - c_im c_mj),
    # the overlap term makes consecutive and distant pairs one formula.
    ui, uj = u[:, i], u[:, j]
    c_ij = float(ui @ uj)
    total = c_ij
    for m in range(i + 1, j):
        um = u[:, m]
        total -= 2.0 * (float(um @ um) * c_ij - float(ui @ um) * float(um @ uj))
    return total


def slater_two_orbital_rdm(orbitals: PartialIsometry, i: int, j: int,
                           formula: str = "auto") -> np.ndarray:
    """Closed form of the two-orbital reduced density matrix of a determinant.

    The diagonal follows from the pair Gram determinant
    G = |u_i|^2 |u_j|^2 - <u_i, u_j>^2; the (01, 10) entry depends on the
    occupancies of all sites between i and j.

    formula selects the off-diagonal path:

    * "auto": cheapest valid path for the given (i, j, N);
    * "general": alternating bordered-determinant sum (always valid);
    * "adjacent": j = i + 1, plain overlap <u_i, u_j>;
    * "next_nearest": j = i + 2, one reflection through site i + 1;
    * "two_particle": N = 2, pairwise sum with the overlap correction.
    """
    u = orbitals.entries
    n = orbitals.n_particles
    if not 0 <= i < j < orbitals.n_orbitals:
        raise ValidationError(f"need 0 <= i < j < {orbitals.n_orbitals}, got ({i}, {j})")
    ui, uj = u[:, i], u[:, j]
    a = float(ui @ ui)
    b = float(uj @ uj)
    g = a * b - float(ui @ uj) ** 2
    rho = np.zeros((4, 4))
    rho[0, 0] = 1.0 - a - b + g
    rho[1, 1] = b - g
    rho[2, 2] = a - g
    rho[3, 3] = g

    if formula == "auto":
        if j == i + 1:
            formula = "adjacent"
        elif j == i + 2:
            formula = "next_nearest"
        elif n == 2:
            formula = "two_particle"
        else:
            formula = "general"
    if formula == "adjacent":
        if j != i + 1:
            raise ValidationError("adjacent path requires j = i + 1")
        off = float(ui @ uj)
    elif formula == "next_nearest":
        if j != i + 2:
            raise ValidationError("next_nearest path requires j = i + 2")
        um = u[:, i + 1]
        reflect = (1.0 - 2.0 * float(um @ um)) * np.eye(n) + 2.0 * np.outer(um, um)
        off = float(uj @ reflect @ ui)
    elif formula == "two_particle":
        if n != 2:
            raise ValidationError("two_particle path requires exactly 2 particles")
        off = _offdiag_pairwise(u, i, j)
    elif formula == "general":
        off = _offdiag_general(u, i, j)
    else:
        raise ValidationError(f"unknown formula {formula!r}")
    rho[1, 2] = rho[2, 1] = off
    return rho


def von_neumann_entropy(rho, *, tol: float = 1e-8) -> float:
    """Base-2 entropy -sum(lam * log2(lam)) of a unit-trace symmetric matrix.

    Eigenvalues are clamped to [0, 1] before taking logarithms, with
    0 * log 0 = 0.
    """
    rho = np.asarray(rho, dtype=np.float64)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValidationError("expected a square matrix")
    if np.max(np.abs(rho - rho.T)) > tol:
        raise ValidationError("matrix is not symmetric")
    trace = float(np.trace(rho))
    if abs(trace - 1.0) > tol:
        raise ValidationError(f"trace {trace!r} deviates from 1")
    lam = np.clip(np.linalg.eigvalsh(rho), 0.0, 1.0)
    lam = lam[lam > 0.0]
    return float(-(lam * np.log2(lam)).sum())


def _im_from_entropies(s1: np.ndarray, s2_of) -> np.ndarray:
    l = s1.size
    im = np.zeros((l, l))
    for i in range(l):
        for j in range(i + 1, l):
            val = s1[i] + s1[j] - s2_of(i, j)
            if val < -IM_NEGATIVE_TOL:
                raise ConsistencyError(f"mutual information ({i}, {j}) = {val!r} < 0")
            im[i, j] = im[j, i] = max(val, 0.0)
    return im


def mutual_information(tensor: OccupationTensor) -> np.ndarray:
    """Symmetric L x L mutual-information matrix from brute-force traces.

    Entry (i, j) is S_i + S_j - S_ij with base-2 entropies and zero diagonal.
    Values are clamped at zero; anything below -1e-10 raises ConsistencyError.
    """
    l = tensor.n_modes
    s1 = np.array([von_neumann_entropy(one_orbital_rdm(tensor, i)) for i in range(l)])
    return _im_from_entropies(
        s1, lambda i, j: von_neumann_entropy(two_orbital_rdm(tensor, i, j)))


def slater_mutual_information(orbitals: PartialIsometry) -> np.ndarray:
    """Mutual-information matrix of a determinant state via the closed forms."""
    l = orbitals.n_orbitals
    s1 = np.array([von_neumann_entropy(slater_one_orbital_rdm(orbitals, i))
                   for i in range(l)])
    return _im_from_entropies(
        s1, lambda i, j: von_neumann_entropy(slater_two_orbital_rdm(orbitals, i, j)))
