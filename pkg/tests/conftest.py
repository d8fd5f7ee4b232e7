"""Shared helpers for the test suite."""

import numpy as np

from ttorder import PartialIsometry, random_partial_isometry


def h2_isometry(c, s, cp, sp, **kwargs):
    """Minimal-basis two-electron state over (A-up, A-down, B-up, B-down).

    Row 1 is the up orbital c*A + s*B, row 2 the down orbital cp*A + sp*B;
    requires c^2 + s^2 = cp^2 + sp^2 = 1.
    """
    return PartialIsometry([[c, 0.0, s, 0.0], [0.0, cp, 0.0, sp]], **kwargs)


def random_isometry(n, l, seed):
    return random_partial_isometry(n, l, seed)


def brute_force_spectrum(coefficients, n_modes, k):
    """Independent dense-SVD oracle straight from the flat coefficients."""
    matrix = np.reshape(coefficients, (1 << k, 1 << (n_modes - k)))
    return np.linalg.svd(matrix, compute_uv=False)
