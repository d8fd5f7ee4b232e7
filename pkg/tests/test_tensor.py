import numpy as np
import pytest

from conftest import brute_force_spectrum, h2_isometry, random_isometry
from ttorder import (CapacityError, ConsistencyError, CorrelatedState, OccupationTensor,
                     PartialIsometry, ValidationError, correlated_tensor, matricize,
                     reorder_modes, sector_blocks, slater_tensor)
from ttorder.serialize import read_tensor_csv, write_tensor_csv


def bit_index(subset, l):
    return sum(1 << (l - 1 - p) for p in subset)


class TestPartialIsometry:
    def test_rejects_non_orthonormal_rows(self):
        with pytest.raises(ValidationError):
            PartialIsometry([[1.0, 1.0], [0.0, 1.0]])

    def test_rejects_more_rows_than_columns(self):
        with pytest.raises(ValidationError):
            PartialIsometry(np.eye(3)[:, :2])

    def test_mode_cap(self):
        with pytest.raises(CapacityError):
            PartialIsometry(np.eye(22)[:1], mode_cap=21)
        PartialIsometry(np.eye(21)[:1], mode_cap=21)

    def test_cap_boundary_tensor_builds(self):
        t = slater_tensor(PartialIsometry(np.eye(20)[:1]))
        assert t.coefficients.size == 1 << 20
        assert t.coefficients[1 << 19] == 1.0

    def test_rejects_complex_entries(self):
        with pytest.raises(ValidationError):
            PartialIsometry(np.array([[1.0 + 0.5j, 0.0]]))

    def test_row_subset_and_permuted(self):
        u = random_isometry(4, 7, seed=3)
        sub = u.row_subset([0, 2])
        assert sub.n_particles == 2 and sub.n_orbitals == 7
        perm = np.array([6, 5, 4, 3, 2, 1, 0])
        np.testing.assert_allclose(u.permuted(perm).entries, u.entries[:, ::-1])


class TestSlaterTensor:
    def test_single_particle_two_modes(self):
        t = slater_tensor(PartialIsometry(np.array([[1.0, 1.0]]) / np.sqrt(2)))
        expected = np.zeros(4)
        expected[0b10] = 1 / np.sqrt(2)
        expected[0b01] = 1 / np.sqrt(2)
        np.testing.assert_allclose(t.coefficients, expected, atol=1e-15)

    def test_h2_coefficients(self):
        c, s = np.cos(0.4), np.sin(0.4)
        cp, sp = np.cos(1.0), np.sin(1.0)
        t = slater_tensor(h2_isometry(c, s, cp, sp))
        coeffs = np.zeros(16)
        coeffs[0b1100] = c * cp
        coeffs[0b1001] = c * sp
        coeffs[0b0110] = -s * cp
        coeffs[0b0011] = s * sp
        np.testing.assert_allclose(t.coefficients, coeffs, atol=1e-15)

    def test_identity_rows_single_determinant(self):
        t = slater_tensor(PartialIsometry(np.eye(4)[:2]))
        expected = np.zeros(16)
        expected[0b1100] = 1.0
        np.testing.assert_allclose(t.coefficients, expected, atol=1e-15)

    @pytest.mark.parametrize("n,l,seed", [(2, 5, 0), (3, 7, 1), (4, 9, 2), (5, 10, 3)])
    def test_norm_and_sector_support(self, n, l, seed):
        t = slater_tensor(random_isometry(n, l, seed))
        assert abs(t.norm() - 1.0) < 1e-12
        pop = np.array([bin(i).count("1") for i in range(1 << l)])
        assert np.max(np.abs(t.coefficients[pop != n])) == 0.0


class TestOccupationTensor:
    def test_rejects_bad_norm(self):
        coeffs = np.zeros(8)
        coeffs[0b100] = 0.7
        with pytest.raises(ValidationError):
            OccupationTensor(coeffs, 1)

    def test_rejects_sector_leak(self):
        coeffs = np.zeros(8)
        coeffs[0b100] = np.sqrt(0.5)
        coeffs[0b110] = np.sqrt(0.5)
        with pytest.raises(ConsistencyError):
            OccupationTensor(coeffs, 1)

    def test_validate_off_allows_leak(self):
        coeffs = np.zeros(8)
        coeffs[0b100] = np.sqrt(0.5)
        coeffs[0b110] = np.sqrt(0.5)
        t = OccupationTensor(coeffs, 1, validate=False)
        assert t.n_modes == 3


class TestCorrelatedTensor:
    def test_single_term_matches_slater(self):
        u = random_isometry(4, 8, seed=11)
        state = CorrelatedState(u, [(1.0, (0, 1, 2, 3))])
        np.testing.assert_allclose(correlated_tensor(state).coefficients,
                                   slater_tensor(u).coefficients, atol=1e-14)

    def test_weak_superposition_norm_and_sector(self):
        n, l = 5, 12
        orbitals = random_isometry(n + 2, l, seed=7)
        state = CorrelatedState(orbitals, [
            (np.sqrt(0.9), tuple(range(n))),
            (np.sqrt(0.1), tuple(range(n - 2)) + (n, n + 1)),
        ])
        t = correlated_tensor(state)
        assert abs(t.norm() - 1.0) < 1e-10
        pop = np.array([bin(i).count("1") for i in range(1 << l)])
        assert np.max(np.abs(t.coefficients[pop != n])) == 0.0

    def test_disjoint_terms_split_weight_evenly(self):
        orbitals = random_isometry(4, 8, seed=5)
        amp = 1 / np.sqrt(2)
        state = CorrelatedState(orbitals, [(amp, (0, 1)), (amp, (2, 3))])
        t = correlated_tensor(state)
        parts = [slater_tensor(orbitals.row_subset(rows)).coefficients
                 for rows in [(0, 1), (2, 3)]]
        assert abs(parts[0] @ parts[1]) < 1e-12
        for part in parts:
            assert abs(amp ** 2 * (part @ part) - 0.5) < 1e-12

    def test_non_orthonormal_rows_raise_consistency_error(self):
        rows = np.array([[1.0, 0.0, 0.0, 0.0], [2e-4, 1.0, 0.0, 0.0]])
        loose = PartialIsometry(rows / np.linalg.norm(rows, axis=1, keepdims=True),
                                tol=1e-3)
        state = CorrelatedState(loose, [(np.sqrt(0.5), (0,)), (np.sqrt(0.5), (1,))])
        with pytest.raises(ConsistencyError):
            correlated_tensor(state)

    def test_out_of_range_index_set(self):
        u = random_isometry(2, 5, seed=1)
        with pytest.raises(ValidationError):
            CorrelatedState(u, [(1.0, (0, 2))])


class TestReorderModes:
    def test_identity(self):
        t = slater_tensor(random_isometry(3, 6, seed=2))
        out = reorder_modes(t, np.arange(6))
        np.testing.assert_array_equal(out.coefficients, t.coefficients)

    def test_h2_regrouped_spectrum_is_rank_one(self):
        c, s = np.cos(0.4), np.sin(0.4)
        cp, sp = np.cos(1.0), np.sin(1.0)
        t = slater_tensor(h2_isometry(c, s, cp, sp))
        regrouped = reorder_modes(t, [0, 2, 1, 3])
        values = brute_force_spectrum(regrouped.coefficients, 4, 2)
        np.testing.assert_allclose(values, [1.0, 0.0, 0.0, 0.0], atol=1e-14)

    def test_swapping_empty_modes_preserves_nonseparating_cuts(self):
        u = PartialIsometry(np.array([[0.6, 0.8, 0.0, 0.0]]))
        t = slater_tensor(u)
        swapped = reorder_modes(t, [0, 1, 3, 2])
        for k in (1, 2):
            np.testing.assert_allclose(
                brute_force_spectrum(swapped.coefficients, 4, k),
                brute_force_spectrum(t.coefficients, 4, k), atol=1e-14)

    @pytest.mark.parametrize("seed", range(6))
    def test_matches_column_permuted_rebuild(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 5))
        l = int(rng.integers(n + 1, 9))
        u = random_isometry(n, l, seed=seed + 100)
        order = rng.permutation(l)
        via_tensor = reorder_modes(slater_tensor(u), order)
        via_columns = slater_tensor(u.permuted(order))
        np.testing.assert_allclose(via_tensor.coefficients, via_columns.coefficients,
                                   atol=1e-12)
        for k in range(1, l):
            np.testing.assert_allclose(
                brute_force_spectrum(via_tensor.coefficients, l, k),
                brute_force_spectrum(via_columns.coefficients, l, k), atol=1e-12)

    def test_rejects_wrong_length(self):
        t = slater_tensor(random_isometry(2, 4, seed=0))
        with pytest.raises(ValidationError):
            reorder_modes(t, [0, 1, 2])

    @pytest.mark.parametrize("seed", range(4))
    def test_superposition_reorder_matches_rebuild(self, seed):
        rng = np.random.default_rng(seed)
        orbitals = random_isometry(5, 8, seed=seed + 60)
        state = CorrelatedState(orbitals, [
            (np.sqrt(0.7), (0, 1, 2)),
            (np.sqrt(0.2), (0, 3, 4)),
            (np.sqrt(0.1), (2, 3, 4)),
        ])
        order = rng.permutation(8)
        via_tensor = reorder_modes(correlated_tensor(state), order)
        via_columns = correlated_tensor(state.permuted(order))
        np.testing.assert_allclose(via_tensor.coefficients, via_columns.coefficients,
                                   atol=1e-12)


class TestMatricize:
    def test_two_mode_layout(self):
        t = slater_tensor(PartialIsometry(np.array([[1.0, 1.0]]) / np.sqrt(2)))
        np.testing.assert_allclose(matricize(t, 1),
                                   [[0.0, 1 / np.sqrt(2)], [1 / np.sqrt(2), 0.0]],
                                   atol=1e-15)

    def test_h2_canonical_antidiagonal_table(self):
        c, s = np.cos(0.7), np.sin(0.7)
        cp, sp = np.cos(0.3), np.sin(0.3)
        m = matricize(slater_tensor(h2_isometry(c, s, cp, sp)), 2)
        expected = np.zeros((4, 4))
        expected[0b00, 0b11] = s * sp
        expected[0b01, 0b10] = -s * cp
        expected[0b10, 0b01] = c * sp
        expected[0b11, 0b00] = c * cp
        np.testing.assert_allclose(m, expected, atol=1e-15)

    def test_out_of_range_cut(self):
        t = slater_tensor(random_isometry(2, 4, seed=0))
        for bad in (0, 4):
            with pytest.raises(ValidationError):
                matricize(t, bad)

    def test_mirrored_cut_of_reversed_tensor_shares_spectrum(self):
        t = slater_tensor(random_isometry(3, 6, seed=9))
        rev = reorder_modes(t, np.arange(5, -1, -1))
        for k in range(1, 6):
            np.testing.assert_allclose(
                brute_force_spectrum(rev.coefficients, 6, 6 - k),
                brute_force_spectrum(t.coefficients, 6, k), atol=1e-12)


class TestSectorBlocks:
    def test_h2_blocks(self):
        c, s = np.cos(0.7), np.sin(0.7)
        cp, sp = np.cos(0.3), np.sin(0.3)
        blocks = sector_blocks(slater_tensor(h2_isometry(c, s, cp, sp)), 2)
        assert len(blocks) == 3
        np.testing.assert_allclose(blocks[0], [[s * sp]], atol=1e-15)
        np.testing.assert_allclose(blocks[1], [[0.0, c * sp], [-s * cp, 0.0]],
                                   atol=1e-15)
        np.testing.assert_allclose(blocks[2], [[c * cp]], atol=1e-15)

    def test_full_left_block_is_single_row(self):
        u = random_isometry(3, 6, seed=4)
        blocks = sector_blocks(slater_tensor(u), 3)
        assert blocks[-1].shape == (1, 1)

    @pytest.mark.parametrize("n,l,seed", [(2, 6, 0), (3, 8, 1), (4, 10, 2)])
    def test_block_values_match_dense_spectrum(self, n, l, seed):
        t = slater_tensor(random_isometry(n, l, seed))
        for k in range(1, l):
            collected = []
            for block in sector_blocks(t, k):
                if min(block.shape):
                    collected.append(np.linalg.svd(block, compute_uv=False))
            merged = np.sort(np.concatenate(collected))[::-1]
            dense = brute_force_spectrum(t.coefficients, l, k)
            padded = np.zeros(dense.size)
            padded[:merged.size] = merged[:dense.size]
            np.testing.assert_allclose(padded, dense, atol=1e-10)

    def test_sector_leak_raises(self):
        coeffs = np.zeros(16)
        coeffs[0b1000] = np.sqrt(0.5)
        coeffs[0b1100] = np.sqrt(0.5)
        bad = OccupationTensor(coeffs, 1, validate=False)
        with pytest.raises(ConsistencyError):
            sector_blocks(bad, 2)


def test_tensor_csv_round_trip(tmp_path):
    t = slater_tensor(random_isometry(2, 5, seed=8))
    path = tmp_path / "tensor.csv"
    write_tensor_csv(path, t)
    back = read_tensor_csv(path, n_particles=2)
    np.testing.assert_array_equal(back.coefficients, t.coefficients)
    assert back.n_modes == t.n_modes
