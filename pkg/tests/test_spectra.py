import math

import numpy as np
import pytest

from conftest import brute_force_spectrum, h2_isometry, random_isometry
from ttorder import (CutSpectrum, DegeneracyError, PartialIsometry, ValidationError,
                     compound_matrix, cut_prefactor, cut_spectrum, inversion_residual,
                     partitioned_cauchy_binet, slater_cut_spectrum, slater_tensor,
                     tt_decompose, weyl_violation)
from ttorder.experiments import build_state
from ttorder.tensor import correlated_tensor


def dense_rank(matrix, rel=1e-12):
    s = np.linalg.svd(matrix, compute_uv=False)
    return int(np.count_nonzero(s > rel * s[0])) if s[0] > 0 else 0


class TestCutSpectrum:
    def test_single_particle_pair(self):
        u = PartialIsometry(np.array([[1.0, 1.0]]) / np.sqrt(2))
        spec = slater_cut_spectrum(u, 1)
        np.testing.assert_allclose(spec.values, [1 / np.sqrt(2)] * 2, atol=1e-15)
        assert spec.rank == 2

    def test_h2_regrouped_is_rank_one(self):
        c, s = np.cos(0.5), np.sin(0.5)
        cp, sp = np.cos(1.2), np.sin(1.2)
        grouped = h2_isometry(c, s, cp, sp).permuted([0, 2, 1, 3])
        spec = slater_cut_spectrum(grouped, 2)
        np.testing.assert_allclose(spec.values, [1.0, 0.0, 0.0, 0.0], atol=1e-14)
        assert spec.rank == 1

    def test_h2_canonical_values_are_product_magnitudes(self):
        c, s = np.cos(0.5), np.sin(0.5)
        cp, sp = np.cos(1.2), np.sin(1.2)
        spec = slater_cut_spectrum(h2_isometry(c, s, cp, sp), 2)
        expected = np.sort(np.abs([c * cp, c * sp, s * cp, s * sp]))[::-1]
        np.testing.assert_allclose(spec.values, expected, atol=1e-14)

    def test_h2_symmetric_point_all_half(self):
        r = 1 / np.sqrt(2)
        spec = slater_cut_spectrum(h2_isometry(r, r, r, r), 2)
        np.testing.assert_allclose(spec.values, [0.5] * 4, atol=1e-14)

    def test_descending_enforced(self):
        with pytest.raises(ValidationError):
            CutSpectrum(k=1, n_modes=2, values=np.array([0.1, 0.9]), rank=2)

    def test_superposition_rank_may_exceed_particle_bound(self):
        state = build_state("weak_correlated", 3, 8, seed=1)
        spec = cut_spectrum(correlated_tensor(state), 4)
        assert spec.prefactor is None
        assert spec.rank > 2 ** 3

    def test_determinant_rank_bound_enforced(self):
        with pytest.raises(ValidationError):
            CutSpectrum(k=3, n_modes=6, values=np.full(5, 0.4), rank=5,
                        prefactor=0.1, n_particles=2)


class TestPrefactor:
    def test_h2_canonical_value(self):
        c, s = np.cos(0.5), np.sin(0.5)
        cp, sp = np.cos(1.2), np.sin(1.2)
        p = cut_prefactor(h2_isometry(c, s, cp, sp), 2)
        assert abs(p - (c * cp * s * sp) ** 2) < 1e-14

    def test_h2_grouped_split_vanishes(self):
        c, s = np.cos(0.5), np.sin(0.5)
        cp, sp = np.cos(1.2), np.sin(1.2)
        grouped = h2_isometry(c, s, cp, sp).permuted([0, 2, 1, 3])
        assert cut_prefactor(grouped, 2) == 0.0

    def test_single_particle_value(self):
        u = PartialIsometry(np.array([[1.0, 1.0]]) / np.sqrt(2))
        assert abs(cut_prefactor(u, 1) - 0.25) < 1e-14

    @pytest.mark.parametrize("seed", range(12))
    def test_matches_extreme_product_everywhere(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 6))
        l = int(rng.integers(n + 1, 13))
        k = int(rng.integers(1, l))
        u = random_isometry(n, l, seed=seed + 500)
        values = brute_force_spectrum(slater_tensor(u).coefficients, l, k)
        d = min(1 << k, 1 << n, 1 << (l - k))
        expected = values[0] ** 2 * values[d - 1] ** 2
        p = cut_prefactor(u, k)
        assert abs(p - expected) <= 1e-9 * max(expected, 1e-30) + 1e-30

    def test_collapsed_mid_zone_is_zero(self):
        u = random_isometry(5, 7, seed=3)
        assert cut_prefactor(u, 3) == 0.0
        assert cut_prefactor(u, 4) == 0.0


class TestInversionResidual:
    def test_h2_symmetric_point(self):
        r = 1 / np.sqrt(2)
        spec = slater_cut_spectrum(h2_isometry(r, r, r, r), 2)
        assert abs(spec.prefactor - 1 / 16) < 1e-14
        assert inversion_residual(spec) < 1e-12

    def test_large_random_state(self):
        u = random_isometry(8, 16, seed=21)
        spec = slater_cut_spectrum(u, 8)
        assert inversion_residual(spec) < 1e-9

    def test_rank_one_with_zero_prefactor(self):
        values = np.array([1.0, 0.0, 0.0, 0.0])
        spec = CutSpectrum(k=2, n_modes=4, values=values, rank=1, prefactor=0.0,
                           n_particles=2)
        assert spec.pairing_count == 4
        assert inversion_residual(spec) == 0.0

    def test_requires_prefactor(self):
        spec = cut_spectrum(slater_tensor(random_isometry(2, 4, seed=0)), 2)
        with pytest.raises(ValidationError):
            inversion_residual(spec)


class TestBlockSpectrum:
    def test_single_particle_matches_dense(self):
        u = random_isometry(1, 6, seed=2)
        for k in range(1, 6):
            block = slater_cut_spectrum(u, k, method="block")
            dense = slater_cut_spectrum(u, k, method="dense")
            np.testing.assert_allclose(block.values, dense.values, atol=1e-12)

    @pytest.mark.parametrize("seed", range(15))
    def test_matches_dense_on_random_states(self, seed):
        rng = np.random.default_rng(1000 + seed)
        n = int(rng.integers(1, 6))
        l = int(rng.integers(n + 1, 13))
        valid = [k for k in range(1, l) if k <= l - n or k >= n]
        k = int(rng.choice(valid))
        u = random_isometry(n, l, seed=seed)
        block = slater_cut_spectrum(u, k, method="block")
        dense = slater_cut_spectrum(u, k, method="dense")
        assert block.values.shape == dense.values.shape
        np.testing.assert_allclose(block.values, dense.values, atol=1e-9)
        assert block.rank == dense.rank

    def test_extreme_cuts(self):
        u = random_isometry(3, 9, seed=12)
        for k in (1, 8):
            block = slater_cut_spectrum(u, k, method="block")
            dense = slater_cut_spectrum(u, k, method="dense")
            np.testing.assert_allclose(block.values, dense.values, atol=1e-10)

    def test_rank_deficient_left_block_refuses(self):
        r = 1 / np.sqrt(2)
        u = PartialIsometry(np.array([[r, r, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]]))
        with pytest.raises(DegeneracyError, match="left"):
            slater_cut_spectrum(u, 2, method="block")

    def test_uncovered_cut_refuses(self):
        u = random_isometry(5, 7, seed=3)
        with pytest.raises(DegeneracyError, match="dense"):
            slater_cut_spectrum(u, 4, method="block")


class TestCompoundMatrix:
    def test_order_one_is_the_matrix(self):
        a = np.arange(9.0).reshape(3, 3)
        np.testing.assert_array_equal(compound_matrix(a, 1), a)

    def test_top_order_is_determinant(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        np.testing.assert_allclose(compound_matrix(a, 2), [[np.linalg.det(a)]])

    def test_order_zero(self):
        np.testing.assert_array_equal(compound_matrix(np.eye(3), 0), [[1.0]])

    def test_eigenvalues_are_pair_products(self):
        a, b, c = 0.7, -1.3, 2.1
        eig = np.sort(np.linalg.eigvals(compound_matrix(np.diag([a, b, c]), 2)))
        np.testing.assert_allclose(eig, np.sort([a * b, a * c, b * c]), atol=1e-12)

    def test_multiplicativity_on_rectangles(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal((3, 5))
        y = rng.standard_normal((5, 4))
        np.testing.assert_allclose(compound_matrix(x @ y, 2),
                                   compound_matrix(x, 2) @ compound_matrix(y, 2),
                                   atol=1e-12)

    def test_order_out_of_range(self):
        with pytest.raises(ValidationError):
            compound_matrix(np.eye(2), 3)


class TestPartitionedCauchyBinet:
    def test_empty_pin_recovers_classical_product(self):
        rng = np.random.default_rng(0)
        a = rng.standard_normal((3, 5))
        b = rng.standard_normal((5, 3))
        lhs, rhs = partitioned_cauchy_binet(a, b, (), range(5))
        assert abs(lhs - rhs) < 1e-12
        assert abs(lhs - np.linalg.det(a @ b)) < 1e-12

    def test_square_inverse_pair(self):
        rng = np.random.default_rng(1)
        a = rng.standard_normal((4, 4)) + 4 * np.eye(4)
        lhs, rhs = partitioned_cauchy_binet(a, np.linalg.inv(a), (), range(4))
        assert abs(lhs - 1.0) < 1e-10 and abs(rhs - 1.0) < 1e-10

    def test_single_pin(self):
        rng = np.random.default_rng(2)
        a = rng.standard_normal((3, 5))
        b = rng.standard_normal((5, 3))
        lhs, rhs = partitioned_cauchy_binet(a, b, (2,), (0, 1, 3, 4))
        assert abs(lhs - rhs) < 1e-12

    @pytest.mark.parametrize("seed", range(10))
    def test_identity_on_random_instances(self, seed):
        rng = np.random.default_rng(seed)
        for _ in range(12):
            m = int(rng.integers(1, 7))
            n = int(rng.integers(m, 7))
            a = rng.standard_normal((m, n))
            b = rng.standard_normal((n, m))
            j = int(rng.integers(0, m + 1))
            tset = sorted(int(x) for x in rng.choice(n, size=j, replace=False))
            uset = sorted(set(range(n)) - set(tset))
            lhs, rhs = partitioned_cauchy_binet(a, b, tset, uset)
            assert abs(lhs - rhs) <= 1e-10 * (1.0 + abs(lhs))

    def test_rejects_overlapping_sets(self):
        with pytest.raises(ValidationError):
            partitioned_cauchy_binet(np.eye(2), np.eye(2), (0,), (0, 1))


class TestTTDecomposition:
    def test_product_state_has_unit_ranks(self):
        u = PartialIsometry(np.array([[0.0, 1.0, 0.0, 0.0]]))
        tt = tt_decompose(slater_tensor(u))
        assert tt.ranks == (1, 1, 1)
        np.testing.assert_allclose(tt.contract(),
                                   slater_tensor(u).coefficients, atol=1e-14)

    def test_paired_mode_construction_saturates_rank(self):
        n = 3
        entries = np.hstack([np.eye(n), np.eye(n)]) / np.sqrt(2)
        tt = tt_decompose(slater_tensor(PartialIsometry(entries)))
        assert tt.ranks[n - 1] == 2 ** n

    @pytest.mark.parametrize("n,l,seed", [(2, 6, 0), (3, 8, 1), (4, 9, 2)])
    def test_exact_ranks_match_matricizations(self, n, l, seed):
        t = slater_tensor(random_isometry(n, l, seed))
        tt = tt_decompose(t)
        for k in range(1, l):
            assert tt.ranks[k - 1] == dense_rank(t.coefficients.reshape(1 << k, -1))
            assert tt.ranks[k - 1] <= 2 ** n
        np.testing.assert_allclose(tt.contract(), t.coefficients, atol=1e-10)
        assert tt.discarded_weight < 1e-10

    def test_round_trip_on_superposition(self):
        state = build_state("strong_correlated", 4, 10, seed=2)
        tensor = correlated_tensor(state)
        tt = tt_decompose(tensor)
        np.testing.assert_allclose(tt.contract(), tensor.coefficients, atol=1e-10)
        for k in range(1, 10):
            assert tt.ranks[k - 1] == dense_rank(tensor.coefficients.reshape(1 << k, -1))

    @pytest.mark.parametrize("threshold", [1e-4, 1e-2, 0.1])
    def test_truncated_error_within_bound(self, threshold):
        t = slater_tensor(random_isometry(4, 10, seed=7))
        tt = tt_decompose(t, threshold)
        err = np.linalg.norm(tt.contract() - t.coefficients)
        assert err <= tt.discarded_weight + 1e-10
        tail_sq = 0.0
        for k in range(1, 10):
            values = brute_force_spectrum(t.coefficients, 10, k)
            tail_sq += float(np.sum(values[tt.ranks[k - 1]:] ** 2))
        assert err <= math.sqrt(tail_sq) + 1e-10


class TestWeylBound:
    def test_single_component_tight(self):
        spec = slater_cut_spectrum(random_isometry(3, 6, seed=0), 3)
        for j in (1, 2, 5):
            assert weyl_violation([spec], [1.0], spec, [(j, (j,))]) <= 0.0

    def test_weak_state_minimal_compositions(self):
        state = build_state("weak_correlated", 4, 8, seed=5)
        total = cut_spectrum(correlated_tensor(state), 4)
        comps = [cut_spectrum(slater_tensor(state.term_isometry(t)), 4)
                 for t in range(state.n_terms)]
        amps = [a for a, _ in state.terms]
        assert weyl_violation(comps, amps, total, [(1, (1, 0)), (1, (0, 1))]) <= 1e-10

    def test_strong_state_sampled_compositions(self):
        state = build_state("strong_correlated", 4, 8, seed=9)
        total = cut_spectrum(correlated_tensor(state), 4)
        comps = [cut_spectrum(slater_tensor(state.term_isometry(t)), 4)
                 for t in range(state.n_terms)]
        amps = [a for a, _ in state.terms]
        rng = np.random.default_rng(0)
        assignments = []
        for j in range(1, total.values.size + 1):
            for _ in range(20):
                cut1 = int(rng.integers(0, j + 1))
                cut2 = int(rng.integers(0, j - cut1 + 1))
                assignments.append((j, (cut1, cut2, j - cut1 - cut2)))
        assert weyl_violation(comps, amps, total, assignments) <= 1e-10

    def test_malformed_assignment(self):
        spec = slater_cut_spectrum(random_isometry(2, 4, seed=0), 2)
        with pytest.raises(ValidationError):
            weyl_violation([spec], [1.0], spec, [(2, (1,))] )
