"""Landau-level and clustered-spectrum constructions that break uniform bounds."""

import math

import numpy as np
import pytest

import loclab as ll
from loclab import counterexamples as cx


class TestLandauAmplitudes:
    def test_ground_state_at_origin(self):
        assert cx.landau_amplitude(0, 0.0) == pytest.approx(1.0 / math.sqrt(2.0 * math.pi))

    @pytest.mark.parametrize("n,b", [(1, 1.0), (3, 1.0), (2, 0.5)])
    def test_peak_radius(self, n, b):
        rpk = cx.landau_peak_radius(n, b)
        assert rpk == pytest.approx(math.sqrt(2.0 * n / b))
        amp = cx.landau_amplitude(n, rpk, b)
        assert amp > cx.landau_amplitude(n, rpk + 1e-4, b)
        assert amp > cx.landau_amplitude(n, rpk - 1e-4, b)

    def test_ground_state_peaks_at_zero(self):
        assert cx.landau_peak_radius(0, 1.0) == 0.0

    @pytest.mark.parametrize("b", [0.5, 1.0, 2.0])
    def test_radial_norm_quadrature(self, b):
        # int_0^inf |phi_n(r)|^2 r dr = 1/b independent of the level
        assert cx.landau_norm_quadrature(1, b) == pytest.approx(1.0 / b, rel=1e-10)

    @pytest.mark.parametrize("n", [1, 5, 10, 20, 50, 200])
    def test_opposite_product_paths_agree(self, n):
        direct, via_logs = cx.landau_opposite_product(n)
        assert direct > 0.0
        assert abs(direct - via_logs) / via_logs <= 1e-10

    def test_opposite_product_reference_value(self):
        direct, _ = cx.landau_opposite_product(1)
        assert direct == pytest.approx(0.05854983152431917, rel=1e-13)

    def test_products_decay_monotonically(self):
        vals = [cx.landau_opposite_product(n)[0] for n in (1, 5, 10, 20, 50, 200)]
        assert all(b < a for a, b in zip(vals, vals[1:]))


class TestLandauViolation:
    def test_threshold_is_crossed(self):
        res = cx.landau_sudec_violation(ll.DecayParams(sigma=0.1, zeta=1.0))
        assert res.n_star == 5447
        assert res.ratio_at_n_star >= res.threshold == 1e6
        assert res.log_ratios[-1] >= res.log_ratios[0]

    def test_scaled_products_flatten(self):
        # after dividing out the Stirling factor the products settle near 1
        res = cx.landau_sudec_violation(ll.DecayParams(sigma=0.1, zeta=1.0), n_max=200)
        tail = res.scaled_products[res.levels >= 50]
        np.testing.assert_allclose(tail, 1.0, atol=0.02)

    def test_stronger_weight_crosses_earlier(self):
        weak = cx.landau_sudec_violation(ll.DecayParams(sigma=0.1, zeta=1.0))
        strong = cx.landau_sudec_violation(ll.DecayParams(sigma=0.5, zeta=1.0))
        assert strong.n_star < weak.n_star


class TestMixing:
    def test_two_copy_matrix_is_hadamard(self):
        q = cx.mixing_matrix(2)
        h = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)
        np.testing.assert_allclose(q, h, atol=1e-15)

    @pytest.mark.parametrize("j", [2, 3, 5])
    def test_orthogonal_with_flat_first_column(self, j):
        q = cx.mixing_matrix(j)
        np.testing.assert_allclose(q @ q.T, np.eye(j), atol=1e-14)
        np.testing.assert_allclose(q[:, 0], np.full(j, 1.0 / math.sqrt(j)), atol=1e-14)


class TestBlockwiseSpectral:
    def test_matches_dense_diagonalization(self, cluster_j2_d12):
        ham = ll.build_cluster_laplacian(ll.lattice_box(1, 4), 2, 12)
        bw = cx.blockwise_spectral(ham)
        assert bw.provenance["method"] == "blockwise"
        np.testing.assert_allclose(np.sort(bw.eigenvalues), cluster_j2_d12.eigenvalues,
                                   atol=1e-12)
        np.testing.assert_allclose(bw.eigenvectors.T @ bw.eigenvectors, np.eye(bw.n),
                                   atol=1e-12)
        assert [len(g.indices) for g in bw.groups] == [2, 2, 2, 2]
        from loclab.spectral import group_row_norms
        for gb, gd in zip(bw.groups, cluster_j2_d12.groups):
            assert gb.energy == pytest.approx(gd.energy, abs=1e-12)
            np.testing.assert_allclose(group_row_norms(bw, gb),
                                       group_row_norms(cluster_j2_d12, gd), atol=1e-12)

    def test_rotated_basis_spans_the_copies(self):
        ham = ll.build_cluster_laplacian(ll.lattice_box(1, 4), 2, 12)
        bw = cx.blockwise_spectral(ham)
        rot = cx.rotate_cluster_basis(bw, 2)
        np.testing.assert_allclose(rot.eigenvectors.T @ rot.eigenvectors, np.eye(rot.n),
                                   atol=1e-12)
        for k in range(rot.n):
            assert np.abs(rot.eigenvectors[:4, k]).max() > 1e-12
            assert np.abs(rot.eigenvectors[4:, k]).max() > 1e-12
        np.testing.assert_allclose(np.sort(rot.eigenvalues), np.sort(bw.eigenvalues),
                                   atol=1e-12)


class TestClusterComparison:
    def test_separation_sweep(self):
        res = cx.cluster_suleplus_violation(ll.lattice_box(1, 4), 2, (10, 20),
                                            ll.DecayParams(sigma=0.1, zeta=1.0),
                                            kappa=1.0, delta=0.1)
        # the two delta-pool diameters track the separation exactly
        assert res.c_delta == (13.0, 23.0)
        assert res.blockwise_invariant
        assert res.blockwise_c_log[0] == pytest.approx(res.blockwise_c_log[1], abs=1e-12)
        assert max(res.blockwise_sigma) <= 1e-12
        # constants in the mixed basis grow with separation, both routes agree
        assert res.rotated_monotone and res.projector_monotone and res.c_delta_monotone
        assert res.rotated_required_log[0] < res.rotated_required_log[1]
        np.testing.assert_allclose(res.rotated_required_log, res.projector_required_log,
                                   atol=1e-9)
