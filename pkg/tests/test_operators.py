import numpy as np
import pytest

import loclab as ll
from loclab.operators import OperatorError


class TestLaplacian:
    def test_two_site_spectrum(self):
        # degree diagonal (1,1) minus adjacency: eigenvalues 0 and 2 by hand
        ham = ll.build_laplacian(ll.lattice_box(1, 2))
        eigs = np.linalg.eigvalsh(ham.dense())
        assert np.allclose(eigs, [0.0, 2.0], atol=1e-12)

    def test_three_site_path_spectrum(self):
        # H = [[1,-1,0],[-1,2,-1],[0,-1,1]]: det(H - t) = -t(t-1)(t-3)
        ham = ll.build_laplacian(ll.lattice_box(1, 3))
        eigs = np.linalg.eigvalsh(ham.dense())
        assert np.allclose(eigs, [0.0, 1.0, 3.0], atol=1e-12)

    @pytest.mark.parametrize("n", [4, 6, 9])
    def test_path_spectrum_closed_form(self, n):
        ham = ll.build_laplacian(ll.lattice_box(1, n))
        eigs = np.sort(np.linalg.eigvalsh(ham.dense()))
        expect = np.sort(2.0 - 2.0 * np.cos(np.pi * np.arange(n) / n))
        assert np.allclose(eigs, expect, atol=1e-10)

    def test_diagonal_is_the_degree(self):
        sp = ll.lattice_box(2, 4)
        m = ll.build_laplacian(sp).dense()
        deg = np.array([len(sp.neighbors(i)) for i in range(sp.n_sites)], dtype=float)
        assert np.array_equal(np.diag(m), deg)

    def test_row_sums_vanish(self):
        m = ll.build_laplacian(ll.lattice_box(2, 5)).dense()
        assert np.allclose(m.sum(axis=1), 0.0, atol=1e-14)

    def test_positive_semidefinite(self):
        n, edges = ll.polynomial_tree_edges(4)
        m = ll.build_laplacian(ll.graph_space(n, edges)).dense()
        assert np.linalg.eigvalsh(m).min() > -1e-12


class TestAnderson:
    def test_zero_disorder_is_the_laplacian(self):
        sp = ll.lattice_box(1, 12)
        a = ll.build_anderson(sp, 0.0, 3).dense()
        b = ll.build_laplacian(sp).dense()
        assert np.array_equal(a, b)

    def test_same_seed_reproduces_the_matrix(self):
        sp = ll.lattice_box(1, 20)
        a = ll.build_anderson(sp, 4.0, 9).dense()
        b = ll.build_anderson(sp, 4.0, 9).dense()
        assert np.array_equal(a, b)

    def test_different_seeds_differ(self):
        sp = ll.lattice_box(1, 20)
        a = ll.build_anderson(sp, 4.0, 1).dense()
        b = ll.build_anderson(sp, 4.0, 2).dense()
        assert not np.array_equal(a, b)

    def test_potential_range(self):
        sp = ll.lattice_box(1, 200)
        lap = ll.build_laplacian(sp).dense()
        v = np.diag(ll.build_anderson(sp, 3.0, 4).dense() - lap)
        assert v.min() >= -1.5 and v.max() <= 1.5
        assert v.std() > 0.5  # actually spread out, not constant

    def test_smaller_box_potential_is_a_restriction(self):
        """The potential is keyed by coordinate, so shared sites agree across sizes."""
        big = ll.lattice_box(1, 16)
        small = ll.lattice_box(1, 8)
        vb = np.diag(ll.build_anderson(big, 4.0, 7).dense() - ll.build_laplacian(big).dense())
        vs = np.diag(ll.build_anderson(small, 4.0, 7).dense() - ll.build_laplacian(small).dense())
        for i in range(small.n_sites):
            j = big.index_of(small.site_of(i))
            assert vs[i] == vb[j]

    def test_symmetric(self):
        m = ll.build_anderson(ll.lattice_box(2, 4), 2.0, 5).dense()
        assert np.array_equal(m, m.T)

    def test_negative_disorder_rejected(self):
        with pytest.raises(OperatorError):
            ll.build_anderson(ll.lattice_box(1, 4), -1.0, 0)

    def test_gershgorin_bounds_the_spectrum(self):
        ham = ll.build_anderson(ll.lattice_box(1, 30), 4.0, 2)
        bound = ll.gershgorin_norm(ham)
        assert np.abs(np.linalg.eigvalsh(ham.dense())).max() <= bound + 1e-12


class TestClusterLaplacian:
    def test_each_base_eigenvalue_has_multiplicity_J(self):
        base = ll.lattice_box(1, 4)
        base_eigs = np.linalg.eigvalsh(ll.build_laplacian(base).dense())
        for J in (2, 3):
            ham = ll.build_cluster_laplacian(base, J, 10)
            eigs = np.linalg.eigvalsh(ham.dense())
            assert np.allclose(np.sort(eigs), np.sort(np.tile(base_eigs, J)), atol=1e-10)

    def test_spectrum_is_independent_of_separation(self):
        base = ll.lattice_box(1, 4)
        e1 = np.linalg.eigvalsh(ll.build_cluster_laplacian(base, 2, 5).dense())
        e2 = np.linalg.eigvalsh(ll.build_cluster_laplacian(base, 2, 50).dense())
        assert np.allclose(e1, e2, atol=1e-12)

    def test_copies_sit_at_the_requested_distance(self):
        base = ll.lattice_box(1, 4)
        ham = ll.build_cluster_laplacian(base, 2, 12)
        sp = ham.space
        # nearest cross-copy pair: last site of copy 0 to first site of copy 1
        d = sp.metric_by_index(3, 4)
        assert d == 12

    def test_no_cross_copy_matrix_elements(self):
        base = ll.lattice_box(1, 3)
        m = ll.build_cluster_laplacian(base, 2, 6).dense()
        assert np.array_equal(m[:3, 3:], np.zeros((3, 3)))

    def test_rejects_single_copy_and_overlap(self):
        base = ll.lattice_box(1, 4)
        with pytest.raises(OperatorError):
            ll.build_cluster_laplacian(base, 1, 10)
        with pytest.raises(OperatorError):
            ll.build_cluster_laplacian(base, 2, 0)


class TestWeight:
    def test_polynomial_values(self):
        sp = ll.lattice_box(1, 7)
        w = ll.build_weight(sp, "polynomial", kappa=1.0)
        r = sp.distances_from(w.base_index).astype(float)
        assert np.allclose(w.values, np.sqrt(1.0 + r ** 2))

    def test_exponential_values(self):
        sp = ll.lattice_box(1, 7)
        w = ll.build_weight(sp, "exponential", alpha=0.5)
        r = sp.distances_from(w.base_index).astype(float)
        assert np.allclose(w.values, np.exp(np.sqrt(r)))

    def test_base_site_has_weight_one(self):
        w = ll.build_weight(ll.lattice_box(2, 5), "polynomial", kappa=2.0)
        assert w.values[w.base_index] == 1.0
        assert w.values.min() >= 1.0

    def test_apply_and_inverse_cancel(self):
        sp = ll.lattice_box(1, 9)
        w = ll.build_weight(sp, "polynomial", kappa=1.0)
        v = np.arange(9, dtype=float)
        assert np.allclose(w.apply_inv(w.apply(v)), v)

    def test_inv_sq_sum_matches_direct(self):
        sp = ll.lattice_box(1, 9)
        w = ll.build_weight(sp, "polynomial", kappa=1.0)
        assert w.inv_sq_sum == pytest.approx(float(np.sum(w.values ** -2)))

    def test_kappa_must_beat_half_the_dimension(self):
        with pytest.raises(OperatorError):
            ll.build_weight(ll.lattice_box(2, 4), "polynomial", kappa=0.9)

    def test_missing_parameters_rejected(self):
        sp = ll.lattice_box(1, 4)
        with pytest.raises(OperatorError):
            ll.build_weight(sp, "polynomial")
        with pytest.raises(OperatorError):
            ll.build_weight(sp, "exponential")
        with pytest.raises(OperatorError):
            ll.build_weight(sp, "exponential", alpha=1.5)
        with pytest.raises(OperatorError):
            ll.build_weight(sp, "gaussian", kappa=1.0)

    def test_custom_base_site(self):
        sp = ll.lattice_box(1, 9)
        w = ll.build_weight(sp, "polynomial", kappa=1.0, base=3)
        assert int(sp.coords[w.base_index, 0]) == 3


class TestOperatorFiles:
    def test_round_trip_preserves_matrix_and_metadata(self, tmp_path):
        ham = ll.build_anderson(ll.lattice_box(1, 10), 4.0, 6)
        path = tmp_path / "op.txt"
        ll.save_hamiltonian(ham, path)
        back = ll.load_hamiltonian(path)
        assert np.array_equal(back.dense(), ham.dense())
        assert back.label == ham.label
        assert back.params["W"] == 4.0
        assert back.space.n_sites == ham.space.n_sites

    def test_cluster_round_trip_keeps_the_metric(self, tmp_path):
        ham = ll.build_cluster_laplacian(ll.lattice_box(1, 3), 2, 8)
        path = tmp_path / "cluster.txt"
        ll.save_hamiltonian(ham, path)
        back = ll.load_hamiltonian(path)
        assert back.space.metric_by_index(2, 3) == 8

    def test_garbage_file_rejected(self, tmp_path):
        path = tmp_path / "junk.txt"
        path.write_text("not json\n0,0,1.0\n")
        with pytest.raises(OperatorError):
            ll.load_hamiltonian(path)
