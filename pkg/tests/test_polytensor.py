import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flutterrom.polytensor import (
    MonomialTable,
    SparseBilinearForm,
    SparseTrilinearForm,
    enumerate_monomials,
    monomial_count,
    polynomial_eval,
)


def brute_force_count(p, nvars):
    """Independent oracle: enumerate exponent tuples summing to p."""
    return sum(1 for e in itertools.product(range(p + 1), repeat=nvars) if sum(e) == p)


def random_bilinear(rng, dim, nnz=12, complex_vals=False):
    p = rng.integers(0, dim, nnz)
    i = rng.integers(0, dim, nnz)
    j = rng.integers(0, dim, nnz)
    v = rng.standard_normal(nnz)
    if complex_vals:
        v = v + 1j * rng.standard_normal(nnz)
    return SparseBilinearForm(dim, dim, dim, p, i, j, v)


def dense_bilinear(Q):
    """Dense triple-loop oracle representation of a sparse form."""
    T = np.zeros((Q.dim_out, Q.dim_in1, Q.dim_in2), dtype=complex)
    for p, i, j, v in zip(Q.p, Q.i, Q.j, Q.val):
        T[p, i, j] += v
    return T


class TestEnumeration:
    def test_order2_count_three_vars(self):
        table = enumerate_monomials(3, 2)
        assert table.count_of_order(2) == 6  # binomial(2+2, 2)

    def test_order1_two_vars(self):
        table = enumerate_monomials(2, 1)
        assert len(table) == 2
        assert table.exponents.tolist() == [[1, 0], [0, 1]]  # {z1, mu}

    def test_order9_five_vars_brute_force(self):
        # frozen from the itertools oracle: 715 order-9 monomials in 5 vars
        assert brute_force_count(9, 5) == 715
        table = enumerate_monomials(5, 9)
        assert table.count_of_order(9) == 715

    @pytest.mark.parametrize("nvars", range(2, 7))
    @pytest.mark.parametrize("order", range(1, 11))
    def test_counts_match_binomial(self, nvars, order):
        table = enumerate_monomials(nvars, order)
        assert table.count_of_order(order) == monomial_count(order, nvars)

    def test_rejects_bad_sizes(self):
        with pytest.raises(ValueError):
            enumerate_monomials(1, 3)
        with pytest.raises(ValueError):
            enumerate_monomials(3, 0)

    def test_descending_lex_within_order(self):
        table = enumerate_monomials(3, 2)
        order2 = [tuple(table.exponents[m]) for m in table.ids_of_order(2)]
        assert order2 == [(2, 0, 0), (1, 1, 0), (1, 0, 1), (0, 2, 0), (0, 1, 1), (0, 0, 2)]
        # the parameter slot comes last
        assert order2[-1] == (0, 0, 2)

    def test_jordan_dependency_points_backwards(self):
        # alpha + e_s - e_j with s < j must already be processed
        table = enumerate_monomials(5, 4)
        for p in range(1, 5):
            ids = list(table.ids_of_order(p))
            for mid in ids:
                alpha = table.exponents[mid].copy()
                for s in range(5):
                    for j in range(s + 1, 5):
                        if alpha[j] == 0:
                            continue
                        dep = alpha.copy()
                        dep[s] += 1
                        dep[j] -= 1
                        assert table.index_of(dep) < mid

    @given(st.integers(2, 5), st.integers(1, 6))
    @settings(max_examples=30, deadline=None)
    def test_lookup_bijection(self, nvars, order):
        table = enumerate_monomials(nvars, order)
        for mid in range(len(table)):
            assert table.index_of(table.exponents[mid]) == mid

    def test_conjugation_permutation(self):
        table = enumerate_monomials(5, 3)
        conj = [1, 0, 3, 2, 4]  # (z1, z1b, z2, z2b, mu)
        perm = table.conjugation_permutation(conj)
        # involution
        assert (perm[perm] == np.arange(len(table))).all()
        mid = table.index_of((2, 1, 0, 0, 0))
        assert perm[mid] == table.index_of((1, 2, 0, 0, 0))


class TestBilinear:
    def test_single_entry(self):
        Q = SparseBilinearForm.from_entries(3, 3, 3, [(0, 0, 1, 2.0)])
        e0 = np.eye(3)[0]
        e1 = np.eye(3)[1]
        out = Q.apply(e0, e1)
        assert np.allclose(out, [2.0, 0, 0])

    def test_zero_argument(self):
        rng = np.random.default_rng(0)
        Q = random_bilinear(rng, 5)
        u = rng.standard_normal(5)
        assert np.allclose(Q.apply(u, np.zeros(5)), 0)

    @given(st.integers(0, 1000))
    @settings(max_examples=25, deadline=None)
    def test_dense_loop_oracle(self, seed):
        rng = np.random.default_rng(seed)
        dim = int(rng.integers(2, 9))
        Q = random_bilinear(rng, dim, complex_vals=True)
        T = dense_bilinear(Q)
        u = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        expect = np.einsum("pij,i,j->p", T, u, v)
        assert np.allclose(Q.apply(u, v), expect, atol=1e-13)

    @given(st.integers(0, 1000))
    @settings(max_examples=25, deadline=None)
    def test_linearity_in_each_slot(self, seed):
        rng = np.random.default_rng(seed)
        dim = int(rng.integers(2, 9))
        Q = random_bilinear(rng, dim)
        u, w, v = (rng.standard_normal(dim) for _ in range(3))
        a, b = rng.standard_normal(2)
        lhs = Q.apply(a * u + b * w, v)
        rhs = a * Q.apply(u, v) + b * Q.apply(w, v)
        assert np.allclose(lhs, rhs, atol=1e-12)
        lhs = Q.apply(v, a * u + b * w)
        rhs = a * Q.apply(v, u) + b * Q.apply(v, w)
        assert np.allclose(lhs, rhs, atol=1e-12)

    def test_matrix_contractions_pull_out_identity(self):
        # Q(y0, I) and Q(I, y0) reproduce Q(y0, y) and Q(y, y0)
        rng = np.random.default_rng(3)
        dim = 6
        Q = random_bilinear(rng, dim)
        y0 = rng.standard_normal(dim)
        y = rng.standard_normal(dim)
        I = np.eye(dim)
        assert np.allclose(Q.apply_matrix_right(y0, I) @ y, Q.apply(y0, y), atol=1e-13)
        assert np.allclose(Q.apply_matrix_left(I, y0) @ y, Q.apply(y, y0), atol=1e-13)

    def test_matrix_variant_dense_oracle(self):
        rng = np.random.default_rng(7)
        dim = 5
        Q = random_bilinear(rng, dim, complex_vals=True)
        T = dense_bilinear(Q)
        A = rng.standard_normal((dim, dim))
        v = rng.standard_normal(dim)
        expect = np.einsum("pij,iq,j->pq", T, A, v)
        assert np.allclose(Q.apply_matrix_left(A, v), expect, atol=1e-13)
        u = rng.standard_normal(dim)
        expect = np.einsum("pij,i,jq->pq", T, u, A)
        assert np.allclose(Q.apply_matrix_right(u, A), expect, atol=1e-13)

    def test_zero_form_gives_zero_matrix(self):
        Q = SparseBilinearForm(4, 4, 4)
        A = np.eye(4)
        assert np.allclose(Q.apply_matrix_left(A, np.ones(4)), 0)

    def test_dimension_mismatch(self):
        Q = SparseBilinearForm(4, 4, 4)
        with pytest.raises(ValueError):
            Q.apply(np.ones(3), np.ones(4))


class TestTrilinear:
    @given(st.integers(0, 500))
    @settings(max_examples=20, deadline=None)
    def test_dense_loop_oracle(self, seed):
        rng = np.random.default_rng(seed)
        dim = int(rng.integers(2, 7))
        nnz = 10
        H = SparseTrilinearForm(dim, dim,
                                rng.integers(0, dim, nnz), rng.integers(0, dim, nnz),
                                rng.integers(0, dim, nnz), rng.integers(0, dim, nnz),
                                rng.standard_normal(nnz))
        T = np.zeros((dim,) * 4)
        for p, i, j, k, v in zip(H.p, H.i, H.j, H.k, H.val):
            T[p, i, j, k] += v
        u, v_, w = (rng.standard_normal(dim) for _ in range(3))
        expect = np.einsum("pijk,i,j,k->p", T, u, v_, w)
        assert np.allclose(H.apply(u, v_, w), expect, atol=1e-12)
        expect_mat = np.einsum("pijk,i,j->pk", T, u, v_)
        assert np.allclose(H.contract_first_two(u, v_).toarray(), expect_mat, atol=1e-12)


class TestPolynomialEval:
    def test_order1_is_matvec(self):
        table = enumerate_monomials(3, 2)
        rng = np.random.default_rng(1)
        coeffs = np.zeros((len(table), 4), dtype=complex)
        W1 = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
        for s, mid in enumerate(table.ids_of_order(1)):
            coeffs[mid] = W1[s]
        z = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        assert np.allclose(polynomial_eval(table, coeffs, z), W1.T @ z, atol=1e-13)

    def test_zero_point(self):
        table = enumerate_monomials(4, 3)
        coeffs = np.ones((len(table), 2), dtype=complex)
        assert np.allclose(polynomial_eval(table, coeffs, np.zeros(4)), 0)

    def test_naive_oracle_order3(self):
        table = enumerate_monomials(4, 3)
        rng = np.random.default_rng(5)
        coeffs = rng.standard_normal((len(table), 3)) + 1j * rng.standard_normal((len(table), 3))
        z = 0.3 * (rng.standard_normal(4) + 1j * rng.standard_normal(4))
        naive = np.zeros(3, dtype=complex)
        for mid in range(len(table)):
            mono = 1.0 + 0j
            for v, e in enumerate(table.exponents[mid]):
                mono *= z[v] ** e
            naive += coeffs[mid] * mono
        assert np.allclose(polynomial_eval(table, coeffs, z), naive, atol=1e-12)

    def test_linear_in_coeffs(self):
        table = enumerate_monomials(3, 2)
        rng = np.random.default_rng(9)
        c1 = rng.standard_normal((len(table), 2))
        c2 = rng.standard_normal((len(table), 2))
        z = rng.standard_normal(3)
        lhs = polynomial_eval(table, 2.0 * c1 + 0.5 * c2, z)
        rhs = 2.0 * polynomial_eval(table, c1, z) + 0.5 * polynomial_eval(table, c2, z)
        assert np.allclose(lhs, rhs, atol=1e-13)
