"""Kronecker-sum solver: exponential factors, format paths, oracle and bounds."""

import math

import numpy as np
import pytest

from fracsum.expsum import build_expsum, params_for_terms, select_params, total_error_bound
from fracsum.problems import Grid1D, RhsSpec, laplacian_1d, sample_rhs
from fracsum.solver import (
    KroneckerSum,
    MemoryCapError,
    SolveReport,
    exp_kron_apply,
    factor_exponentials,
    oracle_apply,
    solve_cp,
    solve_dense,
    solve_tt,
    solve_tucker,
)
from fracsum.tensors import CPTensor, hosvd, tt_svd, vec

from _oracles import expm_taylor, kron_sum_matrix, random_spd


def make_es(alpha=0.5, eps=1e-6):
    return build_expsum(select_params(alpha, eps))


class TestKroneckerSum:
    def test_rejects_nonsymmetric(self):
        with pytest.raises(ValueError):
            KroneckerSum([np.array([[1.0, 2.0], [0.0, 1.0]])])

    def test_rejects_indefinite_on_first_spectral_use(self):
        ks = KroneckerSum([np.diag([1.0, -0.5])])
        with pytest.raises(ValueError):
            ks.spectra

    def test_lambda_min_is_sum_of_factor_minima(self):
        rng = np.random.default_rng(0)
        factors = [random_spd(rng, n) for n in (4, 5, 3)]
        ks = KroneckerSum(factors)
        expected = sum(np.linalg.eigvalsh(a)[0] for a in factors)
        assert ks.lambda_min == pytest.approx(expected, rel=1e-12)

    def test_apply_matches_materialized_matrix(self):
        rng = np.random.default_rng(1)
        factors = [random_spd(rng, n) for n in (2, 3, 4)]
        ks = KroneckerSum(factors)
        c = rng.standard_normal((2, 3, 4))
        np.testing.assert_allclose(vec(ks.apply(c)), kron_sum_matrix(factors) @ vec(c), atol=1e-12)


class TestFactorExponentials:
    def test_scalar_factors(self):
        # three 1x1 factors equal to 2: every exponential is exp(-t_j/3)
        es = make_es(0.5, 1e-2)
        ks = KroneckerSum([np.array([[2.0]])] * 3)
        table = factor_exponentials(ks, es)
        for i in range(3):
            for j, t in enumerate(es.exponents):
                assert table[i][j][0, 0] == pytest.approx(math.exp(-t * 2.0 / 6.0), rel=1e-14)

    def test_diagonal_factor(self):
        es = make_es(0.5, 1e-2)
        ks = KroneckerSum([np.diag([1.0, 2.0])])
        table = factor_exponentials(ks, es)
        for j, t in enumerate(es.exponents):
            np.testing.assert_allclose(
                table[0][j], np.diag([math.exp(-t), math.exp(-2.0 * t)]), atol=1e-14
            )

    def test_against_taylor_scaling_squaring(self):
        rng = np.random.default_rng(2)
        a = random_spd(rng, 5)
        ks = KroneckerSum([a])
        es = make_es(0.4, 1e-3)
        table = factor_exponentials(ks, es)
        lam_min = ks.lambda_min
        for j in (0, len(es.exponents) // 2, len(es.exponents) - 1):
            ref = expm_taylor(-es.exponents[j] * a / lam_min)
            assert np.linalg.norm(table[0][j] - ref) <= 1e-12
            sym_err = np.max(np.abs(table[0][j] - table[0][j].T))
            assert sym_err <= 1e-13


class TestSolveDense:
    def test_one_dimensional_matrix_function(self):
        rng = np.random.default_rng(3)
        a = random_spd(rng, 6)
        ks = KroneckerSum([a])
        c = rng.standard_normal(6).reshape(6)
        es = make_es(0.5, 1e-10)
        x, report = solve_dense(ks, c, es)
        ref = oracle_apply(ks, c, 0.5)
        assert np.linalg.norm(x - ref) <= report.error_bound
        assert np.linalg.norm(x - ref) <= 1e-9 * np.linalg.norm(ref)

    def test_eigenvector_right_hand_side(self):
        rng = np.random.default_rng(4)
        factors = [random_spd(rng, 4) for _ in range(3)]
        ks = KroneckerSum(factors)
        lams, qs = zip(*ks.spectra)
        c = np.multiply.outer(np.multiply.outer(qs[0][:, 1], qs[1][:, 0]), qs[2][:, 2])
        lam = lams[0][1] + lams[1][0] + lams[2][2]
        es = make_es(0.5, 1e-10)
        x, report = solve_dense(ks, c, es)
        assert np.linalg.norm(x - lam**-0.5 * c) <= report.error_bound

    def test_certified_bound_and_shape_check(self):
        rng = np.random.default_rng(5)
        ks = KroneckerSum([laplacian_1d(16)] * 3)
        grids = [Grid1D(16)] * 3
        c = sample_rhs(RhsSpec(kind="inv_linear", d=3), grids)
        es = make_es(0.4, 1e-8)
        x, report = solve_dense(ks, c, es)
        ref = oracle_apply(ks, c, 0.4)
        assert np.linalg.norm(x - ref) <= report.error_bound
        with pytest.raises(ValueError):
            solve_dense(ks, c[:8], es)

    def test_scaling_relation(self):
        rng = np.random.default_rng(6)
        factors = [random_spd(rng, 5) for _ in range(2)]
        c = rng.standard_normal((5, 5))
        es = make_es(0.3, 1e-8)
        s = 7.5
        x1, _ = solve_dense(KroneckerSum(factors), c, es)
        x2, _ = solve_dense(KroneckerSum([s * a for a in factors]), c, es)
        np.testing.assert_allclose(x2, s**-0.3 * x1, rtol=1e-11)


class TestSolveCP:
    def test_rank_is_terms_times_rank(self):
        rng = np.random.default_rng(7)
        ks = KroneckerSum([random_spd(rng, 6) for _ in range(3)])
        es = make_es(0.5, 1e-3)
        c1 = CPTensor.from_rank1([rng.standard_normal(6) for _ in range(3)])
        x, report = solve_cp(ks, c1, es)
        assert x.rank == es.n_terms
        assert report.ranks == (es.n_terms,)
        c2 = CPTensor(tuple(rng.standard_normal((6, 2)) for _ in range(3)))
        assert solve_cp(ks, c2, es)[0].rank == 2 * es.n_terms

    def test_matches_dense_solve(self):
        rng = np.random.default_rng(8)
        ks = KroneckerSum([random_spd(rng, 16) for _ in range(3)])
        c = CPTensor(tuple(rng.standard_normal((16, 2)) for _ in range(3)))
        es = make_es(0.5, 1e-3)
        x_cp, _ = solve_cp(ks, c, es)
        x_dense, _ = solve_dense(ks, c.to_dense(), es)
        assert np.linalg.norm(x_cp.to_dense() - x_dense) <= 1e-12 * np.linalg.norm(x_dense)


class TestSolveTucker:
    def test_rank_bound_from_rank_one_core(self):
        rng = np.random.default_rng(9)
        ks = KroneckerSum([random_spd(rng, 8) for _ in range(3)])
        es = build_expsum(params_for_terms(0.5, 3))
        c = hosvd(CPTensor.from_rank1([rng.standard_normal(8) for _ in range(3)]).to_dense(), tol=1e-13)
        assert c.ranks == (1, 1, 1)
        x, report = solve_tucker(ks, c, es)
        assert all(r <= 3 for r in x.ranks)

    def test_matches_dense_solve(self):
        rng = np.random.default_rng(10)
        ks = KroneckerSum([random_spd(rng, 8) for _ in range(3)])
        c_dense = CPTensor(tuple(rng.standard_normal((8, 2)) for _ in range(3))).to_dense()
        c = hosvd(c_dense, tol=1e-14)
        es = make_es(0.6, 1e-4)
        x, _ = solve_tucker(ks, c, es)
        x_dense, _ = solve_dense(ks, c_dense, es)
        assert np.linalg.norm(x.to_dense() - x_dense) <= 1e-11 * np.linalg.norm(x_dense)

    def test_post_truncation_shrinks_ranks(self):
        rng = np.random.default_rng(11)
        ks = KroneckerSum([laplacian_1d(12)] * 3)
        c = hosvd(
            sample_rhs(RhsSpec(kind="random_rank1", d=3, seed=0), [Grid1D(12)] * 3).to_dense(),
            tol=1e-13,
        )
        es = make_es(0.5, 1e-6)
        raw, _ = solve_tucker(ks, c, es)
        compressed, _ = solve_tucker(ks, c, es, truncate_tol=1e-10)
        assert all(a <= b for a, b in zip(compressed.ranks, raw.ranks))
        assert max(compressed.ranks) < es.n_terms  # far below the worst-case growth
        diff = np.linalg.norm(compressed.to_dense() - raw.to_dense())
        assert diff <= 1e-9 * np.linalg.norm(raw.to_dense())


class TestSolveTT:
    def test_unrounded_rank_growth_bound(self):
        rng = np.random.default_rng(12)
        ks = KroneckerSum([random_spd(rng, 6) for _ in range(3)])
        es = build_expsum(params_for_terms(0.5, 4))
        c = tt_svd(CPTensor(tuple(rng.standard_normal((6, 2)) for _ in range(3))).to_dense(), tol=0.0)
        x, report = solve_tt(ks, c, es, round_tol=0.0)
        assert all(r <= 4 * rc for r, rc in zip(x.ranks, c.ranks))
        assert report.error_bound >= 0.0

    def test_matches_dense_solve_without_rounding(self):
        rng = np.random.default_rng(13)
        ks = KroneckerSum([random_spd(rng, 8) for _ in range(4)])
        c_dense = rng.standard_normal((8, 8, 8, 8))
        c = tt_svd(c_dense, tol=0.0)
        es = make_es(0.5, 1e-3)
        x, _ = solve_tt(ks, c, es, round_tol=0.0)
        x_dense, _ = solve_dense(ks, c_dense, es)
        assert np.linalg.norm(x.to_dense() - x_dense) <= 1e-11 * np.linalg.norm(x_dense)

    def test_rounded_solve_stays_within_reported_bound(self):
        rng = np.random.default_rng(14)
        ks = KroneckerSum([laplacian_1d(8)] * 4)
        grids = [Grid1D(8)] * 4
        c_dense = sample_rhs(RhsSpec(kind="inv_linear", d=4), grids)
        c = tt_svd(c_dense, tol=1e-12)
        es = make_es(0.5, 1e-8)
        x, report = solve_tt(ks, c, es, round_tol=1e-10)
        ref = oracle_apply(ks, c_dense, 0.5)
        assert np.linalg.norm(x.to_dense() - ref) <= report.error_bound
        assert max(x.ranks) < es.n_terms

    def test_six_dimensional_solve_against_oracle(self):
        # the dense reference is still affordable at n = 16, d = 6
        n, d = 16, 6
        ks = KroneckerSum([laplacian_1d(n)] * d)
        grids = [Grid1D(n)] * d
        c_dense = sample_rhs(RhsSpec(kind="inv_linear", d=d), grids)
        c = tt_svd(c_dense, tol=1e-10)
        es = build_expsum(params_for_terms(0.5, 150))
        x, report = solve_tt(ks, c, es, round_tol=1e-10)
        assert all(r < 40 for r in x.ranks)
        ref = oracle_apply(ks, c_dense, 0.5)
        err = np.linalg.norm(x.to_dense() - ref)
        assert err <= report.error_bound


class TestFormatConsistency:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_all_formats_agree(self, seed):
        rng = np.random.default_rng(seed)
        ks = KroneckerSum([random_spd(rng, 8) for _ in range(3)])
        cp = CPTensor(tuple(rng.standard_normal((8, 2)) for _ in range(3)))
        dense = cp.to_dense()
        es = make_es(0.5, 1e-4)
        x_dense, _ = solve_dense(ks, dense, es)
        paths = [
            solve_cp(ks, cp, es)[0].to_dense(),
            solve_tucker(ks, hosvd(dense, tol=1e-14), es)[0].to_dense(),
            solve_tt(ks, tt_svd(dense, tol=0.0), es, round_tol=0.0)[0].to_dense(),
        ]
        for x in paths:
            assert np.linalg.norm(x - x_dense) <= 1e-11 * np.linalg.norm(x_dense)


class TestOracle:
    def test_alpha_one_solves_sylvester(self):
        rng = np.random.default_rng(15)
        a1, a2 = random_spd(rng, 6), random_spd(rng, 6)
        ks = KroneckerSum([a1, a2])
        c = rng.standard_normal((6, 6))
        x = oracle_apply(ks, c, 1.0)
        residual = a1 @ x + x @ a2.T - c
        assert np.linalg.norm(residual) <= 1e-10 * np.linalg.norm(c)

    def test_alpha_zero_is_identity(self):
        rng = np.random.default_rng(16)
        ks = KroneckerSum([random_spd(rng, 5), random_spd(rng, 4)])
        c = rng.standard_normal((5, 4))
        np.testing.assert_allclose(oracle_apply(ks, c, 0.0), c, atol=1e-12)

    def test_against_brute_force_matrix_power(self):
        rng = np.random.default_rng(17)
        factors = [random_spd(rng, 6), random_spd(rng, 6)]
        ks = KroneckerSum(factors)
        c = rng.standard_normal((6, 6))
        alpha = 0.37
        w, v = np.linalg.eigh(kron_sum_matrix(factors))
        ref = v @ ((w**-alpha) * (v.T @ vec(c)))
        assert np.linalg.norm(vec(oracle_apply(ks, c, alpha)) - ref) <= 1e-11 * np.linalg.norm(ref)

    def test_memory_cap(self):
        ks = KroneckerSum([np.eye(8)] * 3)
        with pytest.raises(MemoryCapError):
            oracle_apply(ks, np.zeros((8, 8, 8)), 0.5, memory_cap=100)


class TestExpKronApply:
    def test_zero_time_is_identity(self):
        rng = np.random.default_rng(18)
        ks = KroneckerSum([random_spd(rng, 4), random_spd(rng, 3)])
        c = rng.standard_normal((4, 3))
        np.testing.assert_allclose(exp_kron_apply(ks, c, 0.0), c, atol=1e-13)

    def test_against_brute_force_exponential(self):
        rng = np.random.default_rng(19)
        factors = [random_spd(rng, 4), random_spd(rng, 4)]
        ks = KroneckerSum(factors)
        c = rng.standard_normal((4, 4))
        t = 0.7
        ref = expm_taylor(t * kron_sum_matrix(factors)) @ vec(c)
        assert np.linalg.norm(vec(exp_kron_apply(ks, c, t)) - ref) <= 1e-11 * np.linalg.norm(ref)

    def test_semigroup_property(self):
        rng = np.random.default_rng(20)
        ks = KroneckerSum([random_spd(rng, 5), random_spd(rng, 4)])
        c = rng.standard_normal((5, 4))
        once = exp_kron_apply(ks, c, 0.9)
        twice = exp_kron_apply(ks, exp_kron_apply(ks, c, 0.4), 0.5)
        np.testing.assert_allclose(twice, once, rtol=1e-11, atol=1e-13)


class TestSolveReport:
    def test_dat_row_layout(self):
        report = SolveReport(n_terms=42, error_bound=1.5e-7, wall_time=0.25, ranks=(3, 9, 5), lambda_min=2.0)
        fields = report.dat_row().split()
        assert fields[0] == "42"
        assert float(fields[1]) == 1.5e-7
        assert float(fields[2]) == 0.25
        assert fields[3] == "9"

    def test_rejects_negative_bound(self):
        with pytest.raises(ValueError):
            SolveReport(n_terms=1, error_bound=-1.0, wall_time=0.0)
