"""Arc-cosine maps, kernel evaluation, Gram assembly, and kernel algebra."""

import math

import numpy as np
import pytest

from ntkspectra.kernels import (KernelMatrix, NtkDescriptor, gram, gram_from_kernel,
                                kappa0, kappa1, lift, ntk_eval, ntk_profile,
                                profile_kernel, pullback_kernel, scaled_kernel, sum_kernel)


def rising_half(r):
    out = 1.0
    for j in range(r):
        out *= 0.5 + j
    return out


class TestKappa:
    def test_endpoint_values(self):
        assert kappa0(1.0) == 1.0 and kappa1(1.0) == 1.0
        assert kappa0(-1.0) == pytest.approx(0.0, abs=1e-15)
        assert kappa1(-1.0) == pytest.approx(0.0, abs=1e-15)
        assert kappa0(0.0) == pytest.approx(0.5, rel=1e-15)
        assert kappa1(0.0) == pytest.approx(1.0 / math.pi, rel=1e-15)

    def test_range_is_unit_interval(self):
        u = np.linspace(-1, 1, 401)
        for f in (kappa0, kappa1):
            vals = f(u)
            assert vals.min() >= -1e-15 and vals.max() <= 1 + 1e-15

    def test_clamp_tolerance(self):
        assert kappa0(1.0 + 1e-10) == 1.0
        with pytest.raises(ValueError, match="argument out of range"):
            kappa0(1.1)
        with pytest.raises(ValueError, match="argument out of range"):
            kappa1(np.array([0.0, -1.001]))

    def test_power_series_match(self):
        # kappa0 = 1/2 + (1/pi) sum (1/2)_r / ((2r+1) r!) u^{2r+1}
        # kappa1 = 1/pi + u/2 + (1/pi) sum_{r>=1} (1/2)_{r-1} / (2(2r-1) r!) u^{2r}
        u = 0.3
        s0 = 0.5 + sum(rising_half(r) / ((2 * r + 1) * math.factorial(r)) * u ** (2 * r + 1)
                       for r in range(80)) / math.pi
        s1 = 1 / math.pi + u / 2 + sum(
            rising_half(r - 1) / (2 * (2 * r - 1) * math.factorial(r)) * u ** (2 * r)
            for r in range(1, 80)) / math.pi
        assert kappa0(u) == pytest.approx(s0, abs=1e-10)
        assert kappa1(u) == pytest.approx(s1, abs=1e-10)

    def test_kappa1_even_part(self):
        # kappa1 minus its affine part is even in u
        for u in (0.2, 0.55, 0.9):
            left = kappa1(u) - (1 / math.pi + u / 2)
            right = kappa1(-u) - (1 / math.pi - u / 2)
            assert left == pytest.approx(right, abs=1e-14)


class TestProfile:
    def test_value_at_one_is_depth_plus_one(self):
        for L in (1, 2, 3, 5):
            desc = NtkDescriptor(L=L, variant="homogeneous")
            assert ntk_profile(desc, 1.0) == pytest.approx(L + 1, rel=1e-14)

    def test_single_layer_at_zero(self):
        desc = NtkDescriptor(L=1, variant="homogeneous")
        # r=0 term: u * kappa0(u) = 0; r=1 term: kappa1(0) = 1/pi
        assert ntk_profile(desc, 0.0) == pytest.approx(1.0 / math.pi, rel=1e-14)

    def test_monotone_increasing_on_nonnegative_axis(self):
        # nonnegative power-series coefficients make the profile increasing on
        # [0, 1]; near u = -1 it genuinely dips (kappa0 pulls it below zero),
        # so monotonicity holds on the half-interval only
        u = np.linspace(0, 1, 201)
        for L in (1, 2, 3):
            desc = NtkDescriptor(L=L, variant="homogeneous")
            vals = ntk_profile(desc, u)
            assert (np.diff(vals) > 0).all()

    def test_dip_below_zero_near_minus_one(self):
        desc = NtkDescriptor(L=1, variant="homogeneous")
        assert ntk_profile(desc, -1.0) == pytest.approx(0.0, abs=1e-14)
        assert ntk_profile(desc, -0.99) < 0

    def test_requires_homogeneous(self):
        with pytest.raises(ValueError, match="homogeneous"):
            ntk_profile(NtkDescriptor(L=2, variant="full"), 0.5)

    def test_homogeneous_never_adds_bias(self):
        desc = NtkDescriptor(L=2, variant="homogeneous", include_bias_constant=True)
        assert desc.include_bias_constant is False


class TestEval:
    def test_origin_pair(self):
        desc = NtkDescriptor(L=2)
        assert ntk_eval(desc, np.zeros(3), np.zeros(3)) == pytest.approx(4.0, rel=1e-14)

    def test_symmetry(self):
        desc = NtkDescriptor(L=3)
        rng = np.random.default_rng(0)
        for _ in range(10):
            x, xp = rng.uniform(-2, 2, 4), rng.uniform(-2, 2, 4)
            assert ntk_eval(desc, x, xp) == pytest.approx(ntk_eval(desc, xp, x), rel=1e-14)

    def test_scaling_decomposition(self):
        # kernel minus bias equals lifted-norm product times the profile
        desc = NtkDescriptor(L=2)
        hom = NtkDescriptor(L=2, variant="homogeneous")
        rng = np.random.default_rng(1)
        for _ in range(10):
            x, xp = rng.uniform(-2, 2, 3), rng.uniform(-2, 2, 3)
            a, b = lift(x), lift(xp)
            u = float(a.y @ b.y)
            lhs = ntk_eval(desc, x, xp) - 1.0
            rhs = a.norm_tilde * b.norm_tilde * ntk_profile(hom, u)
            assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_profile_eval_consistency(self):
        # (eval - bias) / norms equals the profile at the lifted cosine, 1e-12
        desc = NtkDescriptor(L=3)
        hom = NtkDescriptor(L=3, variant="homogeneous")
        rng = np.random.default_rng(2)
        for _ in range(10):
            x, xp = rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2)
            a, b = lift(x), lift(xp)
            u = float(a.y @ b.y)
            val = (ntk_eval(desc, x, xp) - 1.0) / (a.norm_tilde * b.norm_tilde)
            assert abs(val - ntk_profile(hom, u)) < 1e-12


class TestLift:
    def test_lift_geometry(self):
        x = np.array([3.0, 4.0])
        lp = lift(x)
        assert lp.norm_tilde == pytest.approx(math.sqrt(26.0), rel=1e-15)
        assert np.linalg.norm(lp.y) == pytest.approx(1.0, abs=1e-12)
        assert lp.y[-1] > 0
        assert np.array_equal(lp.x_tilde, np.array([3.0, 4.0, 1.0]))


class TestGram:
    def test_single_point(self):
        desc = NtkDescriptor(L=2)
        K = gram(desc, np.array([[0.5, -0.5]]))
        assert K.n == 1 and K.entries[0, 0] > 0

    def test_random_cloud_is_pd(self):
        desc = NtkDescriptor(L=2)
        X = np.random.default_rng(3).uniform(-1, 1, (50, 3))
        assert gram(desc, X).lambda_min > 0

    def test_duplicate_point_is_rank_deficient(self):
        desc = NtkDescriptor(L=2)
        X = np.random.default_rng(4).uniform(-1, 1, (20, 3))
        X[7] = X[3]
        K = gram(desc, X)
        assert abs(K.lambda_min) <= 1e-8 * np.trace(K.entries)

    def test_rejects_nonfinite(self):
        desc = NtkDescriptor(L=2)
        X = np.array([[0.0, np.inf]])
        with pytest.raises(ValueError, match="finite"):
            gram(desc, X)

    def test_homogeneous_requires_unit_norms(self):
        desc = NtkDescriptor(L=2, variant="homogeneous")
        with pytest.raises(ValueError, match="unit-norm"):
            gram(desc, np.array([[1.0, 1.0]]))

    def test_symmetry_validation(self):
        with pytest.raises(ValueError, match="not symmetric"):
            KernelMatrix(entries=np.array([[1.0, 0.5], [0.2, 1.0]]))

    def test_csv_round_trip(self, tmp_path):
        desc = NtkDescriptor(L=2)
        X = np.random.default_rng(5).uniform(-1, 1, (6, 2))
        K = gram(desc, X)
        path = tmp_path / "gram.csv"
        K.save_csv(path, header={"d": 2, "L": 2, "seed": 5})
        back, meta = KernelMatrix.load_csv(path)
        assert meta["d"] == "2" and meta["n"] == "6"
        assert np.array_equal(back.entries, K.entries)


class TestKernelAlgebra:
    def test_unit_scaling_is_identity(self):
        desc = NtkDescriptor(L=2)
        base = lambda x, xp: ntk_eval(desc, x, xp)
        scaled = scaled_kernel(base, lambda x: 1.0)
        X = np.random.default_rng(6).uniform(-1, 1, (8, 2))
        assert np.array_equal(gram_from_kernel(base, X).entries,
                              gram_from_kernel(scaled, X).entries)

    def test_pullback_with_norm_scaling_recovers_kernel(self):
        # |x~| scaling of the pulled-back profile equals the kernel minus bias
        L = 2
        desc = NtkDescriptor(L=L)
        hom = NtkDescriptor(L=L, variant="homogeneous")
        pulled = pullback_kernel(profile_kernel(hom), lambda x: lift(x).y)
        rescaled = scaled_kernel(pulled, lambda x: lift(x).norm_tilde)
        X = np.random.default_rng(7).uniform(-2, 2, (10, 3))
        K_direct = gram(desc, X).entries - 1.0
        K_algebra = gram_from_kernel(rescaled, X).entries
        # diagonal cosines hit u = 1 where the profile has a square-root cusp,
        # so roundoff in u amplifies to ~sqrt(eps); off-diagonal agrees tighter
        assert np.abs(K_direct - K_algebra).max() < 1e-6 * np.abs(K_direct).max()
        off = ~np.eye(10, dtype=bool)
        assert np.abs((K_direct - K_algebra)[off]).max() < 1e-10

    def test_scaled_eigenvalue_sandwich(self):
        # c <= rho^2 <= C pins every Gram eigenvalue within [c lam_i, C lam_i]
        desc = NtkDescriptor(L=2)
        rng = np.random.default_rng(8)
        X = rng.uniform(-1, 1, (30, 3))
        rho_vals = rng.uniform(0.5, 1.5, 30)
        base = gram(desc, X).entries
        scaled = np.outer(rho_vals, rho_vals) * base
        lam = np.linalg.eigvalsh(base)[::-1]
        lam_s = np.linalg.eigvalsh(0.5 * (scaled + scaled.T))[::-1]
        c, C = rho_vals.min() ** 2, rho_vals.max() ** 2
        assert (lam_s >= c * lam - 1e-10).all()
        assert (lam_s <= C * lam + 1e-10).all()

    def test_weyl_eigenvalue_sum_bound(self):
        rng = np.random.default_rng(9)
        for _ in range(5):
            X = rng.uniform(-1, 1, (12, 2))
            A = gram(NtkDescriptor(L=1), X).entries
            B = gram(NtkDescriptor(L=3), X).entries
            la = np.linalg.eigvalsh(A)[::-1]
            lb = np.linalg.eigvalsh(B)[::-1]
            ls = np.linalg.eigvalsh(A + B)[::-1]
            n = len(la)
            for i in range(1, n + 1):
                for j in range(1, n + 2 - i):
                    assert ls[i + j - 2] <= la[i - 1] + lb[j - 1] + 1e-9

    def test_sum_kernel(self):
        desc = NtkDescriptor(L=2)
        base = lambda x, xp: ntk_eval(desc, x, xp)
        two = sum_kernel(base, base)
        assert two(np.zeros(2), np.zeros(2)) == pytest.approx(8.0, rel=1e-14)


class TestDescriptor:
    def test_depth_validation(self):
        with pytest.raises(ValueError, match="hidden layer"):
            NtkDescriptor(L=0)

    def test_variant_validation(self):
        with pytest.raises(ValueError, match="variant"):
            NtkDescriptor(L=2, variant="conv")
