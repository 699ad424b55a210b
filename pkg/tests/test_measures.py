import math

import numpy as np
import pytest

from ssfourier import (
    BudgetError,
    DiscreteMeasure,
    DomainError,
    IFSDescriptor,
    ProbabilityVector,
    RegimeError,
    convolve,
    finite_approximation,
    ifs_from_json_str,
    ifs_to_json_str,
    measure_from_csv,
    measure_to_csv,
    merge_atoms,
    sample,
    scale_rotate,
    support_radius,
)


class TestProbabilityVector:
    def test_valid(self):
        pv = ProbabilityVector((0.25, 0.75))
        assert len(pv) == 2 and pv[1] == 0.75

    @pytest.mark.parametrize(
        "weights",
        [(1.0,), (0.5, 0.5001), (0.0, 1.0), (-0.1, 1.1)],
    )
    def test_invalid(self, weights):
        with pytest.raises(DomainError):
            ProbabilityVector(weights)


class TestIFSDescriptor:
    def test_validation(self):
        with pytest.raises(DomainError):
            IFSDescriptor(1.2, (-1, 1), (0.5, 0.5))
        with pytest.raises(DomainError):
            IFSDescriptor(0.5, (-1, 1, 0), (0.5, 0.5))

    def test_flags(self):
        ifs = IFSDescriptor(0.5, (-1.0, 1.0), (0.5, 0.5))
        assert ifs.lambda_is_real and ifs.digits_collinear and not ifs.is_atomic
        ifs = IFSDescriptor(0.5, (0.0, 1.0, 1j), (1 / 3,) * 3)
        assert not ifs.digits_collinear
        ifs = IFSDescriptor(0.5, (1 + 1j, 1 + 1j), (0.5, 0.5))
        assert ifs.is_atomic and ifs.digits_collinear

    def test_collinear_tilted_line(self):
        # digits on the line t * (1 + 2i) shifted by 3
        digits = tuple(3 + t * (1 + 2j) for t in (0.0, 0.7, -1.3))
        assert IFSDescriptor(0.5, digits, (1 / 3,) * 3).digits_collinear

    def test_regime_classification(self):
        assert IFSDescriptor((1 + 1j) / 2, (-1, 1), (0.5, 0.5)).bound_regime() == "complex"
        assert (
            IFSDescriptor(0.5, (0, 1, 1j), (1 / 3,) * 3).bound_regime()
            == "real_noncollinear"
        )
        with pytest.raises(RegimeError):
            IFSDescriptor(0.5, (-1, 1), (0.5, 0.5)).bound_regime()
        with pytest.raises(RegimeError):
            IFSDescriptor(0.5, (1, 1), (0.5, 0.5)).bound_regime()

    def test_json_roundtrip(self):
        ifs = IFSDescriptor((1 + 1j) / 2, (-1, 0.5j), (0.3, 0.7))
        back = ifs_from_json_str(ifs_to_json_str(ifs))
        assert back == ifs


class TestSupportRadius:
    def test_bernoulli(self, bernoulli_half):
        assert support_radius(bernoulli_half) == 2.0

    def test_complex(self):
        ifs = IFSDescriptor((1 + 1j) / 2, (0.0, 1.0), (0.5, 0.5))
        assert math.isclose(support_radius(ifs), 1.0 / (1.0 - 2**-0.5), rel_tol=1e-12)

    def test_atomic_zero(self):
        ifs = IFSDescriptor(0.5, (0.0, 0.0), (0.5, 0.5))
        assert support_radius(ifs) == 0.0


class TestFiniteApproximation:
    def test_depth_one_is_digit_law(self, complex_bernoulli):
        mu = finite_approximation(complex_bernoulli, 1)
        assert np.array_equal(np.sort_complex(mu.positions), [-1.0, 1.0])
        assert np.allclose(mu.weights, 0.5)

    def test_depth_two_real(self, bernoulli_half):
        mu = finite_approximation(bernoulli_half, 2)
        assert sorted(mu.positions.real.tolist()) == [-1.5, -0.5, 0.5, 1.5]
        assert np.allclose(mu.weights, 0.25)

    def test_depth_two_complex(self):
        ifs = IFSDescriptor((1 + 1j) / 2, (0.0, 1.0), (0.5, 0.5))
        mu = finite_approximation(ifs, 2)
        expected = {0.0, 1.0, (1 + 1j) / 2, (3 + 1j) / 2}
        got = set(mu.positions.tolist())
        assert all(min(abs(g - e) for e in expected) < 1e-12 for g in got)
        assert np.allclose(mu.weights, 0.25)

    def test_depth_zero(self, bernoulli_half):
        mu = finite_approximation(bernoulli_half, 0)
        assert mu.n_atoms == 1 and mu.positions[0] == 0.0

    def test_budget(self, complex_bernoulli):
        with pytest.raises(BudgetError):
            finite_approximation(complex_bernoulli, 12, atom_budget=1000)

    def test_telescoping(self, complex_bernoulli):
        # fa(N) * (lam^N-scaled fa(M)) = fa(N + M)
        lam = complex_bernoulli.lam
        a = finite_approximation(complex_bernoulli, 2)
        b = scale_rotate(finite_approximation(complex_bernoulli, 3), lam**2)
        combined = merge_atoms(convolve(a, b, merge_tol=1e-9), 1e-9)
        direct = merge_atoms(finite_approximation(complex_bernoulli, 5), 1e-9)
        assert combined.n_atoms == direct.n_atoms
        assert np.allclose(combined.positions, direct.positions, atol=1e-8)
        assert np.allclose(combined.weights, direct.weights, atol=1e-12)


class TestSample:
    def test_atomic_all_zero(self):
        ifs = IFSDescriptor(0.5, (0.0, 0.0), (0.5, 0.5))
        mu = sample(ifs, 50, 1e-9, seed=1)
        assert np.all(mu.positions == 0.0)

    def test_support_bound(self, bernoulli_half):
        mu = sample(bernoulli_half, 2000, 1e-9, seed=2)
        assert np.max(np.abs(mu.positions)) <= 2.0 + 1e-9

    def test_mean(self):
        # E sum lam^n X_n = 1 for lambda=1/2, digits {0,1}, fair weights
        ifs = IFSDescriptor(0.5, (0.0, 1.0), (0.5, 0.5))
        mu = sample(ifs, 10**6, 1e-8, seed=3)
        assert abs(np.mean(mu.positions.real) - 1.0) < 0.01

    def test_reproducible(self, complex_bernoulli):
        a = sample(complex_bernoulli, 200_000, 1e-8, seed=9)
        b = sample(complex_bernoulli, 200_000, 1e-8, seed=9)
        assert np.array_equal(a.positions, b.positions)
        c = sample(complex_bernoulli, 200_000, 1e-8, seed=10)
        assert not np.array_equal(a.positions, c.positions)


class TestConvolve:
    def test_identity(self, complex_bernoulli):
        mu = finite_approximation(complex_bernoulli, 3)
        conv = convolve(mu, DiscreteMeasure.dirac(0.0))
        ref = merge_atoms(mu, 0.0)
        assert np.array_equal(conv.positions, ref.positions)
        assert np.allclose(conv.weights, ref.weights)

    def test_diracs(self):
        conv = convolve(DiscreteMeasure.dirac(1 + 2j), DiscreteMeasure.dirac(-0.5j))
        assert conv.n_atoms == 1 and conv.positions[0] == 1 + 1.5j

    def test_matches_finite_approximation(self, complex_bernoulli):
        lam = complex_bernoulli.lam
        level0 = DiscreteMeasure(np.array([-1.0 + 0j, 1.0 + 0j]), np.array([0.5, 0.5]))
        level1 = scale_rotate(level0, lam)
        conv = convolve(level0, level1, merge_tol=1e-12)
        direct = finite_approximation(complex_bernoulli, 2)
        assert np.allclose(np.sort_complex(conv.positions), np.sort_complex(direct.positions))

    def test_commutative_associative(self):
        rng = np.random.default_rng(5)
        def rand_measure(n):
            w = rng.random(n)
            return DiscreteMeasure(rng.normal(size=n) + 1j * rng.normal(size=n), w / w.sum())
        a, b, c = rand_measure(4), rand_measure(5), rand_measure(3)
        ab = convolve(a, b, 1e-12)
        ba = convolve(b, a, 1e-12)
        assert np.allclose(ab.positions, ba.positions) and np.allclose(ab.weights, ba.weights)
        left = convolve(convolve(a, b, 1e-12), c, 1e-12)
        right = convolve(a, convolve(b, c, 1e-12), 1e-12)
        assert np.allclose(np.sort_complex(left.positions), np.sort_complex(right.positions), atol=1e-9)

    def test_budget(self):
        rng = np.random.default_rng(0)
        w = rng.random(200)
        mu = DiscreteMeasure(rng.normal(size=200) + 0j, w / w.sum())
        with pytest.raises(BudgetError):
            convolve(mu, mu, atom_budget=100)


class TestScaleRotate:
    def test_identity(self, complex_bernoulli):
        mu = finite_approximation(complex_bernoulli, 3)
        out = scale_rotate(mu, 1.0)
        assert np.array_equal(out.positions, mu.positions)
        assert np.array_equal(out.weights, mu.weights)

    def test_zero_collapses_after_merge(self, complex_bernoulli):
        mu = finite_approximation(complex_bernoulli, 3)
        out = merge_atoms(scale_rotate(mu, 0.0), 0.0)
        assert out.n_atoms == 1 and out.positions[0] == 0.0 and out.weights[0] == 1.0

    def test_group_action(self, complex_bernoulli):
        mu = finite_approximation(complex_bernoulli, 3)
        twice_i = scale_rotate(scale_rotate(mu, 1j), 1j)
        minus = scale_rotate(mu, -1.0)
        assert np.allclose(twice_i.positions, minus.positions)


class TestMergeAtoms:
    def test_no_close_pairs_after_merge(self):
        rng = np.random.default_rng(11)
        pts = rng.normal(size=60) + 1j * rng.normal(size=60)
        pts = np.concatenate([pts, pts + 1e-8])  # near-duplicates
        w = np.full(120, 1 / 120)
        merged = merge_atoms(DiscreteMeasure(pts, w), 1e-6)
        pos = merged.positions
        for i in range(merged.n_atoms):
            d = np.abs(pos - pos[i])
            d[i] = np.inf
            assert d.min() > 1e-6
        assert abs(merged.weights.sum() - 1.0) < 1e-12

    def test_mass_and_barycenter_preserved(self):
        mu = DiscreteMeasure(np.array([0j, 1e-9 + 0j, 1.0 + 0j]), np.array([0.25, 0.25, 0.5]))
        merged = merge_atoms(mu, 1e-6)
        assert merged.n_atoms == 2
        bary = np.sum(merged.positions * merged.weights)
        assert abs(bary - np.sum(mu.positions * mu.weights)) < 1e-15


class TestSerialization:
    def test_csv_roundtrip(self, complex_bernoulli):
        mu = finite_approximation(complex_bernoulli, 4)
        back = measure_from_csv(measure_to_csv(mu))
        assert np.array_equal(back.positions, mu.positions)
        assert np.array_equal(back.weights, mu.weights)

    def test_csv_header_required(self):
        with pytest.raises(DomainError):
            measure_from_csv("a,b,c\n1,2,3\n")


class TestDiscreteMeasureValidation:
    def test_weight_sum(self):
        with pytest.raises(DomainError):
            DiscreteMeasure(np.array([0j, 1j]), np.array([0.5, 0.7]))

    def test_positive_weights(self):
        with pytest.raises(DomainError):
            DiscreteMeasure(np.array([0j, 1j]), np.array([1.2, -0.2]))
