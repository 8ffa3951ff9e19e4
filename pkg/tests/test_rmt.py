import numpy as np
import pytest
import scipy.linalg
import scipy.special

from projens.rmt import (
    bessel_j1,
    bessel_zero_times,
    gue_moment_envelope,
    normalized_trace_moments,
    sample_gue,
)


class TestSampleGue:
    def test_hermitian_by_construction(self):
        g = sample_gue(32, np.random.default_rng(0))
        assert np.max(np.abs(g.operator - g.operator.conj().T)) == 0.0

    def test_entry_variances(self):
        g = sample_gue(512, np.random.default_rng(1))
        n = g.dim
        diag = np.diag(g.operator).real
        off = g.operator[~np.eye(n, dtype=bool)]
        assert np.var(diag) * n == pytest.approx(1.0, rel=0.3)
        assert np.mean(np.abs(off) ** 2) * n == pytest.approx(1.0, rel=0.05)

    def test_catalan_second_moment(self):
        # mean of (1/N) tr G^2 should be Cat_1 = 1 under this normalization
        rng = np.random.default_rng(2)
        vals = np.array([np.mean(sample_gue(256, rng).spectrum ** 2) for _ in range(48)])
        stderr = vals.std(ddof=1) / np.sqrt(len(vals))
        assert abs(vals.mean() - 1.0) < 3 * stderr + 2e-3

    def test_spectral_edge(self):
        rng = np.random.default_rng(3)
        edges = [np.max(np.abs(sample_gue(1024, rng).spectrum)) for _ in range(8)]
        assert max(edges) <= 2.2

    def test_spectrum_matches_cached_decomposition(self):
        g = sample_gue(24, np.random.default_rng(4))
        recon = (g.basis * g.spectrum) @ g.basis.conj().T
        assert np.max(np.abs(recon - g.operator)) < 1e-9


class TestTraceMoments:
    def test_time_zero_all_ones(self):
        g = sample_gue(64, np.random.default_rng(5))
        tm = normalized_trace_moments(g, 0.0, 5)
        assert np.allclose(tm.alpha, 1.0)
        assert tm.one_norm == pytest.approx(5.0, abs=1e-12)

    def test_magnitudes_bounded_by_one(self):
        g = sample_gue(64, np.random.default_rng(6))
        for t in (0.5, 1.7, 4.0):
            tm = normalized_trace_moments(g, t, 8)
            assert np.all(np.abs(tm.alpha) <= 1.0 + 1e-12)

    def test_matches_matrix_power_oracle(self):
        # independent route: explicit matrix exponential and powers
        g = sample_gue(12, np.random.default_rng(7))
        t = 0.9
        u = scipy.linalg.expm(-1j * g.operator * t)
        tm = normalized_trace_moments(g, t, 4)
        for p in range(1, 5):
            direct = np.trace(np.linalg.matrix_power(u, p)) / g.dim
            assert abs(tm.alpha[p - 1] - direct) < 1e-10

    def test_concentration_smoke(self):
        # empirical std of alpha_1 within the sub-Gaussian envelope 2t/sqrt(N)
        rng = np.random.default_rng(8)
        samples = [sample_gue(256, rng) for _ in range(48)]
        for t in (1.0, 2.0):
            a1 = np.array([normalized_trace_moments(g, t, 1).alpha[0] for g in samples])
            spread = np.sqrt(np.var(a1.real, ddof=1) + np.var(a1.imag, ddof=1))
            assert spread <= 2 * t / np.sqrt(256)


class TestBessel:
    def test_odd_function_and_origin(self):
        assert bessel_j1(0.0) == 0.0
        for x in (0.3, 2.0, 11.0, 15.0, 30.0):
            assert bessel_j1(-x) == pytest.approx(-bessel_j1(x), abs=1e-14)

    def test_against_scipy(self):
        xs = np.concatenate([np.linspace(0.01, 40, 2000), [11.999, 12.0, 12.001]])
        for x in xs:
            assert abs(bessel_j1(float(x)) - scipy.special.j1(x)) < 1e-10

    def test_magnitude_bound(self):
        for x in np.linspace(1.0, 50.0, 500):
            assert abs(bessel_j1(float(x))) < np.sqrt(1.0 / x)

    def test_first_root(self):
        assert bessel_j1(3.8317059702) == pytest.approx(0.0, abs=1e-8)


class TestBesselZeroTimes:
    def test_first_three(self):
        t = bessel_zero_times(3)
        assert np.allclose(t, [1.91585, 3.50780, 5.08674], atol=5e-5)

    def test_roots_are_roots_and_ascending(self):
        t = bessel_zero_times(6)
        assert np.all(np.diff(t) > 0)
        assert t[0] > 0.5  # the t -> 0 limit of J1(2t)/t is 1, never returned
        for ti in t:
            assert abs(bessel_j1(2 * ti)) <= 1e-9

    def test_no_root_between_consecutive(self):
        t = bessel_zero_times(4)
        for lo, hi in zip(t[:-1], t[1:]):
            mid = 0.5 * (lo + hi)
            assert abs(bessel_j1(2 * mid) / mid) > 1e-3


class TestEnvelope:
    def test_vanishes_at_root_in_large_n_limit(self):
        t = float(bessel_zero_times(1)[0])
        assert abs(bessel_j1(2 * t) / t) < 1e-9

    def test_value_at_t2(self):
        val = gue_moment_envelope(2.0, 1024, k0=1.0)
        expected = abs(scipy.special.j1(4.0) / 2.0) + 2.0 / 1024
        assert val == pytest.approx(expected, abs=1e-10)
        assert abs(scipy.special.j1(4.0)) == pytest.approx(0.06604, abs=1e-4)

    def test_monotone_in_dimension(self):
        for t in (0.7, 2.0, 5.5):
            assert gue_moment_envelope(t, 2048) < gue_moment_envelope(t, 1024)

    def test_rejects_nonpositive_time(self):
        with pytest.raises(ValueError):
            gue_moment_envelope(0.0, 64)
