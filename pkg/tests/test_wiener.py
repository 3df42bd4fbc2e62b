import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from funcint.quantum import free_kernel
from funcint.rng import RngStream
from funcint.wiener import (
    BrownianPath,
    CylinderSet,
    bridge_weight,
    cylinder_probability,
    feynman_kac,
    feynman_kac_kernel,
    holder_statistic,
    sample_bridge,
    sample_brownian,
    sample_brownian_batch,
)


class TestBrownianSampling:
    def test_mean_of_endpoint(self):
        n = 100_000
        paths = sample_brownian_batch(1.0, 16, n, RngStream(1, 0))
        mean = float(np.mean(paths[:, -1]))
        assert abs(mean) < 4.0 / math.sqrt(n)

    def test_increment_variance(self):
        n = 100_000
        paths = sample_brownian_batch(1.0, 10, n, RngStream(2, 0))
        inc = paths[:, 7] - paths[:, 3]  # t - s = 0.4
        var = float(np.var(inc))
        sigma = math.sqrt(2.0 / n) * 0.4  # Var of chi-square estimate
        assert abs(var - 0.4) < 4 * sigma

    def test_covariance_min(self):
        n = 100_000
        paths = sample_brownian_batch(1.0, 10, n, RngStream(3, 0))
        prod = paths[:, 3] * paths[:, 8]
        emp = float(np.mean(prod))
        stderr = float(np.std(prod) / math.sqrt(n))
        assert abs(emp - 0.3) < 4 * stderr

    def test_increment_independence(self):
        n = 50_000
        paths = sample_brownian_batch(1.0, 8, n, RngStream(4, 0))
        a = paths[:, 2] - paths[:, 0]
        b = paths[:, 6] - paths[:, 4]
        corr = float(np.mean(a * b) / (np.std(a) * np.std(b)))
        assert abs(corr) < 4.0 / math.sqrt(n)

    def test_determinism(self):
        p1 = sample_brownian(1.0, 64, RngStream(9, 5))
        p2 = sample_brownian(1.0, 64, RngStream(9, 5))
        assert np.array_equal(p1.values, p2.values)
        p3 = sample_brownian(1.0, 64, RngStream(9, 6))
        assert not np.array_equal(p1.values, p3.values)

    def test_starts_at_zero(self):
        path = sample_brownian(2.0, 32, RngStream(5, 0))
        assert path.values[0] == 0.0
        with pytest.raises(ValueError):
            BrownianPath(np.array([0.0, 1.0]), np.array([0.5, 1.0]))


def full_line():
    return -np.inf, np.inf


class TestCylinderProbability:
    def test_half_line(self):
        c = CylinderSet([1.0], [-np.inf], [0.0])
        assert cylinder_probability(c) == pytest.approx(0.5, abs=1e-10)

    def test_whole_space(self):
        c = CylinderSet([1.0], [-np.inf], [np.inf])
        assert cylinder_probability(c) == pytest.approx(1.0, abs=1e-10)

    def test_two_time_box_against_dblquad(self):
        t1, t2 = 0.4, 0.9
        lo1, hi1, lo2, hi2 = -0.7, 0.5, -0.2, 1.3

        def density(x2, x1):
            return (math.exp(-x1 * x1 / (2 * t1)) / math.sqrt(2 * math.pi * t1)
                    * math.exp(-(x2 - x1) ** 2 / (2 * (t2 - t1)))
                    / math.sqrt(2 * math.pi * (t2 - t1)))

        oracle, err = integrate.dblquad(density, lo1, hi1, lo2, hi2, epsabs=1e-12)
        mine = cylinder_probability(CylinderSet([t1, t2], [lo1, lo2], [hi1, hi2]))
        assert abs(mine - oracle) < 1e-8

    def test_insertion_consistency_fixed(self):
        c2 = cylinder_probability(CylinderSet([0.4, 0.9], [-0.7, -0.2], [0.5, 1.3]))
        c3 = cylinder_probability(CylinderSet([0.4, 0.65, 0.9],
                                              [-0.7, -np.inf, -0.2],
                                              [0.5, np.inf, 1.3]))
        assert abs(c2 - c3) < 1e-8

    @settings(max_examples=20, deadline=None)
    @given(st.integers(1, 3), st.randoms(use_true_random=False))
    def test_insertion_consistency_random(self, k, rnd):
        times = sorted(rnd.uniform(0.08, 1.0) for _ in range(k))
        while len(set(times)) < k or min(np.diff([0.0] + times)) < 0.05:
            times = sorted(rnd.uniform(0.08, 1.0) for _ in range(k))
        lows, highs = [], []
        for _ in range(k):
            a = rnd.uniform(-1.5, 0.5)
            lows.append(a if rnd.random() < 0.8 else -np.inf)
            highs.append(a + rnd.uniform(0.3, 2.0) if rnd.random() < 0.8 else np.inf)
        base = cylinder_probability(CylinderSet(times, lows, highs))
        slot = rnd.randrange(k)
        gap_lo = times[slot - 1] if slot else 0.0
        s = 0.5 * (gap_lo + times[slot])
        if s - gap_lo < 0.02:
            return
        times2 = times[:slot] + [s] + times[slot:]
        lows2 = lows[:slot] + [-np.inf] + lows[slot:]
        highs2 = highs[:slot] + [np.inf] + highs[slot:]
        inserted = cylinder_probability(CylinderSet(times2, lows2, highs2))
        assert abs(base - inserted) < 1e-8

    def test_monte_carlo_agreement(self):
        times, lows, highs = [0.3, 0.8], [-0.5, 0.0], [0.6, np.inf]
        quad_val = cylinder_probability(CylinderSet(times, lows, highs))
        n = 200_000
        paths = sample_brownian_batch(1.0, 10, n, RngStream(6, 0))
        inside = ((paths[:, 3] > -0.5) & (paths[:, 3] <= 0.6) & (paths[:, 8] > 0.0))
        freq = float(np.mean(inside))
        stderr = math.sqrt(freq * (1 - freq) / n)
        assert abs(freq - quad_val) < 4 * stderr

    def test_too_many_times(self):
        with pytest.raises(ValueError):
            cylinder_probability(CylinderSet([0.1, 0.2, 0.3, 0.4, 0.5],
                                             [-1] * 5, [1] * 5))


class TestBridge:
    def test_endpoints_exact(self):
        path = sample_bridge(0.3, -1.2, 0.5, 2.5, 64, RngStream(7, 0))
        assert path.values[0] == 0.3
        assert path.values[-1] == -1.2

    def test_standard_bridge_covariance(self):
        n = 20_000
        s_idx, t_idx = 25, 75
        prods = np.empty(n)
        for i in range(n):
            v = sample_bridge(0.0, 0.0, 0.0, 1.0, 100, RngStream(8, i)).values
            prods[i] = v[s_idx] * v[t_idx]
        emp = float(np.mean(prods))
        stderr = float(np.std(prods) / math.sqrt(n))
        exact = 0.25 - 0.25 * 0.75  # min(s,t) - s t
        assert abs(emp - exact) < 4 * stderr

    def test_total_mass_weight(self):
        x, y, a, b = 0.2, 1.1, 0.0, 0.7
        expected = math.exp(-((x - y) ** 2) / (2 * (b - a))) / math.sqrt(2 * math.pi * (b - a))
        assert bridge_weight(x, y, a, b) == pytest.approx(expected, rel=1e-14)
        assert bridge_weight(x, y, a, b) == pytest.approx(
            free_kernel(b - a, x, y, mode="euclidean").real, rel=1e-14)


class TestHolderStatistic:
    # growth bands of the median statistic when steps go 2^10 -> 2^14 are
    # calibration constants: the statistic scales like N^(alpha - 1/2) times
    # a slowly varying log factor, so alpha < 1/2 stays put, alpha > 1/2
    # grows, and alpha = 1 blows up like dt^(-1/2)
    def _median(self, alpha, steps, n_paths=60, seed=11):
        vals = [holder_statistic(sample_brownian(1.0, steps, RngStream(seed, i)), alpha)
                for i in range(n_paths)]
        return float(np.median(vals))

    def test_subcritical_stays_bounded(self):
        growth = self._median(0.4, 2 ** 14) / self._median(0.4, 2 ** 10)
        assert growth < 1.25

    def test_supercritical_grows(self):
        growth = self._median(0.6, 2 ** 14) / self._median(0.6, 2 ** 10)
        assert growth > 1.35

    def test_derivative_scale_divergence(self):
        # alpha = 1 statistic ~ dt^(-1/2): refining 16x multiplies by ~4
        growth = self._median(1.0, 2 ** 14) / self._median(1.0, 2 ** 10)
        assert growth > 3.5

    def test_needs_uniform_grid(self):
        path = BrownianPath(np.array([0.0, 0.1, 0.5]), np.array([0.0, 1.0, 2.0]))
        with pytest.raises(ValueError):
            holder_statistic(path, 0.5)


class TestFeynmanKac:
    def test_free_case_matches_heat_semigroup(self):
        psi = lambda x: np.exp(-0.5 * x ** 2)
        est, err = feynman_kac(lambda x: 0.0 * x, psi, 1.0, 0.3, 100_000, 50, RngStream(12, 0))
        oracle, _ = integrate.quad(
            lambda y: free_kernel(1.0, 0.3, y, mode="euclidean").real * math.exp(-0.5 * y * y),
            -np.inf, np.inf)
        assert abs(est - oracle) < 3 * err

    def test_constant_potential_factors_out(self):
        psi = lambda x: np.exp(-0.5 * x ** 2)
        c, t = 0.7, 0.9
        est0, err0 = feynman_kac(lambda x: 0.0 * x, psi, t, 0.0, 40_000, 40, RngStream(13, 0))
        estc, errc = feynman_kac(lambda x: c + 0.0 * x, psi, t, 0.0, 40_000, 40, RngStream(13, 0))
        assert estc == pytest.approx(math.exp(-c * t) * est0, rel=1e-12)

    def test_stderr_scales_as_root_n(self):
        psi = lambda x: np.exp(-0.5 * x ** 2)
        pot = lambda x: 0.5 * x * x
        sizes = [2_000, 8_000, 32_000, 128_000]
        errs = []
        for i, n in enumerate(sizes):
            _, err = feynman_kac(pot, psi, 1.0, 0.0, n, 20, RngStream(14, i))
            errs.append(err)
        slope = np.polyfit(np.log(sizes), np.log(errs), 1)[0]
        assert abs(slope + 0.5) < 0.05

    def test_determinism(self):
        psi = lambda x: np.exp(-0.5 * x ** 2)
        pot = lambda x: 0.5 * x * x
        a = feynman_kac(pot, psi, 1.0, 0.0, 5_000, 20, RngStream(15, 3))
        b = feynman_kac(pot, psi, 1.0, 0.0, 5_000, 20, RngStream(15, 3))
        assert a == b

    def test_rejects_nonfinite_potential(self):
        psi = lambda x: np.exp(-0.5 * x ** 2)
        with pytest.raises(FloatingPointError):
            feynman_kac(lambda x: np.where(np.abs(x) > 0.5, np.inf, 0.0), psi,
                        1.0, 0.0, 200, 20, RngStream(16, 0))


class TestFeynmanKacKernel:
    def test_free_case_is_heat_kernel(self):
        est, err = feynman_kac_kernel(lambda x: 0.0 * x, 1.0, 0.0, 0.7, 10_000, 50,
                                      RngStream(17, 0))
        assert est == pytest.approx(free_kernel(1.0, 0.0, 0.7, mode="euclidean").real, rel=1e-12)

    def test_symmetry_quartic(self):
        pot = lambda x: x ** 4
        a, ea = feynman_kac_kernel(pot, 0.5, 0.1, 0.9, 60_000, 60, RngStream(18, 0))
        b, eb = feynman_kac_kernel(pot, 0.5, 0.9, 0.1, 60_000, 60, RngStream(18, 1))
        assert abs(a - b) < 4 * math.hypot(ea, eb)

    def test_chapman_kolmogorov_composition(self):
        # integrate the MC kernel against itself over a midpoint grid and
        # compare with the direct long-time MC kernel
        pot = lambda x: 0.5 * x * x
        t1 = t2 = 0.4
        x0, y0 = 0.0, 0.5
        zs = np.linspace(-3.5, 4.0, 51)
        vals = np.empty(zs.size)
        errs = np.empty(zs.size)
        for i, z in enumerate(zs):
            k1, e1 = feynman_kac_kernel(pot, t1, x0, z, 4_000, 24, RngStream(19, 2 * i))
            k2, e2 = feynman_kac_kernel(pot, t2, z, y0, 4_000, 24, RngStream(19, 2 * i + 1))
            vals[i] = k1 * k2
            errs[i] = abs(k1) * e2 + abs(k2) * e1
        composed = float(np.trapz(vals, zs))
        mc_err = float(np.trapz(errs, zs))
        direct, ed = feynman_kac_kernel(pot, t1 + t2, x0, y0, 40_000, 48, RngStream(19, 999))
        assert abs(composed - direct) < 4 * (mc_err + ed) + 5e-3
