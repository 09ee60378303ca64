import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.integrate import quad

from condsurv import (
    SurvivalSample,
    TimeGrid,
    beran_survival,
    beran_weights,
    kaplan_meier,
    reflect_covariates,
    smoothed_beran_survival,
)
from condsurv.errors import DegenerateWeightsError
from condsurv.estimators import _jumps_from_survival, _product_limit_rows

from conftest import eval_steps, pure_product_limit, random_sample


class TestBeranWeights:
    def test_single_point(self):
        s = SurvivalSample(x=[0.3], z=[1.0], delta=[1])
        assert_allclose(beran_weights(s, 0.9, 0.2).w, [1.0])

    def test_symmetry(self):
        s = SurvivalSample(x=[0.4, 0.8], z=[1.0, 2.0], delta=[1, 1])
        for h in (0.05, 0.3, 2.0):
            assert_allclose(beran_weights(s, 0.6, h).w, [0.5, 0.5], atol=1e-15)

    def test_hand_formula(self):
        # oracle: normalized phi(0), phi(1), phi(2); renormalization cancels
        s = SurvivalSample(x=[0.0, 0.5, 1.0], z=[1.0, 2.0, 3.0], delta=[1, 1, 1])
        phis = np.exp([-0.0, -0.5, -2.0])
        assert_allclose(beran_weights(s, 0.0, 0.5).w, phis / phis.sum(), rtol=1e-14)

    def test_weights_sum_to_one(self):
        rng = np.random.default_rng(3)
        s = random_sample(rng, 37)
        w = beran_weights(s, 0.4, 0.1).w
        assert w.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(w >= 0)

    def test_degenerate_raises(self):
        s = SurvivalSample(x=[0.0], z=[1.0], delta=[1])
        with pytest.raises(DegenerateWeightsError):
            beran_weights(s, 10.0, 0.01)

    def test_bad_bandwidth(self):
        s = SurvivalSample(x=[0.0], z=[1.0], delta=[1])
        with pytest.raises(ValueError):
            beran_weights(s, 0.0, -1.0)


class TestBeranSurvival:
    def test_one_before_first_event(self, hand_sample):
        grid = TimeGrid([0.25, 0.5, 0.99])
        curve = beran_survival(hand_sample, 0.5, 1.0, grid)
        assert_allclose(curve.values, 1.0)

    def test_hand_three_point_curve(self, hand_sample, grid_4):
        # oracle: factor (1 - (1/3)/1) = 2/3 at z=1, censored z=2 contributes 1,
        # factor (1 - (1/3)/(1/3)) = 0 at z=3
        curve = beran_survival(hand_sample, 0.5, 1.0, grid_4)
        assert_allclose(curve.values, [2 / 3, 2 / 3, 0.0, 0.0], rtol=0, atol=1e-15)

    def test_uncensored_equals_one_minus_ecdf(self):
        rng = np.random.default_rng(8)
        z = rng.exponential(1.0, 25)
        s = SurvivalSample(x=np.full(25, 0.5), z=z, delta=np.ones(25))
        grid = TimeGrid(np.sort(rng.exponential(1.0, 50)) + 1e-9)
        curve = beran_survival(s, 0.5, 5.0, grid)
        ecdf = np.searchsorted(np.sort(z), grid.points, side="right") / 25
        assert_allclose(curve.values, 1.0 - ecdf, atol=1e-12)

    def test_terminal_plateau_when_largest_censored(self):
        s = SurvivalSample(x=[0.5, 0.5, 0.5], z=[1.0, 2.0, 3.0], delta=[1, 1, 0])
        grid = TimeGrid([2.5, 3.0, 10.0])
        curve = beran_survival(s, 0.5, 1.0, grid)
        assert curve.values[0] == pytest.approx(1 / 3)
        assert curve.values[1] == curve.values[0]
        assert curve.values[2] == curve.values[0]

    def test_right_continuity_at_jump(self, hand_sample):
        grid = TimeGrid([0.999999, 1.0])
        curve = beran_survival(hand_sample, 0.5, 1.0, grid)
        assert curve.values[0] == 1.0
        assert curve.values[1] == pytest.approx(2 / 3)

    def test_matches_reference_evaluator_with_kernel_weights(self):
        rng = np.random.default_rng(21)
        for _ in range(25):
            s = random_sample(rng, rng.integers(2, 30))
            x0, h = rng.random(), 0.05 + rng.random()
            w = beran_weights(s, x0, h).w
            steps = pure_product_limit(list(s.z), list(s.delta), list(w))
            grid = TimeGrid(np.sort(rng.exponential(1.0, 12)) + 1e-12)
            curve = beran_survival(s, x0, h, grid)
            oracle = [eval_steps(steps, t) for t in grid.points]
            assert_allclose(curve.values, oracle, atol=1e-12)

    def test_permutation_invariance_exact(self):
        rng = np.random.default_rng(4)
        s = random_sample(rng, 30)
        perm = rng.permutation(30)
        shuffled = SurvivalSample(x=s.x[perm], z=s.z[perm], delta=s.delta[perm])
        grid = TimeGrid.uniform(3.0, 40)
        a = beran_survival(s, 0.4, 0.2, grid).values
        b = beran_survival(shuffled, 0.4, 0.2, grid).values
        assert_allclose(a, b, rtol=0, atol=0)

    def test_monotone_and_in_range(self):
        rng = np.random.default_rng(77)
        for _ in range(100):
            s = random_sample(rng, rng.integers(2, 50))
            grid = TimeGrid.uniform(float(s.z.max()* 1.2), 30)
            curve = beran_survival(s, rng.random(), 0.05 + rng.random(), grid)
            assert np.all(curve.values >= 0) and np.all(curve.values <= 1)
            assert np.all(np.diff(curve.values) <= 0)


class TestKaplanMeier:
    def test_uncensored_three_points(self):
        s = SurvivalSample(x=[0, 0, 0], z=[1.0, 2.0, 3.0], delta=[1, 1, 1])
        grid = TimeGrid([0.5, 1.0, 2.0, 3.0, 5.0])
        assert_allclose(kaplan_meier(s, grid).values, [1.0, 2 / 3, 1 / 3, 0.0, 0.0])

    def test_censored_hand_case(self, hand_sample, grid_4):
        km = kaplan_meier(hand_sample, grid_4)
        assert_allclose(km.values, [2 / 3, 2 / 3, 0.0, 0.0])

    def test_km_is_large_bandwidth_beran(self):
        rng = np.random.default_rng(12)
        for _ in range(100):
            s = random_sample(rng, rng.integers(2, 50))
            grid = TimeGrid.uniform(float(s.z.max() * 1.1), 20)
            km = kaplan_meier(s, grid).values
            big = beran_survival(s, float(rng.random()), 1e9, grid).values
            assert np.max(np.abs(km - big)) <= 1e-12


class TestSmoothedBeran:
    def test_limits_far_left_and_right(self, hand_sample):
        g = 0.01
        grid = TimeGrid([1e-6, 0.3])
        assert_allclose(smoothed_beran_survival(hand_sample, 0.5, 1.0, g, grid).values, 1.0)
        grid_hi = TimeGrid([3.0 + 51 * g, 3.0 + 60 * g])
        vals = smoothed_beran_survival(hand_sample, 0.5, 1.0, g, grid_hi).values
        assert_allclose(vals, 0.0, atol=1e-15)  # Beran terminal value is 0 here

    def test_terminal_value_with_censored_tail(self):
        s = SurvivalSample(x=[0.5, 0.5, 0.5], z=[1.0, 2.0, 3.0], delta=[1, 1, 0])
        g = 0.05
        grid = TimeGrid([3.0 + 51 * g, 3.0 + 60 * g])
        vals = smoothed_beran_survival(s, 0.5, 1.0, g, grid).values
        assert_allclose(vals, 1 / 3, atol=1e-14)

    def test_hand_value_at_t2(self, hand_sample):
        # oracle: jumps {1/3, 0, 2/3} at z = 1, 2, 3 with quadrature for the
        # integrated kernel at (2 - z)/g for g = 0.5
        ik2, _ = quad(lambda u: np.exp(-0.5 * u * u) / np.sqrt(2 * np.pi), -50.0, 2.0)
        ikm2, _ = quad(lambda u: np.exp(-0.5 * u * u) / np.sqrt(2 * np.pi), -50.0, -2.0)
        oracle = 1.0 - ((1 / 3) * ik2 + 0.0 * 0.5 + (2 / 3) * ikm2)
        grid = TimeGrid([1.5, 2.0])
        vals = smoothed_beran_survival(hand_sample, 0.5, 1.0, 0.5, grid).values
        assert_allclose(vals[1], oracle, atol=1e-9)

    def test_small_g_recovers_beran_off_jumps(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            s = random_sample(rng, 20)
            # grid points at least 1e-3 away from every observation
            pts = []
            t = 1e-3
            while len(pts) < 15:
                t += 0.07123
                if np.min(np.abs(s.z - t)) >= 1e-3:
                    pts.append(t)
            grid = TimeGrid(np.array(pts))
            x0, h = rng.random(), 0.3
            a = beran_survival(s, x0, h, grid).values
            b = smoothed_beran_survival(s, x0, h, 1e-6, grid).values
            assert np.max(np.abs(a - b)) <= 1e-9

    def test_monotone_and_in_range(self):
        rng = np.random.default_rng(13)
        for _ in range(100):
            s = random_sample(rng, rng.integers(2, 40))
            grid = TimeGrid.uniform(float(s.z.max() * 1.3), 25)
            curve = smoothed_beran_survival(s, rng.random(), 0.2 + rng.random(), 0.01 + rng.random(), grid)
            assert np.all(curve.values >= 0) and np.all(curve.values <= 1)
            assert np.all(np.diff(curve.values) <= 1e-12)

    def test_jump_mass_bookkeeping(self):
        rng = np.random.default_rng(30)
        for _ in range(50):
            s = random_sample(rng, 25)
            w = beran_weights(s, 0.5, 0.4).w
            order = np.lexsort((1.0 - s.delta, s.z))
            surv = _product_limit_rows(w[order][None, :], s.delta[order][None, :])[0]
            jumps = _jumps_from_survival(surv)
            assert abs(jumps.sum() - (1.0 - surv[-1])) <= 1e-12
            assert np.all(jumps >= -1e-15)


def test_folded_reflection_equals_explicit_reflection():
    rng = np.random.default_rng(42)
    for _ in range(10):
        s = random_sample(rng, 30)
        reflected = reflect_covariates(s, (0.0, 1.0))
        grid = TimeGrid.uniform(float(s.z.max()), 20)
        x0 = float(rng.random())
        a = beran_survival(s, x0, 0.15, grid, support=(0.0, 1.0)).values
        b = beran_survival(reflected, x0, 0.15, grid).values
        assert_allclose(a, b, atol=5e-15)
        c = smoothed_beran_survival(s, x0, 0.15, 0.1, grid, support=(0.0, 1.0)).values
        d = smoothed_beran_survival(reflected, x0, 0.15, 0.1, grid).values
        assert_allclose(c, d, atol=5e-15)
