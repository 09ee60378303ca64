import numpy as np
import pytest

from condsurv import SurvivalSample, TimeGrid


@pytest.fixture
def hand_sample():
    """Three observations at one covariate value: event, censored, event."""
    return SurvivalSample(x=[0.5, 0.5, 0.5], z=[1.0, 2.0, 3.0], delta=[1, 0, 1])


@pytest.fixture
def grid_4():
    return TimeGrid(np.array([1.0, 2.0, 3.0, 4.0]))


def random_sample(rng, n, censor_scale=1.0):
    """Continuous right-censored sample with distinct times almost surely."""
    x = rng.random(n)
    t = rng.exponential(1.0, n)
    c = rng.exponential(censor_scale, n)
    return SurvivalSample(x=x, z=np.minimum(t, c), delta=(t <= c).astype(float))


def pure_product_limit(z, delta, w):
    """Reference product-limit evaluator: plain loops, uncensored-first ties."""
    order = sorted(range(len(z)), key=lambda i: (z[i], -delta[i]))
    surv, out, cum = 1.0, [], 0.0
    for i in order:
        at_risk = 1.0 - cum
        if delta[i] == 1:
            if at_risk <= 1e-12:
                factor = 1.0 if w[i] <= 1e-12 else 0.0
            else:
                factor = 1.0 - w[i] / at_risk
            surv *= max(0.0, min(1.0, factor))
        cum += w[i]
        out.append((z[i], surv))
    return out


def eval_steps(steps, t):
    value = 1.0
    for zi, si in steps:
        if zi <= t:
            value = si
    return value
