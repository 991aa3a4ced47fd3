import math

import numpy as np
import pytest

from patchfront.errors import ConfigError
from patchfront.reaction import Reaction
from patchfront.waves import (bistable_front, bistable_speed, front_eval, front_residual,
                              kpp_speed, speed_sign)

L = Reaction.logistic
C = Reaction.cubic


@pytest.fixture(scope="module")
def front41():
    return bistable_front(C(4, 1), 1.0)


def test_cubic_front_speed(front41):
    assert abs(front41.c - math.sqrt(2)) < 1e-6


def test_balanced_front_has_zero_speed():
    assert bistable_speed(C(4, 2), 1.0) == 0.0


def test_decay_rates(front41):
    assert abs(front41.decay_alpha - 2 * math.sqrt(2)) < 1e-6
    assert abs(front41.decay_beta - 2 * math.sqrt(2)) < 1e-6


def test_rates_match_formula():
    f, d = C(3, 2, amplitude=0.5), 1.7
    p = bistable_front(f, d)
    c = p.c
    assert p.decay_alpha == pytest.approx((c + math.sqrt(c * c - 4 * d * f.deriv(0.0))) / (2 * d),
                                          abs=1e-12)
    assert p.decay_beta == pytest.approx((-c + math.sqrt(c * c - 4 * d * f.deriv(3.0))) / (2 * d),
                                         abs=1e-12)
    assert p.c < 0  # negative mass


def test_profile_invariants(front41):
    p = front41
    assert np.all(np.diff(p.phi) < 0)
    assert abs(front_eval(p, 0.0) - 1.0) < 1e-10
    assert front_residual(p, C(4, 1)) < 1e-6
    assert p.phi[0] > 4 - 1e-9 and p.phi[-1] < 1e-9


@pytest.mark.parametrize("f,d", [(C(4, 3), 1.0), (C(1, 0.3), 0.5), (C(2, 1), 2.0)])
def test_profile_invariants_other_reactions(f, d):
    p = bistable_front(f, d)
    assert np.all(np.diff(p.phi) < 0)
    assert abs(front_eval(p, 0.0) - f.theta) < 1e-10
    assert front_residual(p, f) < 1e-6
    assert speed_sign(p.c) == int(np.sign(round(f.mass(0, f.K), 12)))


def test_tail_sandwich(front41):
    p = front41
    right = p.s > 0
    s = p.s[right]
    assert np.all(p.tail_a0 * np.exp(-p.decay_alpha * s) <= p.phi[right] * (1 + 1e-12))
    assert np.all(p.phi[right] <= p.tail_a1 * np.exp(-p.decay_alpha * s) * (1 + 1e-12))
    left = p.s < 0
    s = p.s[left]
    gap = p.K - p.phi[left]
    assert np.all(p.tail_b0 * np.exp(p.decay_beta * s) <= gap * (1 + 1e-12))
    assert np.all(gap <= p.tail_b1 * np.exp(p.decay_beta * s) * (1 + 1e-12))
    assert 0 < p.tail_a0 <= p.tail_a1 and 0 < p.tail_b0 <= p.tail_b1


def test_front_eval_monotone_and_tails(front41):
    p = front41
    s = np.linspace(p.s[0] - 20, p.s[-1] + 20, 1000)
    v = front_eval(p, s)
    assert np.all(np.diff(v) <= 0)
    assert v[-1] < 1e-15 and v[-1] >= 0
    assert v[0] <= 4.0 and 4.0 - v[0] < 1e-15
    # tails are continuous at the sampled range ends
    assert front_eval(p, p.s[-1]) == pytest.approx(p.phi[-1], rel=1e-12)
    assert front_eval(p, p.s[0]) == pytest.approx(p.phi[0], rel=1e-15)


def test_front_requires_bistable():
    with pytest.raises(ConfigError):
        bistable_front(L(1), 1.0)


def test_kpp_speed_examples():
    assert kpp_speed(L(1), 1.0).c_star == 2.0
    assert kpp_speed(L(2), 2.0).c_star == pytest.approx(2 * math.sqrt(2), abs=1e-15)
    kd = kpp_speed(L(3), 1.5)
    assert kd.lambda_c(kd.c_star) == pytest.approx(kd.c_star / (2 * 1.5), rel=1e-12)
    with pytest.raises(ValueError):
        kd.lambda_c(0.5 * kd.c_star)
    with pytest.raises(ConfigError):
        kpp_speed(C(4, 1), 1.0)
