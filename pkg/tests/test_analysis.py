import math

import numpy as np
import pytest

from conftest import run
from patchfront.analysis import (IndeterminateRegime, Regime, RegimeOptions, Side,
                                 classify_regime, compare_to_stationary, estimate_speed,
                                 fit_front_shift, inverse_scaling_map, level_position,
                                 positions, scaling_map)
from patchfront.cauchy import Field, Grid, Trajectory, field_from_function
from patchfront.errors import ConfigError, NumericalError
from patchfront.reaction import Kind, Reaction
from patchfront.stationary import PatchModel, construct_V
from patchfront.waves import bistable_front, front_eval

L = Reaction.logistic
C = Reaction.cubic


@pytest.fixture(scope="module")
def front41():
    return bistable_front(C(4, 1), 1.0)


# --- level_position -----------------------------------------------------------

def test_level_position_interpolates():
    g = Grid.covering(0.5, -5, 5)
    f = Field(g, 0.0, np.clip(1.0 - (g.x + 5) / 10, 0, 1))
    # linear ramp 1 -> 0 on [-5, 5]; level 0.37 sits at x = 5 - 10*0.37
    assert level_position(f, 0.37, Side.RIGHT) == pytest.approx(1.3, abs=1e-12)


def test_level_position_absent():
    g = Grid.covering(0.1, -5, 5)
    f = Field(g, 0.0, 2.0 - 0.01 * (g.x + 5))
    assert level_position(f, 1.0, Side.RIGHT) is None
    assert level_position(f, 3.0, Side.LEFT) is None


def test_level_position_symmetric_bump():
    g = Grid.covering(0.05, -10, 10)
    f = field_from_function(g, lambda x: np.exp(-(x - 1.5) ** 2))
    for lvl in (0.1, 0.5, 0.9):
        r = level_position(f, lvl, Side.RIGHT)
        left = level_position(f, lvl, Side.LEFT)
        assert abs((r - 1.5) - (1.5 - left)) < 1e-12


# --- estimate_speed --------------------------------------------------------------------

def _translating(front, c, times, g):
    snaps = tuple(field_from_function(g, lambda x, t=t: front_eval(front, x - c * t), t=t)
                  for t in times)
    return Trajectory(snaps, PatchModel(1, 1, 1, L(1), C(4, 1)))


def test_estimate_speed_synthetic(front41):
    g = Grid.covering(0.05, -30, 60)
    c = 0.7
    tr = _translating(front41, c, np.arange(0.0, 41.0, 2.0), g)
    est, rms = estimate_speed(tr, 2.0, Side.RIGHT, (0, 40))
    assert abs(est - c) < 1e-6 and rms < 1e-4


def test_estimate_speed_missing_position(front41):
    g = Grid.covering(0.05, -30, 30)
    tr = _translating(front41, 1.0, [0.0, 10.0, 40.0], g)
    with pytest.raises(NumericalError):
        estimate_speed(tr, 2.0, Side.RIGHT, (0, 40))


def test_kpp_kpp_speeds():
    m, tr = run("kpp_kpp")
    cr, _ = estimate_speed(tr, 0.5 * m.f2.K, Side.RIGHT, (40, 80))
    cl, _ = estimate_speed(tr, 0.5 * m.f1.K, Side.LEFT, (40, 80))
    assert abs(cr / (2 * math.sqrt(2)) - 1) < 0.05
    assert abs(cl / 2 - 1) < 0.05


def test_half_bump_speed():
    m, tr = run("half_bump")
    c, _ = estimate_speed(tr, 0.5 * m.f2.K, Side.RIGHT, (40, 80))
    assert abs(c / math.sqrt(2) - 1) < 0.02


def test_balanced_speed_decays():
    m, tr = run("balanced_4")
    speeds = [abs(estimate_speed(tr, 0.5 * m.f2.K, Side.RIGHT, w)[0])
              for w in ((20, 60), (60, 100), (100, 150), (150, 200))]
    assert all(b <= a + 1e-12 for a, b in zip(speeds, speeds[1:])), speeds
    assert speeds[-1] < 0.05


# --- compare_to_stationary ------------------------------------------------------------

def test_compare_self():
    m = PatchModel(1.0, 1.0, 1.0, L(1), L(2))
    V = construct_V(m, 3 ** (1 / 3))
    g = Grid.covering(0.05, -20, 20)
    assert compare_to_stationary(field_from_function(g, V), V, (-20, 20)) < 1e-10


def test_kpp_kpp_converges_to_V():
    m, tr = run("kpp_kpp_unit")
    V = construct_V(m, 3 ** (1 / 3))
    errs = [compare_to_stationary(s, V, (-20, 20)) for s in tr.snapshots]
    assert errs[-1] < 1e-2
    assert errs[1] > 10 * errs[-1]
    assert all(b <= a for a, b in zip(errs[-10:], errs[-9:]))


# --- fit_front_shift -----------------------------------------------------------------

def test_fit_front_shift_self(front41):
    g = Grid.covering(0.05, -20, 40)
    c, t = front41.c, 7.0
    f = field_from_function(g, lambda x: front_eval(front41, x - c * t + 3.0), t=t)
    xi, err = fit_front_shift(f, front41, (-10, 40), c, t)
    assert abs(xi - 3.0) < 1e-6 and err < 1e-8


def test_fit_front_shift_needs_bracket(front41):
    g = Grid.covering(0.05, -20, 40)
    f = field_from_function(g, lambda x: front_eval(front41, x))
    with pytest.raises(ConfigError):
        fit_front_shift(f, front41, (20, 40), front41.c, 0.0)


def test_propagation_front_shift(front41):
    m, tr = run("propagation")
    fits = []
    for t in (60, 70, 80):
        s = tr.at_time(t)
        fits.append(fit_front_shift(s, front41, (20.0, float(s.x[-1])), front41.c, t))
    assert fits[-1][1] < 0.02 * m.f2.K
    xis = [x for x, _ in fits]
    assert max(xis) - min(xis) < 0.05


# --- classify_regime ----------------------------------------------------------------

@pytest.mark.parametrize("name,verdict", [
    ("extinction", Regime.EXTINCTION),
    ("blocking_mass", Regime.BLOCKED),
    ("propagation", Regime.PROPAGATING),
    ("virtual", Regime.VIRTUAL_BLOCKING),
])
def test_classify_examples(name, verdict):
    m, tr = run(name)
    rep = classify_regime(tr, m)
    assert rep.verdict is verdict
    if verdict is Regime.PROPAGATING:
        assert abs(rep.speed_right - math.sqrt(2)) < 0.03
    if verdict is Regime.EXTINCTION:
        assert rep.final_supnorm < 1e-4
    assert rep.evidence["ext_tol"] == 1e-4


def test_classify_report_invariants():
    m, tr = run("propagation")
    rep = classify_regime(tr, m)
    assert rep.speed_right > rep.evidence["speed_floor"]
    m, tr = run("virtual")
    rep = classify_regime(tr, m)
    assert rep.speed_right < 0.05 and rep.evidence["level_increasing"]


def test_classify_indeterminate_carries_evidence():
    # a stationary bump far to the right is neither blocked, moving nor converging to V
    m = PatchModel(1.0, 1.0, 1.0, L(1), C(4, 1))
    g = Grid.covering(0.1, -20, 20)
    v = np.where(np.abs(g.x - 15) < 2, 2.5, 0.0)
    snaps = tuple(Field(g, float(t), v) for t in range(0, 41))
    with pytest.raises(IndeterminateRegime) as ei:
        classify_regime(Trajectory(snaps, m), m, RegimeOptions(block_margin=-50))
    assert "X_block" in ei.value.evidence


# --- properties on cached runs --------------------------------------------------------

def test_running_max_below_threshold():
    m, tr = run("blocking_small")
    assert max(s.sup() for s in tr.snapshots) < m.f2.theta


@pytest.mark.parametrize("name", ["blocking_mass", "blocking_small", "blocking_l1",
                                  "propagation", "virtual", "half_bump"])
def test_left_patch_persistence(name):
    m, tr = run(name)
    s = tr.final
    sel = (s.x >= -20) & (s.x <= -10)
    assert s.values[sel].min() > 0.5 * m.f1.K


def test_positions_window_selection():
    m, tr = run("kpp_kpp")
    ts, xs = positions(tr, 1.0, Side.RIGHT, (10, 20))
    np.testing.assert_array_equal(ts, np.arange(10, 21))
    assert all(b > a for a, b in zip(xs, xs[1:]))


# --- scaling map ----------------------------------------------------------------------

def test_scaling_symmetric():
    f = C(1, 0.25)
    sigma, k, f2 = scaling_map(0.5, 2.0, 2.0, f)
    assert sigma == 1.0 and k == 1.0 and f2.same_as(f)


def test_scaling_example():
    sigma, k, f2 = scaling_map(0.8, 1.0, 1.0, C(1, 0.25))
    assert sigma == pytest.approx(0.25, abs=1e-15) and k == pytest.approx(4.0, abs=1e-14)
    assert f2.kind is Kind.CUBIC
    assert f2.K == pytest.approx(4.0, abs=1e-14) and f2.theta == pytest.approx(1.0, abs=1e-14)
    assert f2.amplitude == pytest.approx(1 / 16, rel=1e-14)


def test_scaling_round_trip():
    rng = np.random.default_rng(9)
    for _ in range(50):
        a = rng.uniform(0.05, 0.95)
        d1, d2 = rng.uniform(0.1, 5, 2)
        K = rng.uniform(0.5, 5)
        f = C(K, K * rng.uniform(0.05, 0.95), amplitude=rng.uniform(0.5, 2))
        sigma, k, f2 = scaling_map(a, d1, d2, f)
        assert k * sigma == pytest.approx(d2 / d1, rel=1e-12)
        a_back, f_back = inverse_scaling_map(sigma, d1, d2, f2)
        assert abs(a_back - a) < 1e-12
        assert abs(f_back.K - f.K) < 1e-12 * K and abs(f_back.theta - f.theta) < 1e-12 * K
        assert abs(f_back.amplitude - f.amplitude) < 1e-12 * f.amplitude
        assert np.sign(round(f2.mass(0, f2.K), 12)) == np.sign(round(f.mass(0, f.K), 12))


@pytest.mark.parametrize("a", [0.0, 1.0, -0.3, 1.5])
def test_scaling_rejects_alpha(a):
    with pytest.raises(ConfigError):
        scaling_map(a, 1.0, 1.0, C(1, 0.25))
