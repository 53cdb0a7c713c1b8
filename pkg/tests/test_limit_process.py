"""Cluster Poisson limit: sampling, Laplace functionals, maxima constant."""

import math

import numpy as np
import pytest

from stabletree.fields import MixedMovingAverage, mma_from_levels, mma_point_mass
from stabletree.free_group import identity, word
from stabletree.limit_process import (
    PiecewiseConstant,
    empirical_laplace,
    expected_atom_count,
    laplace_functional,
    level_weight,
    maxima_constant,
    maxima_constant_comparison,
    maxima_constant_level_symmetric,
    negative_tail_weight,
    nu_alpha_integral,
    sample_limit_point_process,
)
from stabletree.rng import substream


def test_piecewise_constant_validation():
    g = PiecewiseConstant.threshold(2.0, 1.5)
    assert g(2.0) == 2.0 and g(-2.0) == 2.0 and g(1.0) == 0.0
    assert g(np.array([-3.0, 0.5, 3.0])).tolist() == [2.0, 0.0, 2.0]
    assert g.inner_radius == 1.5
    with pytest.raises(ValueError):
        PiecewiseConstant((-1.0, 1.0), (1.0, 0.5, 1.0))  # nonzero around 0
    with pytest.raises(ValueError):
        PiecewiseConstant((0.0, 1.0), (0.0, 0.0, 1.0))  # 0 as breakpoint
    with pytest.raises(ValueError):
        PiecewiseConstant((1.0, -1.0), (0.0, 0.0, 0.0))


def test_nu_alpha_integral_closed_form():
    alpha, theta, s = 1.3, 0.8, 2.0
    g = PiecewiseConstant.threshold(theta, s)
    got = nu_alpha_integral(alpha, [1.0], g)
    assert got == pytest.approx((1 - math.exp(-theta)) * 2.0 * s ** (-alpha))
    # scaling a coefficient rescales the threshold
    got2 = nu_alpha_integral(alpha, [0.5], g)
    assert got2 == pytest.approx((1 - math.exp(-theta)) * 2.0 * (s / 0.5) ** (-alpha))
    assert nu_alpha_integral(alpha, [], g) == 0.0


def test_level_weights():
    assert level_weight(2, 2) == 12.0
    assert level_weight(1, 2) == 4.0
    total = sum(level_weight(-j, 2) for j in range(0, 60)) + 0.0
    assert total + 1e-9 >= negative_tail_weight(0, 2) >= total - 1e-6
    assert negative_tail_weight(0, 2) == pytest.approx(2.0)


def test_maxima_constant_point_mass():
    for alpha in (0.8, 1.0, 1.5):
        res = maxima_constant(mma_point_mass(2, alpha))
        assert res.exact
        assert res.alpha_power == pytest.approx(4.0, abs=1e-12)
        assert res.value == pytest.approx(4.0 ** (1.0 / alpha))
    res3 = maxima_constant(mma_point_mass(3, 1.0))
    assert res3.alpha_power == pytest.approx(3.0)  # 2d/(d-1) at d=3


def test_maxima_constant_scaling():
    a = maxima_constant(mma_point_mass(2, 1.5))
    b = maxima_constant(mma_point_mass(2, 1.5, value=2.0))
    assert b.alpha_power == pytest.approx(2.0**1.5 * a.alpha_power)
    assert b.value == pytest.approx(2.0 * a.value)


def test_maxima_constant_degenerate():
    m = MixedMovingAverage.from_tables(2, 1.0, {"w0": 1.0}, {"w0": {}})
    with pytest.raises(ValueError):
        maxima_constant(m)


def test_level_symmetric_comparison():
    comp1 = maxima_constant_comparison(mma_point_mass(2, 1.0))
    assert comp1["formulas_agree"]
    assert comp1["level_symmetric_alpha_power"] == pytest.approx(4.0)
    for alpha in (0.8, 1.5):
        comp = maxima_constant_comparison(mma_point_mass(2, alpha))
        assert not comp["formulas_agree"]  # the mismatch must be flagged
        assert comp["ratio_alpha_power"] == pytest.approx(2.0 ** (alpha - 1.0))


def test_level_symmetric_requires_symmetry():
    m = MixedMovingAverage.from_tables(
        2, 1.0, {"w0": 1.0}, {"w0": {identity(2): 1.0, word(2, [1]): 0.5}}
    )
    with pytest.raises(ValueError):
        maxima_constant_level_symmetric(m)


def test_laplace_trivial_and_closed_form():
    m = mma_point_mass(2, 1.0)
    zero = PiecewiseConstant.threshold(0.0, 1.0)
    assert laplace_functional(m, zero).value == pytest.approx(1.0)
    theta, s = 1.3, 2.0
    lap = laplace_functional(m, PiecewiseConstant.threshold(theta, s))
    expect = math.exp(-2.0 * 2.0 * s ** (-1.0) * (1 - math.exp(-theta)))
    assert lap.exact
    assert lap.value == pytest.approx(expect)
    assert lap.level_symmetric_value == pytest.approx(expect)


def test_laplace_level_symmetric_agreement():
    m = mma_from_levels(2, 1.2, {0: 1.0, 1: 0.6})
    g = PiecewiseConstant.threshold(0.9, 1.2)
    lap = laplace_functional(m, g)
    assert lap.exact
    assert lap.level_symmetric_value == pytest.approx(lap.value, rel=1e-10)


def test_laplace_monte_carlo_path_matches_exact():
    m = mma_from_levels(2, 1.0, {0: 1.0, 1: 0.6})
    g = PiecewiseConstant.threshold(1.0, 1.5)
    exact = laplace_functional(m, g)
    mc = laplace_functional(m, g, mc_subgraphs=6000, seed=3, exact_budget=1)
    assert not mc.exact
    assert exact.value == pytest.approx(mc.value, abs=3 * (mc.ci_high - mc.ci_low) + 1e-3)


def test_laplace_empirical_cross_oracle():
    m = mma_from_levels(2, 1.0, {0: 1.0, 1: 0.6})
    g = PiecewiseConstant.threshold(1.0, 1.5)
    ana = laplace_functional(m, g)
    emp = empirical_laplace(m, g, 6, 2000, seed=601)
    assert abs(emp - ana.value) < 0.02


def test_sample_limit_point_process_point_mass():
    m = mma_point_mass(2, 1.0)
    rng = substream(602, "ns")
    counts = [sample_limit_point_process(m, 1.0, rng).count_above(1.0) for _ in range(3000)]
    assert abs(np.mean(counts) - 4.0) < 0.15
    # doubling the threshold halves the count at alpha = 1
    counts2 = [sample_limit_point_process(m, 2.0, rng).count_above(2.0) for _ in range(3000)]
    assert abs(np.mean(counts2) - 2.0) < 0.12
    # an absurd threshold empties the measure
    assert len(sample_limit_point_process(m, 1e9, rng)) == 0


def test_limit_process_zero_atom_probability():
    # P(no atoms above s) = exp(-K^alpha s^-alpha)
    m = mma_point_mass(2, 1.0)
    kx = maxima_constant(m).alpha_power
    rng = substream(603, "zero")
    for s in (2.0, 4.0):
        reps = 2500
        zeros = sum(
            1 for _ in range(reps) if sample_limit_point_process(m, s, rng).count_above(s) == 0
        )
        p = math.exp(-kx / s)
        se = math.sqrt(p * (1 - p) / reps)
        assert abs(zeros / reps - p) < 4 * se + 0.01


def test_expected_atom_count_matches_analytic():
    m = mma_from_levels(2, 1.0, {0: 1.0, 1: 0.5})
    ana = expected_atom_count(m, 1.0)
    rng = substream(604, "cnt")
    emp = np.mean([len(sample_limit_point_process(m, 1.0, rng)) for _ in range(3000)])
    assert ana.exact
    assert abs(emp - ana.value) < 0.15


def test_limit_process_laplace_consistency():
    # empirical Laplace functional of the sampled limit process
    m = mma_point_mass(2, 1.0)
    g = PiecewiseConstant.threshold(1.0, 1.5)
    ana = laplace_functional(m, g).value
    rng = substream(605, "lapmc")
    acc = 0.0
    reps = 3000
    for _ in range(reps):
        pm = sample_limit_point_process(m, 1.0, rng)
        acc += math.exp(-float(np.sum(g(pm.atoms))))
    assert abs(acc / reps - ana) < 0.02


def test_sample_limit_delta_validation():
    with pytest.raises(ValueError):
        sample_limit_point_process(mma_point_mass(2, 1.0), 0.0, substream(1, "x"))
