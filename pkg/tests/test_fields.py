"""Field models: norming constants, simulation laws, maxima experiments."""

import math

import numpy as np
import pytest

from stabletree.errors import ResourceBudgetError, UnsupportedModelError
from stabletree.fields import (
    BoundaryField,
    FieldSimulator,
    MixedMovingAverage,
    ParetoField,
    ShiftField,
    boundary_maximum,
    maxima_experiment,
    mma_from_levels,
    mma_point_mass,
    norming_constant_exact,
    norming_constant_mc,
    partial_maximum,
    simulate_field,
)
from stabletree.free_group import ball_size, word
from stabletree.rng import substream
from stabletree.stable import SeriesConfig, sample_sas
from stabletree.stats import two_sample_ks_pvalue


def test_norming_closed_forms():
    for n in range(0, 11):
        assert norming_constant_exact(BoundaryField(2, 1.0), n) == 3**n
        assert norming_constant_exact(BoundaryField(3, 0.7), n) == 5**n
        assert norming_constant_exact(ShiftField(2, 1.3), n) == 2 * n + 1
    assert norming_constant_exact(mma_point_mass(2, 1.0), 2) == ball_size(2, 2)
    with pytest.raises(UnsupportedModelError):
        norming_constant_exact(ParetoField(2, 1.0, 3.0), 3)


def test_norming_mma_shifted_kernel():
    # a point mass away from the identity still sweeps one ball of sites
    m = MixedMovingAverage.from_tables(
        2, 1.0, {"w0": 1.0}, {"w0": {word(2, [1, 2]): 2.0}}
    )
    assert norming_constant_exact(m, 3) == pytest.approx(2.0 * ball_size(2, 3))


def test_pareto_norming_mc():
    model = ParetoField(2, 1.0, 3.0)
    est = norming_constant_mc(model, 4, 10_000, substream(501, "nmc"))
    ratio = est.value / ball_size(2, 4) ** (1.0 / 3.0)
    assert abs(ratio - math.gamma(2.0 / 3.0)) < 0.05 * math.gamma(2.0 / 3.0)
    assert est.ci_low < est.value < est.ci_high
    with pytest.raises(ValueError):
        norming_constant_mc(model, 4, 1, substream(501, "nmc"))
    with pytest.raises(UnsupportedModelError):
        norming_constant_mc(BoundaryField(2, 1.0), 3, 100, substream(501, "nmc"))


def test_pareto_norming_degenerate_theta():
    # theta -> inf collapses the Pareto to 1, so the max of powers is 1
    model = ParetoField(2, 1.0, 400.0)
    est = norming_constant_mc(model, 3, 2000, substream(502, "deg"))
    assert abs(est.value - 1.0) < 0.05


def test_pareto_norming_monotone_in_n():
    model = ParetoField(2, 1.0, 3.0)
    vals = [
        norming_constant_mc(model, n, 4000, substream(503, "mono", n)).value
        for n in (2, 3, 4)
    ]
    assert vals[0] < vals[1] < vals[2]


def test_pareto_submultiplicative_norming():
    model = ParetoField(2, 1.0, 3.0)
    b4 = norming_constant_mc(model, 4, 8000, substream(504, "sub", 4))
    b2 = norming_constant_mc(model, 2, 8000, substream(504, "sub", 2))
    assert b4.ci_low <= ball_size(2, 2) * b2.ci_high


def test_simulation_deterministic():
    for model in (
        BoundaryField(2, 1.0),
        ShiftField(2, 1.2),
        ParetoField(2, 1.0, 3.0),
        mma_point_mass(2, 0.9),
    ):
        cfg = SeriesConfig(num_terms=300)
        a = simulate_field(model, 3, cfg, substream(505, "det"))
        b = simulate_field(model, 3, cfg, substream(505, "det"))
        assert np.array_equal(a.values, b.values)


def test_mma_exactness_ignores_series_budget():
    m = mma_point_mass(2, 1.0)
    a = simulate_field(m, 3, SeriesConfig(num_terms=10), substream(506, "ex"))
    b = simulate_field(m, 3, SeriesConfig(num_terms=10_000), substream(506, "ex"))
    assert np.array_equal(a.values, b.values)
    assert a.meta.get("exact") is True


def test_mma_scaling_equivariance():
    base = mma_from_levels(2, 1.0, {0: 1.0, 1: 0.5})
    doubled = mma_from_levels(2, 1.0, {0: 2.0, 1: 1.0})
    a = simulate_field(base, 3, None, substream(507, "sc"))
    b = simulate_field(doubled, 3, None, substream(507, "sc"))
    assert np.array_equal(2.0 * a.values, b.values)  # power-of-two scaling is exact


def test_mma_point_mass_is_iid_noise():
    # the kernel 1_{t=e} reduces the field to one noise value per site
    model = mma_point_mass(2, 1.0)
    scale = model.noise_scale("w0")
    pooled = []
    for rep in range(40):
        fs = simulate_field(model, 3, None, substream(508, "iid", rep))
        pooled.append(fs.values)
    pooled = np.concatenate(pooled)
    ref = sample_sas(substream(509, "iidref"), 1.0, scale, size=len(pooled) * 4)
    assert two_sample_ks_pvalue(pooled, ref) > 0.01
    # neighbouring sites carry independent signs
    fs = np.array([simulate_field(model, 2, None, substream(510, "sg", r)).values for r in range(4000)])
    s = np.sign(fs)
    corr = np.corrcoef(s[:, 0], s[:, 1])[0, 1]
    assert abs(corr) < 0.05


def test_boundary_field_marginal_is_sas_unit():
    # the derivative integrates to 1, so every site is SaS(1)
    model = BoundaryField(2, 1.0)
    cfg = SeriesConfig(num_terms=2500)
    sim = FieldSimulator(model, 2, cfg)
    vals = np.array([sim.values(substream(511, "marg", r)) for r in range(3000)])
    ref = sample_sas(substream(512, "margref"), 1.0, 1.0, size=80_000)
    for idx in (0, 1, 7):
        assert two_sample_ks_pvalue(vals[:, idx], ref) > 0.01


def test_boundary_field_left_stationarity():
    # the law at site t matches the law at site s.t
    from stabletree.free_group import ball_layout, multiply

    model = BoundaryField(2, 1.0)
    cfg = SeriesConfig(num_terms=2500)
    sim = FieldSimulator(model, 3, cfg)
    lay = ball_layout(2, 3)
    t = word(2, [2, 1])
    s = word(2, [1])
    it, ist = lay.word_to_index(t), lay.word_to_index(multiply(s, t))
    vals = np.array([sim.values(substream(513, "stat", r)) for r in range(3000)])
    assert two_sample_ks_pvalue(vals[:, it], vals[:, ist]) > 0.01


def test_boundary_field_peak_site():
    # the strongest site follows the dominant ray: value (2d-1)^(n/alpha) x weight
    model = BoundaryField(2, 1.0)
    fs = simulate_field(model, 6, SeriesConfig(num_terms=4000), substream(514, "peak"))
    assert partial_maximum(fs) >= boundary_maximum(fs) * 0.999999
    assert fs.meta["remainder_bound"] < 1e-3 * 3**6 * 10


def test_maximum_trivial_cases():
    model = mma_point_mass(2, 1.0)
    fs = simulate_field(model, 0, None, substream(515, "n0"))
    assert partial_maximum(fs) == abs(fs.values[0])
    assert boundary_maximum(fs) == partial_maximum(fs)
    fs3 = simulate_field(model, 3, None, substream(516, "n3"))
    assert boundary_maximum(fs3) <= partial_maximum(fs3)


def test_site_budget():
    with pytest.raises(ResourceBudgetError):
        simulate_field(BoundaryField(2, 1.0), 14, None, substream(517, "big"))
    with pytest.raises(ResourceBudgetError):
        maxima_experiment(BoundaryField(2, 1.0), 14, 10, None, seed=0)


def test_maxima_experiment_boundary():
    res = maxima_experiment(
        BoundaryField(2, 1.0), 5, 250, SeriesConfig(), seed=518, s_grid=[0.5, 1, 2, 4]
    )
    assert res.ks_distance is not None and res.ks_distance < 0.15
    assert all(bm >= sm for _, bm, sm, _ in res.records)
    assert len(res.records) == 250
    assert res.ecdf[0]["p_hat"] <= res.ecdf[-1]["p_hat"]


def test_maxima_experiment_worker_invariance():
    a = maxima_experiment(ShiftField(2, 1.0), 4, 40, None, seed=519, workers=1)
    b = maxima_experiment(ShiftField(2, 1.0), 4, 40, None, seed=519, workers=2)
    assert a.records == b.records


def test_shift_field_reduction():
    # sites with equal a_1 exponent share one value; others are independent
    from stabletree.free_group import ball_layout

    model = ShiftField(2, 1.0)
    lay = ball_layout(2, 3)
    fs = simulate_field(model, 3, None, substream(520, "shift"))
    k = lay.a1_exponent
    for kk in range(-3, 4):
        idx = np.where(k == kk)[0]
        assert np.all(fs.values[idx] == fs.values[idx[0]])
    # distinct exponents almost surely differ
    assert fs.values[lay.word_to_index(word(2, [1]))] != fs.values[
        lay.word_to_index(word(2, [1, 1]))
    ]


def test_shift_field_degenerate_maxima():
    res = maxima_experiment(ShiftField(2, 1.0), 8, 300, None, seed=521)
    assert float(np.median(res.scaled)) < 0.05
