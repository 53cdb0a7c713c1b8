"""Built-in stationary SaS field models on the free group and their maxima.

Four models are provided.

* ``BoundaryField``: the field generated by the boundary action with the
  uniform boundary measure and kernel 1, simulated by the stable series
  X_t = c_alpha^(1/alpha) sum_i eps_i Gamma_i^(-1/alpha) (2d-1)^(-B_{omega_i}(t)/alpha)
  with iid uniform boundary rays omega_i shared across all sites of the ball.
* ``ShiftField``: the action where a_1 shifts the real line by 1 and the
  other generators act trivially, with kernel 1_(0,1].  The field factors
  through the a_1-exponent homomorphism onto Z and the induced integer-
  indexed values are iid SaS(1); we simulate the reduced form.
* ``ParetoField``: iid Pareto(theta) coordinate projections under the
  shift over the whole group (theta > alpha), simulated by the series with
  product-Pareto configurations, materialising only the ball coordinates.
* ``MixedMovingAverage``: X_t = sum_{w,u} f(w, t^-1 u) Z_{w,u} with a
  finitely supported tabulated kernel.  This simulation is exact (no
  series truncation): the noise variables are the per-site sums of the
  driving Poisson measure, iid SaS with scale (2 mass / c_alpha)^(1/alpha)
  per unit site, matching the series convention in which the marginal
  tail per site is 2 mass |f|^alpha x^-alpha.

Norming constants: norming_constant_exact returns the alpha-th power of
the integral of the ball-maximum of |f_t|, exactly where a closed form or
finite enumeration exists.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ResourceBudgetError, UnsupportedModelError
from .free_group import (
    Word,
    ball_layout,
    ball_size,
    enumerate_ball,
    identity,
    multiply,
)
from .rng import substream
from .stable import (
    SeriesConfig,
    choose_num_terms,
    lepage_remainder_bound,
    sample_sas,
    stable_tail_constant,
)

DEFAULT_SITE_BUDGET = 1_000_000


@dataclass(frozen=True)
class BoundaryField:
    d: int
    alpha: float

    def __post_init__(self):
        _check_model(self.d, self.alpha)


@dataclass(frozen=True)
class ShiftField:
    d: int
    alpha: float

    def __post_init__(self):
        _check_model(self.d, self.alpha)


@dataclass(frozen=True)
class ParetoField:
    d: int
    alpha: float
    theta: float

    def __post_init__(self):
        _check_model(self.d, self.alpha)
        if self.theta <= self.alpha:
            raise ValueError("Pareto exponent must exceed alpha")


@dataclass(frozen=True)
class MixedMovingAverage:
    """Tabulated mixed moving average with finite site support.

    ``w_masses`` maps atom names of the mixing space to positive masses;
    ``f_table`` maps atom names to {Word: value} tables with finite
    support.  ``support_radius`` is the smallest m with all supports in
    the ball E_m.
    """

    d: int
    alpha: float
    w_masses: tuple  # ((name, mass), ...) sorted
    f_table: tuple   # ((name, ((word, value), ...)), ...) sorted

    def __post_init__(self):
        _check_model(self.d, self.alpha)
        for _, mass in self.w_masses:
            if mass <= 0:
                raise ValueError("atom masses must be > 0")

    @staticmethod
    def from_tables(d: int, alpha: float, w_masses: dict, f_table: dict) -> "MixedMovingAverage":
        names = sorted(w_masses)
        if sorted(f_table) != names:
            raise ValueError("w_masses and f_table must share atom names")
        masses = tuple((w, float(w_masses[w])) for w in names)
        tables = []
        for w in names:
            entries = tuple(
                sorted(
                    ((t, float(v)) for t, v in f_table[w].items() if v != 0.0),
                    key=lambda kv: (len(kv[0]), kv[0].letters),
                )
            )
            tables.append((w, entries))
        return MixedMovingAverage(d, alpha, masses, tuple(tables))

    @property
    def atoms(self):
        return [w for w, _ in self.w_masses]

    def mass(self, w: str) -> float:
        return dict(self.w_masses)[w]

    def table(self, w: str) -> dict:
        return dict(dict(self.f_table)[w])

    @property
    def support_radius(self) -> int:
        m = 0
        for _, entries in self.f_table:
            for t, _ in entries:
                m = max(m, len(t))
        return m

    @property
    def sup_abs(self) -> float:
        return max(
            (abs(v) for _, entries in self.f_table for _, v in entries), default=0.0
        )

    def f_prime(self, w: str, k: Word) -> float:
        """f'(w, k) = f(w, k^-1)."""
        return self.table(w).get(k.inverse(), 0.0)

    def level_profile(self, w: str):
        """{|t|: value} if f(w, .) is constant on spheres, else None."""
        tab = self.table(w)
        if not tab:
            return {}
        levels = {}
        m = max(len(t) for t in tab)
        for j in range(m + 1):
            vals = {tab.get(t, 0.0) for t in enumerate_ball(self.d, m) if len(t) == j}
            if len(vals) != 1:
                return None
            v = vals.pop()
            if v != 0.0:
                levels[j] = v
        return levels

    @property
    def is_level_symmetric(self) -> bool:
        return all(self.level_profile(w) is not None for w in self.atoms)

    def noise_scale(self, w: str) -> float:
        """Series-convention SaS scale of one site's noise: (2 mass / c_alpha)^(1/alpha)."""
        return (2.0 * self.mass(w) / stable_tail_constant(self.alpha)) ** (1.0 / self.alpha)


FieldModel = BoundaryField | ShiftField | ParetoField | MixedMovingAverage


def _check_model(d: int, alpha: float):
    if d < 2:
        raise ValueError("rank must be >= 2")
    if not 0.0 < alpha < 2.0:
        raise ValueError("alpha must lie in (0, 2)")


def mma_point_mass(d: int, alpha: float, value: float = 1.0, mass: float = 1.0) -> MixedMovingAverage:
    """The one-atom kernel f = value * 1_{t=e}: iid SaS noise site by site."""
    return MixedMovingAverage.from_tables(
        d, alpha, {"w0": mass}, {"w0": {identity(d): value}}
    )


def mma_from_levels(d: int, alpha: float, levels: dict, mass: float = 1.0) -> MixedMovingAverage:
    """Level-symmetric kernel f(t) = levels[|t|] (absent levels are 0)."""
    m = max(levels) if levels else 0
    tab = {}
    for t in enumerate_ball(d, m):
        v = levels.get(len(t), 0.0)
        if v != 0.0:
            tab[t] = v
    return MixedMovingAverage.from_tables(d, alpha, {"w0": mass}, {"w0": tab})


# ---------------------------------------------------------------------------
# Norming constants (alpha-th powers)
# ---------------------------------------------------------------------------

@dataclass
class EstimateCI:
    value: float
    ci_low: float
    ci_high: float
    reps: int


def norming_constant_exact(model: FieldModel, n: int):
    """The alpha-th power of the ball-maximum norming constant, exactly.

    BoundaryField: (2d-1)^n.  ShiftField: 2n+1 (Lebesgue measure of the
    interval swept by the shifted unit cell).  MixedMovingAverage: the
    finite sum over noise sites of the max kernel value over the ball,
    enumerated exactly.  ParetoField has no closed form; use
    :func:`norming_constant_mc`.
    """
    if isinstance(model, BoundaryField):
        return (2 * model.d - 1) ** n
    if isinstance(model, ShiftField):
        return 2 * n + 1
    if isinstance(model, MixedMovingAverage):
        m = model.support_radius
        if ball_size(model.d, n + m) > DEFAULT_SITE_BUDGET:
            raise ResourceBudgetError("noise ball too large for exact enumeration")
        alpha = model.alpha
        total = 0.0
        for w in model.atoms:
            tab = model.table(w)
            mass = model.mass(w)
            acc = 0.0
            for u in enumerate_ball(model.d, n + m):
                best = 0.0
                for v, val in tab.items():
                    # t = u v^-1 must lie in E_n for f(w, t^-1 u) = f(w, v)
                    if len(multiply(u, v.inverse())) <= n:
                        best = max(best, abs(val) ** alpha)
                acc += best
            total += mass * acc
        return total
    raise UnsupportedModelError(
        "no closed form for this model; use norming_constant_mc"
    )


def norming_constant_mc(model: FieldModel, n: int, reps: int, rng: np.random.Generator) -> EstimateCI:
    """Monte Carlo estimate of the alpha-th power of the norming constant.

    For the Pareto field this is E[max of |E_n| iid Pareto(theta)^alpha];
    the CI comes from batch means.
    """
    if reps < 2:
        raise ValueError("need at least 2 replications")
    if not isinstance(model, ParetoField):
        raise UnsupportedModelError("Monte Carlo norming implemented for ParetoField")
    size = ball_size(model.d, n)
    vals = np.empty(reps)
    chunk = max(1, min(reps, 20_000_000 // max(size, 1)))
    done = 0
    while done < reps:
        b = min(chunk, reps - done)
        u = rng.random((b, size))
        m = u.min(axis=1) ** (-1.0 / model.theta)  # max of Pareto = min-uniform power
        vals[done : done + b] = m**model.alpha
        done += b
    from .stats import batch_mean_ci

    mean, lo, hi = batch_mean_ci(vals)
    return EstimateCI(value=mean, ci_low=lo, ci_high=hi, reps=reps)


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------

@dataclass
class FieldSample:
    """Field values over the ball E_n in canonical enumeration order."""

    model: FieldModel
    n: int
    values: np.ndarray
    depths: np.ndarray
    meta: dict = field(default_factory=dict)

    def word_values(self):
        """Iterate (Word, value) pairs in canonical order."""
        d = self.model.d
        for w, v in zip(enumerate_ball(d, self.n), self.values):
            yield w, float(v)


def partial_maximum(sample: FieldSample) -> float:
    """max_{t in E_n} |X_t|."""
    return float(np.max(np.abs(sample.values)))


def boundary_maximum(sample: FieldSample) -> float:
    """max over the interior boundary sphere C_n only; never exceeds the ball max."""
    mask = sample.depths == sample.n
    return float(np.max(np.abs(sample.values[mask])))


def _boundary_second_moment(d: int, alpha: float, n: int) -> float:
    """max_{|t| <= n} E[(2d-1)^(-2 B_omega(t)/alpha)] under the boundary measure."""
    rho = (2 * d - 1) ** (2.0 / alpha)
    best = 1.0
    for m in range(1, n + 1):
        # P(confluent >= j) = (2d)^-1 (2d-1)^-(j-1)
        acc = (1.0 - 1.0 / (2 * d)) * rho ** (-m)
        for j in range(1, m):
            pj = (1.0 / (2 * d)) * (2 * d - 1) ** (-(j - 1)) * (1.0 - 1.0 / (2 * d - 1))
            acc += pj * rho ** (2 * j - m)
        acc += (1.0 / (2 * d)) * (2 * d - 1) ** (-(m - 1)) * rho**m
        best = max(best, acc)
    return best


def resolve_num_terms(model: FieldModel, n: int, cfg: SeriesConfig | None) -> int | None:
    """Series length for the model, from the config or the remainder rule.

    Returns None for models simulated exactly (shift, mixed moving
    average).  The rule picks the smallest N whose analytic remainder
    bound is below tail_tolerance times the natural scale (2d-1)^(n/alpha).
    """
    cfg = cfg or SeriesConfig()
    if isinstance(model, (ShiftField, MixedMovingAverage)):
        return None
    if cfg.num_terms is not None:
        return int(cfg.num_terms)
    scale = (2 * model.d - 1) ** (n / model.alpha)
    if isinstance(model, BoundaryField):
        f_rms = math.sqrt(_boundary_second_moment(model.d, model.alpha, n))
        return choose_num_terms(model.alpha, f_rms, scale, tol=cfg.tail_tolerance)
    if isinstance(model, ParetoField):
        if model.theta <= 2.0:
            raise UnsupportedModelError(
                "automatic truncation needs theta > 2; set num_terms explicitly"
            )
        f_rms = math.sqrt(model.theta / (model.theta - 2.0))
        scale = ball_size(model.d, n) ** (1.0 / model.theta)
        return choose_num_terms(model.alpha, f_rms, scale, tol=cfg.tail_tolerance)
    raise UnsupportedModelError(f"unknown model {model!r}")


def _boundary_values(model: BoundaryField, n: int, num_terms: int, rng) -> np.ndarray:
    """One replication of the boundary field over E_n (canonical order).

    Shared rays: every site uses the same atoms (Gamma_i, eps_i, omega_i).
    Each ray contributes (2d-1)^(2 c / alpha) on the nested subtree ranges
    of its prefixes (c = confluent length), accumulated with a difference
    array; the canonical preorder makes every subtree one contiguous range.
    """
    d, alpha = model.d, model.alpha
    lay = ball_layout(d, n)
    N = num_terms
    gam = np.cumsum(rng.standard_exponential(N))
    eps = rng.integers(0, 2, size=N) * 2 - 1
    wts = eps * gam ** (-1.0 / alpha)

    acc = np.zeros(lay.size + 1)
    acc[0] += wts.sum()
    acc[lay.size] -= wts.sum()
    if n >= 1:
        q = (2 * d - 1) ** (2.0 / alpha)
        b = np.empty(N, dtype=np.int64)
        prev = rng.integers(0, 2 * d, size=N)
        b[:] = 1 + prev * lay.subtree[1]
        qj = 1.0
        for j in range(n):
            if j > 0:
                rr = rng.integers(0, 2 * d - 1, size=N)
                lr = rr + (rr >= (prev ^ 1))
                b += 1 + rr * lay.subtree[j + 1]
                prev = lr
            val = wts * (q ** (j + 1) - qj)
            qj = q ** (j + 1)
            np.add.at(acc, b, val)
            np.add.at(acc, b + lay.subtree[j + 1], -val)
    dsum = np.cumsum(acc[:-1])
    scale = (2.0 * d - 1.0) ** (-lay.depth / alpha)
    return stable_tail_constant(alpha) ** (1.0 / alpha) * dsum * scale


def _shift_values(model: ShiftField, n: int, rng) -> np.ndarray:
    lay = ball_layout(model.d, n)
    line = sample_sas(rng, model.alpha, 1.0, size=2 * n + 1)
    return line[lay.a1_exponent + n]


def _pareto_values(model: ParetoField, n: int, num_terms: int, rng) -> np.ndarray:
    d, alpha, theta = model.d, model.alpha, model.theta
    lay = ball_layout(d, n)
    acc = np.zeros(lay.size)
    chunk = max(1, 5_000_000 // max(lay.size, 1))
    offset = 0.0
    done = 0
    while done < num_terms:
        b = min(chunk, num_terms - done)
        gam = offset + np.cumsum(rng.standard_exponential(b))
        offset = float(gam[-1])
        eps = rng.integers(0, 2, size=b) * 2 - 1
        wts = eps * gam ** (-1.0 / alpha)
        pareto = rng.random((b, lay.size)) ** (-1.0 / theta)
        acc += wts @ pareto
        done += b
    return stable_tail_constant(alpha) ** (1.0 / alpha) * acc


class _MMAPlan:
    """Precomputed gather structure for exact mixed-moving-average simulation."""

    def __init__(self, model: MixedMovingAverage, n: int):
        d = model.d
        m = model.support_radius
        self.noise_ball = ball_size(d, n + m)
        lay = ball_layout(d, n + m)
        sites = list(enumerate_ball(d, n))
        self.parts = []
        for w in model.atoms:
            gathers = []
            for v, val in model.table(w).items():
                idx = np.fromiter(
                    (lay.word_to_index(multiply(t, v)) for t in sites),
                    dtype=np.int64,
                    count=len(sites),
                )
                gathers.append((val, idx))
            self.parts.append((model.noise_scale(w), gathers))


def _mma_values(model: MixedMovingAverage, n: int, plan: _MMAPlan, rng) -> np.ndarray:
    out = np.zeros(ball_size(model.d, n))
    for scale, gathers in plan.parts:
        z = sample_sas(rng, model.alpha, scale, size=plan.noise_ball)
        for val, idx in gathers:
            out += val * z[idx]
    return out


class FieldSimulator:
    """Reusable per-model simulation plan for repeated replications.

    Resolves the series length once and precomputes gather structures, so
    replication loops pay only the per-draw cost.
    """

    def __init__(
        self,
        model: FieldModel,
        n: int,
        cfg: SeriesConfig | None = None,
        site_budget: int = DEFAULT_SITE_BUDGET,
    ):
        cfg = cfg or SeriesConfig()
        extra = model.support_radius if isinstance(model, MixedMovingAverage) else 0
        if ball_size(model.d, n + extra) > site_budget:
            raise ResourceBudgetError(
                f"|E_{n + extra}| = {ball_size(model.d, n + extra)} exceeds "
                f"site budget {site_budget}"
            )
        self.model = model
        self.n = n
        self.cfg = cfg
        self.num_terms = resolve_num_terms(model, n, cfg)
        self._plan = _MMAPlan(model, n) if isinstance(model, MixedMovingAverage) else None
        self.meta = {"num_terms": self.num_terms}
        if isinstance(model, BoundaryField) and cfg.diagnostics:
            f_rms = math.sqrt(_boundary_second_moment(model.d, model.alpha, n))
            self.meta["remainder_bound"] = stable_tail_constant(model.alpha) ** (
                1.0 / model.alpha
            ) * lepage_remainder_bound(self.num_terms, model.alpha, f_rms)
        if isinstance(model, (ShiftField, MixedMovingAverage)):
            self.meta["exact"] = True

    def values(self, rng: np.random.Generator) -> np.ndarray:
        model, n = self.model, self.n
        if isinstance(model, BoundaryField):
            return _boundary_values(model, n, self.num_terms, rng)
        if isinstance(model, ShiftField):
            return _shift_values(model, n, rng)
        if isinstance(model, ParetoField):
            return _pareto_values(model, n, self.num_terms, rng)
        if isinstance(model, MixedMovingAverage):
            return _mma_values(model, n, self._plan, rng)
        raise UnsupportedModelError(f"unknown model {model!r}")

    def sample(self, rng: np.random.Generator) -> FieldSample:
        lay = ball_layout(self.model.d, self.n)
        return FieldSample(
            model=self.model,
            n=self.n,
            values=self.values(rng),
            depths=lay.depth,
            meta=dict(self.meta),
        )


def simulate_field(
    model: FieldModel,
    n: int,
    cfg: SeriesConfig | None,
    rng: np.random.Generator,
    site_budget: int = DEFAULT_SITE_BUDGET,
) -> FieldSample:
    """One replication of the field over E_n.

    Deterministic given (model, n, resolved series length, rng state);
    mixed moving averages and the shift field are exact, the others use
    the truncated series with the configured remainder rule.
    """
    return FieldSimulator(model, n, cfg, site_budget).sample(rng)


# ---------------------------------------------------------------------------
# Replicated maxima experiments
# ---------------------------------------------------------------------------

def scaling_constant(model: FieldModel, n: int) -> float:
    """The normalisation applied to M_n: (2d-1)^(n/alpha), or |E_n|^(1/theta)."""
    if isinstance(model, ParetoField):
        return ball_size(model.d, n) ** (1.0 / model.theta)
    return (2 * model.d - 1) ** (n / model.alpha)


def analytic_limit_cdf(model: FieldModel, n: int):
    """The known limit CDF of M_n / scale, when the model has one."""
    from .stable import scaled_frechet_cdf

    if isinstance(model, BoundaryField):
        c = stable_tail_constant(model.alpha)
        return lambda x: scaled_frechet_cdf(x, model.alpha, c)
    return None


@dataclass
class MaximaResult:
    n: int
    reps: int
    scale: float
    num_terms: int | None
    records: list  # (rep, ball max, sphere max, scaled ball max)
    quantiles: dict
    ecdf: list | None
    ks_distance: float | None
    elapsed_seconds: float

    @property
    def scaled(self) -> np.ndarray:
        return np.array([r[3] for r in self.records])


def _maxima_chunk(payload):
    model, n, cfg, seed, reps_slice = payload
    sim = FieldSimulator(model, n, cfg)
    depth = ball_layout(model.d, n).depth
    sphere = depth == n
    out = []
    for rep in reps_slice:
        rng = substream(seed, "maxima", rep)
        values = sim.values(rng)
        ball_max = float(np.max(np.abs(values)))
        sphere_max = float(np.max(np.abs(values[sphere])))
        out.append((rep, ball_max, sphere_max))
    return out


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("STABLETREE_WORKERS", "1")))
    except ValueError:
        return 1


def maxima_experiment(
    model: FieldModel,
    n: int,
    reps: int,
    cfg: SeriesConfig | None,
    seed: int,
    s_grid=None,
    limit_cdf=None,
    workers: int | None = None,
    site_budget: int = DEFAULT_SITE_BUDGET,
) -> MaximaResult:
    """Replicated partial maxima M_n with scaling, ECDF table and KS diagnostic.

    Replications are independent units on disjoint RNG streams keyed by
    (seed, rep); the result is identical for any worker count.
    """
    if reps < 2:
        raise ValueError("need at least 2 replications")
    extra = model.support_radius if isinstance(model, MixedMovingAverage) else 0
    if ball_size(model.d, n + extra) > site_budget:
        raise ResourceBudgetError("site budget exceeded; raise site_budget to override")
    t0 = time.monotonic()
    cfg = cfg or SeriesConfig()
    # resolve the series length once so every worker sees the same plan
    cfg = SeriesConfig(
        num_terms=resolve_num_terms(model, n, cfg),
        tail_tolerance=cfg.tail_tolerance,
        diagnostics=cfg.diagnostics,
    )
    num_terms = cfg.num_terms
    workers = default_workers() if workers is None else max(1, workers)
    rep_ids = list(range(reps))
    if workers == 1:
        raw = _maxima_chunk((model, n, cfg, seed, rep_ids))
    else:
        chunks = [(model, n, cfg, seed, rep_ids[i::workers]) for i in range(workers)]
        raw = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(_maxima_chunk, chunks):
                raw.extend(part)
        raw.sort(key=lambda r: r[0])
    scale = scaling_constant(model, n)
    records = [(rep, bm, sm, bm / scale) for rep, bm, sm in raw]
    scaled = np.array([r[3] for r in records])
    qs = {q: float(np.quantile(scaled, q)) for q in (0.1, 0.25, 0.5, 0.75, 0.9)}
    if limit_cdf is None:
        limit_cdf = analytic_limit_cdf(model, n)
    ecdf = None
    if s_grid is not None:
        from .stats import empirical_cdf_table

        ecdf = empirical_cdf_table(scaled, s_grid)
    ks = None
    if limit_cdf is not None:
        from .stats import ks_distance

        ks = ks_distance(scaled, limit_cdf)
    return MaximaResult(
        n=n,
        reps=reps,
        scale=scale,
        num_terms=num_terms,
        records=records,
        quantiles=qs,
        ecdf=ecdf,
        ks_distance=ks,
        elapsed_seconds=time.monotonic() - t0,
    )
