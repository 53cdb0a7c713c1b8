"""Experiment configuration, dispatch, result emission, and self-tests.

Every experiment is a pure function of (config, seed): the config is
validated up front, echoed verbatim into the result for provenance, and
the record payload is reproducible bit for bit for a fixed seed and any
worker count.  Results are written as a CSV of per-replication records
plus a JSON summary.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, UnsupportedModelError
from .free_group import parse_word
from .fields import (
    BoundaryField,
    MixedMovingAverage,
    ParetoField,
    SeriesConfig,
    ShiftField,
    maxima_experiment,
    mma_point_mass,
    scaling_constant,
    FieldSimulator,
)
from .rng import substream

EXPERIMENT_KINDS = ("maxima", "pp", "limit-kx", "limit-laplace", "limit-sample")

_MODEL_KEYS = {
    "boundary": {"required": {"d", "alpha"}, "optional": set()},
    "shift": {"required": {"d", "alpha"}, "optional": set()},
    "pareto": {"required": {"d", "alpha", "theta"}, "optional": set()},
    "mma": {"required": {"d", "alpha"}, "optional": {"w_masses", "f_table", "point_mass"}},
}


@dataclass
class ExperimentConfig:
    kind: str
    model: dict
    n: int = 0
    reps: int = 0
    seed: int = 0
    params: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)

    def to_jsonable(self) -> dict:
        return {
            "kind": self.kind,
            "model": self.model,
            "n": self.n,
            "reps": self.reps,
            "seed": self.seed,
            "params": self.params,
            "tolerances": self.tolerances,
        }


@dataclass
class ExperimentResult:
    config: dict
    columns: list
    records: list
    summary: dict
    passed: bool | None
    diagnostics: dict

    def write_csv(self, path):
        with open(path, "w", newline="", encoding="utf8") as fh:
            w = csv.writer(fh)
            w.writerow(self.columns)
            for row in self.records:
                w.writerow(row)

    def write_json(self, path):
        payload = {
            "config": self.config,
            "summary": self.summary,
            "passed": self.passed,
            "diagnostics": self.diagnostics,
        }
        with open(path, "w", encoding="utf8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


def build_model(spec: dict):
    if "variant" not in spec:
        raise ConfigError("model.variant missing", ["model.variant"])
    variant = spec["variant"]
    if variant not in _MODEL_KEYS:
        raise ConfigError(f"unknown model variant {variant!r}", ["model.variant"])
    keys = set(spec) - {"variant"}
    schema = _MODEL_KEYS[variant]
    missing = schema["required"] - keys
    extra = keys - schema["required"] - schema["optional"]
    if missing or extra:
        raise ConfigError(
            f"bad keys for model {variant}: missing {sorted(missing)}, unknown {sorted(extra)}",
            [f"model.{k}" for k in sorted(missing | extra)],
        )
    d = int(spec["d"])
    alpha = float(spec["alpha"])
    if variant == "boundary":
        return BoundaryField(d, alpha)
    if variant == "shift":
        return ShiftField(d, alpha)
    if variant == "pareto":
        return ParetoField(d, alpha, float(spec["theta"]))
    if spec.get("point_mass") or ("f_table" not in spec):
        return mma_point_mass(d, alpha)
    masses = {str(k): float(v) for k, v in spec["w_masses"].items()}
    tables = {
        str(w): {parse_word(d, t): float(v) for t, v in tab.items()}
        for w, tab in spec["f_table"].items()
    }
    return MixedMovingAverage.from_tables(d, alpha, masses, tables)


def load_f_table_file(path, d: int):
    """JSON kernel file: {"w_masses": {name: mass}, "f_table": {name: {word: value}}}."""
    with open(path, "r", encoding="utf8") as fh:
        data = json.load(fh)
    for key in ("w_masses", "f_table"):
        if key not in data:
            raise ConfigError(f"kernel file missing {key!r}", [key])
    return data["w_masses"], data["f_table"]


def validate_config(cfg: ExperimentConfig):
    bad = []
    if cfg.kind not in EXPERIMENT_KINDS:
        bad.append("kind")
    if cfg.kind in ("maxima", "pp") and cfg.n < 0:
        bad.append("n")
    if cfg.kind in ("maxima", "pp", "limit-laplace") and cfg.reps < 1:
        bad.append("reps")
    if not isinstance(cfg.seed, int):
        bad.append("seed")
    if bad:
        raise ConfigError(f"invalid configuration keys: {sorted(bad)}", bad)
    build_model(cfg.model)  # raises ConfigError on bad model blocks


def run(cfg: ExperimentConfig) -> ExperimentResult:
    """Validate, dispatch, and collect one experiment."""
    validate_config(cfg)
    model = build_model(cfg.model)
    t0 = time.monotonic()
    if cfg.kind == "maxima":
        result = _run_maxima(cfg, model)
        role = "maxima"
    elif cfg.kind == "pp":
        result = _run_pp(cfg, model)
        role = "pp"
    elif cfg.kind == "limit-kx":
        result = _run_limit_kx(cfg, model)
        role = "xi"
    elif cfg.kind == "limit-laplace":
        result = _run_limit_laplace(cfg, model)
        role = "laplace"
    else:
        result = _run_limit_sample(cfg, model)
        role = "nstar"
    result.diagnostics["wall_seconds"] = time.monotonic() - t0
    result.diagnostics["rng_streams"] = f"philox(seed={cfg.seed}, role={role!r}, rep)"
    return result


def _series_cfg(cfg: ExperimentConfig) -> SeriesConfig:
    return SeriesConfig(
        num_terms=cfg.params.get("num_terms"),
        tail_tolerance=float(cfg.params.get("tail_tolerance", 1e-3)),
    )


def _run_maxima(cfg: ExperimentConfig, model) -> ExperimentResult:
    s_grid = cfg.params.get("s_grid")
    res = maxima_experiment(
        model,
        cfg.n,
        cfg.reps,
        _series_cfg(cfg),
        cfg.seed,
        s_grid=s_grid,
        workers=cfg.params.get("workers"),
    )
    records = [(rep, bm, sm, sc) for rep, bm, sm, sc in res.records]
    summary = {
        "scale": res.scale,
        "num_terms": res.num_terms,
        "quantiles": {str(k): v for k, v in res.quantiles.items()},
        "ks_distance": res.ks_distance,
        "ecdf": res.ecdf,
    }
    passed = None
    tol = cfg.tolerances.get("ks")
    if tol is not None and res.ks_distance is not None:
        passed = bool(res.ks_distance <= float(tol))
    return ExperimentResult(
        config=cfg.to_jsonable(),
        columns=["rep", "ball_max", "sphere_max", "scaled_ball_max"],
        records=records,
        summary=summary,
        passed=passed,
        diagnostics={"elapsed_seconds": res.elapsed_seconds},
    )


def _run_pp(cfg: ExperimentConfig, model) -> ExperimentResult:
    delta = float(cfg.params.get("delta", 0.5))
    sim = FieldSimulator(model, cfg.n, _series_cfg(cfg))
    scale = scaling_constant(model, cfg.n)
    records = []
    counts = []
    for rep in range(cfg.reps):
        values = sim.values(substream(cfg.seed, "pp", rep)) / scale
        atoms = values[np.abs(values) > delta]
        counts.append(len(atoms))
        records.extend((rep, float(a)) for a in np.sort(atoms)[::-1])
    summary = {
        "delta": delta,
        "scale": scale,
        "mean_atoms": float(np.mean(counts)),
        "max_atoms": int(max(counts)),
    }
    return ExperimentResult(
        config=cfg.to_jsonable(),
        columns=["rep", "scaled_atom"],
        records=records,
        summary=summary,
        passed=None,
        diagnostics={},
    )


def _run_limit_kx(cfg: ExperimentConfig, model) -> ExperimentResult:
    from .limit_process import maxima_constant_comparison

    if not isinstance(model, MixedMovingAverage):
        raise UnsupportedModelError("limit experiments need a mixed moving average")
    comp = maxima_constant_comparison(
        model, mc_subgraphs=int(cfg.params.get("mc_subgraphs", 4000)), seed=cfg.seed
    )
    return ExperimentResult(
        config=cfg.to_jsonable(),
        columns=["key", "value"],
        records=sorted((k, v) for k, v in comp.items() if not isinstance(v, list)),
        summary=comp,
        passed=None,
        diagnostics={},
    )


def _run_limit_laplace(cfg: ExperimentConfig, model) -> ExperimentResult:
    from .limit_process import PiecewiseConstant, empirical_laplace, laplace_functional

    if not isinstance(model, MixedMovingAverage):
        raise UnsupportedModelError("limit experiments need a mixed moving average")
    theta = float(cfg.params.get("theta", 1.0))
    s = float(cfg.params.get("threshold", 1.0))
    g = PiecewiseConstant.threshold(theta, s)
    ana = laplace_functional(
        model, g, mc_subgraphs=int(cfg.params.get("mc_subgraphs", 4000)), seed=cfg.seed
    )
    emp = None
    if cfg.n > 0:
        emp = empirical_laplace(model, g, cfg.n, cfg.reps, cfg.seed)
    summary = {
        "analytic": ana.value,
        "analytic_ci": [ana.ci_low, ana.ci_high],
        "level_symmetric": ana.level_symmetric_value,
        "empirical": emp,
        "exact_level_integrals": ana.exact,
    }
    passed = None
    tol = cfg.tolerances.get("laplace")
    if tol is not None and emp is not None:
        passed = bool(abs(emp - ana.value) <= float(tol))
    return ExperimentResult(
        config=cfg.to_jsonable(),
        columns=["key", "value"],
        records=[(k, v) for k, v in summary.items() if isinstance(v, (int, float))],
        summary=summary,
        passed=passed,
        diagnostics={},
    )


def _run_limit_sample(cfg: ExperimentConfig, model) -> ExperimentResult:
    from .limit_process import sample_limit_point_process

    if not isinstance(model, MixedMovingAverage):
        raise UnsupportedModelError("limit experiments need a mixed moving average")
    delta = float(cfg.params.get("delta", 0.5))
    reps = max(1, cfg.reps)
    records = []
    counts = []
    for rep in range(reps):
        pm = sample_limit_point_process(model, delta, substream(cfg.seed, "nstar", rep))
        counts.append(len(pm))
        records.extend((rep, float(a)) for a in np.sort(pm.atoms)[::-1])
    summary = {"delta": delta, "mean_atoms": float(np.mean(counts))}
    return ExperimentResult(
        config=cfg.to_jsonable(),
        columns=["rep", "atom"],
        records=records,
        summary=summary,
        passed=None,
        diagnostics={},
    )


# ---------------------------------------------------------------------------
# Self-tests: quick oracle suites per module
# ---------------------------------------------------------------------------

def selftest(scope: str = "all") -> dict:
    """Machine-readable pass/fail for the per-module oracle checks."""
    scopes = ("combinatorics", "boundary", "stable", "subgraphs", "all")
    if scope not in scopes:
        raise ConfigError(f"scope must be one of {scopes}", ["scope"])
    checks = []
    if scope in ("combinatorics", "all"):
        checks.extend(_selftest_combinatorics())
    if scope in ("boundary", "all"):
        checks.extend(_selftest_boundary())
    if scope in ("stable", "all"):
        checks.extend(_selftest_stable())
    if scope in ("subgraphs", "all"):
        checks.extend(_selftest_subgraphs())
    return {
        "scope": scope,
        "passed": all(c["passed"] for c in checks),
        "checks": checks,
    }


def _check(name, passed, detail=""):
    return {"name": name, "passed": bool(passed), "detail": str(detail)}


def _selftest_combinatorics():
    from .free_group import ball_size, enumerate_ball, enumerate_sphere, sphere_size

    out = []
    ok = True
    for d in (2, 3):
        for n in range(0, 5):
            ok &= sum(1 for _ in enumerate_ball(d, n)) == ball_size(d, n)
            ok &= sum(1 for _ in enumerate_sphere(d, n)) == sphere_size(d, n)
    out.append(_check("ball and sphere counts match closed forms", ok))
    ok = all(
        (2 * d - 1) ** n <= ball_size(d, n) <= d * (2 * d - 1) ** n / (d - 1)
        for d in (2, 3)
        for n in range(0, 12)
    )
    out.append(_check("ball size within the geometric envelope", ok))
    return out


def _selftest_boundary():
    from fractions import Fraction

    from .boundary import CylinderSet, rn_derivative, sample_boundary, verify_weakly_wandering
    from .free_group import Word, multiply

    out = []
    full = CylinderSet.full(2)
    out.append(_check("level-1 cylinders tile the boundary", full.measure == 1))
    rng = substream(7, "selftest-boundary")
    ok = True
    for _ in range(200):
        omega = sample_boundary(2, 12, rng)
        u = Word(2, tuple(omega.letters[:2]))
        v = Word(2, (2,)) if u.letters[0] != -2 else Word(2, (1,))
        lhs = rn_derivative(multiply(u, v), omega)
        from .boundary import act_on_boundary

        rhs = rn_derivative(u, omega) * rn_derivative(v, act_on_boundary(u, omega))
        ok &= lhs == rhs and isinstance(lhs, Fraction)
    out.append(_check("cocycle identity for the derivative (exact rationals)", ok))
    rep = verify_weakly_wandering(2, 8)
    deficits = [1 - c for c in rep.covered_by_cap]
    shrinking = all(b < a for a, b in zip(deficits[1:], deficits[2:]))
    out.append(
        _check(
            "weakly wandering family disjoint with vanishing deficit",
            rep.pairwise_disjoint and shrinking and rep.deficit < Fraction(1, 7),
            f"deficit={rep.deficit}",
        )
    )
    return out


def _selftest_stable():
    from .stable import (
        sample_sas,
        stable_tail_constant,
        stable_tail_constant_quadrature,
    )

    out = []
    worst = max(
        abs(stable_tail_constant(a) - stable_tail_constant_quadrature(a))
        for a in (0.4, 0.8, 1.0, 1.2, 1.6)
    )
    out.append(
        _check("tail constant: closed form vs quadrature", worst < 1e-8, f"max err {worst:.2e}")
    )
    rng = substream(11, "selftest-stable")
    x = sample_sas(rng, 1.0, 1.0, size=200_000)
    med = float(np.median(np.abs(x)))
    out.append(_check("Cauchy median of |X| near 1", abs(med - 1.0) < 0.02, f"median {med:.4f}"))
    return out


def _selftest_subgraphs():
    from fractions import Fraction

    from .subgraphs import anchor_pmf, anchor_pmf_tail, sample_ray_path, subgraph_sphere_count
    from .subgraphs import count_sphere_members

    out = []
    total = sum(anchor_pmf(-j, 2) for j in range(0, 40)) + anchor_pmf_tail(-40, 2)
    out.append(_check("anchor pmf sums to 1 exactly", total == Fraction(1)))
    rng = substream(13, "selftest-subgraphs")
    ok = True
    for level in (1, 2):
        for k in range(0, 5):
            path = sample_ray_path(level, 2, (level + k) + 2 * level + 2, rng)
            got = count_sphere_members(path, level + k)
            ok &= got == subgraph_sphere_count(level, k, 2)
    out.append(_check("sphere counts match the closed form", ok))
    return out
