"""Monte-Carlo experiment engine: MSE, bias and sd of the estimators over grids.

A plan is a grid over (eps, n, L, gamma, pipeline). All gammas and pipelines
that share (eps, n, L) are evaluated on the same simulated data sets, one per
repetition, drawn from the stream ``make_rng(group_seed, rep)``. Outputs
therefore depend only on the master seed, never on scheduling.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import estimators, fourier, gft
from .errors import CellFailure, NumericalError, PlanError
from .mixtures import (
    MixtureSpec,
    ProductLaw,
    GammaShifted,
    Uniform,
    derive_seed,
    make_rng,
    sample_block_dependent,
)

PIPELINES = ("GEM", "GEV", "EPS_KNOWN", "EPS_PLUGIN")
ESTIMATORS = {
    "GEM": ("u0", "sigma0_sq"),
    "GEV": ("u0", "sigma0_sq", "eps"),
    "EPS_KNOWN": ("eps",),
    "EPS_PLUGIN": ("u0", "sigma0_sq", "eps"),
}
# a cell fails when more than this fraction of its repetitions raised
FAILURE_THRESHOLD = 0.05
CSV_FIELDS = ("n", "gamma", "L", "eps", "pipeline", "estimator", "mse", "bias", "sd", "reps")


@dataclass(frozen=True)
class ExperimentPlan:
    spec: MixtureSpec
    n_grid: tuple
    gamma_grid: tuple
    L_grid: tuple = (0,)
    reps: int = 100
    master_seed: int = 0
    pipelines: tuple = ("EPS_PLUGIN",)
    eps_grid: tuple | None = None
    name: str = "custom"

    def __post_init__(self):
        for attr in ("n_grid", "gamma_grid", "L_grid", "pipelines"):
            object.__setattr__(self, attr, tuple(getattr(self, attr)))
        if self.eps_grid is not None:
            object.__setattr__(self, "eps_grid", tuple(self.eps_grid))
        self.validate()

    def validate(self) -> None:
        if self.reps < 1:
            raise PlanError("reps must be >= 1")
        for attr in ("n_grid", "gamma_grid", "L_grid", "pipelines"):
            if not getattr(self, attr):
                raise PlanError(f"{attr} must be nonempty")
        if self.eps_grid is not None and not self.eps_grid:
            raise PlanError("eps_grid must be nonempty when given")
        if any(int(n) != n or n < 2 for n in self.n_grid):
            raise PlanError("every n must be an integer >= 2")
        if any(not g > 0 for g in self.gamma_grid):
            raise PlanError("every gamma must be > 0")
        if any(int(L) != L or L < 0 for L in self.L_grid):
            raise PlanError("every L must be a nonnegative integer")
        bad = [p for p in self.pipelines if p not in PIPELINES]
        if bad:
            raise PlanError(f"unknown pipelines {bad}; choose from {PIPELINES}")
        if any(not 0 <= e < 1 for e in self.epsilons):
            raise PlanError("every eps must lie in [0, 1)")

    @property
    def epsilons(self) -> tuple:
        return self.eps_grid if self.eps_grid is not None else (self.spec.eps,)

    def to_dict(self) -> dict:
        return {
            "n_grid": list(self.n_grid),
            "gamma_grid": list(self.gamma_grid),
            "L_grid": list(self.L_grid),
            "reps": self.reps,
            "master_seed": self.master_seed,
            "pipelines": list(self.pipelines),
            "eps_grid": None if self.eps_grid is None else list(self.eps_grid),
            "name": self.name,
        }

    @classmethod
    def from_dict(cls, d: dict, spec: MixtureSpec) -> "ExperimentPlan":
        allowed = {"n_grid", "gamma_grid", "L_grid", "reps", "master_seed", "pipelines",
                   "eps_grid", "name"}
        extra = set(d) - allowed
        if extra:
            raise PlanError(f"unknown keys in plan: {sorted(extra)}")
        return cls(spec=spec, **d)


@dataclass
class CellRecord:
    n: int
    gamma: float
    L: int
    eps: float
    pipeline: str
    estimator: str
    mse: float
    bias: float
    sd: float
    reps: int
    failures: int = 0
    estimates: tuple | None = None


@dataclass
class ExperimentResult:
    records: list
    seed: int
    plan_name: str = "custom"
    wall_time: float = 0.0
    metadata: dict = field(default_factory=dict)

    def select(self, **coords) -> list:
        return [r for r in self.records if all(getattr(r, k) == v for k, v in coords.items())]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_FIELDS)
        for r in self.records:
            writer.writerow([_fmt(getattr(r, f)) for f in CSV_FIELDS])
        return buf.getvalue()

    def to_json(self, include_timing: bool = False) -> str:
        doc = {
            "plan": self.plan_name,
            "seed": self.seed,
            "metadata": self.metadata,
            "records": [
                {f: getattr(r, f) for f in CSV_FIELDS + ("failures",)} for r in self.records
            ],
        }
        if include_timing:
            doc["wall_time"] = self.wall_time
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def resolve_threads(threads: int | None = None) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("NULLLAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise PlanError(f"NULLLAB_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


# --------------------------------------------------------------------------
# per-repetition evaluation


def _evaluate(x, spec, gammas, pipelines):
    """Estimates for every (gamma, pipeline) on one data set.

    Returns {(gamma_index, pipeline): dict estimator -> value, or None on failure}.
    """
    n = x.size
    need_gem = any(p != "GEV" for p in pipelines)
    out = {}
    for gi, gamma in enumerate(gammas):
        t = estimators.t_n(gamma, n)
        if need_gem:
            try:
                pair = gft.gchar(x, t)
            except NumericalError:
                pair = None
        for p in pipelines:
            try:
                if p == "GEV":
                    cpair = fourier.char(x, t)
                    u0, s2 = estimators.gev_from_pair(cpair)
                    s2 = max(s2, estimators.SIGMA_FLOOR)
                    eps = fourier.gev_eps_functional(cpair.value, t, u0, s2)
                    out[gi, p] = {"u0": u0, "sigma0_sq": s2, "eps": eps}
                    continue
                if pair is None:
                    out[gi, p] = None
                    continue
                if p == "EPS_KNOWN":
                    eps = gft.eps_functional(pair.value, t, spec.u0, spec.sigma0_sq)
                    out[gi, p] = {"eps": eps}
                    continue
                u0, s2 = estimators.gem_from_pair(pair)
                s2 = max(s2, estimators.SIGMA_FLOOR)
                if p == "GEM":
                    out[gi, p] = {"u0": u0, "sigma0_sq": s2}
                else:
                    eps = gft.eps_functional(pair.value, t, u0, s2)
                    out[gi, p] = {"u0": u0, "sigma0_sq": s2, "eps": eps}
            except NumericalError:
                out[gi, p] = None
    return out


def _summarize(values, truth):
    """(mse, bias, sd) with exactly rounded sums in repetition order."""
    reps = len(values)
    mean = math.fsum(values) / reps
    mse = math.fsum((v - truth) ** 2 for v in values) / reps
    sd = math.sqrt(math.fsum((v - mean) ** 2 for v in values) / (reps - 1)) if reps > 1 else 0.0
    return mse, mean - truth, sd


def run_group(spec, n, L, gammas, pipelines, reps, seed, keep_estimates=False):
    """All (gamma, pipeline) cells sharing one (spec, n, L) and one seed."""
    gammas, pipelines = tuple(gammas), tuple(pipelines)
    collected = {(gi, p): [] for gi in range(len(gammas)) for p in pipelines}
    for rep in range(reps):
        rng = make_rng(seed, rep)
        x = sample_block_dependent(spec, n, L, seed=seed, rng=rng).values
        for key, est in _evaluate(x, spec, gammas, pipelines).items():
            collected[key].append(est)

    truth = {"u0": spec.u0, "sigma0_sq": spec.sigma0_sq, "eps": spec.eps}
    records = []
    for gi, gamma in enumerate(gammas):
        for p in pipelines:
            ests = collected[gi, p]
            ok = [e for e in ests if e is not None]
            failures = reps - len(ok)
            if failures > FAILURE_THRESHOLD * reps or not ok:
                raise CellFailure(
                    f"{failures}/{reps} repetitions failed in cell eps={spec.eps} n={n} "
                    f"L={L} gamma={gamma} pipeline={p}",
                    coords={"eps": spec.eps, "n": n, "L": L, "gamma": gamma, "pipeline": p},
                )
            for name in ESTIMATORS[p]:
                vals = [e[name] for e in ok]
                mse, bias, sd = _summarize(vals, truth[name])
                records.append(CellRecord(
                    n=int(n), gamma=float(gamma), L=int(L), eps=float(spec.eps),
                    pipeline=p, estimator=name, mse=mse, bias=bias, sd=sd,
                    reps=len(vals), failures=failures,
                    estimates=tuple(vals) if keep_estimates else None,
                ))
    return records


def run_cell(spec, n, gamma, L, reps, seed, pipeline, keep_estimates=False) -> list:
    """One (n, gamma, L, pipeline) cell; one record per estimator of the pipeline."""
    if pipeline not in PIPELINES:
        raise PlanError(f"unknown pipeline {pipeline!r}")
    if reps < 1:
        raise PlanError("reps must be >= 1")
    return run_group(spec, n, L, (gamma,), (pipeline,), reps, seed, keep_estimates)


def group_seed(master_seed: int, eps_index: int, n: int, L: int) -> int:
    return derive_seed(master_seed, eps_index, n, L)


def run_plan(plan: ExperimentPlan, threads: int | None = None,
             keep_estimates: bool = False) -> ExperimentResult:
    plan.validate()
    start = time.perf_counter()
    groups = [
        (plan.spec.with_eps(eps), int(n), int(L), group_seed(plan.master_seed, ei, int(n), int(L)))
        for ei, eps in enumerate(plan.epsilons)
        for n in plan.n_grid
        for L in plan.L_grid
    ]

    def work(g):
        spec, n, L, seed = g
        return run_group(spec, n, L, plan.gamma_grid, plan.pipelines, plan.reps, seed,
                         keep_estimates)

    workers = min(resolve_threads(threads), len(groups))
    if workers == 1:
        chunks = [work(g) for g in groups]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(work, groups))
    records = [r for chunk in chunks for r in chunk]
    return ExperimentResult(
        records=records,
        seed=plan.master_seed,
        plan_name=plan.name,
        wall_time=time.perf_counter() - start,
        metadata={
            "failure_threshold": FAILURE_THRESHOLD,
            "reps": plan.reps,
            "A": plan.spec.A,
            "A_from_quantile": plan.spec.A_from_quantile,
            "model": plan.spec.to_dict(),
        },
    )


def min_mse_gamma(result: ExperimentResult) -> dict:
    """{(eps, n, L, pipeline, estimator): gamma with the smallest MSE}."""
    best = {}
    for r in result.records:
        key = (r.eps, r.n, r.L, r.pipeline, r.estimator)
        if key not in best or r.mse < best[key].mse:
            best[key] = r
    return {k: v.gamma for k, v in best.items()}


def summarize(result: ExperimentResult) -> str:
    lines = [f"plan {result.plan_name}: {len(result.records)} records, seed {result.seed}, "
             f"{result.wall_time:.1f}s"]
    gammas = {r.gamma for r in result.records}
    if len(gammas) > 1:
        lines.append("min-MSE gamma per (eps, n, L, pipeline, estimator):")
        for (eps, n, L, p, est), g in min_mse_gamma(result).items():
            lines.append(f"  eps={eps:g} n={n} L={L} {p}/{est}: gamma={g:.4g}")
    else:
        lines.append("MSE per cell:")
        for r in result.records:
            lines.append(f"  eps={r.eps:g} n={r.n} L={r.L} {r.pipeline}/{r.estimator}: "
                         f"mse={r.mse:.4g} bias={r.bias:+.3g} sd={r.sd:.3g}")
    return "\n".join(lines)


# --------------------------------------------------------------------------
# built-in plans


def _gamma_sweep() -> tuple:
    return tuple(float(np.round(g, 10)) for g in np.linspace(0.01, 0.5, 20))


def example_spec(eps: float = 0.05) -> MixtureSpec:
    """Null N(-1, 1); non-null u ~ Uniform(1, 2), sigma ~ Uniform(0.5, 1.5)."""
    return MixtureSpec(-1.0, 1.0, eps, ProductLaw(Uniform(1.0, 2.0), Uniform(0.5, 1.5)))


def builtin_plans(master_seed: int = 0) -> dict:
    sweep = _gamma_sweep()
    base = example_spec()
    return {
        "example1": ExperimentPlan(
            spec=base, n_grid=(50_000,), gamma_grid=sweep,
            eps_grid=(0.025, 0.05, 0.075, 0.1, 0.2),
            master_seed=master_seed, name="example1",
        ),
        "example2a": ExperimentPlan(
            spec=MixtureSpec(-1.0, 1.0, 0.05,
                             ProductLaw(GammaShifted(10, 0.25, shift=-1.0), Uniform(0.5, 1.5))),
            n_grid=(50_000,), gamma_grid=sweep, master_seed=master_seed, name="example2a",
        ),
        "example2b": ExperimentPlan(
            spec=MixtureSpec(-1.0, 1.0, 0.05,
                             ProductLaw(Uniform(1.0, 2.0), GammaShifted(10, 0.1))),
            n_grid=(50_000,), gamma_grid=sweep, master_seed=master_seed, name="example2b",
        ),
        "example3": ExperimentPlan(
            spec=base, n_grid=(10_000, 30_000, 50_000, 80_000, 100_000), gamma_grid=(0.2,),
            master_seed=master_seed, name="example3",
        ),
        "example4": ExperimentPlan(
            spec=base, n_grid=(50_000,), gamma_grid=(0.2,),
            L_grid=tuple(range(1, 251, 10)) + (250,),
            master_seed=master_seed, name="example4",
        ),
    }
