"""Monte Carlo size and power study for the dominance test.

Lifetimes are gamma distributed and censoring times exponential, with the
censoring rate of each group calibrated from a quantile of that group's
lifetime distribution.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dominance import DominanceConfig, DominanceResult, dominance_test
from .estimators import SurvivalSample
from .numerics import RngStream, gamma_quantile, sample_exponential, sample_gamma

__all__ = [
    "CENSOR_TARGETS",
    "Scenario",
    "GAMMA_CASES",
    "censoring_rate_param",
    "draw_samples",
    "run_replication",
    "CellResult",
    "RejectionTable",
    "rejection_table",
    "TableBuildError",
]

logger = logging.getLogger(__name__)

CENSOR_TARGETS = ("P20", "P50")
MAX_ERROR_FRACTION = 0.01


class TableBuildError(RuntimeError):
    pass


@dataclass(frozen=True)
class Scenario:
    """One simulation cell: two gamma lifetime laws, a censoring target and n."""

    label: str
    shape_t: float
    scale_t: float
    shape_u: float
    scale_u: float
    censor: str = "P20"
    n: int = 100

    def __post_init__(self):
        for name in ("shape_t", "scale_t", "shape_u", "scale_u"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.censor not in CENSOR_TARGETS:
            raise ValueError(f"censor must be one of {CENSOR_TARGETS}, got {self.censor!r}")
        if int(self.n) != self.n or self.n < 2:
            raise ValueError("n must be an integer >= 2")

    def with_(self, **changes) -> "Scenario":
        params = dict(self.__dict__)
        params.update(changes)
        return Scenario(**params)

    @property
    def rate_t(self) -> float:
        return censoring_rate_param(self.shape_t, self.scale_t, self.censor)

    @property
    def rate_u(self) -> float:
        return censoring_rate_param(self.shape_u, self.scale_u, self.censor)


# (shape, scale) pairs of the four reference designs
GAMMA_CASES = {
    "Case1": Scenario("Case1", 2.0, 1.0, 3.0, 1.0),
    "Case2": Scenario("Case2", 2.0, 1.0, 2.2, 1.0),
    "Case3": Scenario("Case3", 3.0, 5.0, 6.0, 2.0),
    "Case4": Scenario("Case4", 2.0, 2.0, 3.0, 1.0),
}


def censoring_rate_param(shape: float, scale: float, target: str) -> float:
    """Exponential censoring rate for a Gamma(shape, scale) lifetime.

    ``P20`` gives ``-log(0.9) / q20`` and ``P50`` gives ``log(2) / q50``,
    ``qp`` being the p-quantile of the lifetime law.
    """
    if target == "P20":
        return -math.log(0.9) / gamma_quantile(shape, scale, 0.2)
    if target == "P50":
        return math.log(2.0) / gamma_quantile(shape, scale, 0.5)
    raise ValueError(f"censor target must be one of {CENSOR_TARGETS}, got {target!r}")


def draw_samples(scenario: Scenario, rng):
    """Censored samples for T and U (``n`` observations each)."""
    n = scenario.n
    out = []
    for label, shape, scale, rate in (
        ("T", scenario.shape_t, scenario.scale_t, scenario.rate_t),
        ("U", scenario.shape_u, scenario.scale_u, scenario.rate_u),
    ):
        life = sample_gamma(shape, scale, rng, size=n)
        cens = sample_exponential(rate, rng, size=n)
        out.append(SurvivalSample(np.minimum(life, cens), life <= cens, label=label))
    return tuple(out)


def run_replication(scenario: Scenario, config: DominanceConfig | None, rng) -> DominanceResult:
    """Draw one pair of samples and run the dominance test on it."""
    config = config or DominanceConfig()
    sample_t, sample_u = draw_samples(scenario, rng)
    result = dominance_test(sample_t, sample_u, config, rng=rng)
    result.diagnostics["censored_fraction"] = 1.0 - (
        sample_t.n_events + sample_u.n_events
    ) / (len(sample_t) + len(sample_u))
    return result


def _stream(base_seed, cell, rep):
    return RngStream(base_seed, (int(cell) << 32) | int(rep))


@dataclass
class CellResult:
    scenario: Scenario
    replications: int
    completed: int
    errors: int
    rejections: dict
    censored_fraction: float
    seed: int

    def rate(self, alpha) -> float:
        return self.rejections[alpha] / self.completed

    def std_error(self, alpha) -> float:
        p = self.rate(alpha)
        return math.sqrt(p * (1.0 - p) / self.completed)


@dataclass
class RejectionTable:
    cells: list
    alphas: tuple
    replications: int
    seed: int
    failures: list = field(default_factory=list)

    def cell(self, label, n=None, censor=None) -> CellResult:
        for c in self.cells:
            s = c.scenario
            if s.label == label and (n is None or s.n == n) and (censor is None or s.censor == censor):
                return c
        raise KeyError((label, n, censor))

    def to_rows(self):
        rows = []
        for c in self.cells:
            s = c.scenario
            row = {
                "label": s.label,
                "n": s.n,
                "censor": s.censor,
                "replications": c.completed,
                "errors": c.errors,
                "censored_fraction": round(c.censored_fraction, 4),
            }
            for a in self.alphas:
                row[f"rate_{a:g}"] = c.rate(a)
            rows.append(row)
        return rows

    def to_csv(self) -> str:
        rows = self.to_rows()
        header = list(rows[0]) if rows else ["label", "n", "censor"]
        lines = [",".join(header)]
        for r in rows:
            lines.append(",".join(_fmt(r[h]) for h in header))
        return "\n".join(lines) + "\n"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _run_one(args):
    scenario, config, seed, cell, rep = args
    rng = _stream(seed, cell, rep)
    try:
        res = run_replication(scenario, config, rng)
    except Exception as exc:  # recorded, cell fails only past the error budget
        return rep, None, f"{type(exc).__name__}: {exc}"
    return rep, (res.p_upper, res.diagnostics["censored_fraction"]), None


def rejection_table(
    scenarios,
    replications: int = 1000,
    base_seed: int = 0,
    alphas=(0.05, 0.01),
    config: DominanceConfig | None = None,
    n_jobs: int = 1,
) -> RejectionTable:
    """Rejection rates ``#{p_upper <= alpha} / R`` for every scenario.

    Replication ``r`` of the ``c``-th scenario uses the random stream keyed
    by ``(base_seed, c, r)``, so results do not depend on ``n_jobs``.
    """
    if replications < 50:
        raise ValueError("at least 50 replications per cell are required")
    scenarios = list(scenarios)
    alphas = tuple(float(a) for a in alphas)
    config = config or DominanceConfig()
    tasks = [
        (s, config, base_seed, ci, r) for ci, s in enumerate(scenarios) for r in range(replications)
    ]
    if n_jobs == 1:
        outcomes = map(_run_one, tasks)
    else:
        pool = ProcessPoolExecutor(max_workers=n_jobs)
        outcomes = pool.map(_run_one, tasks, chunksize=8)
    per_cell = [dict() for _ in scenarios]
    failures = []
    try:
        for (s, _, _, ci, _), (rep, value, err) in zip(tasks, outcomes):
            if err is not None:
                failures.append((s.label, s.n, s.censor, rep, err))
                logger.warning("replication %d of %s failed: %s", rep, s.label, err)
            else:
                per_cell[ci][rep] = value
    finally:
        if n_jobs != 1:
            pool.shutdown()

    cells = []
    for ci, s in enumerate(scenarios):
        done = per_cell[ci]
        n_err = replications - len(done)
        if n_err > MAX_ERROR_FRACTION * replications:
            raise TableBuildError(
                f"{n_err} of {replications} replications failed for {s.label} n={s.n} {s.censor}"
            )
        pvals = np.array([done[r][0] for r in sorted(done)])
        cens = np.array([done[r][1] for r in sorted(done)])
        cells.append(
            CellResult(
                scenario=s,
                replications=replications,
                completed=len(done),
                errors=n_err,
                rejections={a: int(np.count_nonzero(pvals <= a)) for a in alphas},
                censored_fraction=float(cens.mean()),
                seed=base_seed,
            )
        )
    return RejectionTable(
        cells=cells, alphas=alphas, replications=replications, seed=base_seed, failures=failures
    )
