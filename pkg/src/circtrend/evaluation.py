"""Prediction error, train/test splits, residuals and Monte Carlo tables."""

from concurrent.futures import ProcessPoolExecutor
import csv
from dataclasses import dataclass, field
import io
import math
import os
import time

import numpy as np

from .bandwidth import (BandwidthSearchSpace, Criterion, _argmin_tiebreak,
                        criterion_table, default_init_H, risk_terms)
from .circular import signed_residual
from .estimators import SurfaceFit
from .kernels import KernelSpec
from .spatial import (Exponential, ProjectedGPSpec, RationalQuadratic, WrappedGPSpec,
                      generate_sample, replicate_rng)

__all__ = [
    "SplitSpec",
    "MonteCarloPlan",
    "MonteCarloResult",
    "prediction_error",
    "train_test_split",
    "residual_table",
    "run_monte_carlo",
    "selector_criterion",
    "worker_count",
]


def prediction_error(test_thetas, predictions):
    """Sum (not mean) of angular risks; undefined predictions count 2 each."""
    return float(np.sum(risk_terms(test_thetas, predictions)))


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie strictly between 0 and 1")


def train_test_split(sample, split, rng=None):
    """Random partition into training and test samples.

    The training size is ``train_fraction * n`` rounded half up.  Returns
    ``(train, test, train_idx, test_idx)``; index arrays are sorted.
    """
    n = sample.n
    n_train = int(math.floor(split.train_fraction * n + 0.5))
    if n < 2 or n_train < 1 or n_train >= n:
        raise ValueError(f"fraction {split.train_fraction} leaves an empty part for n={n}")
    if rng is None:
        rng = np.random.default_rng(split.seed)
    perm = rng.permutation(n)
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    return sample.subset(train_idx), sample.subset(test_idx), train_idx, test_idx


def residual_table(sample, fits):
    """Signed residuals ``theta - m_hat`` in (-pi, pi]; NaN marks undefined fits."""
    if isinstance(fits, SurfaceFit):
        m_hat = fits.m_hat
    else:
        m_hat = np.array([f.m_hat if f.defined else np.nan for f in fits], dtype=float)
    if len(m_hat) != sample.n:
        raise ValueError(f"length mismatch: {sample.n} observations, {len(m_hat)} fits")
    out = np.full(sample.n, np.nan)
    ok = ~np.isnan(m_hat)
    out[ok] = signed_residual(sample.theta[ok], m_hat[ok])
    return out


def selector_criterion(name, truth=None):
    """Criterion for a selector label: ``CV``, ``MCV<b>`` or ``CASE``."""
    key = name.upper()
    if key == "CV":
        return Criterion.cv()
    if key.startswith("MCV"):
        return Criterion.mcv_b(int(key[3:]))
    if key == "CASE":
        return Criterion.case_oracle(truth)
    raise ValueError(f"unknown selector {name!r}")


def worker_count(requested=None):
    if requested:
        return max(1, int(requested))
    env = os.environ.get("CIRCTREND_THREADS")
    if env:
        return max(1, int(env))
    return 1


@dataclass(frozen=True)
class MonteCarloPlan:
    """Replicated simulation of one scenario under several selectors.

    Every selector picks its bandwidth from the same diagonal grid
    (``grid_points`` log-spaced values per axis over ``[grid_lo, grid_hi]``
    times the default initial bandwidth), so the CASE oracle is a true
    per-replicate lower bound.
    """

    scenario: object
    replicates: int = 100
    p: int = 0
    selectors: tuple = ("CV", "MCV1", "MCV2", "MCV3", "CASE")
    master_seed: int = 0
    grid_points: int = 15
    grid_lo: float = 0.05
    grid_hi: float = 1.5
    kernel: KernelSpec = field(default_factory=KernelSpec)

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")
        if self.p not in (0, 1):
            raise ValueError("p must be 0 or 1")
        for s in self.selectors:
            selector_criterion(s, truth=np.zeros(1))

    def describe(self):
        sc = self.scenario
        err = sc.errors
        corr = err.corr
        if isinstance(corr, Exponential):
            corr_name, corr_par = "exponential", corr.range_
        else:
            corr_name, corr_par = "rational_quadratic", corr.a
        reg = sc.regression if isinstance(sc.regression, str) else "custom"
        return {
            "regression": reg,
            "errors": "wrapped" if isinstance(err, WrappedGPSpec) else "projected",
            "correlation": corr_name,
            "corr_param": corr_par,
            "n": sc.n,
            "p": self.p,
        }


@dataclass
class ReplicateRecord:
    index: int
    case: dict = field(default_factory=dict)
    bandwidth: dict = field(default_factory=dict)
    seconds: float = 0.0
    error: str = ""

    @property
    def ok(self):
        return not self.error


def _run_replicate(plan, r):
    t0 = time.perf_counter()
    rec = ReplicateRecord(r)
    try:
        sample, truth, _ = generate_sample(plan.scenario, replicate_rng(plan.master_seed, r))
        space = BandwidthSearchSpace.log_grid(default_init_H(sample), plan.grid_points,
                                              plan.grid_lo, plan.grid_hi)
        cands = space.candidates()
        oracle = Criterion.case_oracle(truth)
        crits = [selector_criterion(s, truth) for s in plan.selectors if s.upper() != "CASE"]
        table = criterion_table(sample, plan.kernel, plan.p, cands, crits + [oracle])
        case_col = table[:, -1]
        k_oracle = _argmin_tiebreak(case_col, cands)
        j = 0
        for s in plan.selectors:
            if s.upper() == "CASE":
                k = k_oracle
            else:
                k = _argmin_tiebreak(table[:, j], cands)
                j += 1
            rec.case[s] = float(case_col[k])
            rec.bandwidth[s] = tuple(np.diag(cands[k].matrix).tolist())
        best = case_col[k_oracle]
        assert all(best <= v for v in rec.case.values()), "oracle CASE not minimal"
    except Exception as exc:  # recorded, never silently dropped
        rec.error = f"{type(exc).__name__}: {exc}"
    rec.seconds = time.perf_counter() - t0
    return rec


def _run_one(args):
    return _run_replicate(*args)


@dataclass
class MonteCarloResult:
    plan: MonteCarloPlan
    records: list

    def summary(self):
        """One row per selector: mean CASE, Monte Carlo SE, counts."""
        rows = []
        base = self.plan.describe()
        for s in self.plan.selectors:
            vals = np.array([r.case[s] for r in self.records if r.ok])
            k = len(vals)
            mean = float(np.mean(vals)) if k else float("nan")
            se = float(np.std(vals, ddof=1) / math.sqrt(k)) if k > 1 else float("nan")
            rows.append(dict(base, selector=s, mean_case=mean, mc_se=se, replicates=k,
                             failures=len(self.records) - k))
        return rows

    def mean_case(self, selector):
        return next(r["mean_case"] for r in self.summary() if r["selector"] == selector)

    def mc_se(self, selector):
        return next(r["mc_se"] for r in self.summary() if r["selector"] == selector)

    def to_csv(self):
        """Summary table as CSV text with full-precision floats."""
        rows = self.summary()
        buf = io.StringIO()
        cols = list(rows[0].keys())
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for row in rows:
            w.writerow([format(v, ".17g") if isinstance(v, float) else v
                        for v in (row[c] for c in cols)])
        return buf.getvalue()


def run_monte_carlo(plan, workers=None):
    """Run every replicate of ``plan``.

    Replicate ``r`` draws from its own ``(master_seed, r)`` stream, so the
    result does not depend on ``workers`` or on execution order.
    """
    n_workers = worker_count(workers)
    jobs = [(plan, r) for r in range(plan.replicates)]
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as ex:
            records = list(ex.map(_run_one, jobs))
    else:
        records = [_run_one(j) for j in jobs]
    records.sort(key=lambda rec: rec.index)
    return MonteCarloResult(plan, records)
