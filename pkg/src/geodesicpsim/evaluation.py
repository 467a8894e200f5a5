"""Benchmark harness: logistic mapping of objective scores onto MOS and the
PLCC / SRCC / RMSE indicators."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.stats import rankdata

from .errors import CorrelationError, FitError, GeodesicPSIMError, ScoringError
from .scoring import MetricConfig, resolve_threads, score_pair

log = logging.getLogger(__name__)


def logistic(x, a, b, c, d):
    """Monotone 4-parameter logistic ``(a - b) / (1 + exp(-(x - c) / d)) + b``."""
    z = -(np.asarray(x, float) - c) / d
    return (a - b) / (1.0 + np.exp(np.clip(z, -700, 700))) + b


def fit_logistic(scores, mos, max_iter=500, rtol=1e-10):
    """Least-squares fit of :func:`logistic` with Nelder-Mead.

    Works in standardized score units internally; returns ``(a, b, c, d)``
    in the original units.
    """
    x = np.asarray(scores, float)
    y = np.asarray(mos, float)
    if len(x) != len(y):
        raise FitError("scores and mos differ in length")
    if len(x) < 3:
        raise FitError(f"need at least 3 samples for a fit, got {len(x)}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise FitError("non-finite input")
    span = float(x.max() - x.min())
    if span == 0:
        raise FitError("all scores are equal; mapping undefined")

    center = float(np.median(x))
    z = (x - center) / span
    slope_sign = -1.0 if np.cov(x, y)[0, 1] < 0 else 1.0
    p0 = np.array([y.max(), y.min(), 0.0, slope_sign * 0.25])

    def loss(p):
        a, b, c, d = p
        if d == 0:
            return np.inf
        r = logistic(z, a, b, c, d) - y
        return float(r @ r)

    # a few restarts: Nelder-Mead stalls easily on flat logistic tails
    best = None
    start = p0
    for _ in range(4):
        res = minimize(loss, start, method="Nelder-Mead",
                       options={"maxiter": max_iter, "maxfev": 4 * max_iter,
                                "xatol": rtol, "fatol": rtol, "adaptive": True})
        if best is None or res.fun < best.fun:
            best = res
        if abs(res.fun - loss(start)) <= rtol * max(1.0, abs(res.fun)):
            break
        start = res.x
    a, b, c, d = best.x
    return float(a), float(b), float(center + c * span), float(d * span)


def pearson(x, y):
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    xc = x - x.mean()
    yc = y - y.mean()
    den = math.sqrt(float(xc @ xc) * float(yc @ yc))
    if den == 0:
        raise CorrelationError("zero variance; correlation undefined")
    return float(xc @ yc) / den


def correlations(mapped, mos):
    """Return ``(plcc, srcc, rmse)``. Spearman uses average ranks for ties."""
    mapped = np.asarray(mapped, float)
    mos = np.asarray(mos, float)
    if len(mapped) != len(mos):
        raise CorrelationError("length mismatch")
    if len(mapped) < 2:
        raise CorrelationError("need at least 2 samples")
    plcc = pearson(mapped, mos)
    srcc = pearson(rankdata(mapped), rankdata(mos))
    rmse = math.sqrt(float(np.mean((mapped - mos) ** 2)))
    return plcc, srcc, rmse


@dataclass
class EvalReport:
    plcc: float
    srcc: float
    rmse: float
    logistic_params: tuple
    n: int
    per_row: list = field(default_factory=list)
    per_class: dict = field(default_factory=dict)
    failed: list = field(default_factory=list)

    def as_dict(self):
        return {
            "plcc": self.plcc,
            "srcc": self.srcc,
            "rmse": self.rmse,
            "logistic_params": list(self.logistic_params),
            "n": self.n,
            "per_row": self.per_row,
            "per_class": self.per_class,
            "failed": self.failed,
        }


def evaluate_scores(scores, mos, labels=None, extra=None) -> EvalReport:
    """Fit the mapping and compute indicators for precomputed scores."""
    scores = np.asarray(scores, float)
    mos = np.asarray(mos, float)
    if np.ptp(scores) == 0:
        raise CorrelationError("all scores are equal; correlation undefined")
    params = fit_logistic(scores, mos)
    mapped = logistic(scores, *params)
    plcc, srcc, rmse = correlations(mapped, mos)
    labels = list(labels) if labels is not None else [None] * len(scores)
    per_row = []
    for i, (s, m, mp, lab) in enumerate(zip(scores.tolist(), mos.tolist(), mapped.tolist(), labels)):
        row = dict(extra[i]) if extra else {}
        row.update({"score": s, "mos": m, "mapped_score": mp})
        if lab is not None:
            row["class"] = lab
        per_row.append(row)

    per_class = {}
    for lab in sorted({lab for lab in labels if lab is not None}):
        idx = [i for i, x in enumerate(labels) if x == lab]
        entry = {"n": len(idx)}
        try:
            p, s, r = correlations(mapped[idx], mos[idx])
            entry.update(plcc=p, srcc=s, rmse=r)
        except CorrelationError as exc:
            entry["error"] = str(exc)
        per_class[lab] = entry
    return EvalReport(plcc, srcc, rmse, params, len(scores), per_row, per_class)


def run_benchmark(rows, config: MetricConfig | None = None, threads=None,
                  scorer=None) -> EvalReport:
    """Score every manifest row, then evaluate against its MOS.

    Rows that fail to score are reported and excluded; more than half failing
    aborts with :class:`ScoringError`.
    """
    config = config or MetricConfig()
    scorer = scorer or (lambda r: score_pair(r.ref_mesh, r.ref_tex, r.dist_mesh, r.dist_tex,
                                             config, threads=1).q)
    if any(r.mos is None for r in rows):
        raise FitError("every manifest row needs a mos value for evaluation")

    def work(row):
        try:
            return scorer(row), None
        except GeodesicPSIMError as exc:
            return None, str(exc)

    n_threads = resolve_threads(threads)
    if n_threads == 1:
        results = [work(r) for r in rows]
    else:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            results = list(pool.map(work, rows))

    ok, failed = [], []
    for i, (row, (score, err)) in enumerate(zip(rows, results), start=1):
        if err is not None:
            log.warning("row %d failed: %s", i, err)
            failed.append({"row": i, "dist_mesh": row.dist_mesh, "error": err})
        else:
            ok.append((i, row, score))
    if len(failed) * 2 > len(rows):
        raise ScoringError(f"{len(failed)} of {len(rows)} rows failed to score")

    extra = [{"row": i, "ref_mesh": r.ref_mesh, "dist_mesh": r.dist_mesh} for i, r, _ in ok]
    report = evaluate_scores([s for _, _, s in ok], [r.mos for _, r, _ in ok],
                             [r.label for _, r, _ in ok], extra)
    report.failed = failed
    return report
