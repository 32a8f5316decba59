"""Seeded, parallel disorder averaging and empirical spectral estimators.

Realization r of an ensemble always uses realization_index = r, with a
per-realization random stream derived from (master_seed, r) alone, so
results are a pure function of the configuration regardless of worker
count or completion order: partial results are merged in realization
order.
"""

from __future__ import annotations

import concurrent.futures
import json
import math
import sys
import time
from dataclasses import dataclass

import numpy as np

from .model import DisorderSpec, LatticeSpec, build_hamiltonian
from .spectral import EigenSystem, TraceWindow, diagonalize, eigenvalues_only


def log_event(stream=None, **fields) -> None:
    """Emit one line-delimited JSON progress/summary record."""
    stream = stream if stream is not None else sys.stderr
    print(json.dumps(fields, sort_keys=True), file=stream, flush=True)


@dataclass(frozen=True)
class EnsembleConfig:
    """A lattice + disorder law, how many realizations, and how to run them."""

    lattice: LatticeSpec
    disorder: DisorderSpec
    n_realizations: int = 1
    workers: int = 1

    def __post_init__(self):
        if self.n_realizations < 1:
            raise ValueError("n_realizations must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def disorder_for(self, index: int) -> DisorderSpec:
        return self.disorder.with_realization(index)


def realization_eigensystem(cfg: EnsembleConfig, index: int,
                            need_vectors: bool = True):
    """Build and diagonalize realization ``index`` of the ensemble."""
    dis = cfg.disorder_for(index)
    H = build_hamiltonian(cfg.lattice, dis)
    if not need_vectors:
        return eigenvalues_only(H)
    es = diagonalize(H, disorder=dis)
    return es


class Ensemble:
    """Lazy, deterministic map over the realizations of an EnsembleConfig."""

    def __init__(self, cfg: EnsembleConfig, eigensystem_factory=None,
                 progress=False):
        self.cfg = cfg
        self._factory = eigensystem_factory or realization_eigensystem
        self.progress = progress
        self._calls = 0

    @property
    def n(self) -> int:
        return self.cfg.n_realizations

    @property
    def diagonalizations(self) -> int:
        """Dense solves actually performed (cache hits excluded)."""
        return getattr(self._factory, "computed", self._calls)

    def eigensystem(self, index: int) -> EigenSystem:
        es = self._factory(self.cfg, index)
        self._calls += 1
        return es

    def map(self, fn):
        """Apply ``fn`` to every realization's EigenSystem.

        Returns results in realization order; with several workers the
        computations run concurrently but the returned list (and hence any
        downstream merge) is ordered, keeping outputs scheduling-invariant.
        """
        indices = range(self.cfg.n_realizations)

        def job(r):
            t0 = time.perf_counter()
            out = fn(self.eigensystem(r))
            if self.progress:
                log_event(event="realization_done", index=r,
                          seconds=round(time.perf_counter() - t0, 4))
            return out

        if self.cfg.workers == 1:
            return [job(r) for r in indices]
        with concurrent.futures.ThreadPoolExecutor(self.cfg.workers) as pool:
            futures = {pool.submit(job, r): r for r in indices}
            results = [None] * self.cfg.n_realizations
            for fut in concurrent.futures.as_completed(futures):
                results[futures[fut]] = fut.result()
        return results

    def map_spectra(self, fn=None):
        """Like :meth:`map` but with eigenvalues only (no eigenvectors)."""
        def eval_job(r):
            w = self._factory(self.cfg, r, need_vectors=False)
            if isinstance(w, EigenSystem):
                w = w.energies
            self._calls += 1
            return w if fn is None else fn(w)

        if self.cfg.workers == 1:
            return [eval_job(r) for r in range(self.cfg.n_realizations)]
        with concurrent.futures.ThreadPoolExecutor(self.cfg.workers) as pool:
            futures = {pool.submit(eval_job, r): r
                       for r in range(self.cfg.n_realizations)}
            results = [None] * self.cfg.n_realizations
            for fut in concurrent.futures.as_completed(futures):
                results[futures[fut]] = fut.result()
        return results


class StreamingMoments:
    """Count/mean/M2 accumulator (Welford), mergeable and array-valued."""

    def __init__(self, shape=()):
        self.count = 0
        self.mean = np.zeros(shape)
        self.m2 = np.zeros(shape)

    def update(self, value) -> None:
        value = np.asarray(value, dtype=float)
        self.count += 1
        delta = value - self.mean
        self.mean = self.mean + delta / self.count
        self.m2 = self.m2 + delta * (value - self.mean)

    def merge(self, other: "StreamingMoments") -> "StreamingMoments":
        if other.count == 0:
            return self
        if self.count == 0:
            self.count, self.mean, self.m2 = other.count, other.mean.copy(), other.m2.copy()
            return self
        n = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.count / n)
        m2 = self.m2 + other.m2 + delta**2 * (self.count * other.count / n)
        self.count, self.mean, self.m2 = n, mean, m2
        return self

    @property
    def variance(self):
        """Unbiased sample variance (zero until two samples arrive)."""
        if self.count < 2:
            return np.zeros_like(self.mean)
        return self.m2 / (self.count - 1)

    @property
    def std_error(self):
        if self.count < 2:
            return np.zeros_like(self.mean)
        return np.sqrt(self.variance / self.count)


def run_ensemble(cfg: EnsembleConfig, measure, progress=False):
    """Disorder-average the per-realization measurement ``measure``.

    ``measure(es)`` returns a dict of named scalars or arrays. The result
    maps each name to a StreamingMoments with ensemble mean, variance and
    standard error, merged in realization order (deterministic for any
    worker count).
    """
    ens = Ensemble(cfg, progress=progress)
    partials = ens.map(measure)
    merged: dict[str, StreamingMoments] = {}
    for part in partials:
        for key, value in part.items():
            acc = merged.get(key)
            if acc is None:
                acc = merged[key] = StreamingMoments(np.shape(value))
            acc.update(value)
    return merged


# ---------------------------------------------------------------------------
# Empirical level-statistics estimators
# ---------------------------------------------------------------------------

@dataclass
class WegnerReport:
    """Windowed level-count density per unit interval length, per rung."""

    energy: float
    widths: np.ndarray
    ratios: np.ndarray
    ratio_se: np.ndarray
    plateau: bool
    n_realizations: int


def wegner_estimator(ensemble: Ensemble, energy: float, widths,
                     window: TraceWindow = TraceWindow(0.6)) -> WegnerReport:
    """Estimate E{Tr chi_W E(J) chi_W} / (|W| |J|) over a ladder of interval
    lengths |J| centered at ``energy``.

    A disorder-regular model shows a plateau bounded by the single-site
    density sup-norm; a clean model with spectral atoms diverges as |J|
    shrinks.
    """
    widths = np.asarray(sorted(widths, reverse=True), dtype=float)
    lattice = ensemble.cfg.lattice
    mask = window.site_mask(lattice)
    n_window = int(mask.sum())

    def one(es: EigenSystem):
        weights = np.sum(np.abs(es.states[mask, :]) ** 2, axis=0)
        out = np.empty(widths.size)
        for k, w in enumerate(widths):
            lo, hi = energy - w / 2.0, energy + w / 2.0
            sel = (es.energies >= lo) & (es.energies < hi)
            out[k] = weights[sel].sum() / (n_window * w)
        return out

    acc = StreamingMoments(widths.shape)
    for sample in ensemble.map(one):
        acc.update(sample)
    ratios = acc.mean
    se = acc.std_error
    usable = ratios > 0
    plateau = False
    if usable.sum() >= 2:
        spread = ratios[usable].max() - ratios[usable].min()
        plateau = bool(spread <= 0.5 * ratios[usable].mean())
    return WegnerReport(energy, widths, ratios, se, plateau, acc.count)


@dataclass
class MinamiReport:
    """Second factorial moments of whole-box level counts, per rung."""

    energy: float
    widths: np.ndarray
    moments: np.ndarray
    moment_se: np.ndarray
    slope: float
    slope_se: float
    n_realizations: int

    def bound(self, n_sites: int, density_sup: float) -> np.ndarray:
        return (density_sup * self.widths * n_sites) ** 2


def minami_estimator(ensemble: Ensemble, energy: float, widths) -> MinamiReport:
    """Estimate E{K(K-1)} with K the whole-box level count in an interval
    of length |Delta| centered at ``energy``, and the log-log slope vs
    |Delta| (quadratic clustering suppression shows slope ~ 2)."""
    widths = np.asarray(sorted(widths, reverse=True), dtype=float)

    def one(energies: np.ndarray):
        out = np.empty(widths.size)
        for k, w in enumerate(widths):
            lo = np.searchsorted(energies, energy - w / 2.0, side="left")
            hi = np.searchsorted(energies, energy + w / 2.0, side="left")
            kk = float(hi - lo)
            out[k] = kk * (kk - 1.0)
        return out

    samples = np.array(ensemble.map_spectra(one))
    moments = samples.mean(axis=0)
    n = samples.shape[0]
    se = samples.std(axis=0, ddof=1) / math.sqrt(n) if n >= 2 else np.zeros_like(moments)
    ok = moments > 0
    if ok.sum() >= 2:
        slope, slope_se = _weighted_line_fit(
            np.log(widths[ok]), np.log(moments[ok]),
            rel_se=np.where(moments[ok] > 0, se[ok] / moments[ok], 0.0))
    else:
        slope, slope_se = math.nan, math.nan
    return MinamiReport(energy, widths, moments, se, slope, slope_se, n)


@dataclass
class LifshitzReport:
    exponent: float
    exponent_se: float
    edge: float
    n_points: int
    qualitative: bool = True


def lifshitz_fit(pooled_energies: np.ndarray, band=(1e-6, 1e-2),
                 n_points: int = 40, min_rank: int = 30) -> LifshitzReport:
    """Band-edge tail exponent from the pooled integrated density of states.

    Fits log|log dN| against log(E - E0) with E0 the empirical spectrum
    minimum; for a stretched-exponential tail exp(-a/(E-E0)^kappa) the
    slope is -kappa (kappa = d/2 for d-dimensional uniform disorder).

    The lowest ``min_rank`` order statistics are excluded: with E0 itself
    the sample minimum, their abscissa log(E - E0) is dominated by
    single-gap noise and drags the slope flat. Slow convergence makes
    this a qualitative diagnostic either way.
    """
    e = np.sort(np.asarray(pooled_energies, dtype=float).ravel())
    total = e.size
    edge = e[0]
    ranks = np.arange(total)
    # pooling preserves per-site normalization: dN = rank / (total states)
    per_site = ranks / total
    lo = max(band[0], min_rank / total)
    sel = (per_site >= lo) & (per_site <= band[1]) & (e - edge > 0)
    if sel.sum() < 5:
        raise ValueError("insufficient points in the Lifshitz fit band")
    idx = np.flatnonzero(sel)
    # thin to ~n_points log-spaced ranks to avoid over-weighting the bulk
    take = np.unique(np.geomspace(idx[0] + 1, idx[-1] + 1, n_points).astype(int) - 1)
    x = np.log(e[take] - edge)
    y = np.log(np.abs(np.log(per_site[take])))
    if np.unique(np.round(x, 12)).size < 5:
        raise ValueError("degenerate abscissa in the Lifshitz fit band")
    slope, slope_se = _weighted_line_fit(x, y, rel_se=np.zeros_like(x))
    return LifshitzReport(-slope, slope_se, float(edge), int(take.size))


# ---------------------------------------------------------------------------
# Scaling-law fits
# ---------------------------------------------------------------------------

MAX_REL_SE = 0.30  # rungs noisier than this are dropped from fits


@dataclass
class ScalingFit:
    """Least-squares fit of scan values against the window width ladder."""

    model: str  # "power": c*eps^a   |   "power_log": c*eps^a*|log eps|^b
    c: float
    a: float
    b: float | None
    a_se: float
    b_se: float | None
    residual: float
    n_rungs_used: int
    degenerate: bool = False

    def exponent_ci(self, z: float = 1.645) -> tuple[float, float]:
        return self.a - z * self.a_se, self.a + z * self.a_se


def _weighted_line_fit(x, y, rel_se):
    """Slope and slope-SE of y = m*x + q, weighted by inverse squared
    relative errors (equal weights when any error is zero)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    rel = np.asarray(rel_se, dtype=float)
    if np.any(rel <= 0):
        w = np.ones_like(x)
    else:
        w = 1.0 / rel**2
    X = np.stack([np.ones_like(x), x], axis=1)
    wx = X * w[:, None]
    cov = np.linalg.inv(X.T @ wx)
    beta = cov @ (wx.T @ y)
    resid = y - X @ beta
    dof = max(1, x.size - 2)
    chi2red = float((w * resid**2).sum() / dof)
    scale = max(1.0, chi2red) if np.any(rel > 0) else chi2red
    return float(beta[1]), float(math.sqrt(abs(cov[1, 1] * scale)))


def scaling_fit(scan, model: str = "power") -> ScalingFit:
    """Fit a scan's values against its width ladder in log space.

    Rungs with nonpositive values or relative standard error above 30%
    are dropped; weights are inverse squared relative errors. Exact
    synthetic inputs are recovered to machine precision.
    """
    eps = np.asarray(scan.epsilons, dtype=float)
    vals = np.asarray(scan.values, dtype=float)
    ses = np.asarray(scan.std_errors, dtype=float)
    ok = vals > 0
    rel = np.where(ok, np.divide(ses, vals, out=np.full_like(vals, np.inf),
                                 where=vals > 0), np.inf)
    ok &= (rel < MAX_REL_SE) | (ses == 0)
    if ok.sum() < 4:
        return ScalingFit(model, math.nan, math.nan, None, math.nan, None,
                          math.nan, int(ok.sum()), degenerate=True)
    x1 = np.log(eps[ok])
    y = np.log(vals[ok])
    rel = np.where(ses[ok] > 0, ses[ok] / vals[ok], 0.0)
    cols = [np.ones_like(x1), x1]
    if model == "power_log":
        cols.append(np.log(np.abs(np.log(eps[ok]))))
    elif model != "power":
        raise ValueError(f"unknown scaling model {model!r}")
    X = np.stack(cols, axis=1)
    if np.linalg.matrix_rank(X) < X.shape[1]:
        return ScalingFit(model, math.nan, math.nan, None, math.nan, None,
                          math.nan, int(ok.sum()), degenerate=True)
    if np.any(rel > 0):
        w = np.where(rel > 0, 1.0 / rel**2, (1.0 / rel[rel > 0].min()) ** 2)
    else:
        w = np.ones_like(x1)
    wx = X * w[:, None]
    cov = np.linalg.inv(X.T @ wx)
    beta = cov @ (wx.T @ y)
    resid = y - X @ beta
    dof = max(1, y.size - X.shape[1])
    chi2red = float((w * resid**2).sum() / dof)
    scale = max(1.0, chi2red) if np.any(rel > 0) else chi2red
    a_se = math.sqrt(abs(cov[1, 1] * scale))
    b = float(beta[2]) if model == "power_log" else None
    b_se = math.sqrt(abs(cov[2, 2] * scale)) if model == "power_log" else None
    return ScalingFit(model, float(math.exp(beta[0])), float(beta[1]), b,
                      a_se, b_se, float(np.sqrt((resid**2).mean())),
                      int(ok.sum()))
