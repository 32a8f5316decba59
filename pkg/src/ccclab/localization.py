"""Localization length of a spectral window by three routes, plus the
correlation-measure bound and the joint vanishing test.

All routes need a well-defined position operator, so they require open
boundaries. Route one sums velocity matrix elements over inverse squared
energy differences; route two uses position second moments minus the
spectral-atom diagonal; route three Cesaro-averages the spread of the
Heisenberg-evolved position operator over a time ladder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ccc import eigen_velocities, window_measure
from .ensemble import Ensemble, StreamingMoments
from .errors import InvariantError
from .model import position_operator
from .spectral import EigenSystem, EnergyInterval

BOUND_TOL = 1e-9


def _require_open(es: EigenSystem) -> None:
    if es.lattice is None or not es.lattice.all_open:
        raise ValueError("localization lengths require open boundaries")


def _x_eigen(es: EigenSystem) -> list[np.ndarray]:
    return [es.to_eigenbasis(position_operator(es.lattice, a).matrix)
            for a in range(1, es.lattice.dimension + 1)]


def degenerate_clusters(energies: np.ndarray, tol: float) -> np.ndarray:
    """Label eigenvalues into clusters separated by gaps below ``tol``."""
    labels = np.zeros(energies.size, dtype=int)
    if energies.size > 1:
        labels[1:] = np.cumsum(np.diff(energies) >= tol)
    return labels


@dataclass
class SpectralLengthResult:
    length_sq: float
    per_axis: np.ndarray
    excluded_weight: float


def loc_length_spectral(es: EigenSystem, interval: EnergyInterval,
                        deg_tol: float | None = None,
                        velocities: list[np.ndarray] | None = None) -> SpectralLengthResult:
    """Squared localization length from velocity matrix elements.

    l^2 = (2/N) sum_{m in window} sum_{n nondegenerate with m}
          |v_{nm}|^2 / (E_n - E_m)^2, summed over axes.

    Pairs closer than the degeneracy tolerance are excluded and their
    velocity weight reported, never silently dropped.
    """
    _require_open(es)
    tol = es.deg_tol if deg_tol is None else deg_tol
    if velocities is None:
        velocities = eigen_velocities(es)
    idx = es.indices_in(interval)
    d = es.lattice.dimension
    if idx.size == 0:
        return SpectralLengthResult(0.0, np.zeros(d), 0.0)
    omega = np.subtract.outer(es.energies, es.energies[idx])  # (N, |window|)
    keep = np.abs(omega) >= tol
    per_axis = np.empty(d)
    excluded = 0.0
    for a in range(d):
        w2 = np.abs(velocities[a][:, idx]) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(keep, w2 / omega**2, 0.0)
        per_axis[a] = 2.0 * ratio.sum() / es.n
        excluded += 2.0 * float(w2[~keep].sum()) / es.n
    return SpectralLengthResult(float(per_axis.sum()), per_axis, excluded)


def loc_length_moment(es: EigenSystem, interval: EnergyInterval,
                      deg_tol: float | None = None) -> float:
    """Squared localization length from position moments.

    l^2 / 2 = (1/N) [ sum_{m in window} <m|x^2|m>
                      - sum over spectral atoms of Tr(P x P x P) ],
    where atoms group eigenvalues within the degeneracy tolerance. Equals
    the spectral route identically at finite volume.
    """
    _require_open(es)
    tol = es.deg_tol if deg_tol is None else deg_tol
    idx = es.indices_in(interval)
    if idx.size == 0:
        return 0.0
    xs = _x_eigen(es)
    labels = degenerate_clusters(es.energies, tol)
    total = 0.0
    for x in xs:
        block = x[:, idx]
        second = float((np.abs(block) ** 2).sum())  # sum_m <m|x^2|m> by completeness
        atom = 0.0
        for lab in np.unique(labels[idx]):
            members = np.flatnonzero(labels == lab)
            sub = x[np.ix_(members, members)]
            inside = np.isin(members, idx)
            # Tr(P x P x P) restricted to window members of the cluster
            atom += float((np.abs(sub[inside, :][:, inside]) ** 2).sum())
        total += second - atom
    return 2.0 * total / es.n


def loc_length_time_average(es: EigenSystem, interval: EnergyInterval,
                            t_ladder, n_samples: int = 64,
                            max_samples: int = 100_000) -> np.ndarray:
    """Squared localization length from the time-averaged spread of the
    evolved position operator, one value per averaging time.

    The Cesaro integral over [0, T] uses uniform trapezoid sampling; the
    sample count grows with T so the fastest pair frequency stays
    resolved. Values approach the spectral route as T grows.
    """
    _require_open(es)
    t_ladder = np.asarray(t_ladder, dtype=float)
    idx = es.indices_in(interval)
    if idx.size == 0:
        return np.zeros(t_ladder.shape)
    xs = _x_eigen(es)
    omega = np.subtract.outer(es.energies, es.energies[idx])  # (N, |w|)
    weight = sum((np.abs(x[:, idx]) ** 2) for x in xs)
    diameter = float(es.energies[-1] - es.energies[0])
    out = np.empty(t_ladder.shape)
    for k, t_max in enumerate(t_ladder):
        if t_max <= 0:
            out[k] = 0.0
            continue
        n_t = int(min(max_samples,
                      max(n_samples, math.ceil(4.0 * t_max * diameter / math.pi))))
        ts = np.linspace(0.0, t_max, n_t)
        w_t = np.full(n_t, 1.0 / (n_t - 1))
        w_t[0] *= 0.5
        w_t[-1] *= 0.5
        cos_avg = np.zeros_like(omega)
        chunk = max(1, int(2e6 // max(1, omega.size)))
        for s in range(0, n_t, chunk):
            tt = ts[s:s + chunk]
            cos_avg += np.cos(omega[..., None] * tt[None, None, :]) \
                @ w_t[s:s + chunk]
        out[k] = 2.0 * float((weight * (1.0 - cos_avg)).sum()) / es.n
    return out


@dataclass
class BoundCheck:
    measure: float
    width_sq: float
    length_sq: float
    ratio: float


def ccc_loc_bound(es: EigenSystem, interval: EnergyInterval,
                  velocities: list[np.ndarray] | None = None) -> BoundCheck:
    """Ratio of the window's correlation mass to |window|^2 * l^2.

    The ratio never exceeds one (up to rounding); zero mass with zero
    length gives ratio zero, nonzero mass with zero length is impossible
    and raises.
    """
    _require_open(es)
    if velocities is None:
        velocities = eigen_velocities(es)
    d = es.lattice.dimension
    mass = sum(window_measure(es, interval, interval, a, a,
                              velocities=velocities)
               for a in range(1, d + 1))
    spec = loc_length_spectral(es, interval, velocities=velocities)
    width_sq = interval.width**2
    denom = width_sq * spec.length_sq
    if denom == 0.0:
        if abs(mass) <= 1e-12:
            return BoundCheck(mass, width_sq, spec.length_sq, 0.0)
        raise InvariantError(
            f"window mass {mass:g} with zero localization length")
    ratio = mass / denom
    if ratio > 1.0 + BOUND_TOL:
        raise InvariantError(f"measure/localization bound violated: {ratio!r}")
    return BoundCheck(mass, width_sq, spec.length_sq, ratio)


@dataclass
class LocalizationReport:
    """All three routes on one window plus identity residuals."""

    interval: EnergyInterval
    length_sq_spectral: float
    per_axis: np.ndarray
    length_sq_moment: float
    excluded_weight: float
    time_ladder: np.ndarray
    length_sq_time: np.ndarray
    bound_ratio: float
    route_residual: float

    def to_dict(self) -> dict:
        return {
            "interval": [self.interval.lower, self.interval.upper],
            "length_sq_spectral": self.length_sq_spectral,
            "length_sq_per_axis": list(map(float, self.per_axis)),
            "length_sq_moment": self.length_sq_moment,
            "excluded_weight": self.excluded_weight,
            "time_ladder": list(map(float, self.time_ladder)),
            "length_sq_time": list(map(float, self.length_sq_time)),
            "bound_ratio": self.bound_ratio,
            "route_residual": self.route_residual,
        }


def localization_report(es: EigenSystem, interval: EnergyInterval,
                        t_ladder=(10.0, 100.0, 1000.0),
                        check: bool = True) -> LocalizationReport:
    """Evaluate every route on one realization and cross-check them."""
    velocities = eigen_velocities(es)
    spec = loc_length_spectral(es, interval, velocities=velocities)
    moment = loc_length_moment(es, interval)
    times = np.asarray(t_ladder, dtype=float)
    series = loc_length_time_average(es, interval, times)
    bound = ccc_loc_bound(es, interval, velocities=velocities)
    residual = abs(spec.length_sq - moment)
    if check and residual > BOUND_TOL * max(1.0, abs(spec.length_sq)):
        raise InvariantError(
            f"localization length routes disagree: {spec.length_sq!r} vs "
            f"{moment!r}")
    return LocalizationReport(interval, spec.length_sq, spec.per_axis,
                              moment, spec.excluded_weight, times, series,
                              bound.ratio, residual)


@dataclass
class VanishingRung:
    eps: float
    mean_scaled_mass: float      # (2/eps^2) M(I_eps, I_eps), ensemble mean
    mean_length_sq: float        # l^2(I_eps), ensemble mean
    holds_everywhere: bool       # per-realization inequality verdict
    margin_min: float            # min over realizations of l^2 - (2/eps^2) M


@dataclass
class VanishingReport:
    energy: float
    rungs: list[VanishingRung]
    all_hold: bool


def vanishing_test(ensemble, energy: float, ladder) -> VanishingReport:
    """Joint trend of (2/eps^2) M(I_eps, I_eps) and l^2(I_eps) over the
    ladder; the first never exceeds the second, realization by
    realization, which forces the diagonal density (and hence the direct
    conductivity) to vanish wherever the localization length stays finite.
    """
    ladder = np.asarray(sorted(np.asarray(ladder, float), reverse=True))

    def one(es: EigenSystem):
        velocities = eigen_velocities(es)
        mass = np.empty(ladder.size)
        lsq = np.empty(ladder.size)
        for k, eps in enumerate(ladder):
            win = EnergyInterval(energy, energy + eps)
            d = es.lattice.dimension
            m = sum(window_measure(es, win, win, a, a, velocities=velocities)
                    for a in range(1, d + 1))
            mass[k] = 2.0 * m / eps**2
            lsq[k] = loc_length_spectral(es, win,
                                         velocities=velocities).length_sq
        return {"mass": mass, "lsq": lsq, "margin": lsq - mass}

    if isinstance(ensemble, Ensemble):
        partials = ensemble.map(one)
    else:
        partials = [one(es) for es in ensemble]
    mass_acc = StreamingMoments(ladder.shape)
    lsq_acc = StreamingMoments(ladder.shape)
    margin_min = np.full(ladder.shape, np.inf)
    for part in partials:
        mass_acc.update(part["mass"])
        lsq_acc.update(part["lsq"])
        margin_min = np.minimum(margin_min, part["margin"])
    rungs = []
    for k, eps in enumerate(ladder):
        holds = bool(margin_min[k] >= -BOUND_TOL * max(1.0, lsq_acc.mean[k]))
        rungs.append(VanishingRung(float(eps), float(mass_acc.mean[k]),
                                   float(lsq_acc.mean[k]), holds,
                                   float(margin_min[k])))
    return VanishingReport(energy, rungs, all(r.holds_everywhere for r in rungs))
