"""Conductivity formulas evaluated in the finite-volume eigenbasis.

Five routes to transport coefficients, sharing one eigendecomposition per
realization:

* frequency-resolved pairing of the correlation measure with a smoothed
  energy-conservation kernel (AC response);
* the diagonal density of the correlation measure at small window width
  (direct-current estimate);
* squared resolvent kernels weighted by displacement (Green's-function
  route), exactly equal to the double-Lorentzian pairing of the measure;
* the Liouvillian resolvent form with a relaxation-time or adiabatic
  regulator in the same slot;
* the projector-commutator marker for the Hall channel, windowed to the
  bulk, plus real-time linear response to a static tilt.

Sign conventions are fixed so that equal-component conductivities are
nonnegative at positive temperature. Units: e^2/hbar per site; the Hall
marker is reported in conductance quanta e^2/h (factor 2*pi).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .ccc import eigen_velocities, pair_weights
from .ensemble import Ensemble, StreamingMoments, _weighted_line_fit
from .errors import InvariantError
from .model import Operator, position_operator
from .spectral import (EigenSystem, TraceWindow, diagonalize, fermi_projector,
                       fermi_weight)


def lorentzian(s, eta: float):
    """Smoothed delta (eta/pi) / (eta^2 + s^2)."""
    return (eta / math.pi) / (eta**2 + np.asarray(s) ** 2)


def _difference_quotient(energies: np.ndarray, fermi_energy: float,
                         temperature: float, deg_tol: float) -> np.ndarray:
    """Matrix q[i,j] = [n_F(E_i) - n_F(E_j)] / (E_i - E_j), with the
    removable singularity filled by -n_F' at T > 0 and by 0 at T = 0."""
    occ = fermi_weight(energies, fermi_energy, temperature)
    de = np.subtract.outer(energies, energies)
    dn = np.subtract.outer(occ, occ)
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(np.abs(de) >= deg_tol, dn / np.where(de == 0, 1.0, de), 0.0)
    if temperature > 0:
        deriv = -occ * (1.0 - occ) / temperature  # d n_F / d E
        diag_fill = np.broadcast_to(deriv[:, None], q.shape)
        q = np.where(np.abs(de) < deg_tol, diag_fill, q)
    return q


def ac_conductivity(es: EigenSystem, frequencies, temperature: float,
                    fermi_energy: float, eps_reg: float,
                    alpha: int = 1, beta: int = 1,
                    velocities: list[np.ndarray] | None = None) -> np.ndarray:
    """Frequency-resolved conductivity from the correlation-measure atoms.

    sigma(nu) = sum over eigenpairs of
        -q_ij * delta_eps(E_i - E_j + nu) * Re w_ij,
    with q the Fermi difference quotient and w the measure weight. The
    smoothing width ``eps_reg`` must stay positive: finite-volume atoms
    meet a sharp energy-conservation constraint only on a measure-zero
    set, so the regulated kernel is always used and reported as such.
    """
    if eps_reg <= 0:
        raise ValueError("eps_reg must be > 0")
    if temperature < 0:
        raise ValueError("temperature must be >= 0")
    if velocities is None:
        velocities = eigen_velocities(es)
    w = pair_weights(es, velocities[alpha - 1],
                     None if alpha == beta else velocities[beta - 1]).real
    q = _difference_quotient(es.energies, fermi_energy, temperature, es.deg_tol)
    de = np.subtract.outer(es.energies, es.energies)
    frequencies = np.atleast_1d(np.asarray(frequencies, dtype=float))
    out = np.empty(frequencies.shape)
    base = -q * w
    for k, nu in enumerate(frequencies):
        out[k] = float((base * lorentzian(de + nu, eps_reg)).sum())
    return out


def dc_kubo_form(es: EigenSystem, temperature: float, fermi_energy: float,
                 eps_reg: float, alpha: int = 1, beta: int = 1,
                 velocities: list[np.ndarray] | None = None) -> float:
    """Zero-frequency limit form: the Fermi-derivative pairing with the
    smoothed diagonal of the measure (the same atom set as the AC route,
    evaluated at nu = 0)."""
    return float(ac_conductivity(es, 0.0, temperature, fermi_energy,
                                 eps_reg, alpha, beta, velocities)[0])


@dataclass
class DcDensityEstimate:
    """Diagonal-density estimate from the smallest usable scan rung."""

    estimate: float
    std_error: float
    eps: float
    divergent: bool
    slope: float
    slope_se: float
    rungs_used: int

    def consistent_with_zero(self, z: float = 2.0) -> bool:
        return abs(self.estimate) <= z * self.std_error


def dc_density(scan, min_level_count: float = 3.0,
               divergence_slope: float = -0.5) -> DcDensityEstimate:
    """Direct-current density estimate from a diagonal window scan.

    The estimate is the smallest-width rung with its standard error; a
    log-log slope over rungs with adequate level resolution supplies the
    extrapolation diagnostic. Growth toward small widths (slope at or
    below ``divergence_slope``) flags a diagonal atom: divergent response.
    """
    eps = np.asarray(scan.epsilons, dtype=float)
    vals = np.asarray(scan.values, dtype=float)
    ses = np.asarray(scan.std_errors, dtype=float)
    counts = np.asarray(scan.level_counts, dtype=float)
    usable = (vals > 0) & (counts >= min_level_count)
    slope, slope_se = math.nan, math.nan
    if usable.sum() >= 3:
        rel = np.where(vals[usable] > 0, ses[usable] / vals[usable], 0.0)
        slope, slope_se = _weighted_line_fit(np.log(eps[usable]),
                                             np.log(vals[usable]), rel)
    divergent = bool(not math.isnan(slope) and slope <= divergence_slope)
    return DcDensityEstimate(float(vals[-1]), float(ses[-1]), float(eps[-1]),
                             divergent, slope, slope_se, int(usable.sum()))


# ---------------------------------------------------------------------------
# Green's-function route and its exact Lorentzian-pairing twin
# ---------------------------------------------------------------------------

def resolvent(es: EigenSystem, z: complex) -> np.ndarray:
    """Site-basis kernel of (H - z)^(-1) from the eigendecomposition."""
    inv = 1.0 / (es.energies - z)
    return (es.states * inv[None, :]) @ es.states.conj().T


def greens_conductivity(es: EigenSystem, fermi_energy: float, eta: float,
                        alpha: int = 1, beta: int = 1,
                        window: TraceWindow | None = None) -> float:
    """Displacement-weighted squared resolvent kernel at E_F + i eta:

    (eta^2/pi^2) * mean over origins o of
        sum_x (x-o)_a (x-o)_b |G(o, x; E_F + i eta)|^2.

    The normalization is pinned to make this identical to
    :func:`lorentzian_ccc` at full trace window, realization by
    realization; the prefactor absorbs the density-of-states weighting
    found in other conventions.
    """
    if eta <= 0:
        raise ValueError("eta must be > 0")
    g = resolvent(es, fermi_energy + 1j * eta)
    k = (g * g.conj()).real
    lat = es.lattice
    xa = position_operator(lat, alpha).matrix.diagonal().real
    xb = position_operator(lat, beta).matrix.diagonal().real
    row_ab = k @ (xa * xb)
    row_a = k @ xa
    row_b = k @ xb
    row_1 = k.sum(axis=1)
    per_origin = row_ab - xa * row_b - xb * row_a + xa * xb * row_1
    if window is not None and window.fraction < 1.0:
        mask = window.site_mask(lat)
        mean_origin = float(per_origin[mask].mean())
    else:
        mean_origin = float(per_origin.mean())
    return (eta**2 / math.pi**2) * mean_origin


def lorentzian_ccc(es: EigenSystem, fermi_energy: float, eta: float,
                   alpha: int = 1, beta: int = 1,
                   velocities: list[np.ndarray] | None = None) -> float:
    """Double-Lorentzian pairing of the correlation measure at E_F:

    integral of delta_eta(l - E_F) delta_eta(m - E_F) M_ab(dl, dm),

    evaluated as the exact eigen-sum. Agrees with
    :func:`greens_conductivity` to rounding on every realization: the
    strongest exact cross-check in the package.
    """
    if eta <= 0:
        raise ValueError("eta must be > 0")
    if velocities is None:
        velocities = eigen_velocities(es)
    w = pair_weights(es, velocities[alpha - 1],
                     None if alpha == beta else velocities[beta - 1]).real
    d = lorentzian(es.energies - fermi_energy, eta)
    return float(d @ w @ d)


# ---------------------------------------------------------------------------
# Liouvillian resolvent form (relaxation-time / adiabatic regulator)
# ---------------------------------------------------------------------------

def liouvillian_conductivity(es: EigenSystem, fermi_energy: float,
                             temperature: float = 0.0, eta: float = 0.0,
                             nu: float = 0.0, relaxation: float = 0.0,
                             alpha: int = 1, beta: int = 1,
                             velocities: list[np.ndarray] | None = None) -> complex:
    """Conductivity from the superoperator resolvent acting on the
    commutator of position with the equilibrium state.

    In the eigenbasis the resolvent divides matrix elements by
    r + i(nu - (E_m - E_n)) where r is the adiabatic rate ``eta`` or the
    collision rate ``relaxation`` (the two occupy the same slot; exactly
    one must be positive). Degenerate pairs commute with the equilibrium
    state and drop out exactly.
    """
    r = eta if eta > 0 else relaxation
    if r <= 0:
        raise ValueError("one of eta/relaxation must be > 0")
    if velocities is None:
        velocities = eigen_velocities(es)
    va = velocities[alpha - 1]
    vb = velocities[beta - 1]
    q = _difference_quotient(es.energies, fermi_energy, temperature,
                             es.deg_tol)
    # q enters through the commutator with the equilibrium state, which
    # vanishes on degenerate pairs: mask the filled-diagonal values out.
    de = np.subtract.outer(es.energies, es.energies)
    q = np.where(np.abs(de) < es.deg_tol, 0.0, q)
    denom = r + 1j * (nu - (-de))  # -de[n,m] = E_m - E_n
    weight = va * vb.T  # [n,m] -> v_a[n,m] v_b[m,n]
    sigma = -(weight * q.T / denom).sum() / es.n
    return complex(sigma)


# ---------------------------------------------------------------------------
# Hall marker and Fermi-kernel diagnostics
# ---------------------------------------------------------------------------

def streda_marker(es: EigenSystem, fermi_energy: float,
                  window: TraceWindow = TraceWindow(0.4)) -> float:
    """Windowed local Hall marker, in conductance quanta e^2/h.

    The site density of -i P [[x, P], [y, P]] is averaged over the bulk
    window (the whole-box trace is contaminated by edge states under open
    boundaries); inside a spectral gap of a clean flux model it lands on
    an integer.
    """
    lat = es.lattice
    if lat is None or lat.dimension != 2:
        raise ValueError("Hall marker requires a two-dimensional lattice")
    if not lat.all_open:
        raise ValueError("Hall marker requires open boundaries")
    p = fermi_projector(es, fermi_energy).matrix
    x = position_operator(lat, 1).matrix.diagonal().real
    y = position_operator(lat, 2).matrix.diagonal().real
    xp = x[:, None] * p - p * x[None, :]   # [x, P]
    yp = y[:, None] * p - p * y[None, :]   # [y, P]
    comm = xp @ yp - yp @ xp
    density = (-1j * np.einsum("ij,ji->i", p, comm)).real
    mask = window.site_mask(lat)
    return float(2.0 * math.pi * density[mask].mean())


@dataclass
class KernelProfile:
    """Shell-averaged Fermi-projector kernel from one origin."""

    distances: np.ndarray
    profile: np.ndarray
    second_moment: float
    decay_rate: float
    fit_residual: float
    n_shells_fit: int


def fermi_kernel_profile(es: EigenSystem, fermi_energy: float,
                         origin: int | None = None,
                         origins_window: TraceWindow | None = None,
                         min_value: float = 1e-14) -> KernelProfile:
    """Distance profile of |<origin|P|x>|^2 and its second moment.

    By default the origin is the central site; passing ``origins_window``
    instead averages profile and second moment over every origin in the
    window (the covariant trace form, with far smaller variance).

    The exponential fit runs over shells with at least three distances
    represented and values above ``min_value``; a positive decay rate
    with small residual certifies exponential kernel decay, the lattice
    square-integrability condition behind vanishing direct conductivity.
    """
    lat = es.lattice
    if lat is None or not lat.all_open:
        raise ValueError("kernel profile requires open boundaries")
    if origins_window is not None:
        origins = np.flatnonzero(origins_window.site_mask(lat))
    else:
        if origin is None:
            origin = lat.site_index(tuple((L - 1) // 2 for L in lat.lengths))
        origins = np.array([origin])
    p = fermi_projector(es, fermi_energy).matrix
    coords = lat.centered_coordinates()
    kernels = np.abs(p[origins, :]) ** 2                      # (o, x)
    disp = coords[None, :, :] - coords[origins][:, None, :]   # (o, x, d)
    dist = np.sqrt((disp**2).sum(axis=2))
    second = float((dist**2 * kernels).sum() / origins.size)
    shells, inverse = np.unique(np.round(dist.ravel(), 9), return_inverse=True)
    prof = np.zeros(shells.size)
    np.add.at(prof, inverse, kernels.ravel())
    prof = prof / np.bincount(inverse, minlength=shells.size)
    ok = (prof > min_value) & (shells > 0)
    if ok.sum() >= 3:
        slope, _ = _weighted_line_fit(shells[ok], np.log(prof[ok]),
                                      np.zeros(int(ok.sum())))
        fit = np.log(prof[ok])
        pred = fit.mean() + slope * (shells[ok] - shells[ok].mean())
        resid = float(np.sqrt(((fit - pred) ** 2).mean()))
        rate = -slope
        n_fit = int(ok.sum())
    else:
        rate, resid, n_fit = math.nan, math.nan, int(ok.sum())
    return KernelProfile(shells, prof, second, rate, resid, n_fit)


# ---------------------------------------------------------------------------
# Real-time linear response to a static tilt
# ---------------------------------------------------------------------------

@dataclass
class LinearResponseResult:
    times: np.ndarray
    current: np.ndarray
    sigma_estimate: float
    field: float


def linear_response_current(H: Operator, fermi_energy: float, field: float,
                            times) -> LinearResponseResult:
    """Current along axis 1 after adding a static tilt field*x_1, and the
    time-averaged conductivity estimate current/field.

    The equilibrium state is the Fermi projector of the untilted
    Hamiltonian; the velocity operator evolves under the tilted one. The
    tilt must stay small against the bandwidth over the box or the
    response leaves the linear regime (warned).
    """
    lat = H.lattice
    if lat is None or not lat.all_open:
        raise ValueError("linear response requires open boundaries")
    times = np.asarray(times, dtype=float)
    es0 = diagonalize(H)
    p = fermi_projector(es0, fermi_energy).matrix
    if field != 0.0:
        span = field * lat.lengths[0]
        if abs(span) > 0.25 * lat.bandwidth_estimate():
            warnings.warn("tilt energy across the box is not small against "
                          "the bandwidth; response may be nonlinear")
    x1 = position_operator(lat, 1).matrix
    h_tilt = Operator(H.matrix + field * x1, lat)
    es = diagonalize(h_tilt)
    from .model import velocity_operator

    v1 = velocity_operator(H, lat, 1).matrix
    v_eig = es.to_eigenbasis(v1)
    p_eig = es.to_eigenbasis(p)
    w = v_eig * p_eig.T  # [n,m] -> v[n,m] p[m,n]
    omega = np.subtract.outer(es.energies, es.energies)
    current = np.empty(times.shape)
    for k, t in enumerate(times):
        val = (np.exp(1j * omega * t) * w).sum() / es.n
        current[k] = float(val.real)
    if times.size >= 2:
        avg = float(np.trapezoid(current, times) / (times[-1] - times[0]))
    else:
        avg = float(current[0])
    sigma = avg / field if field != 0 else math.nan
    return LinearResponseResult(times, current, sigma, field)


# ---------------------------------------------------------------------------
# Ensemble curve assembly
# ---------------------------------------------------------------------------

@dataclass
class TransportCurve:
    """Ensemble-averaged conductivity against one abscissa."""

    abscissa_kind: str  # "frequency" | "regulator" | "fermi_energy"
    abscissa: np.ndarray
    values: np.ndarray
    std_errors: np.ndarray
    component: tuple[int, int]
    temperature: float
    n_realizations: int

    def check_finite(self) -> None:
        if not np.all(np.isfinite(self.values)):
            raise InvariantError("transport curve contains non-finite values")


def _curve(ensemble, fn, kind, grid, component, temperature) -> TransportCurve:
    grid = np.asarray(grid, dtype=float)
    acc = StreamingMoments(grid.shape)
    partials = (ensemble.map(fn) if isinstance(ensemble, Ensemble)
                else [fn(es) for es in ensemble])
    for part in partials:
        acc.update(part)
    curve = TransportCurve(kind, grid, acc.mean, acc.std_error, component,
                           temperature, acc.count)
    curve.check_finite()
    return curve


def ac_curve(ensemble, frequencies, temperature, fermi_energy, eps_reg,
             alpha: int = 1, beta: int = 1) -> TransportCurve:
    return _curve(ensemble,
                  lambda es: ac_conductivity(es, frequencies, temperature,
                                             fermi_energy, eps_reg, alpha, beta),
                  "frequency", frequencies, (alpha, beta), temperature)


def greens_curve(ensemble, fermi_energy, etas, alpha: int = 1,
                 beta: int = 1) -> TransportCurve:
    etas = np.asarray(etas, dtype=float)
    return _curve(ensemble,
                  lambda es: np.array([greens_conductivity(es, fermi_energy,
                                                           e, alpha, beta)
                                       for e in etas]),
                  "regulator", etas, (alpha, beta), 0.0)


def liouvillian_curve(ensemble, fermi_energy, etas, temperature=0.0, nu=0.0,
                      alpha: int = 1, beta: int = 1) -> TransportCurve:
    etas = np.asarray(etas, dtype=float)
    return _curve(ensemble,
                  lambda es: np.array([liouvillian_conductivity(
                      es, fermi_energy, temperature, eta=e, nu=nu,
                      alpha=alpha, beta=beta).real for e in etas]),
                  "regulator", etas, (alpha, beta), temperature)
