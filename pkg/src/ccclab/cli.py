"""Declarative experiment runner.

``ccclab run <config>`` executes the experiments listed in a YAML config
against a seeded disorder ensemble, writing one CSV per experiment plus a
machine-readable ``summary.json`` holding every scalar result and the
full invariant verdict list. ``ccclab verify <config>`` runs the
exact-identity suite on fresh realizations of the configured model.

Exit codes: 0 success, 2 config/schema error, 3 capacity or cache error,
4 invariant violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, ccc, localization, transport
from .cache import EigenCache, EigenFactory
from .config import ExperimentConfig, load_config
from .ensemble import (Ensemble, EnsembleConfig, StreamingMoments,
                       lifshitz_fit, log_event, minami_estimator,
                       scaling_fit, wegner_estimator)
from .errors import CacheError, CapacityError, ConfigError, InvariantError
from .spectral import EnergyInterval, TraceWindow

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CAPACITY = 3
EXIT_INVARIANT = 4


def fmt(x) -> str:
    """Floats with 17 significant digits; round-trips exactly."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def jsonable(obj):
    """Recursively convert numpy scalars/arrays for JSON serialization."""
    if isinstance(obj, dict):
        return {k: jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    return obj


def write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) if isinstance(v, (int, float, np.floating,
                                                       np.integer))
                              else str(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


class RunContext:
    def __init__(self, cfg: ExperimentConfig, outdir: Path):
        self.cfg = cfg
        self.outdir = outdir
        self.verdicts: list[dict] = []
        self.scalars: dict[str, dict] = {}
        cache = None
        if cfg.cache != "off":
            cache_dir = cfg.cache_dir or str(outdir / "eigencache")
            cache = EigenCache(cache_dir)
        self.factory = EigenFactory(cache, cfg.cache)
        self.cache = cache

    def ensemble(self) -> Ensemble:
        ecfg = EnsembleConfig(self.cfg.lattice, self.cfg.disorder,
                              self.cfg.n_realizations, self.cfg.workers)
        return Ensemble(ecfg, eigensystem_factory=self.factory)

    def verdict(self, name: str, passed: bool, detail: str = "") -> None:
        self.verdicts.append({"name": name, "passed": bool(passed),
                              "detail": detail})
        if not passed:
            raise InvariantError(f"invariant {name} failed: {detail}")


def _ladder(ctx: RunContext, exp: dict) -> np.ndarray:
    bw = ctx.cfg.lattice.bandwidth_estimate(ctx.cfg.disorder)
    eps0 = float(exp.get("eps0", bw / 8.0))
    rungs = int(exp.get("rungs", 8))
    ratio = float(exp.get("ratio", 2.0))
    return eps0 * ratio ** -np.arange(rungs)


def run_ccc_histogram(ctx: RunContext, exp: dict) -> dict:
    grid = ccc.CccGrid.for_model(ctx.cfg.lattice, ctx.cfg.disorder,
                                 n_bins=int(exp.get("bins", 512)))
    hist = ccc.CccHistogram(grid, ctx.cfg.lattice.dimension)
    ens = ctx.ensemble()
    for part in ens.map(lambda es: ccc.accumulate_ccc(es, grid)):
        hist.merge(part)
    hist.check_invariants()
    ctx.verdict("ccc_histogram_symmetry_positivity", True)
    edges = grid.edges
    d = ctx.cfg.lattice.dimension
    for a in range(1, d + 1):
        for b in range(1, d + 1):
            parts = [("", "re")] + ([("_hall", "im")] if a != b else [])
            for suffix, part in parts:
                acc = (hist.re if part == "re" else hist.im)[(a, b)]
                mean, var = acc.mean, acc.variance
                nz = np.argwhere((mean != 0) | (var != 0))
                rows = [(edges[i], edges[j], mean[i, j], var[i, j], acc.count)
                        for i, j in nz]
                write_csv(ctx.outdir / f"ccc_histogram_{a}{b}{suffix}.csv",
                          ["bin_lo_1", "bin_lo_2", "mean", "variance",
                           "count"], rows)
    return {"total_mass_11": float(hist.re[(1, 1)].mean.sum()),
            "overflow_weight": hist.overflow_weight,
            "n_realizations": hist.n_realizations}


def _write_scan(ctx: RunContext, scan, filename: str) -> None:
    rows = [(scan.epsilons[k], scan.values[k], scan.std_errors[k],
             scan.level_counts[k], scan.n_realizations)
            for k in range(scan.epsilons.size)]
    write_csv(ctx.outdir / filename,
              ["epsilon", "value_mean", "value_se", "level_count_mean",
               "n_realizations"], rows)


def run_diagonal_scan(ctx: RunContext, exp: dict) -> dict:
    ladder = _ladder(ctx, exp)
    scan = ccc.diagonal_scan(ctx.ensemble(), float(exp.get("energy", 0.0)),
                             ladder, centered=bool(exp.get("centered", False)))
    _write_scan(ctx, scan, "diagonal_scan.csv")
    fit = scaling_fit(scan)
    return {"fit_exponent": fit.a, "fit_exponent_se": fit.a_se,
            "fit_rungs": fit.n_rungs_used, "fit_degenerate": fit.degenerate}


def run_box_scan(ctx: RunContext, exp: dict) -> dict:
    ladder = _ladder(ctx, exp)
    scan = ccc.box_scan(ctx.ensemble(), float(exp.get("energy", 0.0)), ladder)
    _write_scan(ctx, scan, "box_scan.csv")
    fit = scaling_fit(scan)
    return {"fit_exponent": fit.a, "fit_exponent_se": fit.a_se,
            "fit_rungs": fit.n_rungs_used, "fit_degenerate": fit.degenerate}


def run_dc_density(ctx: RunContext, exp: dict) -> dict:
    ladder = _ladder(ctx, exp)
    scan = ccc.diagonal_scan(ctx.ensemble(), float(exp.get("energy", 0.0)),
                             ladder)
    _write_scan(ctx, scan, "dc_density_scan.csv")
    est = transport.dc_density(scan)
    return {"estimate": est.estimate, "std_error": est.std_error,
            "eps": est.eps, "divergent": est.divergent, "slope": est.slope,
            "slope_se": est.slope_se}


def run_ac_conductivity(ctx: RunContext, exp: dict) -> dict:
    nu_max = float(exp.get("nu_max",
                           ctx.cfg.lattice.bandwidth_estimate(ctx.cfg.disorder)))
    nus = np.linspace(0.0, nu_max, int(exp.get("nu_points", 64)))
    t = float(exp.get("temperature", 0.0))
    alpha = int(exp.get("alpha", 1))
    beta = int(exp.get("beta", 1))
    curve = transport.ac_curve(ctx.ensemble(), nus, t,
                               float(exp.get("fermi_energy", 0.0)),
                               float(exp.get("eps_reg", 0.05)), alpha, beta)
    rows = [(nus[k], curve.values[k], curve.std_errors[k],
             f"{alpha}{beta}", t) for k in range(nus.size)]
    write_csv(ctx.outdir / "ac_conductivity.csv",
              ["frequency", "sigma_mean", "sigma_se", "component",
               "temperature"], rows)
    ctx.verdict("ac_curve_finite", bool(np.all(np.isfinite(curve.values))))
    return {"sigma_at_zero": float(curve.values[0]),
            "sigma_max": float(curve.values.max())}


def run_greens(ctx: RunContext, exp: dict) -> dict:
    etas = np.asarray(exp.get("etas", [0.5, 0.25, 0.125, 0.0625]), dtype=float)
    ef = float(exp.get("fermi_energy", 0.0))
    alpha = int(exp.get("alpha", 1))
    beta = int(exp.get("beta", 1))

    def one(es):
        g = np.array([transport.greens_conductivity(es, ef, e, alpha, beta)
                      for e in etas])
        l = np.array([transport.lorentzian_ccc(es, ef, e, alpha, beta)
                      for e in etas])
        return {"sigma": g,
                "residual": np.abs(g - l) / np.maximum(1.0, np.abs(g))}

    ens = ctx.ensemble()
    sigma_acc = StreamingMoments(etas.shape)
    worst = 0.0
    for part in ens.map(one):
        sigma_acc.update(part["sigma"])
        worst = max(worst, float(part["residual"].max()))
    rows = [(etas[k], sigma_acc.mean[k], sigma_acc.std_error[k],
             f"{alpha}{beta}", 0.0) for k in range(etas.size)]
    write_csv(ctx.outdir / "greens.csv",
              ["eta", "sigma_mean", "sigma_se", "component", "temperature"],
              rows)
    ctx.verdict("greens_lorentzian_duality", worst <= 1e-9,
                f"max residual {worst:g}")
    return {"duality_residual": worst,
            "sigma_smallest_eta": float(sigma_acc.mean[-1])}


def run_liouvillian(ctx: RunContext, exp: dict) -> dict:
    etas = np.asarray(exp.get("etas", [0.5, 0.25, 0.125, 0.0625]), dtype=float)
    curve = transport.liouvillian_curve(
        ctx.ensemble(), float(exp.get("fermi_energy", 0.0)), etas,
        temperature=float(exp.get("temperature", 0.0)),
        nu=float(exp.get("nu", 0.0)),
        alpha=int(exp.get("alpha", 1)), beta=int(exp.get("beta", 1)))
    rows = [(etas[k], curve.values[k], curve.std_errors[k],
             f"{curve.component[0]}{curve.component[1]}", curve.temperature)
            for k in range(etas.size)]
    write_csv(ctx.outdir / "liouvillian.csv",
              ["eta", "sigma_mean", "sigma_se", "component", "temperature"],
              rows)
    return {"sigma_smallest_eta": float(curve.values[-1])}


def run_streda(ctx: RunContext, exp: dict) -> dict:
    ef = float(exp.get("fermi_energy", 0.0))
    window = TraceWindow(float(exp.get("window", 0.4)))
    ens = ctx.ensemble()
    acc = StreamingMoments(())
    for val in ens.map(lambda es: transport.streda_marker(es, ef, window)):
        acc.update(val)
    write_csv(ctx.outdir / "streda.csv",
              ["fermi_energy", "marker_mean", "marker_se", "window"],
              [(ef, float(acc.mean), float(acc.std_error), window.fraction)])
    return {"marker": float(acc.mean), "marker_se": float(acc.std_error)}


def run_fermi_kernel(ctx: RunContext, exp: dict) -> dict:
    ef = float(exp.get("fermi_energy", 0.0))
    ens = ctx.ensemble()
    profiles = ens.map(lambda es: transport.fermi_kernel_profile(es, ef))
    dist = profiles[0].distances
    prof_acc = StreamingMoments(dist.shape)
    sm_acc = StreamingMoments(())
    for p in profiles:
        prof_acc.update(p.profile)
        sm_acc.update(p.second_moment)
    rows = [(dist[k], prof_acc.mean[k], prof_acc.std_error[k])
            for k in range(dist.size)]
    write_csv(ctx.outdir / "fermi_kernel.csv",
              ["distance", "kernel_mean", "kernel_se"], rows)
    ok = (prof_acc.mean > 1e-14) & (dist > 0)
    rate = float("nan")
    if ok.sum() >= 3:
        from .ensemble import _weighted_line_fit
        slope, _ = _weighted_line_fit(dist[ok], np.log(prof_acc.mean[ok]),
                                      np.zeros(int(ok.sum())))
        rate = -slope
    return {"second_moment": float(sm_acc.mean),
            "second_moment_se": float(sm_acc.std_error),
            "decay_rate_mean_profile": rate}


def run_linear_response(ctx: RunContext, exp: dict) -> dict:
    from .model import build_hamiltonian

    ef = float(exp.get("fermi_energy", 0.0))
    field = float(exp.get("field", 0.001))
    times = np.linspace(0.0, float(exp.get("t_max", 50.0)),
                        int(exp.get("n_times", 128)))
    cfg = ctx.cfg
    sigma_acc = StreamingMoments(())
    current_acc = StreamingMoments(times.shape)
    for r in range(cfg.n_realizations):
        H = build_hamiltonian(cfg.lattice, cfg.disorder.with_realization(r))
        res = transport.linear_response_current(H, ef, field, times)
        sigma_acc.update(res.sigma_estimate)
        current_acc.update(res.current)
    rows = [(times[k], current_acc.mean[k], current_acc.std_error[k])
            for k in range(times.size)]
    write_csv(ctx.outdir / "linear_response.csv",
              ["time", "current_mean", "current_se"], rows)
    return {"sigma_estimate": float(sigma_acc.mean),
            "sigma_se": float(sigma_acc.std_error), "field": field}


def run_loclength(ctx: RunContext, exp: dict) -> dict:
    lo, hi = exp.get("interval", [-0.5, 0.5])
    interval = EnergyInterval(float(lo), float(hi))
    t_ladder = tuple(exp.get("t_ladder", (10.0, 100.0, 1000.0)))
    ens = ctx.ensemble()
    reports = ens.map(lambda es: localization.localization_report(
        es, interval, t_ladder))
    keys = ("length_sq_spectral", "length_sq_moment", "bound_ratio",
            "route_residual", "excluded_weight")
    out = {}
    for key in keys:
        acc = StreamingMoments(())
        for rep in reports:
            acc.update(getattr(rep, key))
        out[key + "_mean"] = float(acc.mean)
        out[key + "_se"] = float(acc.std_error)
    out["max_route_residual"] = max(r.route_residual for r in reports)
    out["max_bound_ratio"] = max(r.bound_ratio for r in reports)
    time_acc = StreamingMoments(np.asarray(t_ladder).shape)
    for rep in reports:
        time_acc.update(rep.length_sq_time)
    out["time_ladder"] = list(map(float, t_ladder))
    out["length_sq_time_mean"] = [float(v) for v in time_acc.mean]
    (ctx.outdir / "loclength.json").write_text(
        json.dumps(out, sort_keys=True, indent=1))
    ctx.verdict("loclength_route_identity",
                out["max_route_residual"] <= 1e-9 * max(
                    1.0, out["length_sq_spectral_mean"]))
    ctx.verdict("loclength_bound", out["max_bound_ratio"] <= 1.0 + 1e-9)
    return out


def run_wegner(ctx: RunContext, exp: dict) -> dict:
    widths = exp.get("widths", [1.0, 0.5, 0.25, 0.125, 0.0625])
    rep = wegner_estimator(ctx.ensemble(), float(exp.get("energy", 0.0)),
                           widths,
                           TraceWindow(float(exp.get("window", 0.6))))
    rows = [(rep.widths[k], rep.ratios[k], rep.ratio_se[k])
            for k in range(rep.widths.size)]
    write_csv(ctx.outdir / "wegner.csv", ["width", "ratio_mean", "ratio_se"],
              rows)
    return {"plateau": rep.plateau, "max_ratio": float(rep.ratios.max())}


def run_minami(ctx: RunContext, exp: dict) -> dict:
    widths = exp.get("widths", [0.2, 0.1, 0.05, 0.025])
    rep = minami_estimator(ctx.ensemble(), float(exp.get("energy", 0.0)),
                           widths)
    n = ctx.cfg.lattice.n_sites
    bound = rep.bound(n, ctx.cfg.disorder.density_bound) \
        if np.isfinite(ctx.cfg.disorder.density_bound) \
        else np.full(rep.widths.shape, np.inf)
    rows = [(rep.widths[k], rep.moments[k], rep.moment_se[k], bound[k])
            for k in range(rep.widths.size)]
    write_csv(ctx.outdir / "minami.csv",
              ["width", "moment_mean", "moment_se", "bound"], rows)
    return {"slope": rep.slope, "slope_se": rep.slope_se,
            "bound_satisfied": bool(np.all(rep.moments <= bound + 1e-12))}


def run_lifshitz(ctx: RunContext, exp: dict) -> dict:
    ens = ctx.ensemble()
    pooled = np.concatenate(ens.map_spectra())
    band = tuple(exp.get("band", (1e-6, 1e-2)))
    rep = lifshitz_fit(pooled, band=band)
    out = {"exponent": rep.exponent, "exponent_se": rep.exponent_se,
           "edge": rep.edge, "n_points": rep.n_points}
    (ctx.outdir / "lifshitz.json").write_text(
        json.dumps(out, sort_keys=True, indent=1))
    return out


RUNNERS = {
    "ccc_histogram": run_ccc_histogram,
    "diagonal_scan": run_diagonal_scan,
    "box_scan": run_box_scan,
    "dc_density": run_dc_density,
    "ac_conductivity": run_ac_conductivity,
    "greens": run_greens,
    "liouvillian": run_liouvillian,
    "streda": run_streda,
    "fermi_kernel": run_fermi_kernel,
    "linear_response": run_linear_response,
    "loclength": run_loclength,
    "wegner": run_wegner,
    "minami": run_minami,
    "lifshitz": run_lifshitz,
}


def execute(cfg: ExperimentConfig, quiet: bool = False) -> dict:
    outdir = Path(cfg.output)
    outdir.mkdir(parents=True, exist_ok=True)
    ctx = RunContext(cfg, outdir)
    ctx.verdict("config_schema", True)
    for exp in cfg.experiments:
        name = exp["name"]
        if not quiet:
            log_event(event="experiment_start", experiment=name,
                      seed=cfg.master_seed)
        try:
            ctx.scalars[name] = RUNNERS[name](ctx, exp)
        except (CapacityError, CacheError, InvariantError, ConfigError):
            raise
        except ValueError as exc:
            raise ConfigError(
                f"experiment {name} (seed {cfg.master_seed}): {exc}") from exc
        if not quiet:
            log_event(event="experiment_done", experiment=name)
    summary = jsonable({
        "version": __version__,
        "master_seed": cfg.master_seed,
        "n_realizations": cfg.n_realizations,
        "workers": cfg.workers,
        "model": cfg.raw.get("model", {}),
        "experiments": ctx.scalars,
        "invariants": ctx.verdicts,
        "diagonalizations": ctx.factory.computed,
        "cache_hits": ctx.cache.hits if ctx.cache else 0,
    })
    (outdir / "summary.json").write_text(
        json.dumps(summary, sort_keys=True, indent=1))
    return summary


# ---------------------------------------------------------------------------
# Identity-suite verification
# ---------------------------------------------------------------------------

def verify_config(cfg: ExperimentConfig, quiet: bool = False) -> tuple[dict, bool]:
    """Run the exact-identity suite on fresh realizations of the model."""
    ctx = RunContext(cfg, Path(cfg.output))
    checks = {
        "decomposition": 0.0,
        "dual_route": 0.0,
        "loclength_routes": 0.0,
        "greens_lorentzian": 0.0,
        "sum_rule": 0.0,
    }
    open_bc = cfg.lattice.all_open
    ecfg = EnsembleConfig(cfg.lattice, cfg.disorder, cfg.n_realizations,
                          cfg.workers)
    for r in range(cfg.n_realizations):
        es = ctx.factory(ecfg, r)
        rng = np.random.default_rng(np.random.SeedSequence(
            entropy=cfg.master_seed, spawn_key=(r, 1)))
        lo, hi = float(es.energies[0]), float(es.energies[-1])
        spread = hi - lo
        velocities = ccc.eigen_velocities(es)
        if open_bc:
            for _ in range(3):
                eps = spread * rng.uniform(0.02, 0.2)
                energy = rng.uniform(lo, hi - eps)
                dec = ccc.decomposition_check(es, energy, eps)
                checks["decomposition"] = max(
                    checks["decomposition"],
                    dec.residual / max(1.0, abs(dec.measure)))
        for _ in range(3):
            edges = np.sort(rng.uniform(lo - 0.1, hi + 0.1, 4))
            d1 = EnergyInterval(edges[0], edges[1] + 1e-9)
            d2 = EnergyInterval(edges[2], edges[3] + 1e-9)
            eig = ccc.window_measure(es, d1, d2, velocities=velocities)
            tr = ccc._window_measure_trace(es, d1, d2, 1, 1)
            checks["dual_route"] = max(
                checks["dual_route"], abs(eig - tr) / max(1.0, abs(eig)))
        if open_bc:
            for _ in range(2):
                edges = np.sort(rng.uniform(lo, hi, 2))
                win = EnergyInterval(edges[0], edges[1] + 1e-9)
                spec = localization.loc_length_spectral(
                    es, win, velocities=velocities)
                mom = localization.loc_length_moment(es, win)
                checks["loclength_routes"] = max(
                    checks["loclength_routes"],
                    abs(spec.length_sq - mom) / max(1.0, spec.length_sq))
        for eta in (0.5, 0.1, 0.02):
            ef = rng.uniform(lo, hi)
            g = transport.greens_conductivity(es, ef, eta)
            l = transport.lorentzian_ccc(es, ef, eta, velocities=velocities)
            checks["greens_lorentzian"] = max(
                checks["greens_lorentzian"], abs(g - l) / max(1.0, abs(g)))
        for a in range(1, cfg.lattice.dimension + 1):
            mass, trace = ccc.sum_rule(es, a, velocities=velocities)
            checks["sum_rule"] = max(
                checks["sum_rule"], abs(mass - trace) / max(1.0, abs(trace)))
    tolerances = {"decomposition": 1e-9, "dual_route": 1e-10,
                  "loclength_routes": 1e-9, "greens_lorentzian": 1e-9,
                  "sum_rule": 1e-10}
    report = {name: {"max_residual": val, "tolerance": tolerances[name],
                     "passed": val <= tolerances[name],
                     "skipped": (not open_bc) and name in
                     ("decomposition", "loclength_routes")}
              for name, val in checks.items()}
    ok = all(entry["passed"] or entry["skipped"] for entry in report.values())
    if not quiet:
        for name, entry in report.items():
            status = ("SKIP (periodic)" if entry["skipped"]
                      else "PASS" if entry["passed"] else "FAIL")
            log_event(event="verify_check", check=name, status=status,
                      max_residual=entry["max_residual"])
    return report, ok


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    import dataclasses

    updates = {}
    if args.output is not None:
        updates["output"] = args.output
    if args.workers is not None:
        updates["workers"] = args.workers
    if args.cache is not None:
        updates["cache"] = args.cache
    if args.seed is not None:
        updates["master_seed"] = args.seed
        updates["disorder"] = dataclasses.replace(cfg.disorder,
                                                  master_seed=args.seed)
    return dataclasses.replace(cfg, **updates) if updates else cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ccclab",
        description="exact-diagonalization lab for correlation measures, "
                    "conductivity and localization on random lattices")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (("run", "execute the experiments in a config"),
                           ("verify", "run the exact-identity suite")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("config", help="path to YAML config")
        p.add_argument("--output", help="output directory override")
        p.add_argument("--workers", type=int, help="worker count override")
        p.add_argument("--seed", type=int, help="master seed override")
        p.add_argument("--cache", choices=["off", "read", "read_write"],
                       help="cache policy override")
        p.add_argument("--quiet", action="store_true",
                       help="suppress progress logs")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        if args.command == "run":
            summary = execute(cfg, quiet=args.quiet)
            if not args.quiet:
                log_event(event="run_done", output=cfg.output,
                          diagonalizations=summary["diagonalizations"])
            return EXIT_OK
        report, ok = verify_config(cfg, quiet=args.quiet)
        outdir = Path(cfg.output)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "verify_report.json").write_text(
            json.dumps(report, sort_keys=True, indent=1))
        return EXIT_OK if ok else EXIT_INVARIANT
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CapacityError, CacheError) as exc:
        print(f"capacity/cache error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except InvariantError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
