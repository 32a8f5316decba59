import math

import numpy as np
import pytest

from ccclab.ensemble import (Ensemble, EnsembleConfig, StreamingMoments,
                             lifshitz_fit, minami_estimator, run_ensemble,
                             scaling_fit, wegner_estimator)
from ccclab.model import DisorderSpec, LatticeSpec
from ccclab.spectral import TraceWindow
from ccclab import ccc


def small_cfg(n=4, workers=1, w=2.0, sites=24, seed=17, kind="uniform"):
    return EnsembleConfig(LatticeSpec((sites,), ("open",)),
                          DisorderSpec(kind, w, master_seed=seed),
                          n_realizations=n, workers=workers)


def mean_energy(es):
    return {"mean_energy": float(es.energies.mean()),
            "spread": float(es.energies[-1] - es.energies[0])}


class TestRunEnsemble:
    def test_single_realization_is_identity(self):
        from ccclab.ensemble import realization_eigensystem

        cfg = small_cfg(n=1)
        out = run_ensemble(cfg, mean_energy)
        direct = mean_energy(realization_eigensystem(cfg, 0))
        assert out["mean_energy"].mean == direct["mean_energy"]
        assert out["mean_energy"].std_error == 0.0

    def test_clean_model_has_zero_variance(self):
        cfg = small_cfg(n=6, w=0.0, kind="none")
        out = run_ensemble(cfg, mean_energy)
        assert out["mean_energy"].variance == pytest.approx(0.0, abs=1e-28)

    def test_worker_count_invariance(self):
        serial = run_ensemble(small_cfg(n=8, workers=1), mean_energy)
        threaded = run_ensemble(small_cfg(n=8, workers=8), mean_energy)
        assert serial["mean_energy"].mean == threaded["mean_energy"].mean
        assert serial["spread"].m2 == threaded["spread"].m2

    def test_repeat_runs_identical(self):
        a = run_ensemble(small_cfg(n=5), mean_energy)
        b = run_ensemble(small_cfg(n=5), mean_energy)
        assert a["mean_energy"].mean == b["mean_energy"].mean


class TestStreamingMoments:
    def test_matches_direct_statistics(self):
        rng = np.random.default_rng(3)
        xs = rng.standard_normal(50)
        acc = StreamingMoments(())
        for x in xs:
            acc.update(x)
        assert acc.mean == pytest.approx(xs.mean(), rel=1e-12)
        assert acc.variance == pytest.approx(xs.var(ddof=1), rel=1e-12)
        assert acc.std_error == pytest.approx(xs.std(ddof=1) / math.sqrt(50),
                                              rel=1e-12)

    def test_merge_associative_commutative(self):
        rng = np.random.default_rng(4)
        xs = rng.standard_normal((30, 3))

        def fill(rows):
            acc = StreamingMoments((3,))
            for r in rows:
                acc.update(r)
            return acc

        whole = fill(xs)
        ab = fill(xs[:10]).merge(fill(xs[10:]))
        cba = fill(xs[20:]).merge(fill(xs[10:20])).merge(fill(xs[:10]))
        for other in (ab, cba):
            assert np.abs(whole.mean - other.mean).max() <= 1e-12
            assert np.abs(whole.variance - other.variance).max() <= 1e-12

    def test_standard_error_scales_as_inverse_sqrt(self):
        # doubling the sample roughly divides the reported error by sqrt(2)
        rng = np.random.default_rng(5)
        xs = rng.standard_normal(1600)
        half = StreamingMoments(())
        full = StreamingMoments(())
        for x in xs[:800]:
            half.update(x)
        for x in xs:
            full.update(x)
        ratio = full.std_error / half.std_error
        assert abs(ratio - 1.0 / math.sqrt(2.0)) <= 0.1


class TestDeterministicSeeding:
    def test_realization_index_drives_stream(self):
        cfg = small_cfg()
        lat = cfg.lattice
        v0 = cfg.disorder_for(0).potential(lat)
        v1 = cfg.disorder_for(1).potential(lat)
        assert not np.array_equal(v0, v1)
        again = cfg.disorder_for(0).potential(lat)
        assert np.array_equal(v0, again)

    def test_map_spectra_matches_map(self):
        cfg = small_cfg(n=3)
        evals = Ensemble(cfg).map_spectra()
        full = Ensemble(cfg).map(lambda es: es.energies)
        for a, b in zip(evals, full):
            assert np.allclose(a, b, atol=1e-12)


class TestWegner:
    def test_zero_off_spectrum(self):
        rep = wegner_estimator(Ensemble(small_cfg(n=3)), 50.0, [0.5, 0.25])
        assert np.all(rep.ratios == 0.0)

    def test_clean_degenerate_level_diverges(self):
        cfg = EnsembleConfig(LatticeSpec((64,), ("periodic",)),
                             DisorderSpec(), n_realizations=1)
        widths = [0.5, 0.05, 0.005]
        # anchored at a doubly degenerate ring level
        rep = wegner_estimator(Ensemble(cfg), -2.0 * np.cos(2 * np.pi / 64),
                               widths, TraceWindow(1.0))
        assert rep.ratios[-1] > 4.0 * rep.ratios[0]
        assert not rep.plateau

    def test_disordered_plateau_bounded(self):
        cfg = small_cfg(n=80, w=2.0, sites=128, seed=23)
        rep = wegner_estimator(Ensemble(cfg), 0.0,
                               [1.0, 0.5, 0.25, 0.125, 0.0625])
        assert rep.plateau
        assert rep.ratios.max() <= 1.2 * 0.5  # density sup-norm is 1/W


class TestMinami:
    def test_zero_when_at_most_one_level(self):
        # clean chain: all gaps near the band center exceed the window
        cfg = EnsembleConfig(LatticeSpec((32,), ("open",)), DisorderSpec(),
                             n_realizations=1)
        rep = minami_estimator(Ensemble(cfg), 0.0, [1e-4, 5e-5])
        assert np.all(rep.moments == 0.0)

    def test_bound_and_positive_slope(self):
        cfg = small_cfg(n=150, w=2.0, sites=128, seed=31)
        rep = minami_estimator(Ensemble(cfg), 0.0, [0.4, 0.2, 0.1, 0.05])
        bound = rep.bound(128, 0.5)
        assert np.all(rep.moments <= bound)
        assert rep.slope > 1.0


class TestLifshitz:
    def test_clean_model_refused(self):
        cfg = EnsembleConfig(LatticeSpec((64,), ("open",)), DisorderSpec(),
                             n_realizations=2)
        pooled = np.concatenate(Ensemble(cfg).map_spectra())
        with pytest.raises(ValueError):
            lifshitz_fit(pooled)

    def test_insufficient_points_refused(self):
        with pytest.raises(ValueError):
            lifshitz_fit(np.linspace(0.0, 1.0, 50))

    def test_disordered_tail_positive_exponent(self):
        cfg = small_cfg(n=60, w=4.0, sites=256, seed=37)
        pooled = np.concatenate(Ensemble(cfg).map_spectra())
        rep = lifshitz_fit(pooled, band=(1e-4, 1e-2))
        assert rep.exponent > 0
        assert rep.edge < -3.0


class TestScalingFit:
    def test_exact_power_recovery(self):
        eps = 1.0 * 2.0 ** -np.arange(10)
        scan = ccc.WindowScan(0.0, eps, 2.5 * eps**1.7, np.zeros(10),
                              np.full(10, 10.0), "diagonal", 1)
        fit = scaling_fit(scan)
        assert fit.a == pytest.approx(1.7, abs=1e-8)
        assert not fit.degenerate

    def test_power_log_recovery(self):
        eps = 0.5 * 2.0 ** -np.arange(10)
        vals = 1.3 * eps**2 * np.abs(np.log(eps)) ** 3
        scan = ccc.WindowScan(0.0, eps, vals, np.zeros(10),
                              np.full(10, 10.0), "diagonal", 1)
        fit = scaling_fit(scan, "power_log")
        assert fit.a == pytest.approx(2.0, abs=1e-6)
        assert fit.b == pytest.approx(3.0, abs=1e-5)

    def test_too_few_rungs_degenerate(self):
        eps = np.array([0.5, 0.25, 0.125])
        scan = ccc.WindowScan(0.0, eps, eps, np.zeros(3), np.ones(3),
                              "diagonal", 1)
        assert scaling_fit(scan).degenerate

    def test_unknown_model_rejected(self):
        eps = 0.5 * 2.0 ** -np.arange(6)
        scan = ccc.WindowScan(0.0, eps, eps, np.zeros(6), np.ones(6),
                              "diagonal", 1)
        with pytest.raises(ValueError):
            scaling_fit(scan, "cubic_spline")

    def test_confidence_interval(self):
        eps = 0.5 * 2.0 ** -np.arange(8)
        rng = np.random.default_rng(0)
        vals = 2.0 * eps * np.exp(rng.normal(0, 0.05, 8))
        ses = 0.05 * vals
        scan = ccc.WindowScan(0.0, eps, vals, ses, np.full(8, 10.0),
                              "diagonal", 40)
        fit = scaling_fit(scan)
        lo, hi = fit.exponent_ci()
        assert lo < fit.a < hi
        assert lo > 0  # exponent significantly positive
