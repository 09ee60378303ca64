"""Acceptance suite: one test per gate criterion, each printing a PASS line.

Run with `pytest -s tests/test_acceptance.py` to see the per-criterion lines.
The desk-scale study configurations (sample counts, replicate counts, seeds)
are fixed here; the reference values quoted in comments come from the study
tables this package reproduces.
"""

import os
import subprocess
import sys

import numpy as np

from condsurv import (
    BenchConfig,
    SurvivalSample,
    TimeGrid,
    beran_survival,
    beran_weights,
    bootstrap_sigma,
    calibrate_lambda,
    conditional_step_law,
    coverage_fraction,
    inverse_transform_sample,
    kaplan_meier,
    make_model,
    method2_radius,
    run_benchmark,
    scaling_study,
    smoothed_beran_survival,
    true_survival,
    winkler_scores,
)
from condsurv.estimators import _jumps_from_survival, _product_limit_rows
from condsurv.resampling import substream

from conftest import random_sample

WORKERS = min(2, os.cpu_count() or 1)
SEED = 20250808


def report_line(criterion: str, passed: bool, detail: str) -> None:
    status = "PASS" if passed else "FAIL"
    print(f"[ACCEPTANCE] {criterion}: {status} - {detail}")


def test_criterion_1_analytic_model_identities():
    m_low = make_model("model1", 0.2)
    m_high = make_model("model1", 0.5)
    checks = {
        "model1 censoring(0.6)=0.2": abs(m_low.censoring_probability(0.6) - 0.2) < 1e-14,
        "model1 censoring(0.6)=0.5": abs(m_high.censoring_probability(0.6) - 0.5) < 1e-14,
        "model1 S(0.8654|0.6)=0.05": abs(true_survival(m_low, 0.8654, 0.6) - 0.05) <= 5e-4,
        "model2 S(3.8211|0.8)=0.05": abs(true_survival(make_model("model2", 0.2), 3.8211, 0.8) - 0.05) <= 5e-4,
    }
    passed = all(checks.values())
    report_line("criterion 1 (model identities)", passed, "; ".join(f"{k}={v}" for k, v in checks.items()))
    assert passed


def test_criterion_2_estimator_property_suite():
    rng = np.random.default_rng(SEED)
    km_max_err = 0.0
    for _ in range(100):
        s = random_sample(rng, int(rng.integers(2, 51)))
        grid = TimeGrid.uniform(float(s.z.max() * 1.1), 25)
        km = kaplan_meier(s, grid).values
        big = beran_survival(s, float(rng.random()), 1e9, grid).values
        km_max_err = max(km_max_err, float(np.max(np.abs(km - big))))

    range_ok = monotone_ok = True
    for _ in range(1000):
        s = random_sample(rng, int(rng.integers(2, 40)))
        grid = TimeGrid.uniform(float(s.z.max() * 1.2), 20)
        x0, h = float(rng.random()), 0.1 + float(rng.random())
        for values in (
            beran_survival(s, x0, h, grid).values,
            smoothed_beran_survival(s, x0, h, 0.02 + float(rng.random()), grid).values,
        ):
            range_ok &= bool(np.all((values >= 0.0) & (values <= 1.0)))
            monotone_ok &= bool(np.all(np.diff(values) <= 1e-12))

    jump_err = 0.0
    for _ in range(200):
        s = random_sample(rng, 30)
        w = beran_weights(s, 0.5, 0.4).w
        order = np.lexsort((1.0 - s.delta, s.z))
        surv = _product_limit_rows(w[order][None, :], s.delta[order][None, :])[0]
        jumps = _jumps_from_survival(surv)
        jump_err = max(jump_err, abs(float(jumps.sum()) - (1.0 - float(surv[-1]))))

    g_recover_err = 0.0
    for _ in range(50):
        s = random_sample(rng, 25)
        pts, t = [], 1e-3
        while len(pts) < 12:
            t += 0.0917
            if np.min(np.abs(s.z - t)) >= 1e-3:
                pts.append(t)
        grid = TimeGrid(np.array(pts))
        a = beran_survival(s, 0.5, 0.3, grid).values
        b = smoothed_beran_survival(s, 0.5, 0.3, 1e-6, grid).values
        g_recover_err = max(g_recover_err, float(np.max(np.abs(a - b))))

    passed = km_max_err <= 1e-12 and range_ok and monotone_ok and jump_err <= 1e-12 and g_recover_err <= 1e-9
    report_line(
        "criterion 2 (estimator properties)",
        passed,
        f"KM reduction max err {km_max_err:.2e}; range/monotone on 1000 samples "
        f"{range_ok}/{monotone_ok}; jump-mass err {jump_err:.2e}; g->0 err {g_recover_err:.2e}",
    )
    assert passed


def test_criterion_3_resampling_law_correctness():
    # exact small-n enumeration (atom probabilities of the sampler's law tables
    # against a from-scratch product-limit enumeration)
    from conftest import pure_product_limit
    import math

    sample = SurvivalSample(
        x=[0.1, 0.3, 0.5, 0.7, 0.9], z=[2.0, 1.0, 4.0, 3.0, 5.0], delta=[1, 0, 1, 1, 0]
    )
    r = 0.45
    max_atom_err = 0.0
    for xj in sample.x:
        for censoring in (False, True):
            law = conditional_step_law(sample, r, float(xj), censoring=censoring)
            d = [1 - di if censoring else di for di in sample.delta]
            k = [math.exp(-0.5 * ((xj - xi) / r) ** 2) for xi in sample.x]
            w = [ki / sum(k) for ki in k]
            steps = pure_product_limit(list(sample.z), d, w)
            oracle_cum = {}
            prev = 1.0
            for zi, si in steps:
                oracle_cum[zi] = 1.0 - si
                prev = si
            for atom, cum in zip(law.atoms, law.cum):
                max_atom_err = max(max_atom_err, abs(cum - oracle_cum[atom]))
    enum_ok = max_atom_err <= 1e-10

    # KS distance of 1e5 inverse-transform draws against the estimated cdf
    rng = np.random.default_rng(SEED + 1)
    z = rng.exponential(1.0, 12)
    s_unc = SurvivalSample(x=rng.random(12), z=z, delta=np.ones(12))
    law = conditional_step_law(s_unc, 0.25, float(s_unc.x[4]))
    draws, sat = inverse_transform_sample(law, substream(SEED + 2).random(100_000))
    atoms = np.unique(law.atoms)
    ecdf = np.searchsorted(np.sort(draws), atoms, side="right") / draws.size
    idx = np.searchsorted(law.atoms, atoms, side="right") - 1
    ks = float(np.max(np.abs(ecdf - law.cum[idx])))
    ks_ok = ks <= 0.01 and not sat.any()

    passed = enum_ok and ks_ok
    report_line(
        "criterion 3 (resampling law)",
        passed,
        f"enumeration max err {max_atom_err:.2e} (<=1e-10); KS over 1e5 draws {ks:.4f} (<=0.01)",
    )
    assert passed


def test_criterion_4_bandwidth_selector_reproduction():
    config_1d = BenchConfig(
        model="model1", censoring=0.2, estimator="beran", mode="bandwidth",
        n=400, n_samples=50, B=200, n_grid=100, seed=SEED,
        strategy="multistart", mise_samples=100, mise_grid=24, workers=WORKERS,
    )
    report_1d = run_benchmark(config_1d)
    mean_h = report_1d.bandwidth_metrics.mean_h
    ok_1d = 0.12 <= mean_h <= 0.36  # reference: 0.23815 (sd 0.093)

    config_2d = BenchConfig(
        model="model1", censoring=0.5, estimator="smoothed-beran", mode="bandwidth",
        n=400, n_samples=20, B=100, n_grid=100, seed=SEED,
        strategy="multistart", mise_samples=100, mise_grid=16, workers=WORKERS,
    )
    report_2d = run_benchmark(config_2d)
    mean_h2 = report_2d.bandwidth_metrics.mean_h
    mean_g2 = report_2d.bandwidth_metrics.mean_g
    ok_2d = (0.10 <= mean_h2 <= 0.40) and (0.05 <= mean_g2 <= 0.20)  # reference: (0.22600, 0.11474)

    # seed determinism of a single selection rerun
    rerun = run_benchmark(
        BenchConfig(
            model="model1", censoring=0.2, estimator="beran", mode="bandwidth",
            n=400, n_samples=2, B=50, n_grid=50, seed=SEED,
            strategy="multistart", mise_samples=10, mise_grid=6, workers=1,
        )
    )
    rerun_again = run_benchmark(
        BenchConfig(
            model="model1", censoring=0.2, estimator="beran", mode="bandwidth",
            n=400, n_samples=2, B=50, n_grid=50, seed=SEED,
            strategy="multistart", mise_samples=10, mise_grid=6, workers=WORKERS,
        )
    )
    det_ok = rerun.h_stars == rerun_again.h_stars

    passed = ok_1d and ok_2d and det_ok
    report_line(
        "criterion 4 (bandwidth selector)",
        passed,
        f"1-D mean h*={mean_h:.4f} in [0.12,0.36]={ok_1d}; "
        f"2-D mean (h*,g*)=({mean_h2:.4f},{mean_g2:.4f}) in box={ok_2d}; determinism={det_ok}",
    )
    assert passed


def test_criterion_5_confidence_region_reproduction():
    config = BenchConfig(
        model="model1", censoring=0.5, estimator="smoothed-beran", mode="regions",
        n=400, n_samples=100, B=200, n_grid=100, seed=SEED,
        alpha=0.05, methods=(1, 2),
        bandwidth_h=0.20408, bandwidth_g=0.08102,  # reference MISE-optimal pair
        workers=WORKERS, keep_regions=True,
    )
    report = run_benchmark(config)
    m1 = report.region_metrics_by_method["method1"]
    m2 = report.region_metrics_by_method["method2"]
    ok_m2_pointwise = m2["pointwise_coverage"] >= 0.95  # reference 99.67%
    ok_m2_coverage = m2["coverage"] >= 0.85  # reference 98.67%
    ok_m1_pointwise = m1["pointwise_coverage"] >= 0.90  # reference 96.57%

    model = make_model("model1", 0.5)
    dominance_ok = True
    for method, regions in report.regions.items():
        for region in regions:
            truth = model.true_survival(region.grid.points, model.x0)
            ws = winkler_scores(region.lower, region.upper, truth, 1.0 - region.level)
            width = region.upper - region.lower
            dominance_ok &= bool(np.all(ws >= width - 1e-12))

    passed = ok_m2_pointwise and ok_m2_coverage and ok_m1_pointwise and dominance_ok
    report_line(
        "criterion 5 (confidence regions)",
        passed,
        f"method2 pointwise={m2['pointwise_coverage']:.4f} (>=0.95), coverage={m2['coverage']:.4f} (>=0.85); "
        f"method1 pointwise={m1['pointwise_coverage']:.4f} (>=0.90); Winkler dominance={dominance_ok}",
    )
    assert passed


def test_criterion_6_calibration_correctness():
    rng = np.random.default_rng(SEED + 3)
    curves = np.clip(0.75 + 0.06 * rng.standard_normal((500, 50)), 0.0, 1.0)
    pilot = np.full(50, 0.75)
    sigma = bootstrap_sigma(curves)
    lam = calibrate_lambda(pilot, curves, sigma, 0.05)
    m = np.sort(np.max(np.abs(pilot[None, :] - curves) / sigma[None, :], axis=1))
    scan = np.linspace(0.0, float(m[-1]) * 1.01, 10_000)
    ps = np.array([coverage_fraction(l, pilot, curves, sigma) for l in scan])
    scan_opt = float(scan[np.argmax(ps >= 0.95)])
    in_interval = m[474] <= lam <= m[475] and m[474] <= scan_opt <= m[475] + (scan[1] - scan[0])
    level_ok = coverage_fraction(lam, pilot, curves, sigma) >= 0.95 - 1e-4

    grid = TimeGrid([1.0, 2.0])
    offsets = [0.5, 0.1, 0.4, 0.2, 0.3]
    rho = method2_radius(np.zeros(2), np.array([[o, 0.0] for o in offsets]), grid, 0.2)
    rho_ok = rho == 0.4  # hand order statistic: [B(1-alpha)] = 4 at B=5, alpha=0.2

    passed = in_interval and level_ok and rho_ok
    report_line(
        "criterion 6 (calibration)",
        passed,
        f"lambda*={lam:.5f} in jump interval [{m[474]:.5f},{m[475]:.5f}]={in_interval}, "
        f"scan agrees; rho* exact order statistic={rho_ok}",
    )
    assert passed


def test_criterion_7_determinism_across_worker_counts(tmp_path):
    def run(tag, workers):
        out = tmp_path / tag
        cmd = [
            sys.executable, "-m", "condsurv", "simulate",
            "--model", "model1", "--censoring", "0.2", "--mode", "bandwidth",
            "--estimator", "beran", "--n", "60", "--n-samples", "4", "--B", "10",
            "--n-grid", "20", "--seed", "31", "--strategy", "grid", "--grid-size", "8",
            "--mise-samples", "5", "--mise-grid", "5",
            "--workers", str(workers), "--out", str(out),
        ]
        proc = subprocess.run(cmd, capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        return (out / "report.json").read_bytes(), (out / "bandwidth_table.csv").read_bytes()

    serial = run("w1", 1)
    parallel = run("w2", 2)
    repeat = run("w1b", 1)
    passed = serial == parallel == repeat
    report_line(
        "criterion 7 (determinism)",
        passed,
        f"byte-identical outputs across workers 1/2 and reruns: {passed}",
    )
    assert passed


def test_criterion_8_scaling_sanity():
    model = make_model("model1", 0.2)
    out = scaling_study(model, [400, 800], B=200, seed=SEED, strategy="grid", grid_size=16)
    ratio = out["ratios"]["800/400"]
    exceeds_2x = ratio > 2.0
    # reported, not gated hard: the run must complete and show growth
    passed = np.isfinite(ratio) and ratio > 1.0
    report_line(
        "criterion 8 (CPU scaling, reported)",
        passed,
        f"selection time ratio n=800/n=400 is {ratio:.2f} (exceeds 2x: {exceeds_2x})",
    )
    assert passed
