"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``. Criteria 5, 7 and 8
are Monte Carlo studies on the default envelope and take about a minute
each on one core.
"""
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from chfluct import lab
from chfluct.cli import execute, load_config
from chfluct.deterministic import Control, solve_skeleton, solve_u0, step_deterministic
from chfluct.green import EigenTable, semigroup_apply
from chfluct.model import ModelSpec
from chfluct.rate import rate_eval
from chfluct.spectral import GridSpec, NormSpec, SpectralField, lp_norms, physical_values, spectral_coeffs

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, detail):
        with capsys.disabled():
            print(f"\n[acceptance] criterion {number} {'PASS' if ok else 'FAIL'}: {title} ({detail})")
        assert ok, f"criterion {number}: {detail}"

    return emit


def test_criterion_1_transform_round_trip_and_parseval(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst_rt, worst_pv = 0.0, 0.0
    for d, n in ((1, 64), (2, 32), (3, 16)):
        grid = GridSpec(d, n)
        for _ in range(100):
            u = rng.standard_normal(grid.shape)
            c = spectral_coeffs(u, grid)
            worst_rt = max(worst_rt, float(np.abs(physical_values(c, grid) - u).max()))
            l2 = float(lp_norms(u, grid, 2)) ** 2
            worst_pv = max(worst_pv, abs(float(np.sum(c * c)) - l2) / l2)
    elapsed = time.perf_counter() - t0
    ok = worst_rt <= 1e-10 and worst_pv <= 1e-10 and elapsed < 5
    report(1, "transform round trip and Parseval", ok, f"round trip {worst_rt:.2e}, Parseval {worst_pv:.2e}, {elapsed:.2f} s")


def test_criterion_2_semigroup_algebra(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    errs = {"eigen": 0.0, "compose": 0.0, "mass": 0.0}
    for d, n in ((1, 64), (2, 32), (3, 16)):
        grid = GridSpec(d, n)
        eig = EigenTable(grid)
        c = SpectralField(grid, rng.standard_normal(grid.shape))
        for k in [(1,) * d, (3,) + (0,) * (d - 1), (2,) * d]:
            e = np.zeros(grid.shape)
            e[k] = 1.0
            out = semigroup_apply(SpectralField(grid, e), 0.01, eig).coeffs
            ref = np.zeros(grid.shape)
            ref[k] = math.exp(-eig.lam[k] * 0.01)
            errs["eigen"] = max(errs["eigen"], float(np.abs(out - ref).max()))
        a = semigroup_apply(semigroup_apply(c, 0.003, eig), 0.007, eig).coeffs
        b = semigroup_apply(c, 0.01, eig).coeffs
        errs["compose"] = max(errs["compose"], float(np.abs(a - b).max()))
        zero = (0,) * d
        errs["mass"] = max(errs["mass"], abs(semigroup_apply(c, 0.5, eig).coeffs[zero] - c.coeffs[zero]))
        m = ModelSpec(grid.with_time(nt=200))
        u = SpectralField(grid, spectral_coeffs(0.5 * np.cos(grid.mesh()[0]) + 0.2, grid))
        stepped = step_deterministic(u, 1e-4, m)
        errs["mass"] = max(errs["mass"], abs(stepped.coeffs[zero] - u.coeffs[zero]))
    elapsed = time.perf_counter() - t0
    ok = max(errs.values()) <= 1e-12 and elapsed < 1
    detail = ", ".join(f"{k} {v:.1e}" for k, v in errs.items()) + f", {elapsed:.2f} s"
    report(2, "semigroup eigen-action, composition, mass invariance", ok, detail)


def test_criterion_3_kernel_exponents(report):
    t0 = time.perf_counter()
    rep = lab.kernel_estimate_fits(grids=((1, 64), (2, 32)), t_window=(1e-4, 1e-2))
    elapsed = time.perf_counter() - t0
    s1 = rep.summary["d=1;n=64"]
    s2 = rep.summary["d=2;n=32"]
    ok = (
        abs(s1["profile_slope"] + 0.25) <= 0.03
        and abs(s2["profile_slope"] + 0.5) <= 0.05
        and s1["spacetime_slope"] >= 0.75 - 0.03
        and s2["spacetime_slope"] >= 0.5 - 0.05
        and s1["truncation_ok"]
        and s2["truncation_ok"]
        and rep.status == "pass"
        and elapsed < 30
    )
    detail = (
        f"profile d=1 {s1['profile_slope']:.4f}, d=2 {s2['profile_slope']:.4f}; "
        f"space-time d=1 {s1['spacetime_slope']:.4f}, d=2 {s2['spacetime_slope']:.4f}; {elapsed:.1f} s"
    )
    report(3, "Green-function exponents", ok, detail)


def test_criterion_4_linear_variance_oracle(report):
    t0 = time.perf_counter()
    rep = lab.linear_variance_study(eps=1e-2, replicas=1000, grid=GridSpec(1, 32, 0.1, 1000), seed=0, rtol=0.05)
    elapsed = time.perf_counter() - t0
    err = rep.summary["max_rel_error_pooled"]
    ok = rep.status == "pass" and elapsed < 120
    report(4, "linear SPDE mode variances", ok, f"worst mode relative error {err:.3f} (tolerance 0.05), {elapsed:.1f} s")


def test_criterion_5_clt_rate(report):
    cfg = load_config(CONFIGS / "clt.yaml")
    t0 = time.perf_counter()
    rep = lab.clt_study(cfg.scaling.eps_list, cfg.replicas, cfg.norms, cfg.model, cfg.seed, moments=(1, 2))
    elapsed = time.perf_counter() - t0
    s = rep.summary["slopes"]
    q1, q2 = s["q=1"], s["q=2"]
    ok = (
        0.35 <= q1["slope"] <= 0.65
        and 0.8 <= q2["slope"] <= 1.2
        and q1["status"] == q2["status"] == "pass"
        and rep.summary["aborted"] == 0
    )
    detail = (
        f"q=1 slope {q1['slope']:.4f} +- {q1['stderr']:.4f}, q=2 slope {q2['slope']:.4f} +- {q2['stderr']:.4f}, "
        f"aborts {rep.summary['aborted']}, {elapsed:.0f} s"
    )
    report(5, "CLT rate of coupled paths", ok, detail)


def test_criterion_6_rate_round_trip(report):
    t0 = time.perf_counter()
    m = ModelSpec()
    u0 = solve_u0(m)
    v = Control.from_function(m.grid, lambda t, x: np.sin(t) * np.cos(x))
    g = solve_skeleton(v, u0, m)
    value = rate_eval(g, u0, m).value
    T = m.grid.T
    exact = 0.5 * (T / 2 - math.sin(2 * T) / 4) * (math.pi / 2)
    rel = abs(value - exact) / exact
    hom = max(abs(rate_eval(g.scaled(c), u0, m).value / (c * c * value) - 1) for c in (2.0, 4.0))
    elapsed = time.perf_counter() - t0
    ok = rel <= 0.05 and hom <= 0.01 and elapsed < 60
    report(6, "rate functional round trip", ok, f"I = {value:.6e} vs {exact:.6e} (rel {rel:.1e}), homogeneity {hom:.1e}, {elapsed:.1f} s")


def test_criterion_7_mdp_diagnostics(report):
    cfg = load_config(CONFIGS / "mdp.yaml")
    t0 = time.perf_counter()
    sweep = lab.mdp_scaling_sweep(cfg.scaling, cfg.scaling.eps_list, 200, cfg.model, cfg.seed, thetas=cfg.options.get("thetas"))
    probe = lab.mdp_probe_diagnostics(cfg.scaling, cfg.scaling.eps_list, 200, cfg.model, cfg.seed)
    elapsed = time.perf_counter() - t0
    checks = {f"sweep.{k}": v["status"] for k, v in sweep.assertions.items()}
    checks.update({f"probe.{k}": v["status"] for k, v in probe.assertions.items()})
    ok = all(s == "pass" for s in checks.values()) and elapsed < 1800
    bad = [k for k, s in checks.items() if s != "pass"]
    detail = f"{len(checks)} checks, non-passing {bad or 'none'}, {elapsed:.0f} s"
    report(7, "MDP regime diagnostics", ok, detail)


def test_criterion_8_reproducibility(report, tmp_path):
    cfg = load_config(CONFIGS / "clt.yaml")
    runs = []
    for jobs in (1, 1, 2):
        code, run_dir = execute(cfg, jobs=jobs, root=tmp_path)
        runs.append((code, run_dir))
    csv_same = all((r / "clt.csv").read_bytes() == (runs[0][1] / "clt.csv").read_bytes() for _, r in runs)
    summaries = [json.loads((r / "summary.json").read_text()) for _, r in runs]
    summary_same = all(s == summaries[0] for s in summaries)
    ok = csv_same and summary_same and all(c == 0 for c, _ in runs)
    report(8, "reproducibility across reruns and job counts", ok, f"CSV identical {csv_same}, summaries identical {summary_same}")


def test_criterion_9_holder_band(report):
    cfg = load_config(CONFIGS / "holder.yaml")
    y = lab.holder_study("Y", cfg.norms, cfg.replicas, cfg.model, cfg.seed)
    u0 = lab.holder_study("u0", cfg.norms, 1, cfg.model, cfg.seed)
    sy, su = y.summary["slope"], u0.summary["slope"]
    ok = 0.25 <= sy <= 0.45 and su >= 0.9 and y.status == "pass" and u0.status == "pass"
    report(9, "temporal increment exponents", ok, f"Y {sy:.4f} +- {y.summary['stderr']:.4f} in [0.25, 0.45], u0 {su:.4f} >= 0.9")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
