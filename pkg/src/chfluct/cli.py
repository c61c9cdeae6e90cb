"""Command line harness: ``chfluct run | validate | report``.

A run reads a YAML config, executes one study and writes into a fresh
``<root>/<study>/run-NNN`` directory:

    <study>.csv      long-format rows (study, cell, quantity, estimate, stderr)
    summary.json     study summary and one status per assertion
    config.yaml      resolved config echo
    manifest.json    config echo, package version, timings, exit status

Exit status: 0 pass, 2 fail, 3 inconclusive, 1 error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import platform
import sys
import time
import traceback
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from chfluct import __version__
from chfluct._mc import FAIL, INCONCLUSIVE, PASS
from chfluct._validation import BlowUpError
from chfluct.model import InitialSpec, ModelError, ModelSpec, ScalingSpec, SigmaSpec
from chfluct.spectral import GridSpec, NormSpec

ENV_OUTPUT_ROOT = "CHFLUCT_OUTPUT_ROOT"
STUDIES = ("simulate", "clt", "holder", "mdp", "kernel", "rate")
EXIT = {PASS: 0, FAIL: 2, INCONCLUSIVE: 3}
EXIT_ERROR = 1

_TOP_KEYS = {"study", "seed", "replicas", "output_dir", "grid", "model", "scaling", "norms", "options"}
_OPTION_KEYS = {
    "simulate": {"eps", "stride", "binary"},
    "clt": {"moments"},
    "holder": {"processes", "eps"},
    "mdp": {"thetas", "probe"},
    "kernel": {"grids"},
    "rate": {"amplitude", "multipliers"},
}


class ConfigError(ValueError):
    """Invalid configuration; ``issues`` holds one ``field: message`` line per violation."""

    def __init__(self, issues):
        self.issues = list(issues)
        super().__init__("\n".join(self.issues))


@dataclass
class RunConfig:
    study: str
    seed: int
    grid: GridSpec = field(default_factory=GridSpec)
    model: ModelSpec = field(default_factory=ModelSpec)
    scaling: ScalingSpec = field(default_factory=ScalingSpec)
    norms: NormSpec = field(default_factory=NormSpec)
    replicas: int = 200
    output_dir: str = "runs"
    options: dict = field(default_factory=dict)

    def to_dict(self, include_output: bool = True) -> dict:
        out = {
            "study": self.study,
            "seed": self.seed,
            "replicas": self.replicas,
            "grid": {"d": self.grid.d, "n": self.grid.n, "T": self.grid.T, "nt": self.grid.nt},
            "model": self.model.to_dict(),
            "scaling": self.scaling.to_dict(),
            "norms": {"p": self.norms.p, "q": self.norms.q, "alpha": self.norms.alpha},
            "options": dict(self.options),
        }
        if include_output:
            out["output_dir"] = self.output_dir
        return out

    @classmethod
    def from_dict(cls, raw: dict, seed_override: Optional[int] = None) -> "RunConfig":
        cfg, issues = _parse(raw, seed_override)
        if issues:
            raise ConfigError(issues)
        return cfg


def _section(raw: dict, key: str, issues: list) -> dict:
    val = raw.get(key, {}) or {}
    if not isinstance(val, dict):
        issues.append(f"{key}: expected a mapping, got {type(val).__name__}")
        return {}
    return val


def _build(name: str, factory, kwargs: dict, issues: list):
    try:
        return factory(**kwargs)
    except ModelError as exc:
        issues.extend(f"{name}: {msg}" for msg in exc.issues)
    except (TypeError, ValueError) as exc:
        issues.append(f"{name}: {exc}")
    return None


def _parse(raw: dict, seed_override: Optional[int]):
    issues: list = []
    if not isinstance(raw, dict):
        return None, ["config: top level must be a mapping"]
    for key in sorted(set(raw) - _TOP_KEYS):
        issues.append(f"{key}: unknown top-level field")

    study = raw.get("study")
    if study not in STUDIES:
        issues.append(f"study: must be one of {STUDIES}, got {study!r}")

    seed = seed_override if seed_override is not None else raw.get("seed")
    if seed is None:
        issues.append("seed: required, there is no clock-based default")
    elif isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        issues.append(f"seed: must be a non-negative integer, got {seed!r}")

    replicas = raw.get("replicas", 200)
    if isinstance(replicas, bool) or not isinstance(replicas, int) or replicas < 1:
        issues.append(f"replicas: must be a positive integer, got {replicas!r}")

    output_dir = str(raw.get("output_dir", "runs"))

    grid = _build("grid", GridSpec, _section(raw, "grid", issues), issues)

    mraw = dict(_section(raw, "model", issues))
    sigma = _build("model.sigma", SigmaSpec, dict(mraw.pop("sigma", {}) or {}), issues)
    u0raw = dict(mraw.pop("u0", {}) or {})
    if "k" in u0raw:
        u0raw["k"] = tuple(np.atleast_1d(u0raw["k"]).tolist())
    u0 = _build("model.u0", InitialSpec, u0raw, issues)
    if "f_coeffs" in mraw:
        mraw["f_coeffs"] = tuple(mraw["f_coeffs"])
    for bad in sorted(set(mraw) - {"f_coeffs", "gamma"}):
        issues.append(f"model.{bad}: unknown field")
        mraw.pop(bad)
    model = None
    if grid is not None and sigma is not None and u0 is not None:
        model = _build("model", ModelSpec, {"grid": grid, "sigma": sigma, "u0": u0, **mraw}, issues)
        if model is not None:
            try:
                u0.evaluate(grid)
            except ModelError as exc:
                issues.extend(f"model.u0: {msg}" for msg in exc.issues)

    sraw = dict(_section(raw, "scaling", issues))
    if "eps_list" in sraw:
        sraw["eps_list"] = tuple(sraw["eps_list"])
    scaling = _build("scaling", ScalingSpec, sraw, issues)

    norms = _build("norms", NormSpec, _section(raw, "norms", issues), issues)
    gamma = mraw.get("gamma", 1.0)
    if norms is not None and grid is not None and isinstance(gamma, (int, float)) and 0 < gamma <= 1:
        issues.extend(f"norms.alpha: {msg}" for msg in norms.holder_violations(grid.d, gamma))

    options = dict(_section(raw, "options", issues))
    if study in _OPTION_KEYS:
        for bad in sorted(set(options) - _OPTION_KEYS[study]):
            issues.append(f"options.{bad}: not an option of study {study!r}")
        issues.extend(_check_options(study, options, scaling))

    if issues:
        return None, issues
    cfg = RunConfig(study, int(seed), grid, model, scaling, norms, replicas, output_dir, options)
    return cfg, []


def _check_options(study: str, options: dict, scaling: Optional[ScalingSpec]) -> list:
    issues = []
    if study == "simulate":
        eps = options.get("eps", 0.0)
        if not (isinstance(eps, (int, float)) and 0 <= eps <= 1):
            issues.append(f"options.eps: must lie in [0, 1], got {eps!r}")
    if study == "holder":
        for proc in options.get("processes", ["Y", "u0"]):
            if proc not in ("Y", "u_eps", "u0"):
                issues.append(f"options.processes: unknown process {proc!r}")
    if study == "mdp":
        if scaling is not None and scaling.family != "power":
            issues.append("scaling.family: the mdp study needs the power family")
        for th in options.get("thetas", []):
            if not 0 < th < 0.5:
                issues.append(f"options.thetas: theta={th} outside (0, 1/2) (moderate-deviation regime)")
    return issues


def load_config(path, seed_override: Optional[int] = None) -> RunConfig:
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    return RunConfig.from_dict(raw or {}, seed_override)


# ----------------------------------------------------------------------------
# studies


def _run_study(cfg: RunConfig, jobs: int, timings: dict):
    from chfluct import lab

    m, ns, sc, seed, R = cfg.model, cfg.norms, cfg.scaling, cfg.seed, cfg.replicas
    opt = cfg.options
    t0 = time.perf_counter()
    extra = {}
    if cfg.study == "simulate":
        rep, extra = _simulate(cfg)
    elif cfg.study == "clt":
        rep = lab.clt_study(sc.eps_list, R, ns, m, seed, jobs, opt.get("moments"))
    elif cfg.study == "holder":
        rep = lab.StudyReport("holder")
        for proc in opt.get("processes", ["Y", "u0"]):
            sub = lab.holder_study(proc, ns, R, m, seed, jobs, eps=opt.get("eps", 1e-2))
            rep.merge(sub, prefix=f"{proc}.")
    elif cfg.study == "mdp":
        rep = lab.mdp_scaling_sweep(sc, sc.eps_list, R, m, seed, jobs, opt.get("thetas"))
        if opt.get("probe", True):
            if R >= 100:
                rep.merge(lab.mdp_probe_diagnostics(sc, sc.eps_list, R, m, seed, jobs), prefix="probe.")
            else:
                rep.check("probe.design", INCONCLUSIVE, detail="ball probabilities need >= 100 replicas")
    elif cfg.study == "kernel":
        grids = [tuple(g) for g in opt.get("grids", [[1, 64], [2, 32]])]
        rep = lab.kernel_estimate_fits(grids)
    else:
        rep = _rate(cfg)
    timings["study_s"] = time.perf_counter() - t0
    return rep, extra


def _simulate(cfg: RunConfig):
    from chfluct.lab import StudyReport
    from chfluct.spectral import spectral_coeffs
    from chfluct.stochastic import noise_batch, replica_seeds, u_eps_batch

    m, grid = cfg.model, cfg.grid
    eps = float(cfg.options.get("eps", 0.0))
    stride = int(cfg.options.get("stride", max(1, grid.nt // 100)))
    dW = noise_batch(replica_seeds(cfg.seed, 1), grid)
    res = u_eps_batch(eps, dW, m, stride)
    if res.aborted[0]:
        raise BlowUpError(int(res.abort_step[0]))
    coeffs = spectral_coeffs(res.frames[0], grid)
    rep = StudyReport("simulate")
    mass = coeffs[(slice(None),) + (0,) * grid.d]
    drift = float(np.abs(mass - mass[0]).max())
    rep.add(f"eps={eps:g}", "mode0_max_drift", drift, 0.0)
    rep.add(f"eps={eps:g}", "final_L2", float(np.sqrt((coeffs[-1] ** 2).sum())), 0.0)
    if eps == 0:
        tol = 1e-10 * max(1.0, float(np.abs(coeffs).max()))
        rep.check("mass_conserved", PASS if drift <= tol else FAIL, drift=drift)
    rep.check("no_blowup", PASS)
    rep.summary.update({"eps": eps, "stride": stride, "mode0_max_drift": drift})
    return rep, {"times": res.times, "coeffs": coeffs, "values": res.frames[0]}


def _rate(cfg: RunConfig):
    from chfluct.deterministic import Control, solve_skeleton, solve_u0
    from chfluct.lab import StudyReport
    from chfluct.rate import rate_eval

    m = cfg.model
    amp = float(cfg.options.get("amplitude", 1.0))
    mults = [float(c) for c in cfg.options.get("multipliers", [2.0, 4.0])]
    u0 = solve_u0(m)
    v = Control.from_function(m.grid, lambda t, *x: amp * np.sin(t) * np.cos(x[0]))
    g = solve_skeleton(v, u0, m)
    res = rate_eval(g, u0, m)
    target = v.l2_cost
    rel = abs(res.value - target) / target
    rep = StudyReport("rate")
    rep.add("c=1", "I(g)", res.value)
    rep.add("c=1", "half_energy_v", target)
    rep.add("c=1", "relative_residual", res.relative_residual)
    rep.check("round_trip", PASS if rel <= 0.05 else FAIL, rel_error=rel)
    worst = 0.0
    for c in mults:
        val = rate_eval(g.scaled(c), u0, m).value
        err = abs(val / (c * c * res.value) - 1)
        worst = max(worst, err)
        rep.add(f"c={c:g}", "I(c g)", val)
        rep.add(f"c={c:g}", "I(c g)/(c^2 I(g)) - 1", val / (c * c * res.value) - 1)
    rep.check("homogeneity", PASS if worst <= 0.01 else FAIL, max_rel_error=worst)
    rep.summary.update({"value": res.value, "half_energy": target, "rel_error": rel, "homogeneity_error": worst})
    return rep


# ----------------------------------------------------------------------------
# artifacts


def _fmt(x) -> str:
    return "%.17g" % x if isinstance(x, float) else str(x)


def _header(cfg: RunConfig) -> list:
    echo = json.dumps(cfg.to_dict(include_output=False), sort_keys=True)
    return [f"# chfluct {__version__}", f"# seed: {cfg.seed}", f"# config: {echo}"]


def write_rows_csv(path: Path, cfg: RunConfig, rows: list) -> None:
    cols = ["study", "cell", "quantity", "estimate", "stderr"]
    with open(path, "x", newline="") as fh:
        fh.write("\n".join(_header(cfg)) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in cols])


def write_trajectory_csv(path: Path, cfg: RunConfig, times: np.ndarray, coeffs: np.ndarray) -> None:
    grid = cfg.grid
    labels = ["k=" + "_".join(str(i) for i in k) for k in np.ndindex(grid.shape)]
    flat = coeffs.reshape(len(times), -1)
    with open(path, "x", newline="") as fh:
        fh.write("\n".join(_header(cfg)) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time"] + labels)
        for t, row in zip(times, flat):
            w.writerow([_fmt(float(t))] + [_fmt(float(v)) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _write_json(path: Path, data: dict) -> None:
    with open(path, "x") as fh:
        json.dump(_jsonable(data), fh, indent=2, sort_keys=True)
        fh.write("\n")


def output_root(cfg: Optional[RunConfig], flag: Optional[str]) -> Path:
    if flag:
        return Path(flag)
    env = os.environ.get(ENV_OUTPUT_ROOT)
    if env:
        return Path(env)
    return Path(cfg.output_dir if cfg is not None else "runs")


def new_run_dir(root: Path, study: str) -> Path:
    base = root / study
    base.mkdir(parents=True, exist_ok=True)
    i = 1
    while True:
        path = base / f"run-{i:03d}"
        try:
            path.mkdir()
            return path
        except FileExistsError:
            i += 1


def execute(cfg: RunConfig, jobs: int = 1, root: Optional[Path] = None) -> tuple:
    """Run one study; returns (exit code, run directory)."""
    root = root or output_root(cfg, None)
    run_dir = new_run_dir(Path(root), cfg.study)
    timings: dict = {}
    t0 = time.perf_counter()
    manifest = {
        "package": "chfluct",
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "seed": cfg.seed,
        "jobs": jobs,
        "config": cfg.to_dict(),
        "artifacts": [],
    }
    with open(run_dir / "config.yaml", "x") as fh:
        yaml.safe_dump(cfg.to_dict(), fh, sort_keys=True)
    manifest["artifacts"].append("config.yaml")
    try:
        rep, extra = _run_study(cfg, jobs, timings)
    except Exception as exc:  # partial artifacts plus an error manifest
        manifest.update(
            {
                "status": "error",
                "exit_code": EXIT_ERROR,
                "error": f"{type(exc).__name__}: {exc}",
                "traceback": traceback.format_exc(),
            }
        )
        if isinstance(exc, BlowUpError):
            manifest["blowup_step"] = exc.step
        timings["total_s"] = time.perf_counter() - t0
        manifest["timings"] = timings
        _write_json(run_dir / "manifest.json", manifest)
        return EXIT_ERROR, run_dir

    csv_name = f"{cfg.study}.csv"
    write_rows_csv(run_dir / csv_name, cfg, rep.rows)
    manifest["artifacts"].append(csv_name)
    if cfg.study == "simulate":
        write_trajectory_csv(run_dir / "trajectory_modes.csv", cfg, extra["times"], extra["coeffs"])
        manifest["artifacts"].append("trajectory_modes.csv")
        if cfg.options.get("binary"):
            np.savez(run_dir / "trajectory.npz", times=extra["times"], values=extra["values"])
            manifest["artifacts"].append("trajectory.npz")
    status = rep.status
    summary = {
        "study": cfg.study,
        "seed": cfg.seed,
        "config": cfg.to_dict(include_output=False),
        "status": status,
        "assertions": rep.assertions,
        "summary": rep.summary,
    }
    _write_json(run_dir / "summary.json", summary)
    manifest["artifacts"].append("summary.json")
    timings["total_s"] = time.perf_counter() - t0
    manifest.update({"status": status, "exit_code": EXIT[status], "timings": timings})
    _write_json(run_dir / "manifest.json", manifest)
    return EXIT[status], run_dir


# ----------------------------------------------------------------------------
# report


def render_report(run_dir: Path) -> str:
    run_dir = Path(run_dir)
    manifest = json.loads((run_dir / "manifest.json").read_text())
    lines = [f"run      {run_dir}", f"study    {manifest['config']['study']}", f"seed     {manifest['seed']}"]
    lines.append(f"status   {manifest['status']} (exit {manifest['exit_code']})")
    if manifest["status"] == "error":
        lines.append(f"error    {manifest['error']}")
        return "\n".join(lines)
    summary = json.loads((run_dir / "summary.json").read_text())
    lines.append("")
    lines.append("assertions")
    for name, a in sorted(summary["assertions"].items()):
        detail = ", ".join(f"{k}={v}" for k, v in a.items() if k != "status")
        lines.append(f"  {a['status']:<13} {name}" + (f"  [{detail}]" if detail else ""))
    study = summary["study"]
    csv_path = run_dir / f"{study}.csv"
    if csv_path.exists():
        with open(csv_path) as fh:
            rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
        lines.append("")
        lines.append(f"{len(rows)} rows in {csv_path.name}")
        for row in rows:
            if row["cell"] == "all" or "slope" in row["quantity"]:
                lines.append(f"  {row['cell']:<28} {row['quantity']:<28} {float(row['estimate']):.6g} +- {float(row['stderr']):.3g}")
    t = manifest.get("timings", {}).get("total_s")
    if t is not None:
        lines.append("")
        lines.append(f"wall time {t:.1f} s")
    return "\n".join(lines)


def _latest_run(root: Path) -> Optional[Path]:
    runs = sorted(p for p in root.glob("*/run-*") if (p / "manifest.json").exists())
    return max(runs, key=lambda p: (p / "manifest.json").stat().st_mtime) if runs else None


# ----------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chfluct", description="Fluctuation experiments for stochastic Cahn-Hilliard")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("run", "execute the study named in a config"), ("validate", "check a config and print it resolved")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="YAML config file")
        p.add_argument("--seed-override", type=int, default=None, help="replace the config seed")
        if name == "run":
            p.add_argument("--jobs", type=int, default=1, help="worker processes (results do not depend on it)")
            p.add_argument("--output", default=None, help=f"output root (else ${ENV_OUTPUT_ROOT}, else output_dir)")
    p = sub.add_parser("report", help="re-render a run's summary from its artifacts")
    p.add_argument("run_dir", nargs="?", default=None, help="run directory (default: latest under the output root)")
    p.add_argument("--output", default=None, help="output root searched when run_dir is omitted")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "report":
        run_dir = Path(args.run_dir) if args.run_dir else _latest_run(output_root(None, args.output))
        if run_dir is None or not (run_dir / "manifest.json").exists():
            print("report: no completed run found", file=sys.stderr)
            return EXIT_ERROR
        print(render_report(run_dir))
        return 0
    try:
        cfg = load_config(args.config, args.seed_override)
    except ConfigError as exc:
        print(f"invalid config {args.config}:", file=sys.stderr)
        for issue in exc.issues:
            print(f"  {issue}", file=sys.stderr)
        return EXIT_ERROR
    except (OSError, yaml.YAMLError) as exc:
        print(f"cannot read config {args.config}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.command == "validate":
        print(f"config {args.config} is valid; resolved:")
        print(yaml.safe_dump(cfg.to_dict(), sort_keys=True), end="")
        return 0
    if args.jobs < 1:
        print("--jobs must be >= 1", file=sys.stderr)
        return EXIT_ERROR
    root = output_root(cfg, args.output)
    try:
        code, run_dir = execute(cfg, args.jobs, root)
    except OSError as exc:
        print(f"output_dir: cannot write artifacts under {root}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(f"{cfg.study}: exit {code}, artifacts in {run_dir}")
    return code


if __name__ == "__main__":
    sys.exit(main())
