"""Command-line experiment runner: JSON config in, CSV data plus manifest and summary out.

    plurilab <command> --config path [--out dir] [--seed N]

Exit status: 0 success, 2 configuration error, 3 admissibility failure,
4 solver failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np
from scipy.integrate import trapezoid

from . import __version__
from .bergman import bernstein_markov_diag, christoffel, dpp_sample, gram_factorization, write_profile_csv
from .curieweiss import cw_finite_n, cw_phase_table, write_phase_table
from .diagnostics import wasserstein1
from .energy import EnsembleModel, green_formula_estimate
from .equilibrium import default_grid, preset_equilibrium, solve_mfe_radial, temperature_sweep
from .errors import AdmissibilityError, ConfigError, PlurilabError, SchemaError
from .io import read_csv, sha256_file, write_csv
from .polybasis import MultiIndexBasis
from .radial import RadialProfile
from .sampler import Carrier, Schedule, fekete_search, run_chain
from .transport import DiscreteMeasure, ot_cost
from .tropical import ConvexBody, r_invariant, solve_real_ma_1d, tropical_gibbs
from .weights import BaseMeasure, Weight, admissibility_check

SCHEMA_VERSION = 1
COMMANDS = ("sample", "fekete", "equilibrium", "bergman", "tropical", "transport", "curie-weiss", "green-formula", "report")
MODEL_COMMANDS = ("sample", "fekete", "equilibrium", "bergman", "green-formula")
EXIT_OK, EXIT_CONFIG, EXIT_ADMISSIBILITY, EXIT_SOLVER = 0, 2, 3, 4
MANIFEST = "manifest.json"
SUMMARY = "summary.json"
REPORT_DIR = "report"


# ---------------------------------------------------------------------------
# config


def _need(block: dict, key: str, where: str):
    if key not in block:
        raise ConfigError(f"missing {where}.{key}")
    return block[key]


def load_config(path) -> dict:
    try:
        cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def resolve_config(cfg: dict, command: str, seed=None, out=None) -> dict:
    """Validate and fill defaults; the result is echoed verbatim into the manifest."""
    cfg = json.loads(json.dumps(cfg))
    version = cfg.setdefault("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise SchemaError(f"config schema_version {version} is not {SCHEMA_VERSION}")
    if cfg.get("command", command) != command:
        raise ConfigError(f"config is for command {cfg['command']!r}, not {command!r}")
    cfg["command"] = command
    if seed is not None:
        cfg["seed"] = int(seed)
    if "seed" not in cfg or not isinstance(cfg["seed"], int):
        raise ConfigError("an integer seed is mandatory")
    if out is not None:
        cfg["output"] = str(out)
    if "output" not in cfg:
        raise ConfigError("no output directory (config 'output' or --out)")
    ex = cfg.setdefault("execution", {})
    ex.setdefault("sweeps", 2000)
    ex.setdefault("chains", 1)
    ex.setdefault("workers", 1)
    cfg.setdefault("params", {})
    if command in MODEL_COMMANDS:
        m = _need(cfg, "model", "config")
        _need(m, "weight", "model")
        _need(m, "base", "model")
        m.setdefault("n", 1)
        _need(m, "k", "model")
    return cfg


def build_weight(block: dict) -> Weight:
    kind = _need(block, "kind", "weight")
    scale = float(block.get("scale", 1.0))
    shift = float(block.get("shift", 0.0))
    try:
        if kind == "quadratic":
            return Weight.quadratic(scale, shift)
        if kind == "half-quadratic":
            return Weight.half_quadratic(scale, shift)
        if kind == "fubini-study":
            return Weight.fubini_study(scale, shift)
        if kind == "torus-log":
            return Weight.torus_log(scale, shift)
        if kind == "indicator":
            return Weight.indicator(float(block.get("r_out", 1.0)), float(block.get("r_in", 0.0)), shift)
        if kind == "custom-radial":
            if "file" in block:
                return Weight.from_profile_file(block["file"], block.get("tail_slope"), scale, shift)
            return Weight.custom_radial(block["s"], block["values"], block.get("tail_slope"), scale, shift)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad weight block: {exc}") from exc
    raise ConfigError(f"unknown weight kind {kind!r}")


def build_base(block: dict, n: int) -> BaseMeasure:
    kind = _need(block, "kind", "base")
    real = bool(block.get("real_line", False))
    if kind == "lebesgue":
        return BaseMeasure.lebesgue(n=n, real_line=real)
    if kind == "gaussian":
        return BaseMeasure.gaussian(float(block.get("sigma", 1.0)), n=n, real_line=real)
    if kind == "ball":
        return BaseMeasure.ball(float(block.get("radius", 1.0)), n=n)
    if kind == "box":
        return BaseMeasure.box(float(block.get("low", -1.0)), float(block.get("high", 1.0)), n=n)
    if kind == "interval":
        return BaseMeasure.interval(float(block.get("low", -1.0)), float(block.get("high", 1.0)))
    if kind == "arcsine":
        return BaseMeasure.arcsine(float(block.get("low", -1.0)), float(block.get("high", 1.0)))
    if kind == "circle":
        return BaseMeasure.circle(float(block.get("radius", 1.0)))
    raise ConfigError(f"unknown base kind {kind!r}")


def build_schedule(m: dict) -> Schedule:
    sch = m.get("schedule")
    if sch is None:
        beta = _need(m, "beta", "model")
        return Schedule.fixed(math.inf if beta == "inf" else float(beta))
    kind = sch.get("kind", "fixed")
    if kind == "fixed":
        return Schedule.fixed(float(sch["beta"]))
    if kind == "ramp":
        return Schedule.ramp(float(sch["beta"]), float(sch.get("offset", 0.0)))
    if kind == "geometric":
        return Schedule.geometric(float(sch["beta0"]), float(sch["ratio"]), float(sch.get("beta_max", math.inf)))
    raise ConfigError(f"unknown schedule kind {kind!r}")


def _model(cfg: dict, beta=None) -> EnsembleModel:
    m = cfg["model"]
    n, k = int(m["n"]), int(m["k"])
    weight, base = build_weight(m["weight"]), build_base(m["base"], n)
    if beta is None:
        b = m.get("beta", m.get("schedule", {}).get("beta", 1.0))
        beta = math.inf if b == "inf" else float(b)
    return EnsembleModel(MultiIndexBasis(n, k), weight, base, beta)


def _reference(block):
    if block is None:
        return None
    if isinstance(block, str):
        return preset_equilibrium(block)
    return preset_equilibrium(block["name"], float(block.get("radius", 1.0)))


# ---------------------------------------------------------------------------
# commands; each returns (files written, summary dict)


def cmd_sample(cfg, out: Path):
    ex, p = cfg["execution"], cfg["params"]
    model = _model(cfg)
    schedule = build_schedule(cfg["model"])
    ss = run_chain(model, schedule, int(ex["sweeps"]), chains=int(ex["chains"]), seed=cfg["seed"],
                   method=p.get("method", "mala"), workers=int(ex["workers"]))
    files = [ss.to_csv(out / "samples.csv")]
    pts = ss.pooled()
    summary = {
        "beta": model.beta,
        "acceptance": ss.acceptance.tolist(),
        "mean_final_energy": float(np.mean(ss.final_energy)) if ss.final_energy is not None else None,
        "radial_second_moment": float(np.mean(np.sum(np.abs(pts) ** 2, axis=1))),
    }
    ref = _reference(p.get("reference"))
    if ref is not None:
        summary["w1_reference"] = wasserstein1(pts if model.n == 1 else pts, ref)
        summary["reference"] = ref.name
    return files, summary


def cmd_fekete(cfg, out: Path):
    p = cfg["params"]
    model = _model(cfg)
    res = fekete_search(model, Carrier.from_measure(model.base), restarts=int(p.get("restarts", 4)), seed=cfg["seed"],
                        anneal_sweeps=int(p.get("anneal_sweeps", 2000)), polish_iter=int(p.get("polish_iter", 20000)))
    z = res.config.points
    n = z.shape[1]
    header = ["i"] + [f"re_{a + 1}" for a in range(n)] + [f"im_{a + 1}" for a in range(n)]
    files = [write_csv(out / "fekete.csv", header, ([i, *z[i].real.tolist(), *z[i].imag.tolist()] for i in range(len(z))))]
    summary = {"energy": res.energy, "weighted_energy": res.weighted_energy, "restarts": res.restarts}
    ref = _reference(p.get("reference"))
    if ref is not None:
        summary["w1_reference"] = wasserstein1(z, ref)
        summary["reference"] = ref.name
    return files, summary


def cmd_equilibrium(cfg, out: Path):
    m, p = cfg["model"], cfg["params"]
    weight, base = build_weight(m["weight"]), build_base(m["base"], int(m["n"]))
    betas = p.get("betas", [m.get("beta", 1.0)])
    s = default_grid(*p["grid"]) if "grid" in p else default_grid()
    rows = temperature_sweep(weight, base, betas, s, workers=int(cfg["execution"]["workers"]))
    files = [write_csv(out / "sweep.csv", ["beta", "envelope_gap", "cy_gap", "normalization", "support_radius", "residual", "status"],
                       ([r.beta, r.envelope_gap, r.cy_gap, r.normalization, r.support_radius, r.residual, r.status] for r in rows))]
    for r in rows:
        if r.status == "ok":
            prof = solve_mfe_radial(weight, base, r.beta, s)
            files.append(write_csv(out / f"profile_beta_{r.beta!r}.csv", ["s", "psi", "m"], prof.rows()))
    bad = [r for r in rows if r.status != "ok"]
    summary = {"betas": [r.beta for r in rows], "max_residual": max((r.residual for r in rows if r.status == "ok"), default=math.nan),
               "failed": len(bad)}
    if bad:
        raise _SolverFailure(files, summary, f"{len(bad)} beta values failed")
    return files, summary


def cmd_bergman(cfg, out: Path):
    p = cfg["params"]
    model = cfg["model"]
    n, k = int(model["n"]), int(model["k"])
    weight, base = build_weight(model["weight"]), build_base(model["base"], n)
    gram = gram_factorization(MultiIndexBasis(n, k), weight, base)
    grid = np.asarray(p.get("grid", np.linspace(-2, 2, 81).tolist()), dtype=float)
    z = grid.astype(complex)
    c = christoffel(gram, z[:, None] if n == 1 else z)
    files = [write_profile_csv(out / "christoffel.csv", z, c.psi)]
    summary = {"condition": gram.condition, "size": gram.size}
    if p.get("bm_k"):
        rows, slope = bernstein_markov_diag(weight, base, z, p["bm_k"], n)
        files.append(write_csv(out / "bernstein_markov.csv", ["k", "sup_rho", "exponent"], ([r.k, r.sup_rho, r.exponent] for r in rows)))
        summary["bm_slope"] = slope
    if p.get("dpp_samples"):
        S = dpp_sample(gram, base, seed=cfg["seed"], samples=int(p["dpp_samples"]))
        rows = ([j, i, pt.real, pt.imag] for j, cf in enumerate(S) for i, pt in enumerate(cf.points[:, 0]))
        files.append(write_csv(out / "dpp.csv", ["sample", "i", "re", "im"], rows))
        summary["dpp_second_moment"] = float(np.mean([np.mean(np.abs(cf.points) ** 2) for cf in S]))
    return files, summary


def cmd_tropical(cfg, out: Path):
    p = cfg["params"]
    body = ConvexBody.from_json(_need(p, "body", "params"))
    summary = {"r_invariant": r_invariant(body), "barycenter": body.barycenter.tolist()}
    files = []
    mode = p.get("mode", "gibbs")
    beta = float(_need(p, "beta", "params"))
    if mode == "ma":
        if body.n != 1:
            raise ConfigError("the real Monge-Ampere solver is one-dimensional")
        a, b = body.vertices[:, 0]
        sol = solve_real_ma_1d(a, b, beta)
        files.append(sol.to_csv(out / "real_ma.csv"))
        summary["residual"] = sol.residual
    else:
        ex = cfg["execution"]
        res = tropical_gibbs(body, int(_need(p, "k", "params")), beta, sweeps=int(ex["sweeps"]),
                             chains=int(ex["chains"]), seed=cfg["seed"])
        if res.refused:
            d = res.diagnostic
            files.append(write_csv(out / "truncation.csv", ["radius", "log_mass", "stderr"], zip(d.radii, d.log_mass.tolist(), d.stderr_log.tolist())))
            summary.update(refused=True, ratios=d.ratios.tolist(), diverges=d.diverges)
        else:
            C, K, N, n = res.samples.shape
            rows = ([c, t, i, *res.samples[c, t, i].tolist()] for c in range(C) for t in range(K) for i in range(N))
            files.append(write_csv(out / "tropical_samples.csv", ["chain", "kept", "i"] + [f"x_{a + 1}" for a in range(n)], rows))
            summary.update(refused=False, acceptance=res.acceptance.tolist())
    return files, summary


def cmd_transport(cfg, out: Path):
    p = cfg["params"]
    x = np.asarray(_need(p, "source", "params"), dtype=float)
    y = np.asarray(_need(p, "target", "params"), dtype=float)
    mu0 = DiscreteMeasure(x, p["source_weights"]) if "source_weights" in p else DiscreteMeasure.uniform(x)
    mu1 = DiscreteMeasure(y, p["target_weights"]) if "target_weights" in p else DiscreteMeasure.uniform(y)
    plan = ot_cost(mu0, mu1, route=p.get("route", "auto"))
    return [plan.to_csv(out / "plan.csv")], {"cost": plan.cost, "route": plan.route}


def cmd_curie_weiss(cfg, out: Path):
    p = cfg["params"]
    sign = p.get("sign", "ferro")
    rows = cw_phase_table(p.get("betas", [0.5, 1.0, 2.0]), p.get("hs", [0.0]), sign)
    files = [write_phase_table(out / "phase.csv", rows)]
    summary = {"fixed_points": len(rows)}
    if "N" in p:
        law = cw_finite_n(float(p.get("beta", 2.0)), float(p.get("h", 0.0)), int(p["N"]), p.get("window", [-0.05, 0.05]), sign)
        files.append(law.to_csv(out / "finite_n.csv"))
        summary.update(rate=law.rate, f_gap=law.f_gap)
    return files, summary


def cmd_green(cfg, out: Path):
    p = cfg["params"]
    model = _model(cfg)
    grid = np.asarray(p.get("grid", np.linspace(0.0, 2.0, 41).tolist()), dtype=float).astype(complex)
    est = green_formula_estimate(model, grid[:, None], int(p.get("samples", 1000)), cfg["seed"], workers=int(cfg["execution"]["workers"]))
    rows = zip(est.points[:, 0].real.tolist(), est.points[:, 0].imag.tolist(), est.values.tolist(), est.stderr.tolist())
    return [write_csv(out / "green.csv", ["re", "im", "psi", "stderr"], rows)], {"samples": est.samples}


class _SolverFailure(PlurilabError):
    def __init__(self, files, summary, message):
        super().__init__(message)
        self.files, self.summary = files, summary


HANDLERS = {
    "sample": cmd_sample,
    "fekete": cmd_fekete,
    "equilibrium": cmd_equilibrium,
    "bergman": cmd_bergman,
    "tropical": cmd_tropical,
    "transport": cmd_transport,
    "curie-weiss": cmd_curie_weiss,
    "green-formula": cmd_green,
}


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o).__name__}")


def _dump(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default, allow_nan=True) + "\n", encoding="utf-8")


def _write_manifest(out: Path, cfg: dict, files, summary: dict, status: str):
    _dump(out / SUMMARY, summary)
    entries = [{"path": Path(f).name, "sha256": sha256_file(f)} for f in files]
    entries.append({"path": SUMMARY, "sha256": sha256_file(out / SUMMARY)})
    _dump(out / MANIFEST, {
        "schema_version": SCHEMA_VERSION,
        "tool": "plurilab",
        "version": __version__,
        "command": cfg["command"],
        "seed": cfg["seed"],
        "status": status,
        "config": {k: v for k, v in cfg.items() if k != "output"},
        "files": entries,
    })


def run(cfg: dict) -> int:
    """Execute one resolved config; returns the exit status."""
    command = cfg["command"]
    if command == "report":
        return report(Path(cfg["output"]))[0]
    out = Path(cfg["output"])
    out.mkdir(parents=True, exist_ok=True)
    if command in ("sample", "fekete", "green-formula"):
        m = cfg["model"]
        beta = m.get("beta", m.get("schedule", {}).get("beta"))
        if beta is not None and beta != "inf":
            verdict = admissibility_check(build_weight(m["weight"]), build_base(m["base"], int(m["n"])), float(beta), int(m["n"]))
            if not verdict.ok:
                raise AdmissibilityError(f"model is not admissible: {verdict.status}")
    try:
        files, summary = HANDLERS[command](cfg, out)
    except _SolverFailure as exc:
        _write_manifest(out, cfg, exc.files, exc.summary, "solver-failure")
        raise
    _write_manifest(out, cfg, files, summary, "ok")
    return EXIT_OK


# ---------------------------------------------------------------------------
# report


def _run_dirs(root: Path):
    dirs = [root] + sorted(p for p in root.rglob("*") if p.is_dir() and REPORT_DIR not in p.relative_to(root).parts)
    return [d for d in dirs if any(f.is_file() for f in d.iterdir())]


def _load_run(d: Path):
    """(manifest, problems); manifest None when the run cannot be used."""
    mpath = d / MANIFEST
    if not mpath.exists():
        return None, ["missing manifest"]
    try:
        man = json.loads(mpath.read_text(encoding="utf-8"))
    except json.JSONDecodeError:
        return None, ["unreadable manifest"]
    if man.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(f"{mpath}: schema_version {man.get('schema_version')} is not {SCHEMA_VERSION}")
    problems = []
    listed = {e["path"] for e in man.get("files", [])}
    for e in man.get("files", []):
        f = d / e["path"]
        if not f.exists():
            problems.append(f"missing file {e['path']}")
        elif sha256_file(f) != e["sha256"]:
            problems.append(f"hash mismatch for {e['path']}")
    for f in sorted(d.iterdir()):
        if f.is_file() and f.name != MANIFEST and f.name not in listed:
            problems.append(f"unhashed file {f.name} ignored")
    fatal = [p for p in problems if not p.startswith("unhashed")]
    return (None if fatal else man), problems


def _model_key(cfg: dict) -> str:
    m = cfg.get("model")
    if m is None:
        return json.dumps(cfg.get("params", {}), sort_keys=True)
    core = {k: m[k] for k in ("weight", "base", "n") if k in m}
    return json.dumps(core, sort_keys=True)


def _radial_w1_to_profile(points: np.ndarray, prof: RadialProfile) -> float:
    r = np.sort(np.abs(points))
    grid = np.linspace(0.0, max(r[-1], prof.support_radius(1e-8)) * 1.05, 20001)
    Fe = np.searchsorted(r, grid, side="right") / len(r)
    Fs = prof.cdf_radius(grid)
    return float(trapezoid(np.abs(Fe - Fs), grid))


def report(root: Path):
    """Join runs under ``root`` into comparison tables; returns (status, report dict)."""
    root = Path(root)
    if not root.is_dir():
        raise ConfigError(f"output directory {root} does not exist")
    dirs = _run_dirs(root)
    if not dirs:
        raise ConfigError(f"no runs under {root}")
    runs, exclusions = [], []
    warnings = 0
    for d in dirs:
        man, problems = _load_run(d)
        rel = str(d.relative_to(root)) or "."
        if man is None:
            exclusions.append({"run": rel, "reasons": problems})
            warnings += 1
            continue
        if problems:
            warnings += len(problems)
            exclusions.append({"run": rel, "reasons": problems})
        summary = json.loads((d / SUMMARY).read_text(encoding="utf-8"))
        runs.append((rel, d, man, summary))
    long_rows = []
    for rel, d, man, summary in runs:
        cfg = man["config"]
        key = _model_key(cfg)
        beta = cfg.get("model", {}).get("beta", "")
        for metric, value in sorted(summary.items()):
            if metric != "beta" and isinstance(value, (int, float)) and not isinstance(value, bool):
                long_rows.append([man["command"], key, rel, beta, metric, value])
        if man["command"] == "equilibrium":
            _, rows = read_csv(d / "sweep.csv")
            for r in rows:
                for name, v in zip(["envelope_gap", "cy_gap", "normalization", "support_radius", "residual"], r[1:6]):
                    long_rows.append(["equilibrium", key, rel, float(r[0]), name, float(v)])
    # cross-module join: sampled radii against the solver profile at the same beta
    eq = {(_model_key(m["config"]), float(b)): d / f"profile_beta_{float(b)!r}.csv"
          for _, d, m, _ in runs if m["command"] == "equilibrium"
          for b in m["config"].get("params", {}).get("betas", [])}
    for rel, d, man, summary in runs:
        if man["command"] != "sample":
            continue
        cfg = man["config"]
        beta = cfg["model"].get("beta")
        path = eq.get((_model_key(cfg), float(beta))) if isinstance(beta, (int, float)) else None
        if path is None or not path.exists():
            continue
        _, prow = read_csv(path)
        arr = np.array(prow, dtype=float)
        prof = RadialProfile(arr[:, 0], arr[:, 1], arr[:, 2])
        _, srows = read_csv(d / "samples.csv")
        pts = np.array([complex(float(r[3]), float(r[4])) for r in srows])
        long_rows.append(["sample+equilibrium", _model_key(cfg), rel, beta, "w1_samples_vs_solver", _radial_w1_to_profile(pts, prof)])
    long_rows.sort(key=lambda r: (str(r[0]), str(r[1]), str(r[3]), str(r[4]), str(r[2])))
    outdir = root / REPORT_DIR
    outdir.mkdir(exist_ok=True)
    write_csv(outdir / "long.csv", ["command", "model", "run", "beta", "metric", "value"], long_rows)
    # wide table keyed by (command, model, beta)
    metrics = sorted({r[4] for r in long_rows})
    table = {}
    for c, k, _, b, name, v in long_rows:
        table.setdefault((c, k, str(b)), {})[name] = v
    wide = [[c, k, b] + [table[(c, k, b)].get(mname, "") for mname in metrics] for (c, k, b) in sorted(table)]
    write_csv(outdir / "comparison.csv", ["command", "model", "beta"] + metrics, wide)
    info = {"runs": [r[0] for r in runs], "exclusions": exclusions, "warnings": warnings}
    _dump(outdir / "report.json", info)
    return (EXIT_OK, info)


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="plurilab", description="Gibbs ensembles, Fekete points and equilibrium measures.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON run configuration")
    ap.add_argument("--out", help="output directory (overrides the config)")
    ap.add_argument("--seed", type=int, help="seed override")
    ap.add_argument("--version", action="version", version=f"plurilab {__version__}")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "report":
            out = args.out
            if out is None and args.config:
                out = load_config(args.config).get("output")
            if out is None:
                raise ConfigError("report needs --out or a config with 'output'")
            status, info = report(Path(out))
            print(json.dumps({"warnings": info["warnings"], "runs": len(info["runs"])}))
            return status
        if not args.config:
            raise ConfigError("--config is required")
        cfg = resolve_config(load_config(args.config), args.command, args.seed, args.out)
        return run(cfg)
    except (ConfigError, SchemaError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AdmissibilityError as exc:
        print(f"admissibility failure: {exc}", file=sys.stderr)
        return EXIT_ADMISSIBILITY
    except PlurilabError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValueError, TypeError, KeyError) as exc:
        # invalid parameter values surface from constructors as plain ValueError
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
