"""Command-line entry point.

Configuration precedence: built-in defaults < JSON config file < environment
variables (prefix LRPNET_, e.g. LRPNET_REPLICAS=200) < command-line flags.
Every run writes a manifest (config, git describe, wall time) into --out;
artifact CSVs carry the manifest id in a leading comment line and are
byte-identical across reruns and worker counts for a fixed seed.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import os
import subprocess
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import experiments as ex
from . import firework as fw
from . import multiscale as ms
from . import report
from .errors import LrpError
from .model import LrpParams, sample_window, spawn_rng

ENV_PREFIX = "LRPNET_"


@dataclass
class ExperimentConfig:
    betas: list = field(default_factory=lambda: [0.5, 1.0, 2.0, 4.0])
    n_min: int = 6
    n_max: int = 13
    alpha: float = 0.5
    big_m: float = 2.1
    big_l: float = 2.1
    replicas: int = 500
    seed: int = 1234
    truncation_eps: float = 1e-12
    threads: int = field(default_factory=lambda: os.cpu_count() or 1)
    out: str = "runs"
    extra: dict = field(default_factory=dict)

    def n_range(self):
        return range(self.n_min, self.n_max + 1)

    def to_json_obj(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_json_obj(cls, obj):
        known = {f.name for f in dataclasses.fields(cls)}
        kw = {k: v for k, v in obj.items() if k in known}
        return cls(**kw)

    def validate(self):
        if self.n_min > self.n_max or self.n_min < 1:
            raise LrpError("need 1 <= n_min <= n_max")
        if any(b <= 0 for b in self.betas):
            raise LrpError("betas must be positive")
        if not (0 < self.alpha <= 0.5):
            raise LrpError("alpha must lie in (0, 1/2]")
        if self.replicas < 1:
            raise LrpError("replicas must be >= 1")
        LrpParams(beta=self.betas[0], seed=self.seed,
                  truncation_eps=self.truncation_eps)


_ENV_CASTS = {
    "betas": lambda s: [float(x) for x in s.split(",")],
    "n_min": int, "n_max": int, "alpha": float, "big_m": float,
    "big_l": float, "replicas": int, "seed": int,
    "truncation_eps": float, "threads": int, "out": str,
}


def load_config(args) -> ExperimentConfig:
    obj = {}
    if args.config:
        with open(args.config) as f:
            obj.update(json.load(f))
    for name, cast in _ENV_CASTS.items():
        env = os.environ.get(ENV_PREFIX + name.upper())
        if env is not None:
            obj[name] = cast(env)
    cfg = ExperimentConfig.from_json_obj(obj)
    flag_map = {
        "beta": "betas", "n_min": "n_min", "n_max": "n_max", "alpha": "alpha",
        "big_m": "big_m", "big_l": "big_l", "replicas": "replicas",
        "seed": "seed", "eps": "truncation_eps", "threads": "threads",
        "out": "out",
    }
    for flag, name in flag_map.items():
        v = getattr(args, flag, None)
        if v is not None:
            setattr(cfg, name, v)
    # a single-ended range flag narrows the default range rather than erroring
    if getattr(args, "n_max", None) is not None and getattr(args, "n_min", None) is None:
        cfg.n_min = min(cfg.n_min, cfg.n_max)
    if getattr(args, "n_min", None) is not None and getattr(args, "n_max", None) is None:
        cfg.n_max = max(cfg.n_min, cfg.n_max)
    cfg.validate()
    return cfg


def _git_describe():
    try:
        return subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True, text=True, timeout=5,
        ).stdout.strip() or None
    except Exception:
        return None


class Run:
    """Output directory, manifest bookkeeping, stable manifest id."""

    def __init__(self, cfg: ExperimentConfig, command: str):
        self.cfg = cfg
        self.command = command
        self.t0 = time.time()
        ident = {"command": command, **cfg.to_json_obj()}
        ident.pop("threads", None)   # resources never change results
        ident.pop("out", None)
        blob = json.dumps(ident, sort_keys=True)
        self.manifest_id = hashlib.sha256(blob.encode()).hexdigest()[:12]
        self.dir = Path(cfg.out)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.artifacts = []

    def path(self, name: str) -> Path:
        p = self.dir / name
        self.artifacts.append(str(p))
        return p

    def write_json(self, name: str, obj) -> Path:
        p = self.path(name)
        if isinstance(obj, dict):
            if "manifest" not in obj:
                obj = {"manifest": self.manifest_id, **obj}
        else:
            obj = {"manifest": self.manifest_id, "rows": obj}
        with open(p, "w") as f:
            json.dump(obj, f, indent=2, sort_keys=True, default=_json_default)
            f.write("\n")
        return p

    def finish(self):
        manifest = {
            "id": self.manifest_id,
            "command": self.command,
            "config": self.cfg.to_json_obj(),
            "git_describe": _git_describe(),
            "wall_time_s": round(time.time() - self.t0, 3),
            "artifacts": sorted(self.artifacts),
        }
        with open(self.dir / f"manifest_{self.manifest_id}.json", "w") as f:
            json.dump(manifest, f, indent=2, sort_keys=True)
            f.write("\n")
        return manifest


def _json_default(o):
    import numpy as np

    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        v = float(o)
        return "inf" if math.isinf(v) else v
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, float) and math.isinf(o):
        return "inf"
    if dataclasses.is_dataclass(o):
        return dataclasses.asdict(o)
    raise TypeError(f"not serializable: {type(o)}")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_sample(cfg, run):
    beta = cfg.betas[0]
    params = LrpParams(beta=beta, seed=cfg.seed, truncation_eps=cfg.truncation_eps)
    N = 2 ** cfg.n_max
    out = run.path(f"windows_b{beta:g}_n{cfg.n_max}.jsonl")
    with open(out, "w") as f:
        for rep in range(cfg.replicas):
            w = sample_window(params, -N, N, replica_id=rep)
            f.write(w.to_json() + "\n")
    return {"windows": cfg.replicas, "file": str(out)}


def cmd_resist(cfg, run):
    beta = cfg.betas[0]
    params = LrpParams(beta=beta, seed=cfg.seed, truncation_eps=cfg.truncation_eps)
    n = cfg.n_max
    rng = spawn_rng(cfg.seed, 1)
    res, stats, _ = ex.sample_point(params, n, rng)
    out = {
        "beta": beta, "n": n,
        "point": json.loads(res.to_json()),
        "cut_count": stats.window_count,
        "cut_bound": stats.series_bound,
    }
    run.write_json("resist.json", out)
    return out


def _scan_command(cfg, run, kind):
    scan_fn = ex.point_scan if kind == "point" else ex.box_scan
    store = ex.SampleStore()
    results = []
    summary = {}
    for beta in cfg.betas:
        res = scan_fn(beta, cfg.n_range(), cfg.replicas, seed=cfg.seed,
                      eps=cfg.truncation_eps, threads=cfg.threads)
        results.append(res)
        store.add_rows(res.rows)
        summary[f"beta={beta:g}"] = {
            "medians": {str(n): float(m)
                        for n, m in zip(res.n_values, res.medians)},
            "delta_hat": res.fit.delta if res.fit else None,
            "delta_ci": res.fit.ci if res.fit else None,
            "delta_per_logN": res.fit.delta_per_log_N if res.fit else None,
            "monotone_up_to_ci": res.monotone_up_to_ci(),
        }
    store.to_csv(run.path(f"scan_{kind}.csv"), manifest=run.manifest_id)
    report.scan_figure(results, run.path(f"scan_{kind}.svg"),
                       manifest=run.manifest_id)
    run.write_json(f"scan_{kind}_summary.json", summary)
    return summary


def cmd_scan_point(cfg, run):
    return _scan_command(cfg, run, "point")


def cmd_scan_box(cfg, run):
    return _scan_command(cfg, run, "box")


def cmd_quantiles(cfg, run):
    beta = cfg.betas[0]
    table = ex.estimate_quantiles(beta, cfg.alpha, cfg.n_range(), cfg.replicas,
                                  seed=cfg.seed, eps=cfg.truncation_eps,
                                  threads=cfg.threads)
    store = ex.SampleStore()
    for n, vals in table.samples.items():
        store.add_rows([{"beta": beta, "n": n, "kind": "hat_n",
                         "value": float(v), "seed": cfg.seed, "replica_id": i}
                        for i, v in enumerate(vals)])
    store.to_csv(run.path(f"quantiles_b{beta:g}.csv"), manifest=run.manifest_id)
    report.quantile_figure(table, run.path(f"quantiles_b{beta:g}.svg"),
                           manifest=run.manifest_id)
    run.write_json(f"quantiles_b{beta:g}.json", table.to_json_obj())
    return table.to_json_obj()


def cmd_goodpairs(cfg, run):
    beta = cfg.betas[0]
    params = LrpParams(beta=beta, seed=cfg.seed, truncation_eps=cfg.truncation_eps)
    rows = []
    for i in cfg.extra.get("scales", (2, 4, 6)):
        exact = ms.good_pair_probability(params, i)
        R = 2 ** (i + 2)
        hits = 0
        for rep in range(cfg.replicas):
            rng = spawn_rng(cfg.seed, 31, i, rep)
            w = sample_window(params, -R, R, rng=rng)
            hits += ms.is_good_pair(w, ms.GoodPairQuery(z=0, i=i))
        rows.append({"beta": beta, "i": i, "empirical": hits / cfg.replicas,
                     "exact": exact, "replicas": cfg.replicas})
    run.write_json("goodpairs.json", rows)
    return rows


def cmd_firework(cfg, run):
    beta = cfg.betas[0]
    params = LrpParams(beta=beta, seed=cfg.seed, truncation_eps=cfg.truncation_eps)
    r_values = cfg.extra.get("r_values", tuple(range(2, 9)))
    decay = fw.spread_decay(params, r_values, cfg.replicas)
    lines = ["r,beta,replicas,p_all_covered,exact,kappa_fit"]
    for row in decay.csv_rows():
        lines.append(",".join(str(row[k]) for k in
                              ("r", "beta", "replicas", "p_all_covered",
                               "exact", "kappa_fit")))
    p = run.path("firework.csv")
    with open(p, "w", newline="\n") as f:
        f.write("\n".join(lines) + "\n")
    report.firework_figure(decay, run.path("firework.svg"),
                           manifest=run.manifest_id)
    out = {"kappa": decay.kappa, "kappa_ci": decay.kappa_ci,
           "p_all": decay.p_all.tolist()}
    run.write_json("firework.json", out)
    return out


def cmd_recursion(cfg, run):
    beta = cfg.betas[0]
    table = ex.estimate_quantiles(beta, cfg.alpha, range(1, cfg.n_max + 1),
                                  cfg.replicas, seed=cfg.seed,
                                  eps=cfg.truncation_eps, threads=cfg.threads)
    rep = ex.recursion_check(table, cfg.big_m, cfg.big_l,
                             n_values=range(cfg.n_min, cfg.n_max + 1))
    report.recursion_figure(rep, run.path("recursion.svg"),
                            manifest=run.manifest_id)
    out = {
        "entries": [{"n": e.n, "K_n": e.K_n, "S_n": e.S_n, "a_n": e.a_n,
                     "ratio": e.ratio} for e in rep.entries],
        "min_ratio": rep.min_ratio,
        "trend_slope": rep.trend_slope,
        "trend_ci": rep.trend_ci,
        "passed": rep.passed(),
    }
    run.write_json("recursion.json", out)
    return out


def cmd_dominance(cfg, run):
    beta = cfg.betas[0]
    repd = ex.dominance_check(beta, cfg.n_max, cfg.replicas, seed=cfg.seed,
                              eps=cfg.truncation_eps, threads=cfg.threads)
    out = dataclasses.asdict(repd)
    run.write_json("dominance.json", out)
    return out


def cmd_baseline(cfg, run):
    beta = cfg.betas[0]
    repb = ex.cutedge_baseline(beta, cfg.n_range(), cfg.replicas,
                               seed=cfg.seed, eps=cfg.truncation_eps,
                               threads=cfg.threads)
    report.baseline_figure(repb, run.path("baseline.svg"),
                           manifest=run.manifest_id)
    out = {"beta": beta, "slope": repb.slope, "slope_ci": repb.slope_ci,
           "mean_counts": repb.mean_counts.tolist(),
           "exact_counts": repb.exact_counts.tolist()}
    run.write_json("baseline.json", out)
    return out


def cmd_fit(cfg, run):
    src = cfg.extra.get("input")
    if not src:
        raise LrpError("fit requires extra.input pointing at a quantiles JSON")
    with open(src) as f:
        table = ex.QuantileTable.from_json_obj(json.load(f))
    fit = ex.fit_exponent(table)
    out = {"delta": fit.delta, "c": fit.c, "ci": fit.ci,
           "delta_per_logN": fit.delta_per_log_N}
    run.write_json("fit.json", out)
    return out


def cmd_plot(cfg, run):
    import csv as _csv

    made = []
    for p in sorted(Path(cfg.out).glob("scan_*.csv")):
        kind = p.stem.split("_", 1)[1]
        rows = []
        with open(p) as f:
            rdr = _csv.reader(r for r in f if not r.startswith("#"))
            header = next(rdr)
            for rec in rdr:
                d = dict(zip(header, rec))
                val = math.inf if d["value_or_inf"] == "inf" else float(d["value_or_inf"])
                rows.append((float(d["beta"]), int(d["n"]), val))
        betas = sorted({r[0] for r in rows})
        results = []
        for b in betas:
            ns = sorted({r[1] for r in rows if r[0] == b})
            import numpy as np
            res = ex.ScanResult(
                beta=b, kind=kind, n_values=tuple(ns),
                medians=np.array([np.median([r[2] for r in rows
                                             if r[0] == b and r[1] == n])
                                  for n in ns]),
                q25=np.zeros(len(ns)), q75=np.zeros(len(ns)),
                median_ci=[(math.nan, math.nan)] * len(ns),
                fit=None, rows=[], runtime_s=0.0)
            res.median_ci = [(float(m), float(m)) for m in res.medians]
            results.append(res)
        out = run.path(p.stem + ".svg")
        report.scan_figure(results, out, manifest=run.manifest_id)
        made.append(str(out))
    return {"figures": made}


COMMANDS = {
    "sample": cmd_sample,
    "resist": cmd_resist,
    "scan-point": cmd_scan_point,
    "scan-box": cmd_scan_box,
    "quantiles": cmd_quantiles,
    "goodpairs": cmd_goodpairs,
    "firework": cmd_firework,
    "recursion": cmd_recursion,
    "dominance": cmd_dominance,
    "baseline": cmd_baseline,
    "fit": cmd_fit,
    "plot": cmd_plot,
}


def build_parser():
    p = argparse.ArgumentParser(
        prog="lrpnet",
        description="Critical long-range percolation resistance toolkit")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--beta", type=float, action="append", dest="beta",
                   help="model parameter, repeatable")
    p.add_argument("--n-min", type=int, dest="n_min")
    p.add_argument("--n-max", type=int, dest="n_max")
    p.add_argument("--alpha", type=float)
    p.add_argument("--big-m", type=float, dest="big_m")
    p.add_argument("--big-l", type=float, dest="big_l")
    p.add_argument("--replicas", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--out", type=str)
    p.add_argument("--eps", type=float, help="tail truncation epsilon")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
    except (LrpError, ValueError, OSError) as err:
        print(json.dumps({"error": "config", "detail": str(err)}),
              file=sys.stderr)
        return 2
    run = Run(cfg, args.command)
    try:
        result = COMMANDS[args.command](cfg, run)
    except LrpError as err:
        print(json.dumps({"error": type(err).__name__, "detail": str(err)}),
              file=sys.stderr)
        return 1
    manifest = run.finish()
    print(json.dumps({"manifest": manifest["id"],
                      "wall_time_s": manifest["wall_time_s"],
                      "result": result}, default=_json_default))
    return 0


if __name__ == "__main__":
    sys.exit(main())
