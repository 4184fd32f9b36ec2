"""Command-line front end: ``maxrobust {gen,train,attack,eval,oracle,sweep,report}``.

Every subcommand accepts ``--config file.json`` (keys as in :data:`DEFAULTS`)
and ``--out DIR``; explicit flags override the config file. Exit codes: 0
success, 1 usage error, 2 data error (bad input, non-separable data), 3
solver failure.
"""
import argparse
import csv
import json
import math
import os
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import oracle, synthdata
from .attack import ACCUMULATE, MODE_ALIASES, PROJECTED, AttackSpec, attack_rows, band_mask, write_report
from .errors import (
    CertificationError,
    DatasetFormatError,
    InfeasibleError,
    InvalidInputError,
    StepSizeError,
)
from .models import ConvParams, LinearParams, LossKind, load_model, save_model
from .numerics import NormKind
from .optim import LineSearch, TrainConfig, regularization_path, train_steepest
from .robusteval import adversarial_train, robust_report

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_SOLVER = 0, 1, 2, 3

# Hyperparameters of the experiment grid. d=64 keeps the default sweep short;
# pass --d 100 for the larger setting.
DEFAULTS = {
    "d": 64,
    "d_over_n": [1, 2, 4, 8, 16, 32],
    "seeds": [0, 1, 2],
    "methods": ["cd", "gd", "signgd"],
    "attack_norms": ["linf", "l2", "l1"],
    "eps_step": 1e-3,
    "eps_max": 50.0,
    "slack": 0.0,
    "loss": "exponential",
    "steps": 10_000,
    "conv_steps": 10_000,
    "record_every": 100,
    "line_search_max_step": None,
    "line_search_max_step_grid": [1, 10, 100, 1000],
    "lambdas": [1e-1, 1e-2, 1e-3, 1e-4],
    "adv_train_steps": 10,
    "adv_train_lr": 0.1,
    "adv_eps_scale": 1.0,
    "normalized": True,
    "workers": None,
    "svg": True,
    "out": "artifacts",
}

METHODS = {"cd", "gd", "signgd", "prox-l1", "prox-l2", "prox-linf", "prox-fourier-l1", "conv2-gd"}
ADV_PREFIX = "advtrain-"

SCHEMAS = {
    "trajectory": [("step", int), ("risk", float), ("margin", float), ("norm_of_w", float)],
    "robust": [("eps", float), ("robust_accuracy", float)],
    "attack": [("sample_index", int), ("norm_kind", str), ("epsilon", float), ("steps", int),
               ("loss_before", float), ("loss_after", float), ("flipped", int),
               ("achieved_norm", float)],
    "sweep": [("d_over_n", float), ("method", str), ("seed", int), ("max_eps", float),
              ("margin", float)],
    "summary": [("d_over_n", float), ("method", str), ("mean_max_eps", float),
                ("err_max_eps", float), ("mean_margin", float), ("err_margin", float),
                ("count", int)],
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# -- config ------------------------------------------------------------------

def load_config(path=None, overrides=None):
    """Merge defaults, a JSON file and explicit overrides; validate the result."""
    cfg = dict(DEFAULTS)
    if path:
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidInputError(f"cannot read config {path}: {exc}") from exc
        unknown = set(doc) - set(DEFAULTS)
        if unknown:
            raise InvalidInputError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(doc)
    for k, v in (overrides or {}).items():
        if v is not None:
            cfg[k] = v
    validate_config(cfg)
    return cfg


def validate_config(cfg):
    d = int(cfg["d"])
    if d < 1:
        raise InvalidInputError("d must be positive")
    for key in ("d_over_n", "seeds", "attack_norms", "lambdas", "line_search_max_step_grid"):
        if not cfg[key]:
            raise InvalidInputError(f"{key} must be nonempty")
    if not cfg["methods"]:
        raise InvalidInputError("methods must be nonempty")
    for r in cfg["d_over_n"]:
        sample_count(d, r)
    for m in cfg["methods"]:
        resolve_method(m)
    for k in cfg["attack_norms"]:
        NormKind.parse(k)
    LossKind.parse(cfg["loss"])
    if not cfg["eps_step"] > 0 or not cfg["eps_max"] > cfg["eps_step"]:
        raise InvalidInputError("need 0 < eps_step < eps_max")
    return cfg


def sample_count(d, ratio):
    ratio = float(ratio)
    if not ratio > 0:
        raise InvalidInputError(f"d/n ratio must be positive, got {ratio}")
    n = int(round(d / ratio))
    if n < 1:
        raise InvalidInputError(f"d/n ratio {ratio} gives n=0 for d={d}")
    return n


def resolve_method(name):
    name = str(name).lower()
    if name in METHODS:
        return name
    if name.startswith(ADV_PREFIX):
        NormKind.parse(name[len(ADV_PREFIX):])
        return name
    raise InvalidInputError(f"unknown method {name!r}")


def train_config(cfg, steps=None):
    ms = cfg["line_search_max_step"]
    return TrainConfig(steps=int(steps or cfg["steps"]),
                       step_size=LineSearch(None if ms is None else float(ms)),
                       loss=cfg["loss"], record_every=int(cfg["record_every"]),
                       normalized=cfg["normalized"])


def eps_grid(cfg):
    step = float(cfg["eps_step"])
    return step * np.arange(0, int(math.floor(float(cfg["eps_max"]) / step)) + 1)


# -- CSV schema --------------------------------------------------------------

def validate_csv(path, schema):
    """Check header and cell types of an emitted CSV; raise on mismatch."""
    cols = SCHEMAS[schema]
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != [c for c, _ in cols]:
        raise DatasetFormatError(f"{path}: header {rows[:1]} does not match schema {schema!r}")
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(cols):
            raise DatasetFormatError(f"{path}:{i}: expected {len(cols)} fields")
        for (name, typ), cell in zip(cols, row):
            try:
                typ(cell)
            except ValueError:
                raise DatasetFormatError(f"{path}:{i}: column {name} not {typ.__name__}") from None
    return len(rows) - 1


def _write_json(path, doc):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True))
    return Path(path)


# -- training ----------------------------------------------------------------

def train_method(method, ds, cfg, seed=0):
    """Train ``method`` on ``ds``; returns ``(model, trajectory or None)``."""
    method = resolve_method(method)
    if method in ("cd", "gd", "signgd"):
        traj = train_steepest(LinearParams.zeros(ds.d), ds, method, train_config(cfg))
        return traj.final_params, traj
    if method == "conv2-gd":
        traj = train_steepest(ConvParams.random(ds.d, seed), ds, "gd",
                              train_config(cfg, cfg["conv_steps"]))
        return traj.final_params, traj
    if method.startswith("prox-"):
        penalty = NormKind.parse(method[len("prox-"):])
        path = regularization_path(ds, penalty, cfg["lambdas"], train_config(cfg))
        return path[-1].params, None
    attack_norm = NormKind.parse(method[len(ADV_PREFIX):])
    eps = cfg["adv_eps_scale"] * oracle.min_norm(ds, attack_norm).implied_max_eps
    traj = adversarial_train(ds, eps, attack_norm, train_config(cfg),
                             cfg["adv_train_steps"], cfg["adv_train_lr"])
    return traj.final_params, traj


# -- subcommands -------------------------------------------------------------

def dataset_path(out, d, n, seed):
    return Path(out) / "data" / f"d{d}_n{n}_s{seed}.json"


def cmd_gen(cfg):
    d = int(cfg["d"])
    paths = []
    for ratio in cfg["d_over_n"]:
        n = sample_count(d, ratio)
        for seed in cfg["seeds"]:
            p = dataset_path(cfg["out"], d, n, int(seed))
            p.parent.mkdir(parents=True, exist_ok=True)
            synthdata.save(synthdata.generate(d, n, int(seed)), p)
            paths.append(p)
    for p in paths:
        print(p)
    return paths


def cmd_train(cfg, data, method, seed=0):
    ds = synthdata.load(data)
    model, traj = train_method(method, ds, cfg, seed)
    out = Path(cfg["out"]) / "runs"
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{Path(data).stem}_{method}"
    model_path = save_model(model, out / f"{stem}.model.json")
    if traj is not None:
        csv_path = traj.to_csv(out / f"{stem}.trajectory.csv")
        validate_csv(csv_path, "trajectory")
        print(csv_path)
    print(model_path)
    return model_path


def cmd_attack(cfg, data, model_path, norm, eps=None, band=None, cutoff=0.5, steps=1,
               mode=PROJECTED):
    ds = synthdata.load(data)
    model = load_model(model_path)
    norm = NormKind.parse(norm)
    if band:
        if eps is None:
            raise InvalidInputError("--band needs --eps")
        specs = [(f"{band}", AttackSpec(
            norm, eps_mask=band_mask(ds.d, band, eps, cutoff), steps=steps, mode=mode))]
    else:
        if eps is None:
            raise InvalidInputError("--eps is required")
        specs = [("", AttackSpec(norm, eps, steps=steps, mode=mode))]
    out = Path(cfg["out"]) / "attacks"
    out.mkdir(parents=True, exist_ok=True)
    path = None
    for tag, spec in specs:
        rows = attack_rows(model, ds, spec, cfg["loss"])
        name = f"{Path(data).stem}_{norm.value}{'_' + tag if tag else ''}_eps{eps:g}.csv"
        path = write_report(out / name, rows)
        validate_csv(path, "attack")
        print(path)
    return path


def cmd_eval(cfg, data, model_path, norm):
    ds = synthdata.load(data)
    model = load_model(model_path)
    norm = NormKind.parse(norm)
    report = robust_report(model, ds, norm, eps_grid(cfg), cfg["loss"], float(cfg["slack"]))
    out = Path(cfg["out"]) / "eval"
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{Path(model_path).name.split('.')[0]}_{norm.value}"
    csv_path = report.to_csv(out / f"{stem}.robust.csv")
    validate_csv(csv_path, "robust")
    json_path = report.save_summary(out / f"{stem}.summary.json")
    print(json.dumps(report.summary()))
    return json_path


def cmd_oracle(cfg, data, norm):
    ds = synthdata.load(data)
    norm = NormKind.parse(norm)
    out = Path(cfg["out"]) / "oracle"
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{Path(data).stem}_{norm.value}"
    try:
        cert = oracle.min_norm(ds, norm)
    except InfeasibleError as exc:
        ray = None if exc.ray is None else np.asarray(exc.ray).tolist()
        path = _write_json(out / f"{stem}.infeasible.json",
                           {"status": "infeasible", "attack_norm": norm.value, "message": str(exc),
                            "ray": ray})
        print(path)
        raise
    check = oracle.check_certificate(cert, ds)
    if not check.passed:
        raise CertificationError(f"certificate failed verification: {check.failures}")
    path = cert.save(out / f"{stem}.certificate.json")
    print(path)
    print(json.dumps({"implied_max_eps": cert.implied_max_eps, "solver": cert.solver}))
    return path


def _sweep_cell(args):
    """One (d/n, seed, method) cell: train, then margin and max_eps per attack norm."""
    cfg, ratio, seed, method = args
    d = int(cfg["d"])
    n = sample_count(d, ratio)
    rows = []
    try:
        ds = synthdata.generate(d, n, int(seed))
        if method == "oracle":
            for k in cfg["attack_norms"]:
                mu = oracle.min_norm(ds, k).implied_max_eps
                rows.append((k, mu, mu))
        else:
            model, _ = train_method(method, ds, cfg, int(seed))
            for k in cfg["attack_norms"]:
                rep = robust_report(model, ds, k, eps_grid(cfg), cfg["loss"], float(cfg["slack"]))
                rows.append((k, rep.max_eps, rep.margin if rep.margin is not None else float("nan")))
        return {"ratio": ratio, "seed": seed, "method": method, "rows": rows, "error": None}
    except Exception as exc:  # recorded per cell; the sweep continues
        return {"ratio": ratio, "seed": seed, "method": method, "rows": [],
                "error": f"{type(exc).__name__}: {exc}"}


def aggregate(rows):
    """Mean and standard error over seeds for each (d_over_n, method)."""
    groups = {}
    for r in rows:
        groups.setdefault((float(r["d_over_n"]), r["method"]), []).append(r)
    out = []
    for (ratio, method), grp in sorted(groups.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        eps = np.array([float(g["max_eps"]) for g in grp])
        mu = np.array([float(g["margin"]) for g in grp])
        se = (lambda v: float(np.std(v, ddof=1) / np.sqrt(v.size)) if v.size > 1 else 0.0)
        out.append({"d_over_n": ratio, "method": method, "mean_max_eps": float(eps.mean()),
                    "err_max_eps": se(eps), "mean_margin": float(mu.mean()),
                    "err_margin": se(mu), "count": len(grp)})
    return out


def _write_rows(path, schema, rows):
    cols = [c for c, _ in SCHEMAS[schema]]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=cols)
        writer.writeheader()
        for r in rows:
            writer.writerow({k: (repr(r[k]) if isinstance(r[k], float) else r[k]) for k in cols})
    validate_csv(path, schema)
    return Path(path)


def render_svg(summary, title, path, width=480, height=320):
    """Mean max_eps against log2(d/n), one polyline per method, with error bars."""
    pad = 40
    xs = sorted({r["d_over_n"] for r in summary})
    ys = [r["mean_max_eps"] + r["err_max_eps"] for r in summary] or [1.0]
    lx = np.log2(xs)
    x_lo, x_hi = float(lx.min()), float(lx.max()) if lx.max() > lx.min() else float(lx.min()) + 1
    y_hi = max(ys) or 1.0

    def px(r):
        return pad + (np.log2(r) - x_lo) / (x_hi - x_lo) * (width - 2 * pad)

    def py(v):
        return height - pad - v / y_hi * (height - 2 * pad)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2",
              "#7f7f7f", "#17becf", "#bcbd22"]
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<text x="{width / 2}" y="16" text-anchor="middle" font-size="12">{title}</text>',
             f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
             f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
             f'<text x="{width / 2}" y="{height - 8}" text-anchor="middle" font-size="11">d/n</text>']
    for r in xs:
        parts.append(f'<text x="{px(r):.1f}" y="{height - pad + 14}" text-anchor="middle" '
                     f'font-size="10">{r:g}</text>')
    methods = sorted({r["method"] for r in summary})
    for j, m in enumerate(methods):
        color = colors[j % len(colors)]
        pts = sorted((r for r in summary if r["method"] == m), key=lambda r: r["d_over_n"])
        coords = " ".join(f"{px(r['d_over_n']):.1f},{py(r['mean_max_eps']):.1f}" for r in pts)
        parts.append(f'<polyline fill="none" stroke="{color}" points="{coords}"/>')
        for r in pts:
            x = px(r["d_over_n"])
            lo, hi = py(r["mean_max_eps"] - r["err_max_eps"]), py(r["mean_max_eps"] + r["err_max_eps"])
            parts.append(f'<line x1="{x:.1f}" y1="{lo:.1f}" x2="{x:.1f}" y2="{hi:.1f}" stroke="{color}"/>')
        parts.append(f'<text x="{width - pad + 2}" y="{pad + 12 * j}" font-size="10" '
                     f'fill="{color}">{m}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts))
    return Path(path)


def cmd_sweep(cfg):
    """Run every (d/n, seed, method) cell plus the oracle; write one CSV per attack norm."""
    out = Path(cfg["out"]) / "sweep"
    out.mkdir(parents=True, exist_ok=True)
    methods = [resolve_method(m) for m in cfg["methods"]] + ["oracle"]
    cells = [(cfg, r, s, m) for r in cfg["d_over_n"] for s in cfg["seeds"] for m in methods]
    workers = cfg["workers"] or os.cpu_count() or 1
    if workers == 1:
        results = [_sweep_cell(c) for c in cells]
    else:
        with ProcessPoolExecutor(max_workers=int(workers)) as pool:
            results = list(pool.map(_sweep_cell, cells))
    failures = [r for r in results if r["error"]]
    _write_json(out / "failures.json", [{k: r[k] for k in ("ratio", "seed", "method", "error")}
                                        for r in failures])
    written = []
    for k in cfg["attack_norms"]:
        kind = NormKind.parse(k).value
        rows = [{"d_over_n": float(res["ratio"]), "method": res["method"], "seed": int(res["seed"]),
                 "max_eps": float(eps), "margin": float(mu)}
                for res in results for (kk, eps, mu) in res["rows"] if NormKind.parse(kk).value == kind]
        path = _write_rows(out / f"sweep_{kind}.csv", "sweep", rows)
        summary = aggregate(rows)
        _write_rows(out / f"sweep_{kind}_summary.csv", "summary", summary)
        if cfg["svg"]:
            render_svg(summary, f"maximal robust eps, {kind} attack", out / f"sweep_{kind}.svg")
        written.append(path)
        print(path)
    for f in failures:
        print(f"cell failed: {f['method']} d/n={f['ratio']} seed={f['seed']}: {f['error']}",
              file=sys.stderr)
    return written


def cmd_report(cfg, inputs):
    """Re-aggregate sweep CSVs and redraw their SVGs."""
    out = []
    for p in inputs:
        p = Path(p)
        validate_csv(p, "sweep")
        with open(p, newline="") as fh:
            rows = list(csv.DictReader(fh))
        summary = aggregate(rows)
        s_path = _write_rows(p.with_name(p.stem + "_summary.csv"), "summary", summary)
        render_svg(summary, p.stem, p.with_suffix(".svg"))
        for r in summary:
            print(f"{r['method']:>16s} d/n={r['d_over_n']:<5g} max_eps={r['mean_max_eps']:.4f} "
                  f"+- {r['err_max_eps']:.4f}")
        out.append(s_path)
    return out


# -- argument parsing ----------------------------------------------------------

def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _strs(text):
    return [v.strip() for v in text.split(",") if v.strip()]


def build_parser():
    p = _Parser(prog="maxrobust", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--out", help="artifact root directory")
        sp.add_argument("--d", type=int)
        sp.add_argument("--d-over-n", dest="d_over_n", type=_floats)
        sp.add_argument("--seeds", type=_ints)
        sp.add_argument("--methods", type=_strs)
        sp.add_argument("--attack-norms", dest="attack_norms", type=_strs)
        sp.add_argument("--eps-step", dest="eps_step", type=float)
        sp.add_argument("--eps-max", dest="eps_max", type=float)
        sp.add_argument("--slack", type=float)
        sp.add_argument("--loss")
        sp.add_argument("--steps", type=int)
        sp.add_argument("--conv-steps", dest="conv_steps", type=int)
        sp.add_argument("--record-every", dest="record_every", type=int)
        sp.add_argument("--line-search-max-step", dest="line_search_max_step", type=float)
        sp.add_argument("--lambdas", type=_floats)
        sp.add_argument("--adv-train-steps", dest="adv_train_steps", type=int)
        sp.add_argument("--adv-train-lr", dest="adv_train_lr", type=float)
        sp.add_argument("--adv-eps-scale", dest="adv_eps_scale", type=float)
        sp.add_argument("--workers", type=int)
        sp.add_argument("--no-svg", dest="svg", action="store_const", const=False)
        return sp

    common(sub.add_parser("gen", help="generate synthetic datasets"))
    sp = common(sub.add_parser("train", help="train one method on one dataset"))
    sp.add_argument("--data", required=True)
    sp.add_argument("--method", required=True)
    sp.add_argument("--seed", type=int, default=0, help="conv init seed")
    sp = common(sub.add_parser("attack", help="attack a trained model"))
    sp.add_argument("--data", required=True)
    sp.add_argument("--model", required=True)
    sp.add_argument("--norm", required=True)
    sp.add_argument("--eps", type=float)
    sp.add_argument("--band", choices=["low", "high"])
    sp.add_argument("--cutoff", type=float, default=0.5)
    sp.add_argument("--attack-steps", dest="attack_steps", type=int, default=1)
    sp.add_argument("--mode", choices=[PROJECTED, ACCUMULATE, *MODE_ALIASES],
                    default=PROJECTED)
    sp = common(sub.add_parser("eval", help="robust accuracy over an eps grid"))
    sp.add_argument("--data", required=True)
    sp.add_argument("--model", required=True)
    sp.add_argument("--norm", required=True)
    sp = common(sub.add_parser("oracle", help="certified minimum-norm classifier"))
    sp.add_argument("--data", required=True)
    sp.add_argument("--norm", required=True)
    common(sub.add_parser("sweep", help="robustness sweep over d/n, seeds and methods"))
    sp = common(sub.add_parser("report", help="aggregate sweep CSVs and draw SVGs"))
    sp.add_argument("inputs", nargs="+")
    return p


def run(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {k: getattr(args, k, None) for k in DEFAULTS}
    cfg = load_config(args.config, overrides)
    c = args.command
    if c == "gen":
        return cmd_gen(cfg)
    if c == "train":
        return cmd_train(cfg, args.data, resolve_method(args.method), args.seed)
    if c == "attack":
        return cmd_attack(cfg, args.data, args.model, args.norm, args.eps, args.band, args.cutoff,
                          args.attack_steps, args.mode)
    if c == "eval":
        return cmd_eval(cfg, args.data, args.model, args.norm)
    if c == "oracle":
        return cmd_oracle(cfg, args.data, args.norm)
    if c == "sweep":
        return cmd_sweep(cfg)
    return cmd_report(cfg, args.inputs)


def main(argv=None):
    try:
        run(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InvalidInputError, DatasetFormatError, InfeasibleError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (CertificationError, StepSizeError, RuntimeError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        if os.environ.get("MAXROBUST_DEBUG"):
            traceback.print_exc()
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
