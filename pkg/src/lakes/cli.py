"""Reproducible experiment runner: config, seeding, scan execution, artifacts.

Configs are single JSON files; CLI ``--set key=value`` flags override file
values.  Every run hashes its resolved config and writes
``<outdir>/<experiment>/<confighash>/{results.csv, manifest.json, plots/}``.
Scan points are pure and run on a worker pool; a failure at one point is
recorded as a warning and does not abort the others.  Two runs with the
same config and seed produce byte-identical CSVs.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from lakes import __version__
from lakes.errors import ConfigInvalid, ResourceExceeded, LakesError

EXPERIMENTS = ("qutrit-sweep", "ruby-sweep", "ruby-pulse", "ruby-match",
               "dtc-sweep", "dtc-pulse", "dtc-verify-alphas", "twa-sweep")
THREADS_ENV = "LAKES_THREADS"
MAX_BASIS_DIM = 200_000


def _fmt(x):
    """17-significant-digit decimal text for byte-stable CSVs."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (complex, np.complexfloating)):
        return f"{x.real:.17g}{x.imag:+.17g}j"
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def config_hash(cfg):
    text = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:12]


def load_config(path, overrides=()):
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigInvalid(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigInvalid("config must be a JSON object")
    for item in overrides:
        if "=" not in item:
            raise ConfigInvalid(f"override {item!r} is not key=value")
        key, text = item.split("=", 1)
        try:
            cfg[key] = json.loads(text)
        except json.JSONDecodeError:
            cfg[key] = text
    return validate_config(cfg)


_SCHEMAS = {
    "qutrit-sweep": {"T_values": list, "h_x": float, "h_z": float,
                     "drives": list, "delta_values": list, "lambda_f": float},
    "ruby-sweep": {"T_values": list, "lat_size": list, "ell_values": list,
                   "family": str, "lambda_f": float, "rb_factor": float,
                   "omega": float, "dt": float},
    "ruby-pulse": {"lat_size": list, "n_c_values": list, "restarts": int,
                   "omega": float, "rb_factor": float, "maxiter": int},
    "ruby-match": {"lat_size": list, "n_c_values": list, "T_values": list,
                   "restarts": int, "omega": float, "rb_factor": float,
                   "maxiter": int, "dt": float},
    "dtc-sweep": {"T_values": list, "lat_size": list, "orders": list,
                  "K": float, "h_x": float, "h_z": float, "dt": float,
                  "fm_string": int},
    "dtc-pulse": {"lat_size": list, "n_c": int, "y": float, "h_x": float,
                  "h_z": float},
    "dtc-verify-alphas": {"K_values": list, "h_x": float, "h_z": float},
    "twa-sweep": {"T_values": list, "h_x": float, "L": int, "n_samples": int,
                  "lambda_f": float, "dt": float, "r": list},
}


def validate_config(cfg):
    exp = cfg.get("experiment")
    if exp not in EXPERIMENTS:
        raise ConfigInvalid(f"experiment must be one of {EXPERIMENTS}, got {exp!r}")
    schema = _SCHEMAS[exp]
    bad = []
    for key, value in cfg.items():
        if key in ("experiment", "seed", "threads", "outdir"):
            continue
        if key not in schema:
            bad.append(key)
        elif schema[key] in (float, int):
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                bad.append(key)
        elif not isinstance(value, schema[key]):
            bad.append(key)
    if bad:
        raise ConfigInvalid(f"invalid keys for {exp}: {sorted(bad)}")
    for grid in ("T_values", "n_c_values", "ell_values", "K_values", "orders"):
        if grid in schema and not cfg.get(grid, ["nonempty"]):
            raise ConfigInvalid(f"{grid} must be non-empty")
    cfg.setdefault("seed", 0)
    cfg.setdefault("outdir", "results")
    return cfg


def _n_threads(cfg):
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return max(1, int(cfg.get("threads", 1)))


def _run_points(points, worker, n_threads):
    """Map worker over scan points; exceptions become per-point warnings."""
    def wrapped(idx_pt):
        idx, pt = idx_pt
        t0 = time.perf_counter()
        try:
            rows = worker(pt)
            return idx, rows, time.perf_counter() - t0, None
        except Exception as exc:  # scan-point isolation
            return idx, [], time.perf_counter() - t0, f"{pt}: {type(exc).__name__}: {exc}"

    if n_threads == 1:
        outcomes = [wrapped(ip) for ip in enumerate(points)]
    else:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            outcomes = list(pool.map(wrapped, enumerate(points)))
    outcomes.sort(key=lambda o: o[0])
    rows, timings, warnings = [], [], []
    for idx, point_rows, elapsed, warning in outcomes:
        rows.extend(point_rows)
        timings.append({"point": str(points[idx]), "seconds": round(elapsed, 3)})
        if warning:
            warnings.append(warning)
    return rows, timings, warnings


# ---------------------------------------------------------------------------
# experiment drivers: each returns (columns, rows, manifest_extra, plot_fn)

def _exp_qutrit(cfg):
    from lakes.qutrit import QutritParams, sweep
    p = QutritParams(K=0.0, h_x=cfg.get("h_x", 1.0), h_z=cfg.get("h_z", 0.1))
    T_values = cfg.get("T_values", list(np.geomspace(0.03, 300, 25)))
    drives = cfg.get("drives", ["none", "cd1", "exact", "gapped"])
    deltas = cfg.get("delta_values", [0.1 * p.h_x])
    lam = cfg.get("lambda_f", 1.0)
    points = []
    for drive in drives:
        for delta in (deltas if drive == "gapped" else [0.0]):
            for T in T_values:
                points.append((drive, delta, float(T)))

    def worker(pt):
        drive, delta, T = pt
        out = sweep(p, T, drive=drive, delta=delta, lambda_f=lam)
        return [[drive, delta, T, out["target_overlap"], out["ground_overlap"]]]

    cols = ["drive", "delta", "T", "target_overlap", "ground_overlap"]
    return cols, points, worker, {}


def _exp_ruby_sweep(cfg):
    from lakes.ruby import cached_system, cd_sweep, lake_metrics
    lat_size = tuple(cfg.get("lat_size", [2, 2]))
    rb = cfg.get("rb_factor", 1.01)
    lat, basis, sym, ops = cached_system(*lat_size, rb_factor=rb)
    if basis.dim > MAX_BASIS_DIM:
        raise ResourceExceeded(
            f"basis dimension {basis.dim} above {MAX_BASIS_DIM}; use a smaller lattice tier")
    T_values = cfg.get("T_values", list(np.geomspace(0.3, 300, 13)))
    ells = cfg.get("ell_values", [0])
    kwargs = dict(family=cfg.get("family", "full"), omega=cfg.get("omega", 1.0),
                  rb_factor=rb, lambda_f=cfg.get("lambda_f", 1.0))
    if cfg.get("dt"):
        kwargs["dt"] = cfg["dt"]
    points = [(ell, float(T)) for ell in ells for T in T_values]

    def worker(pt):
        ell, T = pt
        out = cd_sweep(lat_size, ell=ell, total_time=T, **kwargs)
        m = lake_metrics(out["state"], ops, lat)
        return [[ell, T, out["rvb_overlap"], out["ground_overlap"], out["n_density"],
                 out["g_avg"], out["w_avg"], out["w_tilde"],
                 m["epsilon"], m["l_lake"], m["l_e"]]]

    cols = ["ell", "T", "rvb_overlap", "ground_overlap", "n_density",
            "g_avg", "w_avg", "w_tilde", "epsilon", "l_lake", "l_e"]
    return cols, points, worker, {"basis_dim": basis.dim, "sym_dim": ops.tag.dim
                                  if hasattr(ops.tag, "dim") else sym.orbit_reps.size}


def _exp_ruby_pulse(cfg):
    from lakes.errors import OptimizerStall
    from lakes.ruby import optimize_pulse_sequence, pulse_run
    lat_size = tuple(cfg.get("lat_size", [2, 2]))
    kwargs = dict(seed=cfg.get("seed", 0), restarts=cfg.get("restarts", 8),
                  omega=cfg.get("omega", 1.0), rb_factor=cfg.get("rb_factor", 1.01),
                  maxiter=cfg.get("maxiter", 600))
    points = [int(n) for n in cfg.get("n_c_values", [1, 2, 3, 4])]

    def worker(n_c):
        try:
            seq, info = optimize_pulse_sequence(lat_size, n_c, **kwargs)
        except OptimizerStall as exc:
            seq, info = exc.best
        out = pulse_run(lat_size, seq, omega=kwargs["omega"], rb_factor=kwargs["rb_factor"])
        row = [n_c, out["total_time"], out["rvb_overlap"], out["n_density"],
               out["g_avg"], out["w_avg"]]
        for c in range(max(points)):
            row.extend(seq.cycles[c] if c < n_c else (np.nan, np.nan))
        return [row]

    cols = ["n_c", "total_time", "rvb_overlap", "n_density", "g_avg", "w_avg"]
    for c in range(max(points)):
        cols += [f"x_{c + 1}", f"y_{c + 1}"]
    return cols, points, worker, {}


def _exp_ruby_match(cfg):
    from lakes.errors import OptimizerStall
    from lakes.ruby import (best_matching_sweep, optimize_pulse_sequence,
                            pulse_run, sweep_library)
    lat_size = tuple(cfg.get("lat_size", [2, 2]))
    omega = cfg.get("omega", 1.0)
    rb = cfg.get("rb_factor", 1.01)
    T_values = cfg.get("T_values", list(np.geomspace(20, 2000, 25)))
    library = sweep_library(lat_size, T_values, omega=omega, dt=cfg.get("dt"),
                            rb_factor=rb)
    kwargs = dict(seed=cfg.get("seed", 0), restarts=cfg.get("restarts", 8),
                  omega=omega, rb_factor=rb, maxiter=cfg.get("maxiter", 600))
    points = [int(n) for n in cfg.get("n_c_values", [2, 3, 4])]

    def worker(n_c):
        try:
            seq, _ = optimize_pulse_sequence(lat_size, n_c, **kwargs)
        except OptimizerStall as exc:
            seq, _ = exc.best
        out = pulse_run(lat_size, seq, omega=omega, rb_factor=rb)
        T_star, match = best_matching_sweep(out["state"], library)
        return [[n_c, out["total_time"], out["rvb_overlap"], T_star, match,
                 T_star / max(out["total_time"], 1e-300)]]

    cols = ["n_c", "total_time", "rvb_overlap", "matched_T", "match_overlap", "speedup"]
    return cols, points, worker, {"library_T": [float(t) for t in T_values]}


def _exp_dtc_sweep(cfg):
    from lakes.dtc import DtcParams, build_dtc_lattice, dtc_cd_sweep
    lat = build_dtc_lattice(*cfg.get("lat_size", [2, 2]))
    p = DtcParams(K=0.0, h_x=cfg.get("h_x", 1.0), h_z=cfg.get("h_z", 0.1))
    T_values = cfg.get("T_values", list(np.geomspace(0.1, 30, 13)))
    orders = cfg.get("orders", [0, 1, 2])
    points = [(o, float(T)) for o in orders for T in T_values]

    def worker(pt):
        order, T = pt
        out = dtc_cd_sweep(lat, p, order=order, total_time=T, dt=cfg.get("dt"),
                           fm_string=cfg.get("fm_string"))
        row = [order, T, out["target_overlap"], out["ground_overlap"],
               out["g_avg"], out["w_avg"]]
        if cfg.get("fm_string"):
            row += [out["x_fm"], out["z_fm"]]
        return [row]

    cols = ["order", "T", "target_overlap", "ground_overlap", "g_avg", "w_avg"]
    if cfg.get("fm_string"):
        cols += ["x_fm", "z_fm"]
    return cols, points, worker, {"n_links": lat.n_links}


def _exp_dtc_pulse(cfg):
    from lakes.dtc import DtcParams, build_dtc_lattice, dtc_pulse_sequence
    lat = build_dtc_lattice(*cfg.get("lat_size", [2, 2]))
    p = DtcParams(K=0.0, h_x=cfg.get("h_x", 1.0), h_z=cfg.get("h_z", 0.0))
    points = [int(cfg.get("n_c", 3))]

    def worker(n_c):
        out = dtc_pulse_sequence(lat, p, n_c=n_c, y=cfg.get("y", -2.17e-2))
        return [[n_c, rec["cycle"], rec["target_overlap"], rec["g_avg"], rec["w_avg"]]
                for rec in out["trajectory"]]

    cols = ["n_c", "cycle", "target_overlap", "g_avg", "w_avg"]
    return cols, points, worker, {"n_links": lat.n_links}


def _exp_dtc_verify(cfg):
    from lakes.dtc import (DtcParams, dtc_alpha1, dtc_alpha1_integral, dtc_alpha2,
                           dtc_lambda_f, fit_alphas_class_action)
    h_x = cfg.get("h_x", 1.0)
    points = [float(K) for K in cfg.get("K_values", [0.0, 1.0, 2.0, 4.0])]

    def worker(K):
        p = DtcParams(K=K * h_x, h_x=h_x, h_z=cfg.get("h_z", 0.1))
        a1_hz, a1 = dtc_alpha1(p)
        f1_hz = fit_alphas_class_action(p, 1, use_hz=True)[0][0]
        f1 = fit_alphas_class_action(p, 1, use_hz=False)[0][0]
        a2 = dtc_alpha2(p)
        f2 = fit_alphas_class_action(p, 2, use_hz=False)[0]
        return [[K, a1_hz, f1_hz, a1, f1, a2[0], f2[0], a2[1], f2[1],
                 max(abs(f1_hz / a1_hz - 1), abs(f1 / a1 - 1)),
                 max(abs(f2[0] / a2[0] - 1), abs(f2[1] / a2[1] - 1))]]

    cols = ["K", "alpha1_hz", "fit1_hz", "alpha1", "fit1", "alpha2_1", "fit2_1",
            "alpha2_2", "fit2_2", "rel_err_order1", "rel_err_order2"]
    extra = {"lambda_f_1": dtc_lambda_f(1, h_x), "lambda_f_2": dtc_lambda_f(2, h_x),
             "alpha1_integral": dtc_alpha1_integral(h_x)}
    return cols, points, worker, extra


def _exp_twa(cfg):
    from lakes.twa import TwaParams, run_twa_sweep, sample_initial_ensemble
    p = TwaParams(h_x=cfg.get("h_x", 1.0), L=cfg.get("L", 10),
                  n_samples=cfg.get("n_samples", 1000), seed=cfg.get("seed", 0))
    dt = cfg.get("dt", 0.05)
    lam = cfg.get("lambda_f", 0.0)
    r = tuple(cfg.get("r", [5, 0]))
    initial = sample_initial_ensemble(p, dt=dt)
    points = [float(T) for T in cfg.get("T_values", [1.0, 10.0, 100.0])]

    def worker(T):
        res = run_twa_sweep(p, [T], lambda_f=lam, dt=dt, r=r, initial=initial)[0]
        return [[T, res["order_a"].real, res["order_a"].imag, res["se_a"].real,
                 res["order_b"].real, res["order_b"].imag, res["se_b"].real]]

    cols = ["T", "re_order_a", "im_order_a", "se_a", "re_order_b", "im_order_b", "se_b"]
    return cols, points, worker, {"n_samples": p.n_samples, "L": p.L}


_DRIVERS = {
    "qutrit-sweep": _exp_qutrit,
    "ruby-sweep": _exp_ruby_sweep,
    "ruby-pulse": _exp_ruby_pulse,
    "ruby-match": _exp_ruby_match,
    "dtc-sweep": _exp_dtc_sweep,
    "dtc-pulse": _exp_dtc_pulse,
    "dtc-verify-alphas": _exp_dtc_verify,
    "twa-sweep": _exp_twa,
}


def _write_plot(outdir, cols, rows):
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return "matplotlib unavailable; plot skipped"
    if "T" not in cols or len(rows) < 2:
        return None
    it = cols.index("T")
    ys = [c for c in cols if c not in ("T", "drive") and rows[0][cols.index(c)] is not None]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for name in ys[:4]:
        iy = cols.index(name)
        try:
            vals = [(float(r[it]), float(r[iy])) for r in rows]
        except (TypeError, ValueError):
            continue
        vals.sort()
        ax.plot([v[0] for v in vals], [v[1] for v in vals], marker=".", label=name)
    ax.set_xscale("log")
    ax.set_xlabel("T")
    ax.legend(fontsize=7)
    fig.tight_layout()
    (outdir / "plots").mkdir(exist_ok=True)
    fig.savefig(outdir / "plots" / "overview.svg")
    plt.close(fig)
    return None


def run(cfg):
    digest = config_hash(cfg)
    outdir = Path(cfg["outdir"]) / cfg["experiment"] / digest
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = {"config": cfg, "config_hash": digest, "code_version": __version__,
                "status": "running", "started": time.strftime("%Y-%m-%dT%H:%M:%S")}
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2))
    cols, points, worker, extra = _DRIVERS[cfg["experiment"]](cfg)
    rows, timings, warnings = _run_points(points, worker, _n_threads(cfg))
    with open(outdir / "results.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        writer.writerows([[_fmt(v) for v in row] for row in rows])
    plot_warning = _write_plot(outdir, cols, rows)
    if plot_warning:
        warnings.append(plot_warning)
    manifest.update(extra)
    manifest.update(status="done", wall_clock=timings, warnings=warnings,
                    finished=time.strftime("%Y-%m-%dT%H:%M:%S"))
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2, default=str))
    print(f"{cfg['experiment']}: {len(rows)} rows -> {outdir / 'results.csv'}")
    for warning in warnings:
        print(f"warning: {warning}", file=sys.stderr)
    return outdir


def verify(tier):
    """Run the fast acceptance subset for the tier; prints pass/fail lines."""
    if tier not in ("ci", "full"):
        raise ConfigInvalid(f"unknown tier {tier!r}; expected 'ci' or 'full'")
    checks = []

    def check(name, fn):
        checks.append((name, fn))

    from lakes.qutrit import QutritParams, sweep_curve

    def qutrit_check():
        p = QutritParams(K=0.0)
        T = np.geomspace(0.1, 100, 13)
        undriven = sweep_curve(p, T)
        peak = T[int(np.argmax(undriven))]
        cd1 = sweep_curve(p, T[T <= 1.0], drive="cd1")
        return 3.0 <= peak <= 30.0 and np.all(cd1 >= undriven[T <= 1.0] - 1e-12)

    check("qutrit sweep structure", qutrit_check)

    def ruby_check(size):
        from lakes.linalg import ground_state
        from lakes.ruby import cached_system, gauss_projector_apply, rvb_state
        _, basis, sym, ops = cached_system(*size)
        _, psi0 = ground_state(ops.hamiltonian(-5.0, 1.0))
        rvb = rvb_state(ops)
        proj = gauss_projector_apply(psi0, ops)
        deficit = 1.0 - abs(np.vdot(rvb.amplitudes, proj.amplitudes))
        bound = 1e-9 if size == (2, 2) else 1e-10
        dims_ok = (size != (2, 3)) or sym.orbit_reps.size == 11438
        return dims_ok and deficit <= bound

    check("ruby projection (2,2)", lambda: ruby_check((2, 2)))

    def dtc_check():
        from lakes.dtc import (DtcParams, dtc_alpha1, dtc_alpha2, dtc_lambda_f,
                               fit_alphas_class_action)
        ok = abs(dtc_lambda_f(1) - 1.315) < 1e-3 and abs(dtc_lambda_f(2) - 1.304) < 1e-3
        for K in (0.0, 1.0, 2.0, 4.0):
            p = DtcParams(K=K, h_x=1.0, h_z=0.1)
            a2 = np.array(dtc_alpha2(p))
            f2 = fit_alphas_class_action(p, 2)[0]
            f1 = fit_alphas_class_action(p, 1)[0][0]
            ok = ok and np.all(np.abs(f2 / a2 - 1) < 1e-8)
            ok = ok and abs(f1 / dtc_alpha1(p)[1] - 1) < 1e-8
        return ok

    check("dtc analytic coefficients", dtc_check)

    if tier == "full":
        check("ruby projection (2,3)", lambda: ruby_check((2, 3)))

        def twa_check():
            from lakes.twa import TwaParams, condensed_limits, run_twa_sweep
            p = TwaParams(n_samples=100_000, seed=0)
            lim_a, _ = condensed_limits(p)
            und = run_twa_sweep(p, [1.0], lambda_f=0.0)[0]
            drv = run_twa_sweep(p, [1.0], lambda_f=1.0)[0]
            return abs(drv["order_a"]) <= 0.5 * abs(und["order_a"]) and \
                abs(und["order_a"]) > 0.1 * lim_a

        check("twa driven quench", twa_check)

    failed = 0
    for name, fn in checks:
        try:
            ok = bool(fn())
        except Exception as exc:
            ok = False
            print(f"FAIL {name}: {type(exc).__name__}: {exc}")
            failed += 1
            continue
        print(f"{'PASS' if ok else 'FAIL'} {name}")
        failed += 0 if ok else 1
    return failed


def main(argv=None):
    parser = argparse.ArgumentParser(prog="lakes",
                                     description="state-preparation experiment runner")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute an experiment config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config value (JSON-parsed)")
    p_ver = sub.add_parser("verify", help="run the fast acceptance subset")
    p_ver.add_argument("--tier", default="ci")
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            run(load_config(args.config, args.set))
            return 0
        failed = verify(args.tier)
        return 4 if failed else 0
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ResourceExceeded as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return 3
    except LakesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
