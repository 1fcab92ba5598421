"""Config parsing, manifests, report emission and the command-line interface.

Config grammar: plain text, one ``key = value`` per line, ``#`` comments,
unknown keys rejected.  Every key matches a :class:`~.solver.RunConfig`
field.  A manifest is itself a valid config file (the resolved settings)
with run metadata in leading comment lines, so replaying a manifest
reproduces the run.

Subcommands: ``simulate``, ``classify``, ``sweep``, ``verify``.
Exit codes: 0 ok, 1 usage/config error, 2 numerical failure, 3 invariant
violation.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields as dc_fields

import numpy as np

from . import __version__, exponents
from .integrators import NumericalFailure
from .solver import Model, RunConfig, run
from . import scenarios

__all__ = ["parse_config", "manifest_text", "emit_reports", "sweep", "main", "ConfigError"]

FLOAT_FMT = "%.17e"


class ConfigError(ValueError):
    pass


def _to_bool(s):
    if isinstance(s, bool):
        return s
    low = str(s).strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _to_k(s):
    if isinstance(s, (int, float)):
        return float(s)
    low = str(s).strip().lower()
    if low in ("inf", "infinity", "huge"):
        return np.inf
    return float(s)


def _to_moll(s):
    if isinstance(s, (int, float)):
        return float(s)
    low = str(s).strip().lower()
    if low == "auto":
        return -1.0
    return float(s)


def _to_optional_float(s):
    if s is None or (isinstance(s, str) and s.strip().lower() in ("auto", "none")):
        return None
    return float(s)


def _to_ladder(s):
    if isinstance(s, (tuple, list)):
        return tuple(float(v) for v in s)
    return tuple(float(v) for v in str(s).split(",") if v.strip())


_CONVERTERS = {
    "scenario": str,
    "nu_profile": str,
    "kappa_profile": str,
    "integrator": str,
    "n": int,
    "m": int,
    "grid_factor": int,
    "d": int,
    "n_samples": int,
    "seed": int,
    "moll_fine": int,
    "fields_stride": int,
    "include_mean": _to_bool,
    "pressure": _to_bool,
    "k": _to_k,
    "moll_radius": _to_moll,
    "blob_x0": _to_optional_float,
    "m_ladder": _to_ladder,
}
_KNOWN_KEYS = {f.name for f in dc_fields(RunConfig)}


def _convert(key, value):
    if key not in _KNOWN_KEYS:
        raise ConfigError(f"unknown config key {key!r}")
    conv = _CONVERTERS.get(key, float)
    try:
        return conv(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key!r}: {value!r} ({exc})") from exc


def read_config_file(path):
    """Key/value pairs from a flat config file; raises with line numbers."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key in out:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            if key not in _KNOWN_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
            out[key] = value
    return out


def parse_config(path=None, overrides=None) -> RunConfig:
    """Resolve a run config from (scenario defaults) < (file) < (overrides)."""
    raw = {}
    if path:
        raw.update(read_config_file(path))
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        raw[key] = value
    scenario = str(raw.get("scenario", "steady"))
    merged = dict(scenarios.scenario_defaults(scenario, raw))
    merged.update(raw)
    merged["scenario"] = scenario
    typed = {k: _convert(k, v) for k, v in merged.items()}
    try:
        return RunConfig(**typed)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def _format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if np.isinf(v):
            return "inf"
        return FLOAT_FMT % v
    if isinstance(v, (tuple, list)):
        return ",".join(FLOAT_FMT % float(x) for x in v)
    if v is None:
        return "auto"
    return str(v)


def manifest_text(config: RunConfig, meta=None):
    """Resolved config as a replayable flat file, metadata as comments."""
    lines = [f"# thermoflow manifest (version {__version__})"]
    for key, value in (meta or {}).items():
        lines.append(f"# {key}: {value}")
    for f in dc_fields(RunConfig):
        lines.append(f"{f.name} = {_format_value(getattr(config, f.name))}")
    return "\n".join(lines) + "\n"


def _write_csv(path, header, columns):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        n = len(columns[header[0]])
        for i in range(n):
            fh.write(",".join(FLOAT_FMT % float(columns[k][i]) for k in header) + "\n")


def emit_reports(traj, report, out_dir, *, force=False, config=None):
    """Write manifest, diagnostics.csv, field dumps and the summary file."""
    config = config or traj.model.config
    if os.path.exists(out_dir):
        if not force and os.listdir(out_dir):
            raise ConfigError(f"output directory {out_dir!r} is not empty (use --force)")
    else:
        os.makedirs(out_dir)

    model = traj.model
    meta = {
        "tool_version": __version__,
        "grid_nx": model.grid.nx,
        "grid_ny": model.grid.ny,
        "velocity_modes": model.nc,
        "temperature_modes": model.nd,
        "threads": os.environ.get("OMP_NUM_THREADS", "unset"),
        "steps": traj.stats.get("steps"),
        "rejected_steps": traj.stats.get("rejected"),
        "wall_seconds": traj.stats.get("wall_seconds"),
    }
    with open(os.path.join(out_dir, "manifest"), "w", encoding="utf-8") as fh:
        fh.write(manifest_text(config, meta))

    _write_csv(os.path.join(out_dir, "diagnostics.csv"), report.column_order, report.columns)

    g = model.grid
    xx, yy = np.meshgrid(g.x, g.y, indexing="ij")
    stride = max(1, config.fields_stride)
    for i in range(0, len(traj), stride):
        c, d, _ = traj.coefficients(i)
        u, v = model.vel.velocity(c)
        theta = model.temp.values(d)
        cols = {
            "x": xx.ravel(),
            "y": yy.ravel(),
            "u": u.ravel(),
            "v": v.ravel(),
            "theta": theta.ravel(),
        }
        header = ["x", "y", "u", "v", "theta"]
        if config.pressure:
            from .pressure import reconstruct_pressure

            cols["pi"] = reconstruct_pressure(model, c, d).values.ravel()
            header.append("pi")
        _write_csv(os.path.join(out_dir, f"fields_{traj.times[i]:.6f}.csv"), header, cols)

    with open(os.path.join(out_dir, "summary"), "w", encoding="utf-8") as fh:
        for key, value in summary_scalars(traj, report).items():
            fh.write(f"{key} = {_format_value(value)}\n")
    return out_dir


def summary_scalars(traj, report):
    """Flat scalar summary of one run."""
    model = traj.model
    cfg = model.config
    cls = exponents.classify(cfg.p, cfg.d)
    cols = report.columns
    out = {
        "scenario": cfg.scenario,
        "p": cfg.p,
        "n": cfg.n,
        "m": cfg.m,
        "k": cfg.k,
        "alpha": cfg.alpha,
        "t_end": cfg.t_end,
        "E0": report.meta["E0"],
        "E_end": float(cols["E_total"][-1]),
        "max_energy_residual_rel": report.max_energy_residual(),
        "max_kinetic_residual": float(np.abs(cols["kinetic_residual"]).max()),
        "max_entropy_defect": float(np.abs(cols["entropy_defect"]).max()),
        "min_theta": float(cols["min_theta"].min()),
        "max_theta": float(cols["max_theta"].max()),
        "max_speed_sq": float(cols["max_speed_sq"].max()),
        "max_conv_orthogonality": float(np.abs(cols["conv_orthogonality"]).max()),
        "max_transport_orthogonality": float(np.abs(cols["transport_orthogonality"]).max()),
        "max_buoyancy_cancellation": float(np.abs(cols["buoyancy_cancellation"]).max()),
        "max_div": float(cols["div_max"].max()),
        "admissible": cls.admissible,
        "energy_equality": "n/a" if cls.energy_equality is None else cls.energy_equality,
        "suitable": "n/a" if cls.suitable is None else cls.suitable,
        "internal_energy_equality": "n/a"
        if cls.internal_energy_equality is None
        else cls.internal_energy_equality,
    }
    if "pressure_weak_residual" in cols:
        out["max_pressure_weak_residual"] = float(np.abs(cols["pressure_weak_residual"]).max())
    return out


# -- sweeps --------------------------------------------------------------------


def _sweep_one(args):
    index, base_dict, updates = args
    raw = dict(base_dict)
    raw.update(updates)
    try:
        cfg = parse_config(None, raw)
        traj, report = run(cfg)
        row = {"index": index, "status": "ok"}
        row.update({k: v for k, v in updates.items()})
        row.update(summary_scalars(traj, report))
        return row
    except Exception as exc:  # isolate per-run failures
        row = {"index": index, "status": f"failed: {exc}"}
        row.update({k: v for k, v in updates.items()})
        return row


def sweep(base: dict, vary: dict, jobs: int = 1):
    """Cross-product parameter sweep; returns one summary row per run."""
    keys = list(vary.keys())
    grids = [list(vary[k]) for k in keys]
    combos = [[]]
    for g in grids:
        combos = [c + [v] for c in combos for v in g]
    tasks = [
        (i, base, {k: v for k, v in zip(keys, combo)}) for i, combo in enumerate(combos)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_sweep_one, tasks))
    else:
        rows = [_sweep_one(t) for t in tasks]
    return rows


# -- verify --------------------------------------------------------------------


def run_verification(verbose=True):
    """Fast invariant suite; returns the number of failed checks."""
    from . import constitutive, truncation
    from .pressure import reconstruct_pressure, weak_identity_residual
    from .solver import prepare_initial_data

    failures = 0

    def check(name, ok, detail=""):
        nonlocal failures
        if not ok:
            failures += 1
        if verbose:
            print(f"[{'PASS' if ok else 'FAIL'}] {name} {detail}")

    lad = [
        (1.19, (False, False, False, False)),
        (1.61, (True, True, False, False)),
        (1.81, (True, True, True, False)),
        (2.2, (True, True, True, True)),
    ]
    ok = all(exponents.classify(p).flags() == f for p, f in lad)
    check("exponent ladder", ok)

    for p in (1.5, 2.0, 3.0):
        params = constitutive.ConstitutiveParams(p=p)
        rep = constitutive.verify_assumptions(params, 10_000, rng_seed=7)
        check(f"constitutive assumptions p={p}", rep.ok, f"worst={rep.worst_monotonicity:.1e}")

    zs = np.linspace(-3, 3, 997)
    h = 1e-5
    dt_num = (truncation.t_cut_primitive(zs + h, 1.3) - truncation.t_cut_primitive(zs - h, 1.3)) / (2 * h)
    check("t_cut primitive derivative", np.abs(dt_num - truncation.t_cut(zs, 1.3)).max() < 1e-8)
    zp = np.linspace(0, 4, 997)
    dg_num = (truncation.g_cut_primitive(zp + h, 1.3) - truncation.g_cut_primitive(np.maximum(zp - h, 0), 1.3)) / (
        h + np.minimum(zp, h)
    )
    check("g_cut primitive derivative", np.abs(dg_num - truncation.g_cut(zp, 1.3)).max() < 1e-6)

    cfg = RunConfig(scenario="steady", n=6, m=6)
    model = Model(cfg)
    check("velocity Gram identity", model.vel.gram_deviation < 1e-10, f"{model.vel.gram_deviation:.1e}")
    check("temperature Gram identity", model.temp.gram_deviation < 1e-10, f"{model.temp.gram_deviation:.1e}")
    rng = np.random.default_rng(11)
    c = rng.normal(size=model.nc)
    check("divergence-free basis", np.abs(model.vel.divergence(c)).max() < 1e-10)

    s0 = prepare_initial_data(cfg, model)
    check("steady state", np.abs(model.rhs(0.0, s0.pack())).max() < 1e-10)

    worst = 0.0
    for trial in range(10):
        c = rng.normal(size=model.nc) * 0.5
        d = rng.normal(size=model.nd) * 0.5
        theta_max = model.temp.values(d).max()
        sp_max = max((np.sum(np.square(model.vel.velocity(c)), axis=0)).max(), 1.0)
        model.k = 2.0 * max(theta_max, sp_max, 1.0)
        sums = model.structural_sums(c, d)
        worst = max(worst, max(abs(s) for s in sums))
    model.k = float(cfg.k)
    check("structural orthogonality", worst < 1e-10, f"worst={worst:.1e}")

    hcfg = RunConfig(scenario="steady", n=6, m=12, fx=0.0, fy=-1.0)
    hmodel = Model(hcfg)
    c0 = np.zeros(hmodel.nc)
    d0 = np.zeros(hmodel.nd)
    d0[0] = np.sqrt(hmodel.domain.Lx)
    pf = reconstruct_pressure(hmodel, c0, d0)
    exact = 0.5 - hmodel.grid.y[None, :]
    check("hydrostatic pressure", np.abs(pf.values - exact).max() < 1e-10)
    check("pressure weak identity", weak_identity_residual(pf, hmodel, c0, d0) < 1e-8)
    return failures


# -- CLI -----------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_override_args(sp):
    sp.add_argument("--config", help="flat key = value config file")
    sp.add_argument("--scenario", help="preset name")
    sp.add_argument("--n", help="velocity modes per direction")
    sp.add_argument("--m", help="temperature modes per direction")
    sp.add_argument("--k", help="truncation level (number or 'inf')")
    sp.add_argument("--p", help="growth exponent")
    sp.add_argument("--alpha", help="slip coefficient")
    sp.add_argument("--dt", help="fixed step (0 = adaptive)")
    sp.add_argument("--t-end", dest="t_end", help="final time")
    sp.add_argument("--grid", dest="grid_factor", help="oversampling factor")
    sp.add_argument("--seed", help="rng seed")
    sp.add_argument("--pressure", action="store_true", default=None, help="reconstruct pressure")
    sp.add_argument(
        "--set",
        dest="extra",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="set any other config key",
    )


def _collect_overrides(args):
    out = {}
    for key in ("config",):
        pass
    for key in (
        "scenario",
        "n",
        "m",
        "k",
        "p",
        "alpha",
        "dt",
        "t_end",
        "grid_factor",
        "seed",
    ):
        val = getattr(args, key, None)
        if val is not None:
            out[key] = val
    if getattr(args, "pressure", None):
        out["pressure"] = True
    for item in getattr(args, "extra", []):
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, _, value = item.partition("=")
        out[key.strip()] = value.strip()
    return out


def _cmd_simulate(args):
    cfg = parse_config(args.config, _collect_overrides(args))
    traj, report = run(cfg)
    if args.out:
        emit_reports(traj, report, args.out, force=args.force, config=cfg)
        print(f"wrote {args.out}")
    for key, value in summary_scalars(traj, report).items():
        print(f"{key} = {_format_value(value)}")
    return 0


def _cmd_classify(args):
    p = float(args.p)
    d = int(args.d)
    cls = exponents.classify(p, d)
    print(f"p = {p:g}, d = {d}")
    rows = [
        ("admissible (p > 2d/(d+2))", cls.admissible),
        ("energy equality (p > 8/5)", cls.energy_equality),
        ("suitable (p > 9/5)", cls.suitable),
        ("internal-energy equality (p >= 11/5)", cls.internal_energy_equality),
    ]
    for name, flag in rows:
        mark = "n/a" if flag is None else ("yes" if flag else "no")
        print(f"  {name:40s} {mark}")
    if cls.admissible and d == 3 and p > 6.0 / 5.0:
        print(f"  pressure exponent z' = {exponents.pressure_exponent(p):.6f}")
    return 0


def _cmd_sweep(args):
    base = {}
    if args.config:
        base.update(read_config_file(args.config))
    base.update(_collect_overrides(args))
    vary = {}
    for item in args.vary or []:
        if "=" not in item:
            raise ConfigError(f"--vary expects KEY=V1,V2,..., got {item!r}")
        key, _, values = item.partition("=")
        vary[key.strip()] = [v.strip() for v in values.split(",") if v.strip()]
    if not vary:
        raise ConfigError("sweep needs at least one --vary KEY=V1,V2")
    rows = sweep(base, vary, jobs=args.jobs)
    keys = sorted({k for row in rows for k in row}, key=lambda k: (k != "index", k))
    print("\t".join(keys))
    for row in rows:
        print("\t".join(_format_value(row.get(k, "")) for k in keys))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "sweep.csv"), "w", encoding="utf-8") as fh:
            fh.write(",".join(keys) + "\n")
            for row in rows:
                fh.write(",".join(str(_format_value(row.get(k, ""))) for k in keys) + "\n")
    bad = [r for r in rows if r.get("status") != "ok"]
    return 0 if not bad else 2


def _cmd_verify(args):
    failures = run_verification(verbose=True)
    if failures:
        print(f"{failures} invariant check(s) failed")
        return 3
    print("all invariant checks passed")
    return 0


def main(argv=None):
    parser = _Parser(prog="thermoflow", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="integrate one configured run")
    _add_override_args(sp)
    sp.add_argument("--out", help="output directory")
    sp.add_argument("--force", action="store_true", help="overwrite existing output")
    sp.set_defaults(func=_cmd_simulate)

    sp = sub.add_parser("classify", help="regularity ladder at a growth exponent")
    sp.add_argument("--p", required=True)
    sp.add_argument("--d", default="3")
    sp.set_defaults(func=_cmd_classify)

    sp = sub.add_parser("sweep", help="cross-product parameter sweep")
    _add_override_args(sp)
    sp.add_argument("--vary", action="append", metavar="KEY=V1,V2", help="values to sweep")
    sp.add_argument("--out", help="output directory for sweep.csv")
    sp.add_argument("--jobs", type=int, default=1, help="parallel workers")
    sp.set_defaults(func=_cmd_sweep)

    sp = sub.add_parser("verify", help="run the invariant self-checks")
    sp.set_defaults(func=_cmd_verify)

    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except NumericalFailure as exc:
        print(f"numerical failure: {exc} {exc.diagnostics}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
