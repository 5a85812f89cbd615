"""Batch command-line interface for the full pipeline.

Every subcommand reads an optional YAML config file (section named after
the command, dashes replaced by underscores) plus overriding flags; flags
always win. The schema is validated before any compute and unknown keys
are rejected. Exit codes: 0 success, 1 runtime failure, 2 configuration
or schema violation.

Model references take the form ``gt:mr``, ``gt:laminate``, or
``pann:<path-to-model-file>``; ground-truth parameters default to the
standard values and can be overridden in the config's ``mr``/``laminate``
sub-sections.
"""

import argparse
import sys

import numpy as np
import yaml

from . import __version__
from .calibration import CalibrationConfig, calibrate, evaluate_mse, usable_records
from .core import MaterialState
from .datasets import SamplingPlan, build_dataset, read_dataset, sample_states, write_dataset
from .errors import ConfigError, EepannError, ParseError
from .gauss_path import trace_path, write_path
from .ground_truth import HomogenizedLaminate, LaminateParams, MooneyRivlin, MooneyRivlinParams
from .invariants import ConvexityMode, Isotropic, TransverselyIsotropic
from .legendre import free_energy, solve_d0
from .pann import PannModel, load_pann, save_pann
from .stability import SphericalGrid, ellipticity_scan, moduli_scan, write_scan

_MR_KEYS = {"mu1": float, "mu2": float, "lam": float, "eps": float}
_LAMINATE_KEYS = {**_MR_KEYS, "f_m": float, "f_e": float, "c_a": float, "normal": list}
_PLAN_KEYS = {
    "n_dirs": int,
    "n_amps": int,
    "n_d0_amps": int,
    "amp_max": float,
    "d0_max": float,
    "seed": int,
}
_GRID_KEYS = {"n_theta": int, "n_psi": int}

_SCHEMA = {
    "gen_data": {
        "ground_truth": str,
        "mr": _MR_KEYS,
        "laminate": _LAMINATE_KEYS,
        "plan": _PLAN_KEYS,
        "check_ellipticity": bool,
        "grid": _GRID_KEYS,
        "mu_ref": float,
        "eps_ref": float,
        "out": str,
    },
    "calibrate": {
        "data": str,
        "test_data": str,
        "symmetry": str,
        "normal": list,
        "mode": str,
        "hidden": int,
        "epochs": int,
        "learning_rate": float,
        "restarts": int,
        "seed": int,
        "batch": int,
        "out_model": str,
        "out_report": str,
    },
    "evaluate": {"model": str, "data": str, "mr": _MR_KEYS, "laminate": _LAMINATE_KEYS},
    "path": {
        "model": str,
        "mr": _MR_KEYS,
        "laminate": _LAMINATE_KEYS,
        "e0_max": float,
        "steps": int,
        "out": str,
    },
    "ellipticity": {
        "model": str,
        "mr": _MR_KEYS,
        "laminate": _LAMINATE_KEYS,
        "state_f": list,
        "state_d0": list,
        "grid": _GRID_KEYS,
        "out": str,
    },
    "moduli": {
        "model": str,
        "mr": _MR_KEYS,
        "laminate": _LAMINATE_KEYS,
        "state_f": list,
        "state_d0": list,
        "grid": _GRID_KEYS,
        "out": str,
    },
    "legendre_check": {
        "model": str,
        "mr": _MR_KEYS,
        "laminate": _LAMINATE_KEYS,
        "state_f": list,
        "e0": list,
    },
    "fem": {
        "model": str,
        "mr": _MR_KEYS,
        "laminate": _LAMINATE_KEYS,
        "mesh": {"nx": int, "ny": int, "nz": int, "lx": float, "ly": float, "lz": float, "order": int},
        "mesh_file": str,
        "fix_u": list,
        "potential": list,
        "body_force": list,
        "surface_charge": list,
        "schedule": list,
        "steps": int,
        "out_prefix": str,
    },
}


def _validate(section, schema, prefix=""):
    if section is None:
        return {}
    if not isinstance(section, dict):
        raise ConfigError(f"config section {prefix or '<root>'} must be a mapping")
    out = {}
    for key, value in section.items():
        if key not in schema:
            raise ConfigError(f"unknown config key {prefix + key!r}")
        spec = schema[key]
        if isinstance(spec, dict):
            out[key] = _validate(value, spec, prefix=f"{prefix}{key}.")
        elif spec in (float, int) and isinstance(value, (int, float)) and not isinstance(value, bool):
            out[key] = spec(value)
        elif not isinstance(value, spec):
            raise ConfigError(f"config key {prefix + key!r} must be {spec.__name__}")
        else:
            out[key] = value
    return out


def _load_config(path, command):
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh) or {}
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file is not valid YAML: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    section = command.replace("-", "_")
    for key in raw:
        if key not in _SCHEMA:
            raise ConfigError(f"unknown config section {key!r}")
    return _validate(raw.get(section), _SCHEMA[section], prefix=f"{section}.")


def _mr_params(cfg):
    return MooneyRivlinParams(**cfg.get("mr", {}))


def _laminate_params(cfg):
    kw = dict(cfg.get("laminate", {}))
    phase = MooneyRivlinParams(
        **{k: kw.pop(k) for k in ("mu1", "mu2", "lam", "eps") if k in kw}
    )
    return LaminateParams(phase_a=phase, **kw)


def _resolve_model(ref, cfg):
    if ref is None:
        raise ConfigError("no model given (use --model or the config)")
    if ref == "gt:mr":
        return MooneyRivlin(_mr_params(cfg))
    if ref == "gt:laminate":
        return HomogenizedLaminate(_laminate_params(cfg))
    if ref.startswith("pann:"):
        return PannModel(load_pann(ref[5:]))
    raise ConfigError(f"unknown model reference {ref!r} (gt:mr, gt:laminate, pann:<file>)")


def _floats(text):
    return np.array([float(t) for t in str(text).replace(",", " ").split()])


def _state_from(cfg, args):
    F = np.eye(3)
    d0 = np.zeros(3)
    if cfg.get("state_f") is not None:
        F = np.array(cfg["state_f"], dtype=float).reshape(3, 3)
    if cfg.get("state_d0") is not None:
        d0 = np.array(cfg["state_d0"], dtype=float)
    if getattr(args, "f", None):
        F = _floats(args.f).reshape(3, 3)
    if getattr(args, "d0", None):
        d0 = _floats(args.d0)
    return MaterialState(F, d0)


def _grid_from(cfg):
    g = cfg.get("grid", {})
    return SphericalGrid(g.get("n_theta", 64), g.get("n_psi", 32))


# --- subcommands ----------------------------------------------------------


def _cmd_gen_data(args):
    cfg = _load_config(args.config, "gen-data")
    plan_cfg = dict(cfg.get("plan", {}))
    if args.plan:
        n = [int(t) for t in args.plan.split(",")]
        plan_cfg.update(n_dirs=n[0], n_amps=n[1], n_d0_amps=n[2])
    for flag, key in (("amp_max", "amp_max"), ("d0_max", "d0_max"), ("seed", "seed")):
        if getattr(args, flag, None) is not None:
            plan_cfg[key] = getattr(args, flag)
    plan = SamplingPlan(**plan_cfg)

    gt = args.gt or cfg.get("ground_truth", "mr")
    model = _resolve_model(f"gt:{gt}" if not gt.startswith(("gt:", "pann:")) else gt, cfg)
    check = cfg.get("check_ellipticity", False) if args.check_ellipticity is None else args.check_ellipticity
    out = args.out or cfg.get("out")
    if out is None:
        raise ConfigError("no output path (use --out or gen_data.out)")
    states = sample_states(plan)
    records = build_dataset(
        states,
        model,
        check_ellipticity=check,
        grid=_grid_from(cfg),
        mu_ref=cfg.get("mu_ref", 1.0),
        eps_ref=cfg.get("eps_ref", 1.0),
    )
    write_dataset(out, records, plan, cfg.get("mu_ref", 1.0), cfg.get("eps_ref", 1.0))
    n_bad = sum(1 for r in records if r.elliptic is False)
    print(f"wrote {len(records)} records to {out}" + (f" ({n_bad} non-elliptic)" if check else ""))
    return 0


def _symmetry_from(cfg, args):
    name = args.symmetry or cfg.get("symmetry", "isotropic")
    if name == "isotropic":
        return Isotropic()
    if name == "transversely_isotropic":
        normal = cfg.get("normal")
        if args.normal:
            normal = _floats(args.normal)
        if normal is None:
            raise ConfigError("transversely_isotropic requires 'normal'")
        return TransverselyIsotropic(np.asarray(normal, dtype=float))
    raise ConfigError(f"unknown symmetry {name!r}")


def _cmd_calibrate(args):
    cfg = _load_config(args.config, "calibrate")
    data_path = args.data or cfg.get("data")
    test_path = args.test_data or cfg.get("test_data")
    if not data_path or not test_path:
        raise ConfigError("calibrate needs 'data' and 'test_data'")
    records, _ = read_dataset(data_path)
    test_records, _ = read_dataset(test_path)
    sym = _symmetry_from(cfg, args)
    mode = ConvexityMode(args.mode or cfg.get("mode", "polyconvex"))
    hidden = args.hidden if args.hidden is not None else cfg.get("hidden", 8)
    ccfg = CalibrationConfig(
        epochs=args.epochs if args.epochs is not None else cfg.get("epochs", 2000),
        learning_rate=args.lr if args.lr is not None else cfg.get("learning_rate", 2e-3),
        restarts=args.restarts if args.restarts is not None else cfg.get("restarts", 3),
        seed=args.seed if args.seed is not None else cfg.get("seed", 0),
        batch=args.batch if args.batch is not None else cfg.get("batch"),
    )
    report = calibrate(records, test_records, sym, mode, hidden, ccfg, workers=args.workers)
    print(report.table())
    out_model = args.out_model or cfg.get("out_model")
    if out_model:
        save_pann(out_model, report.best.params)
        print(f"wrote best model to {out_model}")
    out_report = args.out_report or cfg.get("out_report")
    if out_report:
        with open(out_report, "w", encoding="utf-8") as fh:
            fh.write("# eereport-v1\n")
            fh.write(report.table() + "\n")
            fh.write(f"best {report.best_index}\n")
        print(f"wrote report to {out_report}")
    return 0


def _cmd_evaluate(args):
    cfg = _load_config(args.config, "evaluate")
    model_ref = args.model or cfg.get("model")
    data_path = args.data or cfg.get("data")
    if not data_path:
        raise ConfigError("evaluate needs 'data'")
    if not (model_ref or "").startswith("pann:"):
        raise ConfigError("evaluate needs a calibrated model reference pann:<file>")
    params = load_pann(model_ref[5:])
    records, _ = read_dataset(data_path)
    mse = evaluate_mse(params, records)
    kept = len(usable_records(records))
    print(f"records {kept}  MSE {mse:.8e}  log10(MSE) {np.log10(mse):.4f}")
    return 0


def _cmd_path(args):
    cfg = _load_config(args.config, "path")
    model = _resolve_model(args.model or cfg.get("model"), cfg)
    e0_max = args.e0_max if args.e0_max is not None else cfg.get("e0_max", np.sqrt(0.5))
    steps = args.steps if args.steps is not None else cfg.get("steps", 50)
    states = trace_path(model, e0_max, steps)
    out = args.out or cfg.get("out")
    if out:
        write_path(out, states)
        print(f"wrote {len(states)} path rows to {out}")
    else:
        print("# e0_mag F11 F33 p d0_z")
        for s in states:
            print(f"{s.e0_mag:.8g} {s.F11:.8g} {s.F33:.8g} {s.p:.8g} {s.d0[2]:.8g}")
    return 0


def _cmd_ellipticity(args):
    cfg = _load_config(args.config, "ellipticity")
    model = _resolve_model(args.model or cfg.get("model"), cfg)
    grid = _grid_from(cfg)
    out = args.out or cfg.get("out")
    if args.data:
        records, _ = read_dataset(args.data)
        bad = 0
        for r in records:
            res = ellipticity_scan(model, MaterialState(r.F, r.d0), grid)
            bad += not res.elliptic
        print(f"records {len(records)}  non-elliptic {bad} ({bad / len(records):.2%})")
        return 0
    state = _state_from(cfg, args)
    if out:
        write_scan(out, model, state, grid)
        print(f"wrote scan to {out}")
    res = ellipticity_scan(model, state, grid)
    print(
        f"min_eigenvalue {res.min_eigenvalue:.8e}  least_minor {res.min_least_minor:.8e}  "
        f"elliptic {res.elliptic}  argmin theta={res.argmin_node[0]:.4f} psi={res.argmin_node[1]:.4f}"
    )
    return 0


def _cmd_moduli(args):
    cfg = _load_config(args.config, "moduli")
    model = _resolve_model(args.model or cfg.get("model"), cfg)
    state = _state_from(cfg, args)
    grid = _grid_from(cfg)
    out = args.out or cfg.get("out")
    if out:
        write_scan(out, model, state, grid)
        print(f"wrote scan to {out}")
        return 0
    nodes, mu, q, theta = moduli_scan(model, state, grid)
    print(f"mu_t    min {mu.min():.6g}  max {mu.max():.6g}")
    print(f"q_t     min {q.min():.6g}  max {q.max():.6g}")
    print(f"theta_t min {theta.min():.6g}  max {theta.max():.6g}")
    return 0


def _cmd_legendre_check(args):
    cfg = _load_config(args.config, "legendre-check")
    model = _resolve_model(args.model or cfg.get("model"), cfg)
    F = np.eye(3)
    if cfg.get("state_f") is not None:
        F = np.array(cfg["state_f"], dtype=float).reshape(3, 3)
    if args.f:
        F = _floats(args.f).reshape(3, 3)
    e0 = np.zeros(3)
    if cfg.get("e0") is not None:
        e0 = np.array(cfg["e0"], dtype=float)
    if args.e0:
        e0 = _floats(args.e0)
    fe = free_energy(model, F, e0)
    internal = model.energy(MaterialState(F, fe.d0), order=1)
    duality = abs(fe.psi + fe.d0 @ e0 - internal.e)
    back = solve_d0(model, F, internal.e0, guess=None)
    print(f"psi {fe.psi:.12g}  d0 {fe.d0}")
    print(f"duality |psi + d0.e0 - e| = {duality:.3e}")
    print(f"round-trip |d0 - solve(e0(d0))| = {np.max(np.abs(back - fe.d0)):.3e}")
    return 0


def _cmd_fem(args):
    from .fem import BoundaryConditions, FemSolver, box_mesh, load_stepping, read_mesh, write_solution

    cfg = _load_config(args.config, "fem")
    model = _resolve_model(args.model or cfg.get("model"), cfg)
    if cfg.get("mesh_file"):
        mesh = read_mesh(cfg["mesh_file"])
    else:
        m = cfg.get("mesh", {})
        mesh = box_mesh(
            m.get("nx", 1), m.get("ny", 1), m.get("nz", 1),
            m.get("lx", 1.0), m.get("ly", 1.0), m.get("lz", 1.0),
            m.get("order", 2),
        )
    bcs = BoundaryConditions(
        dirichlet_u=[
            (d["set"], comp, d.get("value", 0.0))
            for d in cfg.get("fix_u", [])
            for comp in d.get("comps", [0, 1, 2])
        ],
        dirichlet_phi=[(d["set"], d["value"]) for d in cfg.get("potential", [])],
        body_force=None if cfg.get("body_force") is None else np.array(cfg["body_force"]),
        surface_charge=[(d["set"], d["value"]) for d in cfg.get("surface_charge", [])],
    )
    solver = FemSolver(mesh, bcs, model)
    schedule = cfg.get("schedule")
    if schedule is None:
        steps = args.steps if args.steps is not None else cfg.get("steps", 5)
        schedule = list(np.linspace(0.0, 1.0, steps + 1))
    snapshots = load_stepping(solver, schedule)
    prefix = args.out_prefix or cfg.get("out_prefix", "fem")
    for k, (lam, fields, history) in enumerate(snapshots):
        path = f"{prefix}_step{k:03d}.txt"
        write_solution(path, solver, fields, lam)
        print(f"lambda {lam:.4f}: {len(history)} Newton its, wrote {path}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="eepann",
        description="Electro-elastic PANN constitutive pipeline (batch, non-interactive).",
    )
    p.add_argument("--version", action="version", version=f"eepann {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="YAML config file")
        sp.add_argument("--workers", type=int, default=1, help="worker count (default 1, deterministic)")

    sp = sub.add_parser("gen-data", help="sample load states and write a dataset")
    common(sp)
    sp.add_argument("--gt", help="ground truth: mr or laminate")
    sp.add_argument("--plan", help="counts n_dirs,n_amps,n_d0_amps")
    sp.add_argument("--amp-max", dest="amp_max", type=float)
    sp.add_argument("--d0-max", dest="d0_max", type=float)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out")
    sp.add_argument("--check-ellipticity", dest="check_ellipticity", action="store_true", default=None)
    sp.set_defaults(func=_cmd_gen_data)

    sp = sub.add_parser("calibrate", help="calibrate a model on a dataset")
    common(sp)
    sp.add_argument("--data")
    sp.add_argument("--test-data", dest="test_data")
    sp.add_argument("--symmetry", choices=["isotropic", "transversely_isotropic"])
    sp.add_argument("--normal")
    sp.add_argument("--mode", choices=["polyconvex", "unconstrained"])
    sp.add_argument("--hidden", type=int)
    sp.add_argument("--epochs", type=int)
    sp.add_argument("--lr", type=float)
    sp.add_argument("--restarts", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--batch", type=int)
    sp.add_argument("--out-model", dest="out_model")
    sp.add_argument("--out-report", dest="out_report")
    sp.set_defaults(func=_cmd_calibrate)

    sp = sub.add_parser("evaluate", help="print log10(MSE) of a model on a dataset")
    common(sp)
    sp.add_argument("--model")
    sp.add_argument("--data")
    sp.set_defaults(func=_cmd_evaluate)

    sp = sub.add_parser("path", help="trace the Gauss-point actuation curve")
    common(sp)
    sp.add_argument("--model")
    sp.add_argument("--e0-max", dest="e0_max", type=float)
    sp.add_argument("--steps", type=int)
    sp.add_argument("--out")
    sp.set_defaults(func=_cmd_path)

    sp = sub.add_parser("ellipticity", help="acoustic-tensor scan of a state or dataset")
    common(sp)
    sp.add_argument("--model")
    sp.add_argument("--data", help="scan every record of a dataset")
    sp.add_argument("--f", help="9 floats, row-major F")
    sp.add_argument("--d0", help="3 floats")
    sp.add_argument("--out")
    sp.set_defaults(func=_cmd_ellipticity)

    sp = sub.add_parser("moduli", help="spherical moduli probes at a state")
    common(sp)
    sp.add_argument("--model")
    sp.add_argument("--f")
    sp.add_argument("--d0")
    sp.add_argument("--out")
    sp.set_defaults(func=_cmd_moduli)

    sp = sub.add_parser("legendre-check", help="duality and round-trip diagnostics")
    common(sp)
    sp.add_argument("--model")
    sp.add_argument("--f")
    sp.add_argument("--e0")
    sp.set_defaults(func=_cmd_legendre_check)

    sp = sub.add_parser("fem", help="coupled finite element simulation")
    common(sp)
    sp.add_argument("--model")
    sp.add_argument("--steps", type=int)
    sp.add_argument("--out-prefix", dest="out_prefix")
    sp.set_defaults(func=_cmd_fem)

    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ParseError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except EepannError as exc:
        print(f"error [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error [io]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
