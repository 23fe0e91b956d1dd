"""Scenario-driven command line front end.

Subcommands: simulate | classify | fates | catalog.
Exit codes: 0 success, 2 config error, 3 solver error,
4 classification inconclusive, 5 excessive sample failures.

Configs are JSON; complex entries are [re, im] pairs.  Every run writes
the fully resolved config (defaults included) next to its results, and
re-running that config reproduces the results bit for bit.
"""

from __future__ import annotations

import argparse
import copy
import json
import sys
from pathlib import Path

import numpy as np

from .asymptotics import (
    asymptotic_set_nonautonomous,
    catalog_generator,
    classify_theorem_class,
    membership_residual,
    representative,
    stationary_set_autonomous,
)
from .dynamics import ConstantRate, ExponentialRate, SolverOptions, make_generator, propagate
from .errors import (
    BadParams,
    EntfateError,
    HorizonTooShort,
    Inconclusive,
    NotConverged,
    OscillatoryAsymptotics,
    PositivityLost,
    StepFailure,
)
from .fate import FateRecord, detect_fate, fate_statistics, margin_curve
from .states import EnsembleSpec, new_state, sample, trace_distance

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_INCONCLUSIVE = 4
EXIT_FAILURES = 5

_RUN_DEFAULTS = {
    "horizon": 30.0,
    "grid_points": 400,
    "n_samples": 100,
    "seed": None,
    "workers": 1,
    "rtol": 1e-9,
    "atol": 1e-12,
    "class_tol": 1e-7,
    "fate_tol": 1e-7,
    "refine_tol": 1e-6,
    "kernel_tol": 1e-9,
    "convergence_tol": 1e-8,
    "classify_horizon": 60.0,
    "n_probes": 50,
}
_ENSEMBLE_DEFAULTS = {"kind": "hilbert_schmidt_mixed", "seed": 0, "target_concurrence": 0.0}
_OUTPUT_DEFAULTS = {"directory": ".", "formats": ["csv", "json"]}


class ConfigError(Exception):
    pass


def _fmt(x) -> str:
    return "" if x is None else format(float(x), ".17g")


def parse_complex_matrix(entries, field: str) -> np.ndarray:
    try:
        arr = np.array(
            [[complex(e[0], e[1]) for e in row] for row in entries], dtype=complex
        )
    except (TypeError, IndexError, ValueError) as exc:
        raise ConfigError(f"{field}: expected a matrix of [re, im] pairs ({exc})")
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ConfigError(f"{field}: matrix must be square, got shape {arr.shape}")
    return arr


def matrix_to_pairs(m: np.ndarray):
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    return cfg


def resolve_config(cfg: dict, args) -> dict:
    resolved = copy.deepcopy(cfg)
    resolved["schema_version"] = SCHEMA_VERSION
    run = dict(_RUN_DEFAULTS)
    run.update(resolved.get("run", {}))
    if args is not None and getattr(args, "seed", None) is not None:
        run["seed"] = args.seed
    if args is not None and getattr(args, "workers", None) is not None:
        run["workers"] = args.workers
    resolved["run"] = run
    ens = dict(_ENSEMBLE_DEFAULTS)
    ens.update(resolved.get("ensemble", {}))
    resolved["ensemble"] = ens
    out = dict(_OUTPUT_DEFAULTS)
    out.update(resolved.get("output", {}))
    if args is not None and getattr(args, "out", None) is not None:
        out["directory"] = args.out
    resolved["output"] = out
    if not isinstance(run["horizon"], (int, float)) or run["horizon"] <= 0:
        raise ConfigError(f"run.horizon must be positive, got {run['horizon']}")
    if int(run["grid_points"]) < 2:
        raise ConfigError(f"run.grid_points must be >= 2, got {run['grid_points']}")
    if int(run["n_samples"]) < 1:
        raise ConfigError(f"run.n_samples must be >= 1, got {run['n_samples']}")
    return resolved


def build_rate(desc, field: str):
    if isinstance(desc, (int, float)):
        return ConstantRate(float(desc))
    if not isinstance(desc, dict) or "kind" not in desc:
        raise ConfigError(f"{field}: rate must be a number or an object with 'kind'")
    if desc["kind"] == "constant":
        return ConstantRate(float(desc["value"]))
    if desc["kind"] == "exponential":
        return ExponentialRate(float(desc["amplitude"]), float(desc.get("tau", 1.0)))
    raise ConfigError(f"{field}: unknown rate kind {desc['kind']!r}")


def build_generator(cfg: dict):
    gcfg = cfg.get("generator")
    if not isinstance(gcfg, dict):
        raise ConfigError("config needs a 'generator' object")
    if "catalog" in gcfg:
        cat = gcfg["catalog"]
        class_id = cat.get("class_id")
        if class_id not in (1, 2, 3, 4, 5, 6):
            raise ConfigError(f"generator.catalog.class_id must be 1..6, got {class_id}")
        params = cat.get("params", {})
        try:
            return catalog_generator(class_id, **params)
        except (BadParams, TypeError) as exc:
            raise ConfigError(f"generator.catalog: {exc}")
    if "explicit" in gcfg:
        ex = gcfg["explicit"]
        dims = tuple(ex.get("dims", [2, 2]))
        ham = None
        if ex.get("hamiltonian") is not None:
            ham = parse_complex_matrix(ex["hamiltonian"], "generator.explicit.hamiltonian")
        jumps = []
        for i, j in enumerate(ex.get("jumps", [])):
            op = parse_complex_matrix(j["operator"], f"generator.explicit.jumps[{i}].operator")
            jumps.append((op, build_rate(j.get("rate", 1.0), f"generator.explicit.jumps[{i}].rate")))
        try:
            return make_generator(dims, hamiltonian=ham, jumps=jumps)
        except ValueError as exc:
            raise ConfigError(f"generator.explicit: {exc}")
    raise ConfigError("generator must contain 'catalog' or 'explicit'")


def build_ensemble(resolved: dict) -> EnsembleSpec:
    ens = resolved["ensemble"]
    try:
        return EnsembleSpec(
            kind=ens["kind"],
            seed=int(ens["seed"]),
            target_concurrence=float(ens["target_concurrence"]),
        )
    except (EntfateError, ValueError, KeyError) as exc:
        raise ConfigError(f"ensemble: {exc}")


def solver_options(run: dict) -> SolverOptions:
    return SolverOptions(rtol=float(run["rtol"]), atol=float(run["atol"]))


def _write_json(path: Path, payload: dict) -> None:
    payload = {"schema_version": SCHEMA_VERSION, **payload}
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_resolved(outdir: Path, resolved: dict) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "resolved_config.json").write_text(
        json.dumps(resolved, indent=2, sort_keys=True) + "\n"
    )


def _classify_from_config(g, run, seed):
    if g.autonomous:
        aset = stationary_set_autonomous(g, tol=float(run["kernel_tol"]))
    else:
        aset = asymptotic_set_nonautonomous(
            g,
            horizon=float(run["classify_horizon"]),
            tol=float(run["convergence_tol"]),
            opts=solver_options(run),
            seed=seed,
        )
    cls = classify_theorem_class(
        aset,
        tol=float(run["class_tol"]),
        n_probes=int(run["n_probes"]),
        seed=seed,
        opts=solver_options(run),
    )
    return aset, cls


def _initial_state(cfg: dict, resolved: dict, g):
    init = cfg.get("initial_state")
    if init is not None:
        m = parse_complex_matrix(init["matrix"], "initial_state.matrix")
        try:
            return new_state(m, *g.dims)
        except EntfateError as exc:
            raise ConfigError(f"initial_state: {exc}")
    spec = build_ensemble(resolved)
    run = resolved["run"]
    if run["seed"] is not None:
        spec = EnsembleSpec(
            kind=spec.kind, seed=int(run["seed"]), target_concurrence=spec.target_concurrence
        )
    return sample(spec, g.dims)


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    resolved = resolve_config(cfg, args)
    run = resolved["run"]
    g = build_generator(resolved)
    rho0 = _initial_state(cfg, resolved, g)
    outdir = Path(resolved["output"]["directory"])
    _write_resolved(outdir, resolved)
    opts = solver_options(run)
    grid = np.linspace(0.0, float(run["horizon"]), int(run["grid_points"]) + 1)
    traj = propagate(g, rho0, grid, opts)
    curve = margin_curve(traj)
    record = detect_fate(
        g,
        rho0,
        float(run["horizon"]),
        grid_points=int(run["grid_points"]),
        refine_tol=float(run["refine_tol"]),
        tol=float(run["fate_tol"]),
        opts=opts,
    )
    dist_to_a = None
    try:
        aset, _ = _classify_from_config(g, run, int(run["seed"] or 0))
        if aset.cardinality == "one":
            rep = representative(aset, opts)
            dist_to_a = [trace_distance(s, rep) for s in traj.states]
        else:
            dist_to_a = [membership_residual(aset, s) for s in traj.states]
    except EntfateError:
        pass
    header = "t,margin,concurrence"
    if dist_to_a is not None:
        header += ",trace_distance_to_A"
    lines = [header]
    for i, (t, m, c) in enumerate(curve):
        row = f"{_fmt(t)},{_fmt(m)},{_fmt(c)}"
        if dist_to_a is not None:
            row += f",{_fmt(dist_to_a[i])}"
        lines.append(row)
    (outdir / "trajectory.csv").write_text("\n".join(lines) + "\n")
    _write_json(outdir / "summary.json", {"fate": _record_payload(record)})
    print(f"fate {record.fate_tag}")
    return EXIT_OK


def _record_payload(r: FateRecord) -> dict:
    return {
        "initial_concurrence": r.initial_concurrence,
        "death_time": r.death_time,
        "birth_time": r.birth_time,
        "revival_times": list(r.revival_times),
        "final_margin": r.final_margin,
        "fate_tag": r.fate_tag,
    }


def cmd_classify(args) -> int:
    cfg = load_config(args.config)
    resolved = resolve_config(cfg, args)
    run = resolved["run"]
    g = build_generator(resolved)
    outdir = Path(resolved["output"]["directory"])
    _write_resolved(outdir, resolved)
    try:
        aset, cls = _classify_from_config(g, run, int(run["seed"] or 0))
    except (Inconclusive, OscillatoryAsymptotics, NotConverged) as exc:
        _write_json(
            outdir / "classification.json",
            {"error": type(exc).__name__, "reason": str(exc)},
        )
        print(f"classification failed: {type(exc).__name__}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    diagnostics = {
        k: (v if not isinstance(v, np.ndarray) else v.tolist())
        for k, v in aset.diagnostics.items()
    }
    _write_json(
        outdir / "classification.json",
        {
            "class_id": cls.class_id,
            "cardinality": cls.cardinality,
            "representation": aset.kind,
            "evidence": {
                "min_margin": cls.min_margin,
                "max_margin": cls.max_margin,
                "min_probe": cls.min_probe,
                "max_probe": cls.max_probe,
                "tol": cls.tol,
                "probes": [[label, m] for label, m in cls.probes],
            },
            "diagnostics": diagnostics,
        },
    )
    print(f"class {cls.class_id}")
    return EXIT_OK


def cmd_fates(args) -> int:
    cfg = load_config(args.config)
    resolved = resolve_config(cfg, args)
    run = resolved["run"]
    g = build_generator(resolved)
    spec = build_ensemble(resolved)
    outdir = Path(resolved["output"]["directory"])
    _write_resolved(outdir, resolved)
    seed = int(run["seed"]) if run["seed"] is not None else spec.seed
    stats, records = fate_statistics(
        g,
        spec,
        n=int(run["n_samples"]),
        horizon=float(run["horizon"]),
        seed=seed,
        grid_points=int(run["grid_points"]),
        refine_tol=float(run["refine_tol"]),
        tol=float(run["fate_tol"]),
        opts=solver_options(run),
        workers=int(run["workers"]),
    )
    lines = ["seed_index,initial_concurrence,fate_tag,death_time,final_margin"]
    for i, rec in enumerate(records):
        if isinstance(rec, FateRecord):
            lines.append(
                f"{i},{_fmt(rec.initial_concurrence)},{rec.fate_tag},"
                f"{_fmt(rec.death_time)},{_fmt(rec.final_margin)}"
            )
    (outdir / "fates.csv").write_text("\n".join(lines) + "\n")
    _write_json(
        outdir / "fates_summary.json",
        {
            "ensemble": {
                "kind": spec.kind,
                "seed": seed,
                "target_concurrence": spec.target_concurrence,
            },
            "horizon": stats.horizon,
            "n": stats.n,
            "counts": stats.counts,
            "fractions": stats.fractions,
            "intervals": {k: list(v) for k, v in stats.intervals.items()},
            "failures": stats.failures,
            "failure_reasons": stats.failure_reasons,
            "exemplars": stats.exemplars,
        },
    )
    ok = stats.n - stats.failures
    print(f"fates: {ok}/{stats.n} samples succeeded")
    return EXIT_OK if ok >= 0.9 * stats.n else EXIT_FAILURES


_CATALOG_NOTES = {
    1: ("constant depolarizing toward I/4", {"gamma": 1.0}),
    2: ("independent amplitude damping on both qubits", {"gamma": 1.0}),
    3: ("pumping into the Bell state Phi+", {"gamma": 1.0}),
    4: ("quenched depolarizing, rate c*exp(-t); needs c >= ln 3 + 0.5 (~1.5986)", {"c": 2.0}),
    5: ("computational-basis dephasing on both qubits", {"gamma": 1.0}),
    6: ("quenched Bell pumping, rate c*exp(-t), c large", {"c": 10.0}),
}


def cmd_catalog(args) -> int:
    outdir = Path(args.out) if args.out else Path(".")
    outdir.mkdir(parents=True, exist_ok=True)
    for class_id, (desc, params) in _CATALOG_NOTES.items():
        g = catalog_generator(class_id, **params)
        kind = "autonomous" if g.autonomous else "non-autonomous"
        print(f"class {class_id}: {desc} [{kind}, params {params}]")
        config = {
            "schema_version": SCHEMA_VERSION,
            "generator": {"catalog": {"class_id": class_id, "params": params}},
            "ensemble": dict(_ENSEMBLE_DEFAULTS),
            "run": {"horizon": 30.0, "grid_points": 400, "n_samples": 100, "seed": 0},
            "output": {"directory": f"class_{class_id}", "formats": ["csv", "json"]},
        }
        path = outdir / f"catalog_class_{class_id}.json"
        path.write_text(json.dumps(config, indent=2, sort_keys=True) + "\n")
    print(f"wrote 6 config files to {outdir}")
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="entfate",
        description="Two-qubit open-system entanglement-fate simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, needs_config in (
        ("simulate", cmd_simulate, True),
        ("classify", cmd_classify, True),
        ("fates", cmd_fates, True),
        ("catalog", cmd_catalog, False),
    ):
        p = sub.add_parser(name)
        if needs_config:
            p.add_argument("--config", required=True, help="path to a JSON scenario config")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--seed", type=int, help="seed override")
        p.add_argument("--workers", type=int, help="parallel workers for ensembles")
        p.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PositivityLost, StepFailure, HorizonTooShort) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
