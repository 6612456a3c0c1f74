"""Experiment harness: every pipeline as a subcommand.

Each run takes a JSON config (validated against the published schema),
writes a machine-readable ``report.json`` plus plot-ready CSV curves into
the output directory, and exits 0 on success, 2 on config errors, 3 on
budget failures (partial artifacts are flagged in the report).

Determinism contract: identical (config, seed) produce byte-identical
artifacts; the config hash and the effective seed are embedded in every
report.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from ._backend import backend_name
from ._quadrature import QuadratureBudgetError, quad_err
from .hgeom import UHPoint
from . import fuchsian, modsurf, qvar, traceform, transforms, wpbound

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BUDGET = 3


class ConfigError(ValueError):
    pass


def _schema() -> dict:
    text = resources.files("specsurf.data").joinpath("config_schema.json").read_text()
    return json.loads(text)


def _validate_config(cfg: dict, command: str) -> None:
    import jsonschema

    schema = _schema()
    try:
        jsonschema.validate(cfg, schema["definitions"]["envelope"])
        sub = dict(schema["definitions"][command.replace("-", "_")])
        sub["definitions"] = schema["definitions"]  # keep $ref targets resolvable
        jsonschema.validate(cfg.get("params", {}), sub)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config field {path}: {exc.message}") from None
    # semantic guards the schema cannot express
    params = cfg.get("params", {})
    iv = params.get("interval")
    if iv is not None and iv[0] <= 0.25 + 1e-12:
        raise ConfigError("config field params/interval: must stay above 1/4")


def _config_hash(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _write_report(outdir: Path, payload: dict) -> None:
    text = json.dumps(_jsonable(payload), sort_keys=True, indent=1)
    (outdir / "report.json").write_text(text + "\n")


def _write_csv(outdir: Path, name: str, header: list, rows) -> None:
    with open(outdir / name, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])


def _get_model(cfg: dict) -> fuchsian.FuchsianGroup:
    name = cfg.get("model", "modular")
    if name == "modular":
        return fuchsian.modular_group()
    if name == "punctured-torus":
        return fuchsian.punctured_torus_group()
    return fuchsian.load_model(name)


def _get_observable(params: dict) -> qvar.Observable:
    spec = params["observable"]
    if spec["type"] == "core":
        return qvar.Observable.core_indicator(spec["Y"], spec.get("height", 1.0))
    if spec["type"] == "bump":
        c = spec["center"]
        return qvar.Observable.bump(UHPoint(c[0], c[1]), spec["radius"], spec.get("height", 1.0))
    raise ConfigError(f"unknown observable type {spec['type']!r}")


# ---------------------------------------------------------------------
# subcommand implementations
# ---------------------------------------------------------------------

def _run_transform(cfg, outdir, seed):
    p = cfg.get("params", {})
    family = p.get("family", "heat")
    t = p.get("t", 1.0)
    if family == "heat":
        triple = transforms.heat_triple(t)
    elif family == "gaussian":
        triple = transforms.gaussian_h_triple()
    elif family == "window":
        iv = transforms.SpectralInterval(*p["interval"])
        triple = transforms.monk_window(iv, t, build_kernel=True)
    else:
        raise ConfigError(f"unknown family {family!r}")
    r_max = p.get("r_max", 20.0)
    n_r = p.get("n_r", 81)
    h2 = transforms.selberg_forward(triple.k)
    rs = np.linspace(0.0, r_max, n_r)
    rows = []
    sup = 0.0
    for r in rs:
        h_val = float(np.real(complex(triple.h(float(r)))))
        h_rt = h2(float(r))
        rows.append((float(r), h_val, h_rt, h_rt - h_val))
        sup = max(sup, abs(h_rt - h_val))
    _write_csv(outdir, "roundtrip.csv", ["r", "h", "h_roundtrip", "diff"], rows)
    ok, diag = transforms.admissibility_check(triple)
    report = {"roundtrip_sup_error": sup, "admissible": ok, "admissibility": diag,
              "kernel_error_estimate": triple.err_estimate, "g0": float(triple.g(0.0))}
    if family == "window":
        iv_ = triple.meta["interval"]
        report["g0_expected"] = 2.0 * (iv_.beta - iv_.alpha) / math.pi
    return report


def _run_geodesics(cfg, outdir, seed):
    p = cfg.get("params", {})
    model = _get_model(cfg)
    l_max = p.get("l_max", 6.0)
    depth = p.get("depth", 10)
    sys_len = fuchsian.systole(model, depth)
    spectrum, complete = fuchsian.length_spectrum(model, l_max)
    _write_csv(outdir, "length_spectrum.csv",
               ["length", "trace", "multiplicity", "word"],
               [(e.length, e.trace, e.multiplicity, e.representative_word) for e in spectrum])
    return {"systole": sys_len, "classes": sum(e.multiplicity for e in spectrum),
            "distinct_lengths": len(spectrum), "complete": complete, "l_max": l_max}


def _run_thin_part(cfg, outdir, seed):
    p = cfg.get("params", {})
    model = _get_model(cfg)
    rows = []
    for R in p["R_values"]:
        frac, se = fuchsian.thin_part_fraction(model, R, p.get("n_samples", 2000), seed=seed)
        rows.append((R, frac, se))
    _write_csv(outdir, "thin_part.csv", ["R", "fraction", "std_error"], rows)
    return {"curve": rows}


def _run_spectral_action(cfg, outdir, seed):
    p = cfg.get("params", {})
    iv = transforms.SpectralInterval(*p.get("interval", [0.5, 1.0]))
    T = p.get("T", 20.0)
    n = p.get("n_grid", 50)
    rs = np.sqrt(np.linspace(iv.a, iv.b, n) - 0.25)
    vals, err = transforms.spectral_action_average(T, rs, with_error=True)
    vals2 = transforms.spectral_action_average(2.0 * T, rs)
    _write_csv(outdir, "spectral_action.csv", ["r", "avg_T", "avg_2T"],
               list(zip(rs.tolist(), vals.tolist(), vals2.tolist())))
    rel = float(np.max(np.abs(vals2 - vals) / np.maximum(vals, 1e-300)))
    return {"min_over_grid": float(np.min(vals)), "T": T, "quad_error": err,
            "max_rel_change_T_2T": rel}


def _run_maass_selberg(cfg, outdir, seed):
    p = cfg.get("params", {})
    rows = []
    worst = 0.0
    for r in p.get("r_values", [1.0, 2.0, 5.0]):
        for Y in p.get("Y_values", [3.0, 5.0]):
            rep = modsurf.maass_selberg_check(r, Y)
            rows.append((r, Y, rep.lhs, rep.rhs, rep.residual))
            worst = max(worst, abs(rep.residual))
    _write_csv(outdir, "maass_selberg.csv", ["r", "Y", "lhs", "rhs", "residual"], rows)
    return {"worst_residual": worst, "n_checks": len(rows)}


def _run_trace(cfg, outdir, seed):
    p = cfg.get("params", {})
    triple = transforms.heat_triple(p.get("t", 1.0), build_kernel=False)
    rep = traceform.trace_residual(triple, l_max=p.get("l_max", 10.0),
                                   n_eigenvalues=p.get("n_eigenvalues"))
    _write_csv(outdir, "trace_terms.csv", ["term", "value"],
               [("spectral_side", rep.spectral_side), ("identity", rep.identity_term),
                ("hyperbolic", rep.hyperbolic_term), ("elliptic", rep.elliptic_term),
                ("parabolic_phi_half", rep.parabolic_terms[0]),
                ("parabolic_log2", rep.parabolic_terms[1]),
                ("parabolic_digamma", rep.parabolic_terms[2]),
                ("residual", rep.residual)])
    out = json.loads(rep.to_json())
    if not rep.ok:
        raise QuadratureBudgetError("trace residual above combined budget",
                                    rep.residual, rep.budget_total)
    return out


def _run_weyl(cfg, outdir, seed):
    p = cfg.get("params", {})
    rows = []
    reports = []
    for a, b in p["intervals"]:
        iv = transforms.SpectralInterval(a, b)
        rep = traceform.weyl_count(iv)
        rows.append((a, b, rep.n_discrete, rep.m_continuous, rep.main_term, rep.remainder))
        reports.append(json.loads(rep.to_json()))
    _write_csv(outdir, "weyl.csv", ["a", "b", "N", "M", "main_term", "remainder"], rows)
    return {"intervals": reports}


def _run_variance(cfg, outdir, seed):
    p = cfg.get("params", {})
    a = _get_observable(p)
    iv = transforms.SpectralInterval(*p["interval"])
    rep = qvar.quantum_mean_abs_dev(a, iv, n_r=p.get("n_r", 12))
    _write_csv(outdir, "variance_integrand.csv", ["r", "integrand"], rep.integrand_samples)
    out = json.loads(rep.to_json())
    if rep.budget_total > 0.05 * abs(rep.total):
        raise QuadratureBudgetError("variance error budget above 5 percent",
                                    rep.total, rep.budget_total)
    return out


def _run_ergodic_decay(cfg, outdir, seed):
    p = cfg.get("params", {})
    a = _get_observable(p)
    b = qvar.mean_zero_reduce(a, p.get("Y", max(3.0, a.support_height)))
    rep = qvar.ergodic_decay(b, p.get("t_values", [2.0, 4.0, 6.0]),
                             p.get("n_samples", 200), separation=p.get("separation", 1.0),
                             seed=seed)
    _write_csv(outdir, "ergodic_decay.csv", ["t", "set_measure", "deviation"],
               list(zip(rep.t_values, rep.set_measures, rep.deviations)))
    return json.loads(rep.to_json())


def _run_systole_prob(cfg, outdir, seed):
    p = cfg.get("params", {})
    table = wpbound.load_volume_table(p.get("table"))
    curve, expo = wpbound.epsilon_scaling_curve(p["g"], p["k"], p["eps_values"], table)
    _write_csv(outdir, "systole_prob.csv", ["eps", "bound"], curve)
    return {"curve": curve, "fitted_exponent": expo, "g": p["g"], "k": p["k"]}


_COMMANDS = {
    "transform": _run_transform,
    "geodesics": _run_geodesics,
    "thin-part": _run_thin_part,
    "spectral-action": _run_spectral_action,
    "maass-selberg": _run_maass_selberg,
    "trace": _run_trace,
    "weyl": _run_weyl,
    "variance": _run_variance,
    "ergodic-decay": _run_ergodic_decay,
    "systole-prob": _run_systole_prob,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="specsurf",
        description="spectral-geometry experiment harness (hyperbolic surfaces)")
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", required=True, help="JSON config path")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override config seed")
    parser.add_argument("--workers", type=int, default=0,
                        help="cap on parallel worker threads (0 = library default)")
    args = parser.parse_args(argv)

    try:
        cfg = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        _validate_config(cfg, args.command)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.workers > 0:
        try:
            import numba

            numba.set_num_threads(max(1, args.workers))
        except Exception:
            pass

    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    payload = {
        "command": args.command,
        "config_hash": _config_hash(cfg),
        "seed": seed,
        "backend": backend_name(),
        "ok": True,
    }
    try:
        payload["result"] = _COMMANDS[args.command](cfg, outdir, seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (QuadratureBudgetError, fuchsian.SearchBudgetError,
            wpbound.MissingVolumeError) as exc:
        payload["ok"] = False
        payload["failure"] = str(exc)
        _write_report(outdir, payload)
        print(f"budget failure: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    _write_report(outdir, payload)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
