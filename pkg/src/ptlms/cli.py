"""
Command-line front end.

    ptlms simulate --config sparse_speedup.yaml --out results/
    ptlms theory   --config mu_sweep.yaml --out results/
    ptlms sweep    --config mu_sweep.yaml --mu 0.002,0.004,0.008 --out results/

Exit status: 0 success, 1 usage or configuration error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, harness, theory
from .filters import DivergenceError
from .io import (ConfigError, experiment_config, fmt, load_config, parse_mu_list,
                 resolve_config, write_curve_csv, write_sweep_csv)

log = logging.getLogger("ptlms")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ptlms", description="Proportionate-type LMS simulation and theory.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_ in (("simulate", "ensemble learning curves, one CSV per rule"),
                        ("theory", "predicted bounds, steady state and transient"),
                        ("sweep", "simulated vs predicted steady state over step sizes")):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", required=True, help="flat YAML config, or a manifest JSON")
        s.add_argument("--seed", type=int, help="override the master seed")
        s.add_argument("--runs", type=int, help="override n_runs")
        s.add_argument("--out", default=".", help="output directory (default: .)")
        s.add_argument("--rule", help="run only this rule")
        if name == "sweep":
            s.add_argument("--mu", help="comma-separated step sizes (default: mu_values)")
    return p


def _resolve(args) -> dict:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.runs is not None:
        cfg["n_runs"] = args.runs
    if args.rule is not None:
        cfg["rules"] = [args.rule]
    if getattr(args, "mu", None) is not None:
        cfg["mu_values"] = parse_mu_list(args.mu)
    return resolve_config(cfg)


def _w_opt(cfg) -> np.ndarray:
    return harness.generate_sparse_system(cfg["L"], cfg["n_active"], cfg["system_seed"])


def _write_manifest(out: Path, command: str, cfg: dict, outputs, started) -> Path:
    manifest = {
        "command": command,
        "artifact_version": __version__,
        "seed": cfg["seed"],
        "config": cfg,
        "started": started,
        "finished": _now(),
        "outputs": [str(p) for p in outputs],
    }
    path = out / f"manifest_{command}.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def cmd_simulate(cfg: dict, out: Path) -> list[Path]:
    w_opt = _w_opt(cfg)
    curves = {}
    for name in cfg["rules"]:
        curves[name] = harness.run_ensemble(experiment_config(cfg, name), w_opt)
    out.mkdir(parents=True, exist_ok=True)
    return [write_curve_csv(out / f"curve_{name}.csv", c.msd_db) for name, c in curves.items()]


def _check_theory_size(cfg):
    if cfg["L"] > cfg["theory_max_L"]:
        raise ConfigError(f"L: {cfg['L']} exceeds the theory size cap theory_max_L="
                          f"{cfg['theory_max_L']}; use 'simulate' for systems this large")


def theory_report(cfg: dict, name: str) -> tuple[dict, np.ndarray | None]:
    exp = experiment_config(cfg, name)
    w_opt = _w_opt(cfg)
    model = harness.theory_model(exp, w_opt, max_L=cfg["theory_max_L"])
    ms = theory.ms_stability_range(model)
    rho_f = theory.f_spectral_radius(model)
    stable = rho_f < 1.0
    report = {
        "rule": name,
        "L": cfg["L"],
        "mu": exp.mu,
        "mean_bound": theory.mean_stability_bound(model),
        "mean_bound_eig": theory.mean_stability_bound(model, sharp=True),
        "ms_bound": ms.mu_max,
        "ms_bound_cd": ms.cd_bound,
        "ms_bound_h": ms.h_bound,
        "f_spectral_radius": rho_f,
        "stable": stable,
    }
    curve = None
    if stable:
        msd = theory.steady_state_msd(model)
        report["steady_state_msd"] = msd
        report["steady_state_msd_db"] = theory.to_normalized_db(msd, w_opt)
        curve = theory.to_normalized_db(theory.transient_curve(model, w_opt, exp.n_iters), w_opt)
    else:
        report["steady_state_msd"] = "unstable"
        report["steady_state_msd_db"] = "unstable"
    return report, curve


def _format_report(report: dict) -> str:
    lines = []
    for key, value in report.items():
        if isinstance(value, bool):
            value = "true" if value else "false"
        elif isinstance(value, float):
            value = "inf" if math.isinf(value) else fmt(value)
        lines.append(f"{key}: {value}")
    return "\n".join(lines) + "\n"


def cmd_theory(cfg: dict, out: Path) -> list[Path]:
    _check_theory_size(cfg)
    results = [(name, *theory_report(cfg, name)) for name in cfg["rules"]]
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, report, curve in results:
        if curve is not None:
            p = write_curve_csv(out / f"theory_curve_{name}.csv", curve)
            report["transient_curve"] = p.name
            paths.append(p)
        else:
            report["transient_curve"] = "none"
        p = out / f"theory_{name}.txt"
        p.write_text(_format_report(report))
        paths.append(p)
    return paths


def cmd_sweep(cfg: dict, out: Path) -> list[Path]:
    _check_theory_size(cfg)
    if not cfg["mu_values"]:
        raise ConfigError("mu: no step sizes given (use --mu or mu_values)")
    w_opt = _w_opt(cfg)
    tables = {}
    for name in cfg["rules"]:
        tables[name] = harness.sweep_mu(experiment_config(cfg, name), cfg["mu_values"], w_opt,
                                        tail_fraction=cfg["tail_fraction"],
                                        n_iters_mu_product=cfg["n_iters_mu_product"],
                                        max_L=cfg["theory_max_L"])
    out.mkdir(parents=True, exist_ok=True)
    return [write_sweep_csv(out / f"sweep_{name}.csv", rows) for name, rows in tables.items()]


COMMANDS = {"simulate": cmd_simulate, "theory": cmd_theory, "sweep": cmd_sweep}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    started = _now()
    out = Path(args.out)
    try:
        cfg = _resolve(args)
        paths = COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        print(f"ptlms {args.command}: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DivergenceError, theory.InstabilityError, np.linalg.LinAlgError) as exc:
        print(f"ptlms {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    manifest = _write_manifest(out, args.command, cfg, paths, started)
    for p in paths + [manifest]:
        print(p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
