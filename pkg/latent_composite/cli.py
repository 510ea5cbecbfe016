# latent_composite/cli.py
"""
Command-line front door.

    python -m latent_composite analyze   --data trial.csv [--config analysis.cfg] --out results/
    python -m latent_composite simulate  --scenario baseline --nsim 200 --seed 1 --out sim/
    python -m latent_composite bootstrap --data trial.csv --nboot 1000 --out boot/
    python -m latent_composite gof       --data trial.csv --out gof/

Exit codes: 0 success, 2 input error, 3 a requested fit failed or did not converge.
"""
from __future__ import annotations

import argparse
import hashlib
import logging
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import pandas as pd
from dotenv import load_dotenv

from latent_composite import __version__
from latent_composite.comparators import METHOD_NAMES, build_methods, parse_methods
from latent_composite.config import AnalysisConfig, env_settings, load_config
from latent_composite.core.params import parameter_names
from latent_composite.core.records import Dataset, response_rate_by_component
from latent_composite.dataio import file_hash, read_dataset, to_jsonable, write_json, write_table
from latent_composite.gof import QuadratureError, modified_pearson_residuals
from latent_composite.graph import run_analysis
from latent_composite.model.fit import check_analyzable, fit
from latent_composite.simulation.bootstrap import bootstrap_bias_correct
from latent_composite.simulation.generate import TRUTH_DRAWS, true_effect
from latent_composite.simulation.runner import exclusion_counts, run_scenario
from latent_composite.simulation.scenarios import get_scenario, load_scenario_file, scenario_hash
from latent_composite.simulation.summary import summarize

logger = logging.getLogger("latent_composite")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_FIT = 3

# every domain input error (DataFormatError, ConfigError, UnknownScenarioError,
# InsufficientDataError, pydantic ValidationError) is a ValueError
INPUT_ERRORS = (ValueError, OSError)


# ---------------------------
# Helpers
# ---------------------------
def _out_dir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(args) -> tuple[AnalysisConfig, Dataset]:
    config = load_config(args.config)
    if args.seed is not None:
        config = config.model_copy(update={"fit_seed": args.seed})
    data = read_dataset(args.data, k3=config.k3)
    return config, data


def _data_provenance(args, data: Dataset, config: AnalysisConfig, **extra) -> dict:
    prov = {
        "version": __version__,
        "input": Path(args.data).name,
        "input_hash": file_hash(args.data),
        "config_hash": hashlib.sha256(config.model_dump_json().encode()).hexdigest()[:16],
        "n_patients": data.n,
        "n_excluded": data.n_excluded,
    }
    prov.update(extra)
    return prov


def _effect_rows(results: dict) -> list[dict]:
    rows = []
    for method, effects in results.items():
        for scale, e in effects.items():
            rows.append(
                {
                    "method": method,
                    "scale": scale,
                    "estimate": e.estimate,
                    "se": e.se,
                    "ci_low": e.ci_low,
                    "ci_high": e.ci_high,
                    "p_value": e.p_value,
                    "p_treat": e.p_treat,
                    "p_control": e.p_control,
                    "converged": e.converged,
                    "note": e.note or "",
                }
            )
    return rows


# ---------------------------
# Commands
# ---------------------------
def cmd_analyze(args) -> int:
    config, data = _load(args)
    methods = parse_methods(args.methods)
    check_analyzable(data, config.min_patients)

    out = run_analysis(data, config, methods)
    results = out.get("results") or {}
    errors = out.get("errors") or {}
    fit_res = out.get("latent_fit")
    gof = out.get("gof")

    dest = _out_dir(args.out)
    prov = _data_provenance(args, data, config, methods=",".join(methods))
    write_table(dest / "effects.csv", pd.DataFrame(_effect_rows(results)), prov)
    report = {
        "provenance": prov,
        "effects": results,
        "errors": errors,
        "component_rates": response_rate_by_component(data, config.rule()),
        "trace": out.get("trace") or [],
    }
    if fit_res is not None:
        report["latent_fit"] = {
            "converged": fit_res.converged,
            "loglik": fit_res.loglik,
            "n_iter": fit_res.n_iter,
            "hessian_repaired": fit_res.hessian_repaired,
            "cell_floor_hit": fit_res.cell_floor_hit,
            "params": fit_res.params_hat,
            "unconstrained": dict(zip(parameter_names(data.k3), fit_res.unconstrained_hat.values)),
            "standard_errors": dict(zip(parameter_names(data.k3), fit_res.standard_errors())),
        }
    if gof is not None:
        report["gof"] = {
            "mean_statistic": gof.mean_statistic,
            "total": gof.total,
            "n_exceed": gof.n_exceed,
            "threshold": gof.threshold,
            "repaired": gof.repaired,
        }
    write_json(dest / "analysis.json", report)

    failed = bool(errors) or any(not e.converged for eff in results.values() for e in eff.values())
    return EXIT_FIT if failed else EXIT_OK


def cmd_simulate(args) -> int:
    config = load_config(args.config)
    if args.scenario_file:
        sc = load_scenario_file(args.scenario_file)
    else:
        sc = get_scenario(args.scenario)
    config = config.model_copy(update={"k3": sc.k3})
    methods = parse_methods(args.methods)
    seed = args.seed if args.seed is not None else 1

    truth = true_effect(sc, args.truth_draws)
    reps = run_scenario(sc, args.nsim, seed, methods, config, threads=args.threads)
    oc = summarize(reps, truth.log_or, alpha=config.alpha)
    counts = exclusion_counts(reps)

    sc_hash = scenario_hash(sc)
    prov = {
        "version": __version__,
        "scenario": sc.name,
        "scenario_hash": sc_hash,
        "seed": seed,
        "n_sim": args.nsim,
        "true_log_or": f"{truth.log_or:.6g}",
        "truth_draws": truth.n_draws,
        "excluded": ",".join(f"{m}={c[1]}" for m, c in counts.items()),
    }
    dest = _out_dir(args.out)
    rep_rows = [
        {"replicate": r.index, **o.model_dump(exclude={"error"}), "error": o.error or ""}
        for r in reps
        for o in r.outcomes.values()
    ]
    write_table(dest / "replicates.csv", pd.DataFrame(rep_rows), prov)

    perf_rows = []
    for m in oc.methods.values():
        row = {"method": m.method, "n_used": m.n_used, "n_excluded": m.n_excluded, "mean_estimate": m.mean_estimate}
        for key in ("bias", "coverage", "bias_corrected_coverage", "power", "mse", "emp_se", "model_se"):
            measure = getattr(m, key)
            row[key] = measure.estimate
            row[f"{key}_mcse"] = measure.mcse
        perf_rows.append(row)
    write_table(dest / "performance.csv", pd.DataFrame(perf_rows), prov)
    write_table(
        dest / "precision.csv",
        pd.DataFrame([{"pair": p.label, "n": p.n, "median": p.median, "p10": p.p10, "p90": p.p90} for p in oc.precision]),
        prov,
    )
    write_json(
        dest / "simulation.json",
        {"provenance": prov, "scenario": sc, "truth": truth, "performance": oc},
    )

    if args.db:
        from latent_composite.db import save_simulation

        run_hash = hashlib.sha256(f"{sc_hash}:{seed}:{args.nsim}:{','.join(methods)}".encode()).hexdigest()[:16]
        run_id = save_simulation(
            args.db, run_hash, sc.name, sc_hash, seed, truth.log_or, to_jsonable(oc), reps
        )
        logger.info("stored simulation run %d in %s", run_id, args.db)
    return EXIT_OK


def cmd_bootstrap(args) -> int:
    config, data = _load(args)
    methods = parse_methods(args.methods)
    check_analyzable(data, config.min_patients)
    n_boot = args.nboot if args.nboot is not None else config.n_boot
    seed = args.seed if args.seed is not None else config.boot_seed

    res = bootstrap_bias_correct(
        data,
        config.rule(),
        n_boot,
        seed,
        build_methods(methods, config),
        threads=args.threads,
        stratify=config.boot_stratify,
        alpha=config.alpha,
    )
    dest = _out_dir(args.out)
    prov = _data_provenance(
        args, data, config, seed=seed, n_boot=n_boot,
        failed_resamples=",".join(f"{k}={v.n_failed}" for k, v in res.items()),
    )
    write_table(dest / "bootstrap.csv", pd.DataFrame([s.model_dump() for s in res.values()]), prov)
    write_json(dest / "bootstrap.json", {"provenance": prov, "methods": res})
    if any(s.n_used == 0 or math.isnan(s.corrected) for s in res.values()):
        return EXIT_FIT
    return EXIT_OK


def cmd_gof(args) -> int:
    config, data = _load(args)
    result = fit(data, config.fit_options())
    try:
        g = modified_pearson_residuals(result, data, max_nodes=config.gof_max_nodes)
    except QuadratureError as e:
        logger.error("goodness of fit: %s", e)
        return EXIT_FIT

    dest = _out_dir(args.out)
    prov = _data_provenance(args, data, config, fit_converged=result.converged)
    c = data.columns
    table = pd.DataFrame(
        {
            "id": [p.id for p in data.patients],
            "treat": c.treat,
            "r1": g.residuals[:, 0],
            "r2": g.residuals[:, 1],
            "r3": g.residuals[:, 2],
            "r4": g.residuals[:, 3],
            "statistic": g.statistics,
            "exceeds": g.statistics > g.threshold,
        }
    )
    write_table(dest / "residuals.csv", table, prov)
    write_json(
        dest / "gof.json",
        {
            "provenance": prov,
            "mean_statistic": g.mean_statistic,
            "total": g.total,
            "n_exceed": g.n_exceed,
            "exceed_rate": g.n_exceed / data.n,
            "threshold": g.threshold,
            "repaired": g.repaired,
        },
    )
    return EXIT_OK if result.converged else EXIT_FIT


# ---------------------------
# Parser
# ---------------------------
def build_parser(default_threads: int = 1) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="latent_composite", description="Composite responder endpoint analysis")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, needs_data=True, parallel=False, with_methods=True):
        if needs_data:
            sp.add_argument("--data", required=True, help="patient CSV")
        sp.add_argument("--config", help="key = value analysis configuration")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--seed", type=int)
        if parallel:
            sp.add_argument("--threads", type=int, default=default_threads, help="worker processes")
        if with_methods:
            sp.add_argument("--methods", default=",".join(METHOD_NAMES))
        sp.add_argument("--log-level", dest="log_level")

    common(sub.add_parser("analyze", help="fit all methods to one dataset"))

    sim = sub.add_parser("simulate", help="operating characteristics for a scenario")
    common(sim, needs_data=False, parallel=True)
    src = sim.add_mutually_exclusive_group()
    src.add_argument("--scenario", default="baseline")
    src.add_argument("--scenario-file", dest="scenario_file")
    sim.add_argument("--nsim", type=int, default=200)
    sim.add_argument("--truth-draws", dest="truth_draws", type=int, default=TRUTH_DRAWS)
    sim.add_argument("--db", help="SQLAlchemy URL of a results store, or 'env' for LATCOMP_DATABASE_URL")

    boot = sub.add_parser("bootstrap", help="bias-corrected estimates by resampling patients")
    common(boot, parallel=True)
    boot.add_argument("--nboot", type=int)

    common(sub.add_parser("gof", help="modified Pearson residuals of the latent model"), with_methods=False)
    return p


COMMANDS = {
    "analyze": cmd_analyze,
    "simulate": cmd_simulate,
    "bootstrap": cmd_bootstrap,
    "gof": cmd_gof,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv()
    env = env_settings()
    args = build_parser(env.threads).parse_args(argv)
    logging.basicConfig(
        level=(args.log_level or env.log_level).upper(),
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if getattr(args, "db", None) == "env":
        args.db = env.database_url

    try:
        return COMMANDS[args.command](args)
    except INPUT_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
