"""Command-line interface.

``etlpv synth | simulate | verify | report``.  Exit codes: 0 success,
1 usage or configuration error, 2 synthesis infeasible, 3 a verification or
runtime check failed.  Errors are reported as one line on stderr of the form
``error: <kind>: <message>``.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import io as fio
from .config import (build_graph, build_model, build_problem, build_scenario, load_config,
                     unicycle_handle_offset)
from .errors import (BackendFailure, ConfigError, DimensionMismatch, EtlpvError, IllConditioned, Infeasible,
                     NonConvergence, NumericalInstability, OutOfPolytope, ScenarioError, VerificationError)
from .graph import build_laplacian
from .report import build_report, format_table
from .sim import empirical_l2_gain, run
from .synthesis import (synthesize, verify_full_network_equivalence, verify_lyapunov_decrease,
                        verify_modal_stability)

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_VERIFY = 0, 1, 2, 3
OUTPUT_ROOT_ENV = "ETLPV_OUTPUT_ROOT"

log = logging.getLogger("etlpv")


class CliFailure(Exception):
    def __init__(self, code: int, kind: str, message: str):
        super().__init__(message)
        self.code, self.kind = code, kind


def output_dir(cfg, override: str | None) -> Path:
    if override:
        return Path(override)
    directory = Path(cfg.output.directory)
    if directory.is_absolute():
        return directory
    return Path(os.environ.get(OUTPUT_ROOT_ENV, ".")) / directory


def _load(cfg_path):
    cfg = load_config(cfg_path)
    return cfg, build_model(cfg), build_graph(cfg)


# -- synth -----------------------------------------------------------------------

def run_synthesis(cfg, model, graph):
    """Solve as configured; ``gamma: auto`` minimises first and re-solves at the margin."""
    problem = build_problem(cfg, model, graph)
    if cfg.synthesis.gamma == "auto" and cfg.synthesis.mode == "feasibility":
        cert_min, _ = synthesize(problem)
        gamma = cfg.synthesis.auto_margin * cert_min.gamma
        log.info("gamma auto: minimum %.6g, using %.6g", cert_min.gamma, gamma)
        problem = build_problem(cfg, model, graph, gamma=gamma)
    return synthesize(problem)


def cmd_synth(args) -> int:
    cfg, model, graph = _load(args.config)
    try:
        cert, ctrl = run_synthesis(cfg, model, graph)
    except Infeasible as exc:
        raise CliFailure(EXIT_INFEASIBLE, "infeasible", str(exc)) from exc
    except (BackendFailure, IllConditioned) as exc:
        raise CliFailure(EXIT_INFEASIBLE, "not-certified", str(exc)) from exc
    out = output_dir(cfg, args.out)
    fio.write_certificate(out / "certificate.json", cert)
    fio.write_controllers(out / "controllers.json", ctrl)
    print("status: feasible")
    print(f"gamma: {cert.gamma:.10g}")
    print(f"sigma: {cert.sigma:.10g}")
    for (l, lam), v in sorted(cert.min_eig_per_block.items()):
        print(f"block vertex={l} lambda={lam:.6g} min_eig={v:.6e}")
    print(f"wrote {out / 'certificate.json'} and {out / 'controllers.json'}")
    return EXIT_OK


# -- simulate ----------------------------------------------------------------------

def simulate_to(cfg, model, graph, ctrl, estimator, out: Path):
    scenario = build_scenario(cfg, model, graph, ctrl, estimator)
    trace, metrics = run(scenario)
    run_dir = out / scenario.estimator
    meta = {"scenario": cfg.name}
    d = unicycle_handle_offset(cfg)
    if d is not None:
        meta["handle_offset"] = d
    fio.write_trace_csv(run_dir / "trace.csv", trace, meta)
    fio.write_metrics(run_dir / "metrics.json", metrics)
    fio.write_messages_csv(run_dir / "messages.csv", trace)
    return run_dir, metrics


def cmd_simulate(args) -> int:
    cfg, model, graph = _load(args.config)
    ctrl = fio.read_controllers(args.controller)
    fio.check_controller_dims(ctrl, model)
    try:
        run_dir, m = simulate_to(cfg, model, graph, ctrl, args.estimator, output_dir(cfg, args.out))
    except (OutOfPolytope, NumericalInstability) as exc:
        raise CliFailure(EXIT_VERIFY, "runtime-check", str(exc)) from exc
    print(f"{m.estimator}: trigger_events={m.trigger_events} trigger_rate={m.trigger_rate:.6g} "
          f"mean_formation_error={m.mean_formation_error:.6g}")
    print(f"wrote {run_dir}")
    return EXIT_OK


# -- verify ------------------------------------------------------------------------

def verification_checks(cfg, model, graph, cert, ctrl, seed: int):
    """Yield ``(name, passed, detail)`` for the four certificate checks."""
    vc = cfg.verification
    if graph.node_count >= 2:
        spec = build_laplacian(graph)
        lam_pair = (spec.lambda2, spec.lambda_max)
    else:
        lam_pair = (min(cert.lambdas), max(cert.lambdas))

    try:
        rep = verify_modal_stability(model, ctrl, lam_pair, cert.alpha_z, cert.beta_z,
                                     samples=vc.stability_samples, seed=seed, raise_on_failure=False)
        yield "modal_stability", rep.passed, f"max spectral radius {rep.max_radius:.6f}"
    except EtlpvError as exc:
        yield "modal_stability", False, str(exc)

    if graph.node_count <= vc.max_equivalence_nodes:
        devs = [verify_full_network_equivalence(model, cert, graph, l, raise_on_failure=False)
                for l in range(model.vertex_count)]
        worst = max(devs)
        yield "network_equivalence", worst < 1e-8, f"max deviation {worst:.3e}"
    else:
        yield "network_equivalence", True, f"skipped (N = {graph.node_count} > {vc.max_equivalence_nodes})"

    base = build_scenario(cfg, model, graph, ctrl)
    try:
        gain_sc = dataclasses.replace(base, horizon_steps=int(round(vc.gain_horizon / base.Ts)))
        gain = empirical_l2_gain(gain_sc, trials=vc.gain_trials, seed=seed)
        bound = cert.gamma * (1 + 1e-3)
        yield "l2_gain", gain.max_ratio <= bound, f"max ratio {gain.max_ratio:.6g} vs gamma {cert.gamma:.6g}"
    except (NumericalInstability, NonConvergence, OutOfPolytope) as exc:
        yield "l2_gain", False, str(exc)

    try:
        rng = np.random.default_rng(seed)
        thetas = model.polytope.sample(rng, size=base.horizon_steps + 1)
        homo = dataclasses.replace(base, scheduling=thetas)
        trace, _ = run(homo)
        rep = verify_lyapunov_decrease(trace, cert, graph, raise_on_failure=False)
        yield "lyapunov_decrease", rep.passed, f"max normalised slack {rep.max_violation:.3e}"
    except (NumericalInstability, OutOfPolytope) as exc:
        yield "lyapunov_decrease", False, str(exc)


def cmd_verify(args) -> int:
    cfg, model, graph = _load(args.config)
    cert = fio.read_certificate(args.certificate)
    ctrl = fio.read_controllers(args.controller)
    fio.check_controller_dims(ctrl, model)
    if tuple(cert.dims) != model.dims or cert.vertex_count != model.vertex_count:
        raise DimensionMismatch(f"certificate dims {cert.dims} do not match the model {model.dims}")
    seed = cfg.verification.seed if args.seed is None else args.seed
    failed = []
    for name, ok, detail in verification_checks(cfg, model, graph, cert, ctrl, seed):
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        if not ok:
            failed.append(name)
    if failed:
        raise CliFailure(EXIT_VERIFY, "verification-failed", ", ".join(failed))
    return EXIT_OK


# -- report --------------------------------------------------------------------------

def cmd_report(args) -> int:
    out = Path(args.out) if args.out else Path(os.environ.get(OUTPUT_ROOT_ENV, ".")) / "report"
    rows = build_report(args.runs, out)
    sys.stdout.write(format_table(rows))
    print(f"wrote {out}")
    return EXIT_OK


# -- entry point -------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="etlpv", description="Event-triggered LPV formation control toolkit")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="solve the synthesis LMIs")
    s.add_argument("config")
    s.add_argument("--out", help="output directory (default: output.directory under $%s)" % OUTPUT_ROOT_ENV)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("simulate", help="simulate the network with a controller file")
    s.add_argument("config")
    s.add_argument("--controller", required=True)
    s.add_argument("--estimator", choices=("zoh", "ole", "cle"))
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("verify", help="run the numerical certificate checks")
    s.add_argument("config")
    s.add_argument("--certificate", required=True)
    s.add_argument("--controller", required=True)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("report", help="tabulate completed runs and write plot data")
    s.add_argument("runs", nargs="+")
    s.add_argument("--out")
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors; usage is code 1 here
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except CliFailure as exc:
        print(f"error: {exc.kind}: {exc}", file=sys.stderr)
        return exc.code
    except (ConfigError, ScenarioError, DimensionMismatch) as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except VerificationError as exc:
        print(f"error: verification-failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except Infeasible as exc:
        print(f"error: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
