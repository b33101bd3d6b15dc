"""Command-line entry point.

    weakcorr analyze|fields|verify|sweep --config <path> [--out <dir>]

Exit codes: 0 success, 1 usage/configuration/input error, 2 numerical
invariant violation (for ``verify``: any failed identity).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from threadpoolctl import threadpool_limits

from . import __version__
from .config import RunConfig, load_config
from .detector import Analysis, analyze, default_tolerance, identity_suite
from .exceptions import ConfigurationError, NumericalError, UsageError, WeakCorrError
from .grid import make_grid
from .kinematics import quantum_potential, velocity_fields
from .report import write_field_csv, write_json, write_sweep_csv
from .states import StateSpec, WaveFunction, load_wavefunction, make_state
from .weak_values import momentum_representation

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2

BATTERY = (
    StateSpec("product_gaussian", sigma1=1.0, sigma2=1.0),
    StateSpec("correlated_gaussian", a=0.5, b=0.2),
    StateSpec("phase_gaussian", sigma=1.0, lam=0.3),
    StateSpec("general_gaussian", a=0.5, b=0.2, lam=0.3),
    StateSpec("cat", c=2.0, sigma=0.5),
)


# ---------------------------------------------------------------- pipeline


def build_state(cfg: RunConfig, spec: StateSpec | None = None) -> WaveFunction:
    spec = spec or cfg.require_state()
    if spec.kind == "file":
        return load_wavefunction(cfg.resolve_input(spec.path))
    return make_state(spec, make_grid(cfg.grid), cfg.physics)


def representations(wf: WaveFunction, which: str) -> list[tuple[str, WaveFunction]]:
    out = []
    if which in ("position", "both"):
        out.append(("position", wf))
    if which in ("momentum", "both"):
        out.append(("momentum", wf if wf.representation == "momentum"
                    else momentum_representation(wf)))
    return out


def _analysis_block(wf: WaveFunction, cfg: RunConfig) -> tuple[Analysis, dict]:
    opts = cfg.analysis
    result = analyze(wf, tau=opts.tau, scheme=opts.scheme, eps_rel=opts.eps_rel)
    suite = identity_suite(wf, opts.tol, scheme=opts.scheme, eps_rel=opts.eps_rel)
    cw = result.weak_correlation
    block = {
        "indicators": result.indicators.to_dict(),
        "verdict": result.verdict.to_dict(),
        "weak_correlation": {"mean_re": cw.mean.real, "mean_im": cw.mean.imag,
                             "sup_re": cw.sup_re, "sup_im": cw.sup_im},
        "identity_suite": {"passed": suite.passed,
                           "tolerance": default_tolerance(wf) if opts.tol is None else opts.tol,
                           "residuals": suite.to_list()},
        "mask_fraction": result.mask_fraction,
        "masked_fraction": 1.0 - result.mask_fraction,
    }
    if "parseval_norm" in wf.meta:
        block["parseval_norm"] = wf.meta["parseval_norm"]
    return result, block


def _provenance(wf: WaveFunction, cfg: RunConfig, mask_fraction: float) -> dict:
    return {"grid_resolution": list(wf.grid.shape), "spacing": [wf.grid.h1, wf.grid.h2],
            "scheme": cfg.analysis.scheme, "eps_rel": cfg.analysis.eps_rel,
            "mask_fraction": mask_fraction, "tool": "weakcorr", "tool_version": __version__}


def build_report(cfg: RunConfig) -> dict:
    wf = build_state(cfg)
    blocks, primary = {}, None
    for name, state in representations(wf, cfg.analysis.representation):
        result, blocks[name] = _analysis_block(state, cfg)
        primary = primary or (name, result)
    name, result = primary
    return {
        "config": cfg.to_dict(),
        "state_label": wf.label,
        "representation": name,
        "verdict": result.verdict.label.value,
        "indicators": result.indicators.to_dict(),
        "representations": blocks,
        "entangled_agreement": len({b["verdict"]["class"] != "PRODUCT" for b in blocks.values()}) == 1,
        "provenance": _provenance(wf, cfg, blocks["position" if "position" in blocks else name]["mask_fraction"]),
    }


# ---------------------------------------------------------------- commands


def cmd_analyze(cfg: RunConfig) -> int:
    report = build_report(cfg)
    path = write_json(cfg.resolve(cfg.outputs.report_path), report)
    print(f"{report['state_label']}: {report['verdict']} "
          f"(iA_sup={report['indicators']['iA_sup']:.4g}, iP_sup={report['indicators']['iP_sup']:.4g}) "
          f"-> {path}")
    return EXIT_OK


def cmd_fields(cfg: RunConfig) -> int:
    if cfg.outputs.fields_dir is None:
        raise ConfigurationError("'outputs.fields_dir' is required for the fields command")
    out = cfg.resolve(cfg.outputs.fields_dir)
    wf = build_state(cfg)
    opts = cfg.analysis
    written = {}
    for name, state in representations(wf, opts.representation):
        target = out if name == "position" else out / name
        result = analyze(state, tau=opts.tau, scheme=opts.scheme, eps_rel=opts.eps_rel)
        cw = result.weak_correlation
        fields = {"re_cw": (cw.cw.real, cw.mask), "im_cw": (cw.cw.imag, cw.mask)}
        if name == "position":
            vf = velocity_fields(state, scheme=opts.scheme, eps_rel=opts.eps_rel)
            qp = quantum_potential(state, scheme=opts.scheme, eps_rel=opts.eps_rel, rtol=float("inf"))
            fields.update({"u1": (vf.u1, vf.mask), "u2": (vf.u2, vf.mask), "v1": (vf.v1, vf.mask),
                           "v2": (vf.v2, vf.mask), "vq": (qp.vq_total, qp.mask)})
        files = []
        for key, (values, mask) in sorted(fields.items()):
            write_field_csv(target / f"{key}.csv", state.grid, values, mask)
            files.append(f"{key}.csv")
        write_field_csv(target / "rho.csv", state.grid, state.rho)
        files.append("rho.csv")
        header = {"grid": state.grid.spec.to_dict(), "physics": state.physics.to_dict(),
                  "representation": name, "state_label": state.label,
                  "state": None if cfg.state is None else cfg.state.to_dict(),
                  "columns": ["i", "j", "x1", "x2", "value"], "files": sorted(files),
                  "masked_cells": "empty value", "eps_rel": opts.eps_rel, "scheme": opts.scheme,
                  "mask_fraction": result.mask_fraction, "tool_version": __version__}
        write_json(target / "header.json", header)
        written[name] = target
    for name, target in written.items():
        print(f"{name} fields -> {target}")
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    opts = cfg.analysis
    grid = make_grid(cfg.grid)
    states, all_pass = [], True
    for spec in BATTERY:
        wf = make_state(spec, grid, cfg.physics)
        suite = identity_suite(wf, opts.tol, scheme=opts.scheme, eps_rel=opts.eps_rel)
        all_pass &= suite.passed
        states.append({"state": spec.to_dict(), "label": wf.label, "passed": suite.passed,
                       "residuals": suite.to_list()})
        status = "PASS" if suite.passed else "FAIL"
        print(f"{status} {wf.label}")
        for r in suite.failures:
            print(f"     {r.name}: {r.value:.3e} > {r.tol:.0e}")
    report = {"config": cfg.to_dict(), "passed": all_pass, "states": states,
              "tolerance": default_tolerance(grid) if opts.tol is None else opts.tol,
              "provenance": {"grid_resolution": list(grid.shape), "scheme": opts.scheme,
                             "eps_rel": opts.eps_rel, "tool": "weakcorr", "tool_version": __version__}}
    write_json(cfg.resolve(cfg.outputs.report_path), report)
    return EXIT_OK if all_pass else EXIT_NUMERICAL


def cmd_sweep(cfg: RunConfig) -> int:
    sweep = cfg.outputs.sweep
    if sweep is None:
        raise ConfigurationError("'outputs.sweep' is required for the sweep command")
    if not sweep.values:
        raise UsageError("sweep grid is empty")
    base = cfg.require_state()
    opts = cfg.analysis
    rows = []
    for value in sweep.values:
        wf = build_state(cfg, base.with_param(sweep.parameter, value))
        for _, state in representations(wf, "momentum" if opts.representation == "momentum" else "position"):
            result = analyze(state, tau=opts.tau, scheme=opts.scheme, eps_rel=opts.eps_rel)
            rows.append({"parameter": sweep.parameter, "value": float(value),
                         **result.indicators.to_dict(), "verdict": result.verdict.label.value})
    path = write_sweep_csv(cfg.resolve(sweep.path), rows)
    print(f"{len(rows)} rows -> {path}")
    return EXIT_OK


COMMANDS = {"analyze": cmd_analyze, "fields": cmd_fields, "verify": cmd_verify, "sweep": cmd_sweep}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="weakcorr", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"weakcorr {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    help_text = {
        "analyze": "indicators, verdict and identity residuals for one state",
        "fields": "dump velocity, quantum-potential and weak-correlation fields as CSV",
        "verify": "run the identity suite over the built-in five-state battery",
        "sweep": "indicators over a grid of one state parameter",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=help_text[name])
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", help="directory for outputs (default: next to the config)")
    return parser


def _thread_limit() -> int | None:
    raw = os.environ.get("WEAKCORR_THREADS")
    if raw is None or raw == "":
        return None
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"WEAKCORR_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"WEAKCORR_THREADS must be a positive integer, got {raw!r}")
    return n


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        limit = _thread_limit()
        cfg = load_config(args.config, Path(args.out) if args.out else None)
        with threadpool_limits(limits=limit):
            return COMMANDS[args.command](cfg)
    except NumericalError as exc:
        print(f"weakcorr: numerical invariant violated: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (WeakCorrError, OSError) as exc:
        print(f"weakcorr: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
