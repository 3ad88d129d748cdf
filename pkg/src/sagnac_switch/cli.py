"""Command-line entry point: ``sagnac-switch <command>``.

Exit codes: 0 success, 1 runtime failure, 2 usage/config/input error.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import math
import sys
from pathlib import Path

from . import netlist as nl
from .config import ConfigError, load_config, parse_seconds
from .engine import INPUT_STATES, pass_times
from .experiment import run_delay_scan, run_voltage_sweep
from .report import SchemaError, format_summary, read_sweep, summarize, write_scan, write_sweep

log = logging.getLogger("sagnac_switch")

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def parse_input_state(text: str):
    """``H``/``V``/``D``/``A`` or ``alpha,beta`` with Python complex literals."""
    if text.upper() in INPUT_STATES:
        return text.upper()
    parts = text.split(",")
    if len(parts) != 2:
        raise UsageError(f"--input-state must be one of H, V, D, A or 'alpha,beta', got {text!r}")
    try:
        alpha, beta = (complex(p.strip().replace(" ", "")) for p in parts)
    except ValueError:
        raise UsageError(f"cannot read complex amplitudes from {text!r}") from None
    norm = abs(alpha) ** 2 + abs(beta) ** 2
    if abs(norm - 1.0) > 1e-9:
        raise UsageError(f"input state must be normalized (|alpha|^2+|beta|^2 = {norm:.6g})")
    scale = 1.0 / math.sqrt(norm)
    return (alpha * scale, beta * scale)


def _seconds(text: str) -> float:
    try:
        return parse_seconds(text)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _emit(text: str, out) -> None:
    if out is None or str(out) == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _plan_overrides(cfg, args, **extra):
    plan = cfg.plan
    changes = dict(extra)
    if args.quick:
        changes.update(repetitions=3, integration_time=1.0)
    if args.seed is not None:
        changes["seed"] = args.seed
    if getattr(args, "input_state", None):
        changes["input_state"] = parse_input_state(args.input_state)
    return dataclasses.replace(plan, **changes)


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    plan = _plan_overrides(cfg, args)
    switch = cfg.switch
    if args.kl_deg is not None:
        switch = switch.with_(mzs_phase_kl=math.radians(args.kl_deg))
    result = run_voltage_sweep(plan, cfg.source, cfg.detector, switch, workers=args.workers)
    _emit(write_sweep(result, args.format), args.out)
    return EXIT_OK


def _delay_grid(start: float, stop: float, step: float) -> list:
    n = int(math.floor((stop - start) / step + 1e-9))
    # femtosecond rounding keeps grid points that should coincide with pass times exact
    return [round(start + k * step, 15) for k in range(n + 1)]


def cmd_delay_scan(args) -> int:
    if args.step <= 0:
        raise UsageError(f"--step must be > 0, got {args.step}")
    if not args.start < args.stop:
        raise UsageError("--from must be smaller than --to")
    cfg = load_config(args.config)
    plan = _plan_overrides(cfg, args)
    voltage = cfg.switch.v_pi if args.voltage is None else args.voltage
    delays = _delay_grid(args.start, args.stop, args.step)
    t_cw, t_ccw = pass_times(cfg.switch)
    log.info("pass times: cw %.6g s, ccw %.6g s", t_cw, t_ccw)
    result = run_delay_scan(delays, voltage, plan, cfg.switch, cfg.source, cfg.detector,
                            workers=args.workers)
    _emit(write_scan(result, args.format), args.out)
    return EXIT_OK


def _print_diags(diags) -> None:
    for d in diags:
        print(d, file=sys.stderr)


def cmd_netlist(args) -> int:
    if args.action == "emit-preset":
        cfg = load_config(args.config)
        _emit(nl.serialize(nl.sagnac_preset(cfg.switch)), args.out)
        return EXIT_OK
    status = EXIT_OK
    for path in args.paths:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            print(f"{path}:0:0: error: {exc.strerror}", file=sys.stderr)
            status = EXIT_USAGE
            continue
        diags = nl.validate(text, str(path))
        if not diags and args.action == "validate" and args.topology:
            diags = _topology_diags(text, str(path))
        if diags:
            _print_diags(diags)
            status = EXIT_USAGE
            continue
        if args.action == "canonicalize":
            canonical = nl.serialize(nl.parse(text, str(path)))
            if canonical != text:
                Path(path).write_text(canonical, encoding="utf-8")
    return status


def _topology_diags(text, filename):
    from .chain import TopologyError, loop_from_netlist

    try:
        loop_from_netlist(nl.parse(text, filename))
    except TopologyError as exc:
        return [nl.Diagnostic(d.line, d.col, d.message, d.severity, filename) for d in exc.diagnostics]
    return []


def cmd_analyze(args) -> int:
    try:
        text = Path(args.results).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"{args.results}: {exc.strerror}") from None
    try:
        rows, embedded = read_sweep(text)
    except SchemaError as exc:
        raise UsageError(f"{args.results}: {exc}") from None
    reps = embedded.get("repetitions")
    repetitions = int(float(reps)) if reps not in (None, "nan") else None
    summary = summarize(rows, repetitions)
    _emit(format_summary(summary), args.out)
    if "fit_error" in summary:
        print(f"error: fringe fit failed: {summary['fit_error']}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sagnac-switch",
                                description="Polarization-independent Sagnac single-photon switch simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def run_opts(sp):
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--out", help="output file (default: stdout)")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--seed", type=lambda s: int(s, 0), help="master seed (overrides config)")
        sp.add_argument("--quick", action="store_true", help="3 repetitions of 1 s")
        sp.add_argument("--workers", type=int, default=1)

    sw = sub.add_parser("sweep", help="voltage sweep at D1/D2")
    run_opts(sw)
    sw.add_argument("--input-state", help="H, V, D, A or 'alpha,beta'")
    sw.add_argument("--kl-deg", type=float, help="relative phase between modulator arms, degrees")
    sw.set_defaults(func=cmd_sweep)

    ds = sub.add_parser("delay-scan", help="D1 counts against drive-pulse delay")
    run_opts(ds)
    ds.add_argument("--input-state", help="H, V, D, A or 'alpha,beta'")
    ds.add_argument("--voltage", type=float, help="drive voltage in V (default: v_pi)")
    ds.add_argument("--from", dest="start", type=_seconds, default=-100e-9, help="first delay, e.g. -100ns")
    ds.add_argument("--to", dest="stop", type=_seconds, default=600e-9, help="last delay, e.g. 600ns")
    ds.add_argument("--step", type=_seconds, default=1e-9, help="delay step, e.g. 1ns")
    ds.set_defaults(func=cmd_delay_scan)

    net = sub.add_parser("netlist", help="emit, validate or canonicalize .sagnet files")
    nsub = net.add_subparsers(dest="action", required=True)
    em = nsub.add_parser("emit-preset")
    em.add_argument("--config")
    em.add_argument("--out")
    va = nsub.add_parser("validate")
    va.add_argument("paths", nargs="+")
    va.add_argument("--topology", action="store_true",
                    help="also check the circuit is a supported Sagnac-switch topology")
    ca = nsub.add_parser("canonicalize")
    ca.add_argument("paths", nargs="+")
    net.set_defaults(func=cmd_netlist)

    an = sub.add_parser("analyze", help="recompute summary figures from a sweep file")
    an.add_argument("results")
    an.add_argument("--out")
    an.set_defaults(func=cmd_analyze)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        log.debug("runtime failure", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
