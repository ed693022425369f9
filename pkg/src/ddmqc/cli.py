"""``ddmqc`` command-line front end.

Exit codes: 0 success, 2 config or usage error, 3 validation failure (with
``--strict``) or dispersive-regime violation, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import datetime as _dt
import io
import math
import sys
import warnings

import numpy as np

from . import __version__
from .config import DEFAULT_CONFIG, Config, load_config, parse_config
from .device import derive, to_ghz, validate_device
from .dynamics import dephasing_rates
from .errors import ConfigError, DispersiveRegimeError, NumericalError
from .gates import (
    CSV_COLUMNS, FidelityReport, adiabatic_initialize, report_row, synthesize_qubit_photon_swap,
    synthesize_rx, synthesize_rz, synthesize_sqrt_iswap, transport_qubit, verify_gate,
)
from .noise import calibrate, config_fragment, noisy_gate_fidelity, phase_variance
from .readout import (
    SpectrumRequest, discrimination_separation, dispersive_pull, fit_lorentzian, measurement_time,
    transmission_spectrum, write_spectrum_csv,
)

EXIT_OK, EXIT_CONFIG, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3, 4
GATE_TYPES = ("rx", "rz", "sqrtiswap", "swap-photon", "init", "transport")
SWEEP_METRICS = ("g", "omega0", "t_2q", "fidelity", "var_phi", "t_m")


class UsageError(Exception):
    pass


def _load(args) -> tuple[Config, str]:
    if args.config is None:
        return parse_config(DEFAULT_CONFIG), DEFAULT_CONFIG
    with open(args.config, encoding="utf-8") as fh:
        text = fh.read()
    return load_config(args.config), text


def manifest(args, cfg: Config, seed) -> list[str]:
    return [f"command = {' '.join(['ddmqc'] + args.argv)}",
            f"config_sha256 = {cfg.sha256}",
            f"seed = {seed}",
            f"version = {__version__}",
            f"timestamp = {_dt.datetime.now(_dt.timezone.utc).isoformat(timespec='seconds')}"]


def _open_out(path):
    return sys.stdout if path in (None, "-") else open(path, "w", encoding="utf-8", newline="")


def _close(fh):
    if fh is not sys.stdout:
        fh.close()


# --------------------------------------------------------------------------
# params


def cmd_params(args) -> int:
    cfg, _ = _load(args)
    dq = derive(cfg.device)
    p = cfg.gate
    print("Derived quantities (linear GHz unless noted)")
    print(f"  omega   = {to_ghz(dq.omega):.6g}")
    print(f"  theta   = {dq.theta:.6g} rad")
    print(f"  g       = {to_ghz(dq.g):.6g}  (geometric; operating point uses {to_ghz(p.g):.6g})")
    print(f"  omega0  = {to_ghz(dq.omega0):.10g}")
    print(f"  kappa   = {to_ghz(dq.kappa):.6g}  (1/kappa = {1 / dq.kappa:.4g} ns)")
    print(f"  E_z     = {to_ghz(dq.E_z):.6g}")
    print(f"  T_eff   = {to_ghz(dq.T_eff):.6g}")
    if dq.g == 0:
        print("  notice: coupling is off (sin 2 theta = 0)")
    t2q = math.pi * p.two_qubit_delta / (4 * p.g ** 2) if p.g else math.inf
    print(f"  t_2q    = {t2q:.6g} ns  (pi delta / 4 g^2 at the operating point)")
    rates = dephasing_rates(cfg.device, g=p.g, delta=cfg.readout.delta)
    print(f"  T2 = omega T_b^2 = {rates.T2_from_Tb:.4g} ns; hyperfine T2* = {rates.T2star_from_field:.4g} ns")
    report = validate_device(cfg.device, g=p.g, detuning=p.two_qubit_delta, dispersive=True,
                             dispersive_ratio=p.dispersive_ratio)
    print("Validation")
    for line in report.lines():
        print(f"  {line}")
    if args.strict and not report.passed:
        return EXIT_VALIDATION
    return EXIT_OK


# --------------------------------------------------------------------------
# gate


def _schedule(cfg: Config, kind: str, angle, force: bool):
    p = cfg.gate.with_(force=force)
    if kind in ("rx", "rz") and angle is None:
        raise UsageError(f"--angle is required for --type {kind}")
    if kind == "rx":
        return synthesize_rx(angle, p)
    if kind == "rz":
        return synthesize_rz(angle, cfg.z_gate.with_(force=force))
    if kind == "sqrtiswap":
        return synthesize_sqrt_iswap(p)
    if kind == "swap-photon":
        return synthesize_qubit_photon_swap(p.with_(omega=p.omega0))
    if kind == "transport":
        return transport_qubit(0, 1, p.with_(omega=p.omega0))
    raise UsageError(f"unknown gate type {kind!r}")


def _lindblad_rates(cfg: Config) -> dict:
    if cfg.noise.channels:
        return dict(cfg.noise.channels)
    d = cfg.device
    return {"T1": 1 / d.T1, "T2": 1 / d.T2, "T2star": 1 / d.T2star, "kappa": cfg.readout.kappa}


def run_gate(cfg: Config, kind: str, angle, mode: str, n_traj: int, seed: int,
             force: bool = False) -> FidelityReport:
    if kind == "init":
        res = adiabatic_initialize(cfg.device.T)
        return FidelityReport("init", "exact_full", res.fidelity, 0.0, 1, seed, res.t_final,
                              metric="overlap_with_logical_0")
    sched = _schedule(cfg, kind, angle, force)
    if mode == "noisy":
        rep = noisy_gate_fidelity(sched, cfg.noise, n_traj, seed)
    elif mode == "lindblad":
        rep = verify_gate(sched, "lindblad", _lindblad_rates(cfg), n_traj, seed)
    else:
        rep = verify_gate(sched, mode, None, n_traj, seed)
    rep.extra["paper_time_ns"] = sched.metadata.get("paper_time_ns")
    return rep


EXTRA_COLUMNS = ("metric", "average_gate_fidelity", "process_fidelity", "var_phi", "paper_time_ns")


def _fmt(v):
    return "" if v is None else (repr(float(v)) if isinstance(v, (float, np.floating)) else str(v))


def cmd_gate(args) -> int:
    cfg, _ = _load(args)
    rep = run_gate(cfg, args.type, args.angle, args.mode, args.trajectories, args.seed, args.force)
    out = _open_out(args.out)
    try:
        for line in manifest(args, cfg, args.seed):
            out.write(f"# {line}\n")
        for k, v in sorted(rep.breakdown.items()):
            out.write(f"# breakdown {k} = {v!r}\n")
        w = csv.writer(out, lineterminator="\n")
        w.writerow(list(CSV_COLUMNS) + list(EXTRA_COLUMNS))
        w.writerow(report_row(rep) + [rep.metric, _fmt(rep.average_gate_fidelity),
                                      _fmt(rep.process_fidelity), _fmt(rep.var_phi),
                                      _fmt(rep.extra.get("paper_time_ns"))])
    finally:
        _close(out)
    return EXIT_OK


# --------------------------------------------------------------------------
# readout


def cmd_readout(args) -> int:
    cfg, _ = _load(args)
    rp = cfg.readout
    span = cfg.readout_span if args.span is None else 2 * math.pi * args.span
    points = cfg.readout_points if args.points is None else args.points
    pull = dispersive_pull(rp)
    center = rp.omega0
    req = SpectrumRequest(args.state, center - span / 2, center + span / 2, points, rp)
    spec = transmission_spectrum(req)
    c_fit, w_fit = fit_lorentzian(spec.frequencies, spec.transmission)
    mt = measurement_time(rp)
    ratio, resolvable = discrimination_separation(rp)
    summary = [
        f"state = {args.state}",
        f"chi_GHz = {to_ghz(pull.chi)!r}",
        f"peak_0_GHz = {to_ghz(pull.peak_0)!r}",
        f"peak_1_GHz = {to_ghz(pull.peak_1)!r}",
        f"kappa_GHz = {to_ghz(rp.kappa)!r}",
        f"fit_center_GHz = {to_ghz(c_fit)!r}",
        f"fit_fwhm_GHz = {to_ghz(w_fit)!r}",
        f"t_m_ns = {mt.t_m!r} (quoted reference {mt.paper_value} ns, ratio {mt.discrepancy:.4g})",
        f"separation_over_linewidth = {ratio!r} ({'resolvable' if resolvable else 'not resolvable'})",
    ]
    out = _open_out(args.out)
    try:
        write_spectrum_csv(spec, out, manifest(args, cfg, "none") + summary)
    finally:
        _close(out)
    if args.out not in (None, "-"):
        print("\n".join(summary))
    return EXIT_OK


# --------------------------------------------------------------------------
# sweep


def _set_key(text: str, param: str, value: float) -> str:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp.read_string(text)
    if "." in param:
        section, key = param.split(".", 1)
    else:
        hits = [s for s in ("device", "simulation", "noise", "readout")
                if cp.has_section(s) and cp.has_option(s, param)]
        if len(hits) > 1:
            raise UsageError(f"{param!r} is ambiguous; use one of "
                             + ", ".join(f"{h}.{param}" for h in hits))
        if not hits:
            raise UsageError(f"unknown sweep parameter {param!r} (not set in the config)")
        section, key = hits[0], param
    if not cp.has_section(section):
        cp.add_section(section)
    cp.set(section, key, repr(float(value)))
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def sweep_metric(cfg: Config, metric: str, n_traj: int, seed: int) -> float:
    p = cfg.gate
    t2q = math.pi * p.two_qubit_delta / (4 * p.g ** 2)
    if metric == "g":
        return to_ghz(derive(cfg.device).g)
    if metric == "omega0":
        return to_ghz(derive(cfg.device).omega0)
    if metric == "t_2q":
        return t2q
    if metric == "t_m":
        return measurement_time(cfg.readout).t_m
    if metric == "var_phi":
        return phase_variance(cfg.noise, t2q, max(1000, n_traj), seed).var_phi
    if metric == "fidelity":
        return noisy_gate_fidelity(synthesize_sqrt_iswap(p), cfg.noise, n_traj, seed,
                                   breakdown=False).mean_fidelity
    raise UsageError(f"unknown metric {metric!r}")


def cmd_sweep(args) -> int:
    cfg, text = _load(args)
    if args.metric not in SWEEP_METRICS:
        raise UsageError(f"unknown metric {args.metric!r}; choose from {', '.join(SWEEP_METRICS)}")
    if args.steps < 1:
        raise UsageError("--steps must be at least 1")
    values = np.linspace(args.start, args.stop, args.steps)
    rows = []
    for v in values:
        c = parse_config(_set_key(text, args.param, v))
        rows.append((float(v), sweep_metric(c, args.metric, args.trajectories, args.seed)))
    out = _open_out(args.out)
    try:
        for line in manifest(args, cfg, args.seed):
            out.write(f"# {line}\n")
        w = csv.writer(out, lineterminator="\n")
        w.writerow([args.param, args.metric])
        for v, m in rows:
            w.writerow([repr(v), repr(float(m))])
    finally:
        _close(out)
    return EXIT_OK


# --------------------------------------------------------------------------
# calibrate


def cmd_calibrate(args) -> int:
    cfg, _ = _load(args)
    if not args.target_var > 0:
        raise UsageError("--target-var must be positive")
    kind = args.gate
    sched = (synthesize_sqrt_iswap(cfg.gate) if kind == "sqrtiswap"
             else _schedule(cfg, kind, math.pi, args.force))
    model = calibrate(args.target_var, sched.duration, args.kind, args.tau_c,
                      seed=cfg.noise.seed, channels=dict(cfg.noise.channels))
    out = _open_out(args.out)
    try:
        for line in manifest(args, cfg, cfg.noise.seed):
            out.write(f"# {line}\n")
        out.write(f"# target Var(phi) = {args.target_var!r} rad^2 at t = {sched.duration!r} ns\n")
        out.write(f"# sigma = {model.sigma!r} rad/ns\n")
        out.write(config_fragment(model))
    finally:
        _close(out)
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .selfcheck import run_all

    results = run_all()
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERICAL


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ddmqc", description="Double-dot molecule / resonator "
                                 "quantum computing simulator")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("config", nargs="?", help="INI config (default: built-in feasibility point)")
        p.add_argument("--out", help="output file (default stdout)")
        p.add_argument("--strict", action="store_true", help="exit 3 on validation failures")
        p.add_argument("--force", action="store_true", help="proceed outside the dispersive regime")
        if seed:
            p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("params", help="derived quantities and validation report")
    common(p, seed=False)
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("gate", help="synthesize and verify one operation")
    common(p)
    p.add_argument("--type", required=True, choices=GATE_TYPES)
    p.add_argument("--angle", type=float)
    p.add_argument("--mode", default="exact_full",
                   choices=("exact_full", "effective", "lindblad", "noisy"))
    p.add_argument("--trajectories", type=int, default=1)
    p.set_defaults(func=cmd_gate)

    p = sub.add_parser("readout", help="dispersive transmission spectrum")
    common(p, seed=False)
    p.add_argument("--state", type=int, choices=(0, 1), default=0)
    p.add_argument("--span", type=float, help="scan width in GHz around omega0")
    p.add_argument("--points", type=int)
    p.set_defaults(func=cmd_readout)

    p = sub.add_parser("sweep", help="one-parameter sweep of a metric")
    common(p)
    p.add_argument("--param", required=True, help="config key, optionally section.key")
    p.add_argument("--from", dest="start", type=float, required=True)
    p.add_argument("--to", dest="stop", type=float, required=True)
    p.add_argument("--steps", type=int, default=11)
    p.add_argument("--metric", required=True, choices=SWEEP_METRICS)
    p.add_argument("--trajectories", type=int, default=1000)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("calibrate", help="emit a [noise] section hitting a target Var(phi)")
    common(p, seed=False)
    p.add_argument("--target-var", type=float, required=True, help="rad^2")
    p.add_argument("--gate", default="sqrtiswap", choices=("sqrtiswap", "rx", "rz"))
    p.add_argument("--kind", default="quasi_static_gaussian",
                   choices=("quasi_static_gaussian", "ornstein_uhlenbeck"))
    p.add_argument("--tau-c", type=float, help="correlation time in ns (OU only)")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("selftest", help="run the property suite")
    p.set_defaults(func=cmd_selftest)
    return ap


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    args.argv = argv
    try:
        with warnings.catch_warnings():
            if not getattr(args, "strict", False):
                warnings.simplefilter("ignore", RuntimeWarning)
            return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DispersiveRegimeError as exc:
        print(f"dispersive regime violated: {exc} (use --force to override)", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
