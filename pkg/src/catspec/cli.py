"""
``catspec`` command line.

Global options go before or after the subcommand::

    catspec [--config FILE] [--seed N] [--shots N] [--out DIR] [--plot] [--check] COMMAND ...

Configuration files are INI-style with the sections ``[protocol]``,
``[detector]``, ``[methods]``, ``[spectral]``, ``[drive]``, ``[fringe]``,
``[heating]`` and ``[run]``; every value is a plain number in SI units
(lists are comma-separated).  Command-line flags override the file.

Exit status: 0 on success, 1 when validation fails or a ``--check`` is
not met, 2 for usage and configuration errors.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import math
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .fitting import WeightedSeries, fit_gaussian, fit_sinusoid
from .lineprofile import SpectralModel, power_series, spectrum_scan
from .montecarlo import RngStream, WalkProfile, simulate_protocol, walk_variance
from .phasespace import InvalidParameterError
from .signal import ProtocolParams, expectation, fringe_amplitudes, heating_contrast
from .statistics import (
    PUBLISHED_TABLE,
    DetectorModel,
    MethodConfig,
    analytic_reports,
    compare_methods,
    published_reports,
    reports_to_csv,
)
from .svgplot import Series, render_svg

__all__ = ["RunConfig", "load_config", "main", "build_parser"]

# stream ids keep the subcommands' random numbers disjoint for a shared seed
STREAM_FRINGE, STREAM_SPECTRUM, STREAM_SENSITIVITY, STREAM_HEATING = 1, 2, 3, 4


class ConfigError(ValueError):
    pass


@dataclass
class FringeOptions:
    points: int = 32
    scatter_prob: float = 1.0


@dataclass
class DriveOptions:
    duration: float = 1e-6
    relative_powers: tuple[float, ...] = (1.0, 2.0, 4.0)
    p_lowest: float = 0.5
    span: float = 60e6
    points: int = 41


@dataclass
class HeatingOptions:
    walks: int = 10_000
    steps: int = 1000


@dataclass
class MethodOptions:
    scatter_prob: float = 1.0
    direct_background: float = 0.049
    thermal_contrast: float = 0.32


@dataclass
class RunConfig:
    protocol: ProtocolParams = field(default_factory=ProtocolParams)
    detector: DetectorModel = field(default_factory=DetectorModel)
    methods: MethodOptions = field(default_factory=MethodOptions)
    spectral: SpectralModel = field(default_factory=SpectralModel)
    drive: DriveOptions = field(default_factory=DriveOptions)
    fringe: FringeOptions = field(default_factory=FringeOptions)
    heating: HeatingOptions = field(default_factory=HeatingOptions)
    seed: int | None = None
    shots: int | None = None
    workers: int = 1
    out: Path = Path(".")

    def stream(self, stream_id: int) -> RngStream:
        if self.seed is None:
            raise ConfigError("this run is stochastic: give --seed (or seed= in [run])")
        return RngStream(self.seed, stream_id)


# -- configuration ------------------------------------------------------------

def _coerce(cls, name: str, text: str):
    typ = {f.name: f.type for f in fields(cls)}[name]
    typ = typ if isinstance(typ, str) else typ.__name__
    try:
        if typ.startswith("tuple"):
            return tuple(float(v) for v in text.split(",") if v.strip())
        if typ.startswith("int"):
            return int(text)
        if typ.startswith("bool"):
            return text.strip().lower() in ("1", "true", "yes", "on")
        if typ.startswith("str"):
            return text.strip()
        return float(text)
    except ValueError:
        raise ConfigError(f"{cls.__name__}.{name}: cannot parse {text!r}") from None


def _section(cp: configparser.ConfigParser, name: str, obj):
    if not cp.has_section(name):
        return obj
    cls = type(obj)
    known = {f.name for f in fields(cls) if f.name != "components"}
    changes = {}
    for key, text in cp.items(name):
        if key not in known:
            raise ConfigError(f"[{name}] unknown key {key!r}; expected one of {', '.join(sorted(known))}")
        changes[key] = _coerce(cls, key, text)
    try:
        return replace(obj, **changes)
    except (InvalidParameterError, TypeError) as exc:
        raise ConfigError(f"[{name}] {exc}") from None


def load_config(path: str | Path | None) -> RunConfig:
    """Read an INI file into a :class:`RunConfig`; ``None`` gives the defaults."""
    cfg = RunConfig()
    if path is None:
        return cfg
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    allowed = {"protocol", "detector", "methods", "spectral", "drive", "fringe", "heating", "run"}
    for name in cp.sections():
        if name not in allowed:
            raise ConfigError(f"unknown section [{name}]")
    cfg.protocol = _section(cp, "protocol", cfg.protocol)
    cfg.detector = _section(cp, "detector", cfg.detector)
    cfg.methods = _section(cp, "methods", cfg.methods)
    cfg.spectral = _section(cp, "spectral", cfg.spectral)
    if cp.has_section("spectral"):
        # Zeeman components follow the (possibly changed) field
        cfg.spectral = replace(cfg.spectral, components=())
    cfg.drive = _section(cp, "drive", cfg.drive)
    cfg.fringe = _section(cp, "fringe", cfg.fringe)
    cfg.heating = _section(cp, "heating", cfg.heating)
    if cp.has_section("run"):
        for key, text in cp.items("run"):
            if key == "seed":
                cfg.seed = int(text)
            elif key == "shots":
                cfg.shots = int(text)
            elif key == "workers":
                cfg.workers = int(text)
            elif key == "out":
                cfg.out = Path(text)
            else:
                raise ConfigError(f"[run] unknown key {key!r}")
    return cfg


# -- output helpers -----------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)) or isinstance(x, str):
        return str(x)
    return format(float(x), ".12g")


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


class _Run:
    """Collects files and check results for one command invocation."""

    def __init__(self, cfg: RunConfig, plot: bool, check: bool, stdout):
        self.cfg, self.plot, self.check, self.stdout = cfg, plot, check, stdout
        self.failed: list[str] = []

    def write(self, name: str, text: str):
        self.cfg.out.mkdir(parents=True, exist_ok=True)
        path = self.cfg.out / name
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        self.say(f"wrote {path}")

    def say(self, text: str):
        print(text, file=self.stdout)

    def expect(self, label: str, ok: bool, detail: str = ""):
        if not self.check:
            return
        self.say(f"check {'PASS' if ok else 'FAIL'}: {label}{' (' + detail + ')' if detail else ''}")
        if not ok:
            self.failed.append(label)


def _shots(cfg: RunConfig, default: int) -> int:
    n = default if cfg.shots is None else cfg.shots
    if n < 0:
        raise ConfigError("shots must be non-negative")
    return n


# -- commands -----------------------------------------------------------------

def cmd_fringe(run: _Run, args) -> None:
    cfg = run.cfg
    params = cfg.protocol
    shots = _shots(cfg, 0)
    n = cfg.fringe.points
    if n < 5:
        raise ConfigError("[fringe] points must be >= 5")
    phis = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
    ana = expectation(params, phis)
    p_sc = cfg.fringe.scatter_prob
    ana_sz = p_sc * np.asarray(ana.sz) + (1 - p_sc) * expectation(params, 0.0, scattered=False).sz
    ana_sy = p_sc * np.asarray(ana.sy)
    if shots > 0:
        stream = cfg.stream(STREAM_FRINGE)
        est = [simulate_protocol(params, float(ph), shots, p_sc, stream.child(i), cfg.workers)
               for i, ph in enumerate(phis)]
        sz = np.array([e.sz for e in est])
        sy = np.array([e.sy for e in est])
        sz_err = np.array([e.sz_err for e in est])
        sy_err = np.array([e.sy_err for e in est])
    else:
        sz, sy = ana_sz.copy(), ana_sy.copy()
        sz_err = sy_err = np.zeros(n)
    rows = zip(phis, sz, sy, sz_err, sy_err, ana_sz, ana_sy)
    run.write("fringe.csv", _csv(("phi_sc", "sz", "sy", "sz_err", "sy_err", "analytic_sz", "analytic_sy"), rows))

    # a floor keeps the weights finite at the fringe extremes and for noiseless data
    floor = 1.0 / math.sqrt(max(shots, 1)) / 10 if shots else 1e-3
    fit_y = fit_sinusoid(WeightedSeries(phis, sy, np.maximum(sy_err, floor)), 2 * math.pi)
    fit_z = fit_sinusoid(WeightedSeries(phis, sz, np.maximum(sz_err, floor)), math.pi)
    a_y, a_z = fringe_amplitudes(params)
    a_y, a_z = p_sc * a_y, p_sc * a_z
    summary = [
        ("A_y", fit_y["amplitude"], fit_y.error("amplitude"), a_y),
        ("T_y", fit_y["period"], fit_y.error("period"), 2 * math.pi),
        ("A_z", fit_z["amplitude"], fit_z.error("amplitude"), a_z),
        ("T_z", fit_z["period"], fit_z.error("period"), math.pi),
        ("T_z/T_y", fit_z["period"] / fit_y["period"], _ratio_err(fit_z, fit_y), 0.5),
    ]
    run.write("fringe_fit.csv", _csv(("quantity", "fit", "fit_err", "model"), summary))
    for name, v, e, m in summary:
        run.say(f"{name:8s} fit {v:.6g} +- {e:.2g}  model {m:.6g}")
    if run.plot:
        svg = render_svg([Series(phis, sy, "sigma_y", True, sy_err), Series(phis, ana_sy, "sigma_y model"),
                          Series(phis, sz, "sigma_z", True, sz_err), Series(phis, ana_sz, "sigma_z model")],
                         "Fringes", "phi_sc (rad)", "expectation")
        run.write("fringe.svg", svg)
    if shots > 0:
        sig = fit_y.error("amplitude")
        run.expect("A_y within 3 sigma of model", abs(fit_y["amplitude"] - a_y) <= 3 * sig,
                   f"{fit_y['amplitude']:.4f} vs {a_y:.4f}, sigma {sig:.2g}")
        r, re_ = summary[-1][1], summary[-1][2]
        run.expect("T_z/T_y within 3 sigma of 1/2", abs(r - 0.5) <= 3 * re_, f"{r:.5f} +- {re_:.2g}")
    else:
        run.expect("fits converged", fit_y.converged and fit_z.converged)


def _ratio_err(num, den) -> float:
    a, b = num["period"], den["period"]
    return abs(a / b) * math.hypot(num.error("period") / a, den.error("period") / b)


def cmd_spectrum(run: _Run, args) -> None:
    cfg = run.cfg
    d = cfg.drive
    shots = _shots(cfg, 0)
    grid = np.linspace(-d.span, d.span, d.points)
    drives = power_series(cfg.spectral, d.relative_powers, d.duration, d.p_lowest)
    stream = cfg.stream(STREAM_SPECTRUM) if shots > 0 else None
    rows, fits, plot = [], [], []
    for k, drive in enumerate(drives):
        scan = spectrum_scan(cfg.spectral, drive, cfg.protocol, grid, shots,
                             stream.child(k) if stream else None, cfg.workers)
        rows += [(drive.power, x, y, e, p) for x, y, e, p in zip(*scan)]
        sigma = np.maximum(scan.a_y_err, 1e-3 if shots == 0 else 1e-4)
        fit = fit_gaussian(WeightedSeries(grid / 1e6, scan.a_y, sigma))
        fits.append((drive.power, fit.extras["fwhm"] * 1e6, fit.extras["fwhm_err"] * 1e6,
                     fit["center"] * 1e6, fit["amplitude"], fit.reduced_chi2 if shots else 0.0))
        plot.append(Series(grid / 1e6, scan.a_y, f"power {drive.power:g}", True, scan.a_y_err))
    run.write("spectrum.csv", _csv(("power", "detuning_hz", "a_y", "a_y_err", "scatter_prob"), rows))
    run.write("spectrum_fit.csv", _csv(("power", "fwhm_hz", "fwhm_err_hz", "center_hz", "amplitude", "reduced_chi2"), fits))
    for f in fits:
        run.say(f"power {f[0]:g}: FWHM {f[1] / 1e6:.2f} +- {f[2] / 1e6:.2f} MHz")
    if run.plot:
        run.write("spectrum.svg", render_svg(plot, "Line profile", "detuning (MHz)", "A_y"))
    widths = [f[1] for f in sorted(fits)]
    run.expect("FWHM increases with power", all(b > a for a, b in zip(widths, widths[1:])))


def cmd_sensitivity(run: _Run, args) -> None:
    cfg = run.cfg
    if args.published:
        reports = published_reports()
        run.write("sensitivity.csv", reports_to_csv(reports))
        for r, row in zip(reports, PUBLISHED_TABLE):
            run.say(f"{r.name:24s} SNR {r.snr:7.3f} (printed {row.snr})  beta {r.beta:.4f} "
                    f"(printed {row.beta})  N3sigma {r.shots_3sigma:.3g} (printed {row.shots_3sigma:.2g})")
            run.expect(f"{r.name} beta", abs(r.beta - row.beta) <= 0.01)
        return
    m = cfg.methods
    mc = MethodConfig(protocol=cfg.protocol, detector=cfg.detector, scatter_prob=m.scatter_prob,
                      direct_background=m.direct_background, thermal_contrast=m.thermal_contrast)
    if cfg.shots == 0:
        reports = analytic_reports(mc)
    else:
        reports = compare_methods(mc, cfg.shots, cfg.stream(STREAM_SENSITIVITY))
    run.write("sensitivity.csv", reports_to_csv(reports))
    for r in reports:
        run.say(f"{r.name:24s} A {r.signal_a:.4f} B {r.signal_b:.4f} SNR {r.snr:7.3f} beta {r.beta:.4f}")
    beta = {r.name: r.beta for r in reports}
    if beta["direct_sigma_z"] > 0:
        ratio = beta["css_sigma_y"] / beta["direct_sigma_z"]
        run.expect("beta(css_sigma_y) / beta(direct_sigma_z) >= 10", ratio >= 10, f"{ratio:.2f}")
    else:
        run.expect("beta(css_sigma_y) / beta(direct_sigma_z) >= 10", False, "direct beta is zero")
    run.expect("css_sigma_y is the most sensitive method", max(beta, key=beta.get) == "css_sigma_y")


def cmd_heating(run: _Run, args) -> None:
    cfg = run.cfg
    p = cfg.protocol
    walks = _shots(cfg, cfg.heating.walks)
    if walks < 2 and p.heating_rate > 0:
        raise ConfigError("heating needs at least 2 walks")
    rows = []
    stream = cfg.stream(STREAM_HEATING) if p.heating_rate > 0 else None
    for k, shape in enumerate(("trapezoid", "triangle")):
        prof = WalkProfile(shape, p.tau_cat, p.tau_wait, p.n_cat, cfg.heating.steps)
        if p.heating_rate == 0:
            rows.append((shape, 0.0, 0.0, 0.0, 0.0, 1.0))
            continue
        est = walk_variance(prof, p.heating_rate, walks, stream.child(k), cfg.workers)
        z = (est.variance - est.analytic) / est.std_error if est.std_error > 0 else 0.0
        rows.append((shape, est.analytic, est.variance, est.std_error, z, math.exp(-0.5 * est.analytic)))
    run.write("heating.csv", _csv(("profile", "analytic_variance", "mc_variance", "std_error", "z_score",
                                   "contrast"), rows))
    for r in rows:
        run.say(f"{r[0]:10s} analytic {r[1]:.5g}  MC {r[2]:.5g} +- {r[3]:.2g}  z {r[4]:+.2f}")
    run.say(f"heating contrast {heating_contrast(p):.6f}")
    for r in rows:
        run.expect(f"{r[0]} variance within 3 SE", abs(r[4]) <= 3, f"z = {r[4]:+.2f}")


def cmd_oracle(run: _Run, args) -> None:
    from .fock_oracle import direct_detection_exact, oracle_deviation, run_protocol_averaged

    alphas = _floats(args.alphas)
    etas = _floats(args.etas)
    dz, dy = oracle_deviation(alphas, etas, etas, n_phi=args.n_phi, dim=args.dim)
    params = replace(cfg_protocol_no_heating(run.cfg), alpha=max(alphas))
    avg_dev = 0.0
    for phi in np.linspace(0.0, 2 * math.pi, 8, endpoint=False):
        got = run_protocol_averaged(params, float(phi), dim=args.dim)
        ref = expectation(params, float(phi))
        avg_dev = max(avg_dev, abs(got.sz - ref.sz), abs(got.sy - ref.sy))
    dd_dev = max(abs(direct_detection_exact(e).p1 - e * e * math.exp(-e * e)) for e in etas)
    rows = [("max_dev_sigma_z", dz), ("max_dev_sigma_y", dy), ("max_dev_emission_average", avg_dev),
            ("max_dev_direct_detection", dd_dev)]
    run.write("oracle.csv", _csv(("quantity", "value"), rows))
    for name, v in rows:
        run.say(f"{name:26s} {v:.3e}")
    run.expect("oracle agrees with the closed form to 1e-6", max(dz, dy, avg_dev) < 1e-6)
    run.expect("direct detection P(n=1) to 1e-10", dd_dev < 1e-10)


def cfg_protocol_no_heating(cfg: RunConfig) -> ProtocolParams:
    return cfg.protocol.replace(heating_rate=0.0)


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


def cmd_sequence(run: _Run, args) -> None:
    from .sequence import ParseError, ScheduleError, parse, schedule, timeline_to_csv, validate

    path = Path(args.path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    try:
        program = parse(text)
    except ParseError as exc:
        run.say(f"{path}:{exc}")
        run.failed.append("parse")
        return
    diags = validate(program, args.tolerance)
    for d in diags:
        run.say(f"{path}: {d}")
    errors = [d for d in diags if d.severity == "error"]
    run.say(f"{path}: {len(program)} steps, {len(errors)} errors, {len(diags) - len(errors)} warnings")
    run.expect("sequence validates without errors", not errors)
    if errors:
        run.failed.append("validation")
        return
    if args.sweep > 1:
        delays = np.arange(args.sweep) / (args.sweep * program.mode_frequency)
    else:
        delays = [0.0]
    try:
        timelines = schedule(program, delays)
    except ScheduleError as exc:
        run.say(f"{path}: {exc}")
        run.failed.append("schedule")
        return
    stem = path.stem
    if len(timelines) == 1:
        run.write(f"{stem}_timeline.csv", timeline_to_csv(timelines[0]))
    else:
        for i, tl in enumerate(timelines):
            run.write(f"{stem}_timeline_{i:03d}.csv", timeline_to_csv(tl))
    run.say(f"{path}: total duration {timelines[0].total_duration * 1e3:.6f} ms at zero delay")


COMMANDS = {
    "fringe": cmd_fringe,
    "spectrum": cmd_spectrum,
    "sensitivity": cmd_sensitivity,
    "heating": cmd_heating,
    "oracle": cmd_oracle,
    "sequence": cmd_sequence,
}


# -- argument parsing ---------------------------------------------------------

def _global_options(parser: argparse.ArgumentParser, suppress: bool):
    d = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", metavar="PATH", default=d, help="INI configuration file")
    parser.add_argument("--seed", type=_u64, metavar="U64", default=d, help="seed for stochastic runs")
    parser.add_argument("--shots", type=int, metavar="N", default=d,
                        help="shots per point (0 = analytic only)")
    parser.add_argument("--out", metavar="DIR", default=d, help="output directory (default: .)")
    parser.add_argument("--plot", action="store_true", default=argparse.SUPPRESS if suppress else False,
                        help="also write SVG plots")
    parser.add_argument("--check", action="store_true", default=argparse.SUPPRESS if suppress else False,
                        help="evaluate acceptance checks; nonzero exit if any fails")
    parser.add_argument("--workers", type=int, metavar="N", default=d, help="worker threads for shot batches")


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="catspec", description="Cat-state spectroscopy simulations.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_options(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    common = argparse.ArgumentParser(add_help=False)
    _global_options(common, suppress=True)

    sub.add_parser("fringe", parents=[common], help="sigma_z / sigma_y fringes versus scatter phase")
    sub.add_parser("spectrum", parents=[common], help="line profile at several drive powers")
    p = sub.add_parser("sensitivity", parents=[common], help="signal, noise and sensitivity of the five methods")
    p.add_argument("--published", action="store_true",
                   help="recompute from the published (A, B, N) values instead of simulating")
    sub.add_parser("heating", parents=[common], help="heating random walk versus the variance law")
    p = sub.add_parser("oracle", parents=[common], help="Fock-space simulation versus the closed form")
    p.add_argument("--alphas", default="0.5,1,2,2.9")
    p.add_argument("--etas", default="0,0.05,0.1,0.2")
    p.add_argument("--n-phi", type=int, default=64)
    p.add_argument("--dim", type=int, default=128)
    p = sub.add_parser("sequence", parents=[common], help="validate and schedule a .seq file")
    p.add_argument("path")
    p.add_argument("--sweep", type=int, default=1, help="number of delays across one motional period")
    p.add_argument("--tolerance", type=float, default=0.02, help="relative SpecTrain period tolerance")
    return parser


def main(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.shots is not None:
            cfg.shots = args.shots
        if args.workers is not None:
            cfg.workers = max(1, args.workers)
        if args.out is not None:
            cfg.out = Path(args.out)
        run = _Run(cfg, args.plot, args.check, stdout)
        COMMANDS[args.command](run, args)
    except (ConfigError, InvalidParameterError) as exc:
        print(f"catspec: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"catspec: I/O error: {exc}", file=sys.stderr)
        return 2
    return 1 if run.failed else 0


if __name__ == "__main__":
    sys.exit(main())
