"""Command line front end.

Subcommands: ``link-run`` (frame-level end-to-end simulation), ``tables``
(embedded operating tables and their consistency audit), ``figure5``
(energy-versus-distance sweep with crossover footer), and ``duty-cycle``
(air-time and duty-cycle report).  Every run is deterministic given the
config bytes and the seed, and drops a plain-text manifest next to its
output file.  Exit codes: 0 ok, 1 infeasible or failed checks, 2 bad input.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from .config import (
    ConfigError,
    SimSettings,
    default_settings,
    load_settings,
    render_default_config,
)
from .energy_opt import (
    InfeasibleFrameError,
    detect_crossover,
    optimize,
    sweep_energy_vs_distance,
)
from .frame import frame_schedule
from .lt_codec import bit_error_rate, derive_rng, run_incremental
from .phy_model import active_duration, channel_bit_error
from .rate_model import (
    SUPPORTED_PB,
    UnsupportedTableError,
    de_rate_curve,
    embedded_table,
    uncoded_reference_snr,
)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_BAD_INPUT = 2

_COMPARISON_BANDWIDTH_HZ = 62.5e3  # narrowband sensor-network channel


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _write_csv(path: str, header: list[str], rows: list[list], footer: list[str]):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
        for line in footer:
            fh.write(line + "\n")


def _config_digest(config_path: str | None, scenario: str) -> str:
    if config_path is not None:
        with open(config_path, "rb") as fh:
            payload = fh.read()
    else:
        payload = render_default_config(scenario).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()


@dataclass(frozen=True)
class RunManifest:
    """Audit record of one command invocation; digest is over config bytes."""

    command: str
    config_sha256: str
    seed: int | None
    version: str
    outputs: tuple[str, ...]
    extra_args: tuple[tuple[str, str], ...] = ()

    def to_text(self) -> str:
        lines = [
            f"command = {self.command}",
            f"version = {self.version}",
            f"seed = {self.seed if self.seed is not None else ''}",
            f"config_sha256 = {self.config_sha256}",
        ]
        lines.extend(f"arg.{name} = {value}" for name, value in self.extra_args)
        lines.append("outputs = " + " ".join(self.outputs))
        return "\n".join(lines) + "\n"


def _write_manifest(out_path: str, args, digest: str, outputs: list[str]) -> None:
    extras = tuple(
        (name, str(getattr(args, name)))
        for name in sorted(vars(args))
        if name not in ("command", "seed")
    )
    manifest = RunManifest(
        command=args.command,
        config_sha256=digest,
        seed=getattr(args, "seed", None),
        version=__version__,
        outputs=tuple(outputs),
        extra_args=extras,
    )
    with open(out_path + ".manifest", "w", encoding="utf-8") as fh:
        fh.write(manifest.to_text())


def _load(args) -> SimSettings:
    if getattr(args, "config", None):
        settings = load_settings(args.config)
    else:
        settings = default_settings(scenario=getattr(args, "scenario", "deep"))
    if getattr(args, "pb", None) is not None:
        settings = replace(
            settings, config=replace(settings.config, pb_target=args.pb)
        )
    return settings


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="implantphy",
        description="Rateless-coded NC-MFSK implant uplink simulator",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("link-run", help="simulate one sensed frame end to end")
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", default="link_run.csv")
    p.add_argument("--distance-mm", type=float, required=True)
    p.add_argument("--pb", type=float, default=None)
    p.add_argument("--scheme", choices=("uncoded", "coded", "auto"), default="auto")
    p.add_argument("--scenario", choices=("deep", "near"), default="deep")

    p = sub.add_parser("tables", help="emit the embedded operating tables")
    p.add_argument("--which", choices=("V", "VI", "consistency"), default="consistency")
    p.add_argument("--out", default="tables.csv")
    p.add_argument("--de", action="store_true", help="add density-evolution columns")
    p.add_argument("--seed", type=int, default=1)

    p = sub.add_parser("figure5", help="energy versus distance for both schemes")
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", default="figure5.csv")
    p.add_argument("--pb", type=float, default=1e-3)
    p.add_argument("--scenario", choices=("deep", "near"), default="near")
    p.add_argument("--grid", default=None, help="lo:hi:step in mm")

    p = sub.add_parser("duty-cycle", help="air time and duty cycle report")
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", default="duty_cycle.csv")
    p.add_argument("--pb", type=float, default=1e-3)
    p.add_argument("--scenario", choices=("deep", "near"), default="deep")
    p.add_argument("--snr", action="store_true", help="sweep the table operating points")
    p.add_argument("--distance-mm", type=float, default=None,
                   help="report the optimizer's pick at this distance")
    return parser


def _cmd_link_run(args) -> int:
    settings = _load(args)
    cfg = settings.config
    k = settings.block_bits
    frame_bits = cfg.link.frame_bits
    if frame_bits % k:
        print(f"error: frame_bits {frame_bits} not divisible by block_bits {k}",
              file=sys.stderr)
        return EXIT_BAD_INPUT
    d_m = args.distance_mm / 1000.0
    if d_m <= 0:
        print("error: distance must be positive", file=sys.stderr)
        return EXIT_BAD_INPUT

    plan = optimize(d_m, cfg)
    scheme = args.scheme if args.scheme != "auto" else plan.winner
    if scheme == "coded":
        m, row, breakdown = plan.coded_m, plan.coded_row, plan.coded
        flip = channel_bit_error(10.0 ** (row.snr_db / 10.0), m)
        snr_db = row.snr_db
    else:
        m, row, breakdown = plan.uncoded_m, None, plan.uncoded
        flip = cfg.pb_target
        snr_db = uncoded_reference_snr(m, cfg.pb_target)

    header = [
        "record", "block", "scheme", "m", "snr_db", "flip_prob", "n_symbols",
        "realized_rate", "ber", "converged", "rf_j", "circuit_j", "transient_j",
        "coding_j", "total_j", "duty_cycle",
    ]
    rows: list[list] = []
    all_ok = True
    n_blocks = frame_bits // k
    for j in range(n_blocks):
        rng = derive_rng(args.seed, f"block{j}")
        message = np.array([rng.randrange(2) for _ in range(k)], dtype=np.uint8)
        if scheme == "coded":
            result = run_incremental(message, flip, rng)
            ber = bit_error_rate(result, message)
            all_ok &= result.success
            rows.append([
                "block", j, scheme, m, snr_db, flip, result.symbols_consumed,
                result.realized_rate, ber, result.converged,
                None, None, None, None, None, None,
            ])
        else:
            flips = sum(1 for _ in range(k) if rng.random() < flip)
            rows.append([
                "block", j, scheme, m, snr_db, flip, k, 1.0, flips / k, True,
                None, None, None, None, None, None,
            ])
    rows.append([
        "frame_energy", "", scheme, m, snr_db, flip, "", "", "", "",
        breakdown.rf_j, breakdown.circuit_j, breakdown.transient_j,
        breakdown.coding_j, breakdown.total_j, breakdown.duty_cycle,
    ])
    _write_csv(args.out, header, rows, [])
    digest = _config_digest(args.config, args.scenario)
    _write_manifest(args.out, args, digest, [args.out])
    print(f"{args.out}: {n_blocks} blocks, scheme={scheme}, "
          f"total={breakdown.total_j:.6g} J")
    if not all_ok:
        print("error: at least one block failed to decode", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


def _cmd_tables(args) -> int:
    which = {"V": (2,), "VI": (4,), "consistency": (2, 4)}[args.which]
    header = ["M", "Pb", "snr_dB", "rate", "gain_dB"]
    if args.de:
        header += ["de_rate", "de_delta"]
    rows: list[list] = []
    checks: list[str] = []
    ok = True
    for m in which:
        for pb in SUPPORTED_PB:
            table = embedded_table(m, pb)
            de_rates = {}
            if args.de:
                de_table = de_rate_curve(m, pb, [r.snr_db for r in table.rows])
                de_rates = {r.snr_db: r.rate for r in de_table.rows}
            for row in table.rows:
                record = [m, pb, row.snr_db, row.rate, row.gain_db]
                if args.de:
                    de_rate = de_rates[row.snr_db]
                    record += [de_rate, de_rate - row.rate]
                rows.append(record)
            dev = table.max_column_deviation_db()
            ref = table.uncoded_ref_db
            good = dev <= 0.05
            ok &= good
            checks.append(
                f"# consistency M={m} Pb={pb:g}: ref={ref:.4f} dB "
                f"max_dev={dev:.4f} dB {'PASS' if good else 'FAIL'}"
            )
    _write_csv(args.out, header, rows, checks)
    digest = _config_digest(None, "deep")
    _write_manifest(args.out, args, digest, [args.out])
    for line in checks:
        print(line.lstrip("# "))
    print(f"{args.out}: {len(rows)} rows")
    return EXIT_OK if ok else EXIT_FAILED


def _parse_grid(text: str | None, scenario: str) -> list[float]:
    if text is None:
        text = "30:100:2" if scenario == "near" else "100:300:5"
    try:
        lo, hi, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise ConfigError(f"bad grid {text!r}; expected lo:hi:step in mm")
    if lo <= 0 or hi <= lo or step <= 0:
        raise ConfigError(f"bad grid {text!r}; expected 0 < lo < hi and step > 0")
    out = []
    d = lo
    while d <= hi + 1e-9:
        out.append(d)
        d += step
    return out


def _cmd_figure5(args) -> int:
    settings = _load(args)
    cfg = settings.config
    grid_mm = _parse_grid(args.grid, args.scenario)
    points = sweep_energy_vs_distance([d / 1000.0 for d in grid_mm], cfg)
    header = [
        "d_mm", "uncoded_M", "uncoded_total_J", "coded_M", "coded_snr_dB",
        "coded_rate", "coded_total_J", "winner",
    ]
    rows = []
    for pt in points:
        if pt.winner == "infeasible":
            rows.append([pt.d_m * 1000.0, None, None, None, None, None, None,
                         "infeasible"])
            continue
        rows.append([
            pt.d_m * 1000.0, pt.uncoded_m, pt.uncoded.total_j, pt.coded_m,
            pt.coded_row.snr_db, pt.coded_row.rate, pt.coded.total_j, pt.winner,
        ])
    scan = detect_crossover(cfg, grid_mm[0] / 1000.0, grid_mm[-1] / 1000.0)
    note = ""
    if scan.d_t_m is None:
        wide = detect_crossover(cfg, 0.030, 0.300)
        scan = wide
        note = " (outside requested grid)" if wide.d_t_m is not None else ""
    footer_val = "none" if scan.d_t_m is None else f"{scan.d_t_m * 1000.0:.4f}"
    footer = [f"# d_T_mm = {footer_val}{note}"]
    _write_csv(args.out, header, rows, footer)
    digest = _config_digest(args.config, args.scenario)
    _write_manifest(args.out, args, digest, [args.out])
    print(f"{args.out}: {len(rows)} grid points, d_T = {footer_val} mm{note}")
    return EXIT_OK


def _cmd_duty_cycle(args) -> int:
    settings = _load(args)
    cfg = settings.config
    lb = cfg.link
    header = ["label", "m", "bandwidth_hz", "snr_db", "rate", "t_active_ms",
              "t_sleep_ms", "duty_cycle"]
    rows: list[list] = []

    def add(label: str, m: int, rate: float, snr_db: float | None) -> None:
        schedule = frame_schedule(replace(lb, m=m), rate)
        rows.append([label, m, lb.bandwidth_hz, snr_db, rate,
                     schedule.t_active_s * 1000.0, schedule.t_sleep_s * 1000.0,
                     schedule.duty_cycle])

    add("uncoded", lb.m, 1.0, None)
    for rate in (0.8, 0.5, 0.25):
        add("rate_sweep", lb.m, rate, None)
    if args.snr:
        table = embedded_table(lb.m, cfg.pb_target)
        for row in table.rows:
            if row.rate > 0:
                add("table_row", lb.m, row.rate, row.snr_db)
    if args.distance_mm is not None:
        plan = optimize(args.distance_mm / 1000.0, cfg)
        add("optimized", plan.coded_m, plan.coded_row.rate, plan.coded_row.snr_db)

    wide = active_duration(lb.m, lb.frame_bits, lb.bandwidth_hz).t_active_s
    narrow = active_duration(
        lb.m, lb.frame_bits, _COMPARISON_BANDWIDTH_HZ
    ).t_active_s
    ratio = wide / narrow
    footer = [f"# t_active_ratio_b{lb.bandwidth_hz:g}_over_b62500 = {ratio:.6g}"]
    _write_csv(args.out, header, rows, footer)
    digest = _config_digest(args.config, args.scenario)
    _write_manifest(args.out, args, digest, [args.out])
    print(f"{args.out}: {len(rows)} rows, active-time ratio {ratio:.6g}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_BAD_INPUT if exc.code not in (0, None) else EXIT_OK
    try:
        if args.command == "link-run":
            return _cmd_link_run(args)
        if args.command == "tables":
            return _cmd_tables(args)
        if args.command == "figure5":
            return _cmd_figure5(args)
        if args.command == "duty-cycle":
            return _cmd_duty_cycle(args)
    except (ConfigError, UnsupportedTableError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except InfeasibleFrameError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    raise AssertionError(f"unhandled command {args.command}")


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
