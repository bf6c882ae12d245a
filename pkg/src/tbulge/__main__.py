"""Command-line interface for the T-bulge router transport engine."""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np
from pydantic import ValidationError

from . import __version__
from .config import ConfigError, RunConfig, load_run_config, parse_angle
from .core import (
    EvanescentChannelError,
    ParameterError,
    RouterParams,
    kinematics_from_energy,
    kinematics_from_k,
)
from .export import (
    PlotPanel,
    dumps,
    format_float,
    write_json,
    write_panel_csv,
    write_plot_script,
    write_table_csv,
    write_table_json,
)
from .oracle import (
    LatticeConfig,
    OracleError,
    OracleMode,
    compare,
    packet_lattice,
    propagate_wavepacket,
    solve_frequency_domain,
)
from .scattering import DegenerateChannelError, Port, ScatteringQuery, scatter
from .sweep import (
    AXIS_NAMES,
    DEFAULT_COUPLING_RANGE,
    SweepAxis,
    SweepError,
    SweepGrid,
    find_extrema,
    load_grid,
    max_transfer,
    run_sweep,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_KINEMATICS = 3
EXIT_VERIFY = 4

_SAMPLE_MAX_N = 8
# (coupling range, k margin from the band edges)
_FREQ_SAMPLING = ((0.0, 8.0), 0.1)
_PACKET_SAMPLING = ((1.0, 8.0), 0.6)
_SAMPLE_ATTEMPTS = 1000

_FIGURES = {
    "2": {
        "port": "a",
        "label": "the incidence-from-CRW-a coupling sweep",
        "panels": (
            PlotPanel("figure2a.csv", "T_a", "g_a", "g_b", "g_c", "T^a"),
            PlotPanel("figure2b.csv", "R_a", "g_a", "g_b", "g_c", "R^a"),
            PlotPanel("figure2c.csv", "T_ba", "g_b", "g_a", "g_c", "T_b^a"),
        ),
    },
    "3": {
        "port": "b",
        "label": "the incidence-from-CRW-b coupling sweep",
        "panels": (
            PlotPanel("figure3_b1.csv", "R_b", "g_b", "g_a", "g_c", "R^b"),
            PlotPanel("figure3_b2.csv", "T_ab", "g_b", "g_a", "g_c", "T_a^b"),
        ),
    },
}


def _parse_axis(text: str) -> SweepAxis:
    parts = text.split(":")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError(f"invalid axis {text!r}: expected NAME:MIN:MAX:COUNT")
    name, low, high, count = parts
    try:
        return SweepAxis(name=name, min=parse_angle(low), max=parse_angle(high), count=int(count))
    except (ValidationError, ValueError) as exc:
        raise argparse.ArgumentTypeError(f"invalid axis {text!r}: {exc}") from exc


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="RunConfig JSON file.")
    common.add_argument("--out", type=Path, default=Path("out"), help="Output directory.")
    common.add_argument("--threads", type=int, default=0, help="Worker threads (0 = auto).")
    common.add_argument("--seed", type=int, default=0, help="Seed for verification sampling.")
    common.add_argument(
        "--param",
        action="append",
        default=[],
        metavar="NAME=VALUE",
        help="Override one router parameter (repeatable).",
    )
    common.add_argument(
        "--log-level",
        default="WARNING",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Logging verbosity.",
    )

    parser = argparse.ArgumentParser(
        prog="tbulge", description="Single-photon scattering at a T-bulge quantum router."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    compute = commands.add_parser("compute", parents=[common], help="Evaluate one query.")
    energy_or_k = compute.add_mutually_exclusive_group()
    energy_or_k.add_argument("--k", type=parse_angle, help="CRW-a wavenumber (radians or pi/4).")
    energy_or_k.add_argument("--energy", type=float, help="Total eigenenergy.")
    compute.add_argument("--port", choices=["a", "b"], default="a")
    output = compute.add_mutually_exclusive_group()
    output.add_argument("--json", action="store_true", help="Print JSON.")
    output.add_argument("--csv", action="store_true", help="Print a CSV row.")
    compute.set_defaults(handler=cmd_compute)

    verify = commands.add_parser(
        "verify", parents=[common], help="Check against the lattice oracle."
    )
    verify.add_argument("--samples", type=int, default=200)
    verify.add_argument("--mode", choices=[mode.value for mode in OracleMode], default="freq")
    verify.set_defaults(handler=cmd_verify)

    for name, handler, summary in (
        ("sweep", cmd_sweep, "Evaluate a parameter grid."),
        ("extrema", cmd_extrema, "Locate extrema along one axis of a grid."),
    ):
        sub = commands.add_parser(name, parents=[common], help=summary)
        sub.add_argument(
            "--axis", type=_parse_axis, action="append", default=[], metavar="NAME:MIN:MAX:COUNT"
        )
        sub.add_argument("--port", choices=["a", "b", "both"])
        sub.add_argument("--k", type=parse_angle, help="CRW-a wavenumber for every point.")
        sub.set_defaults(handler=handler)
        if name == "sweep":
            sub.add_argument(
                "--max-transfer",
                action="store_true",
                help="Also report the refined suprema of both transfer rates.",
            )
        else:
            sub.add_argument("--coefficient", default="T_ba")
            sub.add_argument("--scan", required=True, choices=AXIS_NAMES)
            sub.add_argument("--kind", choices=["max", "min", "both"], default="max")

    figure = commands.add_parser("figure", parents=[common], help="Export figure datasets.")
    figure.add_argument("--figure", required=True)
    figure.add_argument("--k", type=parse_angle, help="CRW-a wavenumber (default pi/4).")
    figure.add_argument("--points", type=int, default=40, help="Points per coupling axis.")
    figure.set_defaults(handler=cmd_figure)
    return parser


def _kinematics(params: RouterParams, args: argparse.Namespace):
    if getattr(args, "energy", None) is not None:
        return kinematics_from_energy(params, args.energy)
    k_a = args.k if args.k is not None else math.pi / 4.0
    return kinematics_from_k(params, k_a)


def cmd_compute(args: argparse.Namespace, config: RunConfig) -> int:
    params = config.params
    kin = _kinematics(params, args)
    amps, coeffs = scatter(params, ScatteringQuery(Port(args.port), kin))
    if args.json:
        print(
            dumps(
                {
                    "params": params,
                    "kinematics": kin,
                    "amplitudes": amps.to_dict(),
                    "coefficients": coeffs.to_dict(),
                }
            )
        )
    elif args.csv:
        values = coeffs.values()
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(["k_a", "energy", *values, "residual"])
        writer.writerow(
            [
                format_float(kin.k_a),
                format_float(kin.energy),
                *(format_float(value) for value in values.values()),
                format_float(coeffs.conservation_residual),
            ]
        )
    else:
        print(f"E = {kin.energy:.12g}  k_a = {kin.k_a:.12g}  k_b = {kin.k_b:.12g}")
        for name, pair in amps.to_dict().items():
            if name != "port" and pair is not None:
                print(f"{name} = {complex(*pair):.12g}")
        for name, value in coeffs.values().items():
            print(f"{name} = {value:.12g}")
        print(f"residual = {coeffs.conservation_residual:.3e}")
    return EXIT_OK


def _sample_params(
    rng: np.random.Generator,
    base: RouterParams,
    k_range: tuple[float, float],
    coupling_range: tuple[float, float],
) -> tuple[RouterParams, float]:
    """Random couplings, N and k around the configured frequencies; redraws evanescent points."""

    for _ in range(_SAMPLE_ATTEMPTS):
        g_a, g_b, g_c = rng.uniform(*coupling_range, size=3)
        params = base.model_copy(
            update={
                "g_a": float(g_a),
                "g_b": float(g_b),
                "g_c": float(g_c),
                "n_junction": int(rng.integers(1, _SAMPLE_MAX_N + 1)),
            }
        )
        k_a = float(rng.uniform(*k_range))
        try:
            kinematics_from_k(params, k_a)
        except EvanescentChannelError:
            continue
        return params, k_a
    raise ConfigError("no propagating sample found: channel b is evanescent across the k range")


def cmd_verify(args: argparse.Namespace, config: RunConfig) -> int:
    mode = OracleMode(args.mode)
    if args.samples < 1:
        raise ConfigError("--samples must be ≥ 1")
    packet = mode is OracleMode.WAVEPACKET
    coupling_range, k_margin = _PACKET_SAMPLING if packet else _FREQ_SAMPLING
    k_range = (k_margin, math.pi - k_margin)
    solve = propagate_wavepacket if packet else solve_frequency_domain

    rng = np.random.default_rng(args.seed)
    passed = failed = 0
    worst = 0.0
    for index in range(args.samples):
        params, k_a = _sample_params(rng, config.params, k_range, coupling_range)
        kin = kinematics_from_k(params, k_a)
        if config.oracle is not None:
            lattice = config.oracle.model_copy(update={"mode": mode})
        elif packet:
            lattice = packet_lattice(params)
        else:
            lattice = LatticeConfig()
        ok = True
        for port in (Port.FROM_A, Port.FROM_B):
            query = ScatteringQuery(port, kin)
            _, closed = scatter(params, query)
            try:
                report = compare(params, kin, closed, solve(params, lattice, query))
            except (OracleError, ParameterError) as exc:
                logger.warning("Sample %s port %s: oracle failed: %s", index, port.value, exc)
                ok = False
                continue
            worst = max(worst, report.worst)
            ok = ok and report.passed
        if ok:
            passed += 1
        else:
            failed += 1
    print(
        f"mode={mode.value} samples={args.samples} "
        f"passed={passed} failed={failed} worst={worst:.3e}"
    )
    return EXIT_OK if failed == 0 else EXIT_VERIFY


def _grid_from_args(args: argparse.Namespace, config: RunConfig) -> SweepGrid:
    if args.axis:
        grid_data = {"base": config.params, "axes": tuple(args.axis)}
        if config.grid is not None:
            grid_data.update(k_a=config.grid.k_a, port=config.grid.port)
    elif config.grid is not None:
        grid_data = config.grid.model_dump()
    else:
        raise ConfigError("no grid: pass --axis NAME:MIN:MAX:COUNT or a config with a grid")
    if args.port is not None:
        grid_data["port"] = args.port
    if args.k is not None:
        grid_data["k_a"] = args.k
    return load_grid(grid_data)


def cmd_sweep(args: argparse.Namespace, config: RunConfig) -> int:
    grid = _grid_from_args(args, config)
    table = run_sweep(grid, args.threads)
    extra = None
    if args.max_transfer:
        extra = {"max_transfer": max_transfer(grid, args.threads).to_dict()}
    write_table_csv(table, args.out / "sweep.csv")
    write_table_json(table, args.out / "sweep.json", extra)
    print(f"rows={len(table)} skipped={table.skipped} out={args.out}")
    if extra:
        best = extra["max_transfer"]
        print(f"sup T_ba={best['T_ba']:.12g} sup T_ab={best['T_ab']:.12g}")
    return EXIT_OK


def cmd_extrema(args: argparse.Namespace, config: RunConfig) -> int:
    grid = _grid_from_args(args, config)
    table = run_sweep(grid, args.threads)
    report = find_extrema(table, args.coefficient, args.scan, kind=args.kind)
    write_json(report.to_dict(), args.out / "extrema.json")
    for group in report.groups:
        context = " ".join(f"{name}={value:g}" for name, value in group.context.items())
        if group.note:
            print(f"{context}: {group.note}")
        for extremum in group.extrema:
            print(
                f"{context}: {extremum.kind} {args.coefficient}={extremum.value:.12g} "
                f"at {args.scan}={extremum.location:.12g}"
            )
    return EXIT_OK


def cmd_figure(args: argparse.Namespace, config: RunConfig) -> int:
    figure = _FIGURES.get(str(args.figure).strip())
    if figure is None:
        raise ConfigError(f"unknown figure {args.figure!r} (choose 2 or 3)")
    if args.points < 2:
        raise ConfigError("--points must be ≥ 2")
    low, high = DEFAULT_COUPLING_RANGE
    grid = SweepGrid(
        base=config.params,
        k_a=args.k if args.k is not None else math.pi / 4.0,
        axes=tuple(
            SweepAxis(name=name, min=low, max=high, count=args.points)
            for name in ("g_a", "g_b", "g_c")
        ),
        port=figure["port"],
    )
    table = run_sweep(grid, args.threads)
    stem = f"figure{args.figure.strip()}"
    for panel in figure["panels"]:
        write_panel_csv(table, panel.coefficient, ("g_a", "g_b", "g_c"), args.out / panel.filename)
    write_table_csv(table, args.out / f"{stem}_table.csv")
    write_table_json(table, args.out / f"{stem}_table.json", {"figure": stem})
    write_plot_script(figure["panels"], args.out / f"plot_{stem}.py", figure["label"])
    print(f"{stem}: {len(table)} rows in {len(figure['panels'])} datasets under {args.out}")
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    )
    try:
        config = load_run_config(args.config, args.param)
        return args.handler(args, config)
    except (ConfigError, ParameterError, SweepError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EvanescentChannelError, DegenerateChannelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_KINEMATICS


if __name__ == "__main__":  # pragma: no cover - direct execution guard
    raise SystemExit(main())
