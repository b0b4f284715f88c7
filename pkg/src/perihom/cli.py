"""Command-line front end.

    perihom solve|sweep|bounds|compare|verify --config FILE [options]

Exit status: 0 on success, 1 on a configuration or solver failure, 2 when a
verification or feasibility check fails.
"""

from __future__ import annotations

import argparse
import csv
import logging
import re
import sys
from pathlib import Path

import numpy as np

from . import averaging, bounds, oracle, reconstruction
from .cell_solver import CellProblem, SolverError, linear_tensor, solve
from .config import ConfigError, RunConfig, load_config
from .conductivity import NotProportionalError
from .geometry import volume_fraction
from .svg import line_plot

log = logging.getLogger("perihom")

EXIT_OK, EXIT_FAILURE, EXIT_CHECK = 0, 1, 2

CURVE_COLUMNS = ["avg_T", "R11", "R12", "R21", "R22", "L11", "L12", "L21", "L22", "mu1", "mu2"]


def fmt(x) -> str:
    return format(float(x), ".9g")


def write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])


def write_svg(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def read_curve(path) -> tuple[np.ndarray, np.ndarray]:
    """Average temperatures and conductivity tensors from a curve CSV."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ConfigError(f"{path}: empty curve file")
    try:
        T = np.array([float(r["avg_T"]) for r in rows])
        L = np.array([[float(r[f"L{i}{j}"]) for i in (1, 2) for j in (1, 2)] for r in rows]).reshape(-1, 2, 2)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{path}: not a curve file ({exc})") from None
    return T, L


# -- shared pipeline pieces -----------------------------------------------------


def _contrasts(cfg: RunConfig):
    geom = cfg.geometry()
    fam = cfg.family()
    return geom, fam, fam.contrasts([inc.contrast_id for inc in geom.inclusions])


def _setup(cfg: RunConfig) -> averaging.SweepSetup:
    geom, fam, _ = _contrasts(cfg)
    return averaging.prepare_sweep(geom, fam, cfg.flux_intensity, **cfg.solver_options())


def _shift_curve(cfg: RunConfig, setup) -> averaging.EffectiveCurve:
    shifts = None
    if cfg.shift_range is not None:
        shifts = np.linspace(cfg.shift_range[0], cfg.shift_range[1], cfg.samples)
    return averaging.resistance_curve(setup, shifts, cfg.samples, cfg.interpolation)


def _cells(cfg: RunConfig, override) -> np.ndarray | None:
    ranges = override if override is not None else cfg.cells
    if ranges is None:
        return None
    (a, b), (c, d) = ranges
    m1, m2 = np.meshgrid(np.arange(a, b + 1), np.arange(c, d + 1), indexing="ij")
    return np.stack([m1.ravel(), m2.ravel()], -1)


def _curve_rows(curve, fam, vf):
    mu1, mu2 = bounds.voigt_reuss(fam, vf, curve.avg_temperature)
    R = curve.resistance.reshape(-1, 4)
    L = curve.conductivity.reshape(-1, 4)
    return [[T, *R[i], *L[i], mu1[i], mu2[i]] for i, T in enumerate(curve.avg_temperature)]


def _curve_or_sweep(cfg: RunConfig, args):
    """Average temperatures and conductivity tensors, read from --curve or swept inline."""
    if args.curve:
        return read_curve(args.curve)
    curve = _shift_curve(cfg, _setup(cfg))
    return curve.avg_temperature, curve.conductivity


# -- commands ---------------------------------------------------------------------


def cmd_solve(cfg: RunConfig, args, out: Path) -> int:
    geom, fam, contrasts = _contrasts(cfg)
    opts = cfg.solver_options()
    sol = solve(CellProblem(geom, contrasts, cfg.flux_intensity, cfg.flux_angle, **opts))
    L, _ = linear_tensor(geom, contrasts, **opts)
    dx, dy = sol.period_jumps()
    summary = [
        ("inclusions", geom.n),
        ("volume_fraction", volume_fraction(geom)),
        ("order", sol.order),
        ("residual", sol.residual_norm),
        ("condition", sol.condition),
        ("d_x", dx),
        ("d_y", dy),
        ("L11", L[0, 0]),
        ("L12", L[0, 1]),
        ("L21", L[1, 0]),
        ("L22", L[1, 1]),
    ]
    for key, val in summary:
        print(f"{key:16s} {fmt(val)}")
    write_csv(out / "summary.csv", ["quantity", "value"], [[k, v] for k, v in summary])
    if args.grid:
        n = args.grid
        s = -0.5 + (np.arange(n) + 0.5) / n
        z = (s[:, None] + 1j * s[None, :]).ravel()
        region = geom.locate(z)
        u = sol.potential(z)
        g = sol.gradient(z)
        rows = [[z[i].real, z[i].imag, str(region[i]), u[i], g[i, 0], g[i, 1]] for i in range(z.size)]
        write_csv(out / "field.csv", ["x", "y", "region", "u", "u_x", "u_y"], rows)
    if sol.residual_norm > cfg.tol:
        print(f"residual {fmt(sol.residual_norm)} above tolerance {fmt(cfg.tol)}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, args, out: Path) -> int:
    geom, fam, _ = _contrasts(cfg)
    vf = volume_fraction(geom)
    setup = _setup(cfg)
    curve = _shift_curve(cfg, setup)
    write_csv(out / "curve.csv", CURVE_COLUMNS, _curve_rows(curve, fam, vf))
    print(f"shift sweep: {len(curve)} samples, <T> in [{fmt(curve.avg_temperature[0])}, "
          f"{fmt(curve.avg_temperature[-1])}]")
    status = EXIT_OK
    cell_curve = None
    if args.cells is not None or args.check_equivalence or cfg.cells is not None:
        cell_curve = averaging.cell_sweep_curve(setup, _cells(cfg, args.cells), cfg.interpolation)
        d0 = cell_curve.directions[0]
        rows = []
        mu1, mu2 = bounds.voigt_reuss(fam, vf, cell_curve.avg_temperature)
        cells = d0.cells[np.searchsorted(d0.avg_temperature, cell_curve.avg_temperature)]
        for i, T in enumerate(cell_curve.avg_temperature):
            rows.append([str(cells[i, 0]), str(cells[i, 1]), T, *cell_curve.resistance[i].ravel(),
                         *cell_curve.conductivity[i].ravel(), mu1[i], mu2[i]])
        write_csv(out / "cells.csv", ["m1", "m2"] + CURVE_COLUMNS, rows)
        print(f"cell sweep: {len(cell_curve)} samples")
        for angle, size, T in cell_curve.clusters:
            print(f"  clustered samples: {size} cells share <T> ~ {fmt(T)} (flux angle {angle:.4g})")
    if args.check_equivalence:
        rep = averaging.compare_procedures(cell_curve, curve)
        print(f"equivalence: max discrepancy {fmt(rep.max_discrepancy)} at <T> = {fmt(rep.worst_temperature)} "
              f"over {rep.compared} cell samples")
        if rep.max_discrepancy > cfg.equivalence_tol:
            print(f"equivalence discrepancy above {fmt(cfg.equivalence_tol)}", file=sys.stderr)
            status = EXIT_CHECK
    if args.svg:
        T = curve.avg_temperature
        R, L = curve.resistance, curve.conductivity
        write_svg(out / "resistance_diagonal.svg", line_plot(
            [("R11", T, R[:, 0, 0]), ("R22", T, R[:, 1, 1], True)],
            "Effective resistance, diagonal", "<T>", "R"))
        write_svg(out / "resistance_offdiagonal.svg", line_plot(
            [("R12", T, R[:, 0, 1]), ("R21", T, R[:, 1, 0], True)],
            "Effective resistance, off-diagonal", "<T>", "R"))
        write_svg(out / "conductivity_diagonal.svg", line_plot(
            [("L11", T, L[:, 0, 0]), ("L22", T, L[:, 1, 1], True)],
            "Effective conductivity, diagonal", "<T>", "Lambda"))
    return status


def cmd_bounds(cfg: RunConfig, args, out: Path) -> int:
    geom, fam, _ = _contrasts(cfg)
    T, L = _curve_or_sweep(cfg, args)
    rep = bounds.bounds_report(T, L, fam, volume_fraction(geom))
    rows = []
    for i, t in enumerate(T):
        h = rep.hs[i]
        ok = bool(rep.minors_ok[i].all() and rep.hs_ok[i].all())
        rows.append([t, rep.mu1[i], rep.mu2[i], *rep.minors[i], h.lower_lhs, h.lower_rhs, h.upper_lhs,
                     h.upper_rhs, "degenerate" if h.degenerate else "", "yes" if ok else "no"])
    header = ["avg_T", "mu1", "mu2", "m11", "m21", "m12", "m22", "hs1_lhs", "hs1_rhs", "hs2_lhs", "hs2_rhs",
              "hs_note", "feasible"]
    write_csv(out / "bounds.csv", header, rows)
    if args.svg:
        write_svg(out / "minors.svg", line_plot(
            [(name, T, rep.minors[:, j]) for j, name in enumerate(bounds.MINOR_NAMES)],
            "Elementary bounds: minors", "<T>", "m"))
        hs = np.array([[h.lower_lhs, h.lower_rhs, h.upper_lhs, h.upper_rhs] for h in rep.hs])
        write_svg(out / "hashin_shtrikman.svg", line_plot(
            [("lower lhs", T, hs[:, 0]), ("lower rhs", T, hs[:, 1], True),
             ("upper lhs", T, hs[:, 2]), ("upper rhs", T, hs[:, 3], True)],
            "Trace bounds", "<T>", "trace"))
    n_deg = int(rep.degenerate.sum())
    print(f"bounds: {T.size} samples, {n_deg} degenerate trace checks")
    if rep.feasible:
        print("all inequalities feasible")
        return EXIT_OK
    bad = rep.violations()
    print(f"{len(bad)} violations; worst samples:", file=sys.stderr)
    for line in bad[:10]:
        print("  " + line, file=sys.stderr)
    return EXIT_CHECK


def cmd_compare(cfg: RunConfig, args, out: Path) -> int:
    geom, fam, contrasts = _contrasts(cfg)
    T, L = _curve_or_sweep(cfg, args)
    ref, _ = linear_tensor(geom, contrasts, **cfg.solver_options())
    rep = bounds.proportional_compare(T, L, fam, ref)
    rows = [[t, *rep.delta_left[i].ravel(), *rep.delta_right[i].ravel()] for i, t in enumerate(T)]
    header = ["avg_T"] + [f"dl{i}{j}" for i in (1, 2) for j in (1, 2)] + [f"dr{i}{j}" for i in (1, 2) for j in (1, 2)]
    write_csv(out / "delta.csv", header, rows)
    worst, at = rep.max_diagonal()
    print(f"reference tensor: [[{fmt(ref[0, 0])}, {fmt(ref[0, 1])}], [{fmt(ref[1, 0])}, {fmt(ref[1, 1])}]]")
    print(f"max |delta| diagonal {fmt(worst)} at <T> = {fmt(at)}; off-diagonal {fmt(rep.max_off_diagonal())}")
    if args.svg:
        series = []
        for (i, j) in ((0, 0), (1, 1), (0, 1)):
            series.append((f"dl{i + 1}{j + 1}", T, np.abs(rep.delta_left[:, i, j])))
            series.append((f"dr{i + 1}{j + 1}", T, np.abs(rep.delta_right[:, i, j]), True))
        write_svg(out / "delta.svg", line_plot(series, "Relative gap to lambda(<T>) times the linear tensor",
                                               "<T>", "|delta|", logy=True))
    return EXIT_OK


def cmd_verify(cfg: RunConfig, args, out: Path) -> int:
    geom, fam, contrasts = _contrasts(cfg)
    opts = cfg.solver_options()
    n = args.grid or cfg.fd_grid
    checks = []  # (name, value, limit, ok)

    L, sols = linear_tensor(geom, contrasts, **opts)
    sol = solve(CellProblem(geom, contrasts, cfg.flux_intensity, cfg.flux_angle, **opts))
    checks.append(("interface residual", sol.residual_norm, cfg.interface_tol,
                   sol.residual_norm <= cfg.interface_tol))

    fd = oracle.fd_effective_tensor(geom, contrasts, n)
    dev = float(np.abs(fd - L).max())
    checks.append((f"FD tensor (n={n})", dev, cfg.fd_tensor_tol, dev <= cfg.fd_tensor_tol))

    field_dev = max(oracle.fd_field_compare(s, n, margin=cfg.field_margin) for s in sols)
    checks.append((f"FD gradient field (n={n})", field_dev, cfg.field_tol, field_dev <= cfg.field_tol))

    fld = reconstruction.NonlinearField(sol, fam)
    g1, g2 = cfg.residual_grids
    r1 = reconstruction.nonlinear_residual(fld, g1, cfg.residual_margin)
    r2 = reconstruction.nonlinear_residual(fld, g2, cfg.residual_margin)
    if r2 < 1e-10:
        checks.append((f"nonlinear residual (n={g2})", r2, 1e-10, True))
    else:
        ratio = r1 / r2
        lo, hi = cfg.residual_ratio
        checks.append((f"residual ratio {g1}/{g2}", ratio, hi, lo <= ratio <= hi))

    rows = [[name, val, lim, "pass" if ok else "FAIL"] for name, val, lim, ok in checks]
    write_csv(out / "verify.csv", ["check", "value", "limit", "status"], rows)
    print(f"{'check':32s} {'value':>14s} {'limit':>14s}  status")
    for name, val, lim, ok in checks:
        print(f"{name:32s} {fmt(val):>14s} {fmt(lim):>14s}  {'pass' if ok else 'FAIL'}")
    return EXIT_OK if all(c[3] for c in checks) else EXIT_CHECK


COMMANDS = {
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "bounds": cmd_bounds,
    "compare": cmd_compare,
    "verify": cmd_verify,
}


def _range_arg(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(v) for v in text.strip().split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'lo:hi', got {text!r}") from None
    if lo > hi:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return lo, hi


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="perihom", description=__doc__.split("\n\n")[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="config file, or the name of a bundled config")
    p.add_argument("--out", help="output directory (overrides the config)")
    p.add_argument("--svg", action="store_true", help="also write SVG plots")
    p.add_argument("--cells", nargs=2, type=_range_arg, metavar=("M1RANGE", "M2RANGE"),
                   help="cell sweep over m1 in lo:hi and m2 in lo:hi")
    p.add_argument("--check-equivalence", action="store_true",
                   help="compare the cell sweep with the shift sweep")
    p.add_argument("--grid", type=int, help="grid size for field output (solve) or the FD oracle (verify)")
    p.add_argument("--curve", help="reuse a curve CSV instead of sweeping (bounds, compare)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


RANGE_TOKEN = re.compile(r"^-\d+:-?\d+$")


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    # ranges such as -3:3 would otherwise be taken for option flags
    argv = [" " + a if RANGE_TOKEN.match(a) else a for a in argv]
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args.config)
        if args.svg:
            cfg = cfg.with_overrides(svg=True)
        args.svg = cfg.svg
        out = Path(args.out or cfg.output_dir)
        if args.grid is not None and args.grid < 2:
            raise ConfigError("--grid must be at least 2")
        return COMMANDS[args.command](cfg, args, out)
    except (ConfigError, NotProportionalError, SolverError, oracle.OracleError, averaging.QuadratureError,
            ValueError) as exc:
        print(f"perihom: error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
