"""Command-line front end.

Subcommands: darkstate, tune, scan, table1, wmatrix. Options may come from a
JSON config file (``--config``); explicit flags override the file, which
overrides built-in defaults. Exit codes: 0 success, 1 numerical failure,
2 bad configuration or usage.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .darkstate import asymptotic_rate, binomial_dark_state, darkest_eigenvector, moment_dark_state
from .decay import decay_matrix, decay_matrix_quadrature, decay_rate
from .errors import GeometryError, SuperdarkError, UsageError
from .geometry import AtomArray, ChainSpec, Polarization, make_chain
from .interactions import coupling_matrix, nearest_neighbor_coupling
from .numerics import sphere_quadrature
from .spectrum import (
    SCAN_HALFWIDTH,
    SCAN_POINTS,
    TABLE1_REFERENCE,
    chain_spacing,
    find_minimum,
    predicted_parameters,
    scan_multi,
    scan_omega,
    table1,
)
from .tuning import build_hamiltonian, tune_frequencies, verify_eigenstate

log = logging.getLogger("superdark")

SCAN_HEADER = ["omega_over_u", "gamma_tilde_over_gamma", "eigenenergy"]
TABLE1_HEADER = ["n", "polarization", "ka2", "gamma_min", "gamma_noshift"]


def fmt(x) -> str:
    return f"{x:.6g}"


def full(x) -> str:
    return f"{x:.17g}"


@dataclass
class RunConfig:
    chain: int | None = None
    ka: float | None = None
    ka2: float | None = None
    positions: object = None  # path or inline list of 3-vectors
    polarization: str = "perp"
    omega_min: float | None = None
    omega_max: float | None = None
    points: int = SCAN_POINTS
    n_theta: int = 64
    n_phi: int = 64
    tol: float = 1e-8
    quadrature: bool = False
    csv: str | None = None
    summary: str | None = None
    json: str | None = None

    def validate(self) -> "RunConfig":
        has_chain = self.chain is not None
        has_positions = self.positions is not None
        if has_chain == has_positions:
            raise UsageError("give exactly one geometry source: --chain N or --positions FILE")
        if has_chain:
            if self.ka is not None and self.ka2 is not None:
                raise UsageError("give either --ka or --ka2, not both")
            if self.ka is None and self.ka2 is None:
                raise UsageError("a chain needs --ka or --ka2")
            if self.ka is None:
                if not self.ka2 > 0:
                    raise UsageError("ka2 must be positive")
                self.ka = math.sqrt(self.ka2)
            if not self.ka > 0:
                raise UsageError("ka must be positive")
        if int(self.points) < 1:
            raise UsageError("the scan grid needs at least one point")
        Polarization.parse(self.polarization)
        return self

    def array(self) -> AtomArray:
        pol = Polarization.parse(self.polarization)
        if self.chain is not None:
            return make_chain(ChainSpec(int(self.chain), float(self.ka)), pol)
        positions = _load_positions(self.positions)
        if pol.is_scalar and _collinear(positions):
            return AtomArray(positions, pol)
        return AtomArray(positions, Polarization.VECTOR3D)


def _collinear(positions) -> bool:
    try:
        return AtomArray(positions).is_collinear
    except GeometryError:
        return False


def _load_positions(source) -> np.ndarray:
    if isinstance(source, (list, tuple)):
        data = np.asarray(source, dtype=float)
    else:
        path = Path(source)
        if not path.exists():
            raise UsageError(f"positions file {path} not found")
        text = path.read_text()
        try:
            data = np.asarray(json.loads(text), dtype=float)
        except json.JSONDecodeError:
            data = np.loadtxt(path, delimiter="," if "," in text else None, ndmin=2)
    if data.ndim != 2 or data.shape[1] != 3:
        raise GeometryError(f"positions must be rows of 3 coordinates, got shape {data.shape}")
    return data


_CONFIG_SECTIONS = ("geometry", "scan", "quadrature", "output", "tolerances")


def load_config(path) -> dict:
    """Flatten a nested JSON config into ``RunConfig`` field names."""
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc}") from None
    flat = {}
    for key, value in raw.items():
        if key in _CONFIG_SECTIONS and isinstance(value, dict):
            flat.update(value)
        else:
            flat[key] = value
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(flat) - known)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    return flat


def build_config(args: argparse.Namespace) -> RunConfig:
    values = load_config(args.config) if getattr(args, "config", None) else {}
    for f in fields(RunConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            values[f.name] = flag
    return RunConfig(**values)


def _write_csv(path, header, rows):
    if path in (None, "-"):
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    log.info("wrote %s", path)


def _write_json(path, payload):
    text = json.dumps(payload, indent=2, default=_json_default)
    if path in (None, "-"):
        print(text)
    else:
        Path(path).write_text(text + "\n")
        log.info("wrote %s", path)


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _decay(cfg: RunConfig, array: AtomArray):
    if cfg.quadrature:
        return decay_matrix_quadrature(array, sphere_quadrature(cfg.n_theta, cfg.n_phi))
    return decay_matrix(array)


def cmd_darkstate(cfg: RunConfig) -> int:
    array = cfg.array()
    w = _decay(cfg, array)
    states = {}
    spacing = chain_spacing(array) if array.polarization.is_scalar else None
    if array.polarization.is_scalar:
        n = array.n_atoms
        if spacing is not None and n <= 16:
            states["binomial"] = binomial_dark_state(n, array.polarization)
        states["moment"] = moment_dark_state(array)
    vec, _ = darkest_eigenvector(w)
    states["eigenvector"] = vec
    report = {
        "n_atoms": array.n_atoms,
        "polarization": array.polarization.value,
        "states": {
            name: {"coefficients": s.coefficients, "gamma_over_gamma": decay_rate(w, s)}
            for name, s in states.items()
        },
    }
    print(f"N={array.n_atoms}  polarization={array.polarization.value}  kr={fmt(array.extent)}")
    print(f"{'state':<12} {'Gamma_N/Gamma':>14}  C")
    for name, entry in report["states"].items():
        coeffs = " ".join(f"{c:+.4f}" for c in entry["coefficients"])
        print(f"{name:<12} {fmt(entry['gamma_over_gamma']):>14}  {coeffs}")
    if spacing is not None:
        asym = asymptotic_rate(array.n_atoms, spacing, array.polarization)
        report["asymptotic_rate"] = asym
        print(f"{'asymptotic':<12} {fmt(asym):>14}")
    if cfg.json:
        _write_json(cfg.json, report)
    return 0


def _scalar_chain(cfg: RunConfig, what: str) -> AtomArray:
    array = cfg.array()
    if not array.polarization.is_scalar:
        raise UsageError(f"{what} needs a collinear array with --pol par or perp")
    return array


def cmd_tune(cfg: RunConfig) -> int:
    array = _scalar_chain(cfg, "tune")
    u = coupling_matrix(array)
    target = moment_dark_state(array)
    tuned = tune_frequencies(u, target)
    unit = nearest_neighbor_coupling(array)
    h = build_hamiltonian(u, tuned.shifts)
    residual = verify_eigenstate(h, target)
    report = {
        "n_atoms": array.n_atoms,
        "polarization": array.polarization.value,
        "nearest_neighbor_coupling": unit,
        "target": target.coefficients,
        "shifts_zero_sum": tuned.shifts,
        "shifts_edge_referenced": tuned.edge_referenced(),
        "eigenenergy": tuned.eigenenergy,
        "omega_over_u": tuned.omega_over_u(unit),
        "shift_parameters_over_u": tuned.middle_shifts_over_u(unit),
        "eigen_residual": residual,
    }
    print(f"N={array.n_atoms}  polarization={array.polarization.value}  U={fmt(unit)} (d^2 k^3)")
    print("omega_j (zero-sum):      " + " ".join(fmt(x) for x in tuned.shifts))
    print("omega_j (edge = 0):      " + " ".join(fmt(x) for x in tuned.edge_referenced()))
    print("omega_j/U (edge = 0):    " + " ".join(fmt(x / unit) for x in tuned.edge_referenced()))
    print(f"E = {fmt(tuned.eigenenergy)}   E/U = {fmt(tuned.eigenenergy / unit)}")
    print(f"Omega/U = {fmt(tuned.omega_over_u(unit))}")
    print(f"eigen-residual = {fmt(residual)}")
    if cfg.json:
        _write_json(cfg.json, report)
    return 0


def cmd_scan(cfg: RunConfig) -> int:
    array = _scalar_chain(cfg, "scan")
    w = _decay(cfg, array)
    if array.n_atoms >= 5:
        seed = predicted_parameters(array)
        print("seed Omega/U: " + " ".join(fmt(x) for x in seed))
        rep = scan_multi(array, w)
        _print_report(rep)
        if cfg.summary:
            _write_json(cfg.summary, rep.to_dict())
        return 0
    if array.n_atoms < 3:
        raise UsageError("scans need N >= 3 (N = 2 has no free shift parameter)")
    prediction = float(predicted_parameters(array)[0])
    lo = cfg.omega_min if cfg.omega_min is not None else prediction - SCAN_HALFWIDTH
    hi = cfg.omega_max if cfg.omega_max is not None else prediction + SCAN_HALFWIDTH
    points = int(cfg.points)
    grid = np.linspace(lo, hi, points) if points > 1 else np.array([lo])
    scan = scan_omega(array, grid, w)
    rows = [[full(p.omega_over_u), full(p.gamma_tilde_over_gamma), full(p.eigenenergy)] for p in scan]
    _write_csv(cfg.csv, SCAN_HEADER, rows)
    if points > 1 and hi > lo:
        rep = find_minimum(array, w, (lo, hi), grid_points=max(points, 3), tol=cfg.tol)
        if cfg.csv not in (None, "-"):
            _print_report(rep)
        if cfg.summary:
            _write_json(cfg.summary, rep.to_dict())
    return 0


def _print_report(rep):
    def show(x):
        return " ".join(fmt(v) for v in x) if isinstance(x, tuple) else fmt(x)

    print(f"minimum at Omega/U = {show(rep.omega_min_over_u)}")
    print(f"Gamma_tilde/Gamma  = {fmt(rep.gamma_min_over_gamma)}")
    print(f"tuned prediction   = {show(rep.asymptotic_prediction)}  (mismatch {fmt(rep.mismatch)})")
    if rep.fall_factor is not None:
        print(f"asymptotic rate    = {fmt(rep.asymptotic_rate)}  (fall factor {fmt(rep.fall_factor)})")


def cmd_table1(args: argparse.Namespace) -> int:
    ka2 = args.ka2_list or [0.01, 0.10, 1.00]
    ns = args.n_list or [3, 4]
    pols = args.pol_list or ["par", "perp"]
    rows = table1(ka2, ns, [Polarization.parse(p) for p in pols])
    reference = None
    if args.compare is not None:
        reference = _load_reference(args.compare) if args.compare else TABLE1_REFERENCE
    header = f"{'N':>2} {'pol':>5} {'(ka)^2':>7} {'Omega/U':>10} {'at minimum':>12} {'no shift':>12}"
    if reference is not None:
        header += f" {'ref min':>10} {'dev':>7} {'ref no':>10} {'dev':>7}"
    print(header)
    worst = 0.0
    for r in rows:
        line = (
            f"{r.n:>2} {r.polarization:>5} {r.ka2:>7.3g} {fmt(r.omega_min_over_u):>10}"
            f" {fmt(r.gamma_min):>12} {fmt(r.gamma_noshift):>12}"
        )
        if reference is not None:
            ref = reference.get((r.n, r.polarization, round(r.ka2, 6)))
            if ref is None:
                line += f" {'-':>10} {'-':>7} {'-':>10} {'-':>7}"
            else:
                d_min = abs(r.gamma_min / ref[0] - 1.0)
                d_no = abs(r.gamma_noshift / ref[1] - 1.0)
                worst = max(worst, d_min, d_no)
                line += f" {fmt(ref[0]):>10} {d_min:>7.2%} {fmt(ref[1]):>10} {d_no:>7.2%}"
        print(line)
    if reference is not None:
        print(f"largest relative deviation: {worst:.2%}")
    if args.csv:
        out = [[r.n, r.polarization, full(r.ka2), full(r.gamma_min), full(r.gamma_noshift)] for r in rows]
        _write_csv(args.csv, TABLE1_HEADER, out)
    return 0


def _load_reference(path) -> dict:
    """Reference table from a CSV with the table1 header."""
    ref = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            key = (int(row["n"]), Polarization.parse(row["polarization"]).value, round(float(row["ka2"]), 6))
            ref[key] = (float(row["gamma_min"]), float(row["gamma_noshift"]))
    return ref


def cmd_wmatrix(cfg: RunConfig, args) -> int:
    array = cfg.array()
    u = coupling_matrix(array).matrix
    w = _decay(cfg, array).matrix
    for label, m, path in (("U", u, args.u_out), ("W", w, args.w_out)):
        if path is None:
            print(f"# {label} ({m.shape[0]}x{m.shape[1]})")
        _write_matrix(path, m)
    return 0


def _write_matrix(path, m):
    rows = [[full(x) for x in row] for row in m]
    if path is None:
        csv.writer(sys.stdout, lineterminator="\n").writerows(rows)
    else:
        with open(path, "w", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows(rows)


def _geometry_options(p: argparse.ArgumentParser):
    g = p.add_argument_group("geometry")
    g.add_argument("--chain", type=int, metavar="N", help="equally spaced chain of N atoms")
    g.add_argument("--ka", type=float, help="nearest-neighbor spacing times k")
    g.add_argument("--ka2", type=float, help="(ka)^2, alternative to --ka")
    g.add_argument("--positions", metavar="FILE", help="JSON or text file of 3-vectors (units of 1/k)")
    g.add_argument("--pol", dest="polarization", help="par, perp or vector (default perp)")
    g.add_argument("--config", metavar="FILE", help="JSON config; flags take precedence")
    g.add_argument("--quadrature", action="store_const", const=True, default=None,
                   help="integrate W numerically instead of using closed forms")
    g.add_argument("--n-theta", dest="n_theta", type=int)
    g.add_argument("--n-phi", dest="n_phi", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="superdark", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("darkstate", help="optimal dark state and its decay rate")
    _geometry_options(p)
    p.add_argument("--json", metavar="FILE", help="also write a JSON report ('-' for stdout)")

    p = sub.add_parser("tune", help="frequency shifts making the dark state an eigenstate")
    _geometry_options(p)
    p.add_argument("--json", metavar="FILE")

    p = sub.add_parser("scan", help="gamma_tilde against Omega/U (CSV)")
    _geometry_options(p)
    p.add_argument("--omega-min", dest="omega_min", type=float)
    p.add_argument("--omega-max", dest="omega_max", type=float)
    p.add_argument("--grid", dest="points", type=int, help=f"grid points (default {SCAN_POINTS})")
    p.add_argument("--tol", type=float, help="minimizer tolerance in Omega/U")
    p.add_argument("--out", dest="csv", metavar="FILE", help="CSV path (default stdout)")
    p.add_argument("--summary", metavar="FILE", help="JSON minimum report")

    p = sub.add_parser("table1", help="minimized vs unshifted rates for N = 3, 4")
    p.add_argument("--ka2", dest="ka2_list", type=float, action="append")
    p.add_argument("--n", dest="n_list", type=int, action="append")
    p.add_argument("--pol", dest="pol_list", action="append")
    p.add_argument("--compare", nargs="?", const="", default=None, metavar="FILE",
                   help="show deviations from reference values (built-in unless FILE given)")
    p.add_argument("--out", dest="csv", metavar="FILE")

    p = sub.add_parser("wmatrix", help="dump coupling U and decay W matrices as CSV")
    _geometry_options(p)
    p.add_argument("--u-out", metavar="FILE")
    p.add_argument("--w-out", metavar="FILE")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "table1":
            return cmd_table1(args)
        cfg = build_config(args).validate()
        if args.command == "darkstate":
            return cmd_darkstate(cfg)
        if args.command == "tune":
            return cmd_tune(cfg)
        if args.command == "scan":
            return cmd_scan(cfg)
        return cmd_wmatrix(cfg, args)
    except SuperdarkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
