"""qderiv command-line front end.

Commands map one-to-one onto the application workflows:

    scan      bond-length energy scan (VQE / FCI / HF columns)
    optimize  minimum-energy configuration search
    response  dipole moment and polarizability
    ts        transition-state search for the collinear H + H2 exchange
    excited   particle-filtered excited-state energies and derivatives
    derivative  raw dE/d eta (and optionally d2E/d eta2) at the input geometry

Exit codes: 0 success, 1 computational failure (unconverged), 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .applications import (
    excited_derivative_curves,
    geometry_optimize,
    h2h_reaction,
    pes_scan,
    response_properties,
    solve_ground,
    transition_state_search,
)
from .derivatives import OptimizedState, derivative_report
from .mappings import BRAVYI_KITAEV, JORDAN_WIGNER
from .molecule import Molecule, parse_xyz
from .simulator import Engine
from .systems import h2_system, h3_system
from .vqe import SSVQEConfig

COMMANDS = ("scan", "optimize", "response", "ts", "excited", "derivative")

USAGE_EXIT, FAILURE_EXIT = 2, 1


@dataclass
class RunConfig:
    command: str
    molecule: str | None = None
    mapping: str = BRAVYI_KITAEV
    taper: bool = False
    depth: int = 1
    engine: str = "exact"
    shots: int | None = None
    seed: int = 0
    grid: tuple[float, float, int] | None = None
    method: str = "gradient"
    gamma: float | None = None
    ctol: float = 1e-3
    field_step: float = 1e-3
    out: str | None = None
    fmt: str = "csv"
    k_states: int = 4

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if self.engine == "sampled" and not self.shots:
            raise ValueError("--shots is required with --engine sampled")
        if self.grid is not None:
            start, stop, n = self.grid
            if not (start < stop and n >= 2):
                raise ValueError("--grid needs start < stop and at least 2 points")
        if self.depth < 1:
            raise ValueError("--depth must be >= 1")


def _parse_grid(text: str) -> tuple[float, float, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("grid must be START:STOP:NPOINTS")
    try:
        return float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _read_config_file(path: str) -> dict:
    values = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"bad config line {line!r} (expected key=value)")
            key, val = line.split("=", 1)
            values[key.strip().replace("-", "_")] = val.strip()
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qderiv",
        description="VQE energy derivatives for small molecules",
    )
    parser.add_argument("--version", action="version", version=f"qderiv {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")
    for name, help_text in [
        ("scan", "bond-length energy scan"),
        ("optimize", "minimum-energy configuration search"),
        ("response", "dipole moment and polarizability"),
        ("ts", "transition-state search (collinear H3)"),
        ("excited", "excited-state energies and derivatives"),
        ("derivative", "raw energy derivatives at the input geometry"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--molecule", metavar="PATH", help="XYZ file")
        p.add_argument("--config", metavar="PATH", help="key=value defaults file")
        p.add_argument("--grid", type=_parse_grid, metavar="A:B:N")
        p.add_argument("--mapping", choices=[JORDAN_WIGNER, BRAVYI_KITAEV],
                       default=None)
        p.add_argument("--taper", action="store_true", default=None)
        p.add_argument("--depth", type=int, default=None, metavar="D")
        p.add_argument("--engine", choices=["exact", "sampled"], default=None)
        p.add_argument("--shots", type=int, default=None, metavar="K")
        p.add_argument("--seed", type=int, default=None, metavar="S")
        p.add_argument("--method", choices=["gradient", "hessian"], default=None)
        p.add_argument("--gamma", type=float, default=None, metavar="G")
        p.add_argument("--ctol", type=float, default=None, metavar="T")
        p.add_argument("--field-step", type=float, default=None, metavar="H")
        p.add_argument("--k-states", type=int, default=None, metavar="K")
        p.add_argument("--order", type=int, choices=[1, 2], default=None)
        p.add_argument("--format", choices=["csv", "json"], default=None)
        p.add_argument("--out", metavar="PATH")
    return parser


_DEFAULTS = dict(
    mapping=BRAVYI_KITAEV, taper=False, depth=1, engine="exact", shots=None,
    seed=0, method="gradient", gamma=None, ctol=1e-3, field_step=1e-3,
    fmt="csv", k_states=4, order=1,
)


def _merge_config(args: argparse.Namespace) -> RunConfig:
    file_values = _read_config_file(args.config) if args.config else {}
    def pick(key, cast=None, flag_key=None):
        flag = getattr(args, flag_key or key, None)
        if flag is not None:
            return flag
        if key in file_values:
            raw = file_values[key]
            if cast is bool:
                return raw.lower() in ("1", "true", "yes")
            return cast(raw) if cast else raw
        return _DEFAULTS.get(key)

    grid = args.grid
    if grid is None and "grid" in file_values:
        grid = _parse_grid(file_values["grid"])
    return RunConfig(
        command=args.command,
        molecule=pick("molecule"),
        mapping=pick("mapping"),
        taper=bool(pick("taper", bool)),
        depth=int(pick("depth", int)),
        engine=pick("engine"),
        shots=pick("shots", int),
        seed=int(pick("seed", int)),
        grid=grid,
        method=pick("method"),
        gamma=pick("gamma", float),
        ctol=float(pick("ctol", float)),
        field_step=float(pick("field_step", float)),
        out=pick("out"),
        fmt=pick("fmt", None, "format"),
        k_states=int(pick("k_states", int)),
    )


def _load_molecule(cfg: RunConfig) -> Molecule:
    if not cfg.molecule:
        raise FileNotFoundError("a --molecule XYZ file is required")
    with open(cfg.molecule) as fh:
        return parse_xyz(fh.read())


def _engine(cfg: RunConfig) -> Engine:
    return Engine(cfg.engine, cfg.shots, cfg.seed)


def _grid_values(cfg: RunConfig, default=(0.2, 1.5, 27)) -> np.ndarray:
    start, stop, n = cfg.grid if cfg.grid else default
    return np.linspace(start, stop, n)


def _h2_bond_length(mol: Molecule) -> float:
    if len(mol.atoms) != 2:
        raise ValueError("expected a 2-atom molecule")
    return float(np.linalg.norm(mol.positions[1] - mol.positions[0]))


def _h3_bonds(mol: Molecule) -> tuple[float, float]:
    if len(mol.atoms) != 3:
        raise ValueError("expected a 3-atom molecule")
    pos = mol.positions
    spans = pos - pos[0]
    direction = spans[-1] / np.linalg.norm(spans[-1])
    cross = np.linalg.norm(np.cross(spans[1], direction))
    if cross > 1e-6:
        raise ValueError("transition-state search assumes a collinear chain")
    r1 = float(np.linalg.norm(pos[1] - pos[0]))
    r2 = float(np.linalg.norm(pos[2] - pos[1]))
    return r1, r2


def emit_report(rows: list[dict], fmt: str, path: str | None, config: RunConfig) -> None:
    """Write the table as CSV (fixed column order) or JSON with metadata.

    Numbers render with 12 significant digits so identical runs produce
    byte-identical files.
    """
    if not rows:
        raise ValueError("refusing to emit an empty table")
    columns = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)

    def render(value):
        if isinstance(value, float):
            return f"{value:.12g}"
        return "" if value is None else str(value)

    if fmt == "csv":
        lines = [",".join(columns)]
        for row in rows:
            lines.append(",".join(render(row.get(c)) for c in columns))
        text = "\n".join(lines) + "\n"
    else:
        payload = {
            "metadata": {
                "tool": "qderiv",
                "version": __version__,
                "command": config.command,
                "seed": config.seed,
                "engine": config.engine,
                "shots": config.shots,
                "mapping": config.mapping,
                "depth": config.depth,
                "taper": config.taper,
            },
            "rows": [
                {c: (float(render(v)) if isinstance(v, float) else v)
                 for c, v in row.items()}
                for row in rows
            ],
        }
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _run_scan(cfg: RunConfig) -> tuple[list[dict], str, int]:
    mol = _load_molecule(cfg)
    system = h2_system(cfg.mapping, taper=cfg.taper, depth=cfg.depth,
                       bond_length=_h2_bond_length(mol))
    rows = pes_scan(system, _grid_values(cfg), engine=_engine(cfg))
    ok = [r for r in rows if "E_vqe" in r]
    failed = len(rows) - len(ok)
    worst = max((r["abs_error"] for r in ok), default=float("nan"))
    summary = (
        f"scan: {len(ok)}/{len(rows)} points, max |E_vqe - E_fci| = {worst:.3e} Ha"
    )
    return rows, summary, FAILURE_EXIT if failed else 0


def _run_optimize(cfg: RunConfig) -> tuple[list[dict], str, int]:
    mol = _load_molecule(cfg)
    system = h2_system(cfg.mapping, taper=True, depth=cfg.depth,
                       bond_length=_h2_bond_length(mol))
    trajectory = geometry_optimize(
        system, method=cfg.method, gamma=cfg.gamma, ctol=cfg.ctol,
        engine=_engine(cfg),
    )
    rows = [
        {
            "iteration": i,
            **{f"q_{k}": v for k, v in p.coordinates.items()},
            "E": p.energy,
            "theta_0": float(p.theta[0]),
            **{f"delta_{k}": v for k, v in p.del_q.items()},
        }
        for i, p in enumerate(trajectory.points)
    ]
    final = trajectory.final
    summary = (
        f"optimize[{cfg.method}]: R = {final.coordinates['R']:.3f} A, "
        f"E = {final.energy:.3f} Ha, iterations = {trajectory.iterations}, "
        f"converged = {trajectory.converged}"
    )
    return rows, summary, 0 if trajectory.converged else FAILURE_EXIT


def _run_response(cfg: RunConfig) -> tuple[list[dict], str, int]:
    mol = _load_molecule(cfg)
    system = h2_system(cfg.mapping, depth=cfg.depth, with_field=True,
                       bond_length=_h2_bond_length(mol))
    grid = (
        _grid_values(cfg)
        if cfg.grid
        else [_h2_bond_length(mol)]
    )
    rows = []
    for r in grid:
        rep = response_properties(
            system, float(r), field_step=cfg.field_step, engine=_engine(cfg)
        )
        rows.append(
            {
                "R_angstrom": rep.bond_length,
                "mu_electronic_au": rep.mu_electronic,
                "mu_nuclear_au": rep.mu_nuclear,
                "mu_net_au": rep.mu_net,
                "mu_operator_au": rep.mu_operator,
                "alpha_from_energy_au": rep.alpha_from_energy,
                "alpha_from_dipole_au": rep.alpha_from_dipole,
                "field_step_au": rep.field_step,
            }
        )
    last = rows[-1]
    summary = (
        f"response: mu_net = {last['mu_net_au']:.2e} a.u., "
        f"alpha_zz = {last['alpha_from_energy_au']:.4f} a.u. at R = {last['R_angstrom']:.3f} A"
    )
    return rows, summary, 0


def _run_ts(cfg: RunConfig) -> tuple[list[dict], str, int]:
    mol = _load_molecule(cfg)
    r1, r2 = _h3_bonds(mol)
    system = h3_system(cfg.mapping if cfg.mapping == JORDAN_WIGNER else JORDAN_WIGNER,
                       depth=max(cfg.depth, 2))
    reaction = h2h_reaction(far=max(r1, r2), near=min(r1, r2))
    result = transition_state_search(
        reaction, system, gamma=cfg.gamma or 1.0, ctol=cfg.ctol, engine=_engine(cfg)
    )
    rows = []
    for m_index, traj in enumerate(result.trajectories):
        for i, p in enumerate(traj.points):
            rows.append(
                {
                    "mode": m_index,
                    "iteration": i,
                    **{f"q_{k}": v for k, v in p.coordinates.items()},
                    "E": p.energy,
                }
            )
    if result.found:
        a, b, c, _ = result.test
        geom = result.geometry
        summary = (
            f"ts: found at (R1, R2) = ({geom['R1']:.3f}, {geom['R2']:.3f}) A, "
            f"discriminant = {a * b - c * c:.3e}, "
            f"iterations = {result.stationary_iterations}"
        )
        return rows, summary, 0
    return rows, "ts: no saddle found along the given modes", FAILURE_EXIT


def _run_excited(cfg: RunConfig) -> tuple[list[dict], str, int]:
    mol = _load_molecule(cfg)
    system = h2_system(cfg.mapping, depth=max(cfg.depth, 2),
                       bond_length=_h2_bond_length(mol))
    grid = _grid_values(cfg, default=(0.24, 1.54, 14))
    ssvqe = SSVQEConfig(k=cfg.k_states)
    rows = excited_derivative_curves(system, grid, ssvqe, engine=_engine(cfg))
    failed = sum(1 for r in rows if "error" in r)
    summary = f"excited: {len(rows)} state rows across {len(grid)} grid points"
    return rows, summary, FAILURE_EXIT if failed else 0


def _run_derivative(cfg: RunConfig, order: int) -> tuple[list[dict], str, int]:
    mol = _load_molecule(cfg)
    if len(mol.atoms) == 2:
        system = h2_system(cfg.mapping, taper=cfg.taper, depth=cfg.depth,
                           bond_length=_h2_bond_length(mol))
    else:
        r1, r2 = _h3_bonds(mol)
        system = h3_system(depth=max(cfg.depth, 2), r1=r1, r2=r2)
    engine = _engine(cfg)
    state, result = solve_ground(system, engine=engine)
    report = derivative_report(
        system.family, system.parameters,
        OptimizedState(state.circuit, state.theta),
        names=system.coordinate_names,
        orders=(1, 2) if order == 2 else (1,),
        engine=engine,
    )
    rows = []
    for name, value in report.first.items():
        rows.append({"parameter": name, "order": 1, "value": value,
                     "units": f"Ha/{report.units[name]}", "step": report.steps[name]})
    for (ni, nj), value in report.second.items():
        rows.append({"parameter": f"{ni},{nj}", "order": 2, "value": value,
                     "units": "Ha/unit^2", "step": report.d_eta})
    grads = ", ".join(f"dE/d{n} = {v:+.6f}" for n, v in report.first.items())
    return rows, f"derivative: E = {result.energy:.6f} Ha, {grads}", 0


def execute(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE_EXIT if exc.code not in (0, None) else 0
    if not args.command:
        parser.print_usage(sys.stderr)
        return USAGE_EXIT

    try:
        cfg = _merge_config(args)
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"qderiv: {exc}\n")
        return USAGE_EXIT

    try:
        if cfg.command == "scan":
            rows, summary, code = _run_scan(cfg)
        elif cfg.command == "optimize":
            rows, summary, code = _run_optimize(cfg)
        elif cfg.command == "response":
            rows, summary, code = _run_response(cfg)
        elif cfg.command == "ts":
            rows, summary, code = _run_ts(cfg)
        elif cfg.command == "excited":
            rows, summary, code = _run_excited(cfg)
        else:
            rows, summary, code = _run_derivative(cfg, getattr(args, "order", 1) or 1)
    except (FileNotFoundError, ValueError) as exc:
        sys.stderr.write(f"qderiv: {exc}\n")
        return USAGE_EXIT
    except Exception as exc:
        sys.stderr.write(f"qderiv: computation failed: {type(exc).__name__}: {exc}\n")
        return FAILURE_EXIT

    try:
        if cfg.out or rows:
            emit_report(rows, cfg.fmt, cfg.out, cfg)
    except OSError as exc:
        sys.stderr.write(f"qderiv: cannot write output: {exc}\n")
        return FAILURE_EXIT
    print(summary)
    return code


def main() -> None:
    sys.exit(execute())
