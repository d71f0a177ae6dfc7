"""Command-line interface: ``nimgrating {validate,solve,laps,convergence,check}``.

Exit codes: 0 success, 1 I/O error, 2 invalid configuration or flags,
3 unsupported request, 4 numerical failure (singular system, Wood anomaly).
Every command that writes files also writes ``manifest.json`` listing each
output with its SHA-256.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, analysis, dtn, oracle, solver
from .assembly import assemble, max_truncation
from .exceptions import (
    DegenerateLayer,
    InsufficientSampling,
    InvalidConfig,
    MeshError,
    NimGratingError,
    SingularSystem,
    TruncationMismatch,
    WoodAnomaly,
)
from .mesh import build_mesh, default_resolution, refine
from .problem import derive_scalars, load_config, validate

EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_UNSUPPORTED, EXIT_NUMERIC = 0, 1, 2, 3, 4

log = logging.getLogger("nimgrating")


class Unsupported(Exception):
    """Request the tool cannot serve (exit code 3)."""


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclasses.dataclass
class RunManifest:
    command: str
    config_path: str
    config_sha256: str
    parameters: dict
    output_dir: str
    tool_version: str = __version__
    outputs: list = dataclasses.field(default_factory=list)

    def add(self, path: Path) -> None:
        self.outputs.append({"file": path.name, "sha256": sha256(path)})

    def write(self, out_dir: Path) -> Path:
        path = out_dir / "manifest.json"
        text = json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)
        path.write_text(text + "\n", encoding="utf-8", newline="\n")
        return path


# --- flag parsing -------------------------------------------------------------

def _mesh_flag(text: str) -> tuple[int, int, int]:
    try:
        parts = tuple(int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected nx,ny1,ny2 integers, got {text!r}") from None
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected three integers nx,ny1,ny2, got {text!r}")
    return parts


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _resolution(args, config, numerics):
    if args.mesh is not None:
        return args.mesh
    if numerics.nx is not None:
        nx = numerics.nx
        d = default_resolution(config, nx)
        return (nx, numerics.ny1 or d[1], numerics.ny2 or d[2])
    return default_resolution(config)


def _truncation(args, config, numerics, nx):
    if getattr(args, "modes", None) is not None:
        return args.modes
    if numerics.modes is not None:
        return numerics.modes
    scalars = derive_scalars(config)
    return min(dtn.default_truncation(scalars, config.period), max_truncation(nx))


def _load(args):
    """Config with the ``--sigma`` override applied, plus its numerics section."""
    config, numerics = load_config(args.config)
    if getattr(args, "sigma", None) is not None:
        config = config.replace(sigma=args.sigma)
    violations = validate(config)
    if violations:
        raise InvalidConfig(violations)
    return config, numerics


def _setup(args, config, numerics):
    res = _resolution(args, config, numerics)
    mesh = build_mesh(config, *res)
    N = _truncation(args, config, numerics, res[0])
    modes = dtn.build_mode_set(derive_scalars(config), config.period, N)
    return mesh, modes


def _manifest(args, command, parameters) -> tuple[RunManifest, Path]:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    m = RunManifest(
        command=command,
        config_path=str(args.config),
        config_sha256=sha256(args.config),
        parameters=parameters,
        output_dir=str(out),
    )
    return m, out


# --- commands -------------------------------------------------------------------

def cmd_validate(args) -> int:
    config, _ = load_config(args.config)
    if args.sigma is not None:
        config = config.replace(sigma=args.sigma)
    violations = validate(config)
    for v in violations:
        print(v)
    if not violations:
        print("valid")
    if args.out:
        m, out = _manifest(args, "validate", {"sigma": config.sigma})
        p = out / "violations.txt"
        p.write_text("".join(v + "\n" for v in violations), encoding="utf-8", newline="\n")
        m.add(p)
        m.write(out)
    return EXIT_OK if not violations else EXIT_INVALID


def cmd_solve(args) -> int:
    config, numerics = _load(args)
    mesh, modes = _setup(args, config, numerics)
    system = assemble(config, mesh, modes)
    field, rep = solver.solve(system)
    m, out = _manifest(args, "solve", {
        "sigma": config.sigma, "mesh": list(mesh.resolution), "modes": modes.truncation,
    })
    rayleigh = dtn.rayleigh_coefficients(modes, field.trace_gamma0(), system.scalars, config.h1)
    files = {
        "report.csv": lambda p: solver.write_report_csv(p, [rep]),
        "field.csv": lambda p: solver.write_field_csv(p, field),
        "efficiencies.csv": lambda p: dtn.write_efficiency_csv(p, modes, rayleigh, system.scalars),
    }
    for name, write in files.items():
        write(out / name)
        m.add(out / name)
    m.write(out)
    print(f"h1_norm {rep.h1_norm:.10g}")
    print(f"stability_ratio {rep.stability_ratio:.10g}")
    print(f"energy_residual {rep.energy_residual:.3e}")
    print(f"efficiency_sum {rep.efficiency_sum:.12g}")
    print(f"absorption {rep.absorption:.12g}")
    return EXIT_OK


def cmd_laps(args) -> int:
    config, numerics = _load(args)
    mesh, modes = _setup(args, config, numerics)
    res = solver.laps_continuation(config, mesh, modes, sigma0=args.sigma0, num_steps=args.steps)
    m, out = _manifest(args, "laps", {
        "sigma0": args.sigma0, "steps": args.steps,
        "mesh": list(mesh.resolution), "modes": modes.truncation,
    })
    p = out / "laps.csv"
    solver.write_rows(p, res.rows(), ["sigma", "delta", "limit_gap"])
    m.add(p)
    p = out / "reports.csv"
    solver.write_report_csv(p, list(res.reports) + [res.sigma0_report])
    m.add(p)
    m.write(out)
    for s, err in sorted(res.failures.items(), reverse=True):
        print(f"failed sigma={s!r}: {err}", file=sys.stderr)
    if res.sigma0_field is None:
        return EXIT_NUMERIC
    norm0 = res.sigma0_field.l2_norm()
    print(f"final limit_gap {res.limit_gap:.6e} (relative {res.limit_gap / norm0:.6e})")
    print(f"fitted rate {res.fitted_rate:.4f}")
    return EXIT_OK


def convergence_study(config, mesh, modes, levels: int):
    """Oracle L2 errors on ``levels`` uniformly refined meshes."""
    exact = oracle.solve_flat(config, modes)
    rows = []
    for level in range(levels):
        if level:
            mesh = refine(mesh)
        field, _ = solver.solve(assemble(config, mesh, modes))
        err = oracle.l2_error(field, exact)
        rate = float("nan") if not rows else float(np.log2(rows[-1]["l2_error"] / err))
        nx, ny1, ny2 = mesh.resolution
        rows.append({
            "level": level, "nx": nx, "ny1": ny1, "ny2": ny2,
            "h": config.period / nx, "l2_error": err, "rate": rate,
        })
    return rows


def fitted_rate(rows) -> float:
    h = np.array([r["h"] for r in rows])
    e = np.array([r["l2_error"] for r in rows])
    return float(np.polyfit(np.log(h), np.log(e), 1)[0])


def cmd_convergence(args) -> int:
    config, numerics = _load(args)
    if not config.profile.is_flat:
        raise Unsupported("oracle unavailable: convergence studies need a flat grating profile")
    if args.levels < 2:
        raise InvalidConfig(["--levels must be at least 2"])
    mesh, modes = _setup(args, config, numerics)
    rows = convergence_study(config, mesh, modes, args.levels)
    m, out = _manifest(args, "convergence", {
        "levels": args.levels, "mesh": list(mesh.resolution), "modes": modes.truncation,
    })
    p = out / "convergence.csv"
    solver.write_rows(p, rows)
    m.add(p)
    m.write(out)
    for r in rows:
        print(f"nx={r['nx']:4d} h={r['h']:.5f} l2_error={r['l2_error']:.6e} rate={r['rate']:.3f}")
    print(f"fitted rate {fitted_rate(rows):.4f}")
    return EXIT_OK


def cmd_check(args) -> int:
    config, numerics = _load(args)
    if args.adn:
        if any(x == 0 for x in args.xi1):
            raise InvalidConfig(["xi1 grid contains 0; the tangential frequency must be nonzero"])
        sigmas = args.sigmas if args.sigmas is not None else [1.0, 0.1, 0.01]
        x1 = analysis.default_x1_grid(config, args.x1_samples)
        samples = analysis.adn_sweep(config, x1, args.xi1, sigmas)
        m, out = _manifest(args, "check-adn", {
            "x1_samples": args.x1_samples, "xi1": args.xi1, "sigmas": sigmas,
        })
        p = out / "adn.csv"
        analysis.write_table(p, samples)
        m.add(p)
        m.write(out)
        for s in sigmas:
            margins = [a.independence_margin for a in samples if a.sigma == s]
            print(f"sigma={s!r} min independence_margin {min(margins):.6g}")
        return EXIT_OK

    sigmas = args.sigmas if args.sigmas is not None else [config.sigma]
    mesh, modes = _setup(args, config, numerics)
    rows = analysis.coercivity_sweep(config, sigmas, mesh, modes)
    worst = analysis.worst_case_K(assemble(config, mesh, modes))
    for r in rows:
        r["worst_case_K"] = worst
        r["worst_condition_value"] = analysis.coercivity_factor(config.replace(sigma=r["sigma"])) * worst
    m, out = _manifest(args, "check-coercivity", {
        "sigmas": sigmas, "mesh": list(mesh.resolution), "modes": modes.truncation,
    })
    p = out / "coercivity.csv"
    solver.write_rows(p, rows)
    m.add(p)
    m.write(out)
    for r in rows:
        print(f"sigma={r['sigma']!r} K={r['K']:.6g} condition_value={r['condition_value']:.6g} "
              f"condition_met={str(r['condition_met']).lower()} solved={str(r['solved']).lower()}")
    print(f"worst-case K {worst:.6g}")
    return EXIT_OK


# --- entry point -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nimgrating", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, out_default="nimgrating-out"):
        p.add_argument("config", help="INI configuration file")
        p.add_argument("--sigma", type=float, help="override the absorption parameter")
        p.add_argument("--out", default=out_default, help="output directory")

    def numerics(p):
        p.add_argument("--mesh", type=_mesh_flag, help="resolution nx,ny1,ny2")
        p.add_argument("--modes", type=int, help="mode truncation N")

    p = sub.add_parser("validate", help="check a configuration")
    common(p, out_default=None)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("solve", help="solve and export report, field and efficiencies")
    common(p)
    numerics(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("laps", help="limiting absorption continuation")
    common(p)
    numerics(p)
    p.add_argument("--sigma0", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=13)
    p.set_defaults(func=cmd_laps)

    p = sub.add_parser("convergence", help="error against the flat-interface oracle")
    common(p)
    numerics(p)
    p.add_argument("--levels", type=int, default=4)
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("check", help="ADN or coercivity diagnostics")
    common(p)
    numerics(p)
    which = p.add_mutually_exclusive_group(required=True)
    which.add_argument("--adn", action="store_true")
    which.add_argument("--coercivity", action="store_true")
    p.add_argument("--x1-samples", type=int, default=32)
    p.add_argument("--xi1", type=_float_list, default=[1.0, -1.0, 2.0, -2.0])
    p.add_argument("--sigmas", type=_float_list)
    p.set_defaults(func=cmd_check)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except Unsupported as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except (InvalidConfig, MeshError, TruncationMismatch, InsufficientSampling) as exc:
        for v in getattr(exc, "violations", [str(exc)]):
            print(f"invalid: {v}", file=sys.stderr)
        return EXIT_INVALID
    except (SingularSystem, WoodAnomaly, DegenerateLayer, NimGratingError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
