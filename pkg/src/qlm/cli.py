"""Command-line front end.

Subcommands: compute, catalog, optimal, validate, plotdata. Exit codes:
0 success, 1 validation failure, 2 input error, 3 solver failure. The
QLM_THREADS environment variable (default 1) pins the linear-algebra thread
count before the numerical stack is imported, which keeps outputs
byte-reproducible.
"""

from __future__ import annotations

import argparse
import json
import os
import sys


def _setup_threads():
    n = os.environ.get("QLM_THREADS", "1")
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                "NUMEXPR_NUM_THREADS"):
        os.environ.setdefault(var, n)


def _fmt(x):
    return format(float(x), ".17g")


def _emit_json(doc, path=None):
    text = json.dumps(doc, indent=2, sort_keys=False)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _parse_modes(spec):
    """Parse 'l,m,kind:amp;l,m,kind:amp' into a mode dictionary."""
    modes = {}
    if not spec:
        return modes
    for chunk in spec.split(";"):
        key, amp = chunk.split(":")
        ell, m, kind = (int(v) for v in key.split(","))
        modes[(ell, m, kind)] = float(amp)
    return modes


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_compute(args):
    import numpy as np
    from .datafile import RunConfig, load_surface_data
    from .errors import QlmError
    from .functionals import (EnergyWorkspace, TimeFunction, byly_mass,
                              hawking_mass, wang_yau_energy)

    config = RunConfig(weyl_tol=args.weyl_tol)
    loaded = load_surface_data(args.input)
    data = loaded.data
    report = {
        "input": args.input,
        "which": args.which,
        "grid": {"n_theta": data.grid.n_theta, "n_phi": data.grid.n_phi},
    }
    workspace = EnergyWorkspace(data.grid, weyl_tol=config.weyl_tol)
    if args.which == "hawking":
        report["value"] = hawking_mass(data)
    elif args.which == "byly":
        report["value"] = byly_mass(data, workspace=workspace)
        report["weyl_residual"] = workspace.graph_state(
            data.sigma, TimeFunction.zero(data.grid))["graph"].space.residual
    else:
        if loaded.tau is not None:
            tau = loaded.tau
        elif args.tau_zero:
            tau = TimeFunction.zero(data.grid)
        else:
            raise QlmError("wangyau requires a tau array in the file "
                           "or the --tau-zero flag")
        breakdown = wang_yau_energy(data, tau, workspace=workspace)
        report["value"] = breakdown.energy
        report["reference_term"] = breakdown.reference_term
        report["physical_term"] = breakdown.physical_term
        report["theta_sup"] = float(np.max(np.abs(breakdown.theta.values)))
        report["weyl_residual"] = workspace.graph_state(
            data.sigma, tau)["graph"].space.residual
    _emit_json(report, args.out)
    return 0


def cmd_catalog(args):
    from .catalog import (MinkowskiSurfaceSpec, SphericalSphereSpec,
                          minkowski_surface_data, schwarzschild_sphere_data)
    from .datafile import save_surface_data
    from .errors import QlmError
    from .grid import sphere_grid

    grid = sphere_grid(args.resolution, 2 * args.resolution)
    refs = {}
    if args.kind == "schwarzschild":
        sphere = schwarzschild_sphere_data(
            SphericalSphereSpec(args.m, args.r), grid)
        if sphere.data is None:
            raise QlmError("horizon sphere has |H| = 0; no usable data")
        data, tau = sphere.data, None
        refs = {k: float(v) for k, v in sphere.refs.items()}
        meta = {"kind": "schwarzschild", "m": args.m, "r": args.r}
    else:
        if args.kind == "lightcone":
            spec = MinkowskiSurfaceSpec(
                "lightcone_cut",
                log_modes=_parse_modes(args.modes) or {(args.bump_l, 0, 0): args.bump})
            meta = {"kind": args.kind,
                    "log_modes": {f"{k[0]},{k[1]},{k[2]}": v
                                  for k, v in spec.log_modes.items()}}
        elif args.kind == "flat":
            axes = tuple(float(v) for v in args.axes.split(","))
            spec = MinkowskiSurfaceSpec("flat_r3", axes=axes)
            meta = {"kind": args.kind, "axes": list(axes)}
        elif args.kind == "boosted":
            spec = MinkowskiSurfaceSpec("boosted_sphere", radius=args.r,
                                        velocity=args.v)
            meta = {"kind": args.kind, "r": args.r, "v": args.v}
        else:
            spec = MinkowskiSurfaceSpec("graph", radius=args.r,
                                        tau_modes=_parse_modes(args.modes))
            meta = {"kind": args.kind, "r": args.r,
                    "tau_modes": {f"{k[0]},{k[1]},{k[2]}": v
                                  for k, v in spec.tau_modes.items()}}
        surface = minkowski_surface_data(spec, grid)
        data, tau = surface.data, surface.tau_bar
        refs = {"wang_yau_energy_at_tau_bar": 0.0, "hawking_upper_bound": 0.0}
    save_surface_data(args.out, data, tau=tau, metadata=meta)
    with open(args.out + ".refs.json", "w", encoding="utf-8") as fh:
        json.dump(refs, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {args.out}")
    return 0


def cmd_optimal(args):
    import numpy as np
    from .datafile import RunConfig, load_surface_data
    from .functionals import EnergyWorkspace, TimeFunction
    from .optimal import OptimalSolveOptions, hessian_check, solve_optimal

    RunConfig(weyl_tol=args.weyl_tol, optimal_tol=args.tol)
    loaded = load_surface_data(args.input)
    data = loaded.data
    grid = data.grid
    if args.tau0_y10 is not None:
        tau0 = TimeFunction.from_modes(grid, {(1, 0, 0): args.tau0_y10})
    elif loaded.tau is not None:
        tau0 = loaded.tau
    else:
        tau0 = TimeFunction.zero(grid)
    workspace = EnergyWorkspace(grid, weyl_tol=args.weyl_tol)
    result = solve_optimal(
        data, tau0,
        OptimalSolveOptions(tol=args.tol, l_max_tau=args.l_max_tau,
                            weyl_tol=args.weyl_tol, max_iter=args.max_iter),
        workspace=workspace)
    if not result.converged:
        print(f"solver failure: optimizer hit the iteration cap at residual "
              f"{result.el_residual_norm:.3e} (tol {args.tol:.1e})",
              file=sys.stderr)
        return 3
    report = {
        "input": args.input,
        "converged": result.converged,
        "iterations": result.iterations,
        "energy": result.energy,
        "el_residual_norm": result.el_residual_norm,
        "tau_star_sup": float(np.max(np.abs(result.tau_star.tau.values))),
        "tau_star": [float(_fmt(v)) for v in result.tau_star.tau.values.ravel()],
    }
    if args.hessian:
        rep = hessian_check(data, result.tau_star, n_modes=args.hessian,
                            workspace=workspace,
                            residual_tol=max(1e-5, 10 * args.tol))
        report["hessian_eigenvalues"] = [float(v) for v in rep.eigenvalues]
        report["hessian_min_eigenvalue"] = rep.min_eigenvalue
    _emit_json(report, args.out)
    return 0


def cmd_validate(args):
    from .validate import check_ids, results_to_csv, run_validation

    only = None
    if args.only:
        only = [s.strip() for s in args.only.split(",") if s.strip()]
        known = set(check_ids())
        unknown = [s for s in only if s not in known]
        if unknown:
            print(f"unknown check ids: {', '.join(unknown)}", file=sys.stderr)
            return 2
    results = run_validation(resolution=args.resolution, only=only,
                             seed=args.seed)
    csv_text = results_to_csv(results)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(csv_text)
    print(csv_text, end="")
    failed = [r for r in results if not r.passed]
    for r in failed:
        print(f"FAIL {r.check_id}: |{r.actual:.6g} - {r.expected:.6g}| "
              f"> {r.tolerance:.3g}", file=sys.stderr)
    return 1 if failed else 0


def cmd_plotdata(args):
    import numpy as np

    os.makedirs(args.outdir, exist_ok=True)
    if args.kind == "mass-curves":
        from .catalog import SphericalSphereSpec, schwarzschild_sphere_data
        from .functionals import EnergyWorkspace, byly_mass, hawking_mass
        from .grid import sphere_grid

        lo, hi, num = _parse_range(args.r_range)
        grid = sphere_grid(args.resolution, 2 * args.resolution)
        workspace = EnergyWorkspace(grid)
        rows = ["r,hawking,byly"]
        for r in np.linspace(lo, hi, num):
            sphere = schwarzschild_sphere_data(
                SphericalSphereSpec(args.m, float(r)), grid)
            rows.append(f"{_fmt(r)},{_fmt(hawking_mass(sphere.data))},"
                        f"{_fmt(byly_mass(sphere.data, workspace=workspace))}")
        path = os.path.join(args.outdir, "mass_curves.csv")
    elif args.kind == "shi-tam":
        from .radial import e_of_r, shi_tam_flow

        u0 = 1.0 / np.sqrt(1.0 - 2.0 * args.E / args.r0)
        state = shi_tam_flow(args.r0, u0, r_max=max(2048.0, 2.5 * args.r_far))
        table = e_of_r(state, np.geomspace(args.r0, args.r_far, args.samples))
        rows = ["r,e"] + [f"{_fmt(r)},{_fmt(e)}" for r, e in table]
        path = os.path.join(args.outdir, "shi_tam_e_of_r.csv")
    else:  # stability
        from .datafile import load_surface_data
        from .functionals import (EnergyWorkspace, TimeFunction,
                                  wang_yau_energy)
        from .optimal import OptimalSolveOptions, solve_optimal

        loaded = load_surface_data(args.input)
        data = loaded.data
        grid = data.grid
        workspace = EnergyWorkspace(grid, weyl_tol=1e-11)
        tau0 = loaded.tau or TimeFunction.zero(grid)
        result = solve_optimal(data, tau0,
                               OptimalSolveOptions(tol=args.tol),
                               workspace=workspace)
        direction = TimeFunction.from_modes(grid, {(2, 0, 0): 1.0})
        rows = ["s,energy"]
        for s in np.linspace(-args.span, args.span, args.samples):
            tau = TimeFunction(result.tau_star.tau + direction.tau * float(s))
            e = wang_yau_energy(data, tau, workspace=workspace).energy
            rows.append(f"{_fmt(s)},{_fmt(e)}")
        path = os.path.join(args.outdir, "stability_curve.csv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(rows) + "\n")
    print(f"wrote {path}")
    return 0


def _parse_range(text):
    parts = text.split(":")
    lo, hi = float(parts[0]), float(parts[1])
    num = int(parts[2]) if len(parts) > 2 else 32
    return lo, hi, num


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="qlm",
        description="Quasi-local mass/energy of spacelike 2-surfaces")
    parser.add_argument("--version", action="version",
                        version="%(prog)s 0.1.0")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compute", help="evaluate a mass/energy on a data file")
    p.add_argument("input", help="surface-data JSON file")
    p.add_argument("--which", required=True,
                   choices=["hawking", "byly", "wangyau"])
    p.add_argument("--tau-zero", action="store_true",
                   help="use tau = 0 when the file has no tau array")
    p.add_argument("--weyl-tol", type=float, default=1e-8)
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("catalog", help="generate exact surface data")
    p.add_argument("kind", choices=["schwarzschild", "lightcone", "flat",
                                    "boosted", "graph"])
    p.add_argument("--m", type=float, default=1.0, help="mass parameter")
    p.add_argument("--r", type=float, default=4.0, help="areal radius")
    p.add_argument("--v", type=float, default=0.3, help="boost velocity")
    p.add_argument("--bump", type=float, default=0.1,
                   help="zonal log-amplitude of a light-cone cut")
    p.add_argument("--bump-l", type=int, default=2)
    p.add_argument("--axes", default="1,1,1.2", help="flat ellipsoid axes")
    p.add_argument("--modes", default="",
                   help="harmonic modes 'l,m,kind:amp;...' (graph/lightcone)")
    p.add_argument("--resolution", type=int, default=48)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("optimal", help="solve for a critical time function")
    p.add_argument("input")
    p.add_argument("--tau0-y10", type=float, default=None,
                   help="start from this amplitude of the first zonal mode")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--l-max-tau", type=int, default=16)
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--weyl-tol", type=float, default=1e-10)
    p.add_argument("--hessian", type=int, default=0,
                   help="append a reduced-Hessian spectrum of this many modes")
    p.add_argument("--out")
    p.set_defaults(func=cmd_optimal)

    p = sub.add_parser("validate", help="run the acceptance checks")
    p.add_argument("--resolution", type=int, default=48)
    p.add_argument("--only", help="comma-separated check ids")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", help="CSV output path")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("plotdata", help="emit CSV curves for external plotting")
    p.add_argument("kind", choices=["mass-curves", "shi-tam", "stability"])
    p.add_argument("--m", type=float, default=1.0)
    p.add_argument("--r-range", default="2.5:20", help="lo:hi[:num]")
    p.add_argument("--r0", type=float, default=4.0)
    p.add_argument("--E", type=float, default=1.0)
    p.add_argument("--r-far", type=float, default=1000.0)
    p.add_argument("--samples", type=int, default=33)
    p.add_argument("--span", type=float, default=0.05)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--input", help="surface-data file (stability)")
    p.add_argument("--resolution", type=int, default=48)
    p.add_argument("--outdir", default=".")
    p.set_defaults(func=cmd_plotdata)
    return parser


def main(argv=None):
    _setup_threads()
    parser = build_parser()
    args = parser.parse_args(argv)
    from .errors import (ConvergenceError, DomainError, GenerationError,
                         GeometryError, GridMismatchError, InputFileError,
                         InvalidFieldError, InvalidMetricError,
                         PreconditionError, QlmError)
    try:
        return args.func(args)
    except (InputFileError, DomainError, GenerationError, PreconditionError,
            InvalidFieldError, InvalidMetricError, GridMismatchError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except (ConvergenceError, GeometryError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        if isinstance(exc, ConvergenceError) and exc.diagnostics:
            safe = {k: v for k, v in exc.diagnostics.items()
                    if isinstance(v, (int, float, str))}
            print(f"diagnostics: {json.dumps(safe, sort_keys=True)}",
                  file=sys.stderr)
        return 3
    except QlmError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
