"""Command-line entry point.

::

    surfphase mesh gen --config cfg.json --out DIR
    surfphase solve --config cfg.json --out DIR [--init field.csv] [--seed N]
    surfphase spectrum --config cfg.json --field u.csv --out DIR [--k 4]
    surfphase experiment run NAME [--config cfg.json] --out DIR [--seed N]
    surfphase experiment rerun DIR/manifest.json --out DIR2
    surfphase export --config cfg.json [--field u.csv] --format vtk|obj --out DIR

The config file is an :class:`~surfphase.experiments.ExperimentConfig` in
JSON; for the non-experiment verbs only ``geometry``, ``well``,
``epsilons[0]``, ``seeds[0]`` and ``solver`` are read.  ``--threads`` caps
the BLAS/OpenMP pools (results are bit-identical at ``--threads 1``).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np
from threadpoolctl import threadpool_limits

from . import experiments as ex
from .errors import SurfPhaseError
from .mesh import write_obj
from .operators import assemble_operators, gauss_curvature, read_vertex_field, write_vertex_field
from .solver import solve_steady
from .stability import smallest_eigenpairs

log = logging.getLogger("surfphase")


def _load(args, experiment=None) -> ex.ExperimentConfig:
    if args.config:
        cfg = ex.ExperimentConfig.load(args.config)
        if experiment is not None:
            if cfg.experiment not in (None, experiment):
                raise SurfPhaseError(
                    f"config is for {cfg.experiment!r}, not {experiment!r}")
            cfg.experiment = experiment
    elif experiment is not None:
        cfg = ex.default_config(experiment)
    else:
        raise SurfPhaseError("--config is required for this command")
    if getattr(args, "seed", None) is not None:
        cfg.seeds = [args.seed + i for i in range(len(cfg.seeds))]
    return cfg


def _print(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True, default=ex._jsonable))


def cmd_mesh_gen(args) -> int:
    cfg = _load(args)
    mesh = ex.build_mesh(cfg.geometry)
    os.makedirs(args.out, exist_ok=True)
    curv = gauss_curvature(mesh)
    if mesh.vertices is not None:
        write_obj(os.path.join(args.out, "mesh.obj"), mesh)
    ex.write_vtk(os.path.join(args.out, "mesh.vtk"), mesh, {"K": curv.K})
    _print({"vertices": mesh.n_vertices, "faces": mesh.n_faces,
            "euler_characteristic": mesh.euler_characteristic(),
            "area": mesh.total_area(), "mean_edge_length": mesh.mean_edge_length(),
            "angle_defect_total": curv.total})
    return 0


def _initial_field(args, cfg, mesh, well):
    if args.init:
        return read_vertex_field(args.init, mesh.n_vertices)
    rng = np.random.default_rng(cfg.seeds[0])
    return rng.uniform(well.alpha, well.beta, mesh.n_vertices)


def cmd_solve(args) -> int:
    cfg = _load(args)
    mesh = ex.build_mesh(cfg.geometry)
    well = ex.build_well(cfg.well)
    eps = cfg.epsilons[0]
    ex.check_resolution(mesh, [eps])
    ops = assemble_operators(mesh)
    u, report = solve_steady(mesh, ops, well, ex._solver_config(cfg, eps, cfg.seeds[0]),
                             _initial_field(args, cfg, mesh, well))
    os.makedirs(args.out, exist_ok=True)
    write_vertex_field(os.path.join(args.out, "u.csv"), u)
    report.write_json(os.path.join(args.out, "report.json"))
    _print({"termination": report.termination, "steps": report.steps,
            "residual": report.residual_trace[-1], "energy": report.energy_trace[-1]})
    return 0 if report.termination == "converged" else 2


def cmd_spectrum(args) -> int:
    cfg = _load(args)
    mesh = ex.build_mesh(cfg.geometry)
    well = ex.build_well(cfg.well)
    ops = assemble_operators(mesh)
    u = read_vertex_field(args.field, mesh.n_vertices)
    rep = smallest_eigenpairs(mesh, ops, well, cfg.epsilons[0], u, k=args.k,
                              seed=cfg.seeds[0])
    os.makedirs(args.out, exist_ok=True)
    rep.write_json(os.path.join(args.out, "spectrum.json"))
    for j in range(args.k):
        rep.write_eigenvector_csv(os.path.join(args.out, f"eigenvector_{j}.csv"), j)
    _print(rep.to_dict())
    return 0


def cmd_experiment_run(args) -> int:
    cfg = _load(args, experiment=args.name)
    res = ex.run_experiment(cfg, args.out)
    _print({"experiment": res.experiment, "diagnostics": res.diagnostics,
            "notes": res.notes, "outputs": sorted(f"{n}.csv" for n in res.tables)})
    return 0


def cmd_experiment_rerun(args) -> int:
    same = ex.rerun_manifest(args.manifest, args.out)
    _print({"identical": same})
    return 0 if all(same.values()) else 3


def cmd_export(args) -> int:
    cfg = _load(args)
    mesh = ex.build_mesh(cfg.geometry)
    os.makedirs(args.out, exist_ok=True)
    fields = {}
    if args.field:
        fields["u"] = read_vertex_field(args.field, mesh.n_vertices)
    if args.format == "obj":
        write_obj(os.path.join(args.out, "mesh.obj"), mesh)
        if args.field:
            write_vertex_field(os.path.join(args.out, "u.csv"), fields["u"])
    else:
        ex.write_vtk(os.path.join(args.out, "mesh.vtk"), mesh, fields)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="surfphase", description=__doc__.split("\n")[0])
    p.add_argument("--threads", type=int, default=1, help="BLAS/OpenMP thread cap")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out=True):
        sp.add_argument("--config", help="experiment config JSON")
        sp.add_argument("--seed", type=int, help="base seed (overrides the config)")
        if out:
            sp.add_argument("--out", required=True, help="output directory")

    mesh = sub.add_parser("mesh").add_subparsers(dest="mesh_cmd", required=True)
    gen = mesh.add_parser("gen", help="generate the configured mesh")
    common(gen)
    gen.set_defaults(func=cmd_mesh_gen)

    solve = sub.add_parser("solve", help="steady state from seeded noise or --init")
    common(solve)
    solve.add_argument("--init", help="initial VertexField CSV")
    solve.set_defaults(func=cmd_solve)

    spec = sub.add_parser("spectrum", help="smallest eigenpairs at a field")
    common(spec)
    spec.add_argument("--field", required=True)
    spec.add_argument("--k", type=int, default=4)
    spec.set_defaults(func=cmd_spectrum)

    exp = sub.add_parser("experiment").add_subparsers(dest="exp_cmd", required=True)
    run = exp.add_parser("run", help="run a named experiment")
    run.add_argument("name", choices=ex.EXPERIMENTS)
    common(run)
    run.set_defaults(func=cmd_experiment_run)
    rerun = exp.add_parser("rerun", help="repeat a run from its manifest")
    rerun.add_argument("manifest")
    rerun.add_argument("--out", required=True)
    rerun.set_defaults(func=cmd_experiment_rerun)

    exp_ = sub.add_parser("export", help="write mesh (and field) as OBJ/CSV or VTK")
    common(exp_)
    exp_.add_argument("--field")
    exp_.add_argument("--format", choices=("vtk", "obj"), default="vtk")
    exp_.set_defaults(func=cmd_export)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 1
    try:
        with threadpool_limits(limits=args.threads):
            return args.func(args)
    except (SurfPhaseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
