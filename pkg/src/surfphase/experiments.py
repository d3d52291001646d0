"""Reproducible experiment pipelines.

Each ``run_*`` function takes an :class:`ExperimentConfig` and returns an
:class:`ExperimentResult` holding one or more :class:`ResultTable` objects.
:func:`run_experiment` dispatches on ``config.experiment``, writes the
tables as CSV and records a :class:`RunManifest` next to them;
:func:`rerun_manifest` repeats a run from its manifest and compares bytes.

Rows are sorted by ``(epsilon, seed)`` (then grid size) before emission and
floats are written with ``repr``, so identical inputs give identical files.
"""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field
from importlib import metadata

import numpy as np

from .errors import (AccuracyError, InvalidArgumentError, ResolutionError,
                     TheoremViolationError)
from .mesh import (TriangleMesh, gen_flat_torus, gen_icosphere, gen_revolution_mesh,
                   graded_nodes)
from .operators import assemble_operators, level_set_length
from .revolution import (ProfileCurve, check_second_variation_identity,
                         closed_geodesic_parallels, dumbbell_profile, mode_spectrum,
                         axisymmetric_energy, solve_axisymmetric_steady, sphere_profile)
from .solver import SolverConfig, energy, newton_polish, norms, solve_steady
from .stability import instability_witness, smallest_eigenpairs
from .wells import DoubleWell, polynomial_well, quartic_well, surface_tension

__all__ = [
    "EXPERIMENTS",
    "ExperimentConfig",
    "ResultTable",
    "ExperimentResult",
    "RunManifest",
    "default_config",
    "build_mesh",
    "build_well",
    "check_resolution",
    "run_sphere_instability",
    "run_dumbbell_minimizer",
    "run_gamma_sweep",
    "run_torus_degenerate",
    "run_identity_check",
    "run_oracle_compare",
    "run_experiment",
    "rerun_manifest",
    "write_vtk",
]

logger = logging.getLogger(__name__)

EXPERIMENTS = ("sphere-instability", "dumbbell-minimizer", "gamma-sweep",
               "torus-degenerate", "oracle-compare", "identity-check")

GEOMETRIES = ("icosphere", "sphere-revolution", "dumbbell", "flat-torus")


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:  # running from a source tree
        return "0+unknown"


# -- configuration ---------------------------------------------------------

@dataclass
class ExperimentConfig:
    """Everything a run depends on.

    ``geometry`` is a dict with a ``kind`` from ``GEOMETRIES`` plus its
    parameters; ``well`` is ``{"kind": "quartic"}`` or
    ``{"kind": "polynomial", "coeffs": [...], "alpha": a, "beta": b}``
    (coefficients highest degree first).  ``solver`` and ``options`` hold
    per-experiment knobs; unknown keys are rejected by the runners that
    read them only through ``.get`` with documented defaults.
    """

    experiment: str | None
    geometry: dict
    epsilons: list
    well: dict = field(default_factory=lambda: {"kind": "quartic"})
    seeds: list = field(default_factory=lambda: [0])
    out_dir: str | None = None
    solver: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment is not None and self.experiment not in EXPERIMENTS:
            raise InvalidArgumentError(f"unknown experiment {self.experiment!r}")
        if self.geometry.get("kind") not in GEOMETRIES:
            raise InvalidArgumentError(f"geometry kind must be one of {GEOMETRIES}")
        self.epsilons = [float(e) for e in self.epsilons]
        if not self.epsilons or any(not e > 0 for e in self.epsilons):
            raise InvalidArgumentError("need at least one positive epsilon")
        self.seeds = [int(s) for s in self.seeds]
        if any(not 0 <= s < 2**64 for s in self.seeds):
            raise InvalidArgumentError("seeds must be 64-bit unsigned integers")

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("out_dir")
        return d

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"),
                          ensure_ascii=False)

    def digest(self) -> str:
        """SHA-256 of the canonical JSON (the output directory is not hashed)."""
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {"experiment", "geometry", "epsilons", "well", "seeds", "out_dir",
                 "solver", "options"}
        extra = set(d) - known
        if extra:
            raise InvalidArgumentError(f"unknown config keys {sorted(extra)}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            d = self.to_dict()
            d["out_dir"] = self.out_dir
            json.dump(d, fh, indent=2, sort_keys=True)
            fh.write("\n")


def default_config(experiment: str) -> ExperimentConfig:
    """The configuration used by the acceptance suite for ``experiment``."""
    dumbbell = {"kind": "dumbbell", "d": 0.5, "n_t": 256, "n_theta": 192}
    presets = {
        "sphere-instability": dict(
            geometry={"kind": "icosphere", "subdivisions": 5},
            epsilons=[0.25], seeds=list(range(20)),
            solver={"dt": 0.5, "tol_residual": 1e-6, "max_steps": 20000},
            options={"sweep_subdivisions": 4}),
        "dumbbell-minimizer": dict(
            geometry={"kind": "dumbbell", "d": 0.5, "n_t": 160, "n_theta": 128},
            epsilons=[0.1], solver={"dt": 0.5, "tol_residual": 1e-4}),
        "gamma-sweep": dict(geometry=dumbbell, epsilons=[0.2, 0.1, 0.05],
                            solver={"dt": 0.5, "tol_residual": 1e-4}),
        "torus-degenerate": dict(
            geometry={"kind": "flat-torus", "side_length": 1.0, "n": 8192, "n_y": 17,
                      "grading": {"width": 0.005, "strength": 300.0}},
            epsilons=[0.08]),
        "identity-check": dict(geometry={"kind": "dumbbell", "d": 0.5}, epsilons=[0.1],
                               options={"grid_sizes": [512, 1024, 2048]}),
        "oracle-compare": dict(geometry={"kind": "dumbbell", "d": 0.5}, epsilons=[0.1],
                               options={"mesh_sizes": [[96, 72], [160, 128], [256, 192]]}),
    }
    if experiment not in presets:
        raise InvalidArgumentError(f"unknown experiment {experiment!r}")
    return ExperimentConfig(experiment=experiment, **presets[experiment])


def build_well(spec: dict) -> DoubleWell:
    kind = spec.get("kind", "quartic")
    if kind == "quartic":
        w = quartic_well()
    elif kind == "polynomial":
        w = polynomial_well(spec["coeffs"], spec["alpha"], spec["beta"])
    else:
        raise InvalidArgumentError(f"unknown well kind {kind!r}")
    if "scale" in spec:
        w = w.scaled(float(spec["scale"]))
    return w


def profile_of(geometry: dict) -> ProfileCurve:
    kind = geometry["kind"]
    if kind in ("icosphere", "sphere-revolution"):
        return sphere_profile()
    if kind == "dumbbell":
        return dumbbell_profile(float(geometry.get("d", 0.5)))
    raise InvalidArgumentError(f"geometry {kind!r} is not a surface of revolution")


def build_mesh(geometry: dict) -> TriangleMesh:
    kind = geometry["kind"]
    if kind == "icosphere":
        return gen_icosphere(int(geometry.get("subdivisions", 4)))
    if kind in ("sphere-revolution", "dumbbell"):
        return gen_revolution_mesh(profile_of(geometry), int(geometry.get("n_t", 128)),
                                   int(geometry.get("n_theta", 128)))
    if kind == "flat-torus":
        L = float(geometry.get("side_length", 1.0))
        n = int(geometry.get("n", 64))
        grading = geometry.get("grading")
        xn = None
        if grading:
            centers = grading.get("centers", [0.25 * L, 0.75 * L])
            xn = graded_nodes(L, n, centers, float(grading["width"]),
                              float(grading["strength"]))
        return gen_flat_torus(L, n, geometry.get("n_y"), x_nodes=xn)
    raise InvalidArgumentError(f"unknown geometry kind {kind!r}")


def check_resolution(mesh: TriangleMesh, epsilons) -> float:
    """Reject any ``epsilon < 2 * mean edge length``; return the mean edge length."""
    h = mesh.mean_edge_length()
    bad = [e for e in epsilons if e < 2.0 * h]
    if bad:
        raise ResolutionError(
            f"epsilon {bad} below 2 x mean edge length {2 * h:.4g}; refine the mesh")
    return h


def _solver_config(config: ExperimentConfig, eps: float, seed: int = 0) -> SolverConfig:
    allowed = {"dt", "tol_residual", "max_steps", "scheme", "polish_tol", "kappa",
               "plateau_window", "plateau_rtol", "noise"}
    extra = set(config.solver) - allowed
    if extra:
        raise InvalidArgumentError(f"unknown solver keys {sorted(extra)}")
    return SolverConfig(epsilon=eps, seed=seed, **config.solver)


# -- tables ----------------------------------------------------------------

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


@dataclass
class ResultTable:
    """Named rows with a fixed column order."""

    name: str
    columns: tuple
    rows: list = field(default_factory=list)

    def add(self, **row) -> None:
        unknown = set(row) - set(self.columns)
        if unknown:
            raise InvalidArgumentError(f"{self.name}: unknown columns {sorted(unknown)}")
        self.rows.append({c: row.get(c) for c in self.columns})

    def sorted_rows(self) -> list:
        def key(r):
            return tuple(-math.inf if r.get(k) is None else r[k]
                         for k in ("epsilon", "seed", "n") if k in self.columns)
        return sorted(self.rows, key=key)

    def column(self, name):
        return [r[name] for r in self.sorted_rows()]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(self.columns)
            for r in self.sorted_rows():
                wr.writerow([_fmt(r[c]) for c in self.columns])


@dataclass
class ExperimentResult:
    experiment: str
    tables: dict
    diagnostics: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def table(self) -> ResultTable:
        """The first (main) table."""
        return next(iter(self.tables.values()))


@dataclass
class RunManifest:
    experiment: str
    config: dict
    digest: str
    seeds: list
    artifact_version: str
    started: str
    finished: str
    outputs: list
    diagnostics: dict = field(default_factory=dict)

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True, default=_jsonable)
            fh.write("\n")

    @classmethod
    def read(cls, path) -> "RunManifest":
        with open(path, encoding="utf-8") as fh:
            return cls(**json.load(fh))

    def verify_outputs(self, root) -> list:
        """Names of listed outputs that are missing or have a different byte length."""
        bad = []
        for entry in self.outputs:
            p = os.path.join(root, entry["path"])
            if not os.path.exists(p) or os.path.getsize(p) != entry["bytes"]:
                bad.append(entry["path"])
        return bad


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialise {type(x).__name__}")


# -- helpers shared by the runners -----------------------------------------

def _is_constant(u, tol=1e-9) -> bool:
    return float(np.ptp(u)) <= tol


def _well_endpoint(u, well: DoubleWell, tol: float):
    """``alpha`` or ``beta`` if ``u`` is that constant within ``tol``, else None."""
    for c in (well.alpha, well.beta):
        if np.max(np.abs(u - c)) <= tol:
            return c
    return None


def _step(t, t0, well, tol=1e-9):
    """``alpha`` below ``t0``, ``beta`` above, the midpoint within ``tol`` of it."""
    t = np.asarray(t, dtype=float)
    out = np.where(t < t0, well.alpha, well.beta)
    return np.where(np.abs(t - t0) <= tol, well.midpoint, out)


def _oracle_state(profile, well, eps, n=2048, order=4):
    return solve_axisymmetric_steady(profile, well, eps, n=n, order=order,
                                     init=lambda t: _step(t, 0.5 * profile.T, well))


def _neck(profile: ProfileCurve):
    necks = [g for g in closed_geodesic_parallels(profile) if g.K < 0]
    if not necks:
        raise InvalidArgumentError("profile has no negatively curved geodesic parallel")
    return min(necks, key=lambda g: abs(g.t - 0.5 * profile.T))


def _sweep_trend(values) -> str:
    if len(values) < 2:
        return "not-applicable"
    return "monotone" if all(b < a for a, b in zip(values, values[1:])) else "non-monotone"


# -- sphere ----------------------------------------------------------------

def run_sphere_instability(config: ExperimentConfig) -> ExperimentResult:
    """Equatorial critical points and random-start minimisations on a round sphere.

    For each epsilon the axisymmetric oracle (odd step start) gives the
    equatorial state; it is sampled onto the icosphere through
    ``t = arccos z`` and Newton-polished there.  Its smallest eigenvalues
    and the ``|grad u|`` witness are tabulated against the oracle's
    predicted witness value.  Independently, each seed starts the flow
    from uniform noise in ``[alpha, beta]`` (on the icosphere of
    ``options["sweep_subdivisions"]``, default the same mesh) and the end
    state is classified.  A nonconstant state that is not unstable raises
    :class:`TheoremViolationError`.
    """
    geo = config.geometry
    if geo["kind"] != "icosphere":
        raise InvalidArgumentError("sphere-instability needs geometry kind 'icosphere'")
    well = build_well(config.well)
    mesh = build_mesh(geo)
    check_resolution(mesh, config.epsilons)
    ops = assemble_operators(mesh)
    sub_sweep = config.options.get("sweep_subdivisions", geo.get("subdivisions", 4))
    if sub_sweep == geo.get("subdivisions", 4):
        mesh_s, ops_s = mesh, ops
    else:
        mesh_s = gen_icosphere(int(sub_sweep))
        check_resolution(mesh_s, config.epsilons)
        ops_s = assemble_operators(mesh_s)
    prof = sphere_profile()
    z = mesh.vertices[:, 2] / np.linalg.norm(mesh.vertices, axis=1)
    t_vertex = np.arccos(np.clip(z, -1.0, 1.0))
    tol_end = float(config.options.get("endpoint_tol", 1e-6))

    crit = ResultTable("critical_points", (
        "epsilon", "nonconstant", "residual", "mu1", "mu2", "mu3", "classification",
        "witness_Q", "witness_norm2", "oracle_witness_Q", "witness_rel_diff",
        "witness_classification", "energy", "note"))
    sweep = ResultTable("random_starts", (
        "epsilon", "seed", "termination", "steps", "perturbations", "residual",
        "endpoint", "constant", "energy"))
    notes = []
    for eps in config.epsilons:
        state = _oracle_state(prof, well, eps)
        if state.is_constant or np.ptp(state.u) < 1e-6:
            crit.add(epsilon=eps, nonconstant=False,
                     note="oracle Newton from step data collapsed to a constant; "
                          "no nonconstant critical point found")
        else:
            ident = check_second_variation_identity(prof, state)
            u, trace = newton_polish(mesh, ops, well, eps, state(t_vertex))
            if _is_constant(u, 1e-6):
                crit.add(epsilon=eps, nonconstant=False, residual=trace[-1],
                         note="mesh Newton collapsed to a constant")
            else:
                spec = smallest_eigenpairs(mesh, ops, well, eps, u, k=4,
                                           seed=config.seeds[0])
                wit = instability_witness(mesh, ops, well, eps, u, tau=spec.tau)
                if spec.classification != "unstable":
                    raise TheoremViolationError(
                        f"epsilon={eps}: nonconstant critical point classified "
                        f"{spec.classification} (mu1={spec.mu1:.3e})")
                rel = abs(wit.Q - ident.witness_value) / abs(ident.witness_value)
                crit.add(epsilon=eps, nonconstant=True, residual=trace[-1], mu1=spec.mu1,
                         mu2=float(spec.eigenvalues[1]), mu3=float(spec.eigenvalues[2]),
                         classification=spec.classification, witness_Q=wit.Q,
                         witness_norm2=wit.norm2, oracle_witness_Q=ident.witness_value,
                         witness_rel_diff=rel, witness_classification=wit.classification,
                         energy=energy(mesh, ops, well, eps, u), note="")
        for seed in config.seeds:
            u0 = np.random.default_rng(seed).uniform(well.alpha, well.beta, mesh_s.n_vertices)
            u, rep = solve_steady(mesh_s, ops_s, well, _solver_config(config, eps, seed), u0)
            end = _well_endpoint(u, well, tol_end)
            if end is None and rep.termination == "converged":
                s = smallest_eigenpairs(mesh_s, ops_s, well, eps, u, k=1, seed=seed)
                if s.classification != "unstable":
                    raise TheoremViolationError(
                        f"epsilon={eps}, seed={seed}: nonconstant end state is {s.classification}")
                notes.append(f"epsilon={eps} seed={seed}: flow stopped at an unstable state")
            sweep.add(epsilon=eps, seed=seed, termination=rep.termination, steps=rep.steps,
                      perturbations=rep.perturbations, residual=rep.residual_trace[-1],
                      endpoint=end, constant=end is not None,
                      energy=rep.energy_trace[-1])
    ends = sweep.column("constant")
    diag = {"random_starts": len(ends), "constant_endpoints": int(sum(ends))}
    return ExperimentResult("sphere-instability",
                            {"critical_points": crit, "random_starts": sweep}, diag, notes)


# -- dumbbell --------------------------------------------------------------

def _dumbbell_solve(config, mesh, ops, well, eps, seed):
    t_vertex = mesh.info["vertex_t"]
    prof = profile_of(config.geometry)
    u0 = _step(t_vertex, _neck(prof).t, well)
    return solve_steady(mesh, ops, well, _solver_config(config, eps, seed), u0)


def _step_reference(mesh, well, t_neck):
    return _step(mesh.info["vertex_t"], t_neck, well)


def run_dumbbell_minimizer(config: ExperimentConfig) -> ExperimentResult:
    """Steady states from step data on a dumbbell of revolution.

    Per epsilon: flow plus Newton polish from the step across the neck,
    smallest eigenvalues, the ``(alpha + beta) / 2`` contour (its length
    against the neck parallel and its largest ``|t - t_neck|``), ``L1`` and
    ``H1`` distances to the step function ``u0`` (neck-ring vertices take
    the midpoint), and the ``L_inf`` gap to the oracle sampled at each
    vertex's ``t``.  A neck state with ``mu1 < -tau`` raises
    :class:`TheoremViolationError`.
    """
    geo = config.geometry
    if geo["kind"] != "dumbbell":
        raise InvalidArgumentError("dumbbell-minimizer needs geometry kind 'dumbbell'")
    well = build_well(config.well)
    prof = profile_of(geo)
    mesh = build_mesh(geo)
    check_resolution(mesh, config.epsilons)
    ops = assemble_operators(mesh)
    neck = _neck(prof)
    u_ref = _step_reference(mesh, well, neck.t)
    tv = mesh.info["vertex_t"]
    level = well.midpoint
    seed = config.seeds[0]
    tab = ResultTable("dumbbell", (
        "epsilon", "termination", "steps", "residual", "nonconstant", "mu1", "mu2",
        "classification", "oracle_mu_min", "contour_length", "neck_length",
        "length_rel_err", "contour_max_dt", "L1_to_step", "H1_to_step", "oracle_Linf",
        "energy"))
    for eps in config.epsilons:
        u, rep = _dumbbell_solve(config, mesh, ops, well, eps, seed)
        spec = smallest_eigenpairs(mesh, ops, well, eps, u, k=2, seed=seed)
        nonconst = not _is_constant(u, 1e-6)
        if nonconst and spec.mu1 < -spec.tau:
            raise TheoremViolationError(f"epsilon={eps}: neck state has mu1={spec.mu1:.3e}")
        contour = level_set_length(mesh, u, level)
        if contour.empty:
            max_dt = float("nan")
        else:
            max_dt = float(max(np.max(np.abs(tc - neck.t)) for tc in contour.interpolate(tv)))
        l1, _, h1 = norms(mesh, ops, u, u_ref)
        state = _oracle_state(prof, well, eps)
        state2 = solve_axisymmetric_steady(prof, well, eps, n=2048, relax_time=0.0,
                                           init=state(np.linspace(0.0, prof.T, 2049)))
        ms = mode_spectrum(prof, state2, m_max=int(config.options.get("m_max", 8)), k=1)
        tab.add(epsilon=eps, termination=rep.termination, steps=rep.steps,
                residual=rep.residual_trace[-1], nonconstant=nonconst, mu1=spec.mu1,
                mu2=float(spec.eigenvalues[1]), classification=spec.classification,
                oracle_mu_min=ms.mu_min, contour_length=contour.total_length,
                neck_length=neck.length,
                length_rel_err=abs(contour.total_length - neck.length) / neck.length,
                contour_max_dt=max_dt, L1_to_step=l1, H1_to_step=h1,
                oracle_Linf=float(np.max(np.abs(u - state(tv)))),
                energy=rep.energy_trace[-1])
    l1 = [r["L1_to_step"] for r in sorted(tab.rows, key=lambda r: -r["epsilon"])]
    return ExperimentResult("dumbbell-minimizer", {"dumbbell": tab},
                            {"L1_trend": _sweep_trend(l1)})


def run_gamma_sweep(config: ExperimentConfig) -> ExperimentResult:
    """Energies ``E_eps(u_eps)`` against ``sigma * |neck|`` for decreasing epsilon.

    The epsilon list must be strictly decreasing.  Diagnostics report
    whether the ratio and the ``L1`` distance to the step decrease
    monotonically (``not-applicable`` for a single epsilon) and the final
    ratio's distance from 1.
    """
    geo = config.geometry
    if geo["kind"] != "dumbbell":
        raise InvalidArgumentError(
            "gamma-sweep needs a dumbbell: with non-negative curvature there is no stable "
            "nonconstant state to track")
    eps_list = config.epsilons
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise InvalidArgumentError("gamma-sweep epsilons must be strictly decreasing")
    well = build_well(config.well)
    prof = profile_of(geo)
    mesh = build_mesh(geo)
    check_resolution(mesh, eps_list)
    ops = assemble_operators(mesh)
    neck = _neck(prof)
    sigma = surface_tension(well)
    u_ref = _step_reference(mesh, well, neck.t)
    tab = ResultTable("gamma_sweep", (
        "epsilon", "termination", "residual", "energy", "sigma", "neck_length", "ratio",
        "L1_to_step", "mu1"))
    ratios, l1s = [], []
    for eps in eps_list:
        u, rep = _dumbbell_solve(config, mesh, ops, well, eps, config.seeds[0])
        E = energy(mesh, ops, well, eps, u)
        l1 = norms(mesh, ops, u, u_ref)[0]
        spec = smallest_eigenpairs(mesh, ops, well, eps, u, k=1, seed=config.seeds[0])
        ratio = E / (sigma * neck.length)
        ratios.append(ratio)
        l1s.append(l1)
        tab.add(epsilon=eps, termination=rep.termination, residual=rep.residual_trace[-1],
                energy=E, sigma=sigma, neck_length=neck.length, ratio=ratio,
                L1_to_step=l1, mu1=spec.mu1)
    diag = {"ratio_trend": _sweep_trend(ratios), "L1_trend": _sweep_trend(l1s),
            "final_ratio_gap": abs(ratios[-1] - 1.0), "sigma": sigma}
    if config.well.get("kind", "quartic") == "quartic" and "scale" not in config.well:
        diag["sigma_closed_form_gap"] = abs(sigma - 2.0 * math.sqrt(2.0) / 3.0)
    return ExperimentResult("gamma-sweep", {"gamma_sweep": tab}, diag)


# -- flat torus ------------------------------------------------------------

def run_torus_degenerate(config: ExperimentConfig) -> ExperimentResult:
    """One-dimensional critical points extended along ``y`` on the flat torus.

    Newton starts from two ``tanh`` layers at ``x = 0`` and ``x = L/2``.  For
    ``epsilon >= L / (2 pi)`` it collapses to a constant, which the row
    notes.  Otherwise the row gives the smallest eigenvalues (``mu1``, and
    the near-zero translation eigenvalue ``mu_translation``), the witness
    value ``Q(|grad u|)`` and whether ``|Q| <= tau |v|_M^2``.
    """
    geo = config.geometry
    if geo["kind"] != "flat-torus":
        raise InvalidArgumentError("torus-degenerate needs geometry kind 'flat-torus'")
    well = build_well(config.well)
    mesh = build_mesh(geo)
    check_resolution(mesh, config.epsilons)
    ops = assemble_operators(mesh)
    L = float(geo.get("side_length", 1.0))
    x = mesh.periodic_identification["chart"][:, 0]
    tab = ResultTable("torus", (
        "epsilon", "nonconstant", "residual", "mu1", "mu2", "mu_translation",
        "classification", "witness_Q", "witness_band", "witness_degenerate",
        "witness_classification", "note"))
    width = 1.0 / math.sqrt(0.5 * max(well.d2W(well.alpha), well.d2W(well.beta)))
    for eps in config.epsilons:
        s = np.sin(2.0 * np.pi * x / L) * L / (2.0 * np.pi)
        u0 = well.midpoint + 0.5 * (well.beta - well.alpha) * np.tanh(s / (width * eps))
        u, trace = newton_polish(mesh, ops, well, eps, u0)
        if _is_constant(u, 1e-6):
            tab.add(epsilon=eps, nonconstant=False, residual=trace[-1],
                    note="Newton collapsed to a constant; no nonconstant 1D critical point")
            continue
        spec = smallest_eigenpairs(mesh, ops, well, eps, u, k=3, seed=config.seeds[0])
        wit = instability_witness(mesh, ops, well, eps, u, tau=spec.tau)
        band = wit.tau * wit.norm2
        tab.add(epsilon=eps, nonconstant=True, residual=trace[-1], mu1=spec.mu1,
                mu2=float(spec.eigenvalues[1]),
                mu_translation=float(spec.eigenvalues[np.argmin(np.abs(spec.eigenvalues))]),
                classification=spec.classification, witness_Q=wit.Q, witness_band=band,
                witness_degenerate=abs(wit.Q) <= band,
                witness_classification=wit.classification,
                note="" if eps < L / (2 * np.pi) else "epsilon above L/(2 pi)")
    return ExperimentResult("torus-degenerate", {"torus": tab})


# -- oracle ----------------------------------------------------------------

def run_identity_check(config: ExperimentConfig) -> ExperimentResult:
    """Both sides of the reduced second-variation identity across grid doublings.

    Uses the fourth-order oracle solve.  Constant states are listed with a
    ``degenerate`` note and excluded from the order estimate; an observed
    order below ``options["min_order"]`` (default 1.8) raises
    :class:`AccuracyError`.
    """
    prof = profile_of(config.geometry)
    well = build_well(config.well)
    sizes = sorted(int(n) for n in config.options.get("grid_sizes", [512, 1024, 2048]))
    min_order = float(config.options.get("min_order", 1.8))
    tab = ResultTable("identity", ("epsilon", "n", "lhs", "rhs", "relative_gap",
                                   "observed_order", "note"))
    orders = []
    for eps in config.epsilons:
        for n in sizes:
            if eps < 4.0 * prof.T / n:
                raise ResolutionError(f"epsilon={eps} under-resolved on n={n}")
        prev = None
        for n in sizes:
            state = _oracle_state(prof, well, eps, n=n)
            ic = check_second_variation_identity(prof, state)
            if ic.degenerate:
                tab.add(epsilon=eps, n=n, lhs=0.0, rhs=0.0, note="degenerate: constant state")
                prev = None
                continue
            order = None
            if prev is not None:
                order = math.log2(prev / ic.relative_gap)
                orders.append(order)
            tab.add(epsilon=eps, n=n, lhs=ic.lhs, rhs=ic.rhs, relative_gap=ic.relative_gap,
                    observed_order=order, note="")
            prev = ic.relative_gap
    diag = {"min_observed_order": min(orders) if orders else None}
    if orders and min(orders) < min_order:
        raise AccuracyError(f"observed order {min(orders):.2f} below {min_order}", orders)
    return ExperimentResult("identity-check", {"identity": tab}, diag)


def run_oracle_compare(config: ExperimentConfig) -> ExperimentResult:
    """Mesh solutions on revolution meshes against the 1D oracle.

    For each ``(n_t, n_theta)`` in ``options["mesh_sizes"]`` the oracle
    state is sampled onto the mesh and Newton-polished there; the table
    lists the ``L_inf`` gap, both energies and their relative gap, and the
    observed order of the ``L_inf`` gap in the mean edge length.
    """
    prof = profile_of(config.geometry)
    if config.geometry["kind"] == "icosphere":
        kind = "sphere-revolution"
    else:
        kind = config.geometry["kind"]
    well = build_well(config.well)
    sizes = config.options.get("mesh_sizes", [[96, 72], [160, 128], [256, 192]])
    oracle_n = int(config.options.get("oracle_n", 2048))
    tab = ResultTable("oracle_compare", (
        "epsilon", "n", "n_theta", "mean_edge", "Linf", "mesh_energy", "oracle_energy",
        "energy_rel_gap", "residual", "observed_order"))
    orders = []
    for eps in config.epsilons:
        state = _oracle_state(prof, well, eps, n=oracle_n)
        E_or = axisymmetric_energy(solve_axisymmetric_steady(
            prof, well, eps, n=oracle_n, init=state.u))
        prev = None
        for n_t, n_theta in sizes:
            geo = dict(config.geometry, kind=kind, n_t=n_t, n_theta=n_theta)
            mesh = build_mesh(geo)
            h = check_resolution(mesh, [eps])
            ops = assemble_operators(mesh)
            tv = mesh.info["vertex_t"]
            u, trace = newton_polish(mesh, ops, well, eps, state(tv))
            gap = float(np.max(np.abs(u - state(tv))))
            E = energy(mesh, ops, well, eps, u)
            order = None
            if prev is not None:
                order = math.log(prev[1] / gap) / math.log(prev[0] / h)
                orders.append(order)
            tab.add(epsilon=eps, n=n_t, n_theta=n_theta, mean_edge=h, Linf=gap,
                    mesh_energy=E, oracle_energy=E_or, energy_rel_gap=abs(E - E_or) / E_or,
                    residual=trace[-1], observed_order=order)
            prev = (h, gap)
    return ExperimentResult("oracle-compare", {"oracle_compare": tab},
                            {"min_observed_order": min(orders) if orders else None})


RUNNERS = {
    "sphere-instability": run_sphere_instability,
    "dumbbell-minimizer": run_dumbbell_minimizer,
    "gamma-sweep": run_gamma_sweep,
    "torus-degenerate": run_torus_degenerate,
    "identity-check": run_identity_check,
    "oracle-compare": run_oracle_compare,
}


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def run_experiment(config: ExperimentConfig, out_dir=None) -> ExperimentResult:
    """Run ``config.experiment``; with an output directory, write CSVs and ``manifest.json``."""
    if config.experiment is None:
        raise InvalidArgumentError("config names no experiment")
    out_dir = out_dir if out_dir is not None else config.out_dir
    started = _now()
    result = RUNNERS[config.experiment](config)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        outputs = []
        for name, tab in result.tables.items():
            fname = f"{name}.csv"
            tab.write_csv(os.path.join(out_dir, fname))
            outputs.append({"path": fname, "bytes": os.path.getsize(os.path.join(out_dir, fname))})
        manifest = RunManifest(config.experiment, config.to_dict(), config.digest(),
                               list(config.seeds), _version(), started, _now(), outputs,
                               result.diagnostics)
        manifest.write(os.path.join(out_dir, "manifest.json"))
    return result


def rerun_manifest(manifest_path, out_dir) -> dict:
    """Repeat the run recorded in ``manifest_path`` into ``out_dir``.

    Returns ``{output name: True if byte-identical}``.  The stored config
    must hash to the recorded digest.
    """
    manifest = RunManifest.read(manifest_path)
    config = ExperimentConfig.from_dict(dict(manifest.config))
    if config.digest() != manifest.digest:
        raise InvalidArgumentError("stored config does not match the manifest digest")
    run_experiment(config, out_dir)
    root = os.path.dirname(os.path.abspath(manifest_path))
    same = {}
    for entry in manifest.outputs:
        with open(os.path.join(root, entry["path"]), "rb") as a, \
                open(os.path.join(out_dir, entry["path"]), "rb") as b:
            same[entry["path"]] = a.read() == b.read()
    return same


# -- VTK -------------------------------------------------------------------

def write_vtk(path, mesh: TriangleMesh, fields: dict | None = None) -> None:
    """Legacy ASCII VTK polydata with optional point-data scalars.

    Intrinsic meshes are written in their ``(x, y)`` chart with ``z = 0``;
    faces that cross the periodic seam then appear stretched.
    """
    if mesh.vertices is not None:
        pts = mesh.vertices
    else:
        chart = mesh.periodic_identification["chart"]
        pts = np.column_stack([chart, np.zeros(len(chart))])
    with open(path, "w", newline="\n") as fh:
        fh.write("# vtk DataFile Version 3.0\nsurfphase\nASCII\nDATASET POLYDATA\n")
        fh.write(f"POINTS {len(pts)} double\n")
        for p in pts:
            fh.write(" ".join(repr(float(c)) for c in p) + "\n")
        fh.write(f"POLYGONS {mesh.n_faces} {4 * mesh.n_faces}\n")
        for a, b, c in mesh.faces:
            fh.write(f"3 {a} {b} {c}\n")
        if fields:
            fh.write(f"POINT_DATA {len(pts)}\n")
            for name, values in fields.items():
                values = np.asarray(values, dtype=float)
                if values.shape != (len(pts),):
                    raise InvalidArgumentError(f"field {name!r} has wrong length")
                fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                fh.write("\n".join(repr(float(v)) for v in values) + "\n")
