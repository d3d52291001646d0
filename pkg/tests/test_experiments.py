"""Configs, manifests, runner gates and the command line."""

import csv
import json

import pytest

from surfphase import InvalidArgumentError, ResolutionError, gen_icosphere
from surfphase.cli import main
from surfphase.experiments import (ExperimentConfig, ResultTable, RunManifest, default_config,
                                   rerun_manifest, run_dumbbell_minimizer, run_experiment,
                                   run_gamma_sweep, run_identity_check, run_sphere_instability,
                                   run_torus_degenerate, write_vtk)


def small_identity(**kw):
    opts = {"grid_sizes": [256, 512]}
    return ExperimentConfig("identity-check", {"kind": "dumbbell", "d": 0.5}, [0.1],
                            options=opts, **kw)


# -- config and manifest ---------------------------------------------------

def test_digest_ignores_out_dir_and_key_order(tmp_path):
    a = default_config("gamma-sweep")
    b = ExperimentConfig.from_dict(dict(reversed(list(a.to_dict().items()))))
    b.out_dir = str(tmp_path)
    assert a.digest() == b.digest()
    assert len(a.digest()) == 64
    c = default_config("gamma-sweep")
    c.epsilons = [0.2, 0.1]
    assert c.digest() != a.digest()


def test_config_roundtrip(tmp_path):
    cfg = default_config("torus-degenerate")
    cfg.save(tmp_path / "c.json")
    again = ExperimentConfig.load(tmp_path / "c.json")
    assert again.digest() == cfg.digest() and again.geometry == cfg.geometry


@pytest.mark.parametrize("bad", [
    dict(experiment="nope", geometry={"kind": "icosphere"}, epsilons=[0.3]),
    dict(experiment=None, geometry={"kind": "cube"}, epsilons=[0.3]),
    dict(experiment=None, geometry={"kind": "icosphere"}, epsilons=[]),
    dict(experiment=None, geometry={"kind": "icosphere"}, epsilons=[0.3], seeds=[-1]),
])
def test_config_rejects(bad):
    with pytest.raises(InvalidArgumentError):
        ExperimentConfig(**bad)
    with pytest.raises(InvalidArgumentError):
        ExperimentConfig.from_dict({"geometry": {"kind": "icosphere"}, "epsilons": [1],
                                    "experiment": None, "colour": "red"})


def test_manifest_integrity(tmp_path):
    cfg = small_identity()
    run_experiment(cfg, tmp_path)
    man = RunManifest.read(tmp_path / "manifest.json")
    assert man.digest == cfg.digest() and man.seeds == [0]
    assert [o["path"] for o in man.outputs] == ["identity.csv"]
    assert man.verify_outputs(tmp_path) == []
    with open(tmp_path / "identity.csv", "a") as fh:
        fh.write("x\n")
    assert man.verify_outputs(tmp_path) == ["identity.csv"]


def test_rerun_is_bit_identical(tmp_path):
    run_experiment(small_identity(), tmp_path / "a")
    assert rerun_manifest(tmp_path / "a" / "manifest.json", tmp_path / "b") == {
        "identity.csv": True}


def test_rerun_detects_tampered_config(tmp_path):
    run_experiment(small_identity(), tmp_path / "a")
    p = tmp_path / "a" / "manifest.json"
    d = json.loads(p.read_text())
    d["config"]["epsilons"] = [0.2]
    p.write_text(json.dumps(d))
    with pytest.raises(InvalidArgumentError):
        rerun_manifest(p, tmp_path / "b")


def test_result_table_order_and_format(tmp_path):
    t = ResultTable("t", ("epsilon", "seed", "value", "flag"))
    t.add(epsilon=0.2, seed=1, value=0.1, flag=True)
    t.add(epsilon=0.1, seed=3, value=None, flag=False)
    t.add(epsilon=0.2, seed=0, value=1 / 3, flag=True)
    t.write_csv(tmp_path / "t.csv")
    rows = list(csv.reader(open(tmp_path / "t.csv", newline="")))
    assert rows[0] == ["epsilon", "seed", "value", "flag"]
    assert [r[:2] for r in rows[1:]] == [["0.1", "3"], ["0.2", "0"], ["0.2", "1"]]
    assert rows[1][2] == "" and rows[2][2] == repr(1 / 3) and rows[1][3] == "false"
    with pytest.raises(InvalidArgumentError):
        t.add(epsilon=0.1, colour=1)


def test_write_vtk(tmp_path):
    m = gen_icosphere(1)
    write_vtk(tmp_path / "m.vtk", m, {"z": m.vertices[:, 2]})
    text = (tmp_path / "m.vtk").read_text()
    assert text.startswith("# vtk DataFile Version")
    assert f"POINTS {m.n_vertices} double" in text
    assert f"POLYGONS {m.n_faces} {4 * m.n_faces}" in text
    assert "SCALARS z double 1" in text


# -- runner gates ------------------------------------------------------------

def test_resolution_gate():
    cfg = ExperimentConfig("sphere-instability", {"kind": "icosphere", "subdivisions": 2},
                           [0.1])
    with pytest.raises(ResolutionError):
        run_sphere_instability(cfg)
    cfg = ExperimentConfig("dumbbell-minimizer", {"kind": "dumbbell", "n_t": 32,
                                                  "n_theta": 16}, [0.05])
    with pytest.raises(ResolutionError):
        run_dumbbell_minimizer(cfg)


def test_gamma_sweep_rejects_sphere():
    cfg = ExperimentConfig("gamma-sweep", {"kind": "icosphere", "subdivisions": 3}, [0.3])
    with pytest.raises(InvalidArgumentError, match="no stable"):
        run_gamma_sweep(cfg)


def test_gamma_sweep_needs_decreasing_eps():
    cfg = ExperimentConfig("gamma-sweep", {"kind": "dumbbell", "n_t": 64, "n_theta": 48},
                           [0.2, 0.3])
    with pytest.raises(InvalidArgumentError):
        run_gamma_sweep(cfg)


def test_gamma_sweep_single_epsilon():
    cfg = ExperimentConfig("gamma-sweep", {"kind": "dumbbell", "n_t": 96, "n_theta": 72},
                           [0.2], solver={"dt": 0.5, "tol_residual": 1e-4})
    res = run_gamma_sweep(cfg)
    assert len(res.table.rows) == 1
    assert res.diagnostics["ratio_trend"] == "not-applicable"
    assert res.diagnostics["L1_trend"] == "not-applicable"


def test_sphere_collapse_above_threshold():
    cfg = ExperimentConfig("sphere-instability", {"kind": "icosphere", "subdivisions": 3},
                           [0.75], seeds=[0], solver={"dt": 0.5})
    res = run_sphere_instability(cfg)
    (row,) = res.tables["critical_points"].rows
    assert row["nonconstant"] is False and "no nonconstant" in row["note"]
    assert res.diagnostics["constant_endpoints"] == 1


def test_torus_collapse_above_threshold():
    cfg = ExperimentConfig("torus-degenerate", {"kind": "flat-torus", "n": 64}, [0.2])
    (row,) = run_torus_degenerate(cfg).table.rows
    assert row["nonconstant"] is False and "collapsed" in row["note"]


def test_identity_excludes_constant_state():
    cfg = ExperimentConfig("identity-check", {"kind": "sphere-revolution"}, [0.75],
                           options={"grid_sizes": [256, 512]})
    res = run_identity_check(cfg)
    assert all(r["note"].startswith("degenerate") for r in res.table.rows)
    assert res.diagnostics["min_observed_order"] is None


def test_identity_sphere_gaps_shrink():
    cfg = ExperimentConfig("identity-check", {"kind": "sphere-revolution"}, [0.25],
                           options={"grid_sizes": [512, 1024, 2048]})
    gaps = run_identity_check(cfg).table.column("relative_gap")
    # at least the quadratic rate; the fourth-order solve gives about 16x
    assert all(a / b >= 4.0 for a, b in zip(gaps, gaps[1:]))


def test_weak_neck_still_stable():
    base = default_config("dumbbell-minimizer")
    weak = default_config("dumbbell-minimizer")
    weak.geometry["d"] = 0.34
    r_half = run_dumbbell_minimizer(base).table.rows[0]
    r_weak = run_dumbbell_minimizer(weak).table.rows[0]
    assert r_weak["classification"] == "stable"
    assert 0 < r_weak["mu1"] < r_half["mu1"]


# -- command line -------------------------------------------------------------

def _cfg(tmp_path, **kw):
    d = dict(experiment=None, geometry={"kind": "icosphere", "subdivisions": 4},
             epsilons=[0.3], seeds=[3], solver={"dt": 0.5})
    d.update(kw)
    p = tmp_path / "cfg.json"
    ExperimentConfig(**d).save(p)
    return str(p)


def test_cli_mesh_solve_spectrum_export(tmp_path, capsys):
    cfg = _cfg(tmp_path)
    assert main(["mesh", "gen", "--config", cfg, "--out", str(tmp_path / "m")]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["vertices"] == 2562 and info["euler_characteristic"] == 2
    assert (tmp_path / "m" / "mesh.obj").exists() and (tmp_path / "m" / "mesh.vtk").exists()

    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "s")]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["termination"] == "converged"
    field = str(tmp_path / "s" / "u.csv")

    assert main(["spectrum", "--config", cfg, "--field", field, "--k", "2",
                 "--out", str(tmp_path / "sp")]) == 0
    spec = json.loads(capsys.readouterr().out)
    assert spec["classification"] == "stable"
    assert (tmp_path / "sp" / "eigenvector_1.csv").exists()

    assert main(["export", "--config", cfg, "--field", field, "--format", "vtk",
                 "--out", str(tmp_path / "e")]) == 0
    assert "SCALARS u double" in (tmp_path / "e" / "mesh.vtk").read_text()


def test_cli_solve_is_reproducible(tmp_path, capsys):
    cfg = _cfg(tmp_path)
    for out in ("a", "b"):
        assert main(["--threads", "1", "solve", "--config", cfg, "--seed", "8",
                     "--out", str(tmp_path / out)]) == 0
    assert (tmp_path / "a" / "u.csv").read_bytes() == (tmp_path / "b" / "u.csv").read_bytes()


def test_cli_experiment_and_rerun(tmp_path, capsys):
    cfg = small_identity()
    p = tmp_path / "id.json"
    cfg.save(p)
    assert main(["experiment", "run", "identity-check", "--config", str(p),
                 "--out", str(tmp_path / "r1")]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["outputs"] == ["identity.csv"]
    assert main(["experiment", "rerun", str(tmp_path / "r1" / "manifest.json"),
                 "--out", str(tmp_path / "r2")]) == 0
    assert json.loads(capsys.readouterr().out)["identical"] == {"identity.csv": True}


def test_cli_errors(tmp_path, capsys):
    cfg = _cfg(tmp_path, geometry={"kind": "icosphere", "subdivisions": 2}, epsilons=[0.05])
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "x")]) == 1
    assert "error:" in capsys.readouterr().err
    assert main(["--threads", "0", "mesh", "gen", "--config", cfg, "--out",
                 str(tmp_path / "y")]) == 1
    assert main(["solve", "--out", str(tmp_path / "z")]) == 1
    with pytest.raises(SystemExit):
        main(["experiment", "run", "not-an-experiment", "--out", str(tmp_path)])
    bad = _cfg(tmp_path, experiment="gamma-sweep",
               geometry={"kind": "dumbbell", "n_t": 64, "n_theta": 48}, epsilons=[0.3])
    assert main(["experiment", "run", "torus-degenerate", "--config", bad,
                 "--out", str(tmp_path / "w")]) == 1

