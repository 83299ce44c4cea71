import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from minklab import cli
from minklab.errors import ConfigError
from minklab.quadrature import s2_grid


def write(tmp_path, cfg, name="exp.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def run(tmp_path, cfg, name="exp.json"):
    path = write(tmp_path, cfg, name)
    out = tmp_path / (name + ".out")
    return cli.run(str(path), str(out)), out


def test_group_info(tmp_path):
    code, out = run(tmp_path, {"schema_version": 1, "kind": "group-info", "group": "octahedral"})
    assert code == 0
    data = json.loads((out / "group.json").read_text())
    assert data["order"] == 48 and data["spanning"] is True and data["worst_gamma"] > 1


def test_planar_csv(tmp_path):
    cfg = {"schema_version": 1, "kind": "planar", "k": 4,
           "p_schedule": [-5.0, -10.0, -20.0, -40.0, -80.0, -160.0]}
    code, out = run(tmp_path, cfg)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO((out / "planar.csv").read_text())))
    assert list(rows[0]) == ["p", "max_h", "min_h", "dist_to_polygon", "residual", "newton_iters"]
    assert float(rows[-1]["p"]) == -160.0


def test_q_zero_is_rejected_with_pointer(tmp_path, capsys):
    cfg = {"schema_version": 1, "kind": "maximize", "group": "dihedral:4", "dual": True, "q": 0}
    code, _ = run(tmp_path, cfg)
    assert code == 2
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["pointer"] == "/q"


def test_schema_errors():
    with pytest.raises(ConfigError) as exc:
        cli.validate_config({"schema_version": 1, "kind": "planar"})
    assert exc.value.pointer == ""
    with pytest.raises(ConfigError) as exc:
        cli.validate_config({"schema_version": 1, "kind": "planar", "k": 4, "bogus": 1})
    assert exc.value.pointer == ""
    with pytest.raises(ConfigError) as exc:
        cli.validate_config({"schema_version": 2, "kind": "planar", "k": 4})
    assert exc.value.pointer == "/schema_version"
    with pytest.raises(ConfigError):
        cli.validate_config({"schema_version": 1, "kind": "nope"})


def test_unreadable_config(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.run(str(bad)) == 2


def test_manifest_checksums_stable(tmp_path):
    cfg = {"schema_version": 1, "kind": "duality-check", "group": "octahedral", "count": 4}
    codes, manifests = [], []
    for i in range(2):
        code, out = run(tmp_path, cfg, f"d{i}.json")
        codes.append(code)
        m = json.loads((out / "manifest.json").read_text())
        manifests.append(m)
        for name, digest in m["outputs"].items():
            import hashlib
            assert hashlib.sha256((out / name).read_bytes()).hexdigest() == digest
    assert codes == [0, 0]
    assert manifests[0]["outputs"] == manifests[1]["outputs"]
    assert manifests[0]["config_hash"] == manifests[1]["config_hash"]


def test_formula_density_is_invariant(tmp_path):
    from minklab.symmetry import octahedral

    dens = cli.density_from_config({"f": {"formula": "1 + x**4 + 0.3*x*y"}}, octahedral(), 3, tmp_path)
    X = np.random.default_rng(0).standard_normal((20, 3))
    X /= np.linalg.norm(X, axis=1)[:, None]
    for g in octahedral().elements[::7]:
        assert np.allclose(dens(X @ g.T), dens(X), atol=1e-12)
    assert dens.c1 > 0
    with pytest.raises(ConfigError) as exc:
        cli.density_from_config({"f": {"formula": "1 + w"}}, octahedral(), 3, tmp_path)
    assert exc.value.pointer == "/f/formula"
    with pytest.raises(ConfigError):
        cli.density_from_config({"f": {"formula": "x"}}, octahedral(), 3, tmp_path)


def test_grid_density(tmp_path):
    from minklab.symmetry import octahedral

    G = octahedral()
    X = np.random.default_rng(2).standard_normal((40, 3))
    X /= np.linalg.norm(X, axis=1)[:, None]
    nodes = np.vstack([X @ g.T for g in G.elements])
    vals = 1 + np.sum(nodes ** 4, axis=1)
    (tmp_path / "f.json").write_text(json.dumps({"nodes": nodes.tolist(), "values": vals.tolist()}))
    dens = cli.density_from_config({"f": {"grid": "f.json", "invariance_tol": 1e-9}}, G, 3, tmp_path)
    assert dens(nodes[:5]) == pytest.approx(vals[:5])
    skew = vals + 0.1 * nodes[:, 0]
    (tmp_path / "g.json").write_text(json.dumps({"nodes": nodes.tolist(), "values": skew.tolist()}))
    with pytest.raises(ConfigError) as exc:
        cli.density_from_config({"f": {"grid": "g.json"}}, G, 3, tmp_path)
    assert exc.value.pointer == "/f/grid"


def test_vbar_scan_and_localmax_sample(tmp_path):
    code, out = run(tmp_path, {"schema_version": 1, "kind": "vbar-scan", "polytope": "cube", "points": 3}, "v.json")
    assert code == 0
    rows = list(csv.reader(io.StringIO((out / "vbar_scan.csv").read_text())))
    assert rows[0] == ["w1", "w2", "value"] and len(rows) == 10
    code, out = run(tmp_path, {"schema_version": 1, "kind": "localmax", "polytope": "square",
                               "mode": "sample", "trials": 5}, "l.json")
    assert code == 0
    assert json.loads((out / "sample_test.json").read_text())["violations"] == 0


def test_maximize_run(tmp_path):
    cfg = {"schema_version": 1, "kind": "maximize", "group": "dihedral:4", "p": -20.0,
           "classes": 1, "starts": 2, "max_evals": 100}
    code, out = run(tmp_path, cfg)
    assert code == 0
    assert json.loads((out / "result.json").read_text())["value"] > 2 * np.pi


def test_exit_codes(tmp_path, monkeypatch):
    from minklab.errors import NewtonDiverged

    cfg = {"schema_version": 1, "kind": "continuation", "group": "dihedral:4",
           "p_schedule": [-5.0, -4.0, -6.0], "max_evals": 10}
    assert run(tmp_path, cfg, "c.json")[0] == 2

    def boom(cfg, out, base):
        raise NewtonDiverged("no convergence")

    monkeypatch.setitem(cli.RUNNERS, "planar", boom)
    assert run(tmp_path, {"schema_version": 1, "kind": "planar", "k": 4}, "n.json")[0] == 3


def test_catalog_json(capsys):
    assert cli.main(["catalog", "--json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert "octahedral" in data["groups"]
    assert any(p["name"] == "cube" for p in data["polytopes"])


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "minklab", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip()
