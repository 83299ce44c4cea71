"""Command line: ``minklab run <config>``, ``minklab verify``, ``minklab catalog``.

Exit codes: 0 success, 1 failed acceptance check, 2 invalid input,
3 numerical failure.  Errors are printed to stderr as JSON objects.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np
import sympy
from scipy.spatial import cKDTree

from . import __version__
from . import functionals as fx
from .errors import ConfigError, MinklabError, NumericalFailure
from .symmetry import SymmetryGroup, catalog, spanning_check

log = logging.getLogger("minklab")

SCHEMA_VERSION = 1


def load_schema() -> dict:
    text = resources.files("minklab").joinpath(f"schemas/experiment-v{SCHEMA_VERSION}.json").read_text()
    return json.loads(text)


def validate_config(cfg: dict) -> None:
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        pointer = "".join(f"/{p}" for p in err.absolute_path)
        raise ConfigError(err.message, pointer)


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


# densities -------------------------------------------------------------------

def _formula_density(text: str, group: SymmetryGroup, pointer: str) -> fx.DensitySpec:
    """Group average of a sympy formula in ``x, y`` (and ``z``)."""
    names = "x y" if group.dim == 2 else "x y z"
    syms = sympy.symbols(names)
    try:
        expr = sympy.sympify(text, locals=dict(zip(names.split(), syms)))
    except (sympy.SympifyError, SyntaxError, TypeError) as exc:
        raise ConfigError(f"cannot parse formula: {exc}", pointer) from exc
    extra = expr.free_symbols - set(syms)
    if extra:
        raise ConfigError(f"unknown symbols {sorted(map(str, extra))}", pointer)
    raw = sympy.lambdify(syms, expr, "numpy")
    G = group.elements

    def fn(X):
        X = np.atleast_2d(X)
        acc = np.zeros(len(X))
        for M in G:
            Y = X @ M.T
            acc += np.asarray(raw(*Y.T), dtype=float) * np.ones(len(X))
        return acc / len(G)

    try:
        return fx.DensitySpec.from_function(group.dim, fn, label=text)
    except ValueError as exc:
        raise ConfigError(str(exc), pointer) from exc


def _grid_density(spec: dict, group: SymmetryGroup, base: Path, pointer: str) -> fx.DensitySpec:
    path = (base / spec["grid"]).resolve()
    try:
        data = json.loads(path.read_text())
        nodes = np.asarray(data["nodes"], dtype=float)
        values = np.asarray(data["values"], dtype=float)
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigError(f"cannot read density grid {path}: {exc}", pointer) from exc
    if nodes.ndim != 2 or nodes.shape[1] != group.dim or len(values) != len(nodes):
        raise ConfigError("grid nodes and values do not match the group dimension", pointer)
    nodes = nodes / np.linalg.norm(nodes, axis=1)[:, None]
    tree = cKDTree(nodes)

    def fn(X):
        _, idx = tree.query(np.atleast_2d(X))
        return values[idx]

    tol = spec.get("invariance_tol", 1e-6)
    defect = group.invariance_defect(fn, nodes)
    if defect > tol:
        raise ConfigError(f"tabulated density is not group invariant (defect {defect:.3e})", pointer)
    try:
        return fx.DensitySpec.from_function(group.dim, fn, label=str(spec["grid"]))
    except ValueError as exc:
        raise ConfigError(str(exc), pointer) from exc


def density_from_config(cfg: dict, group: SymmetryGroup | None, dim: int, base: Path):
    spec = cfg.get("f", 1.0)
    if isinstance(spec, (int, float)):
        return None if spec == 1 else fx.DensitySpec.const(dim, float(spec))
    if group is None:
        raise ConfigError("a non-constant density needs a group", "/f")
    if "formula" in spec:
        return _formula_density(spec["formula"], group, "/f/formula")
    return _grid_density(spec, group, base, "/f/grid")


def _group(cfg: dict) -> SymmetryGroup:
    try:
        return catalog(cfg["group"])
    except MinklabError as exc:
        raise ConfigError(str(exc), "/group") from exc


# studies ---------------------------------------------------------------------

@dataclass
class Outputs:
    directory: Path
    files: dict

    def write(self, name: str, text: str) -> None:
        path = self.directory / name
        path.write_text(text)
        self.files[name] = hashlib.sha256(text.encode()).hexdigest()


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _optimizer_config(cfg: dict):
    from .optimize import OptimizerConfig

    kw = {k: cfg[k] for k in ("classes", "starts", "max_evals", "seed") if k in cfg}
    return OptimizerConfig(**kw)


def _run_group_info(cfg, out, base):
    G = _group(cfg)
    rep = spanning_check(G)
    out.write("group.json", _dumps({"group": G.name, "dim": G.dim, "order": G.order,
                                    "spanning": rep.passes, "worst_gamma": rep.worst_gamma,
                                    "absolutely_irreducible": rep.absolutely_irreducible,
                                    "elements": G.to_json()["elements"]}))


def _run_maximize(cfg, out, base):
    from .optimize import default_params, maximize, study_step, trace_csv

    G = _group(cfg)
    f = density_from_config(cfg, G, G.dim, base)
    ocfg = _optimizer_config(cfg)
    res = maximize(default_params(G, ocfg.classes), f, cfg.get("p", -10.0), cfg.get("q"), ocfg)
    out.write("result.json", _dumps(res.to_json()))
    out.write("trace.csv", trace_csv([study_step(res, f)]))


def _run_continuation(cfg, out, base):
    from .optimize import continuation_study, trace_csv

    G = _group(cfg)
    f = density_from_config(cfg, G, G.dim, base)
    ocfg = _optimizer_config(cfg)
    if "q_schedule" in cfg:
        steps = continuation_study(cfg["q_schedule"], G, f, ocfg, p_fixed=cfg.get("p", -2.0))
    elif "p_schedule" in cfg:
        steps = continuation_study(cfg["p_schedule"], G, f, ocfg)
    else:
        raise ConfigError("continuation needs p_schedule or q_schedule", "")
    out.write("trace.csv", trace_csv(steps))
    out.write("results.json", _dumps([s.result.to_json() for s in steps]))


def _run_planar(cfg, out, base):
    from .planar import PlanarConfig, continuation_csv, continuation_planar

    sched = cfg.get("p_schedule", [-5.0 * 2 ** (j / 2) for j in range(11)])
    k = cfg["k"]
    fspec = cfg.get("f", 1.0)
    if not isinstance(fspec, (int, float)):
        G = catalog(f"dihedral:{k}")
        dens = density_from_config(cfg, G, 2, base)
        f = dens if dens is not None else None
    else:
        f = None if fspec == 1 else float(fspec)
    sols = continuation_planar(k, f, sched, PlanarConfig(nodes=cfg.get("nodes", 0)))
    out.write("planar.csv", continuation_csv(sols))


def _polytope(cfg):
    from .regular import regular_catalog

    try:
        return regular_catalog(cfg["polytope"])
    except MinklabError as exc:
        raise ConfigError(str(exc), "/polytope") from exc


def _run_localmax(cfg, out, base):
    from .optimize import local_maximize_near
    from .regular import local_max_sample_test

    T = _polytope(cfg)
    if cfg.get("mode", "maximize") == "sample":
        kw = {k: cfg[k] for k in ("p", "q") if k in cfg}
        rep = local_max_sample_test(T, cfg.get("delta", 0.1), cfg.get("trials", 500),
                                    cfg.get("seed", 0), cfg.get("functional", "V"), **kw)
        out.write("sample_test.json", _dumps(rep.to_json()))
        return
    f = density_from_config(cfg, T.group, T.dim, base)
    res = local_maximize_near(T, cfg.get("delta"), f, cfg.get("p", -200.0), cfg.get("q"),
                              _optimizer_config(cfg))
    payload = res.to_json()
    payload["F_minus_infinity"] = fx.F_minus_infinity(res.body).value
    out.write("result.json", _dumps(payload))


def _run_vbar_scan(cfg, out, base):
    from .regular import base_simplex, vbar_scan_csv

    T = _polytope(cfg)
    B = base_simplex(T)
    V = B.vertices
    diam = max(np.linalg.norm(a - b) for a in V for b in V)
    radius = cfg.get("radius", 0.2 * diam)
    m = cfg.get("points", 6)
    rng = np.random.default_rng(cfg.get("seed", 0))
    bary = rng.dirichlet(np.ones(len(V)), size=m * m)
    pts = bary @ V
    scale = np.minimum(1.0, radius / np.maximum(np.linalg.norm(pts, axis=1), 1e-300))
    pts = pts * scale[:, None]
    out.write("vbar_scan.csv", vbar_scan_csv(B, pts, cfg.get("variant", "volume"),
                                             cfg.get("q"), cfg.get("p")))


def _run_duality(cfg, out, base):
    import csv
    import io

    from .optimize import OrbitParametrization, build_body

    G = _group(cfg)
    f = density_from_config(cfg, G, G.dim, base)
    rng = np.random.default_rng(cfg.get("seed", 0))
    p, q = cfg.get("p", -8.0), cfg.get("q", 2.0)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "p", "q", "residual"])
    i = 0
    while i < cfg.get("count", 20):
        cls = []
        for _ in range(int(rng.integers(1, 4))):
            u = rng.standard_normal(G.dim)
            cls.append((u / np.linalg.norm(u), float(rng.uniform(0.8, 1.6))))
        try:
            P = build_body(OrbitParametrization(G, tuple(cls))).pruned()
        except MinklabError:
            continue
        w.writerow([i, p, q, repr(fx.duality_check(P, f, p, q))])
        i += 1
    out.write("duality.csv", buf.getvalue())


RUNNERS = {"group-info": _run_group_info, "maximize": _run_maximize,
           "continuation": _run_continuation, "planar": _run_planar, "localmax": _run_localmax,
           "vbar-scan": _run_vbar_scan, "duality-check": _run_duality}


def _error(exc: Exception, pointer: str | None = None) -> None:
    payload = exc.to_json() if isinstance(exc, MinklabError) else {"error": "invalid_input",
                                                                   "message": str(exc)}
    if pointer is not None:
        payload["pointer"] = pointer
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)


def run(config_path: str, output_dir: str | None = None) -> int:
    path = Path(config_path)
    try:
        cfg = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        _error(ConfigError(f"cannot read config: {exc}", ""))
        return 2
    try:
        validate_config(cfg)
    except ConfigError as exc:
        _error(exc)
        return 2
    directory = Path(output_dir or cfg.get("output_dir") or path.with_suffix("").name + "_out")
    if not directory.is_absolute():
        directory = path.parent / directory if output_dir is None else directory
    directory.mkdir(parents=True, exist_ok=True)
    out = Outputs(directory, {})
    start = time.time()
    try:
        RUNNERS[cfg["kind"]](cfg, out, path.parent)
    except ConfigError as exc:
        _error(exc)
        return 2
    except NumericalFailure as exc:
        _error(exc)
        return 3
    except (MinklabError, ValueError) as exc:
        _error(exc)
        return 2
    manifest = {"config_hash": config_hash(cfg), "tool_version": __version__,
                "start_time": start, "end_time": time.time(),
                "outputs": dict(sorted(out.files.items()))}
    (directory / "manifest.json").write_text(_dumps(manifest))
    return 0


def verify(suite: str = "fast") -> int:
    from .verify import report, run_suite

    results = run_suite(suite)
    sys.stdout.write(report(results))
    return 0 if all(r.passed for r in results) else 1


def catalog_command(as_json: bool) -> int:
    from .regular import catalog_listing
    from .symmetry import CATALOG_NAMES

    rows = catalog_listing()
    if as_json:
        print(json.dumps({"groups": list(CATALOG_NAMES), "polytopes": rows}, indent=2))
        return 0
    print("groups: " + ", ".join(CATALOG_NAMES))
    for r in rows:
        order = "-" if r["group_order"] is None else r["group_order"]
        print(f"{r['name']:>14}  {{{','.join(map(str, r['schlafli']))}}}  dim {r['dim']}  "
              f"vertices {r['vertices']:>4}  group {r['group'] or '-'} ({order})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="minklab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment from a JSON config")
    r.add_argument("config")
    r.add_argument("-o", "--output-dir")
    v = sub.add_parser("verify", help="run the acceptance checks")
    v.add_argument("--suite", choices=("fast", "full"), default="fast")
    c = sub.add_parser("catalog", help="list groups and regular polytopes")
    c.add_argument("--json", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    np.seterr(all="ignore")
    if args.command == "run":
        return run(args.config, args.output_dir)
    if args.command == "verify":
        return verify(args.suite)
    return catalog_command(args.json)


if __name__ == "__main__":
    sys.exit(main())
