"""Command-line front end.

::

    tmcert run config.json [--jobs N] [--out DIR]
    tmcert suite paper_table [--h H] [--out DIR]
    tmcert kappa A
    tmcert spectrum PRESET [--bc dirichlet|neumann] [--h H] [--T T] [-k K]

A run configuration is one JSON document::

    {"version": 1,
     "jobs": [{"kind": "spectrum", "id": "L", "preset": "l_shape",
               "params": {"bc": "dirichlet"}, "numerics": {"h": 0.015625, "T": 4}}]}
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from . import __version__
from . import certificates as cert
from .geometry import PRESETS, preset_domain, triangulate
from .modes import (
    TESTFIELDS,
    QuadGrid,
    capacitor_potential,
    export_csv,
    rect_dirichlet_mode,
    rect_neumann_mode,
    testfield,
    trapped_mode_dirichlet,
    trapped_mode_neumann,
)
from .spectra import laplacian_eigs

CONFIG_VERSION = 1
JOB_KINDS = ("spectrum", "kappa", "certificate", "modes_export", "full_pipeline")
CERTIFICATES = ("sixlegs", "tripode", "cuboid", "te_resonator", "tem", "tm", "big_resonator", "cube_inclusion")
EXPORT_FIELDS = TESTFIELDS + ("trapped_dirichlet", "trapped_neumann")
NUMERIC_KEYS = ("h", "T", "k", "tol", "N_series")


class ConfigError(ValueError):
    """Malformed run configuration; the message names the offending field or line."""

    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}")
        self.where = where


@dataclass
class Numerics:
    h: float = 1.0 / 32
    T: float = 4.0
    k: int = 1
    tol: float = 1e-10
    N_series: int = 10_000

    def to_dict(self) -> dict:
        return {"h": self.h, "T": self.T, "k": self.k, "tol": self.tol, "N_series": self.N_series}


@dataclass
class Job:
    kind: str
    id: str
    preset: Optional[str] = None
    params: Dict[str, Any] = field(default_factory=dict)
    numerics: Numerics = field(default_factory=Numerics)
    outputs: Dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "id": self.id, "params": dict(self.params),
             "numerics": self.numerics.to_dict(), "outputs": dict(self.outputs)}
        if self.preset is not None:
            d["preset"] = self.preset
        return d


@dataclass
class RunConfig:
    jobs: List[Job] = field(default_factory=list)
    version: int = CONFIG_VERSION

    def to_dict(self) -> dict:
        return {"version": self.version, "jobs": [j.to_dict() for j in self.jobs]}

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "RunConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"line {exc.lineno}, column {exc.colno}", exc.msg) from None
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> "RunConfig":
        return cls.loads(Path(path).read_text())

    @classmethod
    def from_dict(cls, data: Any) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("<root>", "expected a JSON object")
        unknown = set(data) - {"version", "jobs"}
        if unknown:
            raise ConfigError("<root>", f"unknown keys {sorted(unknown)}")
        version = data.get("version")
        if version != CONFIG_VERSION:
            raise ConfigError("version", f"expected {CONFIG_VERSION}, got {version!r}")
        jobs = data.get("jobs", [])
        if not isinstance(jobs, list):
            raise ConfigError("jobs", "expected a list")
        parsed = [_parse_job(j, f"jobs[{i}]") for i, j in enumerate(jobs)]
        seen = set()
        for i, j in enumerate(parsed):
            if j.id in seen:
                raise ConfigError(f"jobs[{i}].id", f"duplicate id {j.id!r}")
            seen.add(j.id)
        return cls(parsed, version)


def _parse_job(d: Any, where: str) -> Job:
    if not isinstance(d, dict):
        raise ConfigError(where, "expected an object")
    unknown = set(d) - {"kind", "id", "preset", "params", "numerics", "outputs"}
    if unknown:
        raise ConfigError(where, f"unknown keys {sorted(unknown)}")
    kind = d.get("kind")
    if kind not in JOB_KINDS:
        raise ConfigError(f"{where}.kind", f"expected one of {JOB_KINDS}, got {kind!r}")
    jid = d.get("id", where)
    if not isinstance(jid, str) or not jid or any(c in jid for c in "/\\"):
        raise ConfigError(f"{where}.id", "must be a non-empty string without path separators")
    preset = d.get("preset")
    if preset is not None and preset not in PRESETS:
        raise ConfigError(f"{where}.preset", f"unknown preset {preset!r}; known: {PRESETS}")
    if kind in ("spectrum", "full_pipeline") and preset is None:
        raise ConfigError(f"{where}.preset", f"required for {kind} jobs")
    params = d.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError(f"{where}.params", "expected an object")
    if kind == "certificate" and params.get("id", jid) not in CERTIFICATES:
        raise ConfigError(f"{where}.params.id", f"unknown certificate; known: {CERTIFICATES}")
    if kind == "modes_export" and params.get("field") not in EXPORT_FIELDS:
        raise ConfigError(f"{where}.params.field", f"expected one of {EXPORT_FIELDS}")
    if kind == "full_pipeline" and preset not in ("l_shape", "x_shape"):
        raise ConfigError(f"{where}.preset", "full_pipeline supports l_shape and x_shape")
    num = d.get("numerics", {})
    if not isinstance(num, dict):
        raise ConfigError(f"{where}.numerics", "expected an object")
    bad = set(num) - set(NUMERIC_KEYS)
    if bad:
        raise ConfigError(f"{where}.numerics", f"unknown keys {sorted(bad)}")
    for key, v in num.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v) or v <= 0:
            raise ConfigError(f"{where}.numerics.{key}", f"must be a positive number, got {v!r}")
        if key in ("k", "N_series") and int(v) != v:
            raise ConfigError(f"{where}.numerics.{key}", "must be an integer")
    defaults = Numerics()
    numerics = Numerics(
        float(num.get("h", defaults.h)), float(num.get("T", defaults.T)), int(num.get("k", defaults.k)),
        float(num.get("tol", defaults.tol)), int(num.get("N_series", defaults.N_series)),
    )
    outputs = d.get("outputs", {})
    if not isinstance(outputs, dict) or not all(isinstance(v, str) for v in outputs.values()):
        raise ConfigError(f"{where}.outputs", "expected an object of path strings")
    return Job(kind, jid, preset, params, numerics, outputs)


# -- job execution -----------------------------------------------------------------


def _input(v, provenance="config"):
    if isinstance(v, dict):
        return cert.Input(float(v["value"]), v.get("provenance", provenance), float(v.get("uncertainty", 0.0)))
    return cert.Input(float(v), provenance)


def _domain_params(job: Job) -> dict:
    p = {k: v for k, v in job.params.items() if k in ("a", "b", "outer", "inner", "cx", "cy")}
    if job.preset in ("l_shape", "x_shape"):
        p["T"] = job.numerics.T
    return p


def _spectrum(job: Job) -> dict:
    bc = job.params.get("bc", "dirichlet")
    n = job.numerics
    res = laplacian_eigs(preset_domain(job.preset, **_domain_params(job)), bc, k=n.k, h=n.h, T=n.T,
                         tol=n.tol, estimate=job.params.get("estimate", True),
                         t_sensitivity=job.params.get("t_sensitivity", False))
    return {"type": "eigen", "preset": job.preset, **res.summary()}, res


def _fem_input(res) -> cert.Input:
    lam = float(res.eigenvalues[0])
    unc = res.extras.get("discretisation_error", [0.0])[0] + abs(res.extras.get("T_sensitivity", [0.0])[0])
    return cert.Input(lam, f"fem h={res.h:g} T={res.T:g}", unc)


def _certificate(job: Job, cid: str, lam=None) -> cert.Certificate:
    p = job.params
    if cid == "sixlegs":
        return cert.cert_sixlegs(lam if lam is not None else _input(p.get("lam_X", 6.5186), "published"))
    if cid == "tripode":
        lam = lam if lam is not None else _input(p.get("lam_L", 9.1722), "published")
        return cert.cert_tripode(lam, job.numerics.N_series)[1]
    if cid == "cuboid":
        return cert.cert_cuboid(_input(p["a"]), _input(p["L"]), _input(p["lam_N_guide"]))
    if cid == "te_resonator":
        res = p["lam_N_res"]
        res = [float(v) for v in res] if isinstance(res, list) else _input(res)
        return cert.cert_te_resonator(res, _input(p["L"]), _input(p["lam_N_guide"]))
    if cid == "tem":
        return cert.cert_tem(_input(p["L"]), _input(p["lam_N_guide"]))
    if cid == "tm":
        L = _input(p["L"]) if "L" in p else None
        return cert.cert_tm(_input(p["lam_D_res"]), _input(p["lam_N_guide"]), L)
    if cid == "big_resonator":
        return cert.cert_big_resonator(_input(p["lam_D_domain"]), _input(p["lam_N_guide"]))
    if cid == "cube_inclusion":
        return cert.cube_inclusion(_input(p["a_cube"]), _input(p["lam_N_guide"]))
    raise ValueError(f"unknown certificate {cid!r}")


def _export_field(job: Job):
    p = job.params
    kind = p["field"]
    if kind in ("trapped_dirichlet", "trapped_neumann"):
        b, c = float(p.get("b", 1.0)), float(p.get("c", 1.0))
        a = float(p.get("a", 1.0))
        m = int(p.get("m", 0 if kind == "trapped_dirichlet" else 1))
        if kind == "trapped_dirichlet":
            phi, lam = rect_dirichlet_mode(b, c)
            E, lam = trapped_mode_dirichlet(phi, lam, m, a)
        else:
            phi, lam = rect_neumann_mode(max(b, c), min(b, c))
            E, lam = trapped_mode_neumann(phi, lam, m, a)
        box = (0.0, a, 0.0, b, 0.0, c)
    else:
        kw = {k: v for k, v in p.items() if k in ("a", "b", "L")}
        if kind == "tem_resonator":
            dom = preset_domain("square_annulus", **{k: v for k, v in p.items() if k in ("outer", "inner", "cx", "cy")})
            kw = {"pot": capacitor_potential(triangulate(dom, job.numerics.h)), "L": p["L"]}
        E = testfield(kind, **kw)
        box = E.support.box
        lam = None
    n = p.get("n", [8, 8, 8])
    return E, QuadGrid(tuple(box), tuple(int(v) for v in n)), lam


def _write_rows(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


def run_job(job: Job, out: Path) -> dict:
    """Execute one job; numeric failures are captured in the returned entry."""
    entry = {"id": job.id, "kind": job.kind}
    csv_path = out / job.outputs.get("csv", f"{job.id}.csv")
    try:
        if job.kind == "spectrum":
            summary, _ = _spectrum(job)
            entry["result"] = summary
            _write_rows(csv_path, ["index", "eigenvalue"], enumerate(summary["eigenvalues"]))
            entry["csv"] = csv_path.name
        elif job.kind == "kappa":
            values = job.params.get("a", [math.pi])
            values = values if isinstance(values, list) else [values]
            roots = [cert.kappa(float(a)) for a in values]
            entry["result"] = {"type": "kappa", "roots": [
                {"a": r.a, "kappa": r.kappa, "residual": r.residual} for r in roots]}
            _write_rows(csv_path, ["a", "kappa", "residual"], [(r.a, r.kappa, r.residual) for r in roots])
            entry["csv"] = csv_path.name
        elif job.kind == "certificate":
            c = _certificate(job, job.params.get("id", job.id))
            entry["result"] = {"type": "certificate", **c.to_json()}
        elif job.kind == "modes_export":
            E, grid, lam = _export_field(job)
            X, Y, Z, _ = grid.points()
            count = export_csv(E, np.column_stack([X.ravel(), Y.ravel(), Z.ravel()]), csv_path)
            entry["result"] = {"type": "field_samples", "field": E.name, "points": count,
                               "box": [float(v) for v in grid.box]}
            if lam is not None:
                entry["result"]["eigenvalue"] = float(lam)
            entry["csv"] = csv_path.name
        elif job.kind == "full_pipeline":
            job = Job(job.kind, job.id, job.preset, {"bc": "dirichlet", "t_sensitivity": True, **job.params},
                      job.numerics, job.outputs)
            summary, res = _spectrum(job)
            cid = "tripode" if job.preset == "l_shape" else "sixlegs"
            c = _certificate(job, cid, lam=_fem_input(res))
            entry["result"] = {"type": "pipeline", "spectrum": summary, "certificate": c.to_json()}
        entry["status"] = "ok"
    except KeyError as exc:
        entry["status"] = "error"
        entry["error"] = f"missing parameter {exc.args[0]!r}"
    except Exception as exc:  # recorded per job, never fatal to the run
        entry["status"] = "error"
        entry["error"] = f"{type(exc).__name__}: {exc}"
    return entry


def run_config(config: RunConfig, out, jobs: int = 1) -> dict:
    """Run every job (``jobs`` at a time) and write ``report.json`` and ``report.txt``."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        results = list(pool.map(lambda j: run_job(j, out), config.jobs))
    report = {
        "version": config.version,
        "results": results,
        "metadata": {"timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"), "tmcert_version": __version__},
    }
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    (out / "report.txt").write_text(format_report(results))
    return report


def comparable(report: dict) -> str:
    """Canonical text of a report with the metadata block removed."""
    return json.dumps({k: v for k, v in report.items() if k != "metadata"}, indent=2, sort_keys=True)


def _report_rows(entry):
    r = entry.get("result", {})
    if entry["status"] != "ok":
        return [(entry["id"], entry["kind"], "error", "", "", entry["error"])]
    t = r.get("type")
    if t == "eigen":
        return [(entry["id"], entry["kind"], f"lambda_{i + 1}", f"{v:.10g}", "", "")
                for i, v in enumerate(r["eigenvalues"])]
    if t == "kappa":
        return [(entry["id"], entry["kind"], f"kappa({x['a']:.6g})", f"{x['kappa']:.10g}", "", "")
                for x in r["roots"]]
    if t == "certificate":
        rows = [(entry["id"], entry["kind"], r["id"], "", f"{r['margin']:.6g} +- {r['uncertainty']:.2g}", r["verdict"])]
        if "tail_limit" in r["extras"]:
            rows.append((entry["id"], entry["kind"], "2 C_sq C2 - 6", f"{r['extras']['tail_limit']:.6g}", "", ""))
        return rows
    if t == "pipeline":
        c = r["certificate"]
        return [(entry["id"], entry["kind"], "lambda_1", f"{r['spectrum']['eigenvalues'][0]:.10g}", "", ""),
                (entry["id"], entry["kind"], c["id"], "", f"{c['margin']:.6g} +- {c['uncertainty']:.2g}", c["verdict"])]
    return [(entry["id"], entry["kind"], r.get("field", ""), f"{r.get('points', '')} points", "", "")]


def format_report(results: List[dict]) -> str:
    head = ("job", "kind", "quantity", "value", "margin", "verdict")
    rows = [head] + [row for e in results for row in _report_rows(e)]
    widths = [max(len(str(r[i])) for r in rows) for i in range(len(head))]
    lines = ["  ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


# -- entry point -------------------------------------------------------------------


def _cmd_run(args) -> int:
    try:
        config = RunConfig.load(args.config)
    except (OSError, ConfigError) as exc:
        print(f"tmcert: {args.config}: {exc}", file=sys.stderr)
        return 2
    report = run_config(config, args.out, args.jobs)
    print(format_report(report["results"]), end="")
    return 0 if all(e["status"] == "ok" for e in report["results"]) else 1


def _cmd_suite(args) -> int:
    from . import suite

    results = suite.paper_table(h=args.h)
    print(suite.format_table(results))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "paper_table.json").write_text(
            json.dumps([r.to_json() for r in results], indent=2, sort_keys=True) + "\n")
    return 0


def _cmd_kappa(args) -> int:
    r = cert.kappa(args.a)
    print(f"kappa({args.a!r}) = {r.kappa!r}  residual {r.residual:.3g}")
    return 0


def _cmd_spectrum(args) -> int:
    job = Job("spectrum", "cli", args.preset, {"bc": args.bc}, Numerics(h=args.h, T=args.T, k=args.k))
    summary, _ = _spectrum(job)
    for i, v in enumerate(summary["eigenvalues"]):
        err = summary.get("discretisation_error", [None] * (i + 1))[i]
        print(f"lambda_{i + 1} = {v:.10g}" + ("" if err is None else f"  (+- {err:.2g})"))
    return 0


def _positive(kind):
    def conv(s):
        v = kind(s)
        if not v > 0:
            raise argparse.ArgumentTypeError("must be positive")
        return v

    return conv


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tmcert", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute a JSON run configuration")
    p.add_argument("config")
    p.add_argument("--jobs", type=_positive(int), default=1)
    p.add_argument("--out", default="tmcert-out")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("suite", help="run a built-in reproduction suite")
    p.add_argument("name", choices=["paper_table"])
    p.add_argument("--h", type=_positive(float), default=None, help="mesh size for the 2D eigenvalue checks")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_suite)

    p = sub.add_parser("kappa", help="root of sqrt(k) tan(sqrt(k)/2) = a")
    p.add_argument("a", type=_positive(float))
    p.set_defaults(func=_cmd_kappa)

    p = sub.add_parser("spectrum", help="FEM eigenvalues of a preset domain")
    p.add_argument("preset", choices=PRESETS)
    p.add_argument("--bc", choices=["dirichlet", "neumann"], default="dirichlet")
    p.add_argument("--h", type=_positive(float), default=1.0 / 32)
    p.add_argument("--T", type=_positive(float), default=4.0)
    p.add_argument("-k", type=_positive(int), default=1)
    p.set_defaults(func=_cmd_spectrum)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
