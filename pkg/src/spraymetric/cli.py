"""Command-line driver: sample points, run condition suites, integrate trajectories."""
from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import dynamics as dy
from . import examples as ex
from . import fieldspec as fs
from . import grassmann as gr
from . import metrizability as mz
from .errors import ConfigError, DegenerateRay, DomainError, SprayMetricError
from .fieldspec import EPS_FIBRE, Point

SCHEMA = "spraymetric.report/1"
SUITES = ("helmholtz", "bm", "twoform", "grassmann", "dynamics", "example")
DEFAULT_TOLS = {"helmholtz": 1e-8, "bm": 1e-8, "twoform": 1e-8, "grassmann": 1e-10, "dynamics": 1e-6,
                "example": 1e-9}


@dataclass
class RunConfig:
    spray: str
    dim: int | None = None
    finsler: str | None = None
    theta: str | None = None
    multiplier: str | None = None
    twoform: str | None = None
    suites: tuple = ("helmholtz",)
    points: int = 100
    seed: int = 0
    xbox: tuple = ((-1.0, 1.0),)
    fibre_shell: tuple = (0.5, 2.0)
    tol: float | None = None
    suite_tols: dict = field(default_factory=dict)
    skip_domain_errors: bool = False
    workers: int = 1
    t_end: float = 1.0

    def validate(self) -> None:
        if self.points < 1:
            raise ConfigError("points must be at least 1")
        if not self.suites:
            raise ConfigError("select at least one suite")
        bad = [s for s in self.suites if s not in SUITES]
        if bad:
            raise ConfigError(f"unknown suite(s): {', '.join(bad)}")
        rmin, rmax = self.fibre_shell
        if rmin < EPS_FIBRE or rmax < rmin:
            raise ConfigError(f"fibre shell must satisfy {EPS_FIBRE:g} <= r_min <= r_max")
        for lo, hi in self.xbox:
            if hi < lo:
                raise ConfigError("box bounds must be ordered")
        certs = [c for c in (self.finsler, self.theta, self.multiplier, self.twoform) if c]
        if len(certs) > 1:
            raise ConfigError("give at most one certificate")
        if self.workers < 1:
            raise ConfigError("workers must be positive")

    def tolerance(self, suite: str) -> float:
        if suite in self.suite_tols:
            return float(self.suite_tols[suite])
        return float(self.tol) if self.tol is not None else DEFAULT_TOLS[suite]


# -- loading -----------------------------------------------------------------------


def _infer_dim(text: str) -> int:
    for n in range(1, 7):
        try:
            fs.parse_field(text, "spray", n)
            return n
        except SprayMetricError:
            continue
    raise ConfigError("cannot infer the dimension of the spray; pass --dim")


def load_spray(source: str, dim: int | None = None):
    name = source.strip().lower()
    if name in ("spiral", "circle", "flat"):
        return ex.builtin_spray(name, n=dim)
    text = Path(source).read_text(encoding="utf-8") if Path(source).is_file() else source
    return fs.parse_field(text, "spray", dim or _infer_dim(text))


def _load_cert(source, kind, n, builtins=None):
    if builtins and source.strip().lower() in builtins:
        return builtins[source.strip().lower()]()
    return fs.load_field(source, kind, n)


class Context:
    """Spray and certificate objects for one run, rebuilt inside each worker process."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.spray = load_spray(cfg.spray, cfg.dim)
        n = self.n = self.spray.n
        self.F = self.multiplier = self.oneform = self.form = None
        if cfg.finsler:
            builtins = dict(ex.BUILTIN_FINSLER, euclidean=lambda: ex.euclidean_norm(n))
            self.F = _load_cert(cfg.finsler, "scalar", n, builtins)
            self.multiplier = mz.Multiplier.from_finsler(self.F)
            self.oneform = mz.OneForm.hilbert(self.F)
            self.form = -mz.HilbertForm(self.oneform)
        elif cfg.theta:
            self.oneform = mz.OneForm.from_field(_load_cert(cfg.theta, "covector", n))
            self.multiplier = mz.Multiplier.from_oneform(self.oneform)
            self.form = -mz.HilbertForm(self.oneform)
        elif cfg.multiplier:
            builtins = {"identity": lambda: fs.parse_field(
                "; ".join(f"h{i}{i} = 1" for i in range(1, n + 1)), "sym2tensor", n)}
            self.multiplier = mz.Multiplier.from_field(_load_cert(cfg.multiplier, "sym2tensor", n, builtins))
            self.form = mz.KahlerForm(self.spray, self.multiplier)
        elif cfg.twoform:
            self.form = mz.FieldTwoForm(_load_cert(cfg.twoform, "twoform", n))

    def require(self, what, suite):
        obj = getattr(self, what)
        if obj is None:
            raise ConfigError(f"suite {suite!r} needs a certificate providing a {what}")
        return obj

    def check_suites(self):
        needs = {"helmholtz": "multiplier", "bm": "oneform", "twoform": "form", "grassmann": "multiplier"}
        for s in self.cfg.suites:
            if s in needs:
                self.require(needs[s], s)
        if "example" in self.cfg.suites and self.cfg.spray.strip().lower() not in ("spiral", "circle"):
            raise ConfigError("the example suite runs only with the spiral or circle spray")

    def evaluate(self, p: Point) -> list:
        out = []
        for suite in self.cfg.suites:
            tol = self.cfg.tolerance(suite)
            if suite == "helmholtz":
                out.append(mz.helmholtz_residuals(self.spray, self.multiplier, p, tol))
            elif suite == "bm":
                out.append(mz.bm_residuals(self.spray, self.oneform, p, tol))
            elif suite == "twoform":
                out.append(mz.twoform_residuals(self.spray, self.form, p, tol))
            elif suite == "grassmann":
                out.append(gr.segre_checks(self.spray, self.multiplier, p, tol))
            elif suite == "dynamics":
                out.append(self._dynamics(p, tol))
            elif suite == "example":
                if self.n == 3:
                    out.append(ex.pullback_check_spiral(p, tol))
                else:
                    out.append(ex.circle_identity_check(p, tol))
        return out

    def _dynamics(self, p: Point, tol: float) -> mz.ConditionReport:
        tr = dy.integrate_geodesic(self.spray, p, self.cfg.t_end, 1e-10, t_eval=np.linspace(0, self.cfg.t_end, 21))
        c1 = dy.integrate_jacobi(self.spray, tr, p.y, np.zeros(self.n))
        c2 = dy.integrate_jacobi(self.spray, tr, np.zeros(self.n), p.y)
        speed = max(1.0, float(np.max(np.abs(tr.y))))
        entries = [
            mz._entry("jacobi_velocity", float(np.max(np.abs(c1.zeta - tr.y))), speed, tol),
            mz._entry("jacobi_linear", float(np.max(np.abs(c2.zeta - tr.times[:, None] * tr.y))), speed, tol),
        ]
        if self.form is not None:
            e1 = np.eye(self.n)[0]
            c3 = dy.integrate_jacobi(self.spray, tr, e1, np.zeros(self.n))
            c4 = dy.integrate_jacobi(self.spray, tr, np.zeros(self.n), e1)
            entries.append(mz._entry("pairing", dy.pairing_constancy(self.spray, self.form, tr, c3, c4), 1.0, tol))
        return mz.ConditionReport(p, "dynamics", tuple(entries))


# -- sampling and running ---------------------------------------------------------------


def sample_points(cfg: RunConfig, n: int) -> list:
    """Uniform base points in the box, Gaussian directions, log-uniform radii."""
    box = list(cfg.xbox)
    if len(box) == 1:
        box = box * n
    if len(box) != n:
        raise ConfigError(f"box has {len(box)} intervals for dimension {n}")
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    rmin, rmax = cfg.fibre_shell
    rng = np.random.default_rng(cfg.seed)
    pts = []
    for _ in range(cfg.points):
        x = lo + (hi - lo) * rng.random(n)
        d = rng.normal(size=n)
        while np.linalg.norm(d) < 1e-12:
            d = rng.normal(size=n)
        r = math.exp(rng.uniform(math.log(rmin), math.log(rmax)))
        pts.append(Point(x, r * d / np.linalg.norm(d)))
    return pts


_WORKER_CTX = None


def _init_worker(cfg_dict):
    global _WORKER_CTX
    _WORKER_CTX = Context(RunConfig(**cfg_dict))


def _eval_chunk(args):
    start, zs = args
    return [_point_record(_WORKER_CTX, start + k, Point.from_z(z)) for k, z in enumerate(zs)]


def _point_record(ctx: Context, index: int, p: Point) -> dict:
    try:
        reports = ctx.evaluate(p)
    except (DomainError, DegenerateRay, ArithmeticError) as exc:
        return {"index": index, "point": _pt(p), "error": f"{type(exc).__name__}: {exc}"}
    return {"index": index, "point": _pt(p), "reports": [_report_dict(r) for r in reports]}


def _pt(p: Point) -> dict:
    return {"x": [float(v) for v in p.x], "y": [float(v) for v in p.y]}


def _report_dict(r: mz.ConditionReport) -> dict:
    d = {"suite": r.suite, "entries": [e.to_dict() for e in r.entries]}
    if r.flags:
        d["flags"] = list(r.flags)
    return d


def run(cfg: RunConfig) -> tuple[int, dict]:
    """Evaluate every selected suite at every sampled point; exit status 0 iff all pass."""
    cfg.validate()
    ctx = Context(cfg)
    ctx.check_suites()
    pts = sample_points(cfg, ctx.n)
    if cfg.workers > 1 and len(pts) > 1:
        chunk = max(1, math.ceil(len(pts) / (4 * cfg.workers)))
        jobs = [(i, [p.z for p in pts[i : i + chunk]]) for i in range(0, len(pts), chunk)]
        with ProcessPoolExecutor(cfg.workers, initializer=_init_worker, initargs=(asdict(cfg),)) as pool:
            records = [rec for part in pool.map(_eval_chunk, jobs) for rec in part]
    else:
        records = [_point_record(ctx, i, p) for i, p in enumerate(pts)]
    summary = summarize(records, cfg.skip_domain_errors)
    report = {
        "schema": SCHEMA,
        "config": _config_echo(cfg),
        "per_point": _flatten(records),
        "errors": [r for r in records if "error" in r],
        "summary": summary,
    }
    return (0 if summary["passed"] else 1), report


def _flatten(records) -> list:
    out = []
    for rec in records:
        for rep in rec.get("reports", []):
            out.append({"index": rec["index"], "point": rec["point"], **rep})
    return out


def _config_echo(cfg: RunConfig) -> dict:
    d = asdict(cfg)
    del d["workers"]  # parallelism must not change the report bytes
    d["suites"] = list(cfg.suites)
    d["xbox"] = [list(b) for b in cfg.xbox]
    d["fibre_shell"] = list(cfg.fibre_shell)
    d["tolerances"] = {s: cfg.tolerance(s) for s in cfg.suites}
    d["prng"] = "numpy.default_rng(PCG64)"
    return d


def summarize(records, skip_domain_errors: bool = False) -> dict:
    conds: dict = {}
    for rec in records:
        for rep in rec.get("reports", []):
            for e in rep["entries"]:
                key = f"{rep['suite']}.{e['name']}"
                c = conds.setdefault(key, {"max_residual": 0.0, "failures": 0, "count": 0})
                c["max_residual"] = max(c["max_residual"], e["residual"])
                c["count"] += 1
                c["failures"] += 0 if e["pass"] else 1
    for c in conds.values():
        c["pass_rate"] = (c["count"] - c["failures"]) / c["count"] if c["count"] else 1.0
    n_err = sum(1 for r in records if "error" in r)
    ok = all(c["failures"] == 0 for c in conds.values()) and (skip_domain_errors or n_err == 0)
    evaluated = len(records) - n_err
    return {"conditions": dict(sorted(conds.items())), "points": len(records), "evaluated": evaluated,
            "domain_errors": n_err, "domain_errors_skipped": bool(skip_domain_errors), "passed": ok}


def dump_report(report: dict) -> str:
    return json.dumps(report, indent=1) + "\n"


@dataclass
class Report:
    schema: str
    config: dict
    per_point: list
    summary: dict
    errors: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)


def read_report(path_or_text) -> Report:
    """Load a report, keeping unknown top-level fields in ``extra``."""
    text = str(path_or_text)
    if not text.lstrip().startswith("{"):
        text = Path(text).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"report is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("report must be a JSON object")
    schema = data.get("schema", "")
    if not schema.startswith("spraymetric.report/"):
        raise ConfigError(f"not a spraymetric report (schema {schema!r})")
    known = {"schema", "config", "per_point", "summary", "errors"}
    return Report(schema, data.get("config", {}), data.get("per_point", []), data.get("summary", {}),
                  data.get("errors", []), {k: v for k, v in data.items() if k not in known})


# -- argument parsing ------------------------------------------------------------------------


def _floats(text: str, sep=",") -> list:
    try:
        return [float(t) for t in text.split(sep) if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot read numbers from {text!r}") from exc


def _box(text: str) -> tuple:
    out = []
    for part in text.split(";"):
        vals = _floats(part)
        if len(vals) != 2:
            raise ConfigError(f"box interval {part!r} needs two numbers")
        out.append(tuple(vals))
    return tuple(out)


def _state(text: str) -> Point:
    parts = text.split(";")
    if len(parts) != 2:
        raise ConfigError("state must look like 'x1,x2,...;y1,y2,...'")
    return Point(_floats(parts[0]), _floats(parts[1]))


def _suite_tols(items) -> dict:
    out = {}
    for item in items or []:
        for part in item.split(","):
            if "=" not in part:
                raise ConfigError(f"suite tolerance {part!r} must look like name=value")
            k, v = part.split("=", 1)
            out[k.strip()] = float(v)
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spraymetric", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="run condition suites at sampled points")
    c.add_argument("--spray", required=True, help="built-in name (spiral, circle, flat) or field file/text")
    c.add_argument("--dim", type=int)
    cert = c.add_mutually_exclusive_group()
    cert.add_argument("--finsler", help="scalar F (file, text, or spiral/circle/euclidean)")
    cert.add_argument("--theta", help="covector field theta_i")
    cert.add_argument("--multiplier", help="sym2tensor field h_ij (or 'identity')")
    cert.add_argument("--twoform", help="two-form field")
    c.add_argument("--suite", default="helmholtz")
    c.add_argument("--points", type=int, default=100)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--xbox", default="-1,1", help="'a,b' for every axis or 'a,b;c,d;...'; write --xbox=-2,2 for negative bounds")
    c.add_argument("--fibre-shell", default="0.5,2")
    c.add_argument("--tol", type=float)
    c.add_argument("--suite-tol", action="append", help="per-suite override, e.g. bm=1e-9")
    c.add_argument("--t-end", type=float, default=1.0, help="geodesic length for the dynamics suite")
    c.add_argument("--workers", type=int, default=1)
    c.add_argument("--skip-domain-errors", action="store_true")
    c.add_argument("--out")

    g = sub.add_parser("geodesic", help="integrate a geodesic and write CSV")
    j = sub.add_parser("jacobi", help="integrate a Jacobi field along a geodesic and write CSV")
    for s in (g, j):
        s.add_argument("--spray", required=True)
        s.add_argument("--dim", type=int)
        s.add_argument("--from", dest="start", required=True, help="'x1,..,xn;y1,..,yn'")
        s.add_argument("--t-end", type=float, required=True)
        s.add_argument("--tol", type=float, default=1e-10)
        s.add_argument("--samples", type=int, help="equally spaced output times (default: step points)")
        s.add_argument("--out")
    j.add_argument("--zeta0", required=True)
    j.add_argument("--nabla-zeta0", required=True)

    e = sub.add_parser("example", help="reproduce the built-in worked examples")
    e.add_argument("name", choices=["spiral", "circle"])
    e.add_argument("--verify", action="store_true")
    e.add_argument("--points", type=int, default=20)
    e.add_argument("--seed", type=int, default=0)
    return ap


def _config_from_args(a) -> RunConfig:
    return RunConfig(
        spray=a.spray, dim=a.dim, finsler=a.finsler, theta=a.theta, multiplier=a.multiplier, twoform=a.twoform,
        suites=tuple(s.strip() for s in a.suite.split(",") if s.strip()), points=a.points, seed=a.seed,
        xbox=_box(a.xbox), fibre_shell=tuple(_floats(a.fibre_shell)), tol=a.tol,
        suite_tols=_suite_tols(a.suite_tol), skip_domain_errors=a.skip_domain_errors, workers=a.workers,
        t_end=a.t_end,
    )


def _write(text: str, out) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _cmd_check(a) -> int:
    cfg = _config_from_args(a)
    status, report = run(cfg)
    _write(dump_report(report), a.out)
    s = report["summary"]
    print(f"{'PASS' if status == 0 else 'FAIL'}: {s['evaluated']}/{s['points']} points evaluated, "
          f"{sum(c['failures'] for c in s['conditions'].values())} failing entries", file=sys.stderr)
    return status


def _trajectory(a):
    spray = load_spray(a.spray, a.dim)
    p0 = _state(a.start)
    if p0.n != spray.n:
        raise ConfigError(f"start state has dimension {p0.n}, the spray has {spray.n}")
    t_eval = np.linspace(0.0, a.t_end, a.samples) if a.samples else None
    return spray, dy.integrate_geodesic(spray, p0, a.t_end, a.tol, t_eval=t_eval)


def _cmd_geodesic(a) -> int:
    _, tr = _trajectory(a)
    _to_csv(tr, a.out)
    return 0


def _cmd_jacobi(a) -> int:
    spray, tr = _trajectory(a)
    ch = dy.integrate_jacobi(spray, tr, _floats(a.zeta0), _floats(a.nabla_zeta0), a.tol)
    _to_csv(tr, a.out, (ch,))
    return 0


def _to_csv(tr, out, channels=()):
    if out:
        tr.to_csv(out, channels)
    else:
        tr.to_csv(sys.stdout, channels)


def _cmd_example(a) -> int:
    checks = verify_spiral(a.points, a.seed) if a.name == "spiral" else verify_circle(a.points, a.seed)
    ok = True
    for name, value, tol, passed in checks:
        ok &= passed
        if a.verify or not passed:
            print(f"{'PASS' if passed else 'FAIL'}  {name:<34} {value:.3e}  (tol {tol:g})")
    print("all checks passed" if ok else "some checks failed")
    return 0 if ok else 1


def _spiral_points(count, seed, genuine=True):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        y = rng.normal(size=3)
        if genuine and (abs(y[2]) < 0.05 * np.linalg.norm(y) or np.hypot(y[0], y[1]) < 0.05 * np.linalg.norm(y)):
            continue
        out.append(Point(rng.uniform(-1, 1, 3), y * rng.uniform(0.5, 2.0) / np.linalg.norm(y)))
    return out


def verify_spiral(points: int = 20, seed: int = 0) -> list:
    """The worked spiral example end to end: (name, worst value, tolerance, passed) rows."""
    S = ex.builtin_spray("spiral")
    F = ex.spiral_finsler()
    pts = _spiral_points(points, seed)
    rows = []

    def row(name, value, tol, passed=None):
        rows.append((name, float(value), tol, bool(value <= tol) if passed is None else bool(passed)))

    row("helmholtz (Hessian of F)", max(mz.helmholtz_residuals(S, F, p).aggregate for p in pts), 1e-8)
    bm = [mz.bm_residuals(S, F, p) for p in pts]
    row("bm conditions (Hilbert 1-form)", max(r.aggregate for r in bm), 1e-8, all(r.passed for r in bm))
    row("twoform conditions (-d theta)", max(mz.twoform_residuals(S, -mz.HilbertForm(F), p).aggregate
                                             for p in pts), 1e-8)
    row("three-way 2-form identity", max(ex.pullback_check_spiral(p).aggregate for p in pts), 1e-9)
    tr = dy.integrate_geodesic(S, Point([0, 0, 0], [1, 0, 0]), math.pi / 2, 1e-11)
    row("geodesic endpoint at t = pi/2", float(np.max(np.abs(tr.states[-1] - [1, 1, 0, 0, 1, 0]))), 1e-6)
    p0 = Point([0, 0, 0], [1, 0, 1])
    tr = dy.integrate_geodesic(S, p0, 10.0, 1e-11, t_eval=np.linspace(0, 10, 201))
    mu = np.hypot(tr.y[:, 0], tr.y[:, 1])
    row("first integrals mu, w", max(np.ptp(mu), np.ptp(tr.y[:, 2])), 1e-8)
    pc0 = ex.to_path_coords_spiral(p0)
    row("path coordinates along geodesic", max(pc0.distance(ex.to_path_coords_spiral(tr.point(k)))
                                               for k in range(len(tr.times))), 1e-6)
    planes = max(dy.totally_geodesic_residual(S, dy.AffineSubspace([0, 0, c], [[1, 0, 0], [0, 1, 0]]))
                 for c in (-1.0, 0.0, 2.5))
    row("planes z = const totally geodesic", planes, 1e-12)
    probe = dy.tangency_residual(S, dy.AffineSubspace([0, 0, 0], [[1, 0, 0], [0, 0, 1]]), [0, 0, 0], [1, 0, 0])
    rows.append(("plane y = 0 rejected (probe)", probe, 0.5, probe >= 0.5))
    row("restriction to z = 0 is the circle spray", ex.restriction_residual(), 0.0)
    inside = min(ex.fibre_minimum(F, [r * math.cos(a), r * math.sin(a), 0.0])
                 for r in (0.0, 1.0, math.sqrt(3.9)) for a in np.linspace(0, 2 * math.pi, 7))
    outside = max(ex.fibre_minimum(F, [r * math.cos(a), r * math.sin(a), 0.0])
                  for r in (math.sqrt(4.1), 2.5) for a in np.linspace(0, 2 * math.pi, 7))
    rows.append(("F > 0 inside x^2+y^2 <= 3.9", inside, 0.0, inside > 0))
    rows.append(("F <= 0 somewhere at x^2+y^2 >= 4.1", outside, 0.0, outside <= 0))
    return rows


def verify_circle(points: int = 20, seed: int = 0) -> list:
    S = ex.builtin_spray("circle")
    F = ex.circle_finsler()
    rng = np.random.default_rng(seed)
    pts = [Point(rng.uniform(-1, 1, 2), rng.normal(size=2)) for _ in range(points)]
    rows = []
    for name, vals, tol in (
        ("helmholtz (Hessian of F)", [mz.helmholtz_residuals(S, F, p).aggregate for p in pts], 1e-8),
        ("bm differential conditions", [mz.bm_residuals(S, F, p).aggregate for p in pts], 1e-8),
        ("d theta = -dxi ^ deta", [ex.circle_identity_check(p).aggregate for p in pts], 1e-10),
    ):
        rows.append((name, max(vals), tol, max(vals) <= tol))
    return rows


def main(argv=None) -> int:
    ap = build_parser()
    a = ap.parse_args(argv)
    try:
        return {"check": _cmd_check, "geodesic": _cmd_geodesic, "jacobi": _cmd_jacobi,
                "example": _cmd_example}[a.command](a)
    except SprayMetricError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
