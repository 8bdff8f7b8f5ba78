"""Command-line entry point: ``lab run <config.json>`` and ``lab list``.

A config is one JSON object::

    {"kind": "kernel-identity", "seed": 7, "curve": {...}, "params": {...}}

Each experiment returns results, named pass/fail assertions and CSV tables.
``report.json`` holds everything except wall time, which goes in ``timing.json``
so that reruns of one config give byte-identical reports.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .curve import CurveSpec, dyadic_partition, require_valid
from .errors import ConfigError, LabError
from .extension import (AffineMeasure, ExponentPair, TestFunction, extend, extend_many,
                        lambda_mass, lp_norm, uniformity_sweep)
from .geometry import (block_sweep, ineq9_quadrature_d2, ineq9_sup, shell_decay,
                       sum_range_box, theorem1_direct)
from .kernel import kernel_identity_residual, lemma1_sweep, psi, psi_fast
from .mc import DEFAULT_CHUNK
from .permutohedron import check_merge_inequalities, inclusion_rows
from .sublevel import sublevel_exponent

# kind -> (one-line description, anchor)
CATALOG = {
    "partition": ("dyadic partition of (a, b) by the level sets of omega", "omega(a_j) = 2^j"),
    "kernel-identity": ("J(t) against int omega psi(.; t) on random node tuples",
                        "Jacobian identity J = int omega psi"),
    "lemma1": ("min ratio of int f psi to its product lower bound", "lemma1_ratio: product lower bound for int f psi"),
    "permutohedron": ("A' / A'' generators inside A_r, exact decompositions, merge inequalities",
                      "generator inclusion; merge steps (ineq70)-(ineq74)"),
    "sublevel": ("MC measure of gap-product sublevel sets and its power law",
                 "sublevel bound (ineq61)"),
    "ineq9": ("integral of chi_E times the affine density in t_2..t_d, sup over t_1",
              "uniform bound (ineq9)"),
    "blocks": ("cell measures over level vectors, block ratios and the summed series",
               "block bound (ineq16), series (ineq15)"),
    "theorem1": ("|F|^-1 int_F (convolution of the affine measure) over boxes F",
                 "theorem1_direct: convolution of the affine measure"),
    "extension": ("|(f dlambda)^| along a frequency slice", "extension operator at the p = 1 endpoint"),
    "uniformity": ("finite-box restriction ratios across a curve family", "uniform restriction estimate"),
}

MC_KINDS = {"sublevel", "ineq9", "blocks", "theorem1", "lemma1", "kernel-identity"}


@dataclass
class ExperimentConfig:
    kind: str
    seed: int | None = None
    curve: dict | None = None
    curves: list = field(default_factory=list)
    params: dict = field(default_factory=dict)
    workers: int = 1
    chunk_size: int = DEFAULT_CHUNK
    allow_degenerate: bool = False

    @classmethod
    def from_dict(cls, obj) -> "ExperimentConfig":
        if not isinstance(obj, dict):
            raise ConfigError("config must be a JSON object", field="<root>")
        if "kind" not in obj:
            raise ConfigError("config is missing field 'kind'", field="kind")
        kind = obj["kind"]
        if kind not in CATALOG:
            raise ConfigError(f"unknown experiment kind {kind!r}", field="kind")
        known = {f for f in cls.__dataclass_fields__}
        extra = set(obj) - known
        if extra:
            raise ConfigError(f"unknown config fields {sorted(extra)}", field=sorted(extra)[0])
        cfg = cls(**obj)
        if kind in MC_KINDS and cfg.seed is None:
            raise ConfigError(f"{kind} needs an explicit seed", field="seed")
        if not isinstance(cfg.params, dict):
            raise ConfigError("params must be an object", field="params")
        if int(cfg.workers) < 1 or int(cfg.chunk_size) < 1:
            raise ConfigError("workers and chunk_size must be positive", field="workers")
        return cfg

    def curve_spec(self) -> CurveSpec:
        if self.curve is None:
            raise ConfigError(f"{self.kind} needs a curve", field="curve")
        spec = CurveSpec.from_dict(self.curve, self.allow_degenerate)
        _validate(spec, "curve")
        return spec

    def curve_specs(self) -> list:
        if not self.curves:
            raise ConfigError(f"{self.kind} needs a non-empty curves list", field="curves")
        out = []
        for i, c in enumerate(self.curves):
            spec = CurveSpec.from_dict(c, self.allow_degenerate)
            _validate(spec, f"curves[{i}]")
            out.append(spec)
        return out

    def param(self, name, default=None, required=False):
        if name in self.params:
            return self.params[name]
        if required:
            raise ConfigError(f"params is missing field {name!r}", field=f"params.{name}")
        return default


def _validate(spec: CurveSpec, where: str):
    try:
        require_valid(spec)
    except LabError as exc:
        raise ConfigError(f"{where} fails validation: {exc}", field=where) from exc


@dataclass
class RunReport:
    config: dict
    results: dict
    assertions: dict
    tables: dict = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return all(self.assertions.values())

    def to_dict(self) -> dict:
        return {"config": self.config, "results": self.results, "assertions": self.assertions,
                "passed": self.passed}


# ---------------------------------------------------------------------------
# experiments: each returns (results, assertions, tables)


def _random_nodes(spec: CurveSpec, count: int, rng, min_gap: float):
    a, b = spec.a, spec.b
    out = []
    while len(out) < count:
        t = np.sort(rng.uniform(a, b, spec.d))
        lo, hi = np.r_[a, t], np.r_[t, b]
        if np.all(hi - lo > min_gap * (b - a)):
            out.append(t)
    return np.array(out)


def _run_partition(cfg):
    spec = cfg.curve_spec()
    part = dyadic_partition(spec, tol=cfg.param("tol", 1e-12))
    ratios = part.doubling_ratios()
    lo, hi = cfg.param("ratio_range", [1 / 4, 4])
    rows = [[j, part.point(j), part.point(j + 1)] for j in part.levels]
    res = {"jmin": part.jmin, "jmax": part.jmax, "breakpoints": list(part.breakpoints),
           "doubling_ratios": [[j, r] for j, r in ratios]}
    ok = {"increasing": all(x < y for x, y in zip(part.breakpoints, part.breakpoints[1:])),
          "doubling_ratios_in_range": all(lo <= r <= hi for _, r in ratios)}
    return res, ok, {"partition": (["j", "left", "right"], rows)}


def _run_kernel_identity(cfg):
    spec = cfg.curve_spec()
    count = int(cfg.param("tuples", 100))
    tol = float(cfg.param("tol", 1e-6))
    rng = np.random.default_rng(cfg.seed)
    nodes = _random_nodes(spec, count, rng, float(cfg.param("min_gap", 1e-3)))
    fast = bool(cfg.param("fast", spec.d > 4))
    res_rows, agree = [], []
    for t in nodes:
        r = kernel_identity_residual(spec, t, fast=fast)
        res_rows.append([*t.tolist(), r])
        if spec.d <= 4 and spec.d >= 3:
            u = np.linspace(t[0], t[-1], 7)[1:-1]
            slow, quick = psi(spec, t, u), psi_fast(spec, t, u)
            agree.append(float(np.max(np.abs(slow - quick) / np.maximum(np.abs(slow), 1e-300))))
    worst = max(r[-1] for r in res_rows)
    res = {"d": spec.d, "tuples": count, "fast": fast, "max_residual": worst,
           "max_psi_disagreement": max(agree) if agree else None}
    ok = {"residual_below_tol": worst <= tol}
    if agree:
        ok["psi_fast_agrees"] = max(agree) <= tol
    header = [f"t{i + 1}" for i in range(spec.d)] + ["residual"]
    return res, ok, {"residuals": (header, res_rows)}


def _run_lemma1(cfg):
    d = int(cfg.param("d", required=True))
    n = int(cfg.param("n", 10**4))
    seeds = cfg.param("seeds", [cfg.seed, cfg.seed + 1])
    runs = [lemma1_sweep(d, n, int(s)) for s in seeds]
    mins = [r["min_ratio"] for r in runs]
    res = {"d": d, "n": n, "runs": runs}
    ok = {"positive": all(m > 0 for m in mins),
          "seeds_within_factor_2": max(mins) <= 2 * min(mins)}
    if d == 2:
        ok["d2_ratio_is_one"] = all(abs(m - 1) <= 1e-12 for m in mins)
    return res, ok, {"lemma1": (["seed", "min_ratio"], [[s, m] for s, m in zip(seeds, mins)])}


def _run_permutohedron(cfg):
    r_max = int(cfg.param("r_max", 6))
    l_max = int(cfg.param("l_max", 10))
    rows = inclusion_rows(r_max)
    merges = [check_merge_inequalities(la, lb) for la in range(1, l_max + 1)
              for lb in range(1, l_max + 1)]
    violations = [v | {"la": m["la"], "lb": m["lb"]} for m in merges for v in m["violations"]]
    res = {"r_max": r_max, "rows": rows, "l_max": l_max,
           "merge_checked": sum(m["checked"] for m in merges), "merge_violations": violations}
    ok = {"all_members": all(r["member"] for r in rows),
          "decompositions_exact": all(r["exact"] for r in rows),
          "merge_inequalities_hold": not violations}
    table = [[r["r"], r["k"], " ".join(map(str, r["parts"])), r["family"], " ".join(r["generator"]),
              r["member"], r["decomposition_size"]] for r in rows]
    header = ["r", "k", "parts", "family", "generator", "member", "decomposition_size"]
    return res, ok, {"permutohedron": (header, table)}


def _run_sublevel(cfg):
    ps = [int(p) for p in cfg.param("p", [1, 2, 3])]
    box = float(cfg.param("box", 10.0))
    n = int(cfg.param("n", 10**6))
    lams = cfg.param("lams", None)
    tol = float(cfg.param("slope_tol", 0.1))
    res, ok, rows = {"fits": []}, {}, []
    for i, p in enumerate(ps):
        fit = sublevel_exponent(p, box, lams, n, cfg.seed + 1000 * i, cfg.chunk_size, cfg.workers)
        for lam, e in zip(fit["lams"], fit["estimates"]):
            rows.append([p, lam, e.value, e.stderr, e.hits])
        res["fits"].append({"p": p, "slope": fit["slope"], "expected": fit["expected"],
                            "estimates": [e.to_dict() for e in fit["estimates"]]})
        ok[f"slope_p{p}"] = abs(fit["slope"] - fit["expected"]) <= tol
        if p == 1:
            ok["p1_exact"] = all(e.within(min(lam, box)) for lam, e in zip(fit["lams"], fit["estimates"]))
    return res, ok, {"sublevel": (["p", "lam", "measure", "stderr", "hits"], rows)}


def _t1_grid(cfg, spec):
    grid = cfg.param("t1", None)
    if grid is not None:
        return [float(t) for t in grid]
    m = int(cfg.param("t1_points", 20))
    return [spec.a + (spec.b - spec.a) * (i + 0.5) / m for i in range(m)]


def _run_ineq9(cfg):
    spec = cfg.curve_spec()
    grid = _t1_grid(cfg, spec)
    n = int(cfg.param("n", 10**5))
    sampler = cfg.param("sampler", "uniform")
    sup = ineq9_sup(spec, grid, n, cfg.seed, sampler, cfg.chunk_size, cfg.workers)
    rows = [[t, e.value, e.stderr, e.hits] for t, e in zip(grid, sup["estimates"])]
    res = {"sup": sup["sup"], "argsup": sup["argsup"],
           "estimates": [e.to_dict() for e in sup["estimates"]]}
    ok = {"finite": all(math.isfinite(r[1]) for r in rows)}
    if "bound" in cfg.params:
        ok["sup_below_bound"] = sup["sup"] <= float(cfg.params["bound"])
    if spec.d == 2 and cfg.param("quadrature_check", True):
        quad = [ineq9_quadrature_d2(spec, t) for t in grid]
        res["quadrature"] = quad
        ok["matches_quadrature"] = all(e.within(q, 3.0) or abs(e.value - q) <= 1e-12
                                       for e, q in zip(sup["estimates"], quad))
        rows = [r + [q] for r, q in zip(rows, quad)]
        return res, ok, {"ineq9": (["t1", "value", "stderr", "hits", "quadrature"], rows)}
    return res, ok, {"ineq9": (["t1", "value", "stderr", "hits"], rows)}


def _run_blocks(cfg):
    spec = cfg.curve_spec()
    part = dyadic_partition(spec)
    j = cfg.param("j1", part.jmin + 1)
    lo, hi = part.interval(int(j))
    t1 = lo + float(cfg.param("t1_frac", 0.3)) * (hi - lo)
    sweep = block_sweep(spec, part, t1, int(cfg.param("width", 12)), int(cfg.param("n", 20000)),
                        cfg.seed, True, cfg.chunk_size, cfg.workers)
    decay = shell_decay(sweep["shell_sums"])
    res = dict(sweep, decay=decay)
    ok = {"decay_rate": decay["rate"] >= float(cfg.param("min_rate", 1.5))}
    if "max_ratio_bound" in cfg.params:
        ok["ratio_bounded"] = sweep["max_ratio"] <= float(cfg.params["max_ratio_bound"])
    rows = [[" ".join(map(str, r["levels"])), r["k"], " ".join(map(str, r["parts"])), r["measure"],
             r["stderr"], r["ratio"], r["ratio_stderr"]] for r in sweep["rows"]]
    shells = [[L, s, e, p] for L, (s, e, p) in enumerate(zip(sweep["shell_sums"], sweep["shell_stderr"],
                                                               sweep["partial_sums"]))]
    return res, ok, {
        "blocks": (["levels", "k", "parts", "measure", "stderr", "ratio", "ratio_stderr"], rows),
        "shells": (["shell", "sum", "stderr", "partial_sum"], shells)}


def _run_theorem1(cfg):
    spec = cfg.curve_spec()
    boxes = cfg.param("boxes", None)
    if boxes is None:
        lo, hi = sum_range_box(spec)
        boxes = [{"lo": lo.tolist(), "hi": hi.tolist()}]
    n = int(cfg.param("n", 20000))
    rows, vals = [], []
    for i, box in enumerate(boxes):
        est = theorem1_direct(spec, box["lo"], box["hi"], n, cfg.seed + i,
                              int(cfg.param("t1_order", 24)), cfg.chunk_size, cfg.workers)
        vals.append(est)
        rows.append([i, " ".join(map(str, box["lo"])), " ".join(map(str, box["hi"])),
                     float(est.value), float(est.stderr)])
    res = {"estimates": [dict(e.to_dict(), value=float(e.value), stderr=float(e.stderr)) for e in vals]}
    ok = {"finite": all(math.isfinite(float(e.value)) for e in vals)}
    if "bound" in cfg.params:
        ok["below_bound"] = all(float(e.value) <= float(cfg.params["bound"]) for e in vals)
    return res, ok, {"theorem1": (["box", "lo", "hi", "value", "stderr"], rows)}


def _test_function(obj, where="params.f"):
    try:
        return TestFunction.from_dict(obj or {"kind": "constant"})
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad test function: {exc}", field=where) from exc


def _run_extension(cfg):
    spec = cfg.curve_spec()
    meas = AffineMeasure(spec)
    f = _test_function(cfg.param("f"))
    direction = np.asarray(cfg.param("direction", [0.0] * (spec.d - 1) + [1.0]), dtype=float)
    if direction.size != spec.d:
        raise ConfigError("direction must have d entries", field="params.direction")
    s = np.geomspace(float(cfg.param("s_min", 1.0)), float(cfg.param("s_max", 1e4)),
                     int(cfg.param("points", 200)))
    vals = extend_many(meas, f, s[:, None] * direction[None, :])
    mass = lambda_mass(meas, f)
    l1 = lp_norm(meas, f, 1)
    tol = float(cfg.param("tol", 1e-8))
    at0 = extend(meas, f, np.zeros(spec.d), tol=tol * 1e-2)
    res = {"mass": mass, "l1_norm": l1, "extend_at_0": [at0.real, at0.imag],
           "max_abs": float(np.abs(vals).max())}
    ok = {"zero_frequency_is_mass": abs(at0 - mass) <= tol,
          "bounded_by_l1": bool(np.all(np.abs(vals) <= l1 + tol))}
    if "expected_slope" in cfg.params:
        slope = float(np.polyfit(np.log(s), np.log(np.abs(vals)), 1)[0])
        res["slope"] = slope
        ok["decay_slope"] = abs(slope - float(cfg.params["expected_slope"])) <= float(
            cfg.param("slope_tol", 0.05))
    rows = [[si, *(si * direction).tolist(), abs(v), v.real, v.imag] for si, v in zip(s, vals)]
    header = ["s"] + [f"xi{i + 1}" for i in range(spec.d)] + ["abs", "re", "im"]
    return res, ok, {"xi_slice": (header, rows)}


def _run_uniformity(cfg):
    specs = cfg.curve_specs()
    d = specs[0].d
    if any(s.d != d for s in specs):
        raise ConfigError("all curves in a uniformity sweep need the same d", field="curves")
    corpus = [_test_function(f, f"params.f_corpus[{i}]")
              for i, f in enumerate(cfg.param("f_corpus", [{"kind": "constant"}]))]
    pair = ExponentPair(float(cfg.param("p", 2.0)), d, bool(cfg.param("exploratory", False)))
    rep = uniformity_sweep(specs, corpus, pair, float(cfg.param("R", 1e3)), int(cfg.param("grid", 128)))
    ok = {"spread_within_bound": rep["spread"] <= float(cfg.param("max_spread", 4.0))}
    rows = [[i, json.dumps(r["curve"], sort_keys=True), r["max_ratio"]] for i, r in enumerate(rep["rows"])]
    return rep, ok, {"uniformity": (["curve", "spec", "max_ratio"], rows)}


EXPERIMENTS = {
    "partition": _run_partition,
    "kernel-identity": _run_kernel_identity,
    "lemma1": _run_lemma1,
    "permutohedron": _run_permutohedron,
    "sublevel": _run_sublevel,
    "ineq9": _run_ineq9,
    "blocks": _run_blocks,
    "theorem1": _run_theorem1,
    "extension": _run_extension,
    "uniformity": _run_uniformity,
}


# ---------------------------------------------------------------------------
# orchestration


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else repr(v)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if hasattr(x, "to_dict"):
        return _jsonable(x.to_dict())
    return x


def run(cfg: ExperimentConfig) -> RunReport:
    start = time.perf_counter()
    results, assertions, tables = EXPERIMENTS[cfg.kind](cfg)
    return RunReport(_jsonable(asdict(cfg)), _jsonable(results),
                     {k: bool(v) for k, v in assertions.items()}, tables,
                     time.perf_counter() - start)


def write_report(report: RunReport, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    (out / "timing.json").write_text(json.dumps({"wall_time": report.wall_time}) + "\n")
    for name, (header, rows) in report.tables.items():
        with open(out / f"{name}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(_jsonable(rows))


def load_config(path: str | Path, overrides: dict | None = None) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", field="<file>") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}",
                          field=f"line {exc.lineno}") from exc
    if isinstance(obj, dict):
        obj.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return ExperimentConfig.from_dict(obj)


def list_experiments() -> str:
    width = max(map(len, CATALOG))
    return "\n".join(f"{k.ljust(width)}  {desc}  [{anchor}]" for k, (desc, anchor) in CATALOG.items())


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="lab", description="Numerical experiments on affine arclength restriction.")
    sub = ap.add_subparsers(dest="cmd", required=True)
    rp = sub.add_parser("run", help="run one experiment config")
    rp.add_argument("config")
    rp.add_argument("--workers", type=int)
    rp.add_argument("--out", default="out")
    rp.add_argument("--allow-degenerate", action="store_true", default=None)
    sub.add_parser("list", help="list experiment kinds")
    args = ap.parse_args(argv)

    if args.cmd == "list":
        print(list_experiments())
        return 0
    try:
        cfg = load_config(args.config, {"workers": args.workers, "allow_degenerate": args.allow_degenerate})
        report = run(cfg)
    except ConfigError as exc:
        print(f"config error [{exc.field}]: {exc}", file=sys.stderr)
        return 2
    except LabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    write_report(report, Path(args.out))
    for name, passed in report.assertions.items():
        print(f"{'PASS' if passed else 'FAIL'} {name}")
    print(f"wrote {args.out}/report.json ({report.wall_time:.1f}s)")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
