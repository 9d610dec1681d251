"""Batch front-end: cyclobessel {relations,hc,bessel,calibrate,all}."""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import dunkl, quad, radial, series
from .dunkl import Convention, DunklParams, FROZEN_CONVENTION

SCHEMA_VERSION = "1"
SEED_ENV = "CYCLOBESSEL_SEED"
TIMESTAMP_KEY = "generated_at"

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config


def _num(s: str):
    s = s.strip()
    try:
        return Fraction(s)
    except ValueError:
        pass
    try:
        return complex(s.replace("i", "j")) if ("i" in s or "j" in s) else float(s)
    except ValueError as exc:
        raise ConfigError(f"not a number: {s!r}") from exc


def _array(s: str):
    s = s.strip()
    if not s:
        return []
    return [_num(v) for v in s.split(",")]


def _points(s: str):
    return [_array(p) for p in s.split(";") if p.strip()]


INT_KEYS = {"n", "ell", "M", "D_max", "N", "samples", "seed", "alpha_sign", "c_sign", "ell_max", "m_max",
            "degree_bound", "workers"}
STR_KEYS = {"estimator", "normalization", "mc_pipeline"}


def parse_config(text: str) -> dict:
    cfg: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value")
        key, val = (p.strip() for p in line.split("=", 1))
        try:
            if key in INT_KEYS:
                cfg[key] = int(val)
            elif key in STR_KEYS:
                cfg[key] = val
            elif key == "k":
                cfg[key] = None if val == "symbolic" else _num(val)
            elif key in ("c", "C", "lam"):
                cfg[key] = None if val == "symbolic" else _array(val)
            elif key == "x":
                cfg[key] = _points(val) if ";" in val else [[v] for v in _array(val)]
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from exc
    return cfg


def validate(cfg: dict) -> dict:
    cfg = dict(cfg)
    cfg.setdefault("n", 1)
    cfg.setdefault("ell", 2)
    n, ell = cfg["n"], cfg["ell"]
    if n < 1 or ell < 1:
        raise ConfigError("n and ell must be positive")
    if cfg.get("c") is not None and cfg.get("C") is not None:
        raise ConfigError("give either c or C, not both")
    if cfg.get("c") is not None and len(cfg["c"]) != ell - 1:
        raise ConfigError(f"c must have length ell-1 = {ell - 1}")
    if cfg.get("C") is not None:
        if len(cfg["C"]) != ell:
            raise ConfigError(f"C must have length ell = {ell}")
        if sum(cfg["C"]) != 0:
            raise ConfigError("C must sum to 0")
    for key in ("alpha_sign", "c_sign"):
        if key in cfg and cfg[key] not in (1, -1):
            raise ConfigError(f"{key} must be +1 or -1")
    if cfg.get("lam") is not None and len(cfg["lam"]) != n:
        raise ConfigError("lam must have length n")
    x = cfg.get("x")
    if x and n > 1 and len(x) == n and all(len(p) == 1 for p in x):
        # "x = a,b" without ';' is one point when n > 1
        cfg["x"] = [[p[0] for p in x]]
    for p in cfg.get("x", []):
        if len(p) != n:
            raise ConfigError("every x point must have n coordinates")
    return cfg


def convention_from(cfg: dict, calibrate_if_missing: bool, report: dict) -> Convention:
    if "alpha_sign" in cfg or "c_sign" in cfg:
        conv = Convention(cfg.get("alpha_sign", FROZEN_CONVENTION.alpha_sign), cfg.get("c_sign", FROZEN_CONVENTION.c_sign))
        report["convention_source"] = "config"
        return conv
    if calibrate_if_missing:
        cal = dunkl.calibrate()
        report["calibration"] = _strip(cal)
        if cal["chosen"] is not None:
            report["convention_source"] = "calibrated"
            return Convention(cal["chosen"]["alpha_sign"], cal["chosen"]["c_sign"])
    report["convention_source"] = "frozen"
    return FROZEN_CONVENTION


def _strip(obj):
    """Make a report JSON friendly."""
    if isinstance(obj, dict):
        return {str(k): _strip(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_strip(v) for v in obj]
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (str, int, float, bool)) or obj is None:
        return obj
    return repr(obj)


def _params(cfg, conv, n=None, ell=None) -> DunklParams:
    n = cfg["n"] if n is None else n
    ell = cfg["ell"] if ell is None else ell
    c = cfg.get("c")
    if cfg.get("C") is not None and ell == cfg["ell"]:
        c = series.c_from_C(cfg["C"], c_sign=conv.c_sign)
    if ell != cfg["ell"]:
        c = None
    return DunklParams(n, ell, k=cfg.get("k"), c=c, convention=conv)


# ---------------------------------------------------------------------------
# commands


def cmd_relations(cfg: dict) -> tuple[int, dict]:
    report: dict = {"command": "relations"}
    conv = convention_from(cfg, False, report)
    p = _params(cfg, conv)
    bound = cfg.get("degree_bound")
    rel = dunkl.verify_relations(p, bound)
    report["relations"] = {k: rel[k] for k in ("n", "ell", "degree_bound", "families", "yx_off_variant", "status")}
    report["relations"]["failures"] = [r for r in rel["records"] if r["status"] != "PASS"]
    ok = rel["status"] == "PASS"
    j = dunkl.j_embedding_check(p, bound or 8)
    report["j_embedding"] = j
    ok = ok and j["status"] == "PASS"
    if p.n >= 2:
        i = dunkl.i_embedding_check(p, bound)
        report["i_embedding"] = i
        ok = ok and i["status"] == "PASS"
    report["convention"] = conv.as_dict()
    report["status"] = "PASS" if ok else "FAIL"
    return (EXIT_OK if ok else EXIT_FAIL), report


def _degenerate_roots(cfg, conv, ell):
    if ell != cfg["ell"] or (cfg.get("c") is None and cfg.get("C") is None):
        return False
    C = cfg.get("C")
    if C is None:
        C = [v.to_complex() for v in (x.constant_value() for x in DunklParams(1, ell, c=cfg["c"], convention=conv).C())]
    a = series.kernel_roots(C)
    return any(abs(complex(a[i]) - complex(a[j])) < 1e-12 for i in range(len(a)) for j in range(i + 1, len(a)))


def cmd_hc(cfg: dict) -> tuple[int, dict]:
    report: dict = {"command": "hc"}
    conv = convention_from(cfg, True, report)
    ell_max = cfg.get("ell_max", cfg["ell"])
    m_max = cfg.get("m_max", 2)
    checks = []
    ok = True
    for ell in range(1, ell_max + 1):
        p = _params(cfg, conv, n=1, ell=ell)
        d = dunkl.dprime(p)
        entry = {"ell": ell, "dprime_factorization": "PASS" if d.agree else "FAIL"}
        if _degenerate_roots(cfg, conv, ell):
            entry["kernel"] = "SKIP"
            entry["note"] = "repeated kernel exponent: logarithmic case"
        else:
            entry["kernel"] = dunkl.kernel_check(p, d.operator)["status"]
        hc = radial.hc_identity_check(p)
        entry["hc"] = {k: hc[k] for k in ("status", "proportionality_constant", "expected_constant")}
        entry["dm"] = []
        for m in range(1, m_max + 1):
            dm = radial.dm_identity_check(m, p)
            entry["dm"].append({k: dm[k] for k in ("m", "status", "proportionality_constant", "expected_constant")})
        statuses = [entry["dprime_factorization"], entry["kernel"], hc["status"]] + [x["status"] for x in entry["dm"]]
        ok = ok and all(s in ("PASS", "SKIP") for s in statuses)
        checks.append(entry)
    report["checks"] = checks
    report["convention"] = conv.as_dict()
    report["status"] = "PASS" if ok else "FAIL"
    return (EXIT_OK if ok else EXIT_FAIL), report


def cmd_calibrate(cfg: dict) -> tuple[int, dict]:
    cal = dunkl.calibrate()
    report = {"command": "calibrate", "calibration": _strip(cal), "status": cal["status"]}
    return (EXIT_OK if cal["status"] == "PASS" else EXIT_FAIL), report


def _bessel_n1(cfg, report, rows):
    ell = cfg["ell"]
    C = [int(v) for v in (cfg.get("C") or [0] * ell)]
    lam = complex(cfg.get("lam", [1])[0])
    lam = lam.real if lam.imag == 0 else lam
    M, N = cfg.get("M", 40), cfg.get("N", 64)
    norm = cfg.get("normalization", "factorial")
    s = quad.matching_series_n1(ell, C, lam, M)
    pts, notes = [], []
    for (x,) in cfg.get("x", [[0.5], [1.0], [1.5], [2.0]]):
        x = float(x)
        sv, tail = series.eval_n1(s, x)
        if x == 0:
            notes.append("x=0: quadrature refused, series value used")
            qv = sv
        else:
            qv = quad.torus_bessel_n1(ell, C, lam, x, N, norm).value
            pts.append(([x], quad.QuadEstimate(qv, 0.0, N**ell)))
        rows.append({"x": x, "series_re": sv.real, "series_im": sv.imag, "quad_re": qv.real,
                     "quad_im": qv.imag, "abs_diff": abs(sv - qv)})
    cc = quad.cross_check(lambda p: series.eval_n1(s, p[0])[0], pts, expected=1.0) if pts else {"status": "PASS"}
    report.update({"estimator": "torus", "C": C, "lam": lam, "M": M, "N": N, "normalization": norm,
                   "notes": notes, "cross_check": cc})
    return cc["status"] == "PASS"


def _bessel_mc(cfg, report, rows, seed):
    n, ell = cfg["n"], cfg["ell"]
    k = int(cfg.get("k") or 0)
    C = [int(v) for v in (cfg.get("C") or [0] * ell)]
    lam = [float(v) for v in (cfg.get("lam") or list(range(1, n + 1)))]
    samples = cfg.get("samples", 100000)
    D_max = cfg.get("D_max", 30)
    pipeline = cfg.get("mc_pipeline", "normalized")
    c_s = series.c_from_C([-v for v in C], c_sign=FROZEN_CONVENTION.c_sign)
    if pipeline == "normalized":
        k_series = k
    elif pipeline == "dictionary":
        k_series = -(k + 1)
    else:
        raise ConfigError(f"unknown mc_pipeline {pipeline!r}")
    e = series.series_multivariate(n, ell, k_series, c_s, [ell * v for v in lam], D_max, exact=False)
    pts = []
    for x in cfg.get("x", [[0.3, 1.1], [0.5, 1.4], [0.8, -0.6], [1.2, 0.4]]):
        x = [float(v) for v in x]
        if pipeline == "normalized":
            q = quad.mc_bessel(n, ell, k, C, lam, x, samples, seed, cfg.get("workers", 1))
        else:
            raw = quad.mc_integral(n, ell, k, C, lam, x, samples, seed, cfg.get("workers", 1))
            d = 1.0
            for v in x:
                d *= v ** quad._t(C)
            q = quad.QuadEstimate(raw.value / d, raw.stderr / abs(d), raw.samples_or_nodes, seed)
        pts.append((x, q))
    cc = quad.cross_check(lambda p: series.eval_multivariate(e, p), pts)
    for (x, q), pt in zip(pts, cc["points"]):
        rows.append({"x": ";".join(repr(v) for v in x), "series_re": pt["series"][0], "series_im": pt["series"][1],
                     "quad_re": q.value.real, "quad_im": q.value.imag, "stderr": q.stderr, "z": pt["z"]})
    report.update({"estimator": "monte_carlo", "mc_pipeline": pipeline, "k": k, "k_series": k_series, "C": C,
                   "lam": lam, "samples": samples, "seed": seed, "D_max": D_max, "cross_check": cc})
    return cc["status"] == "PASS"


def cmd_bessel(cfg: dict, seed: int = 0) -> tuple[int, dict, list]:
    report: dict = {"command": "bessel", "n": cfg["n"], "ell": cfg["ell"]}
    rows: list = []
    if cfg["n"] == 1:
        ok = _bessel_n1(cfg, report, rows)
    else:
        ok = _bessel_mc(cfg, report, rows, seed)
    report["convention"] = FROZEN_CONVENTION.as_dict()
    report["status"] = "PASS" if ok else "FAIL"
    return (EXIT_OK if ok else EXIT_FAIL), report, rows


# ---------------------------------------------------------------------------
# entry point


def _resolve_seed(flag, cfg) -> int:
    if flag is not None:
        return flag
    if "seed" in cfg:
        return cfg["seed"]
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV} must be an integer") from exc
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cyclobessel", description=__doc__)
    ap.add_argument("command", choices=["relations", "hc", "bessel", "calibrate", "all"])
    ap.add_argument("--config", type=Path)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out", type=Path)
    ap.add_argument("--json", action="store_true", help="print the JSON report on stdout")
    ap.add_argument("--csv", action="store_true", help="write bessel tables as CSV (needs --out)")
    return ap


def dumps(report: dict) -> str:
    return json.dumps(_strip(report), sort_keys=True, indent=2)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config.read_text()) if args.config else {}
        cfg = validate(cfg)
        seed = _resolve_seed(args.seed, cfg)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    rows: list = []
    try:
        if args.command == "relations":
            code, report = cmd_relations(cfg)
        elif args.command == "hc":
            code, report = cmd_hc(cfg)
        elif args.command == "calibrate":
            code, report = cmd_calibrate(cfg)
        elif args.command == "bessel":
            code, report, rows = cmd_bessel(cfg, seed)
        else:
            parts = {}
            codes = []
            for name, fn in (("calibrate", cmd_calibrate), ("relations", cmd_relations), ("hc", cmd_hc)):
                c, r = fn(cfg)
                parts[name] = r
                codes.append(c)
            c, r, rows = cmd_bessel(cfg, seed)
            parts["bessel"] = r
            codes.append(c)
            code = max(codes)
            report = {"command": "all", "parts": parts, "status": "PASS" if code == 0 else "FAIL"}
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except series.TruncationError as exc:
        print(f"config error: {exc}; try D_max or M = {exc.suggested}", file=sys.stderr)
        return EXIT_CONFIG
    except (series.ResonanceError, series.RankDeficiencyError, series.ResidualError) as exc:
        print(f"parameters outside the supported range: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    report["schema_version"] = SCHEMA_VERSION
    report["config"] = cfg
    report["seed"] = seed
    report["primitive_root"] = "exp(2*pi*i/ell)"
    report[TIMESTAMP_KEY] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    text = dumps(report)

    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / f"{args.command}.json").write_text(text + "\n")
        if args.csv and rows:
            with open(args.out / f"{args.command}.csv", "w", newline="") as fh:
                fields = list(rows[0].keys())
                w = csv.DictWriter(fh, fieldnames=fields)
                w.writeheader()
                for r in rows:
                    w.writerow({k: (repr(float(v)) if isinstance(v, (float, int)) and not isinstance(v, bool) else v) for k, v in r.items()})
    if args.json:
        print(text)
    else:
        print(f"{args.command}: {report['status']}")
    return code


if __name__ == "__main__":
    sys.exit(main())
