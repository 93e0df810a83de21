"""Command-line front end.

Every subcommand prints one JSON document (or CSV for portrait/jensen with
--format csv) that embeds the run configuration.  Exit codes: 0 success,
2 precondition or input error, 3 only Undetermined verdicts under --strict.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime as _dt
import io
import json
import logging
import math
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .classifier import (CLASSES, UNDETERMINED, ClassifierConfig, GridSpec, classify, portrait,
                         prepare)
from .conjugation import fixed_point, reduce
from .errors import SpectralError
from .jensen import DEFAULT_R_GRID, jensen_profile
from .operator import OperatorHandle, spectral_radius_banach
from .resolvent import eigen_periodic, eigenfunction, solve, spectral_projection
from .rotation import DEFAULT_Q_CHECK, Rotation, beta_power, continued_fraction, resolvent_growth
from .series import DEFAULT_ORDER, MAX_ORDER, RADIUS_BAND, TruncatedSeries
from .weights import Weight

log = logging.getLogger("rotspec")

REPRO_ORDER = 1024
REPRO_QUAD = 2**16


@dataclasses.dataclass
class RunConfig:
    command: str
    order: int = DEFAULT_ORDER
    quad: int = 4096
    radius_band: float = RADIUS_BAND
    band_abs: float = 1e-3
    band_rel: float = 0.02
    snap_tol: float = 1e-9
    pole_tol: float = 1e-9
    threads: int = 1
    out: Optional[str] = None
    format: str = "json"
    strict: bool = False
    timestamp: bool = True

    def classifier(self) -> ClassifierConfig:
        return ClassifierConfig(band_abs=self.band_abs, band_rel=self.band_rel,
                                snap_tol=self.snap_tol, pole_tol=self.pole_tol, quad_k=self.quad)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("timestamp")
        d["version"] = __version__
        return d


class InputError(SpectralError, ValueError):
    pass


def _clean(obj):
    """JSON-safe copy: complex -> [re, im], non-finite floats -> strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [_clean(float(obj.real)), _clean(float(obj.imag))]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _parse_complex(text: str) -> complex:
    parts = text.split(",")
    try:
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
        if len(parts) == 1:
            return complex(parts[0].replace(" ", "").replace("i", "j"))
    except ValueError:
        pass
    raise InputError(f"cannot parse complex number {text!r} (use re,im)")


def _load_weight(text: str, order: int) -> Weight:
    base = None
    if text.startswith("@"):
        path = Path(text[1:])
        try:
            text = path.read_text()
        except OSError as exc:
            raise InputError(f"cannot read weight file: {exc}") from None
        base = path.parent
    return Weight.from_json(text, order, base_dir=base)


def _rotation(args) -> Optional[Rotation]:
    given = [x for x in ("beta", "xi") if getattr(args, x, None)]
    if getattr(args, "phi", None):
        given.append("phi")
    if len(given) > 1:
        raise InputError(f"conflicting rotation flags: {', '.join('--' + g for g in given)}")
    if getattr(args, "beta", None):
        if "/" not in args.beta:
            raise InputError("--beta expects p/q")
        return Rotation.parse(args.beta)
    if getattr(args, "xi", None):
        return Rotation.aperiodic(args.xi, tau=args.tau, q_check=args.gamma_check_depth)
    return None


def _operator(args, cfg: RunConfig) -> OperatorHandle:
    if not getattr(args, "weight", None):
        raise InputError("--weight is required")
    w = _load_weight(args.weight, cfg.order)
    rot = _rotation(args)
    if getattr(args, "phi", None):
        coeffs = [c.strip() for c in args.phi.split(",")]
        if len(coeffs) != 4:
            raise InputError("--phi expects a,b,c,d")
        a, b, c, d = (complex(x.replace("i", "j")) for x in coeffs)
        phi = fixed_point(a, b, c, d)
        return reduce(w, phi, cfg.order)
    if rot is None:
        raise InputError("one of --beta, --xi or --phi is required")
    return OperatorHandle(w, rot, cfg.order)


def _rhs(text: str, order: int) -> TruncatedSeries:
    if text.startswith("e_"):
        k = int(text[2:])
        return TruncatedSeries.monomial(k, order)
    if text.startswith("@"):
        text = Path(text[1:]).read_text()
    try:
        pairs = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed rhs: {exc}") from None
    return TruncatedSeries.from_pairs(pairs, order)


def _emit(doc: dict, cfg: RunConfig, stdout) -> None:
    if cfg.timestamp:
        doc["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    text = json.dumps(_clean(doc), indent=2, sort_keys=False, allow_nan=False)
    if cfg.out:
        Path(cfg.out).write_text(text + "\n")
    else:
        stdout.write(text + "\n")


def _emit_csv(rows: list, doc: dict, cfg: RunConfig, stdout) -> None:
    buf = io.StringIO()
    buf.write("# " + json.dumps(_clean({"config": doc["config"], "rules": doc.get("rules", [])}),
                                allow_nan=False) + "\n")
    csv.writer(buf, lineterminator="\n").writerows(rows)
    if cfg.out:
        Path(cfg.out).write_text(buf.getvalue())
    else:
        stdout.write(buf.getvalue())


def _base(cfg: RunConfig, T: Optional[OperatorHandle] = None) -> dict:
    doc = {"config": cfg.to_dict()}
    if T is not None:
        doc["operator"] = T.to_dict()
    return doc


# subcommands

def cmd_classify(args, cfg, stdout) -> int:
    T = _operator(args, cfg)
    ctx = prepare(T, cfg.classifier(), threads=cfg.threads)
    lams = [_parse_complex(x) for x in args.lam]
    verdicts = [classify(T, lam, ctx) for lam in lams]
    doc = _base(cfg, T)
    doc["context"] = ctx.to_dict()
    doc["verdicts"] = [v.to_dict() for v in verdicts]
    doc["rules"] = sorted({v.rule for v in verdicts})
    _emit(doc, cfg, stdout)
    return 3 if cfg.strict and all(v.cls == UNDETERMINED for v in verdicts) else 0


def cmd_portrait(args, cfg, stdout) -> int:
    T = _operator(args, cfg)
    grid = GridSpec.parse(args.grid)
    ctx = prepare(T, cfg.classifier(), threads=cfg.threads)
    pg = portrait(T, grid, ctx, threads=cfg.threads)
    doc = _base(cfg, T)
    doc["context"] = ctx.to_dict()
    doc["rules"] = sorted({v.rule for v in pg.verdicts})
    if cfg.format == "csv":
        _emit_csv(pg.csv_rows(), doc, cfg, stdout)
    else:
        doc["portrait"] = pg.to_dict()
        _emit(doc, cfg, stdout)
    return 3 if cfg.strict and all(v.cls == UNDETERMINED for v in pg.verdicts) else 0


def cmd_jensen(args, cfg, stdout) -> int:
    w = _load_weight(args.weight, cfg.order)
    grid = [float(x) for x in args.r_grid.split(",")]
    prof = jensen_profile(w, grid, cfg.quad, mstar=args.mstar, mstar_K=args.mstar_quad,
                          threads=cfg.threads)
    doc = _base(cfg)
    doc["weight"] = w.to_dict()
    doc["rules"] = ["jensen-quadrature", "jensen-zero-product"]
    if cfg.format == "csv":
        _emit_csv(prof.csv_rows(), doc, cfg, stdout)
    else:
        doc["profile"] = prof.to_dict()
        _emit(doc, cfg, stdout)
    return 0


def cmd_eigen(args, cfg, stdout) -> int:
    T = _operator(args, cfg)
    doc = _base(cfg, T)
    if T.rotation.is_periodic:
        es = eigen_periodic(T, args.k if args.k is not None else args.M, dims=args.dims)
        doc["eigenspace"] = es.to_dict(coeffs=args.coeffs)
        doc["rules"] = ["periodic-eigen-lacunary-log"]
    else:
        pair = eigenfunction(T, args.M)
        doc["eigenpair"] = pair.to_dict(coeffs=args.coeffs)
        doc["rules"] = ["point-spectrum-exp-log"]
    _emit(doc, cfg, stdout)
    return 0


def cmd_resolve(args, cfg, stdout) -> int:
    T = _operator(args, cfg)
    sol = solve(T, _parse_complex(args.lam[0]), _rhs(args.rhs, cfg.order), pole_tol=cfg.pole_tol,
                band=cfg.radius_band)
    doc = _base(cfg, T)
    doc["solution"] = sol.to_dict()
    doc["rules"] = ["resolvent-recurrence"]
    _emit(doc, cfg, stdout)
    return 0


def cmd_diophantine(args, cfg, stdout) -> int:
    rot = _rotation(args)
    if rot is None or rot.is_periodic:
        raise InputError("diophantine needs --xi")
    doc = _base(cfg)
    doc["rotation"] = rot.to_dict()
    cf = continued_fraction(rot, depth=args.depth)
    doc["continued_fraction"] = {"quotients": cf.quotients,
                                 "convergents": [[p, q] for p, q in cf.convergents],
                                 "rational": cf.rational, "achieved_depth": cf.achieved_depth,
                                 "warnings": cf.warnings}
    reports = []
    for text in args.r.split(","):
        rep = resolvent_growth(rot, Fraction(text.strip()), args.K)
        reports.append(rep.to_dict(full=args.full))
    doc["growth"] = reports
    doc["rules"] = ["diophantine-growth-bound"]
    _emit(doc, cfg, stdout)
    return 0


def cmd_project(args, cfg, stdout) -> int:
    T = _operator(args, cfg)
    f = _rhs(args.rhs, cfg.order)
    res = spectral_projection(T, args.r0, f, args.kquad, threads=cfg.threads,
                              pole_tol=cfg.pole_tol)
    doc = _base(cfg, T)
    doc["projection"] = {"coeffs": res.series.to_pairs(), "weakest_node": res.weakest,
                         "min_pole_distance": res.min_pole_distance, "nodes": res.nodes}
    doc["rules"] = ["contour-projection"]
    _emit(doc, cfg, stdout)
    return 0


def cmd_conjugate(args, cfg, stdout) -> int:
    if not args.phi:
        raise InputError("conjugate needs --phi")
    w = _load_weight(args.weight, cfg.order)
    a, b, c, d = (complex(x.strip().replace("i", "j")) for x in args.phi.split(","))
    phi = fixed_point(a, b, c, d)
    T = reduce(w, phi, cfg.order)
    doc = _base(cfg, T)
    doc["automorphism"] = phi.to_dict()
    doc["reduced_weight_head"] = T.m.to_pairs()[: args.head]
    doc["R_label"] = "R := M_1 of the reduced weight"
    ctx = prepare(T, cfg.classifier(), threads=cfg.threads)
    doc["context"] = ctx.to_dict()
    rules = set()
    if args.lam:
        vs = [classify(T, _parse_complex(x), ctx) for x in args.lam]
        doc["verdicts"] = [v.to_dict() for v in vs]
        rules |= {v.rule for v in vs}
    doc["rules"] = sorted(rules)
    _emit(doc, cfg, stdout)
    return 0


def _repro76(cfg) -> dict:
    t0 = time.perf_counter()
    rot = Rotation.aperiodic("golden")
    w = Weight.example76(cfg.order)
    T = OperatorHandle(w, rot, cfg.order)
    ccfg = dataclasses.replace(cfg.classifier(), quad_k=cfg.quad)
    ctx = prepare(T, ccfg, threads=cfg.threads, mstar=True)
    prof = ctx.profile
    pg = portrait(T, GridSpec(-1.0, 1.0, -1.0, 1.0, 64), ctx, threads=cfg.threads)
    v = classify(T, 0.5, ctx)
    sol = solve(T, 0.5, TruncatedSeries.monomial(0, cfg.order))
    banach = spectral_radius_banach(T, 256, 1.0)
    return {
        "weight": w.to_dict(), "rotation": rot.to_dict(),
        "profile": prof.to_dict(),
        "checks": {"M1": prof.m1, "M1_target": math.exp(-1), "Mstar": prof.mstar,
                   "Mstar_lower_bound": 2 * math.exp(-1),
                   "banach_radius_boundary_n256": float(banach[-1])},
        "classify_0.5": v.to_dict(),
        "resolvent_0.5": sol.to_dict(coeffs=False),
        "portrait": pg.to_dict(),
        "rules": sorted({x.rule for x in pg.verdicts} | {v.rule}),
        "seconds": round(time.perf_counter() - t0, 1) if cfg.timestamp else None,
    }


def _repro77(cfg) -> dict:
    rot = Rotation.aperiodic("golden")
    w = Weight.monomial(1, cfg.order)
    T = OperatorHandle(w, rot, cfg.order)
    from .jensen import m_r_quadrature, m_r_zeros

    table = []
    for i in range(1, 10):
        r = i / 10
        table.append({"r": r, "M_r_quad": m_r_quadrature(w, r, cfg.quad), "M_r_zeros": m_r_zeros(w, r)})
    lam = 0.5
    sol = solve(T, lam, TruncatedSeries.monomial(0, cfg.order))
    n = np.arange(min(201, sol.f.order))
    closed = np.array([beta_power(rot, int(k * (k - 1) // 2)) for k in n]) / lam ** (n + 1)
    rel = float(np.max(np.abs(sol.f.coeffs[n] - closed) / np.abs(closed)))
    ctx = prepare(T, cfg.classifier(), threads=cfg.threads)
    v = classify(T, lam, ctx)
    return {"weight": w.to_dict(), "rotation": rot.to_dict(), "M_r_table": table,
            "resolvent_0.5": sol.to_dict(coeffs=False),
            "closed_form_rel_error_n<=200": rel,
            "closed_form": "solve(lambda, e_0)_n = beta^(n(n-1)/2) / lambda^(n+1)",
            "classify_0.5": v.to_dict(), "rules": [v.rule, "jensen-zero-product"]}


def cmd_repro(args, cfg, stdout) -> int:
    cfg.order, cfg.quad = REPRO_ORDER, REPRO_QUAD
    doc = _base(cfg)
    if args.example == "example76":
        doc.update(_repro76(cfg))
    else:
        doc.update(_repro77(cfg))
    if doc.get("seconds") is None:
        doc.pop("seconds", None)
    _emit(doc, cfg, stdout)
    return 0


COMMANDS = {"classify": cmd_classify, "portrait": cmd_portrait, "jensen": cmd_jensen,
            "eigen": cmd_eigen, "resolve": cmd_resolve, "diophantine": cmd_diophantine,
            "project": cmd_project, "conjugate": cmd_conjugate, "repro": cmd_repro}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--weight", help="weight JSON or @file")
    common.add_argument("--beta", help="periodic rotation p/q")
    common.add_argument("--xi", help="aperiodic rotation: decimal, golden or sqrt2m1")
    common.add_argument("--phi", help="elliptic automorphism a,b,c,d of (az+b)/(cz+d)")
    common.add_argument("--tau", type=float, default=None, help="diophantine exponent (> 2)")
    common.add_argument("--gamma-check-depth", type=int, default=DEFAULT_Q_CHECK)
    common.add_argument("--order", type=int, default=DEFAULT_ORDER)
    common.add_argument("--quad", type=int, default=4096)
    common.add_argument("--band-abs", type=float, default=1e-3)
    common.add_argument("--band-rel", type=float, default=0.02)
    common.add_argument("--radius-band", type=float, default=RADIUS_BAND)
    common.add_argument("--snap-tol", type=float, default=1e-9)
    common.add_argument("--pole-tol", type=float, default=1e-9)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--out")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--strict", action="store_true")
    common.add_argument("--no-timestamp", action="store_true")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="rotspec", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("classify", parents=[common], help="classify points lambda")
    s.add_argument("--lambda", dest="lam", action="append", required=True, help="re,im")

    s = sub.add_parser("portrait", parents=[common], help="classify a lambda grid")
    s.add_argument("--grid", required=True, help="xmin,xmax,ymin,ymax,n")

    s = sub.add_parser("jensen", parents=[common], help="Jensen radii of a weight")
    s.add_argument("--r-grid", default=",".join(str(r) for r in DEFAULT_R_GRID))
    s.add_argument("--mstar", action="store_true", help="also compute the boundary mean")
    s.add_argument("--mstar-quad", type=int, default=2**16)

    s = sub.add_parser("eigen", parents=[common], help="eigenfunctions")
    s.add_argument("--M", type=int, default=0, help="power of z (aperiodic)")
    s.add_argument("--k", type=int, default=None, help="eigenvalue index (periodic)")
    s.add_argument("--dims", type=int, default=2)
    s.add_argument("--coeffs", action="store_true", help="include coefficients")

    s = sub.add_parser("resolve", parents=[common], help="solve (lambda - T) f = g")
    s.add_argument("--lambda", dest="lam", action="append", required=True)
    s.add_argument("--rhs", default="e_0", help="e_k, JSON pairs or @file")

    s = sub.add_parser("diophantine", parents=[common], help="growth of 1/|beta^k - lambda|")
    s.add_argument("--r", default="1/3", help="comma-separated rationals p/q")
    s.add_argument("--K", type=int, default=10**4)
    s.add_argument("--depth", type=int, default=24)
    s.add_argument("--full", action="store_true", help="include the full sequences")

    s = sub.add_parser("project", parents=[common], help="contour spectral projection")
    s.add_argument("--r0", type=float, required=True)
    s.add_argument("--rhs", default="e_0")
    s.add_argument("--kquad", type=int, default=1024)

    s = sub.add_parser("conjugate", parents=[common], help="reduce an elliptic automorphism")
    s.add_argument("--lambda", dest="lam", action="append")
    s.add_argument("--head", type=int, default=8)

    s = sub.add_parser("repro", parents=[common], help="reproduce a worked example")
    s.add_argument("example", choices=("example76", "example77"))
    return p


def main(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = RunConfig(command=args.command, order=args.order, quad=args.quad,
                    radius_band=args.radius_band, band_abs=args.band_abs, band_rel=args.band_rel,
                    snap_tol=args.snap_tol, pole_tol=args.pole_tol, threads=args.threads,
                    out=args.out, format=args.format, strict=args.strict,
                    timestamp=not args.no_timestamp)
    if not 1 <= cfg.order <= MAX_ORDER:
        print(f"error: --order must lie in [1, {MAX_ORDER}]", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](args, cfg, stdout)
    except (SpectralError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
