"""Batch command-line interface: verification suites, point classification,
plane-curvature minimization, Monte Carlo scans and parameter sweeps.

Exit codes: 0 success, 1 verification failure, 2 usage or input error.
Reports are JSON objects (one per line for scans) with a reproducibility
header carrying the version, the full configuration echo, the seed and the
tolerance set; scans can additionally emit a fixed-column CSV.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys

import numpy as np

from . import __version__
from .quat import Quaternion
from .sp2 import (GroupElement, QMatrix2, bracket, haar_sample,
                  random_algebra_element, trace_inner)
from .cheeger import (BI_INVARIANT, MetricParams, curvature_tensor, inner1,
                      inner2, kappa_G, tilde)
from .zeroset import (classify, classify_with_witness,
                      construct_zero_horizontal_plane,
                      nowhere_horizontal_residual)
from .search import (CalibrationError, min_kappa_horizontal, min_sec_M,
                     scan as run_scan)

TOLERANCES = {
    "unitarity": 1e-8,
    "classify": 1e-9,
    "witness_horizontality": 1e-8,
    "witness_kappa": 1e-9,
    "nonnegativity": -1e-9,
}

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_USAGE = 2


def _named_points() -> dict:
    h = 0.5
    return {
        "identity": GroupElement.identity(),
        "diag-i-1": GroupElement(QMatrix2.diag(Quaternion(0, 1, 0, 0), Quaternion(1))),
        "z2-sample": GroupElement(QMatrix2(
            Quaternion(h, h, 0, 0), Quaternion(h, h, 0, 0),
            Quaternion(1 / math.sqrt(2)), Quaternion(-1 / math.sqrt(2)))),
    }


def _load_point(spec: str) -> GroupElement:
    named = _named_points()
    if spec in named:
        return named[spec]
    try:
        with open(spec) as fh:
            text = fh.read()
    except OSError:
        text = spec
    if len(text.replace(",", " ").split()) != 16:
        raise ValueError("expected 16 reals for a group element")
    return GroupElement.from_text(text, tol=TOLERANCES["unitarity"])


def _metric_from_args(args) -> MetricParams:
    if args.s is not None or args.t is not None:
        if args.s is None or args.t is None:
            raise ValueError("--s and --t must be given together")
        return MetricParams.from_st(args.s, args.t)
    return MetricParams(args.s_tilde, args.t_tilde)


def _header(args, m: MetricParams, extra=None) -> dict:
    # workers is scheduling-only and out/csv are output routing; none affect
    # results, and keeping them out of the echo preserves byte-identical
    # reports across worker counts and destinations
    cfg = {k: v for k, v in vars(args).items()
           if k not in ("func", "workers", "out", "csv")}
    head = {
        "kind": "header",
        "version": __version__,
        "config": cfg,
        "metric": {"s_tilde": m.s_tilde, "t_tilde": m.t_tilde},
        "seed": getattr(args, "seed", None),
        "tolerances": dict(TOLERANCES),
    }
    if extra:
        head.update(extra)
    return head


def _emit(objects, out_path):
    text = "\n".join(json.dumps(o) for o in objects) + "\n"
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    sys.stdout.write(text)


# ------------------------------------------------------------------ verify --

def _verify_checks(m: MetricParams, seed: int, samples: int, starts: int,
                   inject_fault: str):
    """Yield (name, passed, residual) for the named verification suite."""
    rng = np.random.default_rng(seed)
    ct = curvature_tensor(m)

    # metric identities
    worst = 0.0
    for _ in range(samples):
        X = random_algebra_element(rng)
        Y = random_algebra_element(rng)
        worst = max(worst, abs(inner2(X, Y, m) - inner1(tilde(X, m.t_tilde), Y, m)))
    yield "metric-tilde-identity", worst < 1e-12, worst

    worst = 0.0
    for _ in range(samples):
        X = random_algebra_element(rng)
        Y = random_algebra_element(rng)
        Z = random_algebra_element(rng)
        lhs = inner2(bracket(Z, X), Y, BI_INVARIANT) + inner2(X, bracket(Z, Y), BI_INVARIANT)
        worst = max(worst, abs(lhs))
    yield "trace-metric-ad-invariance", worst < 1e-9, worst

    # curvature tensor symmetries
    R = ct.riemann
    sym = max(np.abs(R + R.transpose(1, 0, 2, 3)).max(),
              np.abs(R + R.transpose(0, 1, 3, 2)).max(),
              np.abs(R - R.transpose(2, 3, 0, 1)).max())
    yield "curvature-symmetries", sym < 1e-9, sym
    bianchi = np.abs(R + R.transpose(1, 2, 0, 3) + R.transpose(2, 0, 1, 3)).max()
    yield "first-bianchi", bianchi < 1e-9, bianchi

    # bi-invariant limit
    worst = 0.0
    for _ in range(samples):
        X = random_algebra_element(rng)
        Y = random_algebra_element(rng)
        B = bracket(X, Y)
        worst = max(worst, abs(kappa_G(X, Y, BI_INVARIANT) - 0.25 * trace_inner(B, B)))
    yield "bi-invariant-kappa", worst < 1e-9, worst

    # nonnegativity + template zeros
    xs = rng.standard_normal((samples, 10))
    ys = rng.standard_normal((samples, 10))
    kmin = float(ct.kappa_batch(xs, ys).min())
    yield "nonnegativity", kmin >= TOLERANCES["nonnegativity"], kmin

    worst = 0.0
    from .zeroset import build_template
    from .quat import ImQuaternion
    for _ in range(max(10, samples // 20)):
        y = ImQuaternion.from_vec3(rng.standard_normal(3))
        x = Quaternion.from_array(rng.standard_normal(4))
        for kind in ("type1", "type2a"):
            tpl = build_template(kind, None if kind == "type1" else x, y)
            X, Y = tpl.plane(m)
            nx = math.sqrt(inner2(X, X, m))
            ny = math.sqrt(inner2(Y, Y, m))
            worst = max(worst, abs(kappa_G(X.scale(1 / nx), Y.scale(1 / ny), m)))
    yield "template-zero-curvature", worst < 1e-10, worst

    # nowhere-horizontal lemma (block-diagonal template)
    low = math.inf
    for _ in range(samples):
        g = haar_sample(rng)
        from .sp2 import random_im_quaternion
        y = random_im_quaternion(rng)
        low = min(low, nowhere_horizontal_residual(g, y.scale(1.0 / y.norm())))
    yield "type1-nowhere-horizontal", low > 0.01, low

    # w-condition lemma on constructed Z2 points (fault-injection hook)
    sign = -2.0 if inject_fault == "w-sign" else 2.0
    worst = 0.0
    from .quat import apply_ad
    from .zeroset import make_z2_point
    for _ in range(8):
        g = make_z2_point(rng)
        a, b = g.a, g.b
        w = (a.inverse() * b).im
        val = w.dot(w) - sign * apply_ad(a.inverse(), w).dot(w)
        worst = max(worst, abs(val))
    yield "z2-w-orthogonality-lemma", worst < 1e-9, worst

    # classifier/minimizer agreement on a small spiked batch
    try:
        report = run_scan(m, n_samples=max(8, samples // 40), seed=seed,
                          starts=starts, spike_fraction=0.25, with_sec_m=False)
        yield "spiked-agreement", report.agreement_fraction == 1.0, 1.0 - report.agreement_fraction
    except CalibrationError as e:
        yield "spiked-agreement", False, math.inf


def cmd_verify(args) -> int:
    m = _metric_from_args(args)
    rows = []
    ok_all = True
    for name, ok, residual in _verify_checks(m, args.seed, args.samples,
                                             args.starts, args.inject_fault):
        ok_all &= ok
        rows.append({"kind": "check", "name": name, "passed": bool(ok),
                     "residual": float(residual)})
        print(f"[{'ok' if ok else 'FAIL'}] {name}: residual {residual:.3e}",
              file=sys.stderr)
    _emit([_header(args, m), *rows,
           {"kind": "summary", "passed": bool(ok_all)}], args.out)
    return EXIT_OK if ok_all else EXIT_VERIFICATION


# ---------------------------------------------------------------- classify --

def cmd_classify(args) -> int:
    m = _metric_from_args(args)
    g = _load_point(args.point)
    cls = classify_with_witness(g, m, tol=args.tol_zero or 1e-9)
    rec = {"kind": "classification", "point": [float(v) for v in g.to_flat16()]}
    rec.update(cls.to_record())
    _emit([_header(args, m), rec], args.out)
    return EXIT_OK


def cmd_minsec(args) -> int:
    m = _metric_from_args(args)
    g = _load_point(args.point)
    mk = min_kappa_horizontal(g, m, starts=args.starts, seed=args.seed)
    ms = min_sec_M(g, m, starts=args.starts, seed=(args.seed, 1))
    cls = classify(g)
    rec = {
        "kind": "minsec",
        "point": [float(v) for v in g.to_flat16()],
        "min_kappa": mk.value,
        "min_sec_m": ms.value,
        "kappa_status": mk.status,
        "argmin_x": [float(v) for v in mk.x_coords],
        "argmin_y": [float(v) for v in mk.y_coords],
        "iterations": mk.iterations,
        "classification": cls.to_record(),
    }
    _emit([_header(args, m), rec], args.out)
    return EXIT_OK


def cmd_zero_plane(args) -> int:
    m = _metric_from_args(args)
    g = _load_point(args.point)
    wit = construct_zero_horizontal_plane(g, m)
    rec = {"kind": "zero-plane", "point": [float(v) for v in g.to_flat16()],
           "witness": None if wit is None else wit.to_record()}
    _emit([_header(args, m), rec], args.out)
    return EXIT_OK


# -------------------------------------------------------------------- scan --

_SCAN_COLUMNS = ["index", "seed", *[f"g{k}" for k in range(16)],
                 "min_kappa", "min_secM", "z1", "z2", "z3", "z4", "agreement"]


def _write_scan_csv(path, records):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_SCAN_COLUMNS)
        for r in records:
            writer.writerow([r.index, r.seed, *[repr(v) for v in r.g_flat],
                             repr(r.min_kappa),
                             "" if r.min_sec_m is None else repr(r.min_sec_m),
                             int(r.z1), int(r.z2), int(r.z3), int(r.z4),
                             int(r.agreement)])


def cmd_scan(args) -> int:
    m = _metric_from_args(args)
    report = run_scan(m, n_samples=args.samples, seed=args.seed,
                      workers=args.workers, starts=args.starts,
                      delta=args.tol_zero, spike_fraction=args.spike,
                      with_sec_m=not args.no_sec_m)
    objects = [_header(args, m, {"threshold": report.threshold})]
    objects += [{"kind": "sample", **r.to_dict()} for r in report.records]
    objects.append({"kind": "summary", **report.summary_dict()})
    _emit(objects, args.out)
    if args.csv:
        _write_scan_csv(args.csv, report.records)
    return EXIT_OK


def cmd_sweep(args) -> int:
    m_values = [float(v) for v in args.grid.split(",")]
    rng = np.random.default_rng(args.seed)
    objects = [_header(args, MetricParams(m_values[0], m_values[0]))]
    rows = []
    ok_all = True
    for s in m_values:
        for t in m_values:
            m = MetricParams(s, t)
            ct = curvature_tensor(m)
            xs = rng.standard_normal((args.samples, 10))
            ys = rng.standard_normal((args.samples, 10))
            kmin = float(ct.kappa_batch(xs, ys).min())
            nonneg = kmin >= TOLERANCES["nonnegativity"]
            ok_all &= nonneg
            cell = {"kind": "cell", "s_tilde": s, "t_tilde": t,
                    "min_kappa_random": kmin, "nonnegativity": bool(nonneg)}
            rows.append(cell)
            objects.append(cell)
    objects.append({"kind": "summary", "passed": bool(ok_all)})
    _emit(objects, args.out)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["s_tilde", "t_tilde", "min_kappa_random", "nonnegativity"])
            for c in rows:
                writer.writerow([repr(c["s_tilde"]), repr(c["t_tilde"]),
                                 repr(c["min_kappa_random"]), int(c["nonnegativity"])])
    return EXIT_OK if ok_all else EXIT_VERIFICATION


# -------------------------------------------------------------------- main --

def _add_metric_args(p):
    p.add_argument("--s-tilde", type=float, default=0.5, dest="s_tilde")
    p.add_argument("--t-tilde", type=float, default=0.5, dest="t_tilde")
    p.add_argument("--s", type=float, default=None)
    p.add_argument("--t", type=float, default=None)
    p.add_argument("--out", default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="gmsphere",
        description="curvature verification for contracted metrics on Sp(2) "
                    "and the induced metric on the quotient 7-sphere")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run the named verification suite")
    _add_metric_args(p)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--samples", type=int, default=400)
    p.add_argument("--starts", type=int, default=32)
    p.add_argument("--inject-fault", choices=["none", "w-sign"], default="none")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("classify", help="classify a point against Z1-Z4")
    _add_metric_args(p)
    p.add_argument("--point", required=True,
                   help="named point, inline 16 reals, or a file path")
    p.add_argument("--tol-zero", type=float, default=None)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("minsec", help="minimize curvature over horizontal planes")
    _add_metric_args(p)
    p.add_argument("--point", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--starts", type=int, default=64)
    p.set_defaults(func=cmd_minsec)

    p = sub.add_parser("zero-plane", help="construct a zero-curvature witness plane")
    _add_metric_args(p)
    p.add_argument("--point", required=True)
    p.set_defaults(func=cmd_zero_plane)

    p = sub.add_parser("scan", help="Monte Carlo audit over Haar samples")
    _add_metric_args(p)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--starts", type=int, default=64)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--tol-zero", type=float, default=None,
                   help="zero threshold; calibrated when omitted")
    p.add_argument("--spike", type=float, default=0.0,
                   help="fraction of constructed zero-set points to inject")
    p.add_argument("--no-sec-m", action="store_true")
    p.add_argument("--csv", default=None)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("sweep", help="nonnegativity sweep over a parameter grid")
    p.add_argument("--grid", default="0.25,0.5,0.75")
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--csv", default=None)
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
