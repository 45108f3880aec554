"""Command-line front end: ``strominger-forms run`` and ``strominger-forms eval``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import lie
from .conformal import (
    AdmissibilityError,
    DomainError,
    QuadricField,
    connections,
    hss_pointwise,
    metric_from_dict,
    strominger_curvature,
    strominger_symmetrized,
    torsion,
)
from .curvature import CurvatureError, Direction, hss
from .levi_civita import chern_curvature, levi_civita_block, weyl_minus
from .suites import SUITES, SuiteConfig, render, rows_csv, run_suite

EXIT_FAIL = 1
EXIT_USAGE = 2
QUANTITIES = ("torsion", "eta", "chern", "strominger", "weyl", "hss")


def parse_point(tokens: list[str]) -> np.ndarray:
    """``["0", "1+2i", "3j"]`` or a single comma-separated token."""
    if len(tokens) == 1 and "," in tokens[0]:
        tokens = tokens[0].split(",")
    out = []
    for t in tokens:
        t = t.strip().replace(" ", "").replace("i", "j")
        try:
            out.append(complex(t))
        except ValueError:
            raise ValueError(f"cannot parse {t!r} as a complex number") from None
    return np.array(out, dtype=complex)


def _entries(arr: np.ndarray) -> list[dict]:
    return [
        {"index": [int(v) + 1 for v in idx], "re": float(arr[idx].real), "im": float(arr[idx].imag)}
        for idx in np.ndindex(arr.shape)
    ]


def _load_spec(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def evaluate(spec: dict, z, what: str, direction=None) -> dict:
    """The ``eval`` payload for a metric spec (at ``z``) or a Lie structure (left-invariant)."""
    if "C" in spec or "D" in spec or "catalog" in spec:
        s = lie.structure_from_dict(spec)
        out = {"structure": s.name, "n": s.n, "what": what}
        if what == "torsion":
            out["entries"] = _entries(lie.lie_torsion(s).entries)
        elif what == "eta":
            out["entries"] = _entries(lie.lie_torsion(s).gauduchon())
        elif what == "strominger":
            out["entries"] = _entries(lie.lie_strominger_curvature(s).entries)
        elif what == "hss":
            x = Direction.normalized(direction if direction is not None else np.eye(s.n)[0])
            out["direction"] = [[float(v.real), float(v.imag)] for v in x.components]
            out["hss"] = hss(lie.lie_symmetrized(s), x)
        else:
            raise ValueError(f"{what!r} is not available for Lie structures")
        return out

    metric = metric_from_dict(spec)
    fld = metric.field
    z = np.asarray(z, dtype=complex)
    if z.shape != (fld.n,):
        raise ValueError(f"point has {z.size} coordinates, metric lives on C^{fld.n}")
    out = {"family": metric.family, "n": fld.n, "what": what, "z": [[float(v.real), float(v.imag)] for v in z]}
    if what == "torsion":
        out["entries"] = _entries(torsion(fld, z).entries)
    elif what == "eta":
        out["entries"] = _entries(torsion(fld, z).gauduchon())
    elif what == "chern":
        out["entries"] = _entries(chern_curvature(fld, z).entries)
        out["connection_holo"] = _entries(connections(fld, z).chern.holo)
        out["connection_anti"] = _entries(connections(fld, z).chern.anti)
    elif what == "strominger":
        out["entries"] = _entries(strominger_curvature(fld, z).entries)
    elif what == "weyl":
        w = weyl_minus(levi_civita_block(fld, z))
        out.update({k: [float(v.real), float(v.imag)] for k, v in (("W1", w.W1), ("W2", w.W2), ("W3", w.W3), ("sigma", w.sigma))})
    elif what == "hss":
        x = Direction.normalized(direction if direction is not None else np.eye(fld.n)[0])
        out["direction"] = [[float(v.real), float(v.imag)] for v in x.components]
        out["hss"] = hss(strominger_symmetrized(fld, z), x)
        if isinstance(fld, QuadricField):
            out["hss_closed_form"] = hss_pointwise(fld, z)
    else:
        raise ValueError(f"unknown quantity {what!r}")
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="strominger-forms", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a verification suite and write a report")
    r.add_argument("--suite", required=True, choices=SUITES)
    r.add_argument("--input", action="append", default=[], help="metric or structure JSON (repeatable)")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--samples", type=int, default=100)
    r.add_argument("--tol", type=float, default=None, help="override every row threshold of the < kind")
    r.add_argument("--n", type=int, default=None, help="restrict to one complex dimension")
    r.add_argument("--out", default=None, help="report path (default: standard output)")
    r.add_argument("--format", dest="fmt", choices=("json", "csv"), default="json")
    r.add_argument("--weyl-out", default=None, help="CSV of per-point W^- values (admissible suite)")

    e = sub.add_parser("eval", help="print curvature quantities at a point as JSON")
    e.add_argument("--input", required=True)
    e.add_argument("--z", nargs="+", default=None, help="point, e.g. --z 0 1 1+2i")
    e.add_argument("--what", required=True, choices=QUANTITIES)
    e.add_argument("--direction", nargs="+", default=None, help="unit direction for hss (normalized)")
    return p


def _cmd_run(args) -> int:
    cfg = SuiteConfig(args.suite, args.seed, args.samples, args.tol, tuple(args.input), args.out, args.fmt, args.n)
    rep = run_suite(cfg)
    text = render(rep, cfg.fmt)
    if cfg.out:
        Path(cfg.out).write_text(text, newline="")
    else:
        sys.stdout.write(text)
    if args.weyl_out is not None:
        Path(args.weyl_out).write_text(rows_csv(rep.extra.get("weyl", [])), newline="")
    for row in rep.rows:
        if not row.passed:
            print(f"FAIL {row.check}: {row.value!r} {row.relation} {row.threshold!r} ({row.anchor})", file=sys.stderr)
    return 0 if rep.passed else EXIT_FAIL


def _cmd_eval(args) -> int:
    spec = _load_spec(args.input)
    z = parse_point(args.z) if args.z else None
    if z is None and not ("C" in spec or "D" in spec or "catalog" in spec):
        raise ValueError("--z is required for metric specs")
    direction = parse_point(args.direction) if args.direction else None
    sys.stdout.write(json.dumps(evaluate(spec, z, args.what, direction), sort_keys=True, indent=2) + "\n")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _cmd_run(args) if args.command == "run" else _cmd_eval(args)
    except (ValueError, OSError, DomainError, AdmissibilityError, CurvatureError, lie.StructureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
