"""Verification suites behind the ``run`` command, and their report writers.

Each suite returns a list of :class:`Row`.  A row compares one measured
quantity against a threshold and records what the check is about in ``anchor``.
Reports are deterministic functions of the configuration.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import lie
from .conformal import (
    ExpField,
    FieldJet,
    HopfContraction,
    QuadricField,
    RealQuadratic,
    hss_pointwise,
    load_metric_spec,
    make_admissible,
    random_admissible_matrix,
    space_form_residual,
    strominger_curvature,
    strominger_symmetrized,
    torsion,
)
from .curvature import CurvatureBlock, TorsionBlock, constancy_check, hss, max_abs_diff, symmetrize
from .levi_civita import (
    conformal_strominger,
    conformal_symmetrized,
    levi_civita_block,
    self_duality_identities,
    space_form_change_residual,
    strominger_from_chern_data,
    chern_curvature,
    torsion_cov_deriv,
    weyl_rows,
)

SUITES = ("hopf", "admissible", "pipeline", "conformal", "lie")


@dataclass(frozen=True)
class SuiteConfig:
    suite: str
    seed: int = 0
    samples: int = 100
    tol: float | None = None
    inputs: tuple[str, ...] = ()
    out: str | None = None
    fmt: str = "json"
    n: int | None = None

    def __post_init__(self):
        if self.suite not in SUITES:
            raise ValueError(f"unknown suite {self.suite!r}; choose from {', '.join(SUITES)}")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.tol is not None and not self.tol > 0:
            raise ValueError("tolerance must be > 0")
        if self.fmt not in ("json", "csv"):
            raise ValueError(f"unknown format {self.fmt!r}")


@dataclass(frozen=True)
class Row:
    check: str
    anchor: str
    value: float
    threshold: float
    relation: str = "<"  # value must be < threshold, or >= / > for expected-nonzero checks
    detail: str = ""

    @property
    def passed(self) -> bool:
        if not np.isfinite(self.value):
            return False
        return {"<": self.value < self.threshold, ">": self.value > self.threshold, ">=": self.value >= self.threshold}[
            self.relation
        ]

    def as_dict(self) -> dict:
        d = asdict(self)
        d["status"] = "pass" if self.passed else "fail"
        return d


@dataclass
class Report:
    config: SuiteConfig
    rows: list[Row] = field(default_factory=list)
    extra: dict[str, list[dict]] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)


def _tol(cfg: SuiteConfig, default: float) -> float:
    return default if cfg.tol is None else cfg.tol


def _points(rng: np.random.Generator, n: int, count: int) -> np.ndarray:
    return rng.standard_normal((count, n)) + 1j * rng.standard_normal((count, n))


# -- suites ---------------------------------------------------------------------------------


def hopf_suite(cfg: SuiteConfig) -> Report:
    """Strominger curvature of the standard Hopf metric: flat for surfaces, not beyond."""
    rng = np.random.default_rng(cfg.seed)
    tol = _tol(cfg, 1e-10)
    rep = Report(cfg)
    dims = (cfg.n,) if cfg.n else (2, 3)
    for n in dims:
        field_ = QuadricField.hopf(n)
        pts = _points(rng, n, cfg.samples)
        blocks = [strominger_curvature(field_, z).entries for z in pts]
        if n == 2:
            rep.rows.append(
                Row("hopf_n2_flat", "Hopf surface metric is Strominger flat", max(np.abs(b).max() for b in blocks), tol)
            )
            continue
        err = max(abs(b[0, 0, 1, 2] - z[1].conj() * z[2] / np.vdot(z, z).real) for b, z in zip(blocks, pts))
        rep.rows.append(
            Row(f"hopf_n{n}_entry_1123", "R^s_{1 1bar 2 3bar} of the Hopf metric equals conj(z2) z3 / |z|^2", err, tol)
        )
        rep.rows.append(
            Row(
                f"hopf_n{n}_not_flat",
                "Hopf metric in dimension >= 3 is not Strominger flat",
                max(np.abs(b).max() for b in blocks),
                1e-3,
                ">",
            )
        )
    return rep


def _admissible_fields(cfg: SuiteConfig, rng) -> list[tuple[str, QuadricField]]:
    if cfg.inputs:
        out = []
        for path in cfg.inputs:
            spec = load_metric_spec(path)
            if not isinstance(spec.field, QuadricField):
                raise ValueError(f"{path}: admissible suite needs a quadric or hopf metric, got {spec.family}")
            out.append((path, spec.field))
        return out
    dims = (cfg.n,) if cfg.n else (2, 3)
    out = []
    for n in dims:
        contraction = HopfContraction.classical(n)
        for m in range(20):
            out.append((f"n{n}_A{m:02d}", make_admissible(contraction, random_admissible_matrix(n, rng))))
    return out


def admissible_suite(cfg: SuiteConfig, points_per_metric: int = 20, weyl_points: int = 50) -> Report:
    """Admissible metrics: pointwise-constant H^s with the closed-form value, and W^- = 0 on surfaces."""
    rng = np.random.default_rng(cfg.seed)
    rep = Report(cfg)
    tol_const, tol_f, tol_w = _tol(cfg, 1e-9), _tol(cfg, 1e-10), _tol(cfg, 1e-8)
    weyl_out = []
    for label, fld in _admissible_fields(cfg, rng):
        pts = _points(rng, fld.n, points_per_metric)
        const_dev, f_err, lam_res, fs = 0.0, 0.0, 0.0, []
        for m, z in enumerate(pts):
            phat = strominger_symmetrized(fld, z)
            f_closed = hss_pointwise(fld, z)
            f_diag = float(np.einsum("iiii->i", phat.entries).real.mean())
            const_dev = max(const_dev, constancy_check(phat, f_closed, samples=50, seed=cfg.seed + m).max_deviation)
            f_err = max(f_err, abs(f_diag - f_closed))
            lam_res = max(lam_res, space_form_residual(fld, z, f_closed))
            fs.append(f_closed)
        rep.rows.append(Row(f"{label}_constant_hs", "admissible metric has pointwise constant H^s", const_dev, tol_const))
        rep.rows.append(Row(f"{label}_f_closed_form", "H^s value matches the closed form in A and z", f_err, tol_f))
        rep.rows.append(
            Row(f"{label}_space_form_hessian", "xi_{i jbar} = lambda delta_ij with lambda = f + |d xi|^2/xi", lam_res, tol_f)
        )
        if np.any(fld.A):
            rep.rows.append(
                Row(f"{label}_f_varies", "H^s of an admissible metric with A != 0 is not constant in z", float(np.ptp(fs)), 1e-3, ">")
            )
        if fld.n == 2:
            wpts = _points(rng, 2, weyl_points)
            rows = weyl_rows(fld, wpts)
            for r in rows:
                r["metric"] = label
            weyl_out.extend(rows)
            ids = [self_duality_identities(levi_civita_block(fld, z)) for z in wpts]
            rep.rows.append(
                Row(f"{label}_weyl_minus", "admissible surface is self-dual: W1, W2, W3 vanish", max(r["max_residual"] for r in rows), tol_w)
            )
            for key in ids[0]:
                rep.rows.append(Row(f"{label}_{key}", f"self-duality identity {key}", max(d[key] for d in ids), tol_w))
    rep.extra["weyl"] = weyl_out
    return rep


def pipeline_suite(cfg: SuiteConfig) -> Report:
    """Levi-Civita and Strominger blocks rebuilt from Chern data on random quadrics."""
    rng = np.random.default_rng(cfg.seed)
    rep = Report(cfg)
    tol = _tol(cfg, 1e-9)
    strom_err, pair_err = 0.0, 0.0
    dims = (cfg.n,) if cfg.n else (2, 3, 4)
    for m in range(cfg.samples):
        n = dims[m % len(dims)]
        fld = QuadricField(random_admissible_matrix(n, rng, max_radius=0.49))
        z = _points(rng, n, 1)[0]
        Rc, T, dT = chern_curvature(fld, z), torsion(fld, z), torsion_cov_deriv(fld, z)
        strom_err = max(strom_err, max_abs_diff(strominger_from_chern_data(Rc, T, dT), strominger_curvature(fld, z)))
        R = levi_civita_block(fld, z).entries
        pair_err = max(pair_err, float(np.abs(R - np.einsum("ijkl->klij", R)).max()))
    rep.rows.append(Row("strominger_from_chern_data", "Strominger block from Chern data equals the closed form", strom_err, tol))
    rep.rows.append(Row("levi_civita_pair_symmetry", "Levi-Civita block satisfies R_{k lbar i jbar} = R_{i jbar k lbar}", pair_err, tol))
    return rep


def _exp_jet(u: RealQuadratic, z):
    """``u``, its gradient and mixed Hessian on the flat base, and the jet of ``F = e^{-2u}``."""
    du, ddu = u.derivatives(z)
    F = np.exp(-2 * u.value(z))
    return u.value(z), du, ddu, FieldJet(F, -2 * F * du, F * (4 * np.outer(du, du.conj()) - 2 * ddu))


def conformal_suite(cfg: SuiteConfig, count: int = 10, points: int = 5) -> Report:
    """Strominger curvature of ``e^{-2u} g0`` predicted from the flat metric, versus direct evaluation."""
    rng = np.random.default_rng(cfg.seed)
    rep = Report(cfg)
    tol = _tol(cfg, 1e-8)
    n = cfg.n or 3
    T0, R0 = TorsionBlock(np.zeros((n, n, n))), CurvatureBlock.zeros(n)
    err_full, err_sym, err_sf = 0.0, 0.0, 0.0
    for _ in range(count):
        u = RealQuadratic.random(n, rng)
        fld = ExpField(u)
        for z in _points(rng, n, points) * 0.5:
            val, du, ddu, Fjet = _exp_jet(u, z)
            pred = conformal_strominger(T0, R0, val, du, ddu)
            err_full = max(err_full, max_abs_diff(pred, strominger_curvature(fld, z)))
            pred_hat = conformal_symmetrized(T0, R0, Fjet)
            err_sym = max(err_sym, max_abs_diff(pred_hat, strominger_symmetrized(fld, z)))
    # space-form criterion for the conformal factor: admissible quadrics over the flat base
    for _ in range(count):
        fld = QuadricField(random_admissible_matrix(n, rng))
        for z in _points(rng, n, points):
            jet = fld.jet(z)
            err_sf = max(err_sf, space_form_change_residual(jet, 0.0, hss_pointwise(fld, z)))
    rep.rows.append(Row("conformal_full_block", "conformal-change formula reproduces R^s of e^{-2u} g0", err_full, tol))
    rep.rows.append(Row("conformal_symmetrized", "conformal-change formula for the symmetrized block", err_sym, tol))
    rep.rows.append(Row("conformal_space_form", "F_{i jbar} = lambda delta_ij for admissible conformal factors", err_sf, tol))
    return rep


def _structures(cfg: SuiteConfig) -> list[lie.LieStructure]:
    if cfg.inputs:
        return [lie.load_structure(p) for p in cfg.inputs]
    return [lie.abelian(3), lie.iwasawa(), lie.heisenberg_like(0.3)]


def lie_suite(cfg: SuiteConfig, path_check_count: int = 100) -> Report:
    """Bianchi identities and curvature checks per structure, then the CFGU rigidity probe."""
    rng = np.random.default_rng(cfg.seed)
    rep = Report(cfg)
    tol_b, tol_sym = _tol(cfg, lie.BIANCHI_TOL), _tol(cfg, 1e-10)
    for s in _structures(cfg):
        name = s.name or f"structure_n{s.n}"
        b = lie.validate(s)
        rep.rows.append(
            Row(f"{name}_bianchi", "first Bianchi identities of the structure constants", b.max_residual, tol_b, detail=f"worst {b.worst}")
        )
        path = max_abs_diff(lie.lie_symmetrized(s), symmetrize(lie.lie_strominger_curvature(s)))
        rep.rows.append(Row(f"{name}_symmetrize_paths", "closed-form symmetrized block equals symmetrize(R^s)", path, tol_sym))
        if not b.passed or not lie.nilpotency_predicates(s)["cfgu"]:
            continue
        chk = lie.rigidity_check(s)
        if chk.constant:
            rep.rows.append(
                Row(f"{name}_rigidity", "constant H^s on a CFGU structure forces C = D = 0", 0.0 if chk.forced_zero else 1.0, 0.5,
                    detail=f"first violation {chk.first_violation}")
            )
        else:
            rep.rows.append(
                Row(f"{name}_not_space_form", "non-abelian CFGU structure has non-constant H^s", chk.constancy_deviation,
                    lie.RIGIDITY_TOL, ">=")
            )
        ref = lie.iwasawa()
        if s.n == 3 and np.array_equal(s.C, ref.C) and np.array_equal(s.D, ref.D):
            x = np.array([1, 0, 1]) / np.sqrt(2)
            value = hss(lie.lie_symmetrized(s), x)
            rep.rows.append(Row(f"{name}_hss_e1_e3", "Iwasawa H^s at (e1 + e3)/sqrt 2 is -1/4", abs(value + 0.25), _tol(cfg, 1e-12)))
            rep.rows.append(
                Row(f"{name}_deviation_floor", "Iwasawa constancy deviation is at least 1/4", chk.constancy_deviation,
                    0.25 - _tol(cfg, 1e-12), ">=")
            )
    if not cfg.inputs:
        err = 0.0
        for n in (2, 3, 4):
            C, D, _ = lie.sample_valid_cfgu(n, -(-path_check_count // 3), rng)
            for c, d in zip(C, D):
                s = lie.LieStructure(c, d)
                err = max(err, max_abs_diff(lie.lie_symmetrized(s), symmetrize(lie.lie_strominger_curvature(s))))
        rep.rows.append(Row("random_symmetrize_paths", "closed form equals symmetrize path on random valid structures", err, tol_sym))
        probe = rigidity_probe(cfg.samples, cfg.seed)
        rep.rows.append(
            Row("cfgu_probe", "no nonzero random CFGU structure has constant H^s", float(probe["false_constant"]), 0.5,
                detail=f"{probe['structures']} structures")
        )
        grid = heisenberg_grid()
        rep.rows.append(Row("heisenberg_grid_min_deviation", "D^1_{21} != 0 on surfaces gives non-constant H^s", grid["min_deviation"], 1e-8, ">"))
        rep.rows.append(Row("heisenberg_grid_formula", "H^s(e_1) = -2|D^1_{21}|^2 and H^s(e_2) = 0", grid["formula_error"], tol_sym))
    return rep


def rigidity_probe(count: int, seed: int, dims=(2, 3, 4), norm_floor: float = 1e-6) -> dict:
    """Random Bianchi-valid CFGU structures, split evenly over ``dims``.

    Returns the number of structures tried and how many with
    ``|C| + |D| > norm_floor`` nonetheless pass the entrywise constancy test.
    """
    rng = np.random.default_rng(seed)
    per = -(-count // len(dims))
    total, bad, drawn, min_dev = 0, 0, 0, np.inf
    for n in dims:
        C, D, tried = lie.sample_valid_cfgu(n, per, rng)
        drawn += tried
        phat = lie.symmetrized_curvature_array(C, D)
        dev = lie.pattern_deviation(phat, lie.best_constant(phat))
        norms = np.linalg.norm(C.reshape(per, -1), axis=1) + np.linalg.norm(D.reshape(per, -1), axis=1)
        nonzero = norms > norm_floor
        bad += int(np.sum(nonzero & (dev < lie.RIGIDITY_TOL)))
        if nonzero.any():
            min_dev = min(min_dev, float(dev[nonzero].min()))
        total += per
    return {"structures": total, "drawn": drawn, "false_constant": bad, "min_deviation": min_dev}


def heisenberg_grid(points: int = 100, radius: float = 1.0) -> dict:
    """Sweep ``D^1_{21}`` over a grid of the closed disc minus the origin."""
    k = np.arange(1, points + 1)
    vals = radius * (k / points) * np.exp(2j * np.pi * k * 0.618033988749895)
    min_dev, err = np.inf, 0.0
    for d in vals:
        s = lie.heisenberg_like(d)
        phat = lie.lie_symmetrized(s)
        f = lie.best_constant(phat.entries)
        min_dev = min(min_dev, float(lie.pattern_deviation(phat.entries, f)))
        err = max(err, abs(hss(phat, [1, 0]) + 2 * abs(d) ** 2), abs(hss(phat, [0, 1])))
    return {"points": points, "min_deviation": min_dev, "formula_error": err}


RUNNERS: dict[str, Callable[[SuiteConfig], Report]] = {
    "hopf": hopf_suite,
    "admissible": admissible_suite,
    "pipeline": pipeline_suite,
    "conformal": conformal_suite,
    "lie": lie_suite,
}


def run_suite(cfg: SuiteConfig) -> Report:
    return RUNNERS[cfg.suite](cfg)


# -- serialization --------------------------------------------------------------------------


def format_complex(z: complex) -> str:
    z = complex(z)
    return f"{z.real!r}{'+' if z.imag >= 0 or np.isnan(z.imag) else '-'}{abs(z.imag)!r}i"


def _plain(v):
    if isinstance(v, (complex, np.complexfloating)):
        return format_complex(v)
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    return v


def report_json(rep: Report) -> str:
    cfg = asdict(rep.config)
    cfg.pop("out")
    body = {"config": cfg, "passed": rep.passed, "rows": [r.as_dict() for r in rep.rows]}
    return json.dumps(_plain(body), sort_keys=True, indent=2) + "\n"


def rows_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    keys = sorted(rows[0])
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\r\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (" ".join(_plain(x) for x in v) if isinstance(v, list) else _plain(v)) for k, v in r.items()})
    return buf.getvalue()


def report_csv(rep: Report) -> str:
    return rows_csv([r.as_dict() for r in rep.rows])


def render(rep: Report, fmt: str) -> str:
    return report_json(rep) if fmt == "json" else report_csv(rep)
