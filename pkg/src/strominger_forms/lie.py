"""Left-invariant Hermitian structures on Lie groups from structure constants.

For a unitary basis ``e`` of the (1,0)-part of the complexified Lie algebra,

    C^j_{ik} = <[e_i, e_k], ebar_j>,        D^j_{ik} = <[ebar_j, e_k], e_i>,

stored as ``C[j, i, k]`` and ``D[j, i, k]`` (0-based).  The coframe satisfies
``d phi_i = -sum (C^i_{jk} phi_j ^ phi_k / 2 + conj(D^j_{ik}) phi_j ^ phibar_k)``.

Most array functions here accept leading batch axes (``C.shape == (..., n, n, n)``).
"""

from __future__ import annotations

import json
from pathlib import Path
from dataclasses import dataclass, field

import numpy as np

from .curvature import (
    ConnectionMatrix,
    CurvatureBlock,
    TorsionBlock,
    constancy_check,
)

BIANCHI_TOL = 1e-12
RIGIDITY_TOL = 1e-8


class StructureError(ValueError):
    """Structure constants that cannot come from a Lie algebra with complex structure."""


@dataclass(frozen=True, eq=False)
class LieStructure:
    C: np.ndarray
    D: np.ndarray
    name: str = ""

    def __post_init__(self):
        C = np.array(self.C, dtype=complex)
        D = np.array(self.D, dtype=complex)
        if C.ndim != 3 or len(set(C.shape)) != 1 or C.shape != D.shape:
            raise StructureError(f"C and D must both be n x n x n, got {C.shape} and {D.shape}")
        if not np.array_equal(C, -C.transpose(0, 2, 1)):
            raise StructureError("C^j_{ik} must be antisymmetric in (i, k)")
        C.setflags(write=False)
        D.setflags(write=False)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "D", D)

    @property
    def n(self) -> int:
        return self.C.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.C) + np.linalg.norm(self.D))

    def rotated(self, U) -> "LieStructure":
        """Structure constants in the unitary frame ``e'_i = sum_a U[i, a] e_a``."""
        U = np.asarray(U, dtype=complex)
        Uc = U.conj()
        rot = "ia,kb,jc,cab->jik"
        C = np.einsum(rot, U, U, Uc, self.C)
        C = (C - C.transpose(0, 2, 1)) / 2  # restore exact antisymmetry after roundoff
        return LieStructure(C, np.einsum(rot, U, U, Uc, self.D), self.name)


# -- catalog ------------------------------------------------------------------------


def abelian(n: int) -> LieStructure:
    z = np.zeros((n, n, n), complex)
    return LieStructure(z, z, f"abelian({n})")


def iwasawa() -> LieStructure:
    """Complex Heisenberg group: ``[e_1, e_2] = e_3``, i.e. ``C^3_{12} = 1 = -C^3_{21}``.

    With ``d phi_3 = -C^3_{12} phi_1 ^ phi_2`` this gives ``d phi_3 = -phi_1 ^ phi_2``.
    """
    C = np.zeros((3, 3, 3), complex)
    C[2, 0, 1], C[2, 1, 0] = 1, -1
    return LieStructure(C, np.zeros_like(C), "iwasawa")


def heisenberg_like(d121: complex) -> LieStructure:
    """Surface with the single constant ``D^1_{21}``: ``[ebar_1, e_1] = d121 ebar_2 - conj(d121) e_2``."""
    D = np.zeros((2, 2, 2), complex)
    D[0, 1, 0] = d121
    d = complex(d121)
    label = repr(d.real) if d.imag == 0 else f"{d.real!r}{'+' if d.imag >= 0 else '-'}{abs(d.imag)!r}i"
    return LieStructure(np.zeros_like(D), D, f"heisenberg-like(D121={label})")


CATALOG = {
    "abelian": abelian,
    "iwasawa": lambda n=3: iwasawa(),
    "heisenberg-like": lambda d121=0.5: heisenberg_like(d121),
}


# -- identities -------------------------------------------------------------------


def bianchi_residuals(C: np.ndarray, D: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The three first-Bianchi expressions, each indexed ``[..., i, j, k, l]``."""
    Dc = D.conj()
    cc = (
        np.einsum("...rij,...lrk->...ijkl", C, C)
        + np.einsum("...rjk,...lri->...ijkl", C, C)
        + np.einsum("...rki,...lrj->...ijkl", C, C)
    )
    cd = (
        np.einsum("...rik,...ljr->...ijkl", C, D)
        + np.einsum("...rji,...lrk->...ijkl", D, D)
        - np.einsum("...rjk,...lri->...ijkl", D, D)
    )
    cdbar = (
        np.einsum("...rik,...rjl->...ijkl", C, Dc)
        - np.einsum("...jrk,...irl->...ijkl", C, Dc)
        + np.einsum("...jri,...krl->...ijkl", C, Dc)
        - np.einsum("...lri,...kjr->...ijkl", D, Dc)
        + np.einsum("...lrk,...ijr->...ijkl", D, Dc)
    )
    return cc, cd, cdbar


@dataclass(frozen=True)
class BianchiReport:
    cc: float
    cd: float
    cdbar: float
    worst: tuple[str, tuple[int, int, int, int]]
    tol: float

    @property
    def max_residual(self) -> float:
        return max(self.cc, self.cd, self.cdbar)

    @property
    def passed(self) -> bool:
        return self.max_residual < self.tol


def validate(structure: LieStructure, tol: float = BIANCHI_TOL) -> BianchiReport:
    """Max residual of each first-Bianchi identity; ``worst`` names the offending tuple (1-based)."""
    names = ("CC", "CD", "CDbar")
    res = [np.abs(r) for r in bianchi_residuals(structure.C, structure.D)]
    maxima = [float(r.max(initial=0.0)) for r in res]
    w = int(np.argmax(maxima))
    idx = np.unravel_index(int(np.argmax(res[w])), res[w].shape) if res[w].size else (0, 0, 0, 0)
    return BianchiReport(*maxima, (names[w], tuple(int(i) + 1 for i in idx)), tol)


def lie_torsion(structure: LieStructure) -> TorsionBlock:
    """``2 T^j_{ik} = -C^j_{ik} - D^j_{ik} + D^j_{ki}``."""
    C, D = structure.C, structure.D
    skew = D.transpose(0, 2, 1) - D  # exactly antisymmetric in floating point
    return TorsionBlock((skew - C) / 2)


def lie_connections(structure: LieStructure) -> tuple[ConnectionMatrix, ConnectionMatrix]:
    """Chern and Strominger connection matrices ``(theta, theta^s)``."""
    C, D = structure.C, structure.D
    chern = ConnectionMatrix(np.einsum("jik->ijk", D), -D.conj())
    strominger = ConnectionMatrix(
        np.einsum("jik->ijk", -C) + np.einsum("jki->ijk", D),
        C.conj() - np.einsum("ikj->ijk", D.conj()),
    )
    return chern, strominger


def strominger_curvature_array(C: np.ndarray, D: np.ndarray) -> np.ndarray:
    """``R^s_{k lbar i jbar}`` as a ``[..., k, l, i, j]`` array, summed over ``r``."""
    Cc, Dc = C.conj(), D.conj()

    def e(spec, a, b):
        return np.einsum(f"...{spec[0]},...{spec[1]}->...klij", a, b)

    return (
        e(("rik", "rjl"), C, Cc)
        - e(("jrk", "irl"), C, Cc)
        - e(("rik", "rlj"), C, Dc)
        - e(("rjl", "rki"), Cc, D)
        + e(("jir", "krl"), C, Dc)
        - e(("jkr", "ilr"), C, Dc)
        + e(("ijr", "lrk"), Cc, D)
        - e(("ilr", "jkr"), Cc, D)
        - e(("jri", "krl"), D, Dc)
        - e(("lrk", "irj"), D, Dc)
        + e(("rki", "rlj"), D, Dc)
        - e(("jkr", "ilr"), D, Dc)
    )


def symmetrized_curvature_array(C: np.ndarray, D: np.ndarray) -> np.ndarray:
    """Closed form of the symmetrized Strominger curvature, ``[..., k, l, i, j]``."""
    Cc, Dc = C.conj(), D.conj()

    def e(a, b, *specs):
        return sum(np.einsum(f"...{s[0]},...{s[1]}->...klij", a, b) for s in specs)

    four = (
        -e(C, Cc, ("jrk", "irl"), ("jri", "krl"), ("lrk", "irj"), ("lri", "krj"))
        + e(C, Dc, ("jir", "krl"), ("jkr", "irl"), ("lir", "krj"), ("lkr", "irj"))
        - e(C, Dc, ("jir", "klr"), ("jkr", "ilr"), ("lir", "kjr"), ("lkr", "ijr"))
        + e(Cc, D, ("ijr", "lrk"), ("kjr", "lri"), ("ilr", "jrk"), ("klr", "jri"))
        - e(Cc, D, ("ijr", "lkr"), ("kjr", "lir"), ("ilr", "jkr"), ("klr", "jir"))
        - 2 * e(D, Dc, ("jri", "krl"), ("jrk", "irl"), ("lri", "krj"), ("lrk", "irj"))
        + e(D, Dc, ("rki", "rlj"), ("rik", "rlj"), ("rki", "rjl"), ("rik", "rjl"))
        - e(D, Dc, ("jir", "klr"), ("jkr", "ilr"), ("lir", "kjr"), ("lkr", "ijr"))
    )
    return four / 4


def lie_strominger_curvature(structure: LieStructure) -> CurvatureBlock:
    """Left-invariant ``(1,1)``-part of the Strominger curvature."""
    return CurvatureBlock(strominger_curvature_array(structure.C, structure.D))


def lie_symmetrized(structure: LieStructure) -> CurvatureBlock:
    return CurvatureBlock(symmetrized_curvature_array(structure.C, structure.D))


def diagonal_symmetrized(structure: LieStructure) -> np.ndarray:
    """``Rhat^s_{i ibar i ibar}`` for each ``i`` from its own short formula."""
    C, D = structure.C, structure.D
    n = structure.n
    out = np.empty(n)
    for i in range(n):
        c_iri = C[i, :, i]  # C^i_{ri}
        c_iir = C[i, i, :]  # C^i_{ir}
        d_iri = D[i, :, i]  # D^i_{ri}
        d_iir = D[i, i, :]  # D^i_{ir}
        d_rii = D[:, i, i]  # D^r_{ii}
        out[i] = (
            -np.sum(np.abs(c_iri) ** 2)
            + 2 * np.sum(c_iir.conj() * (d_iri - d_iir)).real
            - 2 * np.sum(np.abs(d_iri) ** 2)
            + np.sum(np.abs(d_rii) ** 2)
            - np.sum(np.abs(d_iir) ** 2)
        )
    return out


def mixed_symmetrized(structure: LieStructure, i: int, k: int) -> float:
    """``4 Rhat^s_{k kbar i ibar}`` from its short formula (0-based ``i``, ``k``).

    The mixed C-D terms pair ``conj(C^k_{ir})`` with ``D^k`` and ``conj(C^i_{kr})``
    with ``D^i``, which is what setting ``j = i, l = k`` in the full closed form gives.
    """
    C, D = structure.C, structure.D

    def sq(x):
        return float(np.sum(np.abs(x) ** 2))

    def re(x):
        return float(np.sum(x).real)

    return (
        -(sq(C[i, :, k]) + sq(C[k, :, i]) + 2 * re(C[i, :, i] * C[k, :, k].conj()))
        + 2
        * re(
            C[i, i, :].conj() * (D[k, :, k] - D[k, k, :])
            + C[k, k, :].conj() * (D[i, :, i] - D[i, i, :])
            + C[k, i, :].conj() * (D[k, :, i] - D[k, i, :])
            + C[i, k, :].conj() * (D[i, :, k] - D[i, k, :])
        )
        - 2 * (sq(D[i, :, k]) + sq(D[k, :, i]) + 2 * re(D[i, :, i] * D[k, :, k].conj()))
        + (sq(D[:, k, i]) + sq(D[:, i, k]) + 2 * re(D[:, i, k] * D[:, k, i].conj()))
        - (sq(D[i, k, :]) + sq(D[k, i, :]) + 2 * re(D[i, i, :] * D[k, k, :].conj()))
    )


# -- nilpotency -----------------------------------------------------------------------


def _masks(n: int, kind: str) -> tuple[np.ndarray, np.ndarray]:
    j, i, k = np.indices((n, n, n))
    if kind == "salamon":
        return (j > i) | (j > k), i > j
    if kind == "cfgu":
        return (j > i) & (j > k), (i > j) & (i > k)
    raise ValueError(kind)


def nilpotency_predicates(structure: LieStructure, tol: float = 0.0) -> dict[str, bool]:
    """Whether the frame is adapted in the sense of Salamon and of Cordero-Fernandez-Gray-Ugarte."""
    out = {}
    for kind in ("salamon", "cfgu"):
        mc, md = _masks(structure.n, kind)
        out[kind] = bool(
            np.all(np.abs(structure.C[~mc]) <= tol) and np.all(np.abs(structure.D[~md]) <= tol)
        )
    if out["cfgu"] and not out["salamon"]:
        raise AssertionError("CFGU-adapted frame must also be Salamon-adapted")
    return out


def cfgu_masks(n: int) -> tuple[np.ndarray, np.ndarray]:
    return _masks(n, "cfgu")


def random_cfgu_candidates(
    n: int, count: int, rng: np.random.Generator, density: float = 0.5, scale: float = 1.0
) -> tuple[np.ndarray, np.ndarray]:
    """``count`` random CFGU-shaped ``(C, D)`` pairs; not yet Bianchi-validated.

    Each permitted slot is switched on with probability ``density``; real and
    imaginary parts are uniform in ``[-scale, scale]``.
    """
    mc, md = cfgu_masks(n)
    upper = mc & (np.indices((n, n, n))[1] < np.indices((n, n, n))[2])

    def draw():
        vals = rng.uniform(-scale, scale, (count, n, n, n)) + 1j * rng.uniform(-scale, scale, (count, n, n, n))
        on = rng.random((count, n, n, n)) < density
        return vals * on

    C = draw() * upper
    C = C - C.transpose(0, 1, 3, 2)
    D = draw() * md
    return C, D


def sample_valid_cfgu(
    n: int, count: int, rng: np.random.Generator, density: float = 0.5, tol: float = BIANCHI_TOL, max_rounds: int = 1000
) -> tuple[np.ndarray, np.ndarray, int]:
    """Rejection-sample ``count`` Bianchi-valid, nonzero CFGU structures.

    Returns ``(C, D, drawn)`` where ``drawn`` is the number of candidates tried.
    """
    Cs, Ds, drawn = [], [], 0
    have = 0
    batch = max(64, count)
    for _ in range(max_rounds):
        C, D = random_cfgu_candidates(n, batch, rng, density)
        drawn += batch
        ok = (np.abs(C).reshape(batch, -1).max(axis=1) > 0) | (np.abs(D).reshape(batch, -1).max(axis=1) > 0)
        for r in bianchi_residuals(C, D):
            ok &= np.abs(r).reshape(batch, -1).max(axis=1) < tol
        Cs.append(C[ok])
        Ds.append(D[ok])
        have += int(ok.sum())
        if have >= count:
            break
    C, D = np.concatenate(Cs)[:count], np.concatenate(Ds)[:count]
    if len(C) < count:
        raise RuntimeError(f"only {len(C)} valid structures after {drawn} draws")
    return C, D, drawn


def best_constant(phat: np.ndarray) -> np.ndarray:
    """Mean of the diagonal entries ``Rhat_{i ibar i ibar}``: the only candidate for ``f``."""
    return np.einsum("...iiii->...i", phat).real.mean(axis=-1)


def pattern_deviation(phat: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Batched ``max |Phat - (f/2)(dd + dd)|``."""
    n = phat.shape[-1]
    eye = np.eye(n)
    pat = np.einsum("ab,cd->abcd", eye, eye) + np.einsum("ad,cb->abcd", eye, eye)
    dev = np.abs(phat - 0.5 * np.asarray(f)[..., None, None, None, None] * pat)
    return dev.reshape(dev.shape[: -4] + (-1,)).max(axis=-1)


# -- rigidity for CFGU-nilpotent structures -----------------------------------------------


@dataclass(frozen=True)
class RigidityReport:
    f_candidates: list[float]
    f_predicted: list[float]
    constancy_deviation: float
    constant: bool
    forced_zero: bool
    first_violation: tuple | None = None
    steps: list[str] = field(default_factory=list)


def rigidity_check(structure: LieStructure, tol: float = RIGIDITY_TOL, samples: int = 64, seed: int = 0) -> RigidityReport:
    """Replay the rigidity cascade for a CFGU-adapted structure.

    If the symmetrized curvature is pointwise constant, the cascade must force
    ``f = 0``, then ``D^i_{ri} = 0``, then level by level ``D = 0`` and finally
    ``C = 0``.  Any constant that survives a step it should have been killed by
    is returned as ``first_violation`` (1-based ``(name, j, i, k)``).
    """
    if not nilpotency_predicates(structure)["cfgu"]:
        raise StructureError("rigidity_check requires a CFGU-adapted frame")
    C, D, n = structure.C, structure.D, structure.n
    phat = lie_symmetrized(structure)
    f_cand = [float(v) for v in np.einsum("iiii->i", phat.entries).real]
    f_pred = [-2 * float(np.sum(np.abs(D[i, i + 1 :, i]) ** 2)) for i in range(n)]
    f = float(np.mean(f_cand))
    rep = constancy_check(phat, f, samples=samples, seed=seed)
    constant = rep.entry_deviation < tol
    if not constant:
        return RigidityReport(f_cand, f_pred, rep.entry_deviation, False, False)

    steps = []

    def first_nonzero(name, arr, mask):
        hits = np.argwhere(mask & (np.abs(arr) > tol))
        return None if len(hits) == 0 else (name,) + tuple(int(v) + 1 for v in hits[0])

    j, i, k = np.indices((n, n, n))
    # f_n = 0 forces f = 0, and then every D^i_{ri} vanishes
    steps.append("f = 0 and D^i_{ri} = 0")
    v = first_nonzero("D", D, (j == k) & (i > j))
    if v is None and abs(f) > tol:
        v = ("f", f)
    for lev in range(1, n):  # 0-based k in the cascade
        if v is not None:
            break
        steps.append(f"level k={lev + 1}: D^i_(r k), D^k_(r i) = 0 for r > k, i < k")
        sel = (((j < lev) & (k == lev)) | ((j == lev) & (k < lev))) & (i > lev)
        v = first_nonzero("D", D, sel)
    if v is None:
        steps.append("D = 0")
        v = first_nonzero("D", D, np.ones_like(j, bool))
    if v is None:
        steps.append("C = 0")
        v = first_nonzero("C", C, np.ones_like(j, bool))
    return RigidityReport(f_cand, f_pred, rep.entry_deviation, True, v is None, v, steps)


def nil_d_residual(structure: LieStructure, i: int, k: int) -> float:
    """``lhs - rhs`` of the level-``k`` cascade identity (0-based ``i < k``).

    ``sum_{r<k} (|C^k_{ri}|^2 + |D^i_{kr}|^2) + 2 sum_{r>k} (|D^i_{rk}|^2 + |D^k_{ri}|^2) = sum_{r<k} |D^r_{ki}|^2``

    For a CFGU structure with ``D^j_{rj} = 0`` this equals ``-4 Rhat^s_{k kbar i ibar}``.
    No C-D cross term survives: ``conj(C^k_{ir}) D^k_{ri}`` needs ``k > r > k``.
    """
    C, D = structure.C, structure.D
    lhs = np.sum(np.abs(C[k, :k, i]) ** 2) + np.sum(np.abs(D[i, k, :k]) ** 2)
    lhs += 2 * (np.sum(np.abs(D[i, k + 1 :, k]) ** 2) + np.sum(np.abs(D[k, k + 1 :, i]) ** 2))
    rhs = np.sum(np.abs(D[:k, k, i]) ** 2)
    return float(lhs - rhs)


# -- JSON ---------------------------------------------------------------------------------


def structure_from_dict(spec: dict) -> LieStructure:
    """Sparse triplet format; ``C`` entries are completed antisymmetrically.

    ``{"n": 3, "C": [{"j": 3, "i": 1, "k": 2, "re": 1.0, "im": 0.0}], "D": []}``
    with 1-based indices.  ``{"catalog": "iwasawa"}`` loads a built-in.
    """
    if "catalog" in spec:
        name = spec["catalog"]
        if name not in CATALOG:
            raise ValueError(f"unknown catalog structure {name!r}; choose from {sorted(CATALOG)}")
        args = {k: v for k, v in spec.items() if k != "catalog"}
        if "d121" in args:
            v = args["d121"]
            args["d121"] = complex(*v) if isinstance(v, list) else complex(v)
        return CATALOG[name](**args)
    try:
        n = int(spec["n"])
    except KeyError:
        raise ValueError("structure spec is missing field 'n'") from None
    C = np.zeros((n, n, n), complex)
    D = np.zeros((n, n, n), complex)
    for key, arr in (("C", C), ("D", D)):
        for pos, t in enumerate(spec.get(key, [])):
            try:
                j, i, k = int(t["j"]) - 1, int(t["i"]) - 1, int(t["k"]) - 1
                val = complex(float(t.get("re", 0.0)), float(t.get("im", 0.0)))
            except KeyError as exc:
                raise ValueError(f"{key}[{pos}] is missing field {exc.args[0]!r}") from None
            if not all(0 <= x < n for x in (j, i, k)):
                raise ValueError(f"{key}[{pos}]: index out of range 1..{n}")
            if key == "C":
                if i == k and val != 0:
                    raise StructureError(f"C[{pos}]: C^j_(ii) must vanish")
                if C[j, k, i] != 0 and C[j, k, i] != -val:
                    raise StructureError(f"C[{pos}]: conflicts with the entry for C^{j + 1}_({k + 1}{i + 1})")
                C[j, i, k], C[j, k, i] = val, -val
            else:
                D[j, i, k] = val
    return LieStructure(C, D, spec.get("name", ""))


def structure_to_dict(structure: LieStructure) -> dict:
    out = {"n": structure.n, "C": [], "D": []}
    for key, arr in (("C", structure.C), ("D", structure.D)):
        for j, i, k in zip(*np.nonzero(arr)):
            if key == "C" and i > k:
                continue
            v = arr[j, i, k]
            out[key].append({"j": int(j) + 1, "i": int(i) + 1, "k": int(k) + 1, "re": float(v.real), "im": float(v.imag)})
    return out


def load_structure(path) -> LieStructure:
    with open(path) as fh:
        try:
            spec = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    if isinstance(spec, dict) and "catalog" not in spec:
        spec.setdefault("name", Path(path).stem)
    return structure_from_dict(spec)
