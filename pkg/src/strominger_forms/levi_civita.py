"""Levi-Civita (1,1)-curvature rebuilt from Chern data.

On Hermitian surfaces the block also yields the anti-self-dual Weyl part; a
separate set of helpers tracks Strominger curvature under conformal change.

Covariant derivatives of torsion are taken with respect to the Chern
connection: for ``nabla e_i = sum_j theta_{ij} e_j`` and a bar-direction
``ebar_l``,

    T^j_{ik,lbar} = ebar_l(T^j_{ik}) - sum_p T^j_{pk} theta_{ip}(ebar_l)
                    - sum_p T^j_{ip} theta_{kp}(ebar_l) + sum_q T^q_{ik} theta_{qj}(ebar_l).

This sign convention is pinned by two checks in the test-suite: pair symmetry
of the Levi-Civita block, and agreement of the Strominger block rebuilt from
Chern data with the closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conformal import FieldJet, ScalarField, torsion, connections
from .curvature import ConnectionMatrix, CurvatureBlock, CurvatureError, TorsionBlock


@dataclass(frozen=True)
class TorsionDerivativeBlock:
    """``entries[j, i, k, l] = T^j_{ik,lbar}``."""

    entries: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=complex)
        if arr.ndim != 4 or len(set(arr.shape)) != 1:
            raise CurvatureError(f"torsion derivative block must be n^4, got {arr.shape}")
        object.__setattr__(self, "entries", arr)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __getitem__(self, idx):
        return self.entries[idx]


def covariant_bar_derivative(T: TorsionBlock, raw: np.ndarray, chern: ConnectionMatrix) -> TorsionDerivativeBlock:
    """Add the connection terms to the frame derivatives ``raw[j,i,k,l] = ebar_l(T^j_{ik})``."""
    t, a = T.entries, chern.anti
    out = (
        np.asarray(raw, dtype=complex)
        - np.einsum("jpk,ipl->jikl", t, a)
        - np.einsum("jip,kpl->jikl", t, a)
        + np.einsum("qik,qjl->jikl", t, a)
    )
    return TorsionDerivativeBlock(out)


def torsion_cov_deriv(field: ScalarField, z) -> TorsionDerivativeBlock:
    """``T^j_{ik,lbar}`` for ``g = (1/xi) g0``; needs only mixed second derivatives of ``xi``."""
    jet = field.jet(z)
    eye = np.eye(field.n)
    # ebar_l(h_k) = h h_{k lbar}
    hh = 0.5 * jet.hess - np.outer(jet.h_grad, jet.h_grad.conj())
    raw = np.einsum("ij,kl->jikl", eye, hh) - np.einsum("kj,il->jikl", eye, hh)
    return covariant_bar_derivative(torsion(field, z), raw, connections(field, z).chern)


def chern_curvature(field: ScalarField, z) -> CurvatureBlock:
    """``R^c_{k lbar i jbar} = (xi_{k lbar} - xi_k xi_lbar / xi) delta_ij``."""
    jet = field.jet(z)
    m = jet.hess - np.outer(jet.grad, jet.grad.conj()) / jet.xi
    return CurvatureBlock(np.einsum("kl,ij->klij", m, np.eye(field.n)))


def _check_dims(*blocks):
    ns = {b.n for b in blocks}
    if len(ns) != 1:
        raise CurvatureError(f"dimension mismatch between inputs: {sorted(ns)}")


def _derivative_terms(dT: TorsionDerivativeBlock) -> np.ndarray:
    d = dT.entries
    return np.einsum("jikl->klij", d) + np.einsum("ijlk->klij", d.conj())


def riemann_from_chern_data(Rc: CurvatureBlock, T: TorsionBlock, dT: TorsionDerivativeBlock) -> CurvatureBlock:
    """Levi-Civita ``R_{k lbar i jbar}`` from the Chern curvature and the torsion with its derivative."""
    _check_dims(Rc, T, dT)
    t = T.entries
    tc = t.conj()
    quad = (
        np.einsum("rik,rjl->klij", t, tc)
        - np.einsum("jkr,ilr->klij", t, tc)
        - np.einsum("lir,kjr->klij", t, tc)
    )
    return CurvatureBlock(Rc.entries - _derivative_terms(dT) + quad)


def strominger_from_chern_data(Rc: CurvatureBlock, T: TorsionBlock, dT: TorsionDerivativeBlock) -> CurvatureBlock:
    """Strominger ``R^s_{k lbar i jbar}`` from the same Chern data."""
    _check_dims(Rc, T, dT)
    t = T.entries
    tc = t.conj()
    quad = np.einsum("rik,rjl->klij", t, tc) - np.einsum("jkr,ilr->klij", t, tc)
    return CurvatureBlock(Rc.entries - 2 * _derivative_terms(dT) + 4 * quad)


def torsion_square_symmetrized(T: TorsionBlock) -> CurvatureBlock:
    """Difference between the symmetrized Levi-Civita and Strominger blocks.

    ``(1/2) sum_r (T^j_{ir} Tbar^k_{lr} + T^l_{kr} Tbar^i_{jr} + T^j_{kr} Tbar^i_{lr} + T^l_{ir} Tbar^k_{jr})``

    Symmetrizing ``R - R^s`` kills the derivative terms and the ``T^r_{ik}``
    products; the two surviving products average to the same four-term sum with
    weights 3 and -1, hence the overall factor ``(3 - 1) / 4``.
    """
    t = T.entries
    tc = t.conj()
    return CurvatureBlock(
        0.5
        * (
            np.einsum("jir,klr->klij", t, tc)
            + np.einsum("lkr,ijr->klij", t, tc)
            + np.einsum("jkr,ilr->klij", t, tc)
            + np.einsum("lir,kjr->klij", t, tc)
        )
    )


def levi_civita_block(field: ScalarField, z) -> CurvatureBlock:
    return riemann_from_chern_data(chern_curvature(field, z), torsion(field, z), torsion_cov_deriv(field, z))


def strominger_from_chern(field: ScalarField, z) -> CurvatureBlock:
    return strominger_from_chern_data(chern_curvature(field, z), torsion(field, z), torsion_cov_deriv(field, z))


# -- anti-self-dual Weyl tensor --------------------------------------------------------


@dataclass(frozen=True)
class WeylMinus:
    W1: complex
    W2: complex
    W3: complex
    sigma: complex

    @property
    def max_abs(self) -> float:
        return max(abs(self.W1), abs(self.W2), abs(self.W3))


def weyl_minus(R: CurvatureBlock, tol: float = 1e-8) -> WeylMinus:
    """Components of ``W^-`` in the standard basis of a unitary frame, and the scalar curvature.

    ``R`` must be the Levi-Civita (1,1)-block of a Hermitian surface.
    """
    if R.n != 2:
        raise CurvatureError(f"W^- is defined for surfaces only, got n = {R.n}")
    r = R.entries
    w1 = r[0, 1, 0, 1]
    w2 = (r[0, 1, 1, 1] - r[0, 1, 0, 0]) / np.sqrt(2)
    w3 = (2 * r[0, 1, 1, 0] + 2 * r[0, 0, 1, 1] - r[0, 0, 0, 0] - r[1, 1, 1, 1]) / 6
    sigma = 2 * (r[0, 0, 0, 0] + r[1, 1, 1, 1] - 2 * r[0, 0, 1, 1] + 4 * r[0, 1, 1, 0])
    scale = max(1.0, float(np.max(np.abs(r))))
    if abs(w3.imag) > tol * scale:
        raise CurvatureError(f"W3 should be real, imaginary part {w3.imag:.3e}")
    return WeylMinus(complex(w1), complex(w2), complex(w3), complex(sigma))


def self_duality_identities(R: CurvatureBlock) -> dict[str, float]:
    """Residuals of the three identities that together give ``W^- = 0``.

    ``R_{1 2bar 1 2bar} = 0``, ``R_{1 1bar 1 2bar} = R_{1 2bar 2 2bar}`` and
    ``4 Rhat_{1 1bar 2 2bar} = R_{1 1bar 1 1bar} + R_{2 2bar 2 2bar}``.
    """
    r = R.entries
    rhat_1122 = (r[0, 0, 1, 1] + r[1, 0, 0, 1] + r[0, 1, 1, 0] + r[1, 1, 0, 0]) / 4
    return {
        "r1212": float(abs(r[0, 1, 0, 1])),
        "r1112_minus_r1222": float(abs(r[0, 0, 0, 1] - r[0, 1, 1, 1])),
        "four_rhat1122_minus_diag": float(abs(4 * rhat_1122 - r[0, 0, 0, 0] - r[1, 1, 1, 1])),
    }


def weyl_rows(field: ScalarField, points) -> list[dict]:
    """One report row per point: ``point, W1, W2, W3, sigma, max_residual``."""
    rows = []
    for z in points:
        w = weyl_minus(levi_civita_block(field, z))
        rows.append(
            {
                "point": [complex(v) for v in z],
                "W1": w.W1,
                "W2": w.W2,
                "W3": w.W3,
                "sigma": w.sigma,
                "max_residual": w.max_abs,
            }
        )
    return rows


# -- conformal change -------------------------------------------------------------------


def commute_mixed(u_grad: np.ndarray, u_barfirst: np.ndarray, T: TorsionBlock) -> np.ndarray:
    """Convert ``u_{jbar k}`` (array ``[k, j]``) to ``u_{k jbar}`` under the Strominger connection.

    ``u_{jbar k} - u_{k jbar} = 2 sum_r (u_rbar T^j_{rk} - u_r conj(T^k_{rj}))``.
    """
    u = np.asarray(u_grad, dtype=complex)
    t = T.entries
    corr = 2 * (np.einsum("r,jrk->kj", u.conj(), t) - np.einsum("r,krj->kj", u, t.conj()))
    return np.asarray(u_barfirst, dtype=complex) - corr


def conformal_strominger(
    T: TorsionBlock,
    Rs: CurvatureBlock,
    u: float,
    u_grad,
    u_hess,
    *,
    barred_first: bool = False,
) -> CurvatureBlock:
    """Strominger curvature of ``e^{2u} g`` under the frame ``e^{-u} e``.

    ``u_grad[i] = e_i(u)`` and ``u_hess[k, l] = u_{k lbar}`` are covariant
    derivatives with respect to the Strominger connection of ``g``.  Pass
    ``barred_first=True`` if ``u_hess[k, j]`` holds ``u_{jbar k}`` instead.
    """
    _check_dims(T, Rs)
    n = T.n
    ug = np.asarray(u_grad, dtype=complex)
    U = commute_mixed(ug, u_hess, T) if barred_first else np.asarray(u_hess, dtype=complex)
    t = T.entries
    tc = t.conj()
    ub = ug.conj()
    eye = np.eye(n)
    m1 = 2 * U - 4 * np.einsum("r,krl->kl", ug, tc)
    m2 = -2 * U - 4 * np.einsum("r,jrk->kj", ub, t) + 4 * np.einsum("r,krj->kj", ug, tc)
    rhs = (
        -4 * np.vdot(ug, ug).real * np.einsum("il,kj->klij", eye, eye)
        + 4 * np.einsum("kl,ij->klij", eye, np.outer(ug, ub))
        + np.einsum("ij,kl->klij", eye, m1)
        - 2 * np.einsum("kj,il->klij", eye, U)
        + np.einsum("il,kj->klij", eye, m2)
        + 4 * np.einsum("i,kjl->klij", ug, tc)
        + 4 * np.einsum("j,lik->klij", ub, t)
    )
    return CurvatureBlock(np.exp(-2 * u) * (Rs.entries + rhs))


def conformal_symmetrized(T: TorsionBlock, Rs_hat: CurvatureBlock, F: FieldJet) -> CurvatureBlock:
    """Symmetrized Strominger curvature of ``(1/F) g`` from the symmetrized block of ``g``.

    ``F.grad`` and ``F.hess`` are Strominger-covariant derivatives in the frame of ``g``.
    """
    _check_dims(T, Rs_hat)
    eye = np.eye(T.n)
    Fb = F.grad.conj()
    N = F.hess + 2 * np.einsum("r,bra->ab", Fb, T.entries)
    pattern = np.einsum("ij,kl->klij", eye, eye) + np.einsum("il,kj->klij", eye, eye)
    rhs = (
        -2 / F.xi * np.vdot(F.grad, F.grad).real * pattern
        + np.einsum("ij,kl->klij", eye, N)
        + np.einsum("kj,il->klij", eye, N)
        + np.einsum("il,kj->klij", eye, N)
        + np.einsum("kl,ij->klij", eye, N)
    )
    return CurvatureBlock(F.xi * Rs_hat.entries + rhs / 4)


def space_form_change_residual(F: FieldJet, c: float, ctilde: float) -> float:
    """``max |F_{i jbar} - lambda delta_ij|`` with ``lambda = ctilde - F c + |F_r|^2 / F``.

    Only meaningful on a Kähler base of constant holomorphic sectional
    curvature ``c`` (here: flat), where Strominger and Levi-Civita derivatives agree.
    """
    if not F.xi > 0:
        raise ValueError(f"F = {F.xi!r} must be positive")
    lam = ctilde - F.xi * c + np.vdot(F.grad, F.grad).real / F.xi
    return float(np.max(np.abs(F.hess - lam * np.eye(len(F.grad)))))
