"""Metrics ``g = (1/xi) g0`` conformal to the Euclidean metric on domains of C^n.

Everything is computed under the unitary frame ``e_i = h d/dz_i`` with
``h = sqrt(xi)`` and dual coframe ``phi_i = dz_i / h``.  A field only has to
supply ``xi``, its Wirtinger gradient ``xi_i = d xi / d z_i`` and its mixed
Hessian ``xi_{i jbar}``; the derived quantities ``h_i`` and
``h h_{i jbar} - h_i h_{jbar}`` follow from

    h_i = xi_i / (2h),    h h_{i jbar} + h_i h_{jbar} = xi_{i jbar} / 2.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, NamedTuple

import numpy as np

from .curvature import (
    ConnectionMatrix,
    CurvatureBlock,
    TorsionBlock,
    gamma_from_torsion,
    symmetrize,
)

ORIGIN_GUARD = 1e-8
SPECTRAL_MARGIN = 1e-12


class DomainError(ValueError):
    """The point lies outside the domain where ``xi > 0``."""


class AdmissibilityError(ValueError):
    pass


class NotEquivariant(AdmissibilityError):
    """``A_{ij} rho_i rho_j != A_{ij}``: the quadric is not invariant under the contraction."""


class NotPositive(AdmissibilityError):
    """``A Abar < I/4`` fails, so ``xi`` is not positive on ``C^n \\ {0}``."""


@dataclass(frozen=True)
class FieldJet:
    """``xi`` at one point together with its gradient and mixed Hessian."""

    xi: float
    grad: np.ndarray
    hess: np.ndarray

    @cached_property
    def h(self) -> float:
        return float(np.sqrt(self.xi))

    @cached_property
    def h_grad(self) -> np.ndarray:
        return self.grad / (2 * self.h)

    @cached_property
    def q(self) -> np.ndarray:
        """``q[a, b] = h h_{a bbar} - h_a h_{bbar}``."""
        hg = self.h_grad
        return 0.5 * self.hess - 2 * np.outer(hg, hg.conj())


class ScalarField:
    """Base class for positive fields ``xi``; subclasses implement ``_jet``."""

    n: int

    def jet(self, z) -> FieldJet:
        z = np.asarray(z, dtype=complex)
        if z.shape != (self.n,):
            raise DomainError(f"expected a point in C^{self.n}, got shape {z.shape}")
        self._guard(z)
        jet = self._jet(z)
        if not jet.xi > 0:
            raise DomainError(f"xi = {jet.xi!r} is not positive at z = {z}")
        return jet

    def value(self, z) -> float:
        return self.jet(z).xi

    def _guard(self, z: np.ndarray) -> None:
        pass

    def _jet(self, z: np.ndarray) -> FieldJet:
        raise NotImplementedError


class _PuncturedField(ScalarField):
    def _guard(self, z):
        if np.linalg.norm(z) < ORIGIN_GUARD:
            raise DomainError(f"|z| < {ORIGIN_GUARD:g}: too close to the origin")


@dataclass(frozen=True)
class ConstantField(ScalarField):
    n: int
    c: float = 1.0

    def _jet(self, z):
        return FieldJet(float(self.c), np.zeros(self.n, complex), np.zeros((self.n, self.n), complex))


@dataclass(frozen=True, eq=False)
class QuadricField(_PuncturedField):
    """``xi = |z|^2 + tz A z + conj(tz A z)`` with complex symmetric ``A``.

    Always normalized to ``lambda = 1``; use :meth:`from_lambda` for the
    general form, which divides the metric by a constant.
    """

    A: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=complex)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"A must be square, got shape {A.shape}")
        if not np.array_equal(A, A.T):
            raise ValueError("A must be symmetric")
        A.setflags(write=False)
        object.__setattr__(self, "A", A)

    @classmethod
    def from_lambda(cls, lam: float, A) -> "QuadricField":
        """Rescale ``lam |z|^2 + tzAz + c.c.`` to the ``lambda = 1`` representative."""
        if not lam > 0:
            raise NotPositive(f"lambda = {lam!r}: xi > 0 requires lambda > 0")
        return cls(np.asarray(A, dtype=complex) / lam)

    @classmethod
    def hopf(cls, n: int) -> "QuadricField":
        return cls(np.zeros((n, n), complex))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def spectral_radius(self) -> float:
        """Largest eigenvalue of the Hermitian matrix ``A Abar``."""
        return float(np.max(np.linalg.eigvalsh(self.A @ self.A.conj())))

    def is_positive(self) -> bool:
        return self.spectral_radius() < 0.25 - SPECTRAL_MARGIN

    def _jet(self, z):
        Az = self.A @ z
        psi = z @ Az
        xi = float(np.vdot(z, z).real + 2 * psi.real)
        return FieldJet(xi, z.conj() + 2 * Az, np.eye(self.n, dtype=complex))


@dataclass(frozen=True)
class PowerField(_PuncturedField):
    """``xi = |z|^(2p)``; ``p = 1`` is the standard Hopf metric."""

    n: int
    p: float = 2.0

    def _jet(self, z):
        r2 = float(np.vdot(z, z).real)
        p = self.p
        zc = z.conj()
        grad = p * r2 ** (p - 1) * zc
        hess = p * r2 ** (p - 1) * np.eye(self.n) + p * (p - 1) * r2 ** (p - 2) * np.outer(zc, z)
        return FieldJet(r2**p, grad, hess)


@dataclass(frozen=True, eq=False)
class RealQuadratic:
    """Real function ``u = c + 2 Re(b.z) + z^* H z + 2 Re(tz B z)``.

    ``H`` Hermitian, ``B`` symmetric.  ``derivatives`` returns the Wirtinger
    gradient ``u_k`` and the mixed Hessian ``u_{k lbar}``.
    """

    c: float
    b: np.ndarray
    H: np.ndarray
    B: np.ndarray

    @classmethod
    def random(cls, n: int, rng: np.random.Generator, scale: float = 0.3) -> "RealQuadratic":
        def cplx(*shape):
            return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)

        H = cplx(n, n)
        B = cplx(n, n)
        return cls(
            float(rng.standard_normal()) * scale,
            cplx(n) * scale,
            (H + H.conj().T) * scale / 2,
            (B + B.T) * scale / 2,
        )

    @property
    def n(self) -> int:
        return len(self.b)

    def value(self, z) -> float:
        z = np.asarray(z, dtype=complex)
        return float(self.c + 2 * (self.b @ z).real + np.vdot(z, self.H @ z).real + 2 * (z @ self.B @ z).real)

    def derivatives(self, z) -> tuple[np.ndarray, np.ndarray]:
        z = np.asarray(z, dtype=complex)
        grad = self.b + self.H.T @ z.conj() + 2 * self.B @ z
        return grad, self.H.T.copy()


@dataclass(frozen=True, eq=False)
class ExpField(ScalarField):
    """``xi = exp(-2u)`` for a real quadratic ``u``: the metric ``e^{2u} g0``."""

    u: RealQuadratic

    @property
    def n(self) -> int:
        return self.u.n

    def _jet(self, z):
        xi = float(np.exp(-2 * self.u.value(z)))
        du, ddu = self.u.derivatives(z)
        return FieldJet(xi, -2 * xi * du, xi * (4 * np.outer(du, du.conj()) - 2 * ddu))


@dataclass(frozen=True, eq=False)
class ProductField(ScalarField):
    """Pointwise product ``xi = a * b`` of two fields (a conformal change of ``(1/a) g0``)."""

    a: ScalarField
    b: ScalarField

    @property
    def n(self) -> int:
        return self.a.n

    def _guard(self, z):
        self.a._guard(z)
        self.b._guard(z)

    def _jet(self, z):
        ja, jb = self.a._jet(z), self.b._jet(z)
        hess = ja.hess * jb.xi + jb.hess * ja.xi + np.outer(ja.grad, jb.grad.conj()) + np.outer(jb.grad, ja.grad.conj())
        return FieldJet(ja.xi * jb.xi, ja.grad * jb.xi + jb.grad * ja.xi, hess)


@dataclass(frozen=True, eq=False)
class CallableField(ScalarField):
    """User-supplied closures for ``xi``, ``xi_i`` and ``xi_{i jbar}``."""

    n: int
    value_fn: Callable
    grad_fn: Callable
    hess_fn: Callable

    def _jet(self, z):
        return FieldJet(
            float(self.value_fn(z)),
            np.asarray(self.grad_fn(z), dtype=complex),
            np.asarray(self.hess_fn(z), dtype=complex),
        )


@dataclass(frozen=True, eq=False)
class FiniteDifferenceField(ScalarField):
    """Derivatives of a value-only field by central differences.

    The step is ``rel_step * max(1, |z|)``.  Gradients are accurate to about
    ``1e-10`` and mixed Hessians to about ``1e-6`` at the default step, so this
    path cannot meet the ``1e-10`` identity tolerances of the closed forms.
    """

    n: int
    value_fn: Callable
    rel_step: float = 1e-5

    def _jet(self, z):
        n = self.n
        step = self.rel_step * max(1.0, float(np.linalg.norm(z)))
        x0 = np.concatenate([z.real, z.imag])

        def f(x):
            return float(self.value_fn(x[:n] + 1j * x[n:]))

        f0 = f(x0)
        dim = 2 * n
        basis = np.eye(dim) * step
        g = np.array([(f(x0 + basis[a]) - f(x0 - basis[a])) / (2 * step) for a in range(dim)])
        hr = np.empty((dim, dim))
        for a in range(dim):
            for b in range(a, dim):
                if a == b:
                    v = (f(x0 + basis[a]) - 2 * f0 + f(x0 - basis[a])) / step**2
                else:
                    v = (
                        f(x0 + basis[a] + basis[b])
                        - f(x0 + basis[a] - basis[b])
                        - f(x0 - basis[a] + basis[b])
                        + f(x0 - basis[a] - basis[b])
                    ) / (4 * step**2)
                hr[a, b] = hr[b, a] = v
        grad = 0.5 * (g[:n] - 1j * g[n:])
        xx, yy, xy = hr[:n, :n], hr[n:, n:], hr[:n, n:]
        # d_i dbar_j = (d_xi - i d_yi)(d_xj + i d_yj) / 4
        hess = 0.25 * (xx + yy + 1j * (xy - xy.T))
        return FieldJet(f0, grad, hess)


@dataclass(frozen=True, eq=False)
class HopfContraction:
    """The map ``z -> a (rho_1 z_1, ..., rho_n z_n)`` with ``0 < a < 1``, ``|rho_i| = 1``."""

    a: float
    rho: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        if not 0 < self.a < 1:
            raise ValueError(f"contraction modulus a = {self.a!r} must lie in (0, 1)")
        if not np.allclose(np.abs(rho), 1.0, rtol=0, atol=1e-12):
            raise ValueError("each rho_i must have unit modulus")
        object.__setattr__(self, "rho", rho)

    @classmethod
    def classical(cls, n: int, a: float = 0.5) -> "HopfContraction":
        return cls(a, np.ones(n, complex))

    @property
    def n(self) -> int:
        return len(self.rho)

    def __call__(self, z) -> np.ndarray:
        return self.a * self.rho * np.asarray(z, dtype=complex)


def make_admissible(contraction: HopfContraction, A, check_points: int = 8, seed: int = 0) -> QuadricField:
    """Build the admissible quadric for ``A`` on the Hopf manifold of ``contraction``.

    The equivariance condition is checked in its phase form ``D A D = A`` with
    ``D = diag(rho)``.  Writing the contraction factors as ``a_i = a rho_i``,
    this is the same as ``D' A D' = a^2 A`` for ``D' = diag(a_i)``.
    """
    A = np.asarray(A, dtype=complex)
    if A.shape != (contraction.n, contraction.n):
        raise ValueError(f"A has shape {A.shape}, contraction acts on C^{contraction.n}")
    if not np.array_equal(A, A.T):
        raise ValueError("A must be symmetric")
    D = np.diag(contraction.rho)
    defect = np.max(np.abs(D @ A @ D - A), initial=0.0)
    if defect > 1e-12:
        raise NotEquivariant(f"A_ij rho_i rho_j = A_ij (DAD = A) violated, max defect {defect:.3e}")
    field = QuadricField(A)
    radius = field.spectral_radius()
    if not radius < 0.25 - SPECTRAL_MARGIN:
        raise NotPositive(f"A Abar < I/4 violated: largest eigenvalue of A Abar is {radius!r}")
    rng = np.random.default_rng(seed)
    for z in rng.standard_normal((check_points, field.n)) + 1j * rng.standard_normal((check_points, field.n)):
        lhs, rhs = field.value(contraction(z)), contraction.a**2 * field.value(z)
        if abs(lhs - rhs) > 1e-12 * abs(rhs):
            raise NotEquivariant(f"xi(phi(z)) != a^2 xi(z) at z = {z}")
    return field


def random_admissible_matrix(
    n: int, rng: np.random.Generator, contraction: HopfContraction | None = None, max_radius: float = 0.45
) -> np.ndarray:
    """A random symmetric ``A`` with ``A Abar < I/4`` and ``D A D = A``."""
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    A = A + A.T
    if contraction is not None:
        rr = np.outer(contraction.rho, contraction.rho)
        A = np.where(np.abs(rr - 1) < 1e-12, A, 0)
    norm = np.linalg.norm(A, 2)
    if norm == 0:
        return A
    # singular values of A are the square roots of the eigenvalues of A Abar
    return A * (max_radius * rng.uniform(0.2, 1.0) / norm)


# -- frame quantities -------------------------------------------------------------------


def torsion(field: ScalarField, z) -> TorsionBlock:
    """Chern torsion ``T^j_{ik} = delta_ij h_k - delta_kj h_i``."""
    hg = field.jet(z).h_grad
    eye = np.eye(field.n)
    return TorsionBlock(np.einsum("ij,k->jik", eye, hg) - np.einsum("kj,i->jik", eye, hg))


class Connections(NamedTuple):
    chern: ConnectionMatrix
    strominger: ConnectionMatrix


def connections(field: ScalarField, z) -> Connections:
    """Chern and Strominger connection matrices under ``e_i = h d/dz_i``.

    ``theta = (1/h)(dbar h - d h) I`` and
    ``theta^s_{ij} = (1/h)(d h - dbar h) delta_ij + (2/h)(h_jbar dzbar_i - h_i dz_j)``.
    """
    hg = field.jet(z).h_grad
    n = field.n
    eye = np.eye(n)
    chern = ConnectionMatrix(-np.einsum("ij,k->ijk", eye, hg), np.einsum("ij,k->ijk", eye, hg.conj()))
    strominger = ConnectionMatrix(
        np.einsum("ij,k->ijk", eye, hg) - 2 * np.einsum("i,jk->ijk", hg, eye),
        -np.einsum("ij,k->ijk", eye, hg.conj()) + 2 * np.einsum("j,ik->ijk", hg.conj(), eye),
    )
    return Connections(chern, strominger)


def strominger_curvature(field: ScalarField, z) -> CurvatureBlock:
    """Closed-form ``(1,1)``-part ``R^s_{k lbar i jbar}`` of the Strominger curvature."""
    jet = field.jet(z)
    hg, q = jet.h_grad, jet.q
    eye = np.eye(field.n)
    hh = np.outer(hg, hg.conj())
    out = (
        -4 * np.vdot(hg, hg).real * np.einsum("il,kj->klij", eye, eye)
        - 2 * np.einsum("ij,kl->klij", eye, q)
        + 4 * np.einsum("kl,ij->klij", eye, hh)
        + 2 * np.einsum("il,kj->klij", eye, q)
        + 2 * np.einsum("kj,il->klij", eye, q)
    )
    return CurvatureBlock(out)


def strominger_symmetrized(field: ScalarField, z) -> CurvatureBlock:
    """Closed form of the symmetrized Strominger curvature, written in ``xi`` alone."""
    jet = field.jet(z)
    eye = np.eye(field.n)
    H = jet.hess
    g2 = np.vdot(jet.grad, jet.grad).real
    out = -g2 / (2 * jet.xi) * (np.einsum("ad,cb->abcd", eye, eye) + np.einsum("ab,cd->abcd", eye, eye)) + 0.25 * (
        np.einsum("ab,cd->abcd", eye, H)
        + np.einsum("cd,ab->abcd", eye, H)
        + np.einsum("ad,cb->abcd", eye, H)
        + np.einsum("cb,ad->abcd", eye, H)
    )
    return CurvatureBlock(out)


def strominger_symmetrized_checked(field: ScalarField, z, tol: float = 1e-10) -> CurvatureBlock:
    """Closed form, cross-checked against ``symmetrize(strominger_curvature(...))``."""
    closed = strominger_symmetrized(field, z)
    other = symmetrize(strominger_curvature(field, z))
    scale = max(1.0, float(np.max(np.abs(closed.entries))))
    if np.max(np.abs(closed.entries - other.entries)) > tol * scale:
        raise ArithmeticError("symmetrized Strominger curvature: closed form and symmetrize path disagree")
    return closed


def gamma(field: ScalarField, z) -> ConnectionMatrix:
    return gamma_from_torsion(torsion(field, z))


def hss_pointwise(field: QuadricField, z) -> float:
    """Strominger holomorphic sectional curvature of an admissible metric at ``z``.

    ``f = -(4 tz A conj(Az) + tzAz + conj(tzAz)) / xi``.
    """
    z = np.asarray(z, dtype=complex)
    xi = field.value(z)
    Az = field.A @ z
    return float(-(4 * np.vdot(Az, Az).real + 2 * (z @ Az).real) / xi)


def space_form_lambda(field: ScalarField, z, f: float) -> float:
    """``lambda = f + |d xi|^2 / xi``; constant and equal to ``xi_{i ibar}`` for space forms."""
    jet = field.jet(z)
    return float(f + np.vdot(jet.grad, jet.grad).real / jet.xi)


def space_form_residual(field: ScalarField, z, f: float) -> float:
    """``max |xi_{i jbar} - lambda delta_ij|``: zero iff ``H^s = f`` at ``z``."""
    jet = field.jet(z)
    lam = space_form_lambda(field, z, f)
    return float(np.max(np.abs(jet.hess - lam * np.eye(field.n))))


# -- JSON metric specs ---------------------------------------------------------------


def parse_complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ValueError(f"complex numbers are [re, im] pairs, got {v!r}")
        return complex(float(v[0]), float(v[1]))
    return complex(v)


def parse_complex_matrix(rows, n: int) -> np.ndarray:
    """Accepts ``n`` rows of ``[re, im]`` pairs or a flat row-major list of ``n*n`` pairs."""
    flat = []
    for r in rows:
        if isinstance(r, (list, tuple)) and r and isinstance(r[0], (list, tuple)):
            flat.extend(r)
        else:
            flat.append(r)
    if len(flat) != n * n:
        raise ValueError(f"A needs {n * n} entries, got {len(flat)}")
    return np.array([parse_complex(v) for v in flat]).reshape(n, n)


@dataclass(frozen=True, eq=False)
class MetricSpec:
    family: str
    field: ScalarField
    contraction: HopfContraction | None = None


def metric_from_dict(spec: dict) -> MetricSpec:
    try:
        family = spec["family"]
        n = int(spec["n"])
    except KeyError as exc:
        raise ValueError(f"metric spec is missing field {exc.args[0]!r}") from None
    contraction = None
    if "contraction" in spec:
        c = spec["contraction"]
        contraction = HopfContraction(float(c["a"]), [parse_complex(v) for v in c["rho"]])
        if contraction.n != n:
            raise ValueError(f"contraction.rho has {contraction.n} entries, n = {n}")
    if family == "quadric":
        lam = float(spec.get("lambda", 1.0))
        A = parse_complex_matrix(spec.get("A", [[0, 0]] * (n * n)), n)
        if not lam > 0:
            raise NotPositive(f"lambda = {lam!r}: xi > 0 requires lambda > 0")
        A = A / lam
        if contraction is None:
            contraction = HopfContraction.classical(n)
        f = make_admissible(contraction, A)
    elif family == "hopf":
        f = QuadricField.hopf(n)
    elif family == "constant":
        f = ConstantField(n, float(spec.get("value", 1.0)))
    elif family == "power":
        f = PowerField(n, float(spec.get("p", 2.0)))
    else:
        raise ValueError(f"unknown metric family {family!r}")
    return MetricSpec(family, f, contraction)


def load_metric_spec(path) -> MetricSpec:
    with open(path) as fh:
        try:
            spec = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    return metric_from_dict(spec)
