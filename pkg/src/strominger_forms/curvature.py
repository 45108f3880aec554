"""Frame-level tensor containers and holomorphic sectional curvature.

All arrays are complex and indexed with 0-based frame indices.  Storage
conventions, fixed once for the whole package:

* ``CurvatureBlock.entries[k, l, i, j]`` is ``R_{k lbar i jbar}``, where
  ``(k, l)`` are the 2-form arguments and ``(i, j)`` the endomorphism indices,
  i.e. ``Theta_{ij}(e_k, ebar_l)``.
* ``TorsionBlock.entries[j, i, k]`` is ``T^j_{ik}``.
* ``ConnectionMatrix.holo[i, j, k]`` / ``.anti[i, j, k]`` are the coefficients
  of ``phi_k`` / ``phibar_k`` in the connection 1-form ``theta_{ij}``, with
  ``nabla e_i = sum_j theta_{ij} e_j``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_TOL = 1e-10


class CurvatureError(ValueError):
    """Malformed block, dimension mismatch, or a non-Hermitian quartic form."""


def _as_complex(a, ndim: int, name: str) -> np.ndarray:
    arr = np.asarray(a, dtype=complex)
    if arr.ndim != ndim or len(set(arr.shape)) != 1:
        raise CurvatureError(f"{name} must be a cubical {ndim}-index array, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class CurvatureBlock:
    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", _as_complex(self.entries, 4, "curvature block"))

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __getitem__(self, idx):
        return self.entries[idx]

    @classmethod
    def zeros(cls, n: int) -> "CurvatureBlock":
        return cls(np.zeros((n,) * 4, dtype=complex))

    def hermitian_defect(self) -> float:
        """Largest ``|R_{k l i j} - conj(R_{l k j i})|``."""
        swapped = np.einsum("lkji->klij", self.entries).conj()
        return float(np.max(np.abs(self.entries - swapped), initial=0.0))

    def is_hermitian(self, tol: float = DEFAULT_TOL) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.entries), initial=0.0)))
        return self.hermitian_defect() <= tol * scale


@dataclass(frozen=True)
class TorsionBlock:
    entries: np.ndarray

    def __post_init__(self):
        arr = _as_complex(self.entries, 3, "torsion block")
        if not np.array_equal(arr, -arr.transpose(0, 2, 1)):
            raise CurvatureError("torsion must be antisymmetric in its lower indices")
        object.__setattr__(self, "entries", arr)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __getitem__(self, idx):
        return self.entries[idx]

    def gauduchon(self) -> np.ndarray:
        """Components ``eta_k = sum_i T^i_{ik}`` of the Gauduchon torsion 1-form."""
        return np.einsum("iik->k", self.entries)


@dataclass(frozen=True)
class ConnectionMatrix:
    holo: np.ndarray
    anti: np.ndarray

    def __post_init__(self):
        holo = _as_complex(self.holo, 3, "holomorphic coefficients")
        anti = _as_complex(self.anti, 3, "antiholomorphic coefficients")
        if holo.shape != anti.shape:
            raise CurvatureError("holo and anti coefficient arrays differ in shape")
        object.__setattr__(self, "holo", holo)
        object.__setattr__(self, "anti", anti)

    @property
    def n(self) -> int:
        return self.holo.shape[0]

    def __add__(self, other: "ConnectionMatrix") -> "ConnectionMatrix":
        return ConnectionMatrix(self.holo + other.holo, self.anti + other.anti)

    def __sub__(self, other: "ConnectionMatrix") -> "ConnectionMatrix":
        return ConnectionMatrix(self.holo - other.holo, self.anti - other.anti)

    def __rmul__(self, c) -> "ConnectionMatrix":
        return ConnectionMatrix(c * self.holo, c * self.anti)

    def skew_hermitian_defect(self) -> float:
        """Largest ``|holo[i, j, k] + conj(anti[j, i, k])|``; zero for metric connections."""
        return float(np.max(np.abs(self.holo + self.anti.transpose(1, 0, 2).conj()), initial=0.0))


def gamma_from_torsion(T: TorsionBlock) -> ConnectionMatrix:
    """The tensor ``gamma = nabla^1 - nabla^c`` under a unitary frame.

    ``gamma_{ij} = sum_k T^j_{ik} phi_k - conj(T^i_{jk}) phibar_k``.
    """
    t = T.entries
    return ConnectionMatrix(np.einsum("jik->ijk", t), -t.conj())


@dataclass(frozen=True)
class Direction:
    components: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.components, dtype=complex)
        if x.ndim != 1:
            raise CurvatureError("a direction is a complex n-vector")
        if abs(np.vdot(x, x).real - 1.0) > 1e-12:
            raise CurvatureError(f"direction must have unit norm, got |X|^2 = {np.vdot(x, x).real!r}")
        object.__setattr__(self, "components", x)

    @classmethod
    def normalized(cls, x) -> "Direction":
        x = np.asarray(x, dtype=complex)
        return cls(x / np.linalg.norm(x))


def symmetrize(P: CurvatureBlock) -> CurvatureBlock:
    """Four-term average that keeps only what the quartic form sees.

    ``Phat[a, b, c, d] = (P[a,b,c,d] + P[c,b,a,d] + P[a,d,c,b] + P[c,d,a,b]) / 4``.
    """
    p = P.entries if isinstance(P, CurvatureBlock) else _as_complex(P, 4, "curvature block")
    out = (p + np.einsum("cbad->abcd", p) + np.einsum("adcb->abcd", p) + np.einsum("cdab->abcd", p)) / 4
    return CurvatureBlock(out)


def constancy_pattern(n: int, f: float) -> CurvatureBlock:
    """``(f/2)(delta_ij delta_kl + delta_il delta_kj)``, the symmetrized block of a space form."""
    eye = np.eye(n)
    return CurvatureBlock(0.5 * f * (np.einsum("ab,cd->abcd", eye, eye) + np.einsum("ad,cb->abcd", eye, eye)))


def _quartic(p: np.ndarray, x: np.ndarray) -> np.ndarray:
    xc = x.conj()
    return np.einsum("klij,...k,...l,...i,...j->...", p, x, xc, x, xc)


def hss(P: CurvatureBlock, X, tol: float = DEFAULT_TOL) -> float:
    """Holomorphic sectional curvature ``sum P_{k l i j} X_k Xbar_l X_i Xbar_j`` at a unit ``X``."""
    x = X.components if isinstance(X, Direction) else Direction(X).components
    if x.shape[0] != P.n:
        raise CurvatureError(f"direction has length {x.shape[0]}, block has n = {P.n}")
    value = complex(_quartic(P.entries, x))
    scale = max(1.0, float(np.max(np.abs(P.entries), initial=0.0)))
    if abs(value.imag) > tol * scale:
        raise CurvatureError(f"quartic form has imaginary part {value.imag:.3e}; block is not Hermitian")
    return value.real


def random_directions(n: int, samples: int, rng: np.random.Generator) -> np.ndarray:
    """``samples`` unit vectors in C^n, rows of the returned array."""
    z = rng.standard_normal((samples, n)) + 1j * rng.standard_normal((samples, n))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


@dataclass(frozen=True)
class ConstancyReport:
    sampled_deviation: float
    entry_deviation: float

    @property
    def max_deviation(self) -> float:
        return max(self.sampled_deviation, self.entry_deviation)


def constancy_check(P: CurvatureBlock, f: float, samples: int = 200, seed: int = 0) -> ConstancyReport:
    """Test whether ``H = f`` pointwise, both by direction sampling and entrywise."""
    if samples < 1:
        raise CurvatureError("samples must be >= 1")
    phat = symmetrize(P).entries
    xs = random_directions(P.n, samples, np.random.default_rng(seed))
    sampled = float(np.max(np.abs(_quartic(phat, xs).real - f)))
    entry = float(np.max(np.abs(phat - constancy_pattern(P.n, f).entries)))
    return ConstancyReport(sampled, entry)


def max_abs_diff(a, b) -> float:
    a = a.entries if hasattr(a, "entries") else np.asarray(a)
    b = b.entries if hasattr(b, "entries") else np.asarray(b)
    return float(np.max(np.abs(a - b), initial=0.0))
