import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from strominger_forms import lie
from strominger_forms.curvature import constancy_check, hss, max_abs_diff, symmetrize
from strominger_forms.lie import LieStructure, StructureError

from conftest import cplx
from oracles import jacobi_defect, structure_equation_curvature

seeds = st.integers(0, 2**32 - 1)


def unitary(rng, n):
    q, r = np.linalg.qr(cplx(rng, n, n))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def complex_lie_algebra(rng):
    """``sl(2, C)`` in a random basis: a valid structure with ``D = 0``."""
    C = np.zeros((3, 3, 3), complex)
    # [h, e] = 2e, [h, f] = -2f, [e, f] = h
    C[1, 0, 1], C[2, 0, 2], C[0, 1, 2] = 2, -2, 1
    C = C - C.transpose(0, 2, 1)
    P = cplx(rng, 3, 3)
    Pinv = np.linalg.inv(P)
    C = np.einsum("ia,kb,cj,cab->jik", P, P, Pinv, C)
    return LieStructure((C - C.transpose(0, 2, 1)) / 2, np.zeros_like(C))


def valid_structures(rng, count):
    out = []
    for n in (2, 3, 4):
        C, D, _ = lie.sample_valid_cfgu(n, count, rng)
        out += [LieStructure(c, d).rotated(unitary(rng, n)) for c, d in zip(C, D)]
    out += [complex_lie_algebra(rng) for _ in range(count)]
    return out


@pytest.fixture
def structures(rng):
    return valid_structures(rng, 12)


def random_structure(rng, n):
    C = cplx(rng, n, n, n)
    return LieStructure(C - C.transpose(0, 2, 1), cplx(rng, n, n, n))


# -- construction and validation ---------------------------------------------------------


def test_c_antisymmetry_is_exact(rng):
    with pytest.raises(StructureError, match="antisymmetric"):
        LieStructure(cplx(rng, 2, 2, 2), np.zeros((2, 2, 2)))
    with pytest.raises(StructureError, match="n x n x n"):
        LieStructure(np.zeros((2, 2, 2)), np.zeros((3, 3, 3)))


@pytest.mark.parametrize("s", [lie.abelian(2), lie.abelian(4), lie.iwasawa(), lie.heisenberg_like(0.3 - 0.2j)])
def test_catalog_passes_bianchi(s):
    rep = lie.validate(s)
    assert rep.passed and rep.max_residual == 0


def test_dense_random_structure_fails_with_worst_tuple(rng):
    rep = lie.validate(random_structure(rng, 3))
    assert not rep.passed
    name, idx = rep.worst
    assert name in ("CC", "CD", "CDbar") and len(idx) == 4 and all(1 <= i <= 3 for i in idx)


def test_bianchi_agrees_with_jacobi(rng, structures):
    for s in structures:
        assert jacobi_defect(s.C, s.D) < 1e-12
        assert lie.validate(s).passed
    for _ in range(20):
        s = random_structure(rng, 3)
        assert (jacobi_defect(s.C, s.D) < 1e-9) == lie.validate(s, tol=1e-9).passed


def test_perturbed_structure_is_rejected(rng):
    # perturbing a valid structure in one slot breaks Jacobi and is caught
    for s in valid_structures(rng, 4):
        D = s.D.copy()
        D[0, 0, 0] += 0.5
        bad = LieStructure(s.C, D)
        assert jacobi_defect(bad.C, bad.D) > 1e-6
        assert not lie.validate(bad).passed


def test_rotation_preserves_validity_and_hss(rng, structures):
    for s in structures[:20]:
        U = unitary(rng, s.n)
        r = s.rotated(U)
        assert lie.validate(r).passed
        x = rng.standard_normal(s.n) + 1j * rng.standard_normal(s.n)
        x /= np.linalg.norm(x)
        # e'_i = U_ia e_a, so the vector with frame components x in e' has components U^T x in e
        assert hss(lie.lie_symmetrized(r), x) == pytest.approx(hss(lie.lie_symmetrized(s), U.T @ x), abs=1e-10)


# -- torsion and curvature --------- ------------------------------------------------


def test_torsion_values():
    assert not np.any(lie.lie_torsion(lie.abelian(3)).entries)
    T = lie.lie_torsion(lie.iwasawa())
    assert T[2, 0, 1] == -0.5 and T[2, 1, 0] == 0.5
    D = np.zeros((2, 2, 2), complex)
    D[0, 1, 1] = 0.7
    assert not np.any(lie.lie_torsion(LieStructure(np.zeros_like(D), D)).entries)


def test_connections_are_metric(structures):
    for s in structures:
        for conn in lie.lie_connections(s):
            assert conn.skew_hermitian_defect() < 1e-14


def test_strominger_minus_chern_is_twice_gamma(structures):
    from strominger_forms.curvature import gamma_from_torsion

    for s in structures:
        ch, st_ = lie.lie_connections(s)
        g = gamma_from_torsion(lie.lie_torsion(s))
        np.testing.assert_allclose((st_ - ch).holo, 2 * g.holo, atol=1e-14)
        np.testing.assert_allclose((st_ - ch).anti, 2 * g.anti, atol=1e-14)


def test_curvature_matches_structure_equation(structures):
    for s in structures:
        chern, strom = lie.lie_connections(s)
        assert max_abs_diff(lie.lie_strominger_curvature(s), structure_equation_curvature(strom, s.C, s.D)) < 1e-12


def test_chern_curvature_from_structure_equation_is_hermitian(structures):
    for s in structures:
        chern, _ = lie.lie_connections(s)
        R = structure_equation_curvature(chern, s.C, s.D)
        assert np.abs(R - np.einsum("lkji->klij", R).conj()).max() < 1e-12


def test_curvature_is_hermitian(structures):
    for s in structures:
        assert lie.lie_strominger_curvature(s).is_hermitian()


def test_symmetrized_paths_agree(structures):
    for s in structures:
        assert max_abs_diff(lie.lie_symmetrized(s), symmetrize(lie.lie_strominger_curvature(s))) < 1e-10


@given(seeds, st.integers(2, 4))
def test_closed_forms_are_algebraic_identities(seed, n):
    # the closed forms do not use the Bianchi identities
    s = random_structure(np.random.default_rng(seed), n)
    phat = lie.lie_symmetrized(s)
    assert max_abs_diff(phat, symmetrize(lie.lie_strominger_curvature(s))) < 1e-10
    np.testing.assert_allclose(lie.diagonal_symmetrized(s), np.einsum("iiii->i", phat.entries).real, atol=1e-10)
    for i in range(n):
        for k in range(n):
            assert lie.mixed_symmetrized(s, i, k) == pytest.approx(4 * phat[k, k, i, i].real, abs=1e-10)


def test_batched_arrays_match_single(rng):
    C, D, _ = lie.sample_valid_cfgu(3, 5, rng)
    batch = lie.symmetrized_curvature_array(C, D)
    for b, c, d in zip(batch, C, D):
        np.testing.assert_allclose(b, lie.lie_symmetrized(LieStructure(c, d)).entries, atol=1e-15)


def test_iwasawa_values():
    s = lie.iwasawa()
    R = lie.lie_strominger_curvature(s)
    assert R[0, 0, 2, 2] == -1 and R[1, 1, 2, 2] == -1
    P = lie.lie_symmetrized(s)
    assert P[2, 2, 0, 0] == pytest.approx(-0.25)
    assert lie.mixed_symmetrized(s, 0, 2) == pytest.approx(-1)
    assert hss(P, np.array([1, 0, 1]) / np.sqrt(2)) == pytest.approx(-0.25, abs=1e-12)
    assert hss(P, [1, 0, 0]) == 0
    assert constancy_check(P, 0.0).max_deviation >= 0.25 - 1e-12


# -- nilpotency and rigidity -------------------------------------------------------------


@pytest.mark.parametrize(
    "slot, expected",
    [
        (None, {"salamon": True, "cfgu": True}),
        (("D", 0, 1, 2), {"salamon": True, "cfgu": False}),
        (("D", 1, 0, 0), {"salamon": False, "cfgu": False}),
        (("C", 1, 0, 2), {"salamon": True, "cfgu": False}),
        (("C", 0, 1, 2), {"salamon": False, "cfgu": False}),
    ],
)
def test_nilpotency_predicates(slot, expected):
    C = np.zeros((3, 3, 3), complex)
    D = np.zeros((3, 3, 3), complex)
    if slot:
        name, j, i, k = slot
        if name == "C":
            C[j, i, k], C[j, k, i] = 1, -1
        else:
            D[j, i, k] = 1
    assert lie.nilpotency_predicates(LieStructure(C, D)) == expected


def test_iwasawa_is_cfgu():
    assert lie.nilpotency_predicates(lie.iwasawa()) == {"salamon": True, "cfgu": True}


@given(seeds, st.integers(2, 4))
def test_cfgu_implies_salamon(seed, n):
    rng = np.random.default_rng(seed)
    C, D = lie.random_cfgu_candidates(n, 1, rng)
    s = LieStructure(C[0], D[0])
    assert lie.nilpotency_predicates(s) == {"salamon": True, "cfgu": True}


def test_cfgu_diagonal_reduction(rng):
    for n in (2, 3, 4):
        C, D = lie.random_cfgu_candidates(n, 50, rng)
        for c, d in zip(C, D):
            s = LieStructure(c, d)
            expected = [-2 * np.sum(np.abs(d[i, i + 1 :, i]) ** 2) for i in range(n)]
            np.testing.assert_allclose(np.einsum("iiii->i", lie.lie_symmetrized(s).entries).real, expected, atol=1e-12)


def test_cascade_identity(rng):
    for n in (2, 3, 4):
        C, D = lie.random_cfgu_candidates(n, 50, rng)
        for j in range(n):
            D[:, j, :, j] = 0
        for c, d in zip(C, D):
            s = LieStructure(c, d)
            P = lie.lie_symmetrized(s)
            for k in range(n):
                for i in range(k):
                    assert lie.nil_d_residual(s, i, k) == pytest.approx(-4 * P[k, k, i, i].real, abs=1e-12)


def test_rigidity_abelian():
    rep = lie.rigidity_check(lie.abelian(4))
    assert rep.constant and rep.forced_zero and rep.first_violation is None
    assert rep.steps[-1] == "C = 0"


def test_rigidity_heisenberg_like():
    rep = lie.rigidity_check(lie.heisenberg_like(0.3))
    assert rep.f_candidates == pytest.approx([-0.18, 0.0])
    assert rep.f_predicted == pytest.approx(rep.f_candidates)
    assert not rep.constant and not rep.forced_zero


def test_rigidity_iwasawa():
    rep = lie.rigidity_check(lie.iwasawa())
    assert rep.f_candidates == [0, 0, 0]
    assert rep.constancy_deviation == pytest.approx(0.25)
    assert not rep.constant


def test_rigidity_needs_cfgu():
    D = np.zeros((3, 3, 3))
    D[0, 1, 2] = 1
    with pytest.raises(StructureError, match="CFGU"):
        lie.rigidity_check(LieStructure(np.zeros_like(D), D))


def test_cfgu_sampler_is_seeded_and_valid():
    a = lie.sample_valid_cfgu(3, 20, np.random.default_rng(4))
    b = lie.sample_valid_cfgu(3, 20, np.random.default_rng(4))
    np.testing.assert_array_equal(a[0], b[0])
    assert a[2] >= 20
    for c, d in zip(a[0], a[1]):
        s = LieStructure(c, d)
        assert lie.validate(s).passed and lie.nilpotency_predicates(s)["cfgu"] and s.norm() > 0


# -- JSON -----------------------------------------------------------------------------------


def test_json_round_trip(tmp_path, structures):
    for s in structures[:5]:
        back = lie.structure_from_dict(json.loads(json.dumps(lie.structure_to_dict(s))))
        np.testing.assert_array_equal(back.C, s.C)
        np.testing.assert_array_equal(back.D, s.D)


def test_json_antisymmetric_completion(tmp_path):
    p = tmp_path / "iwasawa.json"
    p.write_text(json.dumps({"n": 3, "C": [{"j": 3, "i": 1, "k": 2, "re": 1.0, "im": 0.0}], "D": []}))
    s = lie.load_structure(p)
    np.testing.assert_array_equal(s.C, lie.iwasawa().C)
    assert s.name == "iwasawa"


def test_json_catalog():
    s = lie.structure_from_dict({"catalog": "heisenberg-like", "d121": [0.3, 0.1]})
    assert s.D[0, 1, 0] == 0.3 + 0.1j
    assert lie.structure_from_dict({"catalog": "abelian", "n": 2}).n == 2


@pytest.mark.parametrize(
    "spec, message",
    [
        ({"C": []}, "'n'"),
        ({"n": 2, "C": [{"j": 1, "i": 1}]}, "'k'"),
        ({"n": 2, "D": [{"j": 3, "i": 1, "k": 1}]}, "out of range"),
        ({"n": 2, "C": [{"j": 1, "i": 1, "k": 1, "re": 1}]}, "vanish"),
        ({"n": 2, "C": [{"j": 1, "i": 1, "k": 2, "re": 1}, {"j": 1, "i": 2, "k": 1, "re": 1}]}, "conflicts"),
        ({"catalog": "e8"}, "unknown"),
    ],
)
def test_json_errors(spec, message):
    with pytest.raises(ValueError, match=message):
        lie.structure_from_dict(spec)


def test_load_structure_reports_line(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"n": 2,\n\n "C": [}')
    with pytest.raises(ValueError, match="line 3"):
        lie.load_structure(p)
