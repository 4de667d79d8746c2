import json

import numpy as np
import pytest
import scipy.io
import sympy

from daedex.examples import build_heat_hessenberg, build_transport
from daedex.generators import random_isomorphism
from daedex.pencil import (
    NotRegularError,
    Pencil,
    PencilError,
    ResolventSetError,
    is_regular,
    left_E_resolvent,
    load_pencil,
    pencil_from_json,
    pencil_to_json,
    quasi_weierstrass,
    resolvent,
    right_E_resolvent,
    save_pencil,
    wong_sequences,
)


class TestPencilType:
    def test_shape_mismatch(self):
        with pytest.raises(PencilError):
            Pencil(np.eye(2), np.eye(3))

    def test_non_square(self):
        with pytest.raises(PencilError):
            Pencil(np.ones((2, 3)), np.ones((2, 3)))

    def test_immutable(self, nil2):
        with pytest.raises(ValueError):
            nil2.E[0, 0] = 5


class TestSerialization:
    def test_json_round_trip(self, rng):
        p = Pencil(rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)), rng.standard_normal((3, 3)), "x")
        q = pencil_from_json(json.loads(json.dumps(pencil_to_json(p))))
        np.testing.assert_array_equal(p.E, q.E)
        np.testing.assert_array_equal(p.A, q.A)
        assert q.label == "x"

    def test_nested_entries(self):
        obj = {"n": 2, "E": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]], "A": [[[0, 0], [0, 1]], [[0, 0], [0, 0]]]}
        p = pencil_from_json(obj)
        assert p.E[1, 1] == 1 and p.A[0, 1] == 1j

    def test_bad_json_dimension(self):
        with pytest.raises(PencilError):
            pencil_from_json({"n": 3, "E": [[1, 0]], "A": [[1, 0]]})

    def test_files(self, tmp_path, nil2):
        save_pencil(nil2, tmp_path / "p.json")
        np.testing.assert_array_equal(load_pencil(tmp_path / "p.json").E, nil2.E)
        scipy.io.mmwrite(tmp_path / "E.mtx", nil2.E.real)
        scipy.io.mmwrite(tmp_path / "A.mtx", nil2.A.real)
        np.testing.assert_array_equal(load_pencil(tmp_path / "E.mtx", tmp_path / "A.mtx").A, nil2.A)
        np.testing.assert_array_equal(load_pencil(tmp_path).E, nil2.E)

    def test_missing_file(self, tmp_path):
        with pytest.raises(PencilError):
            load_pencil(tmp_path / "nope.json")


class TestRegularity:
    def test_identity(self):
        w = is_regular(Pencil(np.eye(2), np.zeros((2, 2))))
        assert w.regular and w.witness_lambda != 0

    def test_zero(self):
        assert not is_regular(Pencil([[0.0]], [[0.0]])).regular

    def test_singular_with_symbolic_check(self):
        E, A = [[1, 0], [0, 0]], [[0, 0], [0, 0]]
        lam = sympy.symbols("lam")
        assert sympy.simplify((lam * sympy.Matrix(E) - sympy.Matrix(A)).det()) == 0
        w = is_regular(Pencil(E, A))
        assert not w.regular and w.witness_lambda is None

    def test_high_index_is_regular(self):
        assert is_regular(Pencil(np.eye(6, k=1), np.eye(6))).regular

    def test_decomposition_rejects_singular(self):
        with pytest.raises(NotRegularError):
            quasi_weierstrass(Pencil([[1, 0], [0, 0]], np.zeros((2, 2))))


class TestWong:
    def test_invertible_E(self, rng):
        r = wong_sequences(Pencil(np.eye(3), rng.standard_normal((3, 3))))
        assert r.k_stab == 0 and r.W_limit.dim == 0

    def test_shift(self, nil2):
        r = wong_sequences(nil2)
        assert r.w_steps == [0, 1, 2] and r.k_stab == 2

    def test_heat(self):
        assert wong_sequences(build_heat_hessenberg(20)).k_stab == 2

    def test_complementary(self, suite):
        for b in suite[:10]:
            r = wong_sequences(b.pencil)
            assert r.V_limit.dim + r.W_limit.dim == b.pencil.n


class TestWeierstrass:
    def test_invertible_E(self, rng):
        A = rng.standard_normal((4, 4))
        d = quasi_weierstrass(Pencil(np.eye(4), A))
        assert d.d2 == 0 and d.nilpotency_degree == 0
        np.testing.assert_allclose(np.sort_complex(d.finite_eigenvalues()), np.sort_complex(np.linalg.eigvals(A)),
                                   atol=1e-10)

    def test_shift(self, nil2):
        d = quasi_weierstrass(nil2)
        assert d.d1 == 0 and d.nilpotency_degree == 2
        assert np.allclose(d.N @ d.N, 0) and not np.allclose(d.N, 0)

    def test_heat(self):
        d = quasi_weierstrass(build_heat_hessenberg(30))
        assert d.d2 == 2 and np.allclose(d.N @ d.N, 0, atol=1e-10)

    def test_round_trip(self, suite):
        for b in suite:
            p, d = b.pencil, quasi_weierstrass(b.pencil)
            r = d.reconstruct()
            assert np.linalg.norm(p.E - r.E, 2) <= 1e-8 * np.linalg.norm(p.E, 2)
            assert np.linalg.norm(p.A - r.A, 2) <= 1e-8 * np.linalg.norm(p.A, 2)

    def test_wong_step_equals_degree(self, suite):
        for b in suite:
            d = quasi_weierstrass(b.pencil)
            assert d.wong.k_stab == d.nilpotency_degree == b.nu


class TestResolvents:
    def test_identity(self):
        p = Pencil(np.eye(3), np.zeros((3, 3)))
        np.testing.assert_allclose(resolvent(p, 2.0), 0.5 * np.eye(3))
        np.testing.assert_allclose(right_E_resolvent(p, 2.0), resolvent(p, 2.0))
        np.testing.assert_allclose(left_E_resolvent(p, 2.0), resolvent(p, 2.0))

    @pytest.mark.parametrize("lam", [0.5, 3.0, -2 + 1j, 100.0])
    def test_shift(self, nil2, lam):
        N = nil2.E
        np.testing.assert_allclose(resolvent(nil2, lam), -(np.eye(2) + lam * N), atol=1e-12)
        np.testing.assert_allclose(right_E_resolvent(nil2, lam), -N, atol=1e-12)

    def test_eigenvalue_raises(self):
        with pytest.raises(ResolventSetError):
            resolvent(Pencil(np.eye(2), np.diag([1.0, 2.0])), 2.0)

    def test_left_right_agree_in_block_form(self, suite):
        d = quasi_weierstrass(suite[3].pencil)
        Et, At = d.blocks()
        q = Pencil(Et, At)
        lam = 7.5 + 0.5j
        np.testing.assert_allclose(left_E_resolvent(q, lam), right_E_resolvent(q, lam), atol=1e-10)

    def test_resolvent_identity(self, suite, rng):
        for b in suite[:10]:
            p = b.pencil
            lam, mu = 50 + 3j, -40 + 20j
            lhs = resolvent(p, lam) - resolvent(p, mu)
            rhs = (mu - lam) * resolvent(p, lam) @ p.E @ resolvent(p, mu)
            assert np.linalg.norm(lhs - rhs) <= 1e-8 * np.linalg.norm(lhs)

    def test_transport_matches_continuous_resolvent(self):
        # continuous solution of (s E - A) x = (a, f, b, c):
        # x1(0) = a, x1' + s x1 = f, x1(1) - x2 = b, s x2 - x3 = c
        n, s = 800, 1.0
        p = build_transport(n)
        xi = np.linspace(0, 1, n)
        f = np.sin(np.pi * xi)
        a, b, c = 0.3, -0.2, 0.7
        rhs = np.concatenate([[a], f[1:], [b, c]])
        x = np.linalg.solve(p.matrix(s), rhs)
        g = np.exp(s * xi) * f
        integral = np.concatenate([[0], np.cumsum((g[1:] + g[:-1]) / 2 * np.diff(xi))])
        x1 = np.exp(-s * xi) * (a + integral)
        x2 = x1[-1] - b
        x3 = s * x2 - c
        h = 1 / (n - 1)
        assert np.max(np.abs(x[:n] - x1)) < 5 * h
        assert abs(x[n] - x2) < 5 * h and abs(x[n + 1] - x3) < 5 * h


def test_equivalent_pencils_share_structure(suite, rng):
    p = suite[5].pencil
    q = p.transformed(random_isomorphism(rng, p.n), random_isomorphism(rng, p.n))
    assert quasi_weierstrass(q).nilpotency_degree == quasi_weierstrass(p).nilpotency_degree
