import math

import numpy as np
import pytest
import scipy.linalg

from daedex.generators import random_regular_pencil
from daedex.pencil import Pencil, WeierstrassDecomposition, quasi_weierstrass
from daedex.perturb import (
    DEFAULT_N_LIST,
    PerturbationSpec,
    closed_form_solution,
    delta_derivative,
    estimate_perturbation_index,
    perturbation_probe,
    select_v2,
)

N2 = np.array([[0.0, 1.0], [0.0, 0.0]])


def block(N, A1=None):
    A1 = np.zeros((0, 0)) if A1 is None else np.asarray(A1, dtype=float)
    d1, d2 = A1.shape[0], N.shape[0]
    nu = next(k for k in range(d2 + 1) if not np.any(np.linalg.matrix_power(N, k))) if d2 else 0
    I = np.eye(d1 + d2)
    return WeierstrassDecomposition(I, I, I, A1, N, d1, d2, nu)


class TestSpec:
    @pytest.mark.parametrize("kw", [dict(p=0, n=4), dict(p=1, n=0), dict(p=1, n=4, T=-1.0), dict(p=1, n=1, T=1.0)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            PerturbationSpec(v2=np.ones(1), **kw)

    @pytest.mark.parametrize("p", [
        1,
        pytest.param(2, marks=pytest.mark.xfail(strict=True, reason="Re(i^p) = -1 at t = 0 for p = 2")),
        3,
    ])
    def test_delta_vanishes_at_zero(self, p):
        for n in DEFAULT_N_LIST:
            spec = PerturbationSpec(p, n, np.array([1.0]))
            assert abs(delta_derivative(spec, [0.0], 0)[0, 0]) < 1e-15

    @pytest.mark.parametrize("p", [2, 4])
    def test_even_power_start_is_small(self, p):
        # delta^(p-1)(0) = 0 and lower derivatives are O(1/n), so x(0) -> 0
        d = block(np.eye(p, k=1))
        for n in (4, 64):
            spec = PerturbationSpec(p, n, select_v2(d))
            assert abs(delta_derivative(spec, [0.0], p - 1)).max() < 1e-12
            x0 = closed_form_solution(d, np.zeros(0), spec).x[0]
            assert np.linalg.norm(x0) <= 1.5 / n

    def test_derivatives_are_analytic(self):
        spec = PerturbationSpec(3, 5, np.array([1.0]))
        t = np.linspace(0.1, 3.0, 7)
        h = 1e-6
        for i in range(3):
            fd = (delta_derivative(spec, t + h, i) - delta_derivative(spec, t - h, i)) / (2 * h)
            np.testing.assert_allclose(fd, delta_derivative(spec, t, i + 1), atol=1e-6)


class TestClosedForm:
    def test_degree_two_formula(self):
        d = block(N2)
        n = 8
        spec = PerturbationSpec(2, n, np.array([0.0, 1.0]))
        tr = closed_form_solution(d, np.zeros(0), spec)
        t = tr.t
        want = np.column_stack([-np.sin(n * t), np.cos(n * t) / n])
        np.testing.assert_allclose(tr.x.real, want, atol=1e-13)

    @pytest.mark.parametrize("nu", [1, 2, 3, 4])
    def test_residual(self, nu):
        d = block(np.eye(nu, k=1))
        spec = PerturbationSpec(nu, 16, select_v2(d))
        tr = closed_form_solution(d, np.zeros(0), spec)
        res = tr.x2_dot @ d.N.T - tr.x - tr.delta
        assert np.abs(res).max() <= 1e-8

    def test_pure_semigroup(self):
        A1 = np.array([[-1.0, 2.0], [0.0, -0.5]])
        d = block(np.zeros((0, 0)), A1)
        grid = np.linspace(0, math.pi, 50)
        x0 = np.array([1.0, -1.0])
        tr = closed_form_solution(d, x0, None, grid=grid)
        np.testing.assert_allclose(tr.x[-1], scipy.linalg.expm(A1 * math.pi) @ x0, atol=1e-12)
        assert np.linalg.norm(tr.x[-1]) <= np.linalg.norm(scipy.linalg.expm(A1 * math.pi), 2) * np.linalg.norm(x0)

    def test_grid_required_without_spec(self):
        with pytest.raises(ValueError):
            closed_form_solution(block(N2), np.zeros(0), None)

    def test_nonuniform_grid(self):
        spec = PerturbationSpec(2, 4, np.array([0.0, 1.0]))
        with pytest.raises(ValueError):
            closed_form_solution(block(N2), np.zeros(0), spec, grid=[0.0, 0.1, 0.5])

    def test_v2_in_kernel_rejected(self):
        spec = PerturbationSpec(2, 4, np.array([1.0, 0.0]))
        with pytest.raises(ValueError):
            closed_form_solution(block(N2), np.zeros(0), spec)

    def test_original_coordinates(self, rng):
        b = random_regular_pencil(rng, 2, n=6, d2=2)
        d = quasi_weierstrass(b.pencil)
        spec = PerturbationSpec(2, 8, select_v2(d))
        tr = closed_form_solution(d, np.zeros(d.d1), spec, original=True)
        # E x' = A x + delta in the original coordinates
        xd = np.gradient(tr.x, tr.t, axis=0)
        res = xd @ b.pencil.E.T - tr.x @ b.pencil.A.T - tr.delta
        assert np.abs(res[2:-2]).max() < 1e-2 * np.abs(tr.x).max()


class TestProbe:
    def test_degree_two_ratios(self):
        d = block(N2)
        low = perturbation_probe(d, 1)
        top = perturbation_probe(d, 2)
        # max |x| = 1 over |x(0)| + max |delta| = 1/n + 1/n
        np.testing.assert_allclose(low, np.array(DEFAULT_N_LIST) / 2, rtol=1e-3)
        assert max(top) / min(top) < 10
        assert np.all(np.diff(low) > 0)

    def test_growth_rate(self, rng):
        for nu in (2, 3):
            d = quasi_weierstrass(random_regular_pencil(rng, nu).pencil)
            low = perturbation_probe(d, nu - 1)
            assert low[-1] / low[0] >= (DEFAULT_N_LIST[-1] / DEFAULT_N_LIST[0]) ** 0.9

    def test_needs_nilpotent_block(self):
        with pytest.raises(ValueError):
            perturbation_probe(block(np.zeros((0, 0)), -np.eye(2)), 1)

    def test_v2_selection_fails_without_block(self):
        with pytest.raises(ValueError):
            select_v2(block(np.zeros((0, 0)), -np.eye(2)))


class TestEstimate:
    def test_degree_two(self):
        est = estimate_perturbation_index(block(N2))
        assert est.value == 2 and est.method == "estimated"

    @pytest.mark.parametrize("nu", [1, 2, 3])
    def test_built_pencils(self, nu):
        rng = np.random.default_rng(100 + nu)
        d = quasi_weierstrass(random_regular_pencil(rng, nu).pencil)
        assert estimate_perturbation_index(d).value == nu

    def test_degree_zero_flagged(self):
        d = quasi_weierstrass(Pencil(np.eye(2), -np.eye(2)))
        est = estimate_perturbation_index(d)
        assert est.value == 0 and est.flags

    def test_short_n_list(self):
        with pytest.raises(ValueError):
            estimate_perturbation_index(block(N2), n_list=[4, 8])
