import math

import numpy as np
import pytest

from daedex.examples import build_heat_hessenberg
from daedex.pencil import Pencil, ResolventSetError
from daedex.probe import (
    FunctionEvaluator,
    GrowthFit,
    PencilEvaluator,
    SamplePlan,
    default_plan,
    estimate_complex_resolvent_index,
    estimate_radiality_index,
    estimate_resolvent_index,
    fit_polynomial_growth,
    index_from_exponent,
)

LAM = np.geomspace(10, 1e4, 40)


class TestSamplePlan:
    def test_default_range(self):
        lam = SamplePlan.default(1.0).lambdas()
        assert lam[0] == pytest.approx(20) and lam[-1] == pytest.approx(2e6) and lam.size == 60

    @pytest.mark.parametrize("args", [(5.0, 5.0, 1e4), (0.0, 10.0, 500.0), (0.0, 1.0, 1e4, 5)])
    def test_invalid(self, args):
        with pytest.raises(ValueError):
            SamplePlan(*args)

    def test_default_plan_omega(self):
        p = Pencil(np.eye(2), np.diag([3.0, -1.0]))
        assert default_plan(p).omega == pytest.approx(4.0)


class TestFit:
    @pytest.mark.parametrize("k", [0.5, 1, 2, 3])
    def test_power_law_exponent(self, k):
        fit = fit_polynomial_growth(list(zip(LAM, LAM ** k)))
        assert fit.exponent == pytest.approx(k, rel=1e-6)

    def test_square_is_polynomial_two(self):
        fit = fit_polynomial_growth(list(zip(LAM, LAM ** 2)))
        assert fit.verdict == "polynomial" and fit.degree == 2

    def test_constant_is_bounded(self):
        assert fit_polynomial_growth([(z, 7.0) for z in LAM]).verdict == "bounded"

    def test_exponential_is_superpolynomial(self):
        lam = np.geomspace(10, 1000, 40)
        fit = fit_polynomial_growth(list(zip(lam, lam)), log_norms=True)
        assert fit.verdict == "superpolynomial"

    def test_nonpositive_norm(self):
        with pytest.raises(ValueError):
            fit_polynomial_growth([(z, 0.0) for z in LAM])

    def test_too_few_samples(self):
        with pytest.raises(ValueError):
            fit_polynomial_growth([(z, z) for z in LAM[:5]])

    def test_polynomial_verdict_window(self):
        with pytest.raises(ValueError):
            GrowthFit(1.5, 0.0, 0.0, 1.0, "polynomial", degree=2)

    @pytest.mark.parametrize("exponent,index", [(-1.0, 0), (0.0, 1), (1.0, 2), (2.05, 3), (1.2045, 3)])
    def test_index_from_exponent(self, exponent, index):
        assert index_from_exponent(exponent)[0] == index

    def test_off_integer_flag(self):
        assert index_from_exponent(1.4)[1]


class TestResolventEstimate:
    def test_nil2(self, nil2):
        plan = default_plan(nil2)
        assert estimate_resolvent_index(PencilEvaluator(nil2, plan.omega), plan).value == 2

    def test_identity_decay(self):
        p = Pencil(np.eye(2), -np.eye(2))
        plan = default_plan(p)
        assert estimate_resolvent_index(PencilEvaluator(p, plan.omega), plan).value == 0

    def test_function_evaluator(self):
        ev = FunctionEvaluator(lambda z: 3.0, omega=0.0)
        assert estimate_resolvent_index(ev, SamplePlan.default(0.0)).value == 1

    def test_outside_resolvent_set(self):
        ev = FunctionEvaluator(lambda z: math.inf)
        with pytest.raises(ResolventSetError):
            ev.resolvent_norm(1.0)

    def test_plan_outside_validity(self):
        ev = FunctionEvaluator(lambda z: 1.0, lam_max_valid=100.0)
        with pytest.raises(ValueError):
            estimate_resolvent_index(ev, SamplePlan.default(0.0))

    @pytest.mark.parametrize("backend", ["multiprecision", "double", "sparse"])
    def test_backends_agree(self, nil3, backend):
        ev = PencilEvaluator(nil3, 1.0, backend=backend)
        # (lam N - I)^{-1} = -(I + lam N + lam^2 N^2)
        lam = 10.0
        want = np.linalg.norm(np.eye(3) + lam * np.eye(3, k=1) + lam ** 2 * np.eye(3, k=2), 2)
        assert ev.resolvent_norm(lam) == pytest.approx(want, rel=1e-8)


class TestComplexEstimate:
    def test_identity_lines(self):
        p = Pencil(np.eye(2), -np.eye(2))
        ev = PencilEvaluator(p, 0.0)
        assert estimate_complex_resolvent_index(ev, [1.0, 10.0], 1e5).value == 0

    def test_not_below_real(self, suite):
        for b in suite[:5]:
            plan = default_plan(b.pencil, 30)
            ev = PencilEvaluator(b.pencil, plan.omega)
            real = estimate_resolvent_index(ev, plan).value
            cplx = estimate_complex_resolvent_index(ev, [plan.omega + 1], 1e5, plan=plan)
            assert cplx.value >= real

    def test_line_left_of_omega(self, nil2):
        with pytest.raises(ValueError):
            estimate_complex_resolvent_index(PencilEvaluator(nil2, 2.0), [1.0], 10.0)


class TestRadialityEstimate:
    def test_nil2(self, nil2):
        plan = default_plan(nil2)
        assert estimate_radiality_index(PencilEvaluator(nil2, plan.omega), plan).value == 1

    def test_heat(self):
        p = build_heat_hessenberg(30)
        plan = default_plan(p, 30)
        assert estimate_radiality_index(PencilEvaluator(p, plan.omega), plan).value == 1

    def test_no_product_form(self):
        with pytest.raises(NotImplementedError):
            estimate_radiality_index(FunctionEvaluator(lambda z: 1.0), SamplePlan.default(0.0))

    def test_matches_exact_on_suite(self, suite):
        for b in suite[:10]:
            plan = default_plan(b.pencil, 30)
            ev = PencilEvaluator(b.pencil, plan.omega)
            assert estimate_resolvent_index(ev, plan).value == b.nu
            assert estimate_radiality_index(ev, plan, p_max=b.nu + 1).value == b.nu - 1
