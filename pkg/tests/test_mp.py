import numpy as np
import pytest

from daedex.mp import MPPencil


class TestMPPencil:
    def test_resolvent_matches_closed_form(self):
        N = np.eye(4, k=1)
        mp = MPPencil(N, np.eye(4))
        lam = 100.0
        # (lam N - I)^{-1} = -sum lam^k N^k
        want = np.linalg.norm(sum(lam ** k * np.linalg.matrix_power(N, k) for k in range(4)), 2)
        assert mp.resolvent_norm(lam) == pytest.approx(want, rel=1e-10)

    def test_product_is_zero_beyond_degree(self):
        mp = MPPencil(np.array([[0.0, 1.0], [0.0, 0.0]]), np.eye(2))
        # (lam N - I)^{-1} N = -N, so two factors vanish
        assert mp.product_norm([3.0], "right") == pytest.approx(1.0)
        assert mp.product_norm([3.0, 5.0], "right", atol=1e-30) <= 1e-30
        assert mp.product_norm([3.0, 5.0], "left", atol=1e-30) <= 1e-30

    def test_complex_and_real_agree(self, rng):
        E, A = rng.standard_normal((5, 5)), rng.standard_normal((5, 5))
        mp = MPPencil(E, A)
        lam = 2.5
        want = 1 / np.linalg.svd(lam * E - A, compute_uv=False).min()
        assert mp.resolvent_norm(lam) == pytest.approx(want, rel=1e-9)
        assert mp.resolvent_norm(lam + 0j) == pytest.approx(want, rel=1e-9)

    def test_ill_conditioned_raises_precision(self):
        n = 6
        mp = MPPencil(np.eye(n, k=1), np.eye(n), start_prec=53)
        lam = 1e8
        want = np.linalg.norm(sum(lam ** k * np.linalg.matrix_power(np.eye(n, k=1), k) for k in range(n)), 2)
        assert mp.resolvent_norm(lam) == pytest.approx(want, rel=1e-8)

    def test_singular(self):
        mp = MPPencil(np.eye(2), np.eye(2))
        with pytest.raises(ZeroDivisionError):
            mp.resolvent_norm(1.0)
