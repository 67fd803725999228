import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from abplab.constants import (CurvatureParams, build_ledger, calH, calS,
                              verify_ledger)


class TestSpecialFunctions:
    def test_limits_at_zero(self):
        assert calH(0.0) == 1.0
        assert calS(0.0) == 1.0

    def test_product_is_cosh(self):
        assert calS(1.0) * calH(1.0) == pytest.approx(math.cosh(1.0), abs=1e-12)

    def test_direct_values(self):
        # 2 coth(2) through the quotient of cosh and sinh
        assert calH(2.0) == pytest.approx(2.0 * math.cosh(2.0) / math.sinh(2.0), abs=1e-14)
        assert calS(2.0) == pytest.approx(math.sinh(2.0) / 2.0, abs=1e-14)

    def test_series_matches_formula_near_switch(self):
        for t in (9.9e-5, 1.01e-4):
            assert calH(t) == pytest.approx(t / math.tanh(t), abs=1e-14)
            assert calS(t) == pytest.approx(math.sinh(t) / t, abs=1e-14)

    def test_linear_bound(self):
        t = np.linspace(0.0, 20.0, 2000)
        assert np.all(calH(t) <= 1.0 + t + 1e-12)

    def test_monotone_increasing(self):
        t = np.linspace(1e-6, 10.0, 1000)
        assert np.all(np.diff(calH(t)) > 0)
        assert np.all(np.diff(calS(t)) > 0)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            calH(-0.5)
        with pytest.raises(ValueError):
            calS(-1e-9)

    @given(st.floats(min_value=0.0, max_value=30.0, allow_nan=False))
    @settings(max_examples=300, deadline=None)
    def test_cosh_identity_property(self, t):
        assert calS(t) * calH(t) == pytest.approx(math.cosh(t), rel=1e-12)


class TestBuildLedger:
    def test_flat_reference_values(self):
        lg = build_ledger(CurvatureParams(0.0, 2.0, 1.0))
        assert lg.omega == 0.0
        assert lg.doubling_r == pytest.approx(4.0, rel=1e-14)
        assert lg.eta == 1.0
        assert lg.alpha == 2.0
        assert lg.big_m == pytest.approx(2.0 * 4.0 * 18.0**2, rel=1e-14)  # 2592
        assert lg.delta0 == pytest.approx(1.0 / 32.0, abs=1e-16)

    def test_curved_alpha(self):
        lg = build_ledger(CurvatureParams(1.0, 2.0, 1.0))
        expect = 2.0 * math.sqrt(2.0) / math.tanh(math.sqrt(2.0))
        assert lg.alpha == pytest.approx(expect, abs=1e-13)

    def test_p1_coupling(self):
        lg = build_ledger(CurvatureParams(0.5, 3.0, 1.5))
        assert lg.p1 == pytest.approx(lg.p0 / (3.0 * lg.eta), rel=1e-14)

    def test_flat_collapse_r_independent(self, rng):
        base = build_ledger(CurvatureParams(0.0, 3.0, 1.0))
        for _ in range(10):
            lg = build_ledger(CurvatureParams(0.0, 3.0, rng.uniform(0.1, 5.0)))
            assert lg.eta == 1.0
            assert lg.alpha == 3.0
            assert lg.doubling_4r == pytest.approx(8.0, rel=1e-14)
            assert lg.p0 == pytest.approx(base.p0, rel=1e-12)
            assert lg.log_c2 == pytest.approx(base.log_c2, rel=1e-12)

    def test_scale_coupling(self, rng):
        # everything depends on K, R only through sqrt(K) R
        a = build_ledger(CurvatureParams(1.3, 3.0, 0.8))
        for _ in range(5):
            c = rng.uniform(0.3, 3.0)
            b = build_ledger(CurvatureParams(c * c * 1.3, 3.0, 0.8 / c))
            for key in ("eta", "alpha", "log_mu", "log_big_m", "log_delta0",
                        "p0", "p1", "log_c3", "log_c0", "log_c2"):
                va, vb = getattr(a, key), getattr(b, key)
                assert vb == pytest.approx(va, rel=1e-12), key

    def test_infinite_n_rejected(self):
        with pytest.raises(ValueError, match="N < inf"):
            build_ledger(CurvatureParams(0.0, math.inf, 1.0))

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            CurvatureParams(-0.1, 2.0, 1.0)
        with pytest.raises(ValueError):
            CurvatureParams(0.0, 1.5, 1.0)
        with pytest.raises(ValueError):
            CurvatureParams(0.0, 2.0, 0.0)


class TestVerifyLedger:
    def test_flat_all_pass(self):
        reports = verify_ledger(build_ledger(CurvatureParams(0.0, 2.0, 1.0)))
        assert len(reports) == 5
        assert all(r.passed for r in reports)

    def test_identity_residual_on_grid(self):
        for K in (0.0, 1.0, 2.0):
            for N in (2.0, 3.5, 5.0):
                for R in (0.5, 1.0, 2.0):
                    reports = verify_ledger(build_ledger(CurvatureParams(K, N, R)))
                    ident = next(r for r in reports if r.name == "ledger-identity-e")
                    assert abs(ident.lhs - math.e) <= 1e-10, (K, N, R)

    def test_delta0_proof_form(self):
        # e^{1/p0} delta0 >= 1, i.e. -log delta0 <= 1/p0, p0 computed first
        lg = build_ledger(CurvatureParams(0.0, 2.0, 1.0))
        assert lg.p0 > 0
        assert -math.log(lg.delta0) <= 1.0 / lg.p0

    def test_divergent_series_guarded(self):
        lg = build_ledger(CurvatureParams(0.0, 2.0, 1.0))
        broken = dataclasses.replace(lg, p0=1.0)
        with pytest.raises(ValueError, match="diverges"):
            verify_ledger(broken)

    def test_c3_gap_strict(self, rng):
        for _ in range(8):
            params = CurvatureParams(rng.uniform(0.0, 2.0), rng.uniform(2.0, 5.0),
                                     rng.uniform(0.5, 2.0))
            gap = next(r for r in verify_ledger(build_ledger(params))
                       if r.name == "ledger-c3-gap")
            assert gap.passed and gap.lhs < 0.0
