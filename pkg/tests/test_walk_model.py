import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import ASYM, DSTAR, POS, laws
from excursion.errors import (
    NonNegativeDrift,
    NonProbability,
    NoNegativeStep,
    NoPositiveStep,
    Periodic,
)
from excursion.walk_model import (
    CramerProfile,
    build_model,
    law_from_json,
    profile,
    reverse,
    solve_lambda,
    solve_mu,
    tilt,
    validate,
)

LN25 = math.log(2.5)


class TestValidate:
    def test_dstar_mean(self):
        assert DSTAR.mean == pytest.approx(-0.3, abs=1e-15)

    def test_periodic(self):
        with pytest.raises(Periodic):
            validate([-1, 1], [0.6, 0.4])

    def test_sum_not_one(self):
        with pytest.raises(NonProbability):
            validate([-1, 0, 1], [0.5, 0.3, 0.3])

    @pytest.mark.parametrize(
        "support, probs, err",
        [
            ([-1, 0], [0.5, 0.5], NoPositiveStep),
            ([0, 2, 3], [0.2, 0.3, 0.5], NoNegativeStep),
            ([-1, 0, 1], [0.5, 0.5, 0.0], NonProbability),
            ([-1, -1, 1], [0.3, 0.3, 0.4], NonProbability),
            ([-2, 2, 4], [0.3, 0.3, 0.4], Periodic),
            ([], [], NonProbability),
        ],
    )
    def test_rejections(self, support, probs, err):
        with pytest.raises(err):
            validate(support, probs)

    def test_unsorted_input_is_sorted(self):
        law = validate([1, -1, 0], [0.2, 0.5, 0.3])
        assert law == DSTAR

    def test_json(self):
        assert law_from_json(json.dumps(DSTAR.to_dict())) == DSTAR

    def test_fingerprint_stable(self):
        assert DSTAR.fingerprint == validate([-1, 0, 1], [0.5, 0.3, 0.2]).fingerprint
        assert DSTAR.fingerprint != POS.fingerprint


class TestRoots:
    def test_lambda_dstar(self):
        assert abs(solve_lambda(DSTAR) - LN25) < 1e-12

    def test_lambda_asym(self):
        assert abs(solve_lambda(ASYM) - math.log(3.0)) < 1e-12

    def test_mu_dstar(self):
        mu, phi = solve_mu(DSTAR)
        assert abs(mu - 0.5 * LN25) < 1e-12
        assert abs(phi - (0.3 + 2 * math.sqrt(0.1))) < 1e-12

    def test_mu_asym(self):
        mu, phi = solve_mu(ASYM)
        assert abs(math.exp(2 * mu) - 3.0) < 1e-11
        assert abs(phi - (0.2 + 2 * math.sqrt(0.12))) < 1e-12

    def test_positive_drift_rejected(self):
        with pytest.raises(NonNegativeDrift):
            solve_lambda(POS)

    @given(laws(sign=-1))
    def test_lambda_root_and_order(self, law):
        lam = solve_lambda(law)
        mu, phi = solve_mu(law)
        assert lam > 0
        assert abs(law.mgf(lam) - 1.0) <= 1e-12
        assert abs(law.mgf_d1(mu)) <= 1e-10
        assert 0 < mu < lam
        assert 0 < phi < 1

    @given(laws(sign=-1))
    def test_mu_minimises_phi(self, law):
        mu, phi = solve_mu(law)
        grid = mu + np.linspace(-1.0, 1.0, 41)
        assert all(phi <= law.mgf(s) + 1e-14 for s in grid)

    @given(laws())
    def test_phi_strictly_convex(self, law):
        s = np.linspace(-2.0, 2.0, 81)
        phi = np.array([law.mgf(v) for v in s])
        assert np.all(np.diff(phi, 2) > 0)


class TestTiltReverse:
    def test_tilt_zero(self):
        assert np.allclose(tilt(DSTAR, 0.0).p, DSTAR.p, rtol=0, atol=1e-15)

    def test_tilt_lambda_dstar(self):
        assert np.allclose(tilt(DSTAR, LN25).p, [0.2, 0.3, 0.5], rtol=0, atol=1e-12)

    def test_reverse(self):
        assert reverse(DSTAR).probs == (0.2, 0.3, 0.5)
        assert reverse(reverse(ASYM)) == ASYM

    def test_dstar_swap_symmetry(self, dstar_model):
        assert np.allclose(dstar_model.tilted.p, dstar_model.reversed.p, atol=1e-12)

    @given(laws(sign=-1))
    def test_tilt_closure(self, law):
        lam = solve_lambda(law)
        back = tilt(tilt(law, lam), -lam)
        assert back.support == law.support
        assert np.allclose(back.p, law.p, rtol=0, atol=1e-12)

    @given(laws(sign=-1))
    def test_tilt_mu_is_driftless(self, law):
        mu, _ = solve_mu(law)
        assert abs(tilt(law, mu).mean) < 1e-10

    @given(laws())
    def test_reverse_involution(self, law):
        assert reverse(reverse(law)) == law
        assert reverse(law).mean == pytest.approx(-law.mean, abs=1e-14)


class TestProfile:
    def test_dstar(self):
        p = profile(DSTAR)
        assert p.a == pytest.approx(0.3, abs=1e-14)
        assert p.sigma2 == pytest.approx(0.61, abs=1e-14)
        assert p.a_hat == pytest.approx(0.3, abs=1e-12)
        assert p.sigma2_hat == pytest.approx(0.61, abs=1e-12)
        assert p.A == pytest.approx(20 / 3, abs=1e-10)
        assert p.Sigma2 == pytest.approx(2 * 0.61 / 0.027, abs=1e-9)

    def test_c_hat_dstar(self):
        # sqrt(0.61 / 0.027) = 4.753167; the rounded 4.753070 sometimes quoted is off in the 5th digit
        assert profile(DSTAR).c_hat == pytest.approx(math.sqrt(0.61 / 0.027), abs=1e-10)
        assert abs(profile(DSTAR).c_hat - 4.753167) < 1e-6

    def test_roundtrip(self):
        p = profile(ASYM)
        assert CramerProfile.from_dict(json.loads(json.dumps(p.to_dict()))) == p
        assert len(p.to_dict()) == 10

    @given(laws(sign=-1))
    def test_invariants(self, law):
        m = build_model(law)
        p = m.profile
        assert p.Sigma2 > 0 and p.sigma2 > 0 and p.sigma2_hat > 0 and p.a_hat > 0
        assert p.Sigma2 == pytest.approx(p.sigma2 / p.a**3 + p.sigma2_hat / p.a_hat**3)
        assert m.tilted.mean == pytest.approx(p.a_hat, rel=1e-9)
        assert m.reversed.mean == pytest.approx(p.a, rel=1e-12)
        expect = np.exp(p.lam * law.steps) * law.p
        assert np.allclose(m.tilted.p, expect, rtol=1e-10, atol=0)

    @given(st.floats(0.05, 0.4))
    def test_three_point_lambda_closed_form(self, p_up):
        # p_up t^2 - (1 - p_zero) t + p_down = 0 with p_zero fixed at 0.2
        p_down = 0.8 - p_up
        if p_down <= p_up + 0.02:
            return
        law = validate([-1, 0, 1], [p_down, 0.2, p_up])
        assert solve_lambda(law) == pytest.approx(math.log(p_down / p_up), abs=1e-11)
