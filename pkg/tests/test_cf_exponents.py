"""Compress-forward constituents: psi forms, identities, G1, G2, J."""

import numpy as np
import pytest

from relayexp import (CfInput, CfJointType, CfRates, CondDist, Dist,
                      OptimizerConfig, cf_G1, cf_G2, cf_J, cf_aux_channels,
                      cf_overall, cf_psi1, cf_psi2)
from relayexp.cf_exponents import (_check_scale, alpha_value, cf_config,
                                   mi_terms, rate_loss)
from relayexp.prob_core import (cond_entropy, kl_div_cond, mi_axes,
                                mutual_info)
from conftest import random_relay_channel

FAST = OptimizerConfig(coarse_grid_points=5, refinement_rounds=1, restarts=1)


def _random_cf_input(rng, chan, yhat=2):
    n_x1, n_x2, n_y2, _ = chan.sizes
    test = CondDist(rng.dirichlet(np.ones(yhat), size=n_y2 * n_x2))
    realized = CondDist(rng.dirichlet(np.ones(n_y2), size=n_x2))
    return CfInput(Dist(rng.dirichlet(np.ones(n_x1))),
                   Dist(rng.dirichlet(np.ones(n_x2))), yhat, test, realized)


def _identity_test_input(chan, q_x1=None, q_x2=None):
    """Deterministic test channel copying y2, realized = true marginal."""
    n_x1, n_x2, n_y2, _ = chan.sizes
    q_x1 = q_x1 if q_x1 is not None else Dist(np.full(n_x1, 1.0 / n_x1))
    q_x2 = q_x2 if q_x2 is not None else Dist(np.full(n_x2, 1.0 / n_x2))
    test = np.zeros((n_y2 * n_x2, 2))
    for y2 in range(n_y2):
        for x2 in range(n_x2):
            test[y2 * n_x2 + x2, min(y2, 1)] = 1.0
    marg = np.einsum("x,xay->ay", q_x1.probs, chan.y2_marginal())
    realized = CondDist(marg / marg.sum(axis=1, keepdims=True))
    return CfInput(q_x1, q_x2, 2, CondDist(test), realized)


def _full_joint(chan, c):
    """p(x1,x2,y2,yhat,y3) under independent inputs and the test channel."""
    n_x1, n_x2, n_y2, n_y3 = chan.sizes
    test = c.test_channel.rows.reshape(n_y2, n_x2, c.yhat_size)
    return np.einsum("x,a,xayz,yah->xayhz", c.q_x1.probs, c.q_x2.probs,
                     chan.w, test)


def _skewed_relay_channel(qy2_one=0.08, py3=None):
    """Binary channel with a low-entropy relay observation.

    Y2 ~ Bernoulli(qy2_one) independent of X1, Y3 ~ p(y3|x1,y2).  The
    skew keeps the description leak I(Yhat2;Y2|X2) small enough for the
    chain-identity positivity threshold to be positive.
    """
    if py3 is None:
        py3 = np.array([[0.05, 0.40], [0.95, 0.60]])  # p(y3=1 | x1, y2)
    w = np.zeros((2, 2, 2, 2))
    for x1 in range(2):
        for x2 in range(2):
            for y2 in range(2):
                qq = qy2_one if y2 == 1 else 1.0 - qy2_one
                for y3 in range(2):
                    p = py3[x1, y2] if y3 == 1 else 1 - py3[x1, y2]
                    w[x1, x2, y2, y3] = qq * p
    from relayexp import RelayChannelSpec
    return RelayChannelSpec(w)


class TestPsiForms:
    def test_standard_equals_twocase(self):
        # the one-expression form and the case split agree to 1e-12
        for seed in range(200):
            rng = np.random.default_rng(seed)
            chan = random_relay_channel(rng, (2, 2, 2, 2))
            c = _random_cf_input(rng, chan)
            aux = cf_aux_channels(chan, c)
            qtilde = rng.dirichlet(np.ones(2), size=2)
            v = rng.dirichlet(np.ones(2), size=(2, 2, 2))
            rates = CfRates(rng.uniform(0, 1.5), rng.uniform(0, 1.0))
            a = cf_psi2(aux, qtilde, v, rates, "standard")
            b = cf_psi2(aux, qtilde, v, rates, "twocase")
            assert a == pytest.approx(b, abs=1e-12)

    def test_psi1_matches_direct_mi(self, rng):
        chan = random_relay_channel(rng, (2, 2, 2, 2))
        c = _random_cf_input(rng, chan)
        aux = cf_aux_channels(chan, c)
        qtilde = rng.dirichlet(np.ones(2), size=2)
        v = rng.dirichlet(np.ones(2), size=(2, 2, 2))
        mi_x1, _ = mi_terms(aux, qtilde, v)
        for r in (0.0, mi_x1, mi_x1 + 0.3):
            assert cf_psi1(aux, qtilde, v, r) == pytest.approx(
                max(mi_x1 - r, 0.0), abs=1e-12)

    def test_psi_nonnegative(self, rng):
        chan = random_relay_channel(rng, (2, 2, 2, 2))
        c = _random_cf_input(rng, chan)
        aux = cf_aux_channels(chan, c)
        for _ in range(20):
            qtilde = rng.dirichlet(np.ones(2), size=2)
            v = rng.dirichlet(np.ones(2), size=(2, 2, 2))
            rates = CfRates(rng.uniform(0, 2), rng.uniform(0, 2))
            assert cf_psi1(aux, qtilde, v, rates.r) >= 0.0
            for variant in ("standard", "twocase", "prime"):
                assert cf_psi2(aux, qtilde, v, rates, variant) >= 0.0

    def test_unknown_variant_rejected(self, rng):
        chan = random_relay_channel(rng, (2, 2, 2, 2))
        aux = cf_aux_channels(chan, _random_cf_input(rng, chan))
        with pytest.raises(ValueError):
            cf_psi2(aux, np.full((2, 2), 0.5),
                    np.full((2, 2, 2, 2), 0.5), CfRates(0.1, 0.1), "bogus")

    def test_rate_loss_is_description_mi(self, rng):
        # [DERIVED] I(Y2; Yhat2 | X2) from the joint, computed independently
        chan = random_relay_channel(rng, (2, 2, 2, 2))
        c = _random_cf_input(rng, chan)
        aux = cf_aux_channels(chan, c)
        qtilde = rng.dirichlet(np.ones(2), size=2)
        j = np.einsum("a,ay,yah->ayh", c.q_x2.probs, qtilde,
                      c.test_channel.rows.reshape(2, 2, 2))
        want = mi_axes(j, (1,), (2,), (0,))
        assert rate_loss(aux, qtilde) == pytest.approx(want, abs=1e-12)

    def test_excess_rate_helper(self, rng):
        chan = random_relay_channel(rng, (2, 2, 2, 2))
        c = _random_cf_input(rng, chan)
        aux = cf_aux_channels(chan, c)
        qtilde = rng.dirichlet(np.ones(2), size=2)
        rates = CfRates(0.4, 0.25)
        assert rates.delta_r2(aux, qtilde) == pytest.approx(
            rate_loss(aux, qtilde) - 0.25, abs=1e-12)


class TestAlpha:
    def test_alpha_is_divergence_plus_entropy(self, rng):
        # [DERIVED] alpha(Q,V) = D(V||W2|Q) + H(V|Q), checked term by term
        chan = random_relay_channel(rng, (2, 2, 2, 2))
        c = _random_cf_input(rng, chan)
        aux = cf_aux_channels(chan, c)
        v = rng.dirichlet(np.ones(2), size=(2, 2, 2))
        qw = np.einsum("x,a,ah->xah", aux.q_x1, aux.q_x2, aux.q_yhat_given_x2)
        ref = aux.w2_cond()
        p_flat = Dist(qw.reshape(-1) / qw.sum())
        v_flat = CondDist(v.reshape(-1, 2))
        ref_flat = CondDist(ref.reshape(-1, 2))
        want = (kl_div_cond(v_flat, ref_flat, p_flat)
                + cond_entropy(v_flat, p_flat))
        assert alpha_value(aux, v) == pytest.approx(want, abs=1e-12)

    def test_reference_channel_alpha_is_entropy(self, rng):
        chan = random_relay_channel(rng, (2, 2, 2, 2))
        c = _random_cf_input(rng, chan)
        aux = cf_aux_channels(chan, c)
        ref = aux.w2_cond()
        qw = np.einsum("x,a,ah->xah", aux.q_x1, aux.q_x2, aux.q_yhat_given_x2)
        want = cond_entropy(CondDist(ref.reshape(-1, 2)),
                            Dist(qw.reshape(-1) / qw.sum()))
        assert alpha_value(aux, ref) == pytest.approx(want, abs=1e-12)


class TestIdentities:
    def test_three_variable_mi_identity(self):
        # I(H;Y3|X2) + I(X1;HY3|X2) = H(X1|X2)+H(H|X2)+H(Y3|X2)-H(X1,H,Y3|X2)
        for seed in range(30):
            rng = np.random.default_rng(seed)
            j = rng.dirichlet(np.ones(16)).reshape(2, 2, 2, 2)  # x1,x2,h,y3
            lhs = mi_axes(j, (2,), (3,), (1,)) + mi_axes(j, (0,), (2, 3), (1,))
            # independent entropy-based evaluation of the right-hand side
            px2 = j.sum(axis=(0, 2, 3))
            rhs = 0.0
            for a in range(2):
                cond = j[:, a] / px2[a]        # (x1, h, y3)
                from relayexp.prob_core import entropy_vec
                rhs += px2[a] * (entropy_vec(cond.sum(axis=(1, 2)))
                                 + entropy_vec(cond.sum(axis=(0, 2)))
                                 + entropy_vec(cond.sum(axis=(0, 1)))
                                 - entropy_vec(cond.reshape(-1)))
            assert lhs == pytest.approx(rhs, abs=1e-10)

    def test_markov_chain_identity(self):
        # for joints Q_X1 x Q_X2 x Q_Y2|X2 x Q_H|Y2X2 x W(y3|x1,x2,y2):
        # I(X2;Y3) + I(X1;HY3|X2) + I(H;Y3|X2) - I(H;Y2|X2)
        #   = I(X1X2;Y3) - I(Y2;H|X1X2Y3)
        for seed in range(30):
            rng = np.random.default_rng(seed)
            qx1 = rng.dirichlet(np.ones(2))
            qx2 = rng.dirichlet(np.ones(2))
            qy2 = rng.dirichlet(np.ones(2), size=2)
            t = rng.dirichlet(np.ones(2), size=(2, 2))
            wc = rng.dirichlet(np.ones(2), size=(2, 2, 2))
            j = np.einsum("x,a,ay,yah,xayz->xayhz", qx1, qx2, qy2, t, wc)
            lhs = (mi_axes(j, (1,), (4,))
                   + mi_axes(j, (0,), (3, 4), (1,))
                   + mi_axes(j, (3,), (4,), (1,))
                   - mi_axes(j, (3,), (2,), (1,)))
            rhs = mi_axes(j, (0, 1), (4,)) - mi_axes(j, (2,), (3,), (0, 1, 4))
            assert lhs == pytest.approx(rhs, abs=1e-9)


class TestG1:
    def test_dual_close_to_primal(self):
        for seed in range(5):
            rng = np.random.default_rng(seed)
            chan = random_relay_channel(rng, (2, 2, 2, 2))
            c = _random_cf_input(rng, chan)
            aux = cf_aux_channels(chan, c)
            i23 = mutual_info(Dist(aux.q_x2), CondDist(aux.wq1_y3))
            for r2 in (0.5 * i23, i23, 1.2 * i23 + 0.01):
                res = cf_G1(chan, c, r2)
                assert res.value <= res.diagnostics["primal"] + 1e-6
                assert abs(res.value - res.diagnostics["primal"]) <= 5e-3

    def test_positivity_threshold(self, rng):
        # positive exactly when the bin-index rate is below I(X2;Y3)
        chan = random_relay_channel(rng, (2, 2, 2, 2))
        c = _random_cf_input(rng, chan)
        aux = cf_aux_channels(chan, c)
        i23 = mutual_info(Dist(aux.q_x2), CondDist(aux.wq1_y3))
        if i23 > 0.02:
            assert cf_G1(chan, c, 0.5 * i23).value > 0.0
        assert cf_G1(chan, c, i23 + 0.05).value <= 1e-12

    def test_rejects_negative_rate(self, rng):
        chan = random_relay_channel(rng, (2, 2, 2, 2))
        with pytest.raises(ValueError):
            cf_G1(chan, _random_cf_input(rng, chan), -0.1)

    def test_brute_force_oracle(self, rng):
        # [DERIVED] independent fine-grid minimization of
        # D(V||W_Q1|Q2) + |I(Q2,V) - R2|+ over dummy channels V
        chan = random_relay_channel(rng, (2, 2, 2, 2))
        c = _random_cf_input(rng, chan)
        aux = cf_aux_channels(chan, c)
        r2 = 0.15
        grid = np.linspace(0.0, 1.0, 61)
        best = np.inf
        q2 = Dist(aux.q_x2)
        for a0 in grid:
            for a1 in grid:
                v = CondDist(np.array([[a0, 1 - a0], [a1, 1 - a1]]))
                d = kl_div_cond(v, CondDist(aux.wq1_y3), q2)
                if not np.isfinite(d):
                    continue
                best = min(best, d + max(mutual_info(q2, v) - r2, 0.0))
        res = cf_G1(chan, c, r2)
        assert res.value <= best + 1e-6
        assert abs(res.value - best) <= 5e-3


class TestJ:
    def test_nonnegative_and_product_joint_witness(self, rng):
        chan = random_relay_channel(rng, (2, 2, 2, 2))
        c = _random_cf_input(rng, chan)
        val, wit = cf_J(chan, c, CfRates(0.2, 0.2), FAST)
        assert val >= 0.0
        assert wit["divergence"] == 0.0
        assert isinstance(wit["joint"], CfJointType)
        assert wit["ell"] in (1, 2)

    def test_zero_at_large_rates(self, rng):
        # rates above every mutual information drive both psi terms to 0
        chan = random_relay_channel(rng, (2, 2, 2, 2))
        c = _random_cf_input(rng, chan)
        val, _ = cf_J(chan, c, CfRates(3.0, 3.0), FAST)
        assert val == 0.0

    def test_monotone_in_message_rate(self, rng):
        chan = random_relay_channel(rng, (2, 2, 2, 2))
        c = _random_cf_input(rng, chan)
        vals = [cf_J(chan, c, CfRates(r, 0.2), FAST)[0]
                for r in (0.05, 0.2, 0.5, 1.0)]
        assert all(a >= b - 1e-9 for a, b in zip(vals, vals[1:]))

    def test_scale_guard(self, rng):
        chan = random_relay_channel(rng, (4, 2, 2, 2))
        with pytest.raises(ValueError):
            _check_scale(chan, 2)


class TestG2:
    def test_value_nonnegative_with_grid_note(self, rng):
        chan = random_relay_channel(rng, (2, 2, 2, 2))
        c = _identity_test_input(chan)
        val, wit = cf_G2(chan, c, 0.3, 0.2, FAST)
        assert val >= 0.0
        assert "grid_note" in wit and wit["q_y2_given_x2"] is not None

    def test_positivity_inside_threshold(self):
        # predicted positive when R is below the rate threshold assembled
        # from R2 and the description informations; zero far above the
        # message-decoding information
        chan = _skewed_relay_channel()
        c = _identity_test_input(chan)
        j = _full_joint(chan, c)
        r2 = 0.01
        r_thresh = (r2 + mi_axes(j, (0,), (3, 4), (1,))
                    + mi_axes(j, (3,), (4,), (1,))
                    - mi_axes(j, (3,), (2,), (1,)))
        i_psi1 = mi_axes(j, (0,), (3, 4), (1,))
        assert r_thresh > 0.05
        val_in, _ = cf_G2(chan, c, 0.5 * r_thresh, r2, FAST)
        assert val_in > 0.0
        val_out, _ = cf_G2(chan, c, i_psi1 + 0.3, r2, FAST)
        assert val_out == 0.0

    def test_overall_combines_constituents(self, rng):
        chan = random_relay_channel(rng, (2, 2, 2, 2))
        c = _identity_test_input(chan)
        b, r_eff, r2 = 10, 0.3, 0.2
        got = cf_overall(chan, c, b, r_eff, r2, FAST)
        g1 = cf_G1(chan, c, r2, FAST).value
        g2, _ = cf_G2(chan, c, b / (b - 1) * r_eff, r2, FAST)
        assert got == pytest.approx(max(0.0, min(g1, g2) / b), abs=1e-12)

    def test_overall_rejects_small_b(self, rng):
        chan = random_relay_channel(rng, (2, 2, 2, 2))
        c = _identity_test_input(chan)
        with pytest.raises(ValueError):
            cf_overall(chan, c, 1, 0.3, 0.2)


class TestCfJointType:
    def test_rejects_inconsistent_marginals(self, rng):
        j = rng.dirichlet(np.ones(16)).reshape(2, 2, 2, 2)
        with pytest.raises(ValueError):
            CfJointType(j, np.array([0.9, 0.1]), j.sum(axis=(0, 2, 3)),
                        np.full((2, 2), 0.5))

    def test_rates_validation(self):
        with pytest.raises(ValueError):
            CfRates(-0.1, 0.2)
