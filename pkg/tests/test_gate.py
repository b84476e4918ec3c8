import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from l0gm.gate import (Gate, GateParams, active_fraction, apply_gate, expected_density, expected_l0,
                       gate_infer, inference_mask, sample_gate_train)
from l0gm.numcore import RngStream, Tensor, backward, finite_diff_check


def params(alpha, **kw):
    return GateParams(Tensor(np.asarray(alpha, dtype=float), requires_grad=True), **kw)


def test_saturated_logits_train_path():
    u = np.linspace(0.011, 0.989, 50)
    np.testing.assert_array_equal(sample_gate_train(params(np.full(50, 50.0)), 1.0, u=u).z.data, 1.0)
    np.testing.assert_array_equal(sample_gate_train(params(np.full(50, -50.0)), 1.0, u=u).z.data, 0.0)


def test_train_path_hand_value():
    z = sample_gate_train(params([0.0]), 1.0, u=np.array([0.5])).z.data
    np.testing.assert_allclose(z, [0.5], rtol=1e-15)


def test_train_path_rejects_nonpositive_tau():
    with pytest.raises(ValueError):
        sample_gate_train(params([0.0]), 0.0, RngStream(0))


def test_train_path_is_reparameterized(rng):
    gp = params([0.3, -0.2, 1.0])
    s = sample_gate_train(gp, 0.7, rng)
    backward(s.z.sum())
    assert gp.alpha.grad is not None
    assert np.all(gp.alpha.grad >= 0)
    u = s.u

    def f(a):
        return sample_gate_train(GateParams(a), 0.7, u=u).z.sum()

    assert finite_diff_check(f, gp.alpha.data) < 1e-4


def test_same_stream_same_mask():
    gp = params(np.linspace(-2, 2, 9))
    a = sample_gate_train(gp, 1.0, RngStream(5).derive("gate")).z.data
    b = sample_gate_train(gp, 1.0, RngStream(5).derive("gate")).z.data
    np.testing.assert_array_equal(a, b)


def test_inference_examples():
    np.testing.assert_array_equal(gate_infer(params([10.0, -10.0])).z.data, [1, 0])
    np.testing.assert_array_equal(gate_infer(params([0.1, -0.1, 0.0])).z.data, [1, 0, 0])


def test_inference_threshold_is_strict():
    # sigma(logit(pi)) == pi exactly for this pi, so the dimension stays closed
    pi = 0.75
    gp = params([math.log(pi / (1 - pi))], pi=pi)
    assert 1 / (1 + math.exp(-gp.alpha.data[0])) == pi
    assert inference_mask(gp)[0] == 0.0


def test_expected_l0_closed_form():
    assert expected_l0(params([0.0]), 1.0).item() == pytest.approx(11 / 12, abs=1e-12)


def test_expected_l0_vanishes_for_closed_gates():
    assert expected_l0(params(np.full(4, -200.0)), 1.0).item() < 1e-60


def test_expected_l0_rejects_nonpositive_tau():
    with pytest.raises(ValueError):
        expected_l0(params([0.0]), 0.0)


def test_expected_l0_gradient():
    a = np.array([-1.0, 0.2, 2.5])
    assert finite_diff_check(lambda t: expected_l0(GateParams(t), 0.8), a) < 1e-5


@given(st.floats(-6, 6), st.floats(0.5, 2.0))
def test_expected_l0_strictly_increasing(alpha, tau):
    assert expected_l0(params([alpha + 1.0]), tau).item() > expected_l0(params([alpha]), tau).item()


@pytest.mark.parametrize("seed", range(4))
def test_expected_l0_matches_monte_carlo(seed):
    rng = np.random.default_rng(seed)
    alpha = rng.uniform(-3, 3, size=5)
    tau = rng.uniform(0.5, 2.0)
    gp = params(alpha)
    u = RngStream(seed).uniform(1e-6, 1 - 1e-6, size=(100_000, 5))
    s = 1 / (1 + np.exp(-(np.log(u) - np.log1p(-u) + alpha) / tau))
    z = np.clip(s * 1.2 - 0.1, 0, 1)
    mc = (z > 0).mean(axis=0)
    per_dim = 1 / (1 + np.exp(-(alpha - tau * math.log(0.1 / 1.1))))
    np.testing.assert_allclose(per_dim, mc, atol=0.01)
    assert expected_l0(gp, tau).item() == pytest.approx(per_dim.sum(), rel=1e-12)


def test_expected_density_is_mean():
    gp = params([0.0, 1.0, -1.0, 3.0])
    assert expected_density(gp, 1.0) == pytest.approx(expected_l0(gp, 1.0).item() / 4)


@given(st.lists(st.floats(-20, 20), min_size=1, max_size=30), st.floats(0.1, 3.0),
       st.integers(0, 2**32 - 1))
def test_train_z_in_unit_interval_and_infer_binary(alpha, tau, seed):
    gp = params(alpha)
    z = sample_gate_train(gp, tau, RngStream(seed)).z.data
    assert np.all((z >= 0) & (z <= 1))
    assert set(np.unique(gate_infer(gp).z.data)) <= {0.0, 1.0}


def test_apply_gate_examples():
    r = Tensor([2.0, 4.0])
    np.testing.assert_array_equal(apply_gate(r, Tensor([1.0, 1.0])).data, [2, 4])
    np.testing.assert_array_equal(apply_gate(r, Tensor([0.0, 0.0])).data, [0, 0])
    np.testing.assert_array_equal(apply_gate(r, Tensor([1.0, 0.5])).data, [2, 2])


def test_apply_gate_broadcasts_over_batch_and_flows_gradients():
    r = Tensor(np.arange(6.0).reshape(3, 2), requires_grad=True)
    gp = params([0.4, -0.3])
    z = sample_gate_train(gp, 1.0, u=np.array([0.6, 0.4])).z
    backward(apply_gate(r, z).sum())
    assert r.grad.shape == (3, 2)
    assert gp.alpha.grad is not None


def test_apply_gate_dimension_mismatch():
    with pytest.raises(ValueError, match="gate dimension"):
        apply_gate(Tensor(np.ones((2, 3))), Tensor(np.ones(4)))


def test_active_fraction_examples():
    assert active_fraction(params(np.full(6, 10.0))) == 1.0
    assert active_fraction(params(np.full(6, -10.0))) == 0.0
    assert active_fraction(params([5.0, -5.0, 5.0, -5.0])) == 0.5
    with pytest.raises(ValueError):
        active_fraction(params(np.zeros(0)))


@pytest.mark.parametrize("kw", [dict(gamma=0.1), dict(zeta=0.9), dict(pi=0.0), dict(pi=1.0)])
def test_gate_params_validate_constants(kw):
    with pytest.raises(ValueError):
        params([0.0], **kw)


def test_gate_module_defaults(rng):
    g = Gate(1000, rng)
    assert g.constants() == {"gamma": -0.1, "zeta": 1.1, "pi": 0.5}
    assert abs(g.alpha.data.mean() - 2.0) < 0.01
    assert abs(g.alpha.data.std() - 0.01) < 0.002
    assert g.active_fraction() == 1.0
    [name] = [n for n, _ in g.named_parameters()]
    assert "alpha" in name
