import numpy as np
import pytest
from scipy import stats as scipy_stats

from helpers import central_diff_grad, max_rel_err
from neuroconn.decoder import adam_step, init_adam
from neuroconn.decoder import autodiff as ad
from neuroconn.decoder.autodiff import Tensor

GRAD_TOL = 1e-4


def gradcheck(build_loss, arrays, tol=GRAD_TOL):
    """Compare tape gradients against the central-difference oracle."""
    tensors = {k: Tensor(np.asarray(v, dtype=np.float64), requires_grad=True)
               for k, v in arrays.items()}
    loss = build_loss(tensors)
    loss.backward()
    for name, t in tensors.items():
        analytic = t.grad if t.grad is not None else np.zeros_like(t.value)

        def f():
            fresh = {k: Tensor(tt.value) for k, tt in tensors.items()}
            return float(build_loss(fresh).value)

        fd = central_diff_grad(f, t.value)
        err = max_rel_err(analytic, fd)
        assert err < tol, f"{name}: max rel err {err}"


def projection(shape, seed=99):
    return Tensor(np.random.default_rng(seed).standard_normal(shape))


class TestConvTrivial:
    def test_ones_full_overlap(self):
        x = Tensor(np.ones((1, 1, 3, 3)))
        w = Tensor(np.ones((1, 1, 3, 3)))
        out = ad.conv2d(x, w)
        assert out.value.shape == (1, 1, 1, 1)
        assert out.value[0, 0, 0, 0] == 9.0

    def test_identity_kernel_same_padding(self):
        rng = np.random.default_rng(0)
        x = Tensor(rng.standard_normal((2, 1, 5, 5)))
        w = np.zeros((1, 1, 3, 3))
        w[0, 0, 1, 1] = 1.0
        out = ad.conv2d(x, Tensor(w), padding=(1, 1))
        assert np.array_equal(out.value, x.value)

    def test_shape_mismatch_message_has_dimensions(self):
        with pytest.raises(ValueError, match="channels"):
            ad.conv2d(Tensor(np.zeros((1, 3, 4, 4))), Tensor(np.zeros((2, 2, 2, 2))))

    def test_kernel_larger_than_input(self):
        with pytest.raises(ValueError, match="larger"):
            ad.conv2d(Tensor(np.zeros((1, 1, 2, 2))), Tensor(np.zeros((1, 1, 5, 5))))


class TestGradients:
    def setup_method(self):
        self.rng = np.random.default_rng(42)

    def test_conv2d_gradients(self):
        for stride, pad, groups, (n, c, h, w, f, kh, kw) in [
            ((1, 1), (0, 0), 1, (2, 2, 4, 5, 3, 2, 3)),
            ((2, 1), (1, 1), 1, (1, 3, 5, 4, 2, 3, 2)),
            ((1, 2), (0, 1), 2, (2, 4, 3, 6, 4, 2, 3)),
        ]:
            arrays = {
                "x": self.rng.standard_normal((n, c, h, w)),
                "w": self.rng.standard_normal((f, c // groups, kh, kw)),
            }
            oh = (h + 2 * pad[0] - kh) // stride[0] + 1
            ow = (w + 2 * pad[1] - kw) // stride[1] + 1
            proj = projection((n, f, oh, ow))
            gradcheck(
                lambda t, s=stride, p=pad, g=groups, pr=proj: ad.sum_(
                    ad.mul(ad.conv2d(t["x"], t["w"], s, p, g), pr)),
                arrays,
            )

    def test_matmul_gradients(self):
        arrays = {"a": self.rng.standard_normal((4, 3)),
                  "b": self.rng.standard_normal((3, 5))}
        proj = projection((4, 5))
        gradcheck(lambda t: ad.sum_(ad.mul(ad.matmul(t["a"], t["b"]), proj)), arrays)

    def test_add_mul_broadcast_gradients(self):
        arrays = {"a": self.rng.standard_normal((3, 4)),
                  "b": self.rng.standard_normal((1, 4)),
                  "c": self.rng.standard_normal((3, 1))}
        proj = projection((3, 4))
        gradcheck(
            lambda t: ad.sum_(ad.mul(ad.mul(ad.add(t["a"], t["b"]), t["c"]), proj)),
            arrays,
        )

    def test_elementwise_op_gradients(self):
        proj = projection((3, 4))
        positive = np.abs(self.rng.standard_normal((3, 4))) + 0.5
        cases = [
            (lambda t: ad.sum_(ad.mul(ad.elu(t["x"]), proj)),
             self.rng.standard_normal((3, 4))),
            (lambda t: ad.sum_(ad.mul(ad.square(t["x"]), proj)),
             self.rng.standard_normal((3, 4))),
            (lambda t: ad.sum_(ad.mul(ad.log_clamped(t["x"]), proj)), positive),
            (lambda t: ad.sum_(ad.mul(ad.pow_scalar(t["x"], -0.5), proj)), positive),
        ]
        for build, x in cases:
            gradcheck(build, {"x": x})

    def test_log_clamped_zero_gradient_below_floor(self):
        x = Tensor(np.array([0.5, 1e-9]), requires_grad=True)
        out = ad.sum_(ad.log_clamped(x, floor=1e-6))
        out.backward()
        assert x.grad[0] == pytest.approx(2.0)
        assert x.grad[1] == 0.0

    def test_reduction_and_reshape_gradients(self):
        arrays = {"x": self.rng.standard_normal((2, 3, 4))}
        proj = projection((2, 4))
        gradcheck(lambda t: ad.sum_(ad.mul(ad.mean(t["x"], axis=1), proj)), arrays)
        gradcheck(lambda t: ad.sum_(ad.mul(ad.sum_(t["x"], axis=2), projection((2, 3)))),
                  arrays)
        gradcheck(lambda t: ad.sum_(ad.mul(ad.reshape(t["x"], (6, 4)), projection((6, 4)))),
                  arrays)

    def test_variance_gradients(self):
        arrays = {"x": self.rng.standard_normal((2, 5, 1, 6))}
        proj = projection((2, 5, 1))
        gradcheck(lambda t: ad.sum_(ad.mul(ad.variance(t["x"], axis=3), proj)), arrays)

    def test_avg_pool_gradients(self):
        proj2 = projection((2, 3, 1, 2))
        gradcheck(
            lambda t: ad.sum_(ad.mul(ad.avg_pool_w(t["x"], 2), proj2)),
            {"x": self.rng.standard_normal((2, 3, 1, 5))},
        )
        # window wider than the axis degrades to identity-sized pooling
        proj1 = projection((2, 3, 1, 1))
        gradcheck(
            lambda t: ad.sum_(ad.mul(ad.avg_pool_w(t["x"], 4), proj1)),
            {"x": self.rng.standard_normal((2, 3, 1, 1))},
        )

    def test_batch_norm_gradients_train_and_eval(self):
        arrays = {
            "x": self.rng.standard_normal((3, 2, 2, 4)),
            "gamma": self.rng.standard_normal(2) + 1.5,
            "beta": self.rng.standard_normal(2),
        }
        proj = projection((3, 2, 2, 4))
        for train in (True, False):
            gradcheck(
                lambda t, tr=train: ad.sum_(ad.mul(
                    ad.batch_norm(t["x"], t["gamma"], t["beta"],
                                  np.zeros(2), np.ones(2), train=tr), proj)),
                arrays,
            )

    def test_dropout_fixed_mask_gradients(self):
        x = self.rng.standard_normal((4, 6))
        proj = projection((4, 6))
        gradcheck(
            lambda t: ad.sum_(ad.mul(
                ad.dropout(t["x"], 0.5, np.random.default_rng(7), train=True), proj)),
            {"x": x},
        )


class TestBatchNorm:
    def test_train_normalizes_batch(self):
        rng = np.random.default_rng(1)
        x = Tensor(rng.standard_normal((16, 3, 2, 5)) * 4.0 + 2.0)
        out = ad.batch_norm(x, Tensor(np.ones(3)), Tensor(np.zeros(3)),
                            np.zeros(3), np.ones(3), train=True)
        assert np.abs(out.value.mean(axis=(0, 2, 3))).max() < 1e-10
        assert np.abs(out.value.std(axis=(0, 2, 3)) - 1.0).max() < 1e-4

    def test_running_stats_updated_and_used(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((8, 2, 1, 4)) + 3.0
        mean = np.zeros(2)
        var = np.ones(2)
        ad.batch_norm(Tensor(x), Tensor(np.ones(2)), Tensor(np.zeros(2)),
                      mean, var, train=True)
        assert np.all(mean > 0.2)  # moved toward the batch mean of ~3
        out_eval = ad.batch_norm(Tensor(x), Tensor(np.ones(2)), Tensor(np.zeros(2)),
                                 mean.copy(), var.copy(), train=False)
        expected = (x - mean.reshape(1, 2, 1, 1)) / np.sqrt(var.reshape(1, 2, 1, 1) + 1e-5)
        assert np.allclose(out_eval.value, expected)


class TestDropout:
    def test_zeroed_fraction_binomial(self):
        rng = np.random.default_rng(3)
        x = Tensor(np.ones((100, 100)))
        out = ad.dropout(x, 0.5, rng, train=True)
        zeros = int((out.value == 0).sum())
        assert scipy_stats.binomtest(zeros, 10_000, 0.5).pvalue > 0.001

    def test_survivors_rescaled(self):
        rng = np.random.default_rng(4)
        x = Tensor(np.full((50, 50), 3.0))
        out = ad.dropout(x, 0.25, rng, train=True)
        kept = out.value[out.value != 0]
        assert np.allclose(kept, 3.0 / 0.75)

    def test_eval_mode_identity(self):
        x = Tensor(np.ones((5, 5)))
        assert ad.dropout(x, 0.5, None, train=False) is x

    def test_train_without_rng_rejected(self):
        with pytest.raises(ValueError, match="rng"):
            ad.dropout(Tensor(np.ones(3)), 0.5, None, train=True)

    def test_bad_probability(self):
        with pytest.raises(ValueError):
            ad.dropout(Tensor(np.ones(3)), 1.0, np.random.default_rng(0), train=True)


class TestCrossEntropy:
    def test_uniform_logits_log_k(self):
        loss = ad.cross_entropy(Tensor(np.zeros((6, 4))), np.zeros(6, dtype=int))
        assert float(loss.value) == pytest.approx(np.log(4.0), abs=1e-12)

    def test_saturated_logits_near_zero(self):
        logits = np.zeros((3, 4))
        logits[np.arange(3), [0, 1, 2]] = 1000.0
        loss = ad.cross_entropy(Tensor(logits), np.array([0, 1, 2]))
        assert float(loss.value) == pytest.approx(0.0, abs=1e-9)

    def test_gradient_is_softmax_minus_onehot(self):
        rng = np.random.default_rng(5)
        logits = Tensor(rng.standard_normal((4, 3)), requires_grad=True)
        labels = np.array([0, 2, 1, 2])
        loss = ad.cross_entropy(logits, labels)
        loss.backward()
        probs = ad.softmax(logits.value)
        onehot = np.eye(3)[labels]
        assert np.allclose(logits.grad, (probs - onehot) / 4.0, atol=1e-12)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(6)
        logits = rng.standard_normal((5, 4))
        labels = rng.integers(0, 4, 5)
        t = Tensor(logits, requires_grad=True)
        loss = ad.cross_entropy(t, labels)
        loss.backward()

        def f():
            return float(ad.cross_entropy(Tensor(t.value), labels).value)

        fd = central_diff_grad(f, t.value)
        assert max_rel_err(t.grad, fd) < 1e-6

    def test_label_out_of_range(self):
        with pytest.raises(ValueError, match="labels"):
            ad.cross_entropy(Tensor(np.zeros((2, 3))), np.array([0, 3]))

    def test_softmax_rows_sum_to_one(self):
        rng = np.random.default_rng(7)
        probs = ad.softmax(rng.standard_normal((50, 8)) * 20.0)
        assert np.abs(probs.sum(axis=1) - 1.0).max() < 1e-12


class TestMae:
    def test_zero_at_equality(self):
        pred = Tensor(np.ones((3, 1)))
        assert float(ad.mae_loss(pred, np.ones((3, 1))).value) == 0.0

    def test_analytic_case(self):
        pred = Tensor(np.array([[1.0], [-1.0]]), requires_grad=True)
        loss = ad.mae_loss(pred, np.zeros((2, 1)))
        loss.backward()
        assert float(loss.value) == 1.0
        assert np.array_equal(pred.grad, np.array([[0.5], [-0.5]]))

    def test_gradient_matches_finite_differences_away_from_ties(self):
        rng = np.random.default_rng(8)
        pred_val = rng.standard_normal((6, 1))
        target = pred_val + np.sign(rng.standard_normal((6, 1))) * 0.5
        t = Tensor(pred_val, requires_grad=True)
        ad.mae_loss(t, target).backward()

        def f():
            return float(ad.mae_loss(Tensor(t.value), target).value)

        fd = central_diff_grad(f, t.value)
        assert max_rel_err(t.grad, fd) < 1e-6

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape"):
            ad.mae_loss(Tensor(np.zeros((2, 1))), np.zeros((3, 1)))


class TestAdam:
    def test_zero_gradient_zero_decay_is_noop(self):
        params = {"w": Tensor(np.array([1.0, -2.0]), requires_grad=True)}
        state = init_adam(params)
        adam_step(params, {"w": np.zeros(2)}, state, lr=0.1, weight_decay=0.0)
        assert np.array_equal(params["w"].value, np.array([1.0, -2.0]))

    def test_first_step_is_minus_lr(self):
        params = {"w": Tensor(np.array([0.0]), requires_grad=True)}
        state = init_adam(params)
        adam_step(params, {"w": np.array([1.0])}, state, lr=0.01)
        assert params["w"].value[0] == pytest.approx(-0.01, rel=1e-6)

    def test_descends_quadratic(self):
        # scalar descent oracle: w_{k+1} from f(w) = w^2, grad 2w
        params = {"w": Tensor(np.array([1.0]), requires_grad=True)}
        state = init_adam(params)
        trajectory = [1.0]
        for _ in range(10):
            grad = 2.0 * params["w"].value
            adam_step(params, {"w": grad}, state, lr=0.1)
            trajectory.append(abs(float(params["w"].value[0])))
        assert all(b < a for a, b in zip(trajectory, trajectory[1:]))

    def test_decoupled_weight_decay_applied_before_update(self):
        params = {"w": Tensor(np.array([2.0]), requires_grad=True)}
        state = init_adam(params)
        adam_step(params, {"w": np.zeros(1)}, state, lr=0.1, weight_decay=0.5)
        # zero grad: only the decay acts -> w = 2 - 0.1*0.5*2
        assert params["w"].value[0] == pytest.approx(1.9)

    def test_non_finite_gradient_names_parameter(self):
        params = {"bad_param": Tensor(np.array([1.0]), requires_grad=True)}
        state = init_adam(params)
        with pytest.raises(ValueError, match="bad_param"):
            adam_step(params, {"bad_param": np.array([np.nan])}, state, lr=0.1)

    def test_missing_gradient_names_parameter(self):
        params = {"w": Tensor(np.array([1.0]), requires_grad=True)}
        state = init_adam(params)
        with pytest.raises(ValueError, match="'w'"):
            adam_step(params, {}, state, lr=0.1)


class TestTape:
    def test_backward_requires_scalar(self):
        t = Tensor(np.zeros((2, 2)), requires_grad=True)
        with pytest.raises(ValueError, match="scalar"):
            ad.add(t, t).backward()

    def test_gradient_accumulates_over_reuse(self):
        x = Tensor(np.array([3.0]), requires_grad=True)
        loss = ad.sum_(ad.add(ad.square(x), ad.square(x)))
        loss.backward()
        assert x.grad[0] == pytest.approx(12.0)

    def test_constants_get_no_grad(self):
        x = Tensor(np.array([1.0]), requires_grad=True)
        c = Tensor(np.array([2.0]))
        ad.sum_(ad.mul(x, c)).backward()
        assert c.grad is None
