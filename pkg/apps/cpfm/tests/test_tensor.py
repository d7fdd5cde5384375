import numpy as np
from django.test import SimpleTestCase

from apps.cpfm.exceptions import ContractError, DimensionError
from apps.cpfm.tensor import (
    Adam,
    AdamState,
    Tensor,
    adam_step,
    backward,
    concat_seq,
    grad_check,
    grad_check_tensors,
    layernorm_nobias,
    mse,
    no_grad,
    softmax,
)


class SoftmaxTests(SimpleTestCase):
    def test_symmetric_input(self):
        np.testing.assert_allclose(softmax(Tensor([0.0, 0.0])).values, [0.5, 0.5])

    def test_closed_form(self):
        out = softmax(Tensor([np.log(1.0), np.log(3.0)])).values
        np.testing.assert_allclose(out, [0.25, 0.75], atol=1e-15)

    def test_large_logits_stay_finite(self):
        out = softmax(Tensor([1000.0, 1000.0, 999.0])).values
        self.assertTrue(np.all(np.isfinite(out)))
        self.assertAlmostEqual(out.sum(), 1.0, places=15)
        e = np.exp(-1.0)
        np.testing.assert_allclose(out, [1 / (2 + e), 1 / (2 + e), e / (2 + e)], rtol=1e-12)

    def test_axis_out_of_range(self):
        with self.assertRaises(DimensionError):
            softmax(Tensor(np.zeros((2, 3))), axis=2)


class ConcatSeqTests(SimpleTestCase):
    def test_prepends_prompt(self):
        out = concat_seq(Tensor([[1.0, 2.0]]), Tensor([[3.0, 4.0]]))
        np.testing.assert_array_equal(out.values, [[1, 2], [3, 4]])

    def test_empty_prompt_is_identity(self):
        h = Tensor(np.arange(6.0).reshape(3, 2))
        np.testing.assert_array_equal(concat_seq(Tensor(np.zeros((0, 2))), h).values, h.values)

    def test_backward_of_ones(self):
        p = Tensor(np.zeros((2, 3)), requires_grad=True)
        h = Tensor(np.zeros((4, 3)), requires_grad=True)
        backward(concat_seq(p, h).sum())
        np.testing.assert_array_equal(p.grad, np.ones((2, 3)))
        np.testing.assert_array_equal(h.grad, np.ones((4, 3)))

    def test_prompt_gradient_sums_over_batch(self):
        p = Tensor(np.zeros((1, 2)), requires_grad=True)
        backward(concat_seq(p, Tensor(np.zeros((5, 3, 2)))).sum())
        np.testing.assert_array_equal(p.grad, [[5.0, 5.0]])

    def test_width_mismatch(self):
        with self.assertRaises(DimensionError):
            concat_seq(Tensor(np.zeros((1, 3))), Tensor(np.zeros((2, 2))))


class LayerNormTests(SimpleTestCase):
    def test_constant_row_maps_to_zero(self):
        out = layernorm_nobias(Tensor([[1.0, 1.0, 1.0]]), Tensor(np.ones(3))).values
        np.testing.assert_allclose(out, [[0, 0, 0]], atol=1e-12)

    def test_standardized_row_unchanged(self):
        out = layernorm_nobias(Tensor([[-1.0, 1.0]]), Tensor(np.ones(2))).values
        np.testing.assert_allclose(out, [[-1.0, 1.0]], rtol=1e-12)

    def test_gain(self):
        out = layernorm_nobias(Tensor([[0.0, 2.0, 4.0]]), Tensor(np.full(3, 2.0))).values
        np.testing.assert_allclose(out, [2 * np.array([-1.2247449, 0.0, 1.2247449])], atol=1e-6)


class BackwardTests(SimpleTestCase):
    def test_sum_gives_ones(self):
        x = Tensor(np.random.default_rng(0).normal(size=(2, 3, 4)), requires_grad=True)
        backward(x.sum())
        np.testing.assert_array_equal(x.grad, np.ones((2, 3, 4)))

    def test_mse_at_target_has_zero_gradient(self):
        t = np.array([1.0, -2.0, 0.5])
        x = Tensor(t.copy(), requires_grad=True)
        backward(mse(x, t))
        np.testing.assert_array_equal(x.grad, np.zeros(3))

    def test_reused_leaf_accumulates(self):
        x = Tensor([2.0], requires_grad=True)
        backward((x * x + x).sum())
        np.testing.assert_allclose(x.grad, [5.0])

    def test_non_scalar_loss(self):
        with self.assertRaises(ContractError):
            backward(Tensor(np.ones(3), requires_grad=True) * 2.0)

    def test_no_grad_records_nothing(self):
        x = Tensor([1.0], requires_grad=True)
        with no_grad():
            y = x * 3.0
        self.assertFalse(y.requires_grad)


class GradCheckTests(SimpleTestCase):
    def test_sum_of_squares(self):
        self.assertLess(grad_check(lambda x: x.square().sum(), np.array([3.0])), 1e-8)

    def test_softmax_first_entry(self):
        self.assertLess(grad_check(lambda x: softmax(x)[0], np.array([0.1, -0.2])), 1e-6)

    def test_elementwise_ops(self):
        for seed in range(3):
            rng = np.random.default_rng(seed)
            a = rng.normal(size=(3, 4))
            b = Tensor(rng.normal(size=(4, 2)))
            gain = Tensor(rng.normal(size=4))
            cases = [
                lambda x: (x @ b).tanh().sum(),
                lambda x: (x.exp() / (x.square() + 1.0)).mean(),
                lambda x: (x.square() + 1.0).log().sum(),
                lambda x: x.gelu().sum(),
                lambda x: softmax(x, axis=0).square().sum(),
                lambda x: layernorm_nobias(x, gain).square().sum(),
                lambda x: x.T.reshape(2, 6)[1].sum() - x.mean(axis=1, keepdims=True).broadcast_to((3, 4)).sum(),
            ]
            for f in cases:
                self.assertLess(grad_check(f, a), 1e-4)

    def test_several_leaves(self):
        rng = np.random.default_rng(1)
        x = Tensor(rng.normal(size=(2, 3)), requires_grad=True)
        w = Tensor(rng.normal(size=(3, 3)), requires_grad=True)
        self.assertLess(grad_check_tensors(lambda: ((x @ w) * x).sum(), [x, w]), 1e-6)


class AdamTests(SimpleTestCase):
    def test_zero_gradient_keeps_params(self):
        p = np.array([1.0, -2.0])
        result = adam_step(p, np.zeros(2), AdamState.zeros_like(p), lr=0.1)
        np.testing.assert_array_equal(result.params, p)

    def test_first_step_moves_by_lr(self):
        p = np.array([1.0])
        result = adam_step(p, np.array([1.0]), AdamState.zeros_like(p), lr=0.1)
        self.assertAlmostEqual(float(p[0] - result.params[0]), 0.1, places=6)
        self.assertEqual(result.state.step_count, 1)

    def test_identical_params_identical_updates(self):
        p = np.array([0.3, 0.3])
        result = adam_step(p, np.array([0.7, 0.7]), AdamState.zeros_like(p))
        self.assertEqual(result.params[0], result.params[1])

    def test_non_finite_gradient_skips(self):
        p = np.array([1.0])
        result = adam_step(p, np.array([np.nan]), AdamState.zeros_like(p))
        self.assertFalse(result.applied)
        np.testing.assert_array_equal(result.params, p)

    def test_optimizer_steps_only_named(self):
        a = Tensor([1.0], requires_grad=True)
        b = Tensor([1.0], requires_grad=True)
        opt = Adam({'a': a, 'b': b}, lr=0.1)
        backward((a + b).sum())
        self.assertTrue(opt.step(['a']))
        self.assertLess(a.values[0], 1.0)
        self.assertEqual(b.values[0], 1.0)
