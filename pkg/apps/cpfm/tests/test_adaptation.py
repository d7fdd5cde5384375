import math

import numpy as np
from django.test import SimpleTestCase

from apps.cpfm.adaptation import (
    AblationFlags,
    CPFMModel,
    LossWeights,
    PromptAutoencoder,
    adapt_batch,
    expand_mask,
    gen_mask,
    loss_ce_soft,
    loss_input_recon,
    loss_prompt_recon,
    prompt_autoencode,
    total_loss,
)
from apps.cpfm.adaptation.step import prompt_recon_loss
from apps.cpfm.encoder.layers import classify_head, reconstruct_head
from apps.cpfm.exceptions import ConfigError, ContractError
from apps.cpfm.pseudo_labels import buffer_init
from apps.cpfm.tensor import Adam, Tensor, grad_check_tensors, softmax
from apps.cpfm.tests.utils import TINY, random_series, random_simplex


def scalar_autoencoder() -> PromptAutoencoder:
    w = [Tensor([[1.0]], requires_grad=True) for _ in range(3)]
    b = [Tensor([0.0], requires_grad=True) for _ in range(3)]
    return PromptAutoencoder(w[0], b[0], w[1], b[1], w[2], b[2])


class PromptAutoencoderTests(SimpleTestCase):
    def test_zero_weights_give_zero(self):
        ae = PromptAutoencoder.create(8, 0)
        for t in ae.named_parameters().values():
            t.values = np.zeros_like(t.values)
        out = prompt_autoencode(np.random.default_rng(0).normal(size=(2, 8)), ae)
        np.testing.assert_array_equal(out.values, np.zeros((2, 8)))

    def test_scalar_hand_value(self):
        out = prompt_autoencode(np.array([[0.5]]), scalar_autoencoder())
        self.assertAlmostEqual(out.item(), math.tanh(0.5), places=12)
        self.assertAlmostEqual(out.item(), 0.4621, places=4)

    def test_linear_regime(self):
        d = 4
        rng = np.random.default_rng(2)
        w2 = rng.normal(size=(d, d)) * 0.1
        w3 = rng.normal(size=(d, d))
        b3 = rng.normal(size=d)
        ae = PromptAutoencoder(
            Tensor(np.eye(d)), Tensor(np.zeros(d)), Tensor(w2), Tensor(np.zeros(d)), Tensor(w3), Tensor(b3)
        )
        p = rng.normal(size=(1, d)) * 1e-3 / np.sqrt(d)
        np.testing.assert_allclose(prompt_autoencode(p, ae).values, (p @ w2) @ w3 + b3, atol=1e-6)

    def test_default_widths(self):
        ae = PromptAutoencoder.create(64, 0)
        self.assertEqual(ae.w1.shape, (64, 16))
        self.assertEqual(ae.w2.shape, (16, 32))
        self.assertEqual(ae.w3.shape, (32, 64))

    def test_bottleneck_must_compress(self):
        with self.assertRaises(ConfigError):
            PromptAutoencoder.create(8, 0, bottleneck=8)


class LossTests(SimpleTestCase):
    def test_prompt_recon_zero_when_exact(self):
        p = Tensor(np.ones((2, 3)))
        self.assertEqual(loss_prompt_recon([(p, p), (p, p)]).item(), 0.0)

    def test_prompt_recon_hand_value(self):
        p = np.zeros((2, 3))
        self.assertAlmostEqual(loss_prompt_recon([(p, p + 1.0), (p, p + 1.0)]).item(), 6.0)

    def test_mask_counts(self):
        self.assertEqual(gen_mask(8, 0.0, 0).sum(), 0)
        self.assertEqual(gen_mask(10, 0.3, 0).sum(), 3)

    def test_mask_determinism(self):
        np.testing.assert_array_equal(gen_mask(10, 0.3, 5, 1), gen_mask(10, 0.3, 5, 1))
        distinct = {gen_mask(10, 0.3, seed).tobytes() for seed in range(100)}
        self.assertGreater(len(distinct), 1)

    def test_input_recon_exact(self):
        x = np.random.default_rng(0).normal(size=(8, 2))
        self.assertEqual(loss_input_recon(x, x, np.zeros(8), 0.5).item(), 0.0)

    def test_input_recon_all_masked(self):
        x = np.zeros((8, 2))
        self.assertAlmostEqual(loss_input_recon(x, x + 2.0, np.ones(8), 1.0).item(), 4.0)

    def test_pi_zero_ignores_masked_errors(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(8, 2))
        x_hat = rng.normal(size=(8, 2))
        mask = expand_mask(np.array([1, 0, 0, 1]), 2)
        base = loss_input_recon(x, x_hat, mask, 0.0).item()
        perturbed = x_hat.copy()
        perturbed[mask.astype(bool)] += 10.0
        self.assertEqual(loss_input_recon(x, perturbed, mask, 0.0).item(), base)

    def test_input_recon_shape_mismatch(self):
        with self.assertRaises(ContractError):
            loss_input_recon(np.zeros((8, 2)), np.zeros((8, 3)), np.zeros(8), 0.5)

    def test_soft_ce(self):
        o = np.array([0.2, 0.5, 0.3])
        self.assertAlmostEqual(loss_ce_soft(o, [0.0, 1.0, 0.0]).item(), -math.log(0.5), places=9)
        u = np.full(4, 0.25)
        self.assertAlmostEqual(loss_ce_soft(u, u).item(), math.log(4), places=9)

    def test_total_loss(self):
        self.assertAlmostEqual(total_loss(1.0, 2.0, 3.0, LossWeights(0.5, 0.1)).item(), 2.3)
        self.assertEqual(total_loss(1.5, 2.0, 3.0, LossWeights(0.0, 0.0)).item(), 1.5)

    def test_weights_validated(self):
        with self.assertRaises(ConfigError):
            LossWeights(pi=1.5)


class CPFMModelTests(SimpleTestCase):
    def test_parameter_groups(self):
        model = CPFMModel.create(TINY, num_teachers=2)
        frozen = model.frozen_parameters()
        trainable = model.trainable_parameters()
        self.assertTrue(all(name.startswith('backbone.') for name in frozen))
        self.assertFalse(any(t.requires_grad for t in frozen.values()))
        self.assertIn('teacher.1.branch2.prompt', trainable)
        self.assertIn('recon_head.weight', trainable)
        self.assertIn('autoencoder.w3', trainable)
        self.assertTrue(all(t.requires_grad for t in trainable.values()))

    def test_backbone_shared_with_foundation_seed(self):
        a = CPFMModel.create(TINY, foundation_seed=3, seed=0)
        b = CPFMModel.create(TINY, foundation_seed=3, seed=9)
        for name, t in a.frozen_parameters().items():
            np.testing.assert_array_equal(t.values, b.frozen_parameters()[name].values)

    def test_fused_prediction_on_simplex(self):
        model = CPFMModel.create(TINY, num_teachers=3)
        model.teacher_weights = np.array([1.0, 0.5, 0.25])
        probs = model.predict_proba(random_series(4))
        self.assertEqual(probs.shape, (4, 3))
        np.testing.assert_allclose(probs.sum(axis=1), 1.0)

    def test_cloned_prompts_give_identical_embeddings(self):
        model = CPFMModel.create(TINY, clone_prompt_init=True)
        x = random_series(3)
        np.testing.assert_array_equal(model.embeddings(x, 0, 1), model.embeddings(x, 0, 2))


class AdaptBatchTests(SimpleTestCase):
    def setUp(self):
        self.model = CPFMModel.create(TINY, num_teachers=1, seed=0)
        self.x = random_series(4)
        self.ids = np.arange(4)
        soft = random_simplex(np.random.default_rng(0), (4, TINY.classes))
        self.buffer = buffer_init(self.ids, soft)
        self.masks = np.stack([gen_mask(TINY.num_patches, TINY.mask_ratio, 0, 1, i) for i in range(4)])

    def snapshot(self):
        return {name: t.values.copy() for name, t in self.model.named_parameters().items()}

    def test_zero_lr_is_deterministic(self):
        opt = Adam(self.model.trainable_parameters(), lr=0.0)
        a = adapt_batch(self.model, opt, self.x, self.ids, self.buffer, 0, 1, LossWeights(), self.masks)
        b = adapt_batch(self.model, opt, self.x, self.ids, self.buffer, 0, 1, LossWeights(), self.masks)
        self.assertEqual((a.ce, a.pr, a.ir, a.total), (b.ce, b.pr, b.ir, b.total))

    def test_steps_only_active_branch(self):
        before = self.snapshot()
        opt = Adam(self.model.trainable_parameters(), lr=1e-2)
        stats = adapt_batch(self.model, opt, self.x, self.ids, self.buffer, 0, 1, LossWeights(), self.masks)
        self.assertTrue(np.isfinite(stats.total))
        after = self.snapshot()
        changed = {name for name in before if not np.array_equal(before[name], after[name])}
        self.assertIn('teacher.0.branch1.prompt', changed)
        self.assertIn('teacher.0.branch1.head.weight', changed)
        self.assertIn('recon_head.weight', changed)
        self.assertIn('autoencoder.w1', changed)
        self.assertNotIn('teacher.0.branch2.prompt', changed)
        self.assertNotIn('teacher.0.branch2.head.weight', changed)
        self.assertFalse(any(name.startswith('backbone.') for name in changed))

    def test_no_prompt_leaves_prompts(self):
        before = self.snapshot()
        opt = Adam(self.model.trainable_parameters(), lr=1e-2)
        stats = adapt_batch(
            self.model, opt, self.x, self.ids, self.buffer, 0, 2, LossWeights(), self.masks,
            AblationFlags(no_prompt=True),
        )
        self.assertEqual(stats.pr, 0.0)
        after = self.snapshot()
        np.testing.assert_array_equal(before['teacher.0.branch2.prompt'], after['teacher.0.branch2.prompt'])
        np.testing.assert_array_equal(before['autoencoder.w1'], after['autoencoder.w1'])
        self.assertFalse(np.array_equal(before['teacher.0.branch2.head.weight'], after['teacher.0.branch2.head.weight']))

    def test_no_input_recon(self):
        before = self.snapshot()
        opt = Adam(self.model.trainable_parameters(), lr=1e-2)
        stats = adapt_batch(
            self.model, opt, self.x, self.ids, self.buffer, 0, 1, LossWeights(), self.masks,
            AblationFlags(no_input_recon=True),
        )
        self.assertEqual(stats.ir, 0.0)
        np.testing.assert_array_equal(before['recon_head.weight'], self.model.recon_head.weight.values)

    def test_missing_buffer_entry(self):
        opt = Adam(self.model.trainable_parameters(), lr=1e-2)
        with self.assertRaises(ContractError):
            adapt_batch(self.model, opt, self.x, np.array([0, 1, 2, 99]), self.buffer, 0, 1, LossWeights())

    def test_total_loss_gradient(self):
        for seed in (1, 2, 3):
            with self.subTest(seed=seed):
                self.check_total_loss_gradient(seed)

    def check_total_loss_gradient(self, seed):
        model = CPFMModel.create(TINY, seed=seed)
        x = random_series(2, seed=seed + 3)
        targets = random_simplex(np.random.default_rng(seed + 4), (2, TINY.classes))
        masks = np.stack([gen_mask(TINY.num_patches, TINY.mask_ratio, seed, i) for i in range(2)])
        mask_t = np.broadcast_to(expand_mask(masks, TINY.patch_len), x.shape[:-1])
        def loss():
            tokens = model.tokens(x, 0, 1, mask=masks)
            probs = softmax(classify_head(tokens, model.pairs[0].head1), axis=-1)
            ir = loss_input_recon(x, reconstruct_head(tokens, model.recon_head, TINY), mask_t, 0.5)
            return total_loss(loss_ce_soft(probs, targets), prompt_recon_loss(model), ir, LossWeights())

        leaves = [
            model.pairs[0].prompts.p1, model.pairs[0].head1.weight, model.recon_head.weight, model.autoencoder.w2,
        ]
        self.assertLess(grad_check_tensors(loss, leaves, max_coords=12), 1e-4)
