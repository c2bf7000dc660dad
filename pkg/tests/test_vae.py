# -*- coding: utf-8 -*-

import numpy as np
import pytest

import config as cfg
import core
from config import Architecture, TrainSchedule, VaeLossConfig
from errors import BatchTooSmallError, ConfigError, DimensionError, DomainError, NonFiniteError
from vae.augment import augment, augment_batch, DIHEDRAL_ORDER
from vae.latent import LatentBatch, encoding_normalize, reparameterize
from vae.losses import loss_full, loss_traditional, sobel_features
from vae.model import VaeModel, check_loss_gradient
from vae.optim import AdamMoments, adam_step, beta1_at, lr_at

SMALL = Architecture(side=8, channels=1, latent=2, encoder_channels=(2,), kernel=3)


class TestEncodingNormalize:
    def test_two_examples(self):
        out = encoding_normalize(LatentBatch([[1.0], [3.0]], [[1.0], [3.0]]))
        assert out.mu[:, 0] == pytest.approx([-2.5, 2.5])
        assert out.sigma[:, 0] == pytest.approx([0.5, 1.5])

    def test_statistics(self, rng):
        batch = LatentBatch(rng.standard_normal((16, 4)) * 3 + 1, rng.uniform(0, 2, (16, 4)))
        out = encoding_normalize(batch)
        assert np.allclose(out.mu.mean(axis=0), 0, atol=1e-12)
        assert np.allclose(out.mu.std(axis=0), cfg.LAMBDA_MU, rtol=1e-6)
        assert np.allclose(out.sigma.std(axis=0), 0.5, rtol=1e-6)
        assert np.all(out.sigma >= 0)

    def test_degenerate_mu_feature(self):
        out = encoding_normalize(LatentBatch(np.full((4, 1), 7.0), np.array([[1.0], [2.0], [3.0], [4.0]])))
        assert np.array_equal(out.mu, np.zeros((4, 1)))

    def test_single_example(self):
        with pytest.raises(BatchTooSmallError):
            encoding_normalize(LatentBatch([[1.0]], [[1.0]]))

    def test_negative_sigma(self):
        with pytest.raises(DomainError):
            encoding_normalize(LatentBatch([[1.0], [2.0]], [[-1.0], [1.0]]))

    def test_mismatched_shapes(self):
        with pytest.raises(DimensionError):
            LatentBatch(np.zeros((2, 3)), np.zeros((2, 2)))


class TestReparameterize:
    def test_affine(self):
        batch = LatentBatch([[1.0, 2.0]], [[0.5, 2.0]])
        assert np.array_equal(reparameterize(batch, np.array([[2.0, -1.0]])), [[2.0, 0.0]])

    def test_zero_noise_gives_means(self, rng):
        batch = LatentBatch(rng.standard_normal((3, 2)), rng.uniform(0, 1, (3, 2)))
        assert np.array_equal(reparameterize(batch, np.zeros((3, 2))), batch.mu)

    def test_noise_shape(self):
        with pytest.raises(DimensionError):
            reparameterize(LatentBatch(np.zeros((2, 2)), np.ones((2, 2))), np.zeros((2, 3)))

    def test_stacked_layout(self, rng):
        batch = LatentBatch(rng.standard_normal((5, 3)), rng.uniform(0, 1, (5, 3)))
        stacked = batch.stacked()
        assert stacked.shape == (5, 2, 3)
        assert np.array_equal(stacked[:, 1], batch.sigma)
        assert np.array_equal(LatentBatch.from_stacked(stacked).mu, batch.mu)

    def test_sample_moments(self):
        draws = 100000
        mu, sigma = np.array([1.5, -2.0, 0.0]), np.array([0.5, 2.0, 1.0])
        batch = LatentBatch(np.tile(mu, (draws, 1)), np.tile(sigma, (draws, 1)))
        z = reparameterize(batch, np.random.default_rng(0).standard_normal((draws, 3)))
        assert np.all(np.abs(z.mean(axis=0) - mu) < 5 * sigma / np.sqrt(draws))
        assert np.allclose(z.var(axis=0), sigma ** 2, rtol=0.03)


class TestSobel:
    def test_horizontal_ramp(self):
        image = np.tile(np.arange(8, dtype=np.float64), (8, 1))
        s = sobel_features(image)
        assert s.shape == (2, 8, 8)
        assert np.all(s[0, :, 1:-1] == 8)
        assert np.all(s[1] == 0)

    def test_constant_image(self):
        assert np.allclose(sobel_features(np.full((5, 5), 0.3)), 0, atol=1e-12)

    def test_vertical_ramp_is_transpose(self):
        image = np.tile(np.arange(6, dtype=np.float64), (6, 1))
        assert np.array_equal(sobel_features(image.T)[1], sobel_features(image)[0].T)

    def test_quarter_turn_swaps_channels(self, rng):
        image = rng.uniform(size=(9, 9))
        turned = sobel_features(np.ascontiguousarray(np.rot90(image)))
        original = sobel_features(image)
        assert np.allclose(turned[0], np.rot90(original[1]), rtol=0, atol=1e-12)
        assert np.allclose(turned[1], -np.rot90(original[0]), rtol=0, atol=1e-12)


class TestLosses:
    def test_traditional_perfect(self):
        x = np.zeros((2, 1, 4, 4))
        terms = loss_traditional(x, x, LatentBatch(np.zeros((2, 3)), np.ones((2, 3))))
        assert terms.total == pytest.approx(0.0, abs=1e-15)

    def test_traditional_mse(self):
        target = np.zeros((2, 1, 4, 4))
        terms = loss_traditional(target + 0.1, target, LatentBatch(np.zeros((2, 3)), np.ones((2, 3))))
        assert terms.total == pytest.approx(0.5)

    def test_traditional_kl(self):
        x = np.zeros((2, 1, 4, 4))
        terms = loss_traditional(x, x, LatentBatch(np.ones((2, 3)), np.ones((2, 3))))
        assert terms.kl == pytest.approx(0.5)

    def test_traditional_clamps_zero_sigma(self):
        x = np.zeros((1, 1, 4, 4))
        terms, grads = loss_traditional(x, x, LatentBatch(np.zeros((1, 2)), np.zeros((1, 2))), return_grads=True)
        assert np.isfinite(terms.total)
        assert np.all(np.isfinite(grads.sigma))
        assert core.SIGMA_CLAMPS == 2

    def test_full_perfect(self):
        x = np.random.default_rng(1).uniform(size=(2, 1, 5, 5))
        assert loss_full(x, x.copy(), np.ones((2, 3))).total == pytest.approx(0.0, abs=1e-15)

    def test_full_unit_error(self):
        target = np.zeros((2, 1, 5, 5))
        terms = loss_full(target + 1, target, np.ones((2, 3)))
        assert terms.mse == pytest.approx(50.0)
        assert terms.sobel == pytest.approx(0.0, abs=1e-12)
        assert terms.total == pytest.approx(50.0)

    def test_full_sigma_regularizer(self):
        x = np.zeros((2, 1, 5, 5))
        assert loss_full(x, x, np.full((2, 3), 0.5)).sigma_reg == pytest.approx(0.25)

    def test_without_sobel(self, rng):
        x = rng.uniform(size=(2, 1, 5, 5))
        y = rng.uniform(size=(2, 1, 5, 5))
        terms = loss_full(x, y, np.ones((2, 2)), VaeLossConfig(mode=cfg.MODE_NORMALIZED))
        assert terms.sobel == 0.0
        assert terms.total == pytest.approx(50.0 * np.mean((x - y) ** 2))

    def test_full_rejects_traditional_mode(self):
        x = np.zeros((1, 1, 5, 5))
        with pytest.raises(ConfigError):
            loss_full(x, x, np.ones((1, 2)), VaeLossConfig(mode=cfg.MODE_TRADITIONAL))


class TestSchedule:
    def test_learning_rate_endpoints(self):
        s = TrainSchedule()
        assert lr_at(1, s) == pytest.approx(0.001, rel=1e-12)
        assert lr_at(75000, s) == pytest.approx(0.0005, rel=1e-12)
        assert lr_at(s.total, s) == pytest.approx(0.001 * 0.5 ** 8, rel=1e-12)

    def test_learning_rate_steps(self):
        s = TrainSchedule(total=80)
        assert len({lr_at(t, s) for t in range(1, 81)}) == 9

    def test_beta1(self):
        s = TrainSchedule(total=1000)
        assert beta1_at(s.total, s) == 0.0
        assert beta1_at(500, s) == pytest.approx(0.9 * 0.5 / (0.1 + 0.45), rel=1e-12)
        values = [beta1_at(t, s) for t in range(1, 1001)]
        assert values[0] == pytest.approx(0.9, abs=1e-3)
        assert all(a > b for a, b in zip(values, values[1:]))

    @pytest.mark.parametrize('t', [0, 11])
    def test_iteration_domain(self, t):
        with pytest.raises(DomainError):
            lr_at(t, TrainSchedule(total=10))


class TestAdam:
    def test_first_step(self):
        s = TrainSchedule(total=10)
        p = np.array([1.0])
        params, moments = adam_step([p], [np.array([1.0])], AdamMoments.zeros_like([p]), 1, s)
        assert params[0][0] == pytest.approx(1.0 - lr_at(1, s) / (1.0 + s.epsilon), rel=1e-12)
        assert p[0] == 1.0
        assert moments.t == 1
        assert moments.beta1_product == pytest.approx(beta1_at(1, s))

    def test_zero_gradient_is_a_no_op(self, rng):
        p = rng.standard_normal((3, 2))
        params, _ = adam_step([p], [np.zeros_like(p)], AdamMoments.zeros_like([p]), 1, TrainSchedule(total=5))
        assert np.array_equal(params[0], p)

    def test_step_against_sign(self, rng):
        p = rng.standard_normal(6)
        g = rng.standard_normal(6)
        params, _ = adam_step([p], [g], AdamMoments.zeros_like([p]), 1, TrainSchedule(total=5))
        assert np.all(np.sign(p - params[0]) == np.sign(g))

    def test_non_finite_gradient(self):
        p = [np.zeros(2), np.zeros(2)]
        with pytest.raises(NonFiniteError) as info:
            adam_step(p, [np.zeros(2), np.array([0.0, np.nan])], AdamMoments.zeros_like(p), 1, TrainSchedule(total=5))
        assert info.value.index == 1
        assert core.REJECTED_STEPS == 1


class TestAugment:
    @pytest.fixture
    def image(self):
        return np.arange(9, dtype=np.float64).reshape(3, 3)

    def test_identity(self, image):
        assert np.array_equal(augment(image, 0), image)

    def test_quarter_turn(self, image):
        assert np.array_equal(augment(image, 1), np.rot90(image))

    def test_eight_distinct(self, image):
        assert len({augment(image, i).tobytes() for i in range(DIHEDRAL_ORDER)}) == 8

    @pytest.mark.parametrize('index', range(DIHEDRAL_ORDER))
    def test_group_closure(self, image, index):
        once = augment(image, index)
        assert any(np.array_equal(augment(once, j), image) for j in range(DIHEDRAL_ORDER))

    def test_full_turn(self, image):
        assert np.array_equal(augment(augment(image, 1), 3), image)

    def test_channels_kept(self, rng):
        image = rng.uniform(size=(4, 4, 2))
        out = augment(image, 5)
        assert out.shape == (4, 4, 2)
        assert np.array_equal(out[..., 1], augment(image[..., 1], 5))

    def test_batch(self, rng):
        images = rng.uniform(size=(3, 4, 4, 1))
        out = augment_batch(images, [0, 2, 4])
        assert np.array_equal(out[0], images[0])
        assert np.array_equal(out[1], augment(images[1], 2))

    def test_non_square(self):
        with pytest.raises(DimensionError):
            augment(np.zeros((3, 4)), 0)

    def test_index_domain(self):
        with pytest.raises(DomainError):
            augment(np.zeros((3, 3)), 8)


class TestModel:
    def test_shapes(self, rng):
        model = VaeModel(SMALL, seed=0)
        x = rng.uniform(size=(4, 1, 8, 8))
        latents = model.encode(x, training=True)
        assert latents.mu.shape == (4, 2)
        assert np.all(model.encode_raw(x).sigma >= 0)
        assert model.generate(latents.mu).shape == x.shape

    def test_same_seed_same_weights(self):
        a, b = VaeModel(SMALL, seed=3), VaeModel(SMALL, seed=3)
        assert all(np.array_equal(p, q) for (_, p), (_, q) in zip(a.parameters(), b.parameters()))

    def test_traditional_has_no_normalizer(self):
        assert VaeModel(SMALL, VaeLossConfig(mode=cfg.MODE_TRADITIONAL)).normalizer is None

    @pytest.mark.parametrize('seed', range(10))
    @pytest.mark.parametrize('mode', cfg.LOSS_MODES)
    def test_loss_gradient(self, mode, seed):
        rng = np.random.default_rng(seed)
        model = VaeModel(SMALL, VaeLossConfig(mode=mode), seed=seed)
        x = rng.uniform(size=(4, 1, 8, 8))
        noise = rng.standard_normal((4, 2))
        report = check_loss_gradient(model, x, noise, tolerance=1e-4)
        assert report.passed, str(report)

    def test_bias_before_batch_norm_has_zero_gradient(self, rng):
        model = VaeModel(SMALL, seed=0)
        model.loss_and_gradients(rng.uniform(size=(4, 1, 8, 8)), rng.standard_normal((4, 2)))
        grads = dict(model.gradients())
        assert np.max(np.abs(grads['encoder.0.conv2d.b'])) < 1e-10
