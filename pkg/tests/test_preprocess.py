# -*- coding: utf-8 -*-

import numpy as np
import pytest

import core
from dataio.preprocess import blur_images, gaussian_blur_5x5, gaussian_kernel, minmax_normalize, preprocess_images
from errors import ImageSizeError, NonFiniteError


class TestMinmax:
    def test_maps_to_unit_range(self):
        image, constant = minmax_normalize(np.array([[2.0, 4.0], [6.0, 3.0]]))
        assert np.allclose(image, [[0, 0.5], [1, 0.25]])
        assert not constant

    def test_constant_image(self):
        image, constant = minmax_normalize(np.full((3, 3), 7.0))
        assert np.array_equal(image, np.zeros((3, 3)))
        assert constant

    def test_non_finite_pixel(self):
        image = np.zeros((3, 3))
        image[1, 2] = np.nan
        with pytest.raises(NonFiniteError, match=r'\(1, 2\)'):
            minmax_normalize(image)

    def test_stack_counts_constant_images(self, rng):
        images = rng.uniform(size=(4, 5, 5, 1))
        images[2] = 0.5
        out, constant = preprocess_images(images)
        assert np.array_equal(constant, [False, False, True, False])
        assert core.CONSTANT_IMAGES == 1
        assert out.min() == 0.0 and out.max() == 1.0


class TestBlur:
    def test_kernel(self):
        kernel = gaussian_kernel(5, 2.5)
        assert kernel.shape == (5, 5)
        assert kernel.sum() == pytest.approx(1.0)
        assert np.allclose(kernel, kernel.T)
        assert np.allclose(kernel, kernel[::-1, ::-1])
        assert kernel[2, 2] == kernel.max()

    def test_constant_image_unchanged(self):
        assert np.allclose(gaussian_blur_5x5(np.full((8, 8), 0.4)), 0.4)

    def test_reflect_padding(self, rng):
        image = rng.uniform(size=(7, 9))
        padded = np.pad(image, 2, mode='reflect')
        kernel = gaussian_kernel()
        expected = np.array([[np.sum(padded[i:i + 5, j:j + 5] * kernel) for j in range(9)] for i in range(7)])
        assert np.allclose(gaussian_blur_5x5(image), expected)

    def test_channels_blurred_separately(self, rng):
        image = rng.uniform(size=(6, 6, 2))
        out = gaussian_blur_5x5(image)
        assert out.shape == image.shape
        assert np.allclose(out[..., 1], gaussian_blur_5x5(image[..., 1]))

    def test_smooths(self, rng):
        image = rng.uniform(size=(16, 16))
        assert gaussian_blur_5x5(image).std() < image.std()

    def test_too_small(self):
        with pytest.raises(ImageSizeError):
            gaussian_blur_5x5(np.zeros((4, 8)))

    def test_stack(self, rng):
        images = rng.uniform(size=(3, 6, 6, 1))
        out = blur_images(images)
        assert out.shape == images.shape
        assert np.allclose(out[2], gaussian_blur_5x5(images[2]))
