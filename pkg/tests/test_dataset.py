# -*- coding: utf-8 -*-

import numpy as np
import pytest

from config import SynthSettings
from dataio.dataset import (EXTERNAL, KNOWN_PARTITIONS, SYNTHETIC, ImageDataset, load_dataset, manifest_path,
                            partition, preprocess_dataset, read_manifest, shift_validation_window, write_manifest)
from dataio.npy import save_array_file
from dataio.preprocess import blur_images, gaussian_blur_5x5
from dataio.synth import lattice_texture, synthesize_dataset, synthesize_image
from errors import ConfigError, DimensionError, PartitionError


@pytest.fixture
def dataset():
    images = np.arange(10, dtype=np.float64)[:, None, None, None] * np.ones((10, 2, 2, 1))
    return ImageDataset(images, labels=np.arange(10) % 3)


def _ids(part: ImageDataset):
    return [int(v) for v in part.images[:, 0, 0, 0]]


class TestImageDataset:
    def test_three_dimensional_input(self):
        dataset = ImageDataset(np.zeros((4, 3, 3)))
        assert dataset.images.shape == (4, 3, 3, 1)
        assert dataset.boundaries == (4, 4)
        assert dataset.side == 3 and dataset.channels == 1 and dataset.square

    def test_label_count(self):
        with pytest.raises(DimensionError):
            ImageDataset(np.zeros((4, 3, 3)), labels=np.zeros(3))


class TestPartition:
    def test_fractions(self, dataset):
        train, validation, test = partition(dataset, fractions=(0.8, 0.9))
        assert _ids(train) == list(range(8))
        assert _ids(validation) == [8]
        assert _ids(test) == [9]
        assert list(train.labels) == [0, 1, 2, 0, 1, 2, 0, 1]

    def test_empty_validation(self, dataset):
        train, validation, test = partition(dataset, boundaries=(3, 3))
        assert len(train) == 3 and len(validation) == 0 and len(test) == 7

    def test_default_boundaries(self, dataset):
        train, validation, test = partition(dataset)
        assert len(train) == 10 and len(validation) == 0 and len(test) == 0

    @pytest.mark.parametrize('boundaries', [(5, 3), (-1, 4), (4, 11)])
    def test_invalid_boundaries(self, dataset, boundaries):
        with pytest.raises(PartitionError):
            partition(dataset, boundaries=boundaries)

    def test_one_source_only(self, dataset):
        with pytest.raises(PartitionError):
            partition(dataset, fractions=(0.5, 0.7), boundaries=(1, 2))

    def test_published_partition(self):
        counts = KNOWN_PARTITIONS['stem']
        dataset = ImageDataset(np.zeros((sum(counts), 1, 1, 1), dtype=np.float32))
        parts = partition(dataset, name='stem')
        assert tuple(len(p) for p in parts) == (14826, 1977, 2966)

    @pytest.mark.parametrize('name, counts', [
        ('tem', (11350, 2431, 3486)),
        ('wavefunctions-n1', (25352, 3569, 8563)),
        ('wavefunctions-n1-single', (3856, 963, 0)),
    ])
    def test_more_published_partitions(self, name, counts):
        dataset = ImageDataset(np.zeros((sum(counts), 1, 1, 1), dtype=np.float32))
        parts = partition(dataset, name=name)
        assert tuple(len(p) for p in parts) == counts
        assert KNOWN_PARTITIONS[name] == counts

    def test_published_partition_size_mismatch(self, dataset):
        with pytest.raises(PartitionError):
            partition(dataset, name='stem')

    def test_unknown_name(self, dataset):
        with pytest.raises(PartitionError):
            partition(dataset, name='imagenet')

    def test_shift_validation_window(self, dataset):
        dataset.boundaries = (6, 8)
        train, validation = shift_validation_window(dataset, 2)
        assert _ids(validation) == [4, 5]
        assert _ids(train) == [0, 1, 2, 3, 6, 7]

    def test_shift_out_of_range(self, dataset):
        dataset.boundaries = (6, 8)
        with pytest.raises(PartitionError):
            shift_validation_window(dataset, 7)


class TestFiles:
    def test_preprocess_records_step(self, dataset):
        out = preprocess_dataset(dataset)
        assert out.steps == ['minmax']
        assert out.constant.all()
        assert dataset.steps == []

    def test_manifest_round_trip(self, tmp_path, rng):
        dataset = ImageDataset(rng.uniform(size=(6, 4, 4, 1)), (4, 5), EXTERNAL)
        dataset = preprocess_dataset(dataset)
        path = tmp_path / 'images.npy'
        save_array_file(path, dataset.images)
        write_manifest(dataset, manifest_path(path), path)

        info = read_manifest(manifest_path(path))
        assert info['count'] == 6
        assert info['path'] == 'images.npy'
        assert info['preprocessing'] == ['minmax']
        assert 'train_end=4' in (tmp_path / 'images.manifest').read_text().splitlines()

        loaded = load_dataset(path)
        assert loaded.boundaries == (4, 5)
        assert loaded.steps == ['minmax']
        assert np.array_equal(loaded.images, dataset.images)

    def test_load_without_manifest(self, tmp_path, rng):
        path = tmp_path / 'raw.npy'
        save_array_file(path, rng.uniform(size=(5, 3, 3)))
        loaded = load_dataset(path)
        assert loaded.images.shape == (5, 3, 3, 1)
        assert loaded.provenance == EXTERNAL
        assert loaded.boundaries == (5, 5)


class TestSynth:
    def test_shape_and_labels(self):
        dataset = synthesize_dataset(SynthSettings(clusters=3, per_cluster=4, size=12), seed=0)
        assert dataset.images.shape == (12, 12, 12, 1)
        assert list(dataset.labels) == [0, 1, 2] * 4
        assert dataset.provenance == SYNTHETIC

    def test_seeded(self):
        settings = SynthSettings(clusters=2, per_cluster=3, size=8)
        a = synthesize_dataset(settings, seed=1)
        b = synthesize_dataset(settings, seed=1)
        c = synthesize_dataset(settings, seed=2)
        assert np.array_equal(a.images, b.images)
        assert not np.array_equal(a.images, c.images)

    def test_pattern_depends_only_on_label_without_jitter(self):
        dataset = synthesize_dataset(SynthSettings(clusters=3, per_cluster=2, size=16, noise=0.0, jitter=False))
        assert np.array_equal(dataset.images[0], dataset.images[3])
        assert not np.array_equal(dataset.images[0], dataset.images[1])

    @pytest.mark.parametrize('label', range(8))
    def test_families(self, label):
        image = synthesize_image(label, 16, np.random.default_rng(0))
        assert image.shape == (16, 16)
        assert np.all(np.isfinite(image))
        assert image.std() > 0

    def test_repeated_family_halves_length_scale(self):
        rng = np.random.default_rng(0)
        base, smaller = synthesize_image(0, 16, rng, jitter=False), synthesize_image(6, 16, rng, jitter=False)
        assert np.sum(smaller > 0.5) < np.sum(base > 0.5)

    def test_texture_is_zero_mean_lattice(self):
        texture = lattice_texture(24, np.random.default_rng(0), jitter=True)
        assert abs(texture.mean()) < 1e-12
        assert np.allclose(texture[3:], texture[:-3])
        assert np.allclose(texture[:, 3:], texture[:, :-3])

    def test_blur_removes_texture_not_morphology(self):
        texture = lattice_texture(32, np.random.default_rng(1), jitter=True)
        blurred = gaussian_blur_5x5(texture)
        assert blurred[4:-4, 4:-4].std() < 0.25 * texture[4:-4, 4:-4].std()

        settings = SynthSettings(clusters=3, per_cluster=20, size=16)
        dataset = synthesize_dataset(settings, seed=3)
        flat = blur_images(dataset.images).reshape(len(dataset), -1)
        centres = np.array([flat[dataset.labels == k].mean(axis=0) for k in range(3)])
        nearest = np.argmin(((flat[:, None] - centres[None]) ** 2).sum(axis=2), axis=1)
        assert np.mean(nearest == dataset.labels) > 0.9

    def test_clusters_are_separable(self):
        settings = SynthSettings(clusters=3, per_cluster=10, size=16, noise=0.05, jitter=False)
        dataset = synthesize_dataset(settings, seed=0)
        flat = dataset.images.reshape(len(dataset), -1)
        centres = np.array([flat[dataset.labels == k].mean(axis=0) for k in range(3)])
        nearest = np.argmin(((flat[:, None] - centres[None]) ** 2).sum(axis=2), axis=1)
        assert np.mean(nearest == dataset.labels) > 0.9

    def test_size_validated(self):
        with pytest.raises(ConfigError):
            synthesize_dataset(SynthSettings(size=4))
