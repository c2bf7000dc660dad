# -*- coding: utf-8 -*-

import os
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple, List, Dict, Any

import numpy as np

import core
from cache import PersistentDict
from errors import DimensionError, PartitionError
from helpers import log, LogLevel

from .npy import load_array_file
from .preprocess import preprocess_images

SYNTHETIC = 'synthetic'
EXTERNAL = 'external'

# Published partition counts (train, validation, test) of the corpora and their
# 96 x 96 variants, concatenated in that order
KNOWN_PARTITIONS = {
    'stem': (14826, 1977, 2966),
    'tem': (11350, 2431, 3486),
    'wavefunctions': (24530, 3399, 8395),
    'wavefunctions-restricted': (8002, 1105, 2763),
    'wavefunctions-single': (3861, 964, 0),
    'wavefunctions-n1': (25352, 3569, 8563),
    'wavefunctions-n1-single': (3856, 963, 0),
}


@dataclass
class ImageDataset:
    """ N x H x W x C images with contiguous partition boundaries
    (train end, validation end). Labels are only known for synthetic corpora.
    """
    images: np.ndarray
    boundaries: Tuple[int, int] = None
    provenance: str = SYNTHETIC
    labels: Optional[np.ndarray] = None
    constant: Optional[np.ndarray] = None
    steps: List[str] = field(default_factory=list)

    def __post_init__(self):
        if self.images.ndim == 3:
            self.images = self.images[..., None]
        if self.images.ndim != 4:
            raise DimensionError('Datasets are N x H x W x C arrays, got shape {}'.format(self.images.shape))
        if self.boundaries is None:
            self.boundaries = (len(self.images), len(self.images))
        self.boundaries = tuple(int(b) for b in self.boundaries)
        if self.labels is not None and len(self.labels) != len(self.images):
            raise DimensionError('{} labels for {} images'.format(len(self.labels), len(self.images)))

    def __len__(self):
        return self.images.shape[0]

    @property
    def side(self) -> int:
        return self.images.shape[1]

    @property
    def channels(self) -> int:
        return self.images.shape[3]

    @property
    def square(self) -> bool:
        return self.images.shape[1] == self.images.shape[2]

    def subset(self, start: int, stop: int) -> 'ImageDataset':
        return self.take(np.arange(start, stop))

    def take(self, indices: np.ndarray) -> 'ImageDataset':
        indices = np.asarray(indices, dtype=np.int64)
        return replace(self,
                       images=self.images[indices],
                       boundaries=(len(indices), len(indices)),
                       labels=None if self.labels is None else self.labels[indices],
                       constant=None if self.constant is None else self.constant[indices],
                       steps=list(self.steps))


def _check_boundaries(boundaries: Tuple[int, int], n: int) -> Tuple[int, int]:
    if len(boundaries) != 2:
        raise PartitionError('Partition boundaries are (train end, validation end), got {}'.format(boundaries))
    a, b = (int(x) for x in boundaries)
    if a < 0 or b > n:
        raise PartitionError('Boundaries {} outside [0, {}]'.format(boundaries, n))
    if a > b:
        raise PartitionError('Boundaries {} overlap: train ends after validation'.format(boundaries))
    return a, b


def boundaries_from_fractions(fractions: Tuple[float, float], n: int) -> Tuple[int, int]:
    if len(fractions) != 2 or not 0 <= fractions[0] <= fractions[1] <= 1:
        raise PartitionError('Fractions must be two ordered values in [0, 1], got {}'.format(fractions))
    return int(round(fractions[0] * n)), int(round(fractions[1] * n))


def boundaries_from_name(name: str, n: int) -> Tuple[int, int]:
    try:
        train, val, test = KNOWN_PARTITIONS[name]
    except KeyError:
        raise PartitionError("Unknown partition '{}'. Known: {}".format(name, sorted(KNOWN_PARTITIONS)))
    if train + val + test != n:
        raise PartitionError("Partition '{}' covers {} images, the dataset has {}".format(name, train + val + test, n))
    return train, train + val


def partition(dataset: ImageDataset, fractions: Tuple[float, float] = None, boundaries: Tuple[int, int] = None,
              name: str = None) -> Tuple[ImageDataset, ImageDataset, ImageDataset]:
    """ Contiguous, order-preserving (train, validation, test) split. Exactly
    one of fractions, boundaries or a KNOWN_PARTITIONS name may be given; with
    none, the dataset's own boundaries are used.
    """
    n = len(dataset)
    given = [x is not None for x in (fractions, boundaries, name)]
    if sum(given) > 1:
        raise PartitionError('Give only one of fractions, boundaries or a partition name')
    if fractions is not None:
        boundaries = boundaries_from_fractions(fractions, n)
    elif name is not None:
        boundaries = boundaries_from_name(name, n)
    elif boundaries is None:
        boundaries = dataset.boundaries
    a, b = _check_boundaries(boundaries, n)
    return dataset.subset(0, a), dataset.subset(a, b), dataset.subset(b, n)


def shift_validation_window(dataset: ImageDataset, offset: int) -> Tuple[ImageDataset, ImageDataset]:
    """ Concatenates the training and validation partitions and moves the
    validation window offset images towards the start. Returns the new
    (train, validation) pair; order within each part is kept.
    """
    a, b = _check_boundaries(dataset.boundaries, len(dataset))
    size = b - a
    start = a - int(offset)
    if not 0 <= start <= a:
        raise PartitionError('Offset {} moves the validation window outside [0, {}]'.format(offset, a))
    indices = np.arange(b)
    window = (indices >= start) & (indices < start + size)
    return dataset.take(indices[~window]), dataset.take(indices[window])


def preprocess_dataset(dataset: ImageDataset) -> ImageDataset:
    """ Min-max normalizes every image to [0, 1]; constant images become zeros
    and are flagged.
    """
    images, constant = preprocess_images(dataset.images)
    return replace(dataset, images=images, constant=constant, steps=dataset.steps + ['minmax'])


def load_dataset(path, provenance: str = EXTERNAL, boundaries: Tuple[int, int] = None) -> ImageDataset:
    """ Loads an N x H x W or N x H x W x C array file. A manifest next to it
    supplies boundaries, provenance and applied steps when present.
    """
    images = load_array_file(path)
    manifest = manifest_path(path)
    steps = []
    if os.path.isfile(manifest):
        info = read_manifest(manifest)
        provenance = info.get('provenance', provenance)
        boundaries = boundaries or (info.get('train_end'), info.get('validation_end'))
        steps = info.get('preprocessing', [])
        if None in boundaries:
            boundaries = None
    dataset = ImageDataset(core.asarray(images), boundaries, provenance, steps=steps)
    if not dataset.square:
        log('{}: images are {}x{}, augmentation needs square images'.format(
            path, dataset.images.shape[1], dataset.images.shape[2]), LogLevel.WARN)
    log('Loaded {} images of {}x{}x{} from {}'.format(len(dataset), dataset.side, dataset.images.shape[2],
                                                      dataset.channels, path))
    return dataset


def manifest_path(path) -> str:
    return os.path.splitext(str(path))[0] + '.manifest'


def write_manifest(dataset: ImageDataset, path, array_path) -> None:
    """ key=value manifest: path, counts, partition boundaries, provenance and
    preprocessing applied.
    """
    with PersistentDict(path, flag='n', format_='keyvalue') as manifest:
        manifest.update({
            'path': os.path.basename(str(array_path)),
            'count': len(dataset),
            'height': dataset.images.shape[1],
            'width': dataset.images.shape[2],
            'channels': dataset.channels,
            'train_end': dataset.boundaries[0],
            'validation_end': dataset.boundaries[1],
            'provenance': dataset.provenance,
            'preprocessing': dataset.steps,
            'constant_images': 0 if dataset.constant is None else int(np.sum(dataset.constant)),
        })


def read_manifest(path) -> Dict[str, Any]:
    raw = PersistentDict(path, flag='r')
    info = dict(raw)
    for key in ('count', 'height', 'width', 'channels', 'train_end', 'validation_end', 'constant_images'):
        if key in info:
            info[key] = int(info[key])
    if 'preprocessing' in info and isinstance(info['preprocessing'], str):
        info['preprocessing'] = [s for s in info['preprocessing'].split(',') if s]
    return info
