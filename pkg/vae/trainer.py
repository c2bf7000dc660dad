# -*- coding: utf-8 -*-

import csv
from dataclasses import dataclass, field, astuple, fields
from typing import List, Optional

import numpy as np
from tqdm import tqdm

import config as cfg
import core
from config import TrainSchedule
from dataio.preprocess import blur_images
from errors import DimensionError, DivergenceError, NonFiniteError
from helpers import log, LogLevel
from nn.layers import encoding_norm_forward

from .augment import augment_batch, DIHEDRAL_ORDER
from .checkpoint import save_checkpoint, load_checkpoint, checkpoint_exists
from .latent import LatentBatch
from .model import VaeModel
from .optim import AdamMoments, adam_step, lr_at, beta1_at

LOG_EVERY = 100  # iterations between summary log lines


@dataclass
class LossRecord:
    iteration: int
    total: float
    mse: float
    sobel: float
    sigma_reg: float
    eta: float
    beta1: float
    kl: float = 0.0


TRACE_COLUMNS = tuple(f.name for f in fields(LossRecord))


@dataclass
class TrainResult:
    model: VaeModel
    trace: List[LossRecord] = field(default_factory=list)
    moments: Optional[AdamMoments] = None


def to_nchw(images: np.ndarray) -> np.ndarray:
    """ N x H x W (x C) images to the N x C x H x W layout of the networks.
    """
    if images.ndim == 3:
        images = images[..., None]
    if images.ndim != 4:
        raise DimensionError('Expected N x H x W x C images, got shape {}'.format(images.shape))
    return np.ascontiguousarray(np.transpose(images, (0, 3, 1, 2)))


def _check_images(model: VaeModel, images: np.ndarray) -> np.ndarray:
    if images.ndim == 3:
        images = images[..., None]
    arch = model.arch
    if images.ndim != 4 or images.shape[1:] != (arch.side, arch.side, arch.channels):
        raise DimensionError('Model expects {0} x {0} x {1} images, got {2}'.format(
            arch.side, arch.channels, images.shape[1:]))
    return core.asarray(images)


def train(model: VaeModel, images: np.ndarray, schedule: Optional[TrainSchedule] = None, seed: int = 0,
          checkpoint_path=None, config_hash: str = '', resume: bool = False, progress: bool = False) -> TrainResult:
    """ Trains the VAE by ADAM on random batches of dihedrally augmented images.

    images are N x H x W x C, preprocessed to [0, 1]. The random stream of
    iteration t is seeded by (seed, t), so a resumed run draws the same
    batches, augmentations and noise as an uninterrupted one.
    """
    schedule = schedule if schedule is not None else TrainSchedule()
    schedule.validate()
    images = _check_images(model, images)
    n = len(images)
    if n < 2:
        raise DimensionError('Training needs at least 2 images, got {}'.format(n))
    batch = min(schedule.batch, n)
    if batch < schedule.batch:
        log('Batch size reduced to the dataset size {}'.format(batch), LogLevel.WARN)

    if schedule.blur:
        images = blur_images(images, schedule.blur_std)

    params = [p for _, p in model.parameters()]
    moments = AdamMoments.zeros_like(params)
    if resume and checkpoint_path is not None and checkpoint_exists(checkpoint_path):
        moments, _ = load_checkpoint(checkpoint_path, model)
        if not moments.m:
            moments = AdamMoments.zeros_like(params)
        log('Resuming training at iteration {}'.format(model.iteration + 1))
    last_checkpoint = checkpoint_path if resume and checkpoint_path is not None \
        and checkpoint_exists(checkpoint_path) else None

    trace = []
    start = model.iteration + 1
    for t in tqdm(range(start, schedule.total + 1), desc='train', disable=not progress,
                  initial=start - 1, total=schedule.total):
        rng = np.random.default_rng([seed, t])
        chosen = rng.choice(n, size=batch, replace=False)
        x = to_nchw(augment_batch(images[chosen], rng.integers(0, DIHEDRAL_ORDER, size=batch)))
        noise = core.asarray(rng.standard_normal((batch, model.latent)))

        terms = model.loss_and_gradients(x, noise)
        if not np.isfinite(terms.total):
            raise DivergenceError(t, last_checkpoint)
        grads = [g for _, g in model.gradients()]
        try:
            new_params, moments = adam_step(params, grads, moments, t, schedule)
        except NonFiniteError as e:
            raise DivergenceError(t, last_checkpoint) from e
        for p, new in zip(params, new_params):
            p[...] = new
        model.iteration = t

        record = LossRecord(t, terms.total, terms.mse, terms.sobel, terms.sigma_reg,
                            lr_at(t, schedule), beta1_at(t, schedule), terms.kl)
        trace.append(record)
        if t % LOG_EVERY == 0:
            log('iteration {}/{}: loss {:.6g}'.format(t, schedule.total, terms.total), LogLevel.DEBUG)

        if checkpoint_path is not None and schedule.checkpoint_every and t % schedule.checkpoint_every == 0:
            save_checkpoint(checkpoint_path, model, moments, config_hash)
            last_checkpoint = checkpoint_path

    if checkpoint_path is not None and trace:
        save_checkpoint(checkpoint_path, model, moments, config_hash)
    if trace:
        log('Trained {} iterations, final loss {:.6g}'.format(len(trace), trace[-1].total))
    return TrainResult(model, trace, moments)


def write_loss_trace(path, trace: List[LossRecord]) -> None:
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(TRACE_COLUMNS)
        for record in trace:
            writer.writerow([record.iteration] + ['{!r}'.format(float(v)) for v in astuple(record)[1:]])


def read_loss_trace(path) -> List[LossRecord]:
    with open(path, newline='') as f:
        reader = csv.DictReader(f)
        return [LossRecord(int(row['iteration']), *(float(row[c]) for c in TRACE_COLUMNS[1:])) for row in reader]


def encode_dataset(model: VaeModel, images: np.ndarray, batch_size: int = cfg.BATCH_SIZE,
                   blur_std: Optional[float] = None) -> LatentBatch:
    """ Encodes all N images in inference mode (running batch-norm statistics).
    With blur_std the images first get the 5x5 Gaussian blur used in training.
    Encoding normalization uses the statistics of the whole encoded dataset.
    A single image is duplicated so that the statistics are defined.
    """
    if not model.trained:
        log('Encoding with an untrained model', LogLevel.WARN)
    images = _check_images(model, images)
    if blur_std is not None:
        images = blur_images(images, blur_std)
    n = len(images)
    if n == 0:
        raise DimensionError('Nothing to encode')

    mus, sigmas = [], []
    for start in range(0, n, batch_size):
        raw = model.encode_raw(to_nchw(images[start:start + batch_size]), training=False)
        mus.append(raw.mu)
        sigmas.append(raw.sigma)
    mu, sigma = np.concatenate(mus), np.concatenate(sigmas)

    if model.normalizer is not None:
        rows = mu.shape[0]
        if rows == 1:
            mu, sigma = np.repeat(mu, 2, axis=0), np.repeat(sigma, 2, axis=0)
        mu, sigma, _ = encoding_norm_forward(mu, sigma, model.loss_config.lambda_mu, model.loss_config.epsilon_bn)
        mu, sigma = mu[:rows], sigma[:rows]
    return LatentBatch(mu, sigma)
