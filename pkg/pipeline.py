# -*- coding: utf-8 -*-

import copy
import dataclasses
import hashlib
import json
import os
from typing import Callable, Dict, List, Optional

import numpy as np
from sklearn.metrics import silhouette_score

import config as cfg
import core
from cache import PersistentDict
from config import PipelineConfig
from dataio.dataset import ImageDataset, load_dataset, partition, preprocess_dataset, write_manifest, EXTERNAL
from dataio.npy import load_array_file, save_array_file
from dataio.synth import synthesize_dataset
from embed.pca import fit_transform
from embed.tsne import Embedding, run_tsne
from errors import ConfigError, StageDependencyError
from helpers import log, LogLevel
from vae.checkpoint import checkpoint_exists, checkpoint_hash, load_checkpoint
from vae.latent import LatentBatch
from vae.model import VaeModel
from vae.trainer import encode_dataset, read_loss_trace, train, write_loss_trace
from viz.csvout import emit_embedding_csv, emit_kl_trace, read_embedding_csv, write_text
from viz.scatter import emit_scatter_svg, render_preview_png

# Artifact file names inside the output directory
CONFIG_FILE = 'config.json'
DATASET = 'dataset.npy'
LABELS = 'labels.npy'
PREPROCESSED = 'preprocessed.npy'
CHECKPOINT = 'checkpoint.ckpt'
LOSS_TRACE = 'loss_trace.csv'
LATENTS = 'latents.npy'
PCA_SCORES = 'pca_scores.npy'
EMBEDDING = 'embedding.csv'
KL_TRACE = 'kl_trace.csv'
MAP_SVG = 'map.svg'
MAP_PNG = 'map.png'
MANIFEST = 'manifest.json'
COMPARISON = 'comparison.csv'


class Run:
    """ One pipeline run: the configuration and its artifact directory.
    """
    def __init__(self, config: PipelineConfig, progress: bool = False):
        if config.seed is None:
            raise ConfigError('Pipeline runs need an explicit seed')
        config.validate()
        self.config = copy.deepcopy(config)
        self.progress = progress
        self.root = config.output_dir
        os.makedirs(self.root, exist_ok=True)

    def path(self, name: str) -> str:
        return os.path.join(self.root, name)

    def require(self, stage: str, name: str) -> str:
        path = self.path(name)
        if not os.path.isfile(path):
            raise StageDependencyError(stage, name)
        return path

    def labels(self) -> Optional[np.ndarray]:
        path = self.path(LABELS)
        return load_array_file(path) if os.path.isfile(path) else None

    def images(self, stage: str) -> ImageDataset:
        """ Preprocessed dataset. The architecture adopts its image shape.
        """
        dataset = load_dataset(self.require(stage, PREPROCESSED), provenance=self.config.source)
        arch = self.config.arch
        if (arch.side, arch.channels) != (dataset.side, dataset.channels):
            log('Architecture set to {0}x{0}x{1} images'.format(dataset.side, dataset.channels), LogLevel.DEBUG)
            self.config.arch = dataclasses.replace(arch, side=dataset.side, channels=dataset.channels)
            self.config.arch.validate()
        return dataset

    def training_hash(self) -> str:
        """ Hash of the fields that determine the trained model.
        """
        c = self.config
        fields = {'arch': c.arch, 'loss': c.loss, 'schedule': c.schedule, 'synth': c.synth, 'seed': c.seed,
                  'source': c.source, 'dataset_path': c.dataset_path, 'partition': c.partition,
                  'fractions': c.fractions, 'precision': c.precision}
        text = json.dumps({k: dataclasses.asdict(v) if dataclasses.is_dataclass(v) else v
                           for k, v in fields.items()}, sort_keys=True)
        return hashlib.sha256(text.encode('utf-8')).hexdigest()

    def model(self) -> VaeModel:
        return VaeModel(self.config.arch, self.config.loss, seed=self.config.seed)

    # --- Stages ---

    def synth(self) -> None:
        c = self.config
        if c.source == 'synthetic':
            dataset = synthesize_dataset(c.synth, seed=c.seed)
        else:
            dataset = load_dataset(c.dataset_path, provenance=EXTERNAL)
        save_array_file(self.path(DATASET), dataset.images)
        if dataset.labels is not None:
            save_array_file(self.path(LABELS), dataset.labels)
        write_manifest(dataset, self.path('dataset.manifest'), self.path(DATASET))

    def preprocess(self) -> None:
        dataset = load_dataset(self.require('preprocess', DATASET), provenance=self.config.source)
        dataset = preprocess_dataset(dataset)
        save_array_file(self.path(PREPROCESSED), dataset.images)
        write_manifest(dataset, self.path('preprocessed.manifest'), self.path(PREPROCESSED))

    def train(self) -> None:
        c = self.config
        dataset = self.images('train')
        if c.partition is not None:
            training, _, _ = partition(dataset, name=c.partition)
        else:
            training, _, _ = partition(dataset, fractions=c.fractions)

        model = self.model()
        checkpoint = self.path(CHECKPOINT)
        digest = self.training_hash()
        resume = False
        previous = []
        if checkpoint_exists(checkpoint):
            resume = checkpoint_hash(checkpoint) == digest
            if resume and os.path.isfile(self.path(LOSS_TRACE)):
                previous = read_loss_trace(self.path(LOSS_TRACE))
            elif not resume:
                log('Checkpoint {} belongs to another configuration; training from scratch'.format(checkpoint),
                    LogLevel.WARN)
        result = train(model, training.images, c.schedule, seed=c.seed, checkpoint_path=checkpoint,
                       config_hash=digest, resume=resume, progress=self.progress)
        trace = [r for r in previous if r.iteration < (result.trace[0].iteration if result.trace else 1 << 62)]
        write_loss_trace(self.path(LOSS_TRACE), trace + result.trace)

    def encode(self) -> None:
        checkpoint = self.require('encode', CHECKPOINT)
        dataset = self.images('encode')
        model = self.model()
        load_checkpoint(checkpoint, model)
        schedule = self.config.schedule
        blur_std = schedule.blur_std if schedule.blur and self.config.blur_at_encode else None
        latents = encode_dataset(model, dataset.images, batch_size=schedule.batch, blur_std=blur_std)
        save_array_file(self.path(LATENTS), latents.stacked())

    def pca(self) -> None:
        dataset = self.images('pca')
        _, scores = fit_transform(dataset.images, self.config.pca.components)
        save_array_file(self.path(PCA_SCORES), scores)

    def tsne(self) -> Embedding:
        c = self.config
        tsne = dataclasses.replace(c.tsne, seed=c.seed)
        if c.embed_source == 'vae':
            data = LatentBatch.from_stacked(load_array_file(self.require('tsne', LATENTS)))
        else:
            data = load_array_file(self.require('tsne', PCA_SCORES))
            if tsne.sigma_mode == 'with-sigma':
                log('PCA scores carry no sigma; embedding them without it', LogLevel.DEBUG)
                tsne = dataclasses.replace(tsne, sigma_mode='without-sigma')
        embedding = run_tsne(data, tsne, progress=self.progress)
        write_text(self.path(EMBEDDING), emit_embedding_csv(embedding, self.labels()))
        write_text(self.path(KL_TRACE), emit_kl_trace(embedding.kl_trace))
        return embedding

    def render(self) -> None:
        c = self.config
        with open(self.require('render', EMBEDDING), encoding='utf-8') as f:
            parsed = read_embedding_csv(f.read())
        images = None
        if c.scatter.thumbnails > 0 and os.path.isfile(self.path(PREPROCESSED)):
            images = load_array_file(self.path(PREPROCESSED))
        scatter = dataclasses.replace(c.scatter, seed=c.seed)
        labels = parsed.get('label')
        write_text(self.path(MAP_SVG), emit_scatter_svg(parsed['y'], scatter, images, labels))
        if scatter.png_preview:
            render_preview_png(self.path(MAP_PNG), parsed['y'], scatter, images, labels)

    def write_manifest(self) -> None:
        """ JSON manifest with the config hash and the SHA-256 of every artifact.
        """
        hashes = {}
        for name in sorted(os.listdir(self.root)):
            path = self.path(name)
            if name == MANIFEST or not os.path.isfile(path) or name.endswith('.tmp'):
                continue
            with open(path, 'rb') as f:
                hashes[name] = hashlib.sha256(f.read()).hexdigest()
        with PersistentDict(self.path(MANIFEST), flag='n') as manifest:
            manifest.update({'config_hash': self.config.config_hash(), 'seed': self.config.seed,
                             'stages': list(self.config.stages), 'precision': self.config.precision,
                             'artifacts': hashes})


def run_pipeline(config: PipelineConfig, progress: bool = False) -> str:
    """ Runs the configured stages in pipeline order. Returns the artifact
    directory.
    """
    run = Run(config, progress)
    core.set_precision(config.precision)
    for stage in cfg.STAGES:
        if stage in config.stages:
            log("Stage '{}'".format(stage))
            getattr(run, stage)()
    # After the stages: holds the architecture adapted to the data
    run.config.save(run.path(CONFIG_FILE))
    run.write_manifest()
    return run.root


# --- Comparison presets (full loss, no Sobel, traditional loss, PCA) ---

def _vae_preset(mode: str) -> Callable[[PipelineConfig], PipelineConfig]:
    def apply(config: PipelineConfig) -> PipelineConfig:
        stages = tuple(s for s in config.stages if s != 'pca')
        for needed in ('train', 'encode', 'tsne'):
            if needed not in stages:
                stages += (needed,)
        return dataclasses.replace(config, embed_source='vae', loss=dataclasses.replace(config.loss, mode=mode),
                                   stages=tuple(s for s in cfg.STAGES if s in stages))
    return apply


def _pca_preset(config: PipelineConfig) -> PipelineConfig:
    stages = set(config.stages) - {'train', 'encode'} | {'pca', 'tsne'}
    return dataclasses.replace(config, embed_source='pca', stages=tuple(s for s in cfg.STAGES if s in stages),
                               tsne=dataclasses.replace(config.tsne, sigma_mode='without-sigma'))


PRESETS: Dict[str, Callable[[PipelineConfig], PipelineConfig]] = {
    'full': _vae_preset(cfg.MODE_FULL),
    'no-sobel': _vae_preset(cfg.MODE_NORMALIZED),
    'traditional': _vae_preset(cfg.MODE_TRADITIONAL),
    'pca': _pca_preset,
}


def silhouette(y: np.ndarray, labels: Optional[np.ndarray]) -> float:
    """ Silhouette of the embedding against known labels, NaN when undefined.
    """
    if labels is None or not 2 <= len(np.unique(labels)) <= len(labels) - 1:
        return float('nan')
    return float(silhouette_score(y, labels))


def compare(config: PipelineConfig, presets: List[str] = None, progress: bool = False) -> List[Dict]:
    """ Runs every preset into its own sub-directory and writes comparison.csv
    with the silhouette and final KL of each embedding.
    """
    presets = presets if presets is not None else list(PRESETS)
    rows = []
    for name in presets:
        if name not in PRESETS:
            raise ConfigError("Unknown preset '{}'. Presets are {}".format(name, sorted(PRESETS)))
        preset = PRESETS[name](dataclasses.replace(config, output_dir=os.path.join(config.output_dir, name)))
        root = run_pipeline(preset, progress)
        with open(os.path.join(root, EMBEDDING), encoding='utf-8') as f:
            parsed = read_embedding_csv(f.read())
        with open(os.path.join(root, KL_TRACE), encoding='utf-8') as f:
            final_kl = float(f.read().strip().splitlines()[-1].split(',')[1])
        rows.append({'preset': name, 'silhouette': silhouette(parsed['y'], parsed.get('label')),
                     'final_kl': final_kl})
        log('{}: silhouette {:.4f}, KL {:.4f}'.format(name, rows[-1]['silhouette'], final_kl))

    lines = ['preset,silhouette,final_kl'] + ['{},{!r},{!r}'.format(r['preset'], r['silhouette'], r['final_kl'])
                                              for r in rows]
    os.makedirs(config.output_dir, exist_ok=True)
    write_text(os.path.join(config.output_dir, COMPARISON), '\n'.join(lines) + '\n')
    return rows
