#!/bin/env python
# -*- coding: utf-8 -*-

import argparse
import dataclasses
import sys

import config as cfg
import core
from config import PipelineConfig
from errors import ConfigError, InputFileError, LatentMapError
from helpers import log, LogLevel, set_log_level
from pipeline import PRESETS, Run, compare, run_pipeline

VERBS = cfg.STAGES + ('pipeline', 'compare')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description='Embeds image datasets into 2D maps: VAE with encoding normalization + uncertainty-weighted tSNE')
    parser.add_argument('verb', choices=VERBS,
                        help='Stage to run, the whole pipeline, or the preset comparison')

    parser.add_argument('-c', '--config', help='JSON configuration file. Flags given here override it')
    parser.add_argument('-o', '--output-dir', help='Artifact directory. Default is {}'.format(
        PipelineConfig().output_dir))
    parser.add_argument('-s', '--seed', type=int, help='Global seed (mandatory for pipeline and compare)')
    parser.add_argument('-d', '--debug', help='Debug mode', action='store_true')
    parser.add_argument('-P', '--progress', help='Show progress bars', action='store_true')
    parser.add_argument('--benchmark', action='store_true',
                        help='Start from the small synthetic benchmark configuration instead of the defaults')

    data = parser.add_argument_group('data')
    data.add_argument('--dataset', help='External N x H x W (x C) array file. Selects the external source')
    data.add_argument('--partition', help='Published partition name, e.g. stem')
    data.add_argument('--clusters', type=int, help='Synthetic clusters')
    data.add_argument('--per-cluster', type=int, help='Synthetic images per cluster')
    data.add_argument('--size', type=int, help='Synthetic image side')
    data.add_argument('--noise', type=float, help='Synthetic noise level')
    data.add_argument('--texture', type=float, help='Synthetic lattice texture amplitude')

    vae = parser.add_argument_group('vae')
    vae.add_argument('--loss-mode', choices=cfg.LOSS_MODES, help='VAE loss')
    vae.add_argument('--iterations', type=int, help='Training iterations T')
    vae.add_argument('--batch', type=int, help='Batch size B')
    vae.add_argument('--no-blur', action='store_true', help='Do not blur training images')
    vae.add_argument('--no-blur-at-encode', action='store_true',
                     help='Encode unblurred images even when training blurs them')
    vae.add_argument('--precision', choices=sorted(core.PRECISIONS), help='Numeric precision')

    embed = parser.add_argument_group('embedding')
    embed.add_argument('--embed-source', choices=cfg.EMBED_SOURCES, help='tSNE input: VAE latents or PCA scores')
    embed.add_argument('--perplexity', type=float, help='tSNE perplexity. Default is N^(1/2)')
    embed.add_argument('--tsne-iterations', type=int, help='tSNE iterations')
    embed.add_argument('--sigma-mode', choices=cfg.SIGMA_MODES,
                       help="Weight distances by sigma or not. The default 'with-sigma' needs VAE latents and "
                            "rejects plain features. PCA scores are always embedded 'without-sigma'")
    embed.add_argument('--q-normalization', choices=cfg.Q_NORMALIZATIONS, help='Student-t normalization')
    embed.add_argument('--components', type=int, help='PCA components')

    render = parser.add_argument_group('render')
    render.add_argument('--thumbnails', type=int, help='Thumbnails drawn on the map')
    render.add_argument('--png', action='store_true', help='Also write a raster map.png preview')

    parser.add_argument('--stages', help='Comma separated stages for the pipeline verb')
    parser.add_argument('--presets', help='Comma separated presets for compare: {}'.format(','.join(PRESETS)))
    return parser


def _set(record, **changes):
    changes = {k: v for k, v in changes.items() if v is not None}
    return dataclasses.replace(record, **changes) if changes else record


def config_from_options(options) -> PipelineConfig:
    if options.config:
        config = PipelineConfig.load(options.config)
    elif options.benchmark:
        config = cfg.benchmark_config(0 if options.seed is None else options.seed)
    else:
        config = PipelineConfig()
    top = dict(output_dir=options.output_dir, seed=options.seed, partition=options.partition,
               embed_source=options.embed_source, precision=options.precision)
    if options.dataset:
        top.update(source='external', dataset_path=options.dataset)
    if options.no_blur_at_encode:
        top['blur_at_encode'] = False
    if options.stages:
        top['stages'] = tuple(s.strip() for s in options.stages.split(',') if s.strip())
    config = _set(config, **top)

    config.synth = _set(config.synth, clusters=options.clusters, per_cluster=options.per_cluster,
                        size=options.size, noise=options.noise, texture=options.texture)
    config.loss = _set(config.loss, mode=options.loss_mode)
    config.schedule = _set(config.schedule, total=options.iterations, batch=options.batch,
                           blur=False if options.no_blur else None)
    config.tsne = _set(config.tsne, perplexity=options.perplexity, iterations=options.tsne_iterations,
                       sigma_mode=options.sigma_mode, q_normalization=options.q_normalization)
    config.pca = _set(config.pca, components=options.components)
    config.scatter = _set(config.scatter, thumbnails=options.thumbnails, png_preview=True if options.png else None)
    config.validate()
    return config


def _lookup(record, dotted: str):
    for part in dotted.split('.'):
        record = getattr(record, part)
    return record


def run(options) -> None:
    config = config_from_options(options)
    core.init(config.precision)
    if cfg.__DEBUG__:
        for name, origin in sorted(cfg.default_provenance(config).items()):
            log('{} = {!r} ({})'.format(name, _lookup(config, name), origin), LogLevel.DEBUG)

    if options.verb == 'pipeline':
        if options.seed is None:
            raise ConfigError('--seed is mandatory for pipeline runs')
        root = run_pipeline(config, progress=options.progress)
        log('Artifacts written to {}'.format(root))
    elif options.verb == 'compare':
        if options.seed is None:
            raise ConfigError('--seed is mandatory for compare runs')
        presets = [p.strip() for p in options.presets.split(',')] if options.presets else None
        compare(config, presets, progress=options.progress)
    else:
        if config.seed is None:
            config = dataclasses.replace(config, seed=0)
        stage = Run(config, progress=options.progress)
        getattr(stage, options.verb)()
        stage.write_manifest()
        log("Stage '{}' done in {}".format(options.verb, stage.root))


def main(argv=None) -> int:
    options = build_parser().parse_args(argv)
    cfg.__DEBUG__ = options.debug
    set_log_level(LogLevel.DEBUG if options.debug else LogLevel.INFO)

    try:
        try:
            run(options)
        except OSError as e:
            raise InputFileError(e) from e
    except LatentMapError as e:
        log(str(e), LogLevel.ERROR)
        return e.exit_code
    return 0


if __name__ == '__main__':
    sys.exit(main())
