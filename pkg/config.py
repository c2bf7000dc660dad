# -*- coding: utf-8 -*-

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Optional, Tuple, Dict, Any

os.environ.setdefault('PYGAME_HIDE_SUPPORT_PROMPT', '1')
from pygame import Color

from errors import ConfigError

__doc__ = """ Centralizes all global configuration flags and hyperparameter records """

# Debug FLAG
__DEBUG__ = False

# Provenance tags of default values
PUBLISHED = 'published'  # value taken from the published method
ARTIFACT = 'artifact'  # decision of this implementation

### VAE ###
IMAGE_SIDE = 96
IMAGE_CHANNELS = 1
LATENT_SIZE = 64
ENCODER_CHANNELS = (32, 64, 128)
KERNEL_SIZE = 3

# Loss modes
MODE_TRADITIONAL = 'traditional'
MODE_NORMALIZED = 'normalized'
MODE_FULL = 'normalized+sobel'
LOSS_MODES = (MODE_TRADITIONAL, MODE_NORMALIZED, MODE_FULL)

LAMBDA_MSE = 50.0
LAMBDA_SOBEL = 50.0
LAMBDA_MU = 2.5
EPSILON_BN = 1e-8

# Batch normalization layers
BN_EPSILON = 1e-5
BN_MOMENTUM = 0.9

### Optimizer schedule ###
ETA_START = 0.001
BETA_START = 0.9
LR_BASE = 0.5
LR_STEPS = 8
TOTAL_ITERATIONS = 600000
BATCH_SIZE = 64
ADAM_BETA2 = 0.999
ADAM_EPSILON = 1e-8
CHECKPOINT_EVERY = 10000

### Preprocessing ###
BLUR_SIZE = 5
BLUR_STD = 2.5

### tSNE ###
TSNE_ITERATIONS = 10000
TSNE_DIMS = 2
EPSILON_W = 0.01
SIGMA_MODES = ('with-sigma', 'without-sigma')
Q_NORMALIZATIONS = ('row', 'matrix')
EXAGGERATION = 12.0
EXAGGERATION_ITERS = 250
MOMENTUM = 0.5
FINAL_MOMENTUM = 0.8
MOMENTUM_SWITCH = 250
TSNE_LEARNING_RATE = 200.0
TSNE_INIT_STD = 1e-4
KL_EVERY = 50
MIN_GAIN = 0.01
PERPLEXITY_TOL = 1e-5
CALIBRATION_MAX_ITER = 200
Q_FLOOR = 1e-12

### PCA ###
PCA_COMPONENTS = 50

### Rendering ###
THUMBNAILS = 500
THUMBNAIL_SIDE = 24
CANVAS_SIZE = 800
CANVAS_MARGIN = 20
POINT_RADIUS = 2.0

### COLORS ###
BACKGROUND_COLOR = Color(255, 255, 255)
POINT_COLOR = Color(60, 70, 80)  # Unlabelled points
POINT_BORDER_COLOR = Color(255, 255, 255)
THUMBNAIL_BORDER_COLOR = Color(120, 130, 140)
LABEL_COLORS = [
    Color(220, 80, 80),  # red
    Color(80, 120, 220),  # blue
    Color(120, 200, 180),  # cyan
    Color(230, 160, 60),  # orange
    Color(150, 90, 200),  # purple
    Color(90, 170, 90),  # green
]

### Pipeline ###
STAGES = ('synth', 'preprocess', 'train', 'encode', 'pca', 'tsne', 'render')
EMBED_SOURCES = ('vae', 'pca')

# Gradient checker
GRADCHECK_STEP = 1e-6
GRADCHECK_MAX_PARAMS = 20000
GRADCHECK_NOISE = 1e3  # rounding error of one loss evaluation, in units of eps * |loss|


def _f(default, provenance: str):
    return field(default=default, metadata={'provenance': provenance})


def _check(condition: bool, msg: str, *args) -> None:
    if not condition:
        raise ConfigError(msg.format(*args))


@dataclass
class Architecture:
    """ Encoder/generator layout. Layer counts and channel widths are
    configuration.
    """
    side: int = _f(IMAGE_SIDE, PUBLISHED)
    channels: int = _f(IMAGE_CHANNELS, PUBLISHED)
    latent: int = _f(LATENT_SIZE, PUBLISHED)
    encoder_channels: Tuple[int, ...] = _f(ENCODER_CHANNELS, ARTIFACT)
    kernel: int = _f(KERNEL_SIZE, ARTIFACT)

    def validate(self) -> None:
        _check(self.latent >= 1, 'latent size must be >= 1, got {}', self.latent)
        _check(self.channels >= 1, 'image channels must be >= 1, got {}', self.channels)
        _check(len(self.encoder_channels) >= 1, 'at least one encoder block is needed')
        _check(all(c >= 1 for c in self.encoder_channels), 'encoder channels must be >= 1: {}', self.encoder_channels)
        _check(self.kernel >= 1 and self.kernel % 2 == 1, 'kernel extent must be odd and >= 1, got {}', self.kernel)
        factor = 2 ** len(self.encoder_channels)
        _check(self.side % factor == 0, 'image side {} must be divisible by {} for {} stride-2 blocks',
               self.side, factor, len(self.encoder_channels))

    @property
    def bottleneck_side(self) -> int:
        return self.side >> len(self.encoder_channels)


@dataclass
class VaeLossConfig:
    mode: str = _f(MODE_FULL, PUBLISHED)
    lambda_mse: float = _f(LAMBDA_MSE, PUBLISHED)
    lambda_sobel: float = _f(LAMBDA_SOBEL, PUBLISHED)
    lambda_mu: float = _f(LAMBDA_MU, PUBLISHED)
    epsilon_bn: float = _f(EPSILON_BN, ARTIFACT)

    def validate(self) -> None:
        _check(self.mode in LOSS_MODES, "loss mode '{}' not in {}", self.mode, LOSS_MODES)
        _check(self.lambda_mse >= 0, 'lambda_mse must be >= 0')
        _check(self.lambda_sobel >= 0, 'lambda_sobel must be >= 0')
        _check(self.lambda_mu > 0, 'lambda_mu must be > 0')
        _check(self.epsilon_bn > 0, 'epsilon_bn must be > 0')

    @property
    def normalized(self) -> bool:
        return self.mode != MODE_TRADITIONAL


@dataclass
class TrainSchedule:
    eta_start: float = _f(ETA_START, PUBLISHED)
    beta_start: float = _f(BETA_START, PUBLISHED)
    a: float = _f(LR_BASE, PUBLISHED)
    b: int = _f(LR_STEPS, PUBLISHED)
    total: int = _f(TOTAL_ITERATIONS, PUBLISHED)
    batch: int = _f(BATCH_SIZE, PUBLISHED)
    beta2: float = _f(ADAM_BETA2, ARTIFACT)
    epsilon: float = _f(ADAM_EPSILON, ARTIFACT)
    checkpoint_every: int = _f(CHECKPOINT_EVERY, ARTIFACT)
    blur: bool = _f(True, PUBLISHED)
    blur_std: float = _f(BLUR_STD, PUBLISHED)

    def validate(self) -> None:
        _check(self.eta_start > 0, 'eta_start must be > 0')
        _check(0 < self.beta_start < 1, 'beta_start must be in (0, 1)')
        _check(0 < self.a < 1, 'learning rate base a must be in (0, 1)')
        _check(self.b >= 1, 'learning rate steps b must be >= 1')
        _check(self.total >= 1, 'total iterations T must be >= 1')
        _check(self.batch >= 1, 'batch size must be >= 1')
        _check(0 <= self.beta2 < 1, 'ADAM beta2 must be in [0, 1)')
        _check(self.epsilon > 0, 'ADAM epsilon must be > 0')
        _check(self.checkpoint_every >= 0, 'checkpoint interval must be >= 0')


@dataclass
class TsneConfig:
    perplexity: Optional[float] = _f(None, PUBLISHED)  # None means N^(1/2)
    iterations: int = _f(TSNE_ITERATIONS, PUBLISHED)
    dims: int = _f(TSNE_DIMS, PUBLISHED)
    epsilon_w: float = _f(EPSILON_W, PUBLISHED)
    sigma_mode: str = _f('with-sigma', PUBLISHED)
    q_normalization: str = _f('row', PUBLISHED)
    exaggeration: float = _f(EXAGGERATION, ARTIFACT)
    exaggeration_iters: int = _f(EXAGGERATION_ITERS, ARTIFACT)
    momentum: float = _f(MOMENTUM, ARTIFACT)
    final_momentum: float = _f(FINAL_MOMENTUM, ARTIFACT)
    momentum_switch: int = _f(MOMENTUM_SWITCH, ARTIFACT)
    learning_rate: float = _f(TSNE_LEARNING_RATE, ARTIFACT)
    init_std: float = _f(TSNE_INIT_STD, ARTIFACT)
    kl_every: int = _f(KL_EVERY, ARTIFACT)
    use_gains: bool = _f(True, ARTIFACT)
    min_gain: float = _f(MIN_GAIN, ARTIFACT)
    perplexity_tol: float = _f(PERPLEXITY_TOL, ARTIFACT)
    calibration_max_iter: int = _f(CALIBRATION_MAX_ITER, ARTIFACT)
    seed: int = _f(0, ARTIFACT)

    def validate(self) -> None:
        _check(self.perplexity is None or self.perplexity > 1, 'perplexity must be > 1, got {}', self.perplexity)
        _check(self.iterations >= 1, 'tSNE iterations must be >= 1')
        _check(self.dims >= 1, 'output dims must be >= 1')
        _check(self.epsilon_w > 0, 'epsilon_w must be > 0')
        _check(self.sigma_mode in SIGMA_MODES, "sigma mode '{}' not in {}", self.sigma_mode, SIGMA_MODES)
        _check(self.q_normalization in Q_NORMALIZATIONS, "Q normalization '{}' not in {}",
               self.q_normalization, Q_NORMALIZATIONS)
        _check(self.learning_rate > 0, 'tSNE learning rate must be > 0')
        _check(self.kl_every >= 1, 'kl_every must be >= 1')
        _check(self.perplexity_tol > 0, 'perplexity tolerance must be > 0')

    def resolve_perplexity(self, n: int) -> float:
        """ Perplexity for n points: the configured value, or N^(1/2)
        rounded to the nearest integer and floored at 2.
        """
        perplexity = self.perplexity
        if perplexity is None:
            perplexity = float(max(2, int(round(n ** 0.5))))
        _check(perplexity < n, 'perplexity {} must be smaller than the number of points {}', perplexity, n)
        return perplexity


@dataclass
class PcaSettings:
    components: int = _f(PCA_COMPONENTS, PUBLISHED)

    def validate(self) -> None:
        _check(self.components >= 1, 'PCA components must be >= 1')


@dataclass
class SynthSettings:
    clusters: int = _f(3, ARTIFACT)
    per_cluster: int = _f(100, ARTIFACT)
    size: int = _f(16, ARTIFACT)
    noise: float = _f(0.1, ARTIFACT)
    texture: float = _f(0.6, ARTIFACT)  # amplitude of the fine lattice texture
    jitter: bool = _f(True, ARTIFACT)

    def validate(self) -> None:
        _check(self.clusters >= 1, 'cluster count must be >= 1')
        _check(self.per_cluster >= 1, 'images per cluster must be >= 1')
        _check(self.size >= 8, 'synthetic image size must be >= 8, got {}', self.size)
        _check(self.noise >= 0, 'noise level must be >= 0')
        _check(self.texture >= 0, 'texture amplitude must be >= 0')


@dataclass
class ScatterSpec:
    radius: float = _f(POINT_RADIUS, ARTIFACT)
    canvas: int = _f(CANVAS_SIZE, ARTIFACT)
    margin: int = _f(CANVAS_MARGIN, ARTIFACT)
    thumbnails: int = _f(THUMBNAILS, PUBLISHED)
    thumbnail_side: int = _f(THUMBNAIL_SIDE, ARTIFACT)
    seed: int = _f(0, ARTIFACT)
    png_preview: bool = _f(False, ARTIFACT)

    def validate(self) -> None:
        _check(self.radius > 0, 'point radius must be > 0')
        _check(self.canvas > 2 * self.margin, 'canvas must be larger than twice the margin')
        _check(self.thumbnails >= 0, 'thumbnail count must be >= 0')
        _check(self.thumbnail_side >= 1, 'thumbnail side must be >= 1')


@dataclass
class PipelineConfig:
    stages: Tuple[str, ...] = _f(('synth', 'preprocess', 'train', 'encode', 'tsne', 'render'), ARTIFACT)
    source: str = _f('synthetic', ARTIFACT)  # 'synthetic' or 'external'
    dataset_path: Optional[str] = _f(None, ARTIFACT)
    partition: Optional[str] = _f(None, PUBLISHED)  # name in dataio.dataset.KNOWN_PARTITIONS
    fractions: Tuple[float, float] = _f((0.8, 0.9), ARTIFACT)
    embed_source: str = _f('vae', PUBLISHED)
    blur_at_encode: bool = _f(True, ARTIFACT)  # encode with the training blur
    precision: str = _f('float64', ARTIFACT)
    output_dir: str = _f('out', ARTIFACT)
    seed: Optional[int] = _f(None, ARTIFACT)
    arch: Architecture = field(default_factory=Architecture, metadata={'provenance': ARTIFACT})
    loss: VaeLossConfig = field(default_factory=VaeLossConfig, metadata={'provenance': PUBLISHED})
    schedule: TrainSchedule = field(default_factory=TrainSchedule, metadata={'provenance': PUBLISHED})
    tsne: TsneConfig = field(default_factory=TsneConfig, metadata={'provenance': PUBLISHED})
    pca: PcaSettings = field(default_factory=PcaSettings, metadata={'provenance': PUBLISHED})
    synth: SynthSettings = field(default_factory=SynthSettings, metadata={'provenance': ARTIFACT})
    scatter: ScatterSpec = field(default_factory=ScatterSpec, metadata={'provenance': ARTIFACT})

    def validate(self) -> None:
        for stage in self.stages:
            _check(stage in STAGES, "unknown stage '{}'. Stages are {}", stage, STAGES)
        _check(self.source in ('synthetic', 'external'), "source must be 'synthetic' or 'external'")
        _check(self.source != 'external' or self.dataset_path, 'external source needs dataset_path')
        _check(self.embed_source in EMBED_SOURCES, "embed source '{}' not in {}", self.embed_source, EMBED_SOURCES)
        _check(self.precision in ('float64', 'float32'), "precision '{}' not supported", self.precision)
        _check(len(self.fractions) == 2 and 0 <= self.fractions[0] <= self.fractions[1] <= 1,
               'fractions must be two ordered values in [0, 1], got {}', self.fractions)
        for record in (self.arch, self.loss, self.schedule, self.tsne, self.pca, self.synth, self.scatter):
            record.validate()

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'PipelineConfig':
        return _from_dict(cls, data)

    def save(self, path) -> None:
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            f.write(self.to_json() + '\n')

    @classmethod
    def load(cls, path) -> 'PipelineConfig':
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except (OSError, ValueError) as e:
            raise ConfigError('Could not read config file {}: {}'.format(path, e))
        return cls.from_dict(data)

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode('utf-8')).hexdigest()


def _from_dict(cls, data: Dict[str, Any]):
    """ Builds a dataclass record from its dict form, restoring nested records
    and tuples so that the round trip is exact.
    """
    if not isinstance(data, dict):
        raise ConfigError('{} expects a mapping, got {!r}'.format(cls.__name__, data))
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigError('Unknown {} fields: {}'.format(cls.__name__, ', '.join(sorted(unknown))))

    defaults = cls()
    kwargs = {}
    for name, value in data.items():
        default = getattr(defaults, name)
        if dataclasses.is_dataclass(default):
            value = _from_dict(type(default), value)
        elif isinstance(default, tuple) and isinstance(value, list):
            value = tuple(value)
        kwargs[name] = value
    return cls(**kwargs)


# Small synthetic run that finishes in minutes on a desktop CPU
BENCHMARK_CHANNELS = (8, 16)
BENCHMARK_LATENT = 2
BENCHMARK_ITERATIONS = 2000
BENCHMARK_BATCH = 32


def benchmark_config(seed: int, output_dir: str = None) -> PipelineConfig:
    """ Synthetic 3 x 100 images of 16 x 16 with a narrow encoder, 2 latent
    dimensions and 2000 training iterations. Everything else keeps its default.
    """
    config = PipelineConfig(
        seed=seed,
        arch=Architecture(side=16, latent=BENCHMARK_LATENT, encoder_channels=BENCHMARK_CHANNELS),
        schedule=TrainSchedule(total=BENCHMARK_ITERATIONS, batch=BENCHMARK_BATCH),
        synth=SynthSettings(clusters=3, per_cluster=100, size=16),
    )
    if output_dir is not None:
        config.output_dir = output_dir
    return config


def default_provenance(record, prefix: str = '') -> Dict[str, str]:
    """ Returns {dotted field name: 'published' | 'artifact'} for every field of
    the record, walking nested records.
    """
    result = {}
    for f in dataclasses.fields(record):
        name = prefix + f.name
        value = getattr(record, f.name)
        if dataclasses.is_dataclass(value):
            result.update(default_provenance(value, name + '.'))
        else:
            result[name] = f.metadata.get('provenance', ARTIFACT)
    return result


def color_hex(color: Color) -> str:
    return '#{:02x}{:02x}{:02x}'.format(color.r, color.g, color.b)


def label_color(label) -> Color:
    if label is None:
        return POINT_COLOR
    return LABEL_COLORS[int(label) % len(LABEL_COLORS)]
