# -*- coding: utf-8 -*-

import json
import os
import shutil
from typing import Tuple

import core
from dataio.npy import read_array, write_array
from errors import HeaderError, DimensionError
from helpers import log

from .model import VaeModel
from .optim import AdamMoments

__doc__ = """ Checkpoint files: magic + version line, one JSON index line, then one
array record per entry listed in the index (parameters, batch-norm buffers,
ADAM moments), all in a fixed order so equal states give equal bytes """

MAGIC = b'LMCKPT'
VERSION = 1


def save_checkpoint(path, model: VaeModel, moments: AdamMoments, config_hash: str = '') -> None:
    params = model.parameters()
    buffers = model.buffers()
    index = {
        'version': VERSION,
        'iteration': model.iteration,
        'config_hash': config_hash,
        'precision': core.PRECISION,
        'beta1_product': moments.beta1_product,
        'parameters': [name for name, _ in params],
        'buffers': [name for name, _ in buffers],
        'moments': len(moments.m),
    }
    arrays = [p for _, p in params] + [b for _, b in buffers] + list(moments.m) + list(moments.v)

    tempname = str(path) + '.tmp'
    with open(tempname, 'wb') as f:
        f.write(MAGIC + bytes([VERSION]) + b'\n')
        f.write(json.dumps(index, sort_keys=True).encode('utf-8') + b'\n')
        for array in arrays:
            write_array(f, array)
    shutil.move(tempname, str(path))    # atomic commit
    log('Checkpoint at iteration {} written to {}'.format(model.iteration, path))


def load_checkpoint(path, model: VaeModel) -> Tuple[AdamMoments, str]:
    """ Restores parameters, buffers and iteration into model.
    Returns (ADAM moments, config hash).
    """
    with open(path, 'rb') as f:
        head = f.readline()
        if head[:len(MAGIC)] != MAGIC:
            raise HeaderError('{} is not a checkpoint file'.format(path))
        if len(head) <= len(MAGIC):
            raise HeaderError('{}: checkpoint header is truncated'.format(path))
        if head[len(MAGIC)] != VERSION:
            raise HeaderError('{}: unsupported checkpoint version {}'.format(path, head[len(MAGIC)]))
        try:
            index = json.loads(f.readline().decode('utf-8'))
        except ValueError as e:
            raise HeaderError('{}: unreadable checkpoint index: {}'.format(path, e))

        params = model.parameters()
        if [name for name, _ in params] != index['parameters']:
            raise DimensionError('{}: checkpoint parameters do not match the model architecture'.format(path))
        for (name, p) in params:
            value = read_array(f)
            if value.shape != p.shape:
                raise DimensionError('{}: {} has shape {}, model expects {}'.format(path, name, value.shape, p.shape))
            p[...] = value
        for name in index['buffers']:
            model.set_buffer(name, read_array(f))
        m = [core.asarray(read_array(f)) for _ in range(index['moments'])]
        v = [core.asarray(read_array(f)) for _ in range(index['moments'])]

    model.iteration = int(index['iteration'])
    moments = AdamMoments(m, v, float(index['beta1_product']), model.iteration)
    return moments, index['config_hash']


def checkpoint_exists(path) -> bool:
    return os.path.isfile(str(path))


def checkpoint_hash(path) -> str:
    """ Config hash stored in a checkpoint, read from its index only.
    """
    with open(path, 'rb') as f:
        if f.readline()[:len(MAGIC)] != MAGIC:
            raise HeaderError('{} is not a checkpoint file'.format(path))
        return json.loads(f.readline().decode('utf-8'))['config_hash']
