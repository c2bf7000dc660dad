# -*- coding: utf-8 -*-

from typing import List, Tuple, Iterable

import numpy as np

import core
from .layers import Layer, LayerSpec, build_layer


class Network:
    """ Sequential container of layers.
    """
    def __init__(self, layers: Iterable[Layer], name: str = 'network'):
        self.layers: List[Layer] = list(layers)
        self.name = name

    @classmethod
    def from_specs(cls, specs: Iterable[LayerSpec], rng: np.random.Generator = None, name: str = 'network'):
        rng = rng if rng is not None else np.random.default_rng(0)
        return cls([build_layer(spec, rng) for spec in specs], name=name)

    def __repr__(self):
        return '{}<{}>'.format(self.name, ' -> '.join(layer.kind for layer in self.layers))

    def __len__(self):
        return len(self.layers)

    def forward(self, x: np.ndarray, training: bool = True) -> np.ndarray:
        out = core.asarray(x)
        for layer in self.layers:
            out = layer.forward(out, training)
        return out

    def backward(self, dout: np.ndarray) -> np.ndarray:
        """ Backpropagates dout through every layer. Returns the input gradient;
        parameter gradients are left in each layer's grads.
        """
        for layer in reversed(self.layers):
            dout, _ = layer.backward(dout)
        return dout

    def _named(self, attr: str) -> List[Tuple[str, np.ndarray]]:
        result = []
        for i, layer in enumerate(self.layers):
            for key, value in getattr(layer, attr).items():
                result.append(('{}.{}.{}.{}'.format(self.name, i, layer.kind, key), value))
        return result

    def parameters(self) -> List[Tuple[str, np.ndarray]]:
        return self._named('params')

    def gradients(self) -> List[Tuple[str, np.ndarray]]:
        return self._named('grads')

    def buffers(self) -> List[Tuple[str, np.ndarray]]:
        return self._named('buffers')

    def set_buffer(self, name: str, value: np.ndarray) -> None:
        _, index, _, key = name.rsplit('.', 3)
        self.layers[int(index)].buffers[key] = core.asarray(value)

    def parameter_count(self) -> int:
        return sum(p.size for _, p in self.parameters())
