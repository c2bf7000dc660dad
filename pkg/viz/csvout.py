# -*- coding: utf-8 -*-

import csv
import io
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from embed.tsne import Embedding
from errors import HeaderError

# Perplexity achieved by each row's calibrated alpha
PERPLEXITY_COLUMN = 'final-row-perplexity'


def _fmt(v: float) -> str:
    return repr(float(v))


def emit_embedding_csv(embedding: Embedding, labels: Optional[Sequence[int]] = None) -> str:
    """ Columns: index, y1..yv, alpha, final-row-perplexity and, when labels
    are given, label.
    """
    n, v = embedding.y.shape
    header = ['index'] + ['y{}'.format(d + 1) for d in range(v)] + ['alpha', PERPLEXITY_COLUMN]
    if labels is not None:
        header.append('label')
    alphas = embedding.alphas if embedding.alphas is not None else np.full(n, np.nan)
    perplexities = embedding.perplexities if embedding.perplexities is not None else np.full(n, np.nan)

    out = io.StringIO()
    writer = csv.writer(out, lineterminator='\n')
    writer.writerow(header)
    for i in range(n):
        row = [i] + [_fmt(c) for c in embedding.y[i]] + [_fmt(alphas[i]), _fmt(perplexities[i])]
        if labels is not None:
            row.append(int(labels[i]))
        writer.writerow(row)
    return out.getvalue()


def read_embedding_csv(text: str) -> Dict[str, np.ndarray]:
    """ Parses emit_embedding_csv output into 'y', 'alpha', 'perplexity' and,
    if present, 'label' arrays.
    """
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0][0] != 'index':
        raise HeaderError('Not an embedding CSV: header {!r}'.format(rows[0] if rows else None))
    header, body = rows[0], rows[1:]
    y_columns = [i for i, name in enumerate(header) if name.startswith('y')]
    result = {
        'y': np.array([[float(r[i]) for i in y_columns] for r in body]).reshape(len(body), len(y_columns)),
        'alpha': np.array([float(r[header.index('alpha')]) for r in body]),
        'perplexity': np.array([float(r[header.index(PERPLEXITY_COLUMN)]) for r in body]),
    }
    if 'label' in header:
        result['label'] = np.array([int(r[header.index('label')]) for r in body], dtype=np.int64)
    return result


def emit_kl_trace(trace: List[Tuple[int, float]]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator='\n')
    writer.writerow(['iteration', 'kl'])
    for iteration, kl in trace:
        writer.writerow([int(iteration), _fmt(kl)])
    return out.getvalue()


def write_text(path, text: str) -> None:
    with open(path, 'w', encoding='utf-8', newline='') as f:
        f.write(text)
