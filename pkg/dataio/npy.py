# -*- coding: utf-8 -*-

import ast
import struct
from typing import BinaryIO

import numpy as np

from errors import HeaderError, UnsupportedOrderError, UnsupportedDtypeError, PayloadSizeError

__doc__ = """ Reader/writer of the NumPy .npy array container (format versions 1.0 and 2.0).

    magic    6 bytes  b'\\x93NUMPY'
    version  2 bytes  major, minor
    hlen     2 bytes (v1) or 4 bytes (v2), little endian
    header   hlen bytes: ASCII dict literal {'descr', 'fortran_order', 'shape'},
             space padded and newline terminated so the payload is 64-byte aligned
    payload  row-major elements
"""

MAGIC = b'\x93NUMPY'
ALIGNMENT = 64

# Supported element types (little endian only)
DTYPES = {
    '<f4': np.dtype('<f4'),
    '<f8': np.dtype('<f8'),
    '<i4': np.dtype('<i4'),
    '<i8': np.dtype('<i8'),
    '|u1': np.dtype('|u1'),
}


def _descr(dtype: np.dtype) -> str:
    descr = dtype.str
    if dtype.itemsize == 1:
        descr = '|' + descr[1:]
    elif descr[0] in '=|':
        descr = '<' + descr[1:]
    return descr


def _read_exact(fileobj: BinaryIO, size: int, what: str) -> bytes:
    data = fileobj.read(size)
    if len(data) != size:
        raise PayloadSizeError('Truncated {}: expected {} bytes, got {}'.format(what, size, len(data)))
    return data


def parse_header(fileobj: BinaryIO):
    """ Reads the preamble and header. Returns (dtype, shape, version).
    """
    magic = fileobj.read(len(MAGIC))
    if magic != MAGIC:
        raise HeaderError('Not an array container: bad magic {!r}'.format(magic))
    major, minor = struct.unpack('<BB', _read_exact(fileobj, 2, 'version'))
    if major == 1:
        hlen, = struct.unpack('<H', _read_exact(fileobj, 2, 'header length'))
    elif major in (2, 3):
        hlen, = struct.unpack('<I', _read_exact(fileobj, 4, 'header length'))
    else:
        raise HeaderError('Unsupported format version {}.{}'.format(major, minor))

    raw = _read_exact(fileobj, hlen, 'header')
    try:
        header = ast.literal_eval(raw.decode('utf-8' if major == 3 else 'latin1'))
    except (SyntaxError, ValueError) as e:
        raise HeaderError('Cannot parse header {!r}: {}'.format(raw, e))
    if not isinstance(header, dict) or set(header) != {'descr', 'fortran_order', 'shape'}:
        raise HeaderError('Header must hold exactly descr, fortran_order and shape: {!r}'.format(header))

    descr, fortran_order, shape = header['descr'], header['fortran_order'], header['shape']
    if fortran_order:
        raise UnsupportedOrderError('Column-major (fortran_order) arrays are not supported')
    if not isinstance(descr, str) or descr not in DTYPES:
        raise UnsupportedDtypeError(str(descr))
    if not isinstance(shape, tuple) or not all(isinstance(d, int) and d >= 0 for d in shape):
        raise HeaderError('Invalid shape {!r}'.format(shape))
    return DTYPES[descr], shape, (major, minor)


def read_array(fileobj: BinaryIO) -> np.ndarray:
    """ Reads one array record from an open binary file.
    """
    dtype, shape, _ = parse_header(fileobj)
    count = int(np.prod(shape, dtype=np.int64))
    payload = _read_exact(fileobj, count * dtype.itemsize, 'payload')
    return np.frombuffer(payload, dtype=dtype).reshape(shape).copy()


def write_array(fileobj: BinaryIO, array: np.ndarray) -> None:
    """ Writes one array record (row-major, little endian).
    """
    array = np.asarray(array)
    if array.dtype.byteorder == '>':
        array = array.astype(array.dtype.newbyteorder('<'))
    descr = _descr(array.dtype)
    if descr not in DTYPES:
        raise UnsupportedDtypeError(descr)
    array = np.ascontiguousarray(array)

    header = "{{'descr': '{}', 'fortran_order': False, 'shape': {}, }}".format(descr, repr(tuple(array.shape)))
    for version, len_format in (((1, 0), '<H'), ((2, 0), '<I')):
        preamble = len(MAGIC) + 2 + struct.calcsize(len_format)
        padding = -(preamble + len(header) + 1) % ALIGNMENT
        text = (header + ' ' * padding + '\n').encode('latin1')
        if len(text) < 2 ** (8 * struct.calcsize(len_format)):
            break
    fileobj.write(MAGIC)
    fileobj.write(struct.pack('<BB', *version))
    fileobj.write(struct.pack(len_format, len(text)))
    fileobj.write(text)
    fileobj.write(array.tobytes(order='C'))


def load_array_file(path) -> np.ndarray:
    with open(path, 'rb') as f:
        array = read_array(f)
        if f.read(1):
            raise PayloadSizeError('{}: unexpected data after the payload'.format(path))
    return array


def save_array_file(path, array: np.ndarray) -> None:
    with open(path, 'wb') as f:
        write_array(f, array)
