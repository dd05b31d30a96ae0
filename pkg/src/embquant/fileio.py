"""Binary containers for float tables (EMBT) and quantized tables (EMBQ).

All multi-byte integers are little-endian; fp16 auxiliaries are IEEE-754
binary16. Headers are validated before any payload is touched, and every
failure mode gets its own diagnostic. Container headers are excluded from all
size-ratio accounting.
"""

from __future__ import annotations

import struct

import numpy as np

from .codebook import CODEBOOK_SIZE, CodebookQuantTable, TwoTierQuantTable
from .packed import PackedTable4, pack_table4, packed_row_stride
from .table import EmbeddingTable
from .uniform import AUX_PRECISIONS, UniformQuantTable, aux_bytes

__all__ = ["DataError", "read_embt", "write_embt", "read_embq", "write_embq"]

_EMBT_MAGIC = b"EMBT"
_EMBQ_MAGIC = b"EMBQ"
_VERSION = 1

_EMBT_HEADER = struct.Struct("<4sIQQB")
_EMBQ_HEADER = struct.Struct("<4sIBBQQ")

_SCHEME_CODES = {"uniform4": 0, "uniform8": 1, "kmeans_row": 2, "kmeans_cls": 3}
_SCHEME_NAMES = {v: k for k, v in _SCHEME_CODES.items()}
_AUX_CODES = {"fp32": 0, "fp16": 1}
_AUX_NAMES = {v: k for k, v in _AUX_CODES.items()}
_AUX_NP = {"fp32": "<f4", "fp16": "<f2"}


class DataError(ValueError):
    """Malformed or inconsistent data file (CLI exit code 2)."""


def write_embt(path, table: EmbeddingTable) -> None:
    header = _EMBT_HEADER.pack(_EMBT_MAGIC, _VERSION, table.rows, table.dim, 0)
    payload = np.ascontiguousarray(table.values, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def read_embt(path) -> EmbeddingTable:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _EMBT_HEADER.size:
        raise DataError(f"{path}: truncated header ({len(blob)} bytes)")
    magic, version, rows, dim, dtype = _EMBT_HEADER.unpack_from(blob)
    if magic != _EMBT_MAGIC:
        raise DataError(f"{path}: bad magic {magic!r}")
    if version != _VERSION:
        raise DataError(f"{path}: unsupported version {version}")
    if dtype != 0:
        raise DataError(f"{path}: unsupported dtype code {dtype}")
    if rows < 1 or dim < 1:
        raise DataError(f"{path}: invalid shape {rows}x{dim}")
    expected = rows * dim * 4
    payload = blob[_EMBT_HEADER.size :]
    if len(payload) != expected:
        raise DataError(f"{path}: truncated payload ({len(payload)} of {expected} bytes)")
    values = np.frombuffer(payload, dtype="<f4").reshape(rows, dim)
    if not np.all(np.isfinite(values)):
        raise DataError(f"{path}: payload contains non-finite values")
    return EmbeddingTable(values)


def _pack_nibbles(indices: np.ndarray) -> np.ndarray:
    n, d = indices.shape
    if d % 2:
        indices = np.concatenate([indices, np.zeros((n, 1), dtype=np.uint8)], axis=1)
    return (indices[:, 0::2] | (indices[:, 1::2] << 4)).astype(np.uint8)


def _unpack_nibbles(packed: np.ndarray, dim: int) -> np.ndarray:
    n = packed.shape[0]
    out = np.empty((n, 2 * packed.shape[1]), dtype=np.uint8)
    out[:, 0::2] = packed & 0x0F
    out[:, 1::2] = packed >> 4
    return out[:, :dim]


def _embq_header(scheme: str, aux: str, rows: int, dim: int, k: int | None = None) -> bytes:
    head = _EMBQ_HEADER.pack(_EMBQ_MAGIC, _VERSION, _SCHEME_CODES[scheme], _AUX_CODES[aux], rows, dim)
    if scheme == "kmeans_cls":
        head += struct.pack("<I", k)
    return head


def write_embq(path, quant) -> None:
    """Serialize a quantized table; the concrete layout follows the object type."""
    if isinstance(quant, UniformQuantTable) and quant.nbits == 4:
        quant = pack_table4(quant)
    if isinstance(quant, PackedTable4):
        head = _embq_header("uniform4", quant.aux_precision, quant.rows, quant.dim)
        payload = quant.tobytes()
    elif isinstance(quant, UniformQuantTable):
        aux_np = _AUX_NP[quant.aux_precision]
        scales = np.ascontiguousarray(quant.scales.astype(aux_np)).view(np.uint8).reshape(quant.rows, -1)
        biases = np.ascontiguousarray(quant.biases.astype(aux_np)).view(np.uint8).reshape(quant.rows, -1)
        fused = np.concatenate([quant.codes, scales, biases], axis=1)
        head = _embq_header("uniform8", quant.aux_precision, quant.rows, quant.dim)
        payload = fused.tobytes()
    elif isinstance(quant, CodebookQuantTable):
        aux_np = _AUX_NP[quant.aux_precision]
        books = np.ascontiguousarray(quant.codebooks.astype(aux_np)).view(np.uint8).reshape(quant.rows, -1)
        nibbles = _pack_nibbles(quant.indices)
        fused = np.concatenate([books, nibbles], axis=1)
        head = _embq_header("kmeans_row", quant.aux_precision, quant.rows, quant.dim)
        payload = fused.tobytes()
    elif isinstance(quant, TwoTierQuantTable):
        aux_np = _AUX_NP[quant.aux_precision]
        head = _embq_header("kmeans_cls", quant.aux_precision, quant.rows, quant.dim, quant.k)
        payload = (
            np.ascontiguousarray(quant.assignments.astype("<u4")).tobytes()
            + np.ascontiguousarray(quant.block_codebooks.astype(aux_np)).tobytes()
            + _pack_nibbles(quant.indices).tobytes()
        )
    else:
        raise TypeError(f"cannot serialize {type(quant).__name__}")
    with open(path, "wb") as fh:
        fh.write(head)
        fh.write(payload)


def read_embq(path):
    """Load a quantized-table container; returns the matching in-memory object."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _EMBQ_HEADER.size:
        raise DataError(f"{path}: truncated header ({len(blob)} bytes)")
    magic, version, scheme_code, aux_code, rows, dim = _EMBQ_HEADER.unpack_from(blob)
    if magic != _EMBQ_MAGIC:
        raise DataError(f"{path}: bad magic {magic!r}")
    if version != _VERSION:
        raise DataError(f"{path}: unsupported version {version}")
    if scheme_code not in _SCHEME_NAMES:
        raise DataError(f"{path}: unknown scheme code {scheme_code}")
    if aux_code not in _AUX_NAMES:
        raise DataError(f"{path}: unknown aux code {aux_code}")
    if rows < 1 or dim < 1:
        raise DataError(f"{path}: invalid shape {rows}x{dim}")
    scheme = _SCHEME_NAMES[scheme_code]
    aux = _AUX_NAMES[aux_code]
    ab = aux_bytes(aux)
    aux_np = _AUX_NP[aux]
    offset = _EMBQ_HEADER.size
    half = (dim + 1) // 2

    def expect(nbytes: int, label: str) -> bytes:
        if len(blob) - offset < nbytes:
            raise DataError(f"{path}: truncated payload ({label})")
        return blob[offset : offset + nbytes]

    if scheme == "uniform4":
        payload = expect(rows * packed_row_stride(dim, aux), "packed rows")
        if len(blob) - offset != rows * packed_row_stride(dim, aux):
            raise DataError(f"{path}: payload size mismatch")
        return PackedTable4(rows, dim, aux, np.frombuffer(payload, dtype=np.uint8).copy())
    if scheme == "uniform8":
        stride = dim + 2 * ab
        payload = expect(rows * stride, "fused rows")
        if len(blob) - offset != rows * stride:
            raise DataError(f"{path}: payload size mismatch")
        fused = np.frombuffer(payload, dtype=np.uint8).reshape(rows, stride)
        codes = fused[:, :dim].copy()
        scales = np.ascontiguousarray(fused[:, dim : dim + ab]).view(aux_np).ravel()
        biases = np.ascontiguousarray(fused[:, dim + ab :]).view(aux_np).ravel()
        return UniformQuantTable(codes, scales.copy(), biases.copy(), 8, aux)
    if scheme == "kmeans_row":
        stride = CODEBOOK_SIZE * ab + half
        payload = expect(rows * stride, "codebook rows")
        if len(blob) - offset != rows * stride:
            raise DataError(f"{path}: payload size mismatch")
        fused = np.frombuffer(payload, dtype=np.uint8).reshape(rows, stride)
        books = np.ascontiguousarray(fused[:, : CODEBOOK_SIZE * ab]).view(aux_np).reshape(rows, CODEBOOK_SIZE)
        indices = _unpack_nibbles(fused[:, CODEBOOK_SIZE * ab :], dim)
        return CodebookQuantTable(books.copy(), indices.copy(), aux)
    # kmeans_cls
    (k_value,) = struct.unpack_from("<I", expect(4, "cluster count"))
    offset += 4
    assign_bytes = expect(rows * 4, "assignments")
    offset += rows * 4
    assignments = np.frombuffer(assign_bytes, dtype="<u4").astype(np.int64)
    if assignments.size and int(assignments.max()) >= k_value:
        raise DataError(f"{path}: assignment exceeds cluster count {k_value}")
    book_bytes = expect(k_value * CODEBOOK_SIZE * ab, "block codebooks")
    offset += k_value * CODEBOOK_SIZE * ab
    books = np.frombuffer(book_bytes, dtype=aux_np).reshape(k_value, CODEBOOK_SIZE)
    nib_bytes = expect(rows * half, "indices")
    offset += rows * half
    if len(blob) != offset:
        raise DataError(f"{path}: payload size mismatch")
    nibbles = np.frombuffer(nib_bytes, dtype=np.uint8).reshape(rows, half)
    indices = _unpack_nibbles(nibbles, dim)
    return TwoTierQuantTable(int(k_value), assignments, books.copy(), indices.copy(), aux)
