"""Binary containers: DMX1 (dense), VNM1 (compressed V:N:M) and MSK1 (mask).

All integers and floats are little-endian. Layouts::

    DMX1  magic | u32 rows | u32 cols | u8 dtype | payload (row-major)
    VNM1  magic | u32 version=1 | u32 r, k, v, n, m | u8 dtype
          | values | m_indices (4 codes/byte, code i in bits 2i..2i+1)
          | column_loc (u16)
    MSK1  magic | u32 rows | u32 cols | keep bits (row-major, LSB first)

dtype 0 stores values as float32, dtype 1 ("half-emulated") as float16.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .core import VnmConfig, VnmMatrix, as_dense, as_mask, round_half
from .errors import ContainerError, VnmError

DENSE_MAGIC = b"DMX1"
VNM_MAGIC = b"VNM1"
MASK_MAGIC = b"MSK1"
VNM_VERSION = 1

DTYPE_REAL32 = 0
DTYPE_HALF = 1
_FLOAT = {DTYPE_REAL32: np.dtype("<f4"), DTYPE_HALF: np.dtype("<f2")}


class _Reader:
    def __init__(self, buf: bytes, what: str):
        self.buf = memoryview(buf)
        self.pos = 0
        self.what = what

    def take(self, nbytes: int) -> memoryview:
        if self.pos + nbytes > len(self.buf):
            raise ContainerError(f"truncated {self.what} container")
        chunk = self.buf[self.pos:self.pos + nbytes]
        self.pos += nbytes
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def array(self, dtype, count: int) -> np.ndarray:
        dtype = np.dtype(dtype)
        return np.frombuffer(self.take(dtype.itemsize * count), dtype=dtype).copy()

    def magic(self, expected: bytes):
        got = bytes(self.take(4))
        if got != expected:
            raise ContainerError(f"bad magic {got!r}, expected {expected!r}")

    def finish(self):
        if self.pos != len(self.buf):
            raise ContainerError(f"{len(self.buf) - self.pos} trailing bytes in {self.what} container")


def _dtype_code(code: int) -> np.dtype:
    if code not in _FLOAT:
        raise ContainerError(f"unknown dtype code {code}")
    return _FLOAT[code]


def pack_codes(codes: np.ndarray) -> bytes:
    """Pack 2-bit codes four to a byte, code i of each quad in bits 2i..2i+1."""
    flat = np.asarray(codes, dtype=np.uint8).ravel()
    quads = np.zeros(-(-flat.size // 4) * 4, dtype=np.uint8)
    quads[:flat.size] = flat
    quads = quads.reshape(-1, 4)
    packed = quads[:, 0] | (quads[:, 1] << 2) | (quads[:, 2] << 4) | (quads[:, 3] << 6)
    return packed.astype(np.uint8).tobytes()


def unpack_codes(data: bytes | np.ndarray, count: int) -> np.ndarray:
    packed = np.frombuffer(bytes(data), dtype=np.uint8)
    shifts = np.array([0, 2, 4, 6], dtype=np.uint8)
    codes = (packed[:, None] >> shifts[None, :]) & 0b11
    return codes.ravel()[:count].astype(np.uint8)


def dense_to_bytes(d, half: bool = False) -> bytes:
    d = as_dense(d)
    code = DTYPE_HALF if half else DTYPE_REAL32
    payload = (round_half(d) if half else d).astype(_FLOAT[code])
    header = DENSE_MAGIC + struct.pack("<IIB", d.shape[0], d.shape[1], code)
    return header + payload.tobytes()


def dense_from_bytes(buf: bytes) -> tuple[np.ndarray, bool]:
    """Decode a DMX1 buffer; returns ``(matrix, half_flag)``."""
    rd = _Reader(buf, "DMX1")
    rd.magic(DENSE_MAGIC)
    rows, cols, code = rd.unpack("<IIB")
    data = rd.array(_dtype_code(code), rows * cols).astype(np.float32).reshape(rows, cols)
    rd.finish()
    try:
        return as_dense(data), code == DTYPE_HALF
    except VnmError as exc:
        raise ContainerError(f"invalid DMX1 payload: {exc}") from None


def vnm_to_bytes(s: VnmMatrix) -> bytes:
    s.validate()
    code = DTYPE_HALF if s.half else DTYPE_REAL32
    cfg = s.cfg
    header = VNM_MAGIC + struct.pack("<IIIIIIB", VNM_VERSION, s.r, s.k, cfg.v, cfg.n, cfg.m, code)
    return b"".join([
        header,
        s.values.astype(_FLOAT[code]).tobytes(),
        pack_codes(s.m_indices),
        s.column_loc.astype("<u2").tobytes(),
    ])


def vnm_from_bytes(buf: bytes) -> VnmMatrix:
    rd = _Reader(buf, "VNM1")
    rd.magic(VNM_MAGIC)
    (version,) = rd.unpack("<I")
    if version != VNM_VERSION:
        raise ContainerError(f"unsupported VNM1 version {version}")
    r, k, v, n, m, code = rd.unpack("<IIIIIB")
    dtype = _dtype_code(code)
    try:
        cfg = VnmConfig(v, n, m)
    except VnmError as exc:
        raise ContainerError(f"invalid VNM1 header: {exc}") from None
    if v == 0 or m == 0 or r % v or k % m:
        raise ContainerError(f"VNM1 header shape {r}x{k} not divisible by {cfg}")
    kb = k // m
    count = r * kb * n
    values = rd.array(dtype, count).astype(np.float32).reshape(r, kb, n)
    codes = unpack_codes(rd.take(-(-count // 4)), count).reshape(r, kb, n)
    column_loc = rd.array("<u2", (r // v) * kb * 4).reshape(r // v, kb, 4)
    rd.finish()
    return VnmMatrix(r, k, cfg, values, codes, column_loc, half=code == DTYPE_HALF).validate()


def mask_to_bytes(mask) -> bytes:
    mask = as_mask(mask)
    bits = np.packbits(mask.ravel(), bitorder="little")
    return MASK_MAGIC + struct.pack("<II", *mask.shape) + bits.tobytes()


def mask_from_bytes(buf: bytes) -> np.ndarray:
    rd = _Reader(buf, "MSK1")
    rd.magic(MASK_MAGIC)
    rows, cols = rd.unpack("<II")
    bits = rd.array(np.uint8, -(-(rows * cols) // 8))
    rd.finish()
    keep = np.unpackbits(bits, bitorder="little", count=rows * cols)
    return keep.astype(bool).reshape(rows, cols)


def write_dense(path, d, half: bool = False) -> None:
    Path(path).write_bytes(dense_to_bytes(d, half=half))


def read_dense(path) -> np.ndarray:
    return dense_from_bytes(Path(path).read_bytes())[0]


def write_vnm(path, s: VnmMatrix) -> None:
    Path(path).write_bytes(vnm_to_bytes(s))


def read_vnm(path) -> VnmMatrix:
    return vnm_from_bytes(Path(path).read_bytes())


def write_mask(path, mask) -> None:
    Path(path).write_bytes(mask_to_bytes(mask))


def read_mask(path) -> np.ndarray:
    return mask_from_bytes(Path(path).read_bytes())
