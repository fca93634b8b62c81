"""Readers and writers for PPM (P6), PGM (P5) and PFM image files.

PPM/PGM use the binary netpbm formats with maxval 255.  PFM follows the
usual convention: single-channel ``Pf``, scanlines bottom-to-top, and a
negative scale meaning little-endian floats.  Round-trips are bit-exact,
including non-finite depth values.
"""

from __future__ import annotations

import numpy as np


def write_ppm(path: str, rgb: np.ndarray) -> None:
    """Write an H x W x 3 uint8 array as binary PPM."""
    rgb = np.asarray(rgb)
    if rgb.ndim != 3 or rgb.shape[2] != 3 or rgb.dtype != np.uint8:
        raise ValueError("write_ppm expects an HxWx3 uint8 array")
    h, w = rgb.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(rgb.tobytes())


def write_pgm(path: str, gray: np.ndarray) -> None:
    """Write an H x W array as binary PGM; boolean masks become 0/255."""
    gray = np.asarray(gray)
    if gray.ndim != 2:
        raise ValueError("write_pgm expects an HxW array")
    if gray.dtype == bool:
        gray = gray.astype(np.uint8) * 255
    if gray.dtype != np.uint8:
        raise ValueError("write_pgm expects uint8 or bool data")
    h, w = gray.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(gray.tobytes())


def _read_pnm_header(fh, magic: bytes) -> tuple[int, int]:
    if fh.read(2) != magic:
        raise ValueError(f"not a {magic.decode()} file")
    values = []
    while len(values) < 3:
        token = b""
        ch = fh.read(1)
        while ch.isspace():
            ch = fh.read(1)
        if ch == b"#":
            fh.readline()
            continue
        while ch and not ch.isspace():
            token += ch
            ch = fh.read(1)
        if not token:
            raise ValueError("truncated header")
        values.append(int(token))
    w, h, maxval = values
    if maxval != 255:
        raise ValueError(f"unsupported maxval {maxval}")
    return w, h


def read_ppm(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        w, h = _read_pnm_header(fh, b"P6")
        data = fh.read(w * h * 3)
    if len(data) != w * h * 3:
        raise ValueError("truncated PPM payload")
    return np.frombuffer(data, dtype=np.uint8).reshape(h, w, 3).copy()


def read_pgm(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        w, h = _read_pnm_header(fh, b"P5")
        data = fh.read(w * h)
    if len(data) != w * h:
        raise ValueError("truncated PGM payload")
    return np.frombuffer(data, dtype=np.uint8).reshape(h, w).copy()


def write_pfm(path: str, depth: np.ndarray) -> None:
    """Write an H x W float array as single-channel PFM (scale -1.0)."""
    depth = np.asarray(depth, dtype=np.float32)
    if depth.ndim != 2:
        raise ValueError("write_pfm expects an HxW array")
    h, w = depth.shape
    with open(path, "wb") as fh:
        fh.write(f"Pf\n{w} {h}\n-1.0\n".encode("ascii"))
        fh.write(np.flipud(depth).astype("<f4").tobytes())


def read_pfm(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.readline().strip()
        if magic != b"Pf":
            raise ValueError("only single-channel Pf files are supported")
        dims = fh.readline().split()
        w, h = int(dims[0]), int(dims[1])
        scale = float(fh.readline())
        data = fh.read(w * h * 4)
    if len(data) != w * h * 4:
        raise ValueError("truncated PFM payload")
    endian = "<f4" if scale < 0 else ">f4"
    img = np.frombuffer(data, dtype=endian).reshape(h, w).astype(np.float32)
    return np.flipud(img).copy()
