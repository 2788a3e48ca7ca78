"""File outputs: images, raw float dumps, CSV traces. All writes are atomic."""
from __future__ import annotations

import csv
import io
import os
import tempfile

import numpy as np

TRACE_COLUMNS = ("iteration", "E", "E_sl", "E_p", "wall_ms")


def atomic_write_bytes(path, data: bytes) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def to_bytes(values, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    v = (np.asarray(values, dtype=np.float64) - lo) / (hi - lo)
    return np.clip(np.rint(v * 255.0), 0, 255).astype(np.uint8)


def encode_pgm(values, lo: float = 0.0, hi: float = 1.0) -> bytes:
    pix = to_bytes(values, lo, hi)
    H, W = pix.shape
    return f"P5\n{W} {H}\n255\n".encode("ascii") + pix.tobytes()


def write_pgm(path, values, lo: float = 0.0, hi: float = 1.0) -> None:
    atomic_write_bytes(path, encode_pgm(values, lo, hi))


def read_pgm(path) -> np.ndarray:
    """Binary PGM (P5, maxval <= 255) as floats in [0, 1]."""
    with open(path, "rb") as fh:
        raw = fh.read()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            pos = raw.index(b"\n", pos) + 1
            continue
        start = pos
        while not raw[pos:pos + 1].isspace():
            pos += 1
        tokens.append(raw[start:pos])
    if tokens[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM")
    W, H, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval > 255:
        raise ValueError(f"{path}: 16-bit PGM not supported")
    data = np.frombuffer(raw[pos + 1:pos + 1 + W * H], dtype=np.uint8).reshape(H, W)
    return data.astype(np.float64) / maxval


def png_available() -> bool:
    try:
        import PIL  # noqa: F401
    except ImportError:
        return False
    return True


def encode_png(pixels: np.ndarray) -> bytes:
    from PIL import Image

    buf = io.BytesIO()
    Image.fromarray(np.ascontiguousarray(pixels)).save(buf, format="PNG")
    return buf.getvalue()


def write_png(path, values, lo: float = 0.0, hi: float = 1.0) -> None:
    atomic_write_bytes(path, encode_png(to_bytes(values, lo, hi)))


def write_float_dump(path, values) -> None:
    """Little-endian float32, row-major, no header."""
    atomic_write_bytes(path, np.asarray(values, dtype="<f4").tobytes(order="C"))


def read_float_dump(path, shape) -> np.ndarray:
    return np.fromfile(path, dtype="<f4").reshape(shape)


def diverging_rgb(values, limit: float | None = None) -> np.ndarray:
    """Blue (negative) - white - red (positive), symmetric about zero."""
    v = np.asarray(values, dtype=np.float64)
    if limit is None:
        limit = float(np.max(np.abs(v))) if v.size else 0.0
    t = np.zeros_like(v) if limit == 0 else np.clip(v / limit, -1.0, 1.0)
    pos = np.clip(t, 0.0, 1.0)
    neg = np.clip(-t, 0.0, 1.0)
    r = 1.0 - neg
    g = 1.0 - pos - neg
    b = 1.0 - pos
    return np.clip(np.rint(np.stack([r, g, b], axis=-1) * 255.0), 0, 255).astype(np.uint8)


def write_gradient_png(path, values, limit: float | None = None) -> None:
    atomic_write_bytes(path, encode_png(diverging_rgb(values, limit)))


def overlay_rgb(target, current, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    """Target silhouette in the red channel, current render in green."""
    t = to_bytes(target, lo, hi)
    c = to_bytes(current, lo, hi)
    return np.stack([t, c, np.zeros_like(t)], axis=-1)


def write_overlay_png(path, target, current, lo: float = 0.0, hi: float = 1.0) -> None:
    atomic_write_bytes(path, encode_png(overlay_rgb(target, current, lo, hi)))


def format_trace(records, timing: bool = True) -> str:
    """CSV trace, numbers at 6 significant digits."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS if timing else TRACE_COLUMNS[:-1])
    for r in records:
        row = [r.iteration, f"{r.E:.6g}", f"{r.E_sl:.6g}", f"{r.E_p:.6g}"]
        if timing:
            row.append(f"{r.wall_ms:.6g}")
        w.writerow(row)
    return buf.getvalue()


def write_trace(path, records, timing: bool = True) -> None:
    atomic_write_text(path, format_trace(records, timing))
