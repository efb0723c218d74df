"""Grayscale heatmaps as SVG files with an embedded PNG raster (0 white, 1 black)."""

from __future__ import annotations

import base64
import struct
import zlib

import numpy as np


def gray_levels(values) -> np.ndarray:
    v = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    return np.round(255.0 * (1.0 - v)).astype(np.uint8)


def _chunk(tag: bytes, data: bytes) -> bytes:
    body = tag + data
    return struct.pack(">I", len(data)) + body + struct.pack(">I", zlib.crc32(body) & 0xFFFFFFFF)


def png_bytes(values) -> bytes:
    """8-bit grayscale PNG of a matrix in [0, 1]."""
    g = gray_levels(values)
    if g.ndim != 2:
        raise ValueError("heatmap needs a 2-D matrix")
    h, w = g.shape
    raw = b"".join(b"\x00" + g[r].tobytes() for r in range(h))  # filter type 0 per row
    ihdr = struct.pack(">IIBBBBB", w, h, 8, 0, 0, 0, 0)
    return (b"\x89PNG\r\n\x1a\n" + _chunk(b"IHDR", ihdr) + _chunk(b"IDAT", zlib.compress(raw, 9))
            + _chunk(b"IEND", b""))


def heatmap_svg(values, title: str = "", size: int = 400) -> str:
    uri = "data:image/png;base64," + base64.b64encode(png_bytes(values)).decode("ascii")
    pad = 24 if title else 0
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size + pad}" '
           f'viewBox="0 0 {size} {size + pad}">']
    if title:
        safe = title.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
        out.append(f'<text x="{size // 2}" y="17" font-family="sans-serif" font-size="14" '
                   f'text-anchor="middle">{safe}</text>')
    out.append(f'<image x="0" y="{pad}" width="{size}" height="{size}" preserveAspectRatio="none" '
               f'style="image-rendering:pixelated" href="{uri}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_heatmap(values, path, title: str = "") -> None:
    with open(path, "w") as fh:
        fh.write(heatmap_svg(values, title))
