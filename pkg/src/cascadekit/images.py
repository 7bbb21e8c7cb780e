"""Binary PNM (P5/P6) decoding, grayscale conversion, and pixel transforms."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DataError

_WHITESPACE = b" \t\n\r\x0b\x0c"


@dataclass(frozen=True)
class ImageBuffer:
    """Row-major 8-bit image; channels is 1 (grayscale) or 3 (RGB)."""

    width: int
    height: int
    channels: int
    pixels: bytes

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise DataError("image dimensions must be positive")
        if self.channels not in (1, 3):
            raise DataError("channels must be 1 or 3")
        if len(self.pixels) != self.width * self.height * self.channels:
            raise DataError("pixel count does not match dimensions")

    def at(self, x: int, y: int) -> tuple[int, ...]:
        """Pixel at column x, row y as a channel tuple."""
        base = (y * self.width + x) * self.channels
        return tuple(self.pixels[base : base + self.channels])


def _read_header_token(data: bytes, pos: int) -> tuple[int, int]:
    """Next ASCII integer token at or after pos, skipping whitespace and
    '#'-to-end-of-line comments. Returns (value, position after token)."""
    n = len(data)
    while pos < n:
        c = data[pos : pos + 1]
        if c == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c in _WHITESPACE:
            pos += 1
        else:
            break
    start = pos
    while pos < n and data[pos : pos + 1].isdigit():
        pos += 1
    if pos == start:
        raise DataError("malformed PNM header")
    return int(data[start:pos]), pos


def load_image_pnm(data: bytes) -> ImageBuffer:
    """Decode a binary PNM image (magic P5 or P6, maxval 255)."""
    magic = data[:2]
    if magic == b"P5":
        channels = 1
    elif magic == b"P6":
        channels = 3
    else:
        raise DataError(f"unsupported PNM magic {magic!r} (want P5 or P6)")
    width, pos = _read_header_token(data, 2)
    height, pos = _read_header_token(data, pos)
    maxval, pos = _read_header_token(data, pos)
    if maxval != 255:
        raise DataError(f"unsupported maxval {maxval} (must be 255)")
    if pos >= len(data) or data[pos : pos + 1] not in _WHITESPACE:
        raise DataError("malformed PNM header")
    pos += 1
    expected = width * height * channels
    payload = data[pos:]
    if len(payload) < expected:
        raise DataError("truncated payload")
    if len(payload) > expected:
        raise DataError("trailing data after payload")
    return ImageBuffer(width, height, channels, bytes(payload))


def write_image_pnm(img: ImageBuffer) -> bytes:
    magic = b"P5" if img.channels == 1 else b"P6"
    header = b"%s\n%d %d\n255\n" % (magic, img.width, img.height)
    return header + img.pixels


def to_grayscale(img: ImageBuffer) -> ImageBuffer:
    """BT.601 luma with half-up integer rounding; identity for 1-channel input."""
    if img.channels == 1:
        return img
    out = bytearray(img.width * img.height)
    px = img.pixels
    for i in range(img.width * img.height):
        r, g, b = px[3 * i], px[3 * i + 1], px[3 * i + 2]
        y = (299 * r + 587 * g + 114 * b + 500) // 1000
        out[i] = min(y, 255)
    return ImageBuffer(img.width, img.height, 1, bytes(out))


def rotate90(img: ImageBuffer) -> ImageBuffer:
    """Rotate 90 degrees clockwise (width and height swap)."""
    w, h, c = img.width, img.height, img.channels
    out = bytearray(len(img.pixels))
    px = img.pixels
    for y in range(h):
        for x in range(w):
            # old (x, y) -> new (h - 1 - y, x) in an h-wide image
            src = (y * w + x) * c
            dst = (x * h + (h - 1 - y)) * c
            out[dst : dst + c] = px[src : src + c]
    return ImageBuffer(h, w, c, bytes(out))


def rotate180(img: ImageBuffer) -> ImageBuffer:
    return rotate90(rotate90(img))


def rotate270(img: ImageBuffer) -> ImageBuffer:
    return rotate90(rotate180(img))


def mirror_horizontal(img: ImageBuffer) -> ImageBuffer:
    """Flip left-right."""
    w, h, c = img.width, img.height, img.channels
    out = bytearray(len(img.pixels))
    px = img.pixels
    for y in range(h):
        row = y * w * c
        for x in range(w):
            src = row + x * c
            dst = row + (w - 1 - x) * c
            out[dst : dst + c] = px[src : src + c]
    return ImageBuffer(w, h, c, bytes(out))


def mirror_vertical(img: ImageBuffer) -> ImageBuffer:
    """Flip top-bottom."""
    w, h, c = img.width, img.height, img.channels
    stride = w * c
    out = bytearray(len(img.pixels))
    px = img.pixels
    for y in range(h):
        out[(h - 1 - y) * stride : (h - y) * stride] = px[y * stride : (y + 1) * stride]
    return ImageBuffer(w, h, c, bytes(out))


TRANSFORMS = {
    "identity": lambda img: img,
    "rot90": rotate90,
    "rot180": rotate180,
    "mirror_h": mirror_horizontal,
    "mirror_v": mirror_vertical,
}
