"""Perceptual fingerprints and the label memo store.

Two fingerprint methods over grayscale images:

* difference hash: 64 brightness-gradient sign bits from a 9x8 downsampled
  grid, computed in exact integer arithmetic. Fast, but any rotation or
  mirror changes the bits.
* moment fingerprint: the sum of four rotation-and-mirror-invariant
  features built from centroid-centered complex moments, quantized to a
  9-significant-digit key. Survives rotations by multiples of 90 degrees
  and both mirror axes, which are exact pixel permutations.

The MemoStore maps fingerprint keys to class labels with optional LRU
eviction, so a cascade can skip both models when an image (or an invariant
transform of it) has been classified before.
"""

from __future__ import annotations

import json
import threading
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .images import ImageBuffer

DHASH_COLS = 9
DHASH_ROWS = 8


@dataclass(frozen=True)
class Fingerprint:
    """A hashable image key: method name plus canonical key string."""

    method: str  # "dhash" or "moments"
    key: str


def dhash(gray: ImageBuffer) -> int:
    """64-bit difference hash of a grayscale image.

    The image is split into a 9x8 grid (column boundaries floor(k*W/9),
    row boundaries floor(k*H/8)). Bit (r, c) is 1 iff the mean brightness
    of cell (r, c) strictly exceeds that of cell (r, c+1); means are
    compared by cross-multiplying integer sums so no floats are involved.
    Bits are packed most-significant-first in row-major order.
    """
    if gray.channels != 1:
        raise DataError("dhash requires a 1-channel image")
    w, h = gray.width, gray.height
    if w < DHASH_COLS or h < DHASH_ROWS:
        raise DataError(f"image {w}x{h} smaller than {DHASH_COLS}x{DHASH_ROWS} grid")
    col_edges = [k * w // DHASH_COLS for k in range(DHASH_COLS + 1)]
    row_edges = [k * h // DHASH_ROWS for k in range(DHASH_ROWS + 1)]
    pixels = gray.pixels
    word = 0
    for r in range(DHASH_ROWS):
        y0, y1 = row_edges[r], row_edges[r + 1]
        sums = [0] * DHASH_COLS
        for y in range(y0, y1):
            base = y * w
            for c in range(DHASH_COLS):
                sums[c] += sum(pixels[base + col_edges[c] : base + col_edges[c + 1]])
        rows = y1 - y0
        counts = [(col_edges[c + 1] - col_edges[c]) * rows for c in range(DHASH_COLS)]
        for c in range(DHASH_COLS - 1):
            bit = 1 if sums[c] * counts[c + 1] > sums[c + 1] * counts[c] else 0
            word = (word << 1) | bit
    return word


def dhash_fingerprint(gray: ImageBuffer) -> Fingerprint:
    return Fingerprint("dhash", format(dhash(gray), "016x"))


def _intensity(gray: ImageBuffer) -> np.ndarray:
    if gray.channels != 1:
        raise DataError("moments require a 1-channel image")
    arr = np.frombuffer(gray.pixels, dtype=np.uint8)
    return arr.astype(np.float64).reshape(gray.height, gray.width)


def _centered_plane(f: np.ndarray) -> tuple[np.ndarray, float]:
    """Complex coordinate grid centered on the intensity centroid."""
    m00 = float(f.sum())
    if m00 == 0.0:
        raise DataError("zero total intensity")
    ys, xs = np.indices(f.shape, dtype=np.float64)
    xbar = float((xs * f).sum()) / m00
    ybar = float((ys * f).sum()) / m00
    return (xs - xbar) + 1j * (ys - ybar), m00


def complex_moment(gray: ImageBuffer, p: int, q: int) -> complex:
    """Centroid-centered, scale-normalized complex moment c_pq.

    c_pq = sum over pixels of z^p * conj(z)^q * f(x, y), divided by
    m00^((p+q)/2 + 1), with z the centroid-centered coordinate.
    """
    if p < 0 or q < 0 or p + q > 3:
        raise DataError(f"moment order ({p}, {q}) outside supported range")
    f = _intensity(gray)
    z, m00 = _centered_plane(f)
    total = (z**p * np.conj(z) ** q * f).sum()
    return complex(total / m00 ** ((p + q) / 2 + 1))


@dataclass(frozen=True)
class MomentInvariants:
    """Six rotation-invariant features; phi4 and phi6 flip sign on mirrors."""

    phi1: float
    phi2: float
    phi3: float
    phi4: float
    phi5: float
    phi6: float

    def vector(self) -> tuple[float, float, float, float, float, float]:
        return (self.phi1, self.phi2, self.phi3, self.phi4, self.phi5, self.phi6)


def moment_invariants(gray: ImageBuffer) -> MomentInvariants:
    f = _intensity(gray)
    z, m00 = _centered_plane(f)
    zc = np.conj(z)

    def c(p: int, q: int) -> complex:
        return complex((z**p * zc**q * f).sum() / m00 ** ((p + q) / 2 + 1))

    c11 = c(1, 1)
    c21 = c(2, 1)
    c12 = c(1, 2)
    c20 = c(2, 0)
    c30 = c(3, 0)
    pair3 = c20 * c12 * c12
    pair5 = c30 * c12 * c12 * c12
    return MomentInvariants(
        phi1=c11.real,
        phi2=(c21 * c12).real,
        phi3=pair3.real,
        phi4=pair3.imag,
        phi5=pair5.real,
        phi6=pair5.imag,
    )


def quantize_key(value: float) -> str:
    """Canonical 9-significant-digit rendering; plain "0" for zero."""
    if value == 0.0:
        return "0"
    return format(value, ".9g")


def moments_fingerprint(gray: ImageBuffer) -> Fingerprint:
    """Key from the sum of the four mirror-safe invariants (phi1+phi2+phi3+phi5)."""
    inv = moment_invariants(gray)
    scalar = inv.phi1 + inv.phi2 + inv.phi3 + inv.phi5
    return Fingerprint("moments", quantize_key(scalar))


class MemoStore:
    """LRU map from fingerprint keys to class labels.

    Unbounded by default; with a capacity, the least-recently-used entry
    is evicted on overflow and a lookup hit counts as a use. Lookups and
    inserts are serialized by a lock so concurrent readers never see a
    torn entry.
    """

    def __init__(self, capacity: int | None = None):
        if capacity is not None and capacity < 1:
            raise DataError("capacity must be >= 1")
        self.capacity = capacity
        self._entries: OrderedDict[str, int] = OrderedDict()
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._entries)

    def lookup(self, fp: Fingerprint) -> int | None:
        with self._lock:
            label = self._entries.get(fp.key)
            if label is not None:
                self._entries.move_to_end(fp.key)
            return label

    def insert(self, fp: Fingerprint, label: int) -> None:
        with self._lock:
            self._entries[fp.key] = label
            self._entries.move_to_end(fp.key)
            if self.capacity is not None:
                while len(self._entries) > self.capacity:
                    self._entries.popitem(last=False)

    def save(self, path: str) -> None:
        """Write entries as JSON, least-recently-used first."""
        entries = [{"key": k, "label": v} for k, v in self._entries.items()]
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({"entries": entries}, fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path: str, capacity: int | None = None) -> "MemoStore":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                obj = json.load(fh)
        except OSError as exc:
            raise DataError(f"cannot read store {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise DataError(f"invalid store JSON in {path}: {exc}") from None
        if not isinstance(obj, dict) or not isinstance(obj.get("entries"), list):
            raise DataError("store file must be an object with an 'entries' list")
        store = cls(capacity)
        for i, entry in enumerate(obj["entries"]):
            if (
                not isinstance(entry, dict)
                or not isinstance(entry.get("key"), str)
                or isinstance(entry.get("label"), bool)
                or not isinstance(entry.get("label"), int)
            ):
                raise DataError(f"malformed store entry at index {i}")
            store._entries[entry["key"]] = entry["label"]
            store._entries.move_to_end(entry["key"])
            if capacity is not None:
                while len(store._entries) > capacity:
                    store._entries.popitem(last=False)
        return store
