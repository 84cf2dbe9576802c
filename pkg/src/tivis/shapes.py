"""Synthetic geometric-shapes dataset.

Six grayscale shape classes rendered on 64x64x3 canvases with randomized
position, rotation, scale, and foreground/background gray levels. Every
sample is drawn from its own PRNG stream derived from (seed, class, index),
so generation is order-independent and a fixed seed reproduces the dataset
bit for bit.

Rasterization is hard-edged: a pixel is foreground exactly when its integer
coordinate point (x=column, y=row) satisfies the shape's membership test.
The disk ignores its rotation angle (rotating a disk is a no-op), which
keeps its membership test bit-identical to the plain point-in-disk check.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .rng import Xoshiro256, derive_seed

CLASS_NAMES = ("ring", "cross", "stripes", "checker", "disk", "hex_outline")

IMAGE_SIZE = 64

_CENTER_LO, _CENTER_HI = 26.0, 38.0
_RADIUS_LO, _RADIUS_HI = 11.0, 17.0
_BG_MAX = 90  # background gray in [0, _BG_MAX]
_FG_MIN = 150  # foreground gray in [_FG_MIN, 255]

_STREAM_SAMPLE = 11


@dataclass(frozen=True)
class ShapeParams:
    """Everything needed to render one sample."""

    class_index: int
    cx: float
    cy: float
    radius: float
    angle_deg: float
    fg: int
    bg: int


@dataclass
class ShapeDataset:
    images: np.ndarray  # (N, H, W, 3) float64, integer-valued display units
    labels: np.ndarray  # (N,) int64
    seed: int
    class_names: tuple = CLASS_NAMES

    def __len__(self) -> int:
        return len(self.labels)


def shape_params(seed: int, class_index: int, sample_index: int) -> ShapeParams:
    """Deterministic render parameters for one (class, sample) pair.

    Draw order within the stream is fixed: bg, fg, cx, cy, radius, angle.
    """
    rng = Xoshiro256(derive_seed(seed, _STREAM_SAMPLE, class_index, sample_index))
    bg = rng.randint(_BG_MAX + 1)
    fg = _FG_MIN + rng.randint(256 - _FG_MIN)
    cx = rng.uniform(_CENTER_LO, _CENTER_HI)
    cy = rng.uniform(_CENTER_LO, _CENTER_HI)
    radius = rng.uniform(_RADIUS_LO, _RADIUS_HI)
    angle = rng.uniform(0.0, 360.0)
    return ShapeParams(class_index, cx, cy, radius, angle, fg, bg)


def render_shape(params: ShapeParams, size: int = IMAGE_SIZE) -> np.ndarray:
    """Rasterize one sample to an (H, W, 3) display-unit buffer."""
    y, x = np.mgrid[0:size, 0:size].astype(np.float64)
    dx = x - params.cx
    dy = y - params.cy
    r = params.radius
    name = CLASS_NAMES[params.class_index]
    if name == "disk":
        mask = dx * dx + dy * dy <= r * r
    else:
        rad = math.radians(params.angle_deg)
        c, s = math.cos(rad), math.sin(rad)
        u = c * dx + s * dy
        v = -s * dx + c * dy
        mask = _membership(name, u, v, r)
    img = np.full((size, size, 3), float(params.bg))
    img[mask] = float(params.fg)
    return img


def _membership(name: str, u: np.ndarray, v: np.ndarray, r: float) -> np.ndarray:
    if name == "ring":
        d2 = u * u + v * v
        inner = 0.62 * r
        return (d2 <= r * r) & (d2 >= inner * inner)
    if name == "cross":
        arm = 0.22 * r
        return ((np.abs(u) <= arm) & (np.abs(v) <= r)) | (
            (np.abs(v) <= arm) & (np.abs(u) <= r)
        )
    if name == "stripes":
        box = (np.abs(u) <= r) & (np.abs(v) <= r)
        period = 0.4 * r
        return box & (np.floor((u + r) / period).astype(np.int64) % 2 == 0)
    if name == "checker":
        box = (np.abs(u) <= r) & (np.abs(v) <= r)
        cell = 0.5 * r
        iu = np.floor((u + r) / cell).astype(np.int64)
        iv = np.floor((v + r) / cell).astype(np.int64)
        return box & ((iu + iv) % 2 == 0)
    if name == "hex_outline":
        thickness = 0.22
        return _hexagon(u, v, r) & ~_hexagon(u, v, r * (1.0 - thickness))
    raise ValueError(f"unknown shape class {name!r}")


def _hexagon(u: np.ndarray, v: np.ndarray, circumradius: float) -> np.ndarray:
    """Regular hexagon: intersection of three slabs with normals at 0/60/120 deg."""
    apothem = circumradius * (math.sqrt(3.0) / 2.0)
    p0 = np.abs(u)
    p60 = np.abs(0.5 * u + (math.sqrt(3.0) / 2.0) * v)
    p120 = np.abs(-0.5 * u + (math.sqrt(3.0) / 2.0) * v)
    return (p0 <= apothem) & (p60 <= apothem) & (p120 <= apothem)


def generate_dataset(seed: int, count_per_class: int, size: int = IMAGE_SIZE) -> ShapeDataset:
    """Balanced dataset: count_per_class samples of each of the 6 classes."""
    if count_per_class < 1:
        raise ValueError(f"count_per_class must be >= 1, got {count_per_class}")
    n = count_per_class * len(CLASS_NAMES)
    images = np.empty((n, size, size, 3), dtype=np.float64)
    labels = np.empty(n, dtype=np.int64)
    pos = 0
    for class_index in range(len(CLASS_NAMES)):
        for i in range(count_per_class):
            images[pos] = render_shape(shape_params(seed, class_index, i), size)
            labels[pos] = class_index
            pos += 1
    return ShapeDataset(images=images, labels=labels, seed=seed)


# --------------------------------------------------------------------------
# Optional persistence: a directory of PPM files plus a manifest


def save_dataset(dataset: ShapeDataset, directory) -> None:
    from .ppm import write_ppm

    os.makedirs(directory, exist_ok=True)
    lines = [
        "#tivis-dataset v1",
        f"seed {dataset.seed}",
        "classes " + " ".join(dataset.class_names),
    ]
    for i, label in enumerate(dataset.labels):
        name = f"sample_{i:05d}.ppm"
        write_ppm(dataset.images[i], os.path.join(directory, name))
        lines.append(f"image {name} {int(label)}")
    with open(os.path.join(directory, "manifest.txt"), "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


def load_dataset(directory) -> ShapeDataset:
    from .ppm import read_ppm

    with open(os.path.join(directory, "manifest.txt"), "r", encoding="utf-8") as f:
        lines = [ln.strip() for ln in f if ln.strip()]
    if not lines or lines[0] != "#tivis-dataset v1":
        raise ValueError("not a tivis dataset manifest")
    seed = 0
    class_names = CLASS_NAMES
    images = []
    labels = []
    for line in lines[1:]:
        tokens = line.split()
        if tokens[0] == "seed":
            seed = int(tokens[1])
        elif tokens[0] == "classes":
            class_names = tuple(tokens[1:])
        elif tokens[0] == "image":
            images.append(read_ppm(os.path.join(directory, tokens[1])))
            labels.append(int(tokens[2]))
    if not images:
        raise ValueError("dataset manifest lists no images")
    return ShapeDataset(
        images=np.stack(images),
        labels=np.asarray(labels, dtype=np.int64),
        seed=seed,
        class_names=class_names,
    )
