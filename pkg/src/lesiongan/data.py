"""Image/mask loading, augmentation, batching, and synthetic lesion data.

Masks stay strictly binary through every pipeline stage: geometric ops are
applied jointly to image and mask, photometric ops (gamma, CLAHE) touch
the image only, and resizing re-binarizes at 0.5.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import cv2
import numpy as np
from PIL import Image

from .tensor import ConfigurationError, Tensor, UsageError, bilinear_resize, no_grad


class FormatError(ValueError):
    """Raster file does not satisfy the 8-bit RGB/grayscale contract."""


@dataclass
class Sample:
    """One image/mask pair, image in [0,1], mask strictly binary."""

    id: str
    image: Tensor  # (1, 3, s, s)
    mask: Optional[Tensor]  # (1, 1, s, s) or None for unlabeled test entries


@dataclass
class DatasetManifest:
    """Ordered (image_path, mask_path-or-None) records for one split."""

    entries: list[tuple[str, Optional[str]]]
    split: str = "train"
    target_size: int = 128


MASK_ABSENT = "-"


def read_manifest(path: str, split: str = "train", target_size: int = 128) -> DatasetManifest:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    except OSError as exc:
        raise OSError(f"cannot read manifest {path}: {exc}") from exc
    entries: list[tuple[str, Optional[str]]] = []
    base = os.path.dirname(os.path.abspath(path))
    for ln in lines:
        parts = ln.split("\t")
        if len(parts) != 2:
            raise FormatError(f"manifest line needs exactly one tab: {ln!r}")
        img, mask = parts
        img = img if os.path.isabs(img) else os.path.join(base, img)
        if mask == MASK_ABSENT:
            entries.append((img, None))
        else:
            mask = mask if os.path.isabs(mask) else os.path.join(base, mask)
            entries.append((img, mask))
    return DatasetManifest(entries, split, target_size)


def write_manifest(path: str, entries: Sequence[tuple[str, Optional[str]]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for img, mask in entries:
            fh.write(f"{img}\t{mask if mask else MASK_ABSENT}\n")


def _read_png(path: str, expect: str) -> np.ndarray:
    try:
        with Image.open(path) as im:
            mode = im.mode
            if expect == "rgb":
                if mode != "RGB":
                    raise FormatError(
                        f"{path}: expected 8-bit RGB, got mode {mode!r}")
            else:
                if mode != "L":
                    raise FormatError(
                        f"{path}: expected 8-bit grayscale, got mode {mode!r}")
            return np.asarray(im, dtype=np.uint8)
    except FileNotFoundError as exc:
        raise OSError(f"cannot read image {path}: {exc}") from exc
    except OSError as exc:
        raise OSError(f"cannot read image {path}: {exc}") from exc


def save_image_png(path: str, image: np.ndarray) -> None:
    """Write an (3,h,w) or (h,w,3) float [0,1] array as 8-bit RGB PNG."""
    arr = image
    if arr.ndim == 3 and arr.shape[0] == 3:
        arr = arr.transpose(1, 2, 0)
    u8 = np.round(np.clip(arr, 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(u8, mode="RGB").save(path)


def save_mask_png(path: str, mask: np.ndarray) -> None:
    """Write a binary (h,w) array as an 8-bit 0/255 grayscale PNG."""
    u8 = (np.asarray(mask) >= 0.5).astype(np.uint8) * 255
    Image.fromarray(u8, mode="L").save(path)


def load_sample(image_path: str, mask_path: Optional[str], target_size: int) -> Sample:
    """Read, scale to [0,1], resize bilinearly, and re-binarize the mask."""
    rgb = _read_png(image_path, "rgb").astype(np.float64) / 255.0
    image = Tensor(rgb.transpose(2, 0, 1)[None])
    with no_grad():
        image = bilinear_resize(image, target_size, target_size)
        image = Tensor(np.clip(image.data, 0.0, 1.0))
    mask = None
    if mask_path is not None:
        gray = _read_png(mask_path, "gray").astype(np.float64) / 255.0
        m = Tensor(gray[None, None])
        with no_grad():
            m = bilinear_resize(m, target_size, target_size)
        mask = Tensor((m.data >= 0.5).astype(np.float64))
    sample_id = os.path.splitext(os.path.basename(image_path))[0]
    return Sample(sample_id, image, mask)


def load_manifest_samples(manifest: DatasetManifest) -> list[Sample]:
    return [load_sample(img, mask, manifest.target_size)
            for img, mask in manifest.entries]


# ---------------------------------------------------------------------------
# augmentation
# ---------------------------------------------------------------------------


def hflip(sample: Sample) -> Sample:
    image = Tensor(np.ascontiguousarray(sample.image.data[:, :, :, ::-1]))
    mask = None
    if sample.mask is not None:
        mask = Tensor(np.ascontiguousarray(sample.mask.data[:, :, :, ::-1]))
    return Sample(sample.id + "+hflip", image, mask)


def vflip(sample: Sample) -> Sample:
    image = Tensor(np.ascontiguousarray(sample.image.data[:, :, ::-1, :]))
    mask = None
    if sample.mask is not None:
        mask = Tensor(np.ascontiguousarray(sample.mask.data[:, :, ::-1, :]))
    return Sample(sample.id + "+vflip", image, mask)


def gamma_correct(sample: Sample, g: float) -> Sample:
    if g <= 0:
        raise ConfigurationError(f"gamma must be positive, got {g}")
    if g == 1.0:
        return Sample(sample.id + "+gamma1", sample.image, sample.mask)
    image = Tensor(np.power(sample.image.data, g))
    return Sample(f"{sample.id}+gamma{g:g}", image, sample.mask)


def clahe(sample: Sample, clip: float = 2.0, tiles: int = 8) -> Sample:
    """Contrast-limited adaptive histogram equalization on luminance only."""
    if clip < 1.0:
        raise ConfigurationError(f"clahe clip limit must be >= 1, got {clip}")
    if tiles < 1:
        raise ConfigurationError(f"clahe tile count must be >= 1, got {tiles}")
    img = sample.image.data[0].transpose(1, 2, 0)  # (h, w, 3)
    u8 = np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    ycc = cv2.cvtColor(u8, cv2.COLOR_RGB2YCrCb)
    eq = cv2.createCLAHE(clipLimit=clip, tileGridSize=(tiles, tiles))
    ycc[..., 0] = eq.apply(ycc[..., 0])
    out = cv2.cvtColor(ycc, cv2.COLOR_YCrCb2RGB).astype(np.float64) / 255.0
    image = Tensor(out.transpose(2, 0, 1)[None])
    return Sample(sample.id + "+clahe", image, sample.mask)


def augment(sample: Sample, ops: Sequence, rng: Optional[np.random.Generator] = None) -> Sample:
    """Apply a sequence of augmentation descriptors.

    Descriptors: "hflip", "vflip", ("gamma", g), ("clahe", clip, tiles).
    """
    out = sample
    for op in ops:
        if op == "hflip":
            out = hflip(out)
        elif op == "vflip":
            out = vflip(out)
        elif isinstance(op, tuple) and op and op[0] == "gamma":
            out = gamma_correct(out, float(op[1]))
        elif isinstance(op, tuple) and op and op[0] == "clahe":
            clip = float(op[1]) if len(op) > 1 else 2.0
            tiles = int(op[2]) if len(op) > 2 else 8
            out = clahe(out, clip, tiles)
        else:
            raise ConfigurationError(f"unknown augmentation op {op!r}")
    return out


GAMMA_CHOICES = (0.7, 1.0, 1.5)

_GEOMETRIC_VARIANTS = ((), ("hflip",), ("vflip",), ("hflip", "vflip"))


def expand_training_set(samples: Sequence[Sample],
                        rng: np.random.Generator) -> list[Sample]:
    """8x expansion: {identity, hflip, vflip, both} x {gamma, clahe}."""
    out: list[Sample] = []
    for sample in samples:
        for geo in _GEOMETRIC_VARIANTS:
            g = float(rng.choice(GAMMA_CHOICES))
            out.append(augment(sample, list(geo) + [("gamma", g)]))
            out.append(augment(sample, list(geo) + [("clahe", 2.0, 8)]))
    return out


# ---------------------------------------------------------------------------
# synthetic lesions
# ---------------------------------------------------------------------------


# Synthetic lesion draw ranges: skin-toned background, clearly darker
# elliptical lesions covering a substantial image fraction.
SYNTH_BACKGROUND_RGB = ((0.78, 0.90), (0.62, 0.74), (0.55, 0.67))
SYNTH_LESION_RGB = ((0.20, 0.35), (0.10, 0.22), (0.06, 0.16))
SYNTH_CENTER_RANGE = (0.35, 0.65)
SYNTH_RADIUS_RANGE = (0.25, 0.45)
SYNTH_NOISE_STD = 0.02
SYNTH_EDGE_WIDTH = 0.06
SYNTH_MAX_LESIONS = 2


def synthesize_disk_dataset(n: int, size: int, rng_seed: int) -> list[Sample]:
    """Noisy skin-toned backgrounds with 1-2 soft-edged dark ellipses.

    The image blends lesion color over the background with a smooth edge;
    the mask is the exact point-in-ellipse indicator.  Output is a pure
    function of (n, size, rng_seed).
    """
    if n <= 0:
        raise ConfigurationError(f"sample count must be positive, got {n}")
    if size < 16:
        raise ConfigurationError(f"size must be at least 16, got {size}")
    rng = np.random.default_rng(rng_seed)
    ys = np.arange(size, dtype=np.float64)[:, None]
    xs = np.arange(size, dtype=np.float64)[None, :]
    samples = []
    for i in range(n):
        base = np.array([rng.uniform(lo, hi) for lo, hi in SYNTH_BACKGROUND_RGB])
        image = np.broadcast_to(base[:, None, None], (3, size, size)).copy()
        image += rng.normal(0.0, SYNTH_NOISE_STD, size=(3, size, size))
        mask = np.zeros((size, size), dtype=bool)
        for _ in range(int(rng.integers(1, SYNTH_MAX_LESIONS + 1))):
            cy = rng.uniform(*SYNTH_CENTER_RANGE) * size
            cx = rng.uniform(*SYNTH_CENTER_RANGE) * size
            ry = rng.uniform(*SYNTH_RADIUS_RANGE) * size
            rx = rng.uniform(*SYNTH_RADIUS_RANGE) * size
            color = np.array([rng.uniform(lo, hi) for lo, hi in SYNTH_LESION_RGB])
            r = np.sqrt(((ys - cy) / ry) ** 2 + ((xs - cx) / rx) ** 2)
            alpha = np.clip((1.0 + SYNTH_EDGE_WIDTH / 2.0 - r) / SYNTH_EDGE_WIDTH,
                            0.0, 1.0)
            image = alpha[None] * color[:, None, None] + (1.0 - alpha[None]) * image
            mask |= r <= 1.0
        image = np.clip(image, 0.0, 1.0)
        samples.append(Sample(
            f"synth{i:04d}",
            Tensor(image[None]),
            Tensor(mask[None, None].astype(np.float64)),
        ))
    return samples


def write_dataset(samples: Sequence[Sample], out_dir: str,
                  manifest_name: str = "manifest.tsv") -> str:
    """Write PNGs plus a manifest; returns the manifest path."""
    os.makedirs(out_dir, exist_ok=True)
    entries = []
    for sample in samples:
        img_name = f"{sample.id}.png"
        save_image_png(os.path.join(out_dir, img_name), sample.image.data[0])
        if sample.mask is not None:
            mask_name = f"{sample.id}_mask.png"
            save_mask_png(os.path.join(out_dir, mask_name), sample.mask.data[0, 0])
            entries.append((img_name, mask_name))
        else:
            entries.append((img_name, None))
    manifest_path = os.path.join(out_dir, manifest_name)
    write_manifest(manifest_path, entries)
    return manifest_path


# ---------------------------------------------------------------------------
# batching
# ---------------------------------------------------------------------------


def batch(samples: Sequence[Sample], batch_size: int, shuffle: bool = False,
          rng: Optional[np.random.Generator] = None) -> Iterator[tuple[Tensor, Tensor]]:
    """Yield (images, masks) pairs concatenated on the batch axis.

    The last partial batch is kept.  Shuffle order is a deterministic
    function of the supplied generator's state.
    """
    if batch_size < 1:
        raise ConfigurationError(f"batch_size must be >= 1, got {batch_size}")
    if not samples:
        raise UsageError("cannot batch an empty dataset")
    order = np.arange(len(samples))
    if shuffle:
        if rng is None:
            raise UsageError("shuffle requires a random generator")
        order = rng.permutation(len(samples))
    for start in range(0, len(samples), batch_size):
        chunk = [samples[int(j)] for j in order[start:start + batch_size]]
        images = Tensor(np.concatenate([s.image.data for s in chunk], axis=0))
        if any(s.mask is None for s in chunk):
            raise UsageError("batching requires masks for every sample")
        masks = Tensor(np.concatenate([s.mask.data for s in chunk], axis=0))
        yield images, masks
