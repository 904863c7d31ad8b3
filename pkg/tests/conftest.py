from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np
import pytest
from PIL import Image


def tree_digest(root: Path) -> dict[str, str]:
    """Relative path -> sha256 for every file under root."""
    return {
        str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


def make_disk_image(
    size: int = 64,
    radius: int = 10,
    fg: int = 40,
    bg: int = 200,
    noise_sigma: float = 10.0,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Dark disk on a light background with additive Gaussian noise.

    Returns (rgb image, true disk mask)."""
    rng = np.random.default_rng(seed)
    center = size // 2
    yy, xx = np.mgrid[0:size, 0:size]
    disk = (yy - center) ** 2 + (xx - center) ** 2 <= radius * radius
    base = np.where(disk, float(fg), float(bg))
    if noise_sigma > 0:
        base = base + rng.normal(0.0, noise_sigma, size=base.shape)
    gray = np.clip(np.rint(base), 0, 255).astype(np.uint8)
    rgb = np.repeat(gray[:, :, None], 3, axis=2)
    return rgb, disk


def save_rgb(path, arr: np.ndarray) -> None:
    Image.fromarray(arr, mode="RGB").save(path, format="PNG")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def disk_rgb():
    rgb, truth = make_disk_image()
    return rgb, truth


@pytest.fixture
def three_images(tmp_path):
    """Three small lesion-like PNGs plus a manifest CSV, on disk."""
    image_dir = tmp_path / "images"
    image_dir.mkdir()
    paths = []
    for i, (radius, seed) in enumerate([(8, 1), (10, 2), (12, 3)]):
        rgb, _ = make_disk_image(radius=radius, seed=seed)
        path = image_dir / f"img{i}.png"
        save_rgb(path, rgb)
        paths.append(path)
    manifest = tmp_path / "manifest.csv"
    lines = ["image_id,path"]
    lines += [f"{p.stem},{p}" for p in paths]
    manifest.write_text("\n".join(lines) + "\n")
    return manifest, paths
