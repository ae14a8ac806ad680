import os
from pathlib import Path

import numpy as np
import pytest

from rcm.imageio import GrayImage, load_pgm

TEST_IMAGE_DIR = os.environ.get("RCM_TEST_IMAGES")

_report_lines = []


def constant_image(n, level=128):
    return GrayImage(np.full((n, n), level, dtype=np.uint8))


def gradient_image(n):
    yy, xx = np.mgrid[0:n, 0:n]
    return GrayImage(np.rint(255 * (0.6 * xx + 0.4 * yy) / (n - 1)).astype(np.uint8))


def noise_image(n, seed=0):
    rng = np.random.default_rng(seed)
    return GrayImage(rng.integers(0, 256, (n, n), dtype=np.uint8))


def _smooth_field(n, seed):
    # fallback "natural" texture when scikit-image is missing
    rng = np.random.default_rng(seed)
    f = np.fft.fft2(rng.normal(size=(n, n)))
    k = np.hypot(*np.meshgrid(np.fft.fftfreq(n), np.fft.fftfreq(n)))
    k[0, 0] = 1
    field = np.real(np.fft.ifft2(f / k ** 1.6))
    field = (field - field.min()) / (field.max() - field.min())
    return GrayImage(np.rint(20 + 215 * field).astype(np.uint8))


def natural_image(n):
    try:
        from skimage.data import camera
    except ImportError:
        return _smooth_field(n, 7)
    full = camera().astype(np.float64)
    f = full.shape[0] // n
    small = full[:n * f, :n * f].reshape(n, f, n, f).mean(axis=(1, 3))
    return GrayImage(np.rint(small).astype(np.uint8))


def noisy_gradient_image(n, sigma, seed):
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:n, 0:n]
    base = 255 * (0.5 * xx / (n - 1) + 0.3 * yy / (n - 1)) + 20
    return GrayImage(np.clip(np.rint(base + rng.normal(0, sigma, (n, n))), 0, 255).astype(np.uint8))


IMAGE_KINDS = {
    "constant": constant_image,
    "gradient": gradient_image,
    "noise": noise_image,
    "natural": natural_image,
}


def standard_image(name):
    """Standard 512x512 test image from ``$RCM_TEST_IMAGES``, or None."""
    if not TEST_IMAGE_DIR:
        return None
    for ext in (".pgm", ".PGM"):
        p = Path(TEST_IMAGE_DIR) / f"{name}{ext}"
        if p.exists():
            return load_pgm(p)
    return None


@pytest.fixture
def report():
    def add(line):
        _report_lines.append(line)
        print(line)
    return add


def pytest_terminal_summary(terminalreporter):
    if _report_lines:
        terminalreporter.section("acceptance criteria")
        for line in _report_lines:
            terminalreporter.write_line(line)
