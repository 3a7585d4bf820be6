#!/usr/bin/env python3
"""Regenerates fixtures/corpus from the sample images bundled with scikit-image.

All sources are CC0 or public domain except the scikit-image logo (BSD-3).
Images are resized so the long side is 128 px with Lanczos resampling.
"""
import os
import sys

import numpy as np
from PIL import Image
import skimage

LONG_SIDE = 128
DATA = os.path.join(os.path.dirname(skimage.__file__), "data")

# (source file, output name, mode)
SOURCES = [
    ("astronaut.png", "astronaut.png", "RGB"),
    ("chelsea.png", "chelsea.png", "RGB"),
    ("coffee.png", "coffee.ppm", "RGB"),
    ("rocket.jpg", "rocket.png", "RGB"),
    ("hubble_deep_field.jpg", "hubble.png", "RGB"),
    ("ihc.png", "ihc.png", "RGB"),
    ("retina.jpg", "retina.png", "RGB"),
    ("grass.png", "grass.png", "L"),
    ("brick.png", "brick.png", "L"),
    ("gravel.png", "gravel.pgm", "L"),
    ("logo.png", "logo_rgba.png", "RGBA"),
]


def resized(path, mode):
    im = Image.open(path).convert(mode)
    w, h = im.size
    scale = LONG_SIDE / max(w, h)
    return im.resize((round(w * scale), round(h * scale)), Image.LANCZOS)


def main(out_dir):
    os.makedirs(out_dir, exist_ok=True)
    for src, name, mode in SOURCES:
        resized(os.path.join(DATA, src), mode).save(os.path.join(out_dir, name))

    # Cat photo with a radial alpha falloff, exercising the 4-channel path on photo content.
    cat = np.asarray(resized(os.path.join(DATA, "chelsea.png"), "RGB"))
    h, w, _ = cat.shape
    yy, xx = np.mgrid[0:h, 0:w]
    r = np.hypot((yy - h / 2) / (h / 2), (xx - w / 2) / (w / 2))
    alpha = np.clip(255 * (1.3 - r), 0, 255).round().astype(np.uint8)
    rgba = np.dstack([cat, alpha])
    Image.fromarray(rgba, "RGBA").save(os.path.join(out_dir, "chelsea_alpha.png"))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "..", "fixtures", "corpus"))
