"""Regenerate the bundled photographic fixtures.

Crops are taken from the public-domain / CC0 sample images shipped with
scikit-image and written as lossless 160x120 RGB PNGs.
"""
import os

import numpy as np
import skimage
import skimage.io as io
from skimage.transform import resize

SRC = os.path.join(os.path.dirname(skimage.__file__), "data")
OUT = os.path.join(os.path.dirname(__file__), "photos")
W, H = 160, 120

# (source file, crop box as fractions x0, y0, x1, y1)
CROPS = [
    ("astronaut.png", (0.0, 0.0, 1.0, 0.75)),
    ("astronaut.png", (0.1, 0.3, 0.7, 0.75)),
    ("astronaut.png", (0.4, 0.4, 1.0, 0.85)),
    ("camera.png", (0.0, 0.1, 1.0, 0.85)),
    ("camera.png", (0.3, 0.0, 0.9, 0.45)),
    ("chelsea.png", (0.0, 0.0, 1.0, 1.0)),
    ("chelsea.png", (0.35, 0.1, 0.85, 0.67)),
    ("coffee.png", (0.0, 0.0, 1.0, 1.0)),
    ("coffee.png", (0.0, 0.0, 0.5, 0.5)),
    ("coffee.png", (0.45, 0.3, 0.95, 0.8)),
    ("coins.png", (0.0, 0.0, 1.0, 1.0)),
    ("chelsea.png", (0.0, 0.4, 0.6, 1.0)),
    ("rocket.jpg", (0.0, 0.0, 1.0, 1.0)),
    ("rocket.jpg", (0.3, 0.2, 0.7, 0.8)),
    ("rocket.jpg", (0.0, 0.5, 0.5, 1.0)),
    ("hubble_deep_field.jpg", (0.0, 0.0, 0.4, 0.35)),
    ("hubble_deep_field.jpg", (0.5, 0.5, 1.0, 0.95)),
    ("hubble_deep_field.jpg", (0.2, 0.4, 0.7, 0.8)),
    ("brick.png", (0.0, 0.1, 1.0, 0.85)),
    ("grass.png", (0.0, 0.1, 1.0, 0.85)),
    ("gravel.png", (0.0, 0.1, 1.0, 0.85)),
    ("ihc.png", (0.0, 0.0, 0.6, 0.45)),
    ("ihc.png", (0.4, 0.5, 1.0, 0.95)),
    ("clock_motion.png", (0.0, 0.0, 1.0, 1.0)),
    ("astronaut.png", (0.5, 0.0, 1.0, 0.4)),
]


def main():
    os.makedirs(OUT, exist_ok=True)
    for i, (name, (x0, y0, x1, y1)) in enumerate(CROPS):
        img = io.imread(os.path.join(SRC, name))
        if img.ndim == 2:
            img = np.stack([img] * 3, axis=-1)
        img = img[..., :3]
        h, w = img.shape[:2]
        crop = img[int(y0 * h) : int(y1 * h), int(x0 * w) : int(x1 * w)]
        small = resize(crop, (H, W), anti_aliasing=True, preserve_range=True)
        small = np.clip(np.round(small), 0, 255).astype(np.uint8)
        stem = os.path.splitext(name)[0]
        io.imsave(os.path.join(OUT, f"{i:03d}_{stem}.png"), small, check_contrast=False)


if __name__ == "__main__":
    main()
