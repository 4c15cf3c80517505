"""Export a fixed set of scikit-image sample images as 8-bit binary PGM files.

Training and test sets are disjoint. Each image is center-cropped to a square
and resampled to 256x256.
"""
import pathlib
import sys

import numpy as np
from skimage import color, data, transform, util

TRAIN = ["chelsea", "rocket", "brick", "grass", "gravel",
         "immunohistochemistry", "retina", "page", "cell", "horse"]
TEST = ["camera", "moon", "coins", "astronaut", "coffee"]
SIZE = 256


def load_gray(name):
    img = getattr(data, name)()
    if img.ndim == 3:
        img = color.rgb2gray(img[..., :3])
    img = util.img_as_float(img)
    h, w = img.shape
    s = min(h, w)
    top, left = (h - s) // 2, (w - s) // 2
    img = img[top:top + s, left:left + s]
    img = transform.resize(img, (SIZE, SIZE), anti_aliasing=True)
    return np.clip(np.round(img * 255.0), 0, 255).astype(np.uint8)


def write_pgm(path, img):
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (img.shape[1], img.shape[0]))
        f.write(img.tobytes())


def main(out_dir):
    root = pathlib.Path(out_dir)
    for sub, names in (("train", TRAIN), ("test", TEST)):
        (root / sub).mkdir(parents=True, exist_ok=True)
        for name in names:
            write_pgm(root / sub / f"{name}.pgm", load_gray(name))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tests/data")
