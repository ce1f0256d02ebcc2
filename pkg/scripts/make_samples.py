"""Regenerate the bundled sample images in src/dctnet/samples/.

Downscaled copies of public-domain photographs shipped with scikit-image.
"""

from pathlib import Path

import numpy as np
from skimage import data
from skimage.transform import resize

from dctnet.data import write_pnm

OUT = Path(__file__).resolve().parents[1] / "src" / "dctnet" / "samples"
SIZES = {"astronaut": (64, 64), "coffee": (48, 72), "chelsea": (64, 96),
         "rocket": (60, 90), "camera": (64, 64)}

for name, size in SIZES.items():
    img = resize(getattr(data, name)(), size, anti_aliasing=True, preserve_range=True)
    write_pnm(OUT / f"{name}.{'pgm' if img.ndim == 2 else 'ppm'}", np.rint(img))
    print(name, img.shape)
