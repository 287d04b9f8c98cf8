"""Deterministic synthetic greyscale images for tests, demos and benchmarks.

The images mix a power-law (``1/f``) random field with a few flat-shaded
discs and rectangles, which gives both texture and sharp edges, and are
scaled to ``[0, 1]``.
"""

import numpy as np


def desk_image(shape=(128, 128), seed=0, *, n_shapes=6, texture=0.5):
    """Return one synthetic image of ``shape`` with values in ``[0, 1]``."""
    rng = np.random.default_rng(seed)
    n1, n2 = shape
    f1 = np.fft.fftfreq(n1)[:, None]
    f2 = np.fft.fftfreq(n2)[None, :]
    radius = np.hypot(f1, f2)
    radius[0, 0] = 1.0
    spectrum = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / radius
    spectrum[0, 0] = 0.0
    field = np.fft.ifft2(spectrum).real
    field = (field - field.mean()) / (field.std() + 1e-12)

    rows, cols = np.mgrid[:n1, :n2]
    layout = np.zeros(shape)
    for _ in range(n_shapes):
        level = rng.uniform(-1.0, 1.0)
        r0, c0 = rng.uniform(0, n1), rng.uniform(0, n2)
        if rng.random() < 0.5:
            rad = rng.uniform(0.08, 0.25) * min(n1, n2)
            mask = (rows - r0) ** 2 + (cols - c0) ** 2 <= rad ** 2
        else:
            h, w = rng.uniform(0.1, 0.4) * n1, rng.uniform(0.1, 0.4) * n2
            mask = (np.abs(rows - r0) <= h / 2) & (np.abs(cols - c0) <= w / 2)
        layout[mask] = level

    img = texture * field + layout
    img -= img.min()
    return img / img.max()


def desk_batch(n_images, shape=(64, 64), seed=0, **kwargs):
    """Stack of ``n_images`` independent desk images, shape ``(P, n1, n2)``."""
    seeds = np.random.SeedSequence(seed).generate_state(n_images)
    return np.stack([desk_image(shape, int(s), **kwargs) for s in seeds])
