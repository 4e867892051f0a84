# Copyright 2026 The tacdiff Authors
# SPDX-License-Identifier: Apache-2.0
"""Twenty fixed RGB image pairs with reference SSIM (scikit-image) and MSE (numpy)."""
import json
import pathlib

import numpy as np
from PIL import Image
from skimage.metrics import structural_similarity

DATA = pathlib.Path(__file__).resolve().parents[1] / "data"
PAIRS = DATA / "metric_pairs"
PAIRS.mkdir(parents=True, exist_ok=True)
rng = np.random.default_rng(7)


def smooth(h, w):
    yy, xx = np.mgrid[0:h, 0:w]
    img = np.zeros((h, w, 3))
    for c in range(3):
        fx, fy, ph = rng.uniform(0.05, 0.4, 2).tolist() + [rng.uniform(0, 6)]
        img[..., c] = 0.5 + 0.4 * np.sin(fx * xx + ph) * np.cos(fy * yy)
    return img


def make_pair(i):
    h, w = [(64, 64), (32, 48), (11, 11), (40, 23), (64, 32)][i % 5]
    kind = i // 5
    a = smooth(h, w) if kind % 2 == 0 else rng.uniform(0, 1, (h, w, 3))
    if kind == 0:
        b = a + rng.normal(0, 0.05 + 0.02 * i, a.shape)
    elif kind == 1:
        b = 0.7 * a + 0.2
    elif kind == 2:
        b = np.roll(a, 2, axis=1) + rng.normal(0, 0.03, a.shape)
    else:
        b = rng.uniform(0, 1, a.shape) if i % 2 else a.copy()
    a = np.round(np.clip(a, 0, 1) * 255).astype(np.uint8)
    b = np.round(np.clip(b, 0, 1) * 255).astype(np.uint8)
    return a, b


records = []
for i in range(20):
    a, b = make_pair(i)
    Image.fromarray(a).save(PAIRS / f"pair_{i:02d}_a.png")
    Image.fromarray(b).save(PAIRS / f"pair_{i:02d}_b.png")
    fa, fb = a.astype(np.float64) / 255.0, b.astype(np.float64) / 255.0
    s = structural_similarity(fa, fb, gaussian_weights=True, sigma=1.5,
                              use_sample_covariance=False, data_range=1.0, channel_axis=2)
    m = float(np.mean((fa * 255.0 - fb * 255.0) ** 2))
    records.append({"a": f"pair_{i:02d}_a.png", "b": f"pair_{i:02d}_b.png",
                    "ssim": float(s), "mse": m})

(DATA / "metrics_oracle.json").write_text(json.dumps({"pairs": records}, indent=1) + "\n")
print("wrote", len(records), "pairs")
