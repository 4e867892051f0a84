# Copyright 2026 The tacdiff Authors
# SPDX-License-Identifier: Apache-2.0
"""Reference depth maps and Phong foregrounds on a 16 x 16 sensor (16 mm gel)."""
import json
import pathlib

import numpy as np

OUT = pathlib.Path(__file__).resolve().parents[1] / "data" / "render_oracle.json"
H = W = 16
GEL = 16.0
MAX_PEN = 2.5
AMBIENT, KD, KS, SHINE = 0.05, 0.6, 0.15, 12.0

el = np.radians(35.0)
LIGHTS = [
    (np.array([np.cos(el) * np.cos(np.radians(az)), np.cos(el) * np.sin(np.radians(az)),
               np.sin(el)]), np.array(col))
    for az, col in [(90, (0.9, 0.15, 0.1)), (210, (0.1, 0.85, 0.15)), (330, (0.1, 0.2, 0.9))]
]
BRAILLE_K = [0, 2]  # dots 1 and 3


def sphere(r):
    def f(u, v):
        r2 = u * u + v * v
        return np.where(r2 < r * r, np.sqrt(np.maximum(r * r - r2, 0)) - r, -np.inf)
    return f


def braille(dots, a=1.5, pitch=5.0, h=1.0, plate=20.0):
    rs = (a * a + h * h) / (2 * h)

    def f(u, v):
        best = np.where((np.abs(u) <= plate / 2) & (np.abs(v) <= plate / 2), -h, -np.inf)
        for d in dots:
            cu = (-0.5 if d < 3 else 0.5) * pitch
            cv = (d % 3 - 1) * pitch
            r2 = (u - cu) ** 2 + (v - cv) ** 2
            cap = np.sqrt(np.maximum(rs * rs - r2, 0)) - (rs - h) - h
            best = np.where(r2 < a * a, np.maximum(best, cap), best)
        return best
    return f


def depth(surface, dx, dy, dz, yaw):
    px = GEL / W
    xs = (np.arange(W) + 0.5) * px - GEL / 2 - dx
    ys = (np.arange(H) + 0.5) * px - GEL / 2 - dy
    du, dv = np.meshgrid(xs, ys)
    c, s = np.cos(np.radians(yaw)), np.sin(np.radians(yaw))
    h = surface(c * du + s * dv, -s * du + c * dv)
    return np.where(np.isfinite(h), np.clip(h - dz, 0, MAX_PEN), 0.0)


def shade(n):
    out = np.full(3, AMBIENT)
    for l, col in LIGHTS:
        ndl = n @ l
        if ndl > 0:
            rz = 2 * ndl * n[2] - l[2]
            out = out + col * (KD * ndl + KS * max(0.0, rz) ** SHINE)
    return out


def foreground(d):
    p = np.pad(d, 1, mode="edge")
    mm = GEL / W
    fg = np.zeros((3, H, W))
    flat = shade(np.array([0.0, 0.0, 1.0]))
    for y in range(H):
        for x in range(W):
            # one-sided differences at the border span a single pixel
            wx = 2 if 0 < x < W - 1 else 1
            wy = 2 if 0 < y < H - 1 else 1
            gx = (p[y + 1, x + 2] - p[y + 1, x]) / (wx * mm)
            gy = (p[y + 2, x + 1] - p[y, x + 1]) / (wy * mm)
            n = np.array([gx, gy, 1.0])
            fg[:, y, x] = shade(n / np.linalg.norm(n)) - flat
    return fg


cases = [
    {"shape": "sphere", "radius_mm": 3.0, "pose": [1.0, -0.5, -1.0, 30.0], "f": sphere(3.0)},
    {"shape": "braille", "char": "K", "pose": [0.5, 0.5, -1.5, -45.0], "f": braille(BRAILLE_K)},
]
out = []
for c in cases:
    d = depth(c.pop("f"), *c["pose"])
    c["depth"] = d.ravel().tolist()
    c["foreground"] = foreground(d).ravel().tolist()
    out.append(c)
OUT.write_text(json.dumps({"height": H, "width": W, "gel_mm": GEL, "cases": out}) + "\n")
print("wrote", OUT)
