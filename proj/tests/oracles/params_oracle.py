# Copyright 2026 The tacdiff Authors
# SPDX-License-Identifier: Apache-2.0
"""Parameter counts tallied layer by layer for the denoiser and the classifier."""
import json
import pathlib

OUT = pathlib.Path(__file__).resolve().parents[1] / "data" / "params_oracle.json"


def conv(cin, cout, k):
    return cin * cout * k * k + cout


def linear(i, o):
    return i * o + o


def norm(c):
    return 2 * c


def block(cin, cout, e):
    n = norm(cin) + conv(cin, cout, 3) + linear(e, cout) + norm(cout) + conv(cout, cout, 3)
    return n + (conv(cin, cout, 1) if cin != cout else 0)


def denoiser(base, mults, blocks, e):
    chans = [base * m for m in mults]
    n = 2 * linear(e, e) + conv(4, chans[0], 3)
    ch = chans[0]
    for s, out in enumerate(chans):
        for _ in range(blocks):
            n += block(ch, out, e)
            ch = out
        if s + 1 < len(chans):
            n += conv(ch, ch, 3)
    n += block(ch, ch, e)
    for s in reversed(range(len(chans))):
        out = chans[s]
        for _ in range(blocks):
            n += block(ch + out, out, e)
            ch = out
        if s > 0:
            n += conv(ch, chans[s - 1], 3)
            ch = chans[s - 1]
    return n + norm(ch) + conv(ch, 3, 3)


def classifier(stages, size, classes):
    n, cin = 0, 3
    for c in stages:
        n += conv(cin, c, 3)
        cin = c
        size //= 2
    return n + linear(cin * size * size, classes)


configs = [
    {"base_channels": 16, "channel_multipliers": [1, 2, 2], "blocks_per_stage": 2,
     "noise_embed_dim": 32},
    {"base_channels": 8, "channel_multipliers": [1, 2], "blocks_per_stage": 1,
     "noise_embed_dim": 16},
    {"base_channels": 2, "channel_multipliers": [1, 1], "blocks_per_stage": 1,
     "noise_embed_dim": 4},
]
for c in configs:
    c["parameters"] = denoiser(c["base_channels"], c["channel_multipliers"],
                               c["blocks_per_stage"], c["noise_embed_dim"])
data = {"denoiser": configs,
        "classifier": {"stage_channels": [16, 32, 64], "size": 64, "classes": 27,
                       "parameters": classifier([16, 32, 64], 64, 27)}}
OUT.write_text(json.dumps(data, indent=1) + "\n")
print(json.dumps(data))
