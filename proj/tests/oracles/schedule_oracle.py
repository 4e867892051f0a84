# Copyright 2026 The tacdiff Authors
# SPDX-License-Identifier: Apache-2.0
"""High-precision linear DDPM schedule values (mpmath, 50 digits)."""
import json
import pathlib

import mpmath as mp

mp.mp.dps = 50
OUT = pathlib.Path(__file__).resolve().parents[1] / "data" / "schedule_oracle.json"


def schedule(T, b0, b1):
    b0, b1 = mp.mpf(b0), mp.mpf(b1)
    betas = [b0 + (b1 - b0) * (t - 1) / (T - 1) if T > 1 else b0 for t in range(1, T + 1)]
    abar = [mp.mpf(1)]
    for b in betas:
        abar.append(abar[-1] * (1 - b))
    sigma = [mp.mpf(0)]
    for t in range(2, T + 1):
        sigma.append(mp.sqrt(betas[t - 1] * (1 - abar[t - 1]) / (1 - abar[t])))
    return betas, abar, sigma


def entry(T, b0, b1, probes):
    betas, abar, sigma = schedule(T, b0, b1)
    return {
        "timesteps": T,
        "beta_start": b0,
        "beta_end": b1,
        "probes": [
            {"t": t, "beta": float(betas[t - 1]), "alpha_bar": float(abar[t]),
             "sigma": float(sigma[t - 1])}
            for t in probes
        ],
    }


data = {
    "schedules": [
        entry(500, "1e-4", "0.02", [1, 2, 3, 10, 50, 100, 250, 400, 499, 500]),
        entry(100, "1e-4", "0.02", [1, 2, 50, 99, 100]),
        entry(2, "0.1", "0.3", [1, 2]),
    ]
}
for s in data["schedules"]:
    s["beta_start"] = float(s["beta_start"])
    s["beta_end"] = float(s["beta_end"])
OUT.write_text(json.dumps(data, indent=1) + "\n")
print("wrote", OUT)
