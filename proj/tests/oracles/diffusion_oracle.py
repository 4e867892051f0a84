# Copyright 2026 The tacdiff Authors
# SPDX-License-Identifier: Apache-2.0
"""Closed-form reference values for the forward marginal, the y0 estimate,
the posterior and a two-step ancestral trace (T = 2, betas 0.1 and 0.3)."""
import json
import pathlib

import numpy as np

OUT = pathlib.Path(__file__).resolve().parents[1] / "data" / "diffusion_oracle.json"
rng = np.random.default_rng(20261016)
shape = (1, 2, 3)  # channels, height, width

betas = np.array([0.1, 0.3])
alphas = 1.0 - betas
abar = np.concatenate([[1.0], np.cumprod(alphas)])  # abar[0] = 1


def sigma(t):
    return 0.0 if t == 1 else np.sqrt(betas[t - 1] * (1 - abar[t - 1]) / (1 - abar[t]))


def vec():
    return rng.standard_normal(shape)


y0 = np.tanh(vec())
eps = vec()
t = 2
forward = np.sqrt(abar[t]) * y0 + np.sqrt(1 - abar[t]) * eps

# Eq. 4: y0 estimate from a noise prediction.
eps_hat = vec()
y0_hat = (forward - np.sqrt(1 - abar[t]) * eps_hat) / np.sqrt(abar[t])

# Posterior q(y_{t-1} | y_t, y0).
c0 = np.sqrt(abar[t - 1]) * betas[t - 1] / (1 - abar[t])
ct = np.sqrt(alphas[t - 1]) * (1 - abar[t - 1]) / (1 - abar[t])
post_mean = c0 * y0 + ct * forward
post_var = betas[t - 1] * (1 - abar[t - 1]) / (1 - abar[t])

# Two-step ancestral trace with fixed predictions and noise.
y_T = vec()
trace_eps = [vec(), vec()]  # predictions at t = 2, 1
z2 = vec()
y = y_T
states = []
for step, e in zip([2, 1], trace_eps):
    mean = (y - betas[step - 1] / np.sqrt(1 - abar[step]) * e) / np.sqrt(alphas[step - 1])
    y = mean + (sigma(step) * z2 if step > 1 else 0.0)
    states.append(y)


def flat(a):
    return [float(v) for v in np.asarray(a).ravel()]


data = {
    "shape": list(shape),
    "betas": flat(betas),
    "y0": flat(y0),
    "eps": flat(eps),
    "t": t,
    "forward": flat(forward),
    "eps_hat": flat(eps_hat),
    "y0_hat": flat(y0_hat),
    "posterior_mean": flat(post_mean),
    "posterior_variance": float(post_var),
    "trace": {
        "y_T": flat(y_T),
        "eps_hat": [flat(e) for e in trace_eps],
        "z": flat(z2),
        "y_1": flat(states[0]),
        "y_0": flat(states[1]),
    },
}
OUT.write_text(json.dumps(data, indent=1) + "\n")
print("wrote", OUT)
