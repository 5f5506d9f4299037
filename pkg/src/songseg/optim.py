"""Adam optimizer with bias correction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamState:
    """First/second moment estimates plus the shared step counter."""

    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def init_adam(params: dict, lr: float = 0.001) -> AdamState:
    state = AdamState(lr=lr)
    for name, p in params.items():
        state.m[name] = np.zeros_like(p, dtype=np.float32)
        state.v[name] = np.zeros_like(p, dtype=np.float32)
    return state


def adam_step(params: dict, grads: dict, state: AdamState) -> None:
    """One bias-corrected update, in place.

    Moments accumulate in float64 and are stored back as float32, matching
    the checkpoint format.
    """
    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t
    for name, p in params.items():
        g = np.asarray(grads[name], dtype=np.float64)
        m = state.beta1 * state.m[name].astype(np.float64) + (1.0 - state.beta1) * g
        v = state.beta2 * state.v[name].astype(np.float64) + (1.0 - state.beta2) * g * g
        state.m[name] = m.astype(np.float32)
        state.v[name] = v.astype(np.float32)
        update = state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
        params[name] = (p.astype(np.float64) - update).astype(np.float32)
