"""The fully-convolutional boundary detector.

Four convolutions and one pooling stage map a single-channel input image
(feature bins x time frames) to one logit per time frame.  The first two
convolutions are shape-preserving in time; after pooling, the remaining
height is folded into channels so the last two layers are 1x1 convolutions
over time only.  Because that fold ties the third convolution's input
channel count to the pooled height, a model is built for a specific input
height and records it.
"""

from __future__ import annotations

import numpy as np

from . import layers

LEAKY_SLOPE = 0.01

CONV1 = {"maps": 32, "kernel": (5, 7), "stride": (1, 1), "pad": (2, 3),
         "dilation": (1, 1)}
POOL = {"kernel": (5, 3), "stride": (5, 1), "pad": (1, 1)}
CONV2 = {"maps": 64, "kernel": (3, 5), "stride": (1, 1), "pad": (1, 6),
         "dilation": (1, 3)}
CONV3 = {"maps": 128, "kernel": (1, 1), "stride": (1, 1), "pad": (0, 0),
         "dilation": (1, 1)}
CONV4 = {"maps": 1, "kernel": (1, 1), "stride": (1, 1), "pad": (0, 0),
         "dilation": (1, 1)}

PARAM_NAMES = ("conv1.w", "conv1.b", "conv2.w", "conv2.b",
               "conv3.w", "conv3.b", "conv4.w", "conv4.b")


def pooled_height(input_height: int) -> int:
    return layers.conv_output_size(
        input_height, POOL["kernel"][0], POOL["stride"][0], POOL["pad"][0], 1
    )


def _he_uniform(rng, shape) -> np.ndarray:
    fan_in = int(np.prod(shape[1:]))
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape).astype(np.float32)


class BoundaryNet:
    """Boundary detector for inputs of a fixed height.

    Parameters are stored as float32 (what checkpoints carry); all forward
    and backward arithmetic happens in float64.
    """

    def __init__(self, input_height: int, seed: int = 0):
        if input_height < 3:
            raise ValueError("input height must be at least 3")
        self.input_height = int(input_height)
        self.pooled_height = pooled_height(self.input_height)
        self.seed = int(seed)
        rng = np.random.default_rng(seed)
        conv3_in = CONV2["maps"] * self.pooled_height
        self.params = {
            "conv1.w": _he_uniform(rng, (CONV1["maps"], 1, *CONV1["kernel"])),
            "conv1.b": np.zeros(CONV1["maps"], dtype=np.float32),
            "conv2.w": _he_uniform(rng, (CONV2["maps"], CONV1["maps"], *CONV2["kernel"])),
            "conv2.b": np.zeros(CONV2["maps"], dtype=np.float32),
            "conv3.w": _he_uniform(rng, (CONV3["maps"], conv3_in, *CONV3["kernel"])),
            "conv3.b": np.zeros(CONV3["maps"], dtype=np.float32),
            "conv4.w": _he_uniform(rng, (CONV4["maps"], CONV3["maps"], *CONV4["kernel"])),
            "conv4.b": np.zeros(CONV4["maps"], dtype=np.float32),
        }

    def _as_tensor(self, x) -> np.ndarray:
        """Accept a 2-D (bins x frames) image or a (1,1,H,W) tensor."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 2:
            x = x[None, None]
        if x.ndim != 4:
            raise ValueError(f"expected a 2-D image or 4-D tensor, got {x.shape}")
        if x.shape[2] < 3:
            raise ValueError("input height must be at least 3")
        if x.shape[2] != self.input_height:
            raise ValueError(
                f"model expects height {self.input_height}, input has {x.shape[2]}"
            )
        return x

    def forward_with_cache(self, x):
        x = self._as_tensor(x)
        p = self.params
        caches = {}
        h, caches["conv1"] = layers.conv2d_forward(
            x, p["conv1.w"], p["conv1.b"], CONV1["stride"], CONV1["pad"],
            CONV1["dilation"])
        h, caches["act1"] = layers.leaky_relu_forward(h, LEAKY_SLOPE)
        h, caches["pool"] = layers.maxpool2d_forward(
            h, POOL["kernel"], POOL["stride"], POOL["pad"])
        h, caches["conv2"] = layers.conv2d_forward(
            h, p["conv2.w"], p["conv2.b"], CONV2["stride"], CONV2["pad"],
            CONV2["dilation"])
        h, caches["act2"] = layers.leaky_relu_forward(h, LEAKY_SLOPE)
        h, caches["collapse"] = layers.collapse_freq_forward(h)
        h, caches["conv3"] = layers.conv2d_forward(
            h, p["conv3.w"], p["conv3.b"], CONV3["stride"], CONV3["pad"],
            CONV3["dilation"])
        h, caches["act3"] = layers.leaky_relu_forward(h, LEAKY_SLOPE)
        h, caches["conv4"] = layers.conv2d_forward(
            h, p["conv4.w"], p["conv4.b"], CONV4["stride"], CONV4["pad"],
            CONV4["dilation"])
        return h[0, 0, 0, :], caches

    def forward(self, x) -> np.ndarray:
        """Logit curve, one value per input time frame."""
        logits, _ = self.forward_with_cache(x)
        return logits

    def backward(self, grad_logits, caches):
        """Parameter gradients (and the input gradient) for a logit gradient."""
        g = np.asarray(grad_logits, dtype=np.float64).reshape(1, 1, 1, -1)
        grads = {}
        g, grads["conv4.w"], grads["conv4.b"] = layers.conv2d_backward(
            g, caches["conv4"])
        g = layers.leaky_relu_backward(g, caches["act3"])
        g, grads["conv3.w"], grads["conv3.b"] = layers.conv2d_backward(
            g, caches["conv3"])
        g = layers.collapse_freq_backward(g, caches["collapse"])
        g = layers.leaky_relu_backward(g, caches["act2"])
        g, grads["conv2.w"], grads["conv2.b"] = layers.conv2d_backward(
            g, caches["conv2"])
        g = layers.maxpool2d_backward(g, caches["pool"])
        g = layers.leaky_relu_backward(g, caches["act1"])
        g, grads["conv1.w"], grads["conv1.b"] = layers.conv2d_backward(
            g, caches["conv1"])
        return grads, g

    def copy_params(self) -> dict:
        return {k: v.copy() for k, v in self.params.items()}

    def load_params(self, params: dict) -> None:
        for name in PARAM_NAMES:
            if name not in params:
                raise ValueError(f"missing parameter {name}")
            if params[name].shape != self.params[name].shape:
                raise ValueError(
                    f"parameter {name} has shape {params[name].shape}, "
                    f"expected {self.params[name].shape}"
                )
            self.params[name] = params[name].astype(np.float32, copy=True)


def stack_input_matrices(matrices) -> np.ndarray:
    """Concatenate finalized feature matrices along the bin (height) axis."""
    arrays = [np.asarray(m.values if hasattr(m, "values") else m) for m in matrices]
    widths = {a.shape[1] for a in arrays}
    if len(widths) > 1:
        raise ValueError(f"input matrices disagree on frame count: {sorted(widths)}")
    return np.vstack(arrays)
