"""Training loop: one whole track per step, Adam, per-epoch metric log."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .annotations import BoundarySet, TargetCurve
from .evaluation import match_boundaries, prf
from .layers import bce_with_logits
from .model import BoundaryNet
from .optim import AdamState, adam_step, init_adam
from .params import DEFAULT_MLS_THRESHOLD
from .postprocess import from_logits, pick_peaks


@dataclass
class TrackExample:
    """One training item: stacked input image, target curve, reference times."""

    name: str
    inputs: np.ndarray  # (bins, frames)
    target: TargetCurve
    boundaries: BoundarySet


@dataclass
class EpochStats:
    epoch: int
    split: str
    loss: float
    precision: float
    recall: float
    f1: float


@dataclass
class TrainResult:
    model: BoundaryNet
    adam: AdamState
    log: list
    best_params: dict
    best_adam: AdamState
    best_epoch: int
    best_val_loss: float


def _split_metrics(model, examples, threshold, tolerance):
    losses = []
    scores = []
    for ex in examples:
        logits = model.forward(ex.inputs)
        loss, _ = bce_with_logits(logits, ex.target.values)
        losses.append(loss)
        curve = from_logits(logits, ex.target.frame_rate, ex.target.pad_frames)
        est = pick_peaks(curve, threshold)
        scores.append(prf(match_boundaries(ex.boundaries, est, tolerance)))
    arr = np.asarray(scores, dtype=np.float64)
    return float(np.mean(losses)), (float(arr[:, 0].mean()),
                                    float(arr[:, 1].mean()),
                                    float(arr[:, 2].mean()))


def train(
    model: BoundaryNet,
    train_set,
    epochs: int,
    seed: int,
    val_set=None,
    lr: float = 0.001,
    threshold: float = DEFAULT_MLS_THRESHOLD,
    tolerance: float = 0.5,
) -> TrainResult:
    """Train in place for ``epochs`` passes over ``train_set``.

    Every epoch visits each track once in a seeded shuffled order (batch
    size is one whole track).  Train and validation loss plus hit-rate
    metrics are logged per epoch; the parameter snapshot with the lowest
    validation loss is retained (train loss stands in when there is no
    validation set).  A non-finite loss aborts immediately: with this
    learning rate that indicates an initialization or input-scaling fault.
    """
    if not train_set:
        raise ValueError("training set is empty")
    rng = np.random.default_rng(seed)
    adam = init_adam(model.params, lr=lr)
    log = []
    best_params = model.copy_params()
    best_adam = _copy_adam(adam)
    best_epoch = 0
    best_val_loss = np.inf

    for epoch in range(1, epochs + 1):
        order = rng.permutation(len(train_set))
        epoch_losses = []
        step_scores = []
        for idx in order:
            ex = train_set[idx]
            logits, caches = model.forward_with_cache(ex.inputs)
            loss, grad_logits = bce_with_logits(logits, ex.target.values)
            if not np.isfinite(loss):
                raise RuntimeError(
                    f"non-finite loss at epoch {epoch} on {ex.name!r}; "
                    "check input scaling and learning rate"
                )
            grads, _ = model.backward(grad_logits, caches)
            adam_step(model.params, grads, adam)
            epoch_losses.append(loss)
            # score the step's own forward pass rather than re-running the
            # whole split after the epoch
            curve = from_logits(logits, ex.target.frame_rate,
                                ex.target.pad_frames)
            est = pick_peaks(curve, threshold)
            step_scores.append(prf(match_boundaries(ex.boundaries, est,
                                                    tolerance)))

        scores = np.asarray(step_scores, dtype=np.float64)
        train_loss = float(np.mean(epoch_losses))
        log.append(EpochStats(epoch, "train", train_loss,
                              float(scores[:, 0].mean()),
                              float(scores[:, 1].mean()),
                              float(scores[:, 2].mean())))
        monitored = train_loss
        if val_set:
            val_loss, (vp, vr, vf) = _split_metrics(
                model, val_set, threshold, tolerance)
            log.append(EpochStats(epoch, "val", val_loss, vp, vr, vf))
            monitored = val_loss
        if monitored < best_val_loss:
            best_val_loss = monitored
            best_epoch = epoch
            best_params = model.copy_params()
            best_adam = _copy_adam(adam)

    return TrainResult(model=model, adam=adam, log=log,
                       best_params=best_params, best_adam=best_adam,
                       best_epoch=best_epoch, best_val_loss=float(best_val_loss))


def _copy_adam(adam: AdamState) -> AdamState:
    out = AdamState(lr=adam.lr, beta1=adam.beta1, beta2=adam.beta2,
                    eps=adam.eps, t=adam.t)
    out.m = {k: v.copy() for k, v in adam.m.items()}
    out.v = {k: v.copy() for k, v in adam.v.items()}
    return out


def write_log_csv(path, log) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("epoch,split,loss,precision,recall,f1\n")
        for row in log:
            fh.write(f"{row.epoch},{row.split},{row.loss!r},"
                     f"{row.precision!r},{row.recall!r},{row.f1!r}\n")
