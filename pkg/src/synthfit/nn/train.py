"""Minibatch training with Adam, a held-out validation split, and early
stopping on validation loss.  Everything is driven by one seeded generator,
so a fixed (data, spec, config) triple reproduces bit-identical curves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InputError, TrainingDivergedError
from .layers import bce_grad, bce_loss
from .models import ModelSpec, Network, prepare_input
from .optim import Adam

EVAL_BATCH = 256


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    batch_size: int = 16
    max_epochs: int = 100
    patience: int = 10
    seed: int = 0
    val_fraction: float = 0.1

    def __post_init__(self):
        if self.batch_size < 1:
            raise InputError("batch_size must be >= 1")
        if self.patience < 1:
            raise InputError("patience must be >= 1")
        if not 0.0 < self.val_fraction < 1.0:
            raise InputError("val_fraction must lie in (0, 1)")

    def to_dict(self) -> dict:
        return {
            "lr": self.lr, "batch_size": self.batch_size,
            "max_epochs": self.max_epochs, "patience": self.patience,
            "seed": self.seed, "val_fraction": self.val_fraction,
        }


@dataclass
class TrainResult:
    network: Network
    train_curve: list[float]
    val_curve: list[float]
    best_epoch: int            # 0-based index into the curves
    stopped_epoch: int         # number of epochs actually run


def eval_loss(network: Network, x: np.ndarray, y: np.ndarray, batch: int = EVAL_BATCH) -> float:
    """Dropout-free loss over a dataset, batched to bound memory."""
    total = 0.0
    for lo in range(0, len(x), batch):
        xb = x[lo : lo + batch]
        scores = network.forward(xb, train=False)
        total += bce_loss(scores, y[lo : lo + batch]) * len(xb)
    return total / len(x)


def train(
    inputs: np.ndarray,
    labels: np.ndarray,
    spec: ModelSpec,
    cfg: TrainConfig = TrainConfig(),
    dtype=np.float32,
    log=None,
) -> TrainResult:
    """Fit ``spec`` to (inputs, labels).

    ``inputs`` is naturally shaped data for ``spec.input_kind``
    ((N, 257, 64) spectrograms, (N, 16384) audio, or (N, K) vectors);
    ``labels`` is (N, 368).  Raises TrainingDivergedError the moment a
    non-finite loss appears.
    """
    n = len(inputs)
    if len(labels) != n:
        raise InputError("inputs and labels disagree on length")
    n_val = max(1, int(round(n * cfg.val_fraction)))
    if n - n_val < 2 * cfg.batch_size:
        raise InputError(
            f"need at least two training batches after the validation split "
            f"({n} instances, batch {cfg.batch_size})"
        )

    rng = np.random.default_rng(cfg.seed)
    x_all = prepare_input(spec.input_kind, np.asarray(inputs)).astype(dtype, copy=False)
    y_all = np.asarray(labels, dtype=dtype)

    perm = rng.permutation(n)
    val_idx = perm[:n_val]
    train_idx = perm[n_val:]
    x_val, y_val = x_all[val_idx], y_all[val_idx]

    network = Network(spec, rng, dtype=dtype)
    opt = Adam(network.params(), lr=cfg.lr)

    train_curve: list[float] = []
    val_curve: list[float] = []
    best_val = np.inf
    best_epoch = -1
    best_state = None
    wait = 0
    epoch = 0

    for epoch in range(1, cfg.max_epochs + 1):
        order = train_idx[rng.permutation(len(train_idx))]
        for bno, lo in enumerate(range(0, len(order) - cfg.batch_size + 1, cfg.batch_size)):
            idx = order[lo : lo + cfg.batch_size]
            xb, yb = x_all[idx], y_all[idx]
            scores = network.forward(xb, train=True, rng=rng)
            loss = bce_loss(scores, yb)
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite training loss at epoch {epoch}, batch {bno}",
                    epoch=epoch, batch=bno,
                    history={"train": train_curve, "val": val_curve},
                )
            network.backward(bce_grad(scores, yb))
            opt.step(network.grads())

        train_loss = eval_loss(network, x_all[train_idx], y_all[train_idx])
        val_loss = eval_loss(network, x_val, y_val)
        if not (np.isfinite(train_loss) and np.isfinite(val_loss)):
            raise TrainingDivergedError(
                f"non-finite evaluation loss after epoch {epoch}",
                epoch=epoch, batch=-1,
                history={"train": train_curve, "val": val_curve},
            )
        train_curve.append(train_loss)
        val_curve.append(val_loss)
        if log is not None:
            log(epoch, train_loss, val_loss)

        if val_loss < best_val:
            best_val = val_loss
            best_epoch = epoch - 1
            best_state = network.state()
            wait = 0
        else:
            wait += 1
            if wait >= cfg.patience:
                break

    network.load_state(best_state)
    return TrainResult(network, train_curve, val_curve, best_epoch, epoch)
