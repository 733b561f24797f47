"""Mini-batch SGD with momentum, seeded augmentation and held-out evaluation."""
from dataclasses import asdict, dataclass

import numpy as np

from ..errors import EmptySetError, InvalidConfigError, InvalidLabelError, TrainingDivergedError
from .kernels import warp_images
from .model import forward, init_params, loss_and_gradients


@dataclass(frozen=True)
class TrainConfig:
    split_fraction: float = 0.6
    batch_size: int = 32
    learning_rate: float = 0.05
    momentum: float = 0.9
    epochs: int = 10
    scale_range: tuple = (1.0, 2.0)
    max_translation: float = 0.3  # per axis, fraction of image width/height
    augment: bool = True
    lr_schedule: str = "cosine"  # or "constant"
    clip_norm: float = 1.0  # global gradient-norm ceiling; 0 disables
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "scale_range", tuple(float(v) for v in self.scale_range))
        if not 0.0 < self.split_fraction < 1.0:
            raise InvalidConfigError("split_fraction must lie in (0, 1)")
        if self.batch_size < 1 or self.epochs < 0 or self.learning_rate <= 0 or self.clip_norm < 0:
            raise InvalidConfigError("batch_size >= 1, epochs >= 0, learning_rate > 0 and clip_norm >= 0 required")
        if self.lr_schedule not in ("cosine", "constant"):
            raise InvalidConfigError(f"unknown lr_schedule {self.lr_schedule!r}")
        if not 0.0 <= self.momentum < 1.0:
            raise InvalidConfigError("momentum must lie in [0, 1)")
        lo, hi = self.scale_range
        if not 0 < lo <= hi or not 0 <= self.max_translation:
            raise InvalidConfigError("invalid augmentation ranges")

    def to_dict(self):
        d = asdict(self)
        d["scale_range"] = list(self.scale_range)
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def split_indices(labels, fraction, rng):
    """Per-class random split so every class appears on both sides when possible."""
    train, test = [], []
    for c in np.unique(labels):
        idx = rng.permutation(np.flatnonzero(labels == c))
        k = int(round(fraction * len(idx)))
        if len(idx) > 1:
            k = min(max(k, 1), len(idx) - 1)
        train.append(idx[:k])
        test.append(idx[k:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def augment(images, config, rng):
    """Random zoom in ``scale_range`` and shift up to ``max_translation`` per axis."""
    m = len(images)
    lo, hi = config.scale_range
    scale = rng.uniform(lo, hi, m)
    t = config.max_translation
    tx, ty = rng.uniform(-t, t, m), rng.uniform(-t, t, m)
    return warp_images(images, scale, tx, ty)


def learning_rate(config, step, total_steps):
    """Step size at ``step``; cosine decays from the base rate towards zero."""
    if config.lr_schedule == "constant" or total_steps <= 1:
        return config.learning_rate
    return 0.5 * config.learning_rate * (1.0 + np.cos(np.pi * step / total_steps))


def _accuracy_and_loss(params, images, labels):
    if len(images) == 0:
        return float("nan"), float("nan")
    logits, _ = forward(params, images)
    z = logits - logits.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    loss = -logp[np.arange(len(labels)), labels].mean()
    return float((logits.argmax(axis=1) == labels).mean()), float(loss)


def train(netspec, images, labels, config=TrainConfig()):
    """Train from a seeded He initialisation.

    Returns ``(params, history)``. ``history`` holds per-epoch ``train_acc``,
    ``train_loss`` (clean training images), ``test_acc``, ``test_loss``
    (held-out images) and the ``train_index`` / ``test_index`` split.
    Deterministic for a fixed seed.
    """
    images = np.asarray(images, dtype=np.float64)
    labels = np.asarray(labels)
    if len(images) != len(labels):
        raise InvalidLabelError("one label per image required")
    if not np.issubdtype(labels.dtype, np.integer) or labels.min() < 0 or labels.max() >= netspec.n_classes:
        raise InvalidLabelError(f"labels must be integers in [0, {netspec.n_classes})")
    init_seed, split_seed, order_seed, aug_seed = np.random.SeedSequence(config.seed).spawn(4)
    train_idx, test_idx = split_indices(labels, config.split_fraction, np.random.default_rng(split_seed))
    if len(np.unique(labels[train_idx])) < 2:
        raise InvalidConfigError("training split needs at least two classes")

    params = init_params(netspec, int(init_seed.generate_state(1)[0]))
    x_train, y_train = images[train_idx], labels[train_idx]
    params.input_mean = float(x_train.mean())
    params.input_scale = float(x_train.std()) or 1.0
    velocity = [{k: np.zeros_like(v) for k, v in t.items()} for t in params.tensors]
    order_rng = np.random.default_rng(order_seed)
    aug_rng = np.random.default_rng(aug_seed)
    history = {"train_acc": [], "train_loss": [], "test_acc": [], "test_loss": [],
               "train_index": train_idx, "test_index": test_idx}
    steps_per_epoch = -(-len(x_train) // config.batch_size)
    total_steps, step = steps_per_epoch * config.epochs, 0
    for _ in range(config.epochs):
        x_epoch = augment(x_train, config, aug_rng) if config.augment else x_train
        order = order_rng.permutation(len(x_train))
        for a in range(0, len(order), config.batch_size):
            b = order[a:a + config.batch_size]
            loss, grads = loss_and_gradients(params, x_epoch[b], y_train[b])
            if not np.isfinite(loss):
                raise TrainingDivergedError("loss became non-finite", epoch=len(history["train_acc"]))
            if config.clip_norm > 0:
                norm = np.sqrt(sum(float(np.sum(g[k] ** 2)) for g in grads for k in g))
                if norm > config.clip_norm:
                    grads = [{k: v * (config.clip_norm / norm) for k, v in g.items()} for g in grads]
            lr = learning_rate(config, step, total_steps)
            step += 1
            for t, g, v in zip(params.tensors, grads, velocity):
                for k in t:
                    v[k] *= config.momentum
                    v[k] -= lr * g[k]
                    t[k] += v[k]
        acc, loss = _accuracy_and_loss(params, x_train, y_train)
        if not np.isfinite(loss):
            raise TrainingDivergedError("loss became non-finite", epoch=len(history["train_acc"]))
        history["train_acc"].append(acc)
        history["train_loss"].append(loss)
        acc, loss = _accuracy_and_loss(params, images[test_idx], labels[test_idx])
        history["test_acc"].append(acc)
        history["test_loss"].append(loss)
    return params, history


def evaluate(params, stimuli, target_id):
    """Fraction of stimuli classified as ``target_id`` and the target logit per stimulus.

    ``target_id`` may be one class for all stimuli or one class per stimulus.
    """
    stimuli = np.asarray(stimuli, dtype=np.float64)
    if stimuli.ndim == 2:
        stimuli = stimuli[None]
    if len(stimuli) == 0:
        raise EmptySetError("no stimuli to evaluate")
    target = np.broadcast_to(np.asarray(target_id), (len(stimuli),))
    if not np.issubdtype(target.dtype, np.integer) or target.min() < 0 or target.max() >= params.spec.n_classes:
        raise InvalidLabelError(f"target must be an integer in [0, {params.spec.n_classes})")
    logits, _ = forward(params, stimuli)
    target_logits = logits[np.arange(len(stimuli)), target]
    return float((logits.argmax(axis=1) == target).mean()), target_logits
