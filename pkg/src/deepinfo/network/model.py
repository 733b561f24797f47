"""Forward pass, exact backprop and softmax cross-entropy for a NetSpec."""
from dataclasses import dataclass

import numpy as np

from ..errors import EmptySetError, InvalidInputError, InvalidLabelError
from .kernels import col2im, im2col, out_size
from .spec import NetSpec


@dataclass
class Params:
    spec: NetSpec
    tensors: list  # one dict of named float64 arrays per layer (empty for parameter-free layers)
    seed: int = 0
    # fixed input standardisation, (x - input_mean) / input_scale; set from training data, not learned
    input_mean: float = 0.0
    input_scale: float = 1.0

    def copy(self):
        return Params(self.spec, [{k: v.copy() for k, v in t.items()} for t in self.tensors], self.seed,
                      self.input_mean, self.input_scale)

    def flat(self):
        """All parameters as ``(layer_index, name, array)`` in a fixed order."""
        return [(i, k, t[k]) for i, t in enumerate(self.tensors) for k in sorted(t)]


def init_params(spec, seed=0):
    """He (fan-in) initialisation; biases start at zero."""
    rng = np.random.default_rng(seed)
    shapes = spec.output_shapes()
    prev = (*spec.input_shape, 1)
    tensors = []
    for layer, out in zip(spec.layers, shapes):
        t = {}
        if layer.kind == "conv":
            fan_in = 9 * prev[2]
            t["W"] = rng.standard_normal((fan_in, layer.channels)) * np.sqrt(2.0 / fan_in)
            t["b"] = np.zeros(layer.channels)
        elif layer.kind == "residual":
            fan_in = 9 * layer.channels
            for k in ("1", "2"):
                t["W" + k] = rng.standard_normal((fan_in, layer.channels)) * np.sqrt(2.0 / fan_in)
                t["b" + k] = np.zeros(layer.channels)
        elif layer.kind in ("dense", "logits"):
            gain = 1.0 if layer.kind == "logits" else 2.0
            t["W"] = rng.standard_normal((prev[0], out[0])) * np.sqrt(gain / prev[0])
            t["b"] = np.zeros(out[0])
        tensors.append(t)
        prev = out
    return Params(spec, tensors, seed)


def _conv_forward(x, W, b, stride):
    N, H, Wd, _ = x.shape
    cols = im2col(np.ascontiguousarray(x), stride)
    out = cols @ W + b
    return out.reshape(N, out_size(H, stride), out_size(Wd, stride), W.shape[1]), cols


def _conv_backward(dout, cols, W, xshape, stride):
    N, H, Wd, C = xshape
    dflat = dout.reshape(-1, W.shape[1])
    dW = cols.T @ dflat
    db = dflat.sum(axis=0)
    dx = col2im(np.ascontiguousarray(dflat @ W.T), N, H, Wd, C, stride)
    return dx, dW, db


def _layer_forward(layer, t, x):
    kind = layer.kind
    if kind == "conv":
        out, cols = _conv_forward(x, t["W"], t["b"], layer.stride)
        return out, (x.shape, cols)
    if kind == "relu":
        return np.maximum(x, 0.0), x > 0
    if kind == "residual":
        h1, cols1 = _conv_forward(x, t["W1"], t["b1"], 1)
        a = np.maximum(h1, 0.0)
        h2, cols2 = _conv_forward(a, t["W2"], t["b2"], 1)
        return x + h2, (x.shape, cols1, h1 > 0, a.shape, cols2)
    if kind == "gap":
        return x.mean(axis=(1, 2)), x.shape
    # dense / logits
    return x @ t["W"] + t["b"], x


def _layer_backward(layer, t, dout, cache):
    kind = layer.kind
    if kind == "conv":
        xshape, cols = cache
        dx, dW, db = _conv_backward(dout, cols, t["W"], xshape, layer.stride)
        return dx, {"W": dW, "b": db}
    if kind == "relu":
        return dout * cache, {}
    if kind == "residual":
        xshape, cols1, mask1, ashape, cols2 = cache
        da, dW2, db2 = _conv_backward(dout, cols2, t["W2"], ashape, 1)
        dx1, dW1, db1 = _conv_backward(da * mask1, cols1, t["W1"], xshape, 1)
        return dout + dx1, {"W1": dW1, "b1": db1, "W2": dW2, "b2": db2}
    if kind == "gap":
        N, H, W, C = cache
        return np.broadcast_to(dout[:, None, None, :] / (H * W), cache).copy(), {}
    x = cache
    return dout @ t["W"].T, {"W": x.T @ dout, "b": dout.sum(axis=0)}


def _prepare(params, x):
    spec = params.spec
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 2
    if single:
        x = x[None]
    if x.ndim != 3 or x.shape[1:] != tuple(spec.input_shape):
        raise InvalidInputError(f"expected input of shape (n, {spec.input_shape[0]}, {spec.input_shape[1]})",
                                shape=list(x.shape))
    return ((x - params.input_mean) / params.input_scale)[..., None], single


def _run(params, x, keep_cache, capture):
    caches, captures = [], {}
    names = {idx: name for name, idx in params.spec.capture_points.items()} if capture else {}
    for i, (layer, t) in enumerate(zip(params.spec.layers, params.tensors)):
        x, cache = _layer_forward(layer, t, x)
        if keep_cache:
            caches.append(cache)
        if i in names:
            captures[names[i]] = x.reshape(x.shape[0], -1).copy()
    return x, caches, captures


def forward(params, input_pixels, capture=False, batch_size=512):
    """Logits (pre-argmax) for one image ``(H, W)`` or a batch ``(n, H, W)``.

    Returns ``(logits, captures)``; ``captures`` maps each capture-point name
    to an ``(n, units)`` matrix when ``capture`` is set, else it is empty.
    """
    x, single = _prepare(params, input_pixels)
    outs, caps = [], {}
    for a in range(0, max(len(x), 1), batch_size):
        logits, _, c = _run(params, x[a:a + batch_size], False, capture)
        outs.append(logits)
        for k, v in c.items():
            caps.setdefault(k, []).append(v)
    logits = np.concatenate(outs) if outs else np.zeros((0, params.spec.n_classes))
    captures = {k: np.concatenate(v) for k, v in caps.items()}
    if single:
        return logits[0], {k: v[0] for k, v in captures.items()}
    return logits, captures


def softmax_cross_entropy(logits, labels):
    """Mean cross-entropy (nats) and its gradient with respect to the logits."""
    z = logits - logits.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(z).sum(axis=1, keepdims=True))
    logp = z - logsum
    n = len(labels)
    loss = -logp[np.arange(n), labels].mean()
    dz = np.exp(logp)
    dz[np.arange(n), labels] -= 1.0
    return float(loss), dz / n


def _check_labels(spec, labels, n):
    labels = np.asarray(labels)
    if n == 0:
        raise EmptySetError("batch is empty")
    if labels.shape != (n,):
        raise InvalidLabelError("one label per sample required")
    if not np.issubdtype(labels.dtype, np.integer) or labels.min() < 0 or labels.max() >= spec.n_classes:
        raise InvalidLabelError(f"labels must be integers in [0, {spec.n_classes})")
    return labels


def loss_and_gradients(params, batch, labels):
    x, _ = _prepare(params, batch)
    labels = _check_labels(params.spec, labels, len(x))
    logits, caches, _ = _run(params, x, True, False)
    loss, d = softmax_cross_entropy(logits, labels)
    grads = [None] * len(caches)
    for i in range(len(caches) - 1, -1, -1):
        d, grads[i] = _layer_backward(params.spec.layers[i], params.tensors[i], d, caches[i])
    return loss, grads


def backprop(params, batch, labels):
    """Exact gradients of the mean softmax cross-entropy, shaped like ``params.tensors``."""
    return loss_and_gradients(params, batch, labels)[1]


def loss(params, batch, labels):
    x, _ = _prepare(params, batch)
    labels = _check_labels(params.spec, labels, len(x))
    logits, _, _ = _run(params, x, False, False)
    return softmax_cross_entropy(logits, labels)[0]
