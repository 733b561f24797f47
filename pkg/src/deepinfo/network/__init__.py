"""Tiny residual classifier with exact gradients and activation capture."""
from .kernels import col2im, im2col, warp_images
from .model import Params, backprop, forward, init_params, loss, loss_and_gradients, softmax_cross_entropy
from .spec import LAYER_KINDS, LayerSpec, NetSpec, desk_netspec
from .train import TrainConfig, augment, evaluate, split_indices, train

__all__ = [
    "LAYER_KINDS",
    "LayerSpec",
    "NetSpec",
    "Params",
    "TrainConfig",
    "augment",
    "backprop",
    "col2im",
    "desk_netspec",
    "evaluate",
    "forward",
    "im2col",
    "init_params",
    "loss",
    "loss_and_gradients",
    "softmax_cross_entropy",
    "split_indices",
    "train",
    "warp_images",
]
