from .tensor import Tensor, as_tensor, concat, stack
from .layers import (ShapeError, activation, attention_softmax, attention_support, conv1d, dropout,
                     gat_attention, gat_scores, gcn_layer, gcn_norm_adjacency, multi_head_stacked,
                     instance_norm, linear, multi_head, nll_loss)
from .optim import Adagrad, AdagradState, adagrad_step, glorot_init
from .gradcheck import GradCheckReport, grad_check, param
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "Tensor", "as_tensor", "concat", "stack", "ShapeError", "activation", "attention_softmax",
    "attention_support", "conv1d", "dropout", "gat_attention", "gat_scores",
    "gcn_layer", "gcn_norm_adjacency", "instance_norm", "linear", "multi_head",
    "multi_head_stacked",
    "nll_loss", "Adagrad", "AdagradState", "adagrad_step", "glorot_init",
    "GradCheckReport", "grad_check", "param", "load_checkpoint", "save_checkpoint",
]
