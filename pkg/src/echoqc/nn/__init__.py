from .layers import (
    BatchNorm2D,
    Conv2D,
    Dense,
    Dropout,
    Flatten,
    Layer,
    LSTM,
    MaxPool2D,
    ReLU,
    Sigmoid,
    conv2d_reference,
    conv_output_size,
    lstm_step,
    sigmoid,
)
from .optim import Adam, lr_schedule
from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import max_relative_error, numeric_gradient, sampled_gradient_error

__all__ = [
    "Adam",
    "BatchNorm2D",
    "Conv2D",
    "Dense",
    "Dropout",
    "Flatten",
    "LSTM",
    "Layer",
    "MaxPool2D",
    "ReLU",
    "Sigmoid",
    "conv2d_reference",
    "conv_output_size",
    "load_checkpoint",
    "lr_schedule",
    "lstm_step",
    "max_relative_error",
    "numeric_gradient",
    "sampled_gradient_error",
    "save_checkpoint",
    "sigmoid",
]
