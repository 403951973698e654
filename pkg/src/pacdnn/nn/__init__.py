from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import grad_check
from .layers import AffineNorm, Conv1d, Dense, Layer, MaxPool1d, ReLU, Reshape, Sigmoid
from .loss import bce_loss
from .lstm import LSTM
from .network import Arch, Network, build_decoder_network, param_count
from .optim import AdamState, adam_step

__all__ = [
    "AdamState", "AffineNorm", "Arch", "Conv1d", "Dense", "LSTM", "Layer", "MaxPool1d", "Network",
    "ReLU", "Reshape", "Sigmoid", "adam_step", "bce_loss", "build_decoder_network",
    "grad_check", "load_checkpoint", "param_count", "save_checkpoint",
]
