"""PAC codes with classical and neural decoders."""
from .channel import ChannelParams, InputMode
from .code import PacCode, encode

__version__ = "0.1.0"
__all__ = ["ChannelParams", "InputMode", "PacCode", "encode"]
