"""Social influence prediction on sampled local networks with graph convolution and attention."""

__version__ = "0.1.0"
