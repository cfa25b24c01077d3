"""Supervised-STDP spiking neural network toolkit.

Backpropagation-free supervised learning on MNIST-style digit data:
conductance-based LIF simulation, label-gated triplet STDP, Poisson rate
coding with adaptive intensity, parallel base-network training with diverse
hyperparameters, and tie-aware evaluation.
"""

from .params import (BASE_HYPER, TWO_LAYER_HYPER, EncodingParams,  # noqa: F401
                     HyperParams)
from .topology import (EVAL, TRAIN, Network, NetworkSpec,  # noqa: F401
                       build_network, merge_base_networks, set_phase)

__version__ = "0.1.0"
