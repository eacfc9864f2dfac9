from .config import NetworkConfig, NeuronConfig
from .layer import LayerParams, LayerState, init_layer_params, layer_step
from .network import (DropoutSpec, Network, NetworkParams, NetworkState,
                      build_network, embed_onehot, network_forward,
                      network_param_counts, zero_network_state)
from .neuron import (NeuronParams, NeuronState, branch_sum, count_params,
                     elm_step, init_neuron_params, make_decays,
                     memory_timescales, zero_state)
from .recipes import RecipeDims, pareto_candidate
from .recording import Recording, load_recording, save_recording
from .wiring import LayerWiring, init_feedforward_wiring, init_wiring

__all__ = [
    "NetworkConfig", "NeuronConfig", "LayerParams", "LayerState",
    "init_layer_params", "layer_step", "DropoutSpec", "Network",
    "NetworkParams", "NetworkState", "build_network", "embed_onehot",
    "network_forward", "network_param_counts", "zero_network_state",
    "NeuronParams", "NeuronState", "branch_sum", "count_params", "elm_step",
    "init_neuron_params", "make_decays", "memory_timescales", "zero_state",
    "RecipeDims", "pareto_candidate", "Recording", "load_recording",
    "save_recording", "LayerWiring", "init_feedforward_wiring", "init_wiring",
]
