"""Model parameters: fixed constants, per-layer hyperparameters, tuned defaults.

The membrane/synapse reversal potentials and the nominal threshold are fixed
for every layer of every network.  Everything else lives in ``HyperParams``
and can differ per hidden layer (and per base network after a merge).
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict, replace

# Fixed neuron constants (mV), identical in all layers.
E_EXC = 0.0
E_INH = -100.0
E_REST = -65.0
V_THRES = -52.0
V_RESET = -65.0  # the reset potential coincides with the resting potential

# Simulation timestep (ms).  Chosen so the fastest conductance time constant
# (0.4 ms) is still resolved by several steps.
DT = 0.1

# Refractory period of hidden (excitatory) neurons (ms).  Input Poisson units
# are not refractory.
T_REFRAC = 5.0


@dataclass
class HyperParams:
    """Tunable parameters of one hidden layer.

    ``tau_*`` are in ms, potentials in mV, weights and trace amplitudes are
    unitless conductance increments.
    """

    tau_adpt: float = 1e6        # adaptive-threshold relaxation
    dv_t: float = 4.4e-3         # max threshold increment per spike (mV)
    tau_m: float = 200.0         # membrane time constant
    tau_ge: float = 0.4          # excitatory conductance decay
    tau_gi: float = 4.0          # inhibitory conductance decay
    w_ie_max: float = 29.0       # max input->hidden weight
    lambda_ie: float = 0.28      # normalization level for input->hidden
    w_ee_max: float = 100.0      # max hidden->hidden weight
    lambda_ee: float = 0.15      # normalization level for hidden->hidden
    dw_inhib: float = 0.64       # lateral inhibitory synapse weight
    max_delay_ee: float = 0.0    # max hidden->hidden delay (ms)
    max_delay_ie: float = 0.0    # max input->hidden (and lateral) delay (ms)
    a2_minus: float = 7e-3       # pair depression amplitude
    v_tscale: float = 0.18       # threshold saturation gate: decay rate
    v_tshift: float = 0.10       # threshold saturation gate: onset
    w_scale: float = 0.23        # weight saturation gate: decay rate
    w_shift: float = 0.30        # weight saturation gate: onset
    # Triplet-rule constants not exposed by the tuning tables; the defaults
    # are the visual-cortex minimal-model fit.
    a3_plus: float = 6.2e-3      # triplet potentiation amplitude
    tau_plus: float = 16.8       # presynaptic trace r1
    tau_minus: float = 33.7      # postsynaptic trace o1
    tau_y: float = 114.0         # postsynaptic trace o2
    t_refrac: float = T_REFRAC

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "HyperParams":
        return cls(**d)

    def replaced(self, **kw) -> "HyperParams":
        return replace(self, **kw)

    def validate(self) -> None:
        for name in ("tau_adpt", "tau_m", "tau_ge", "tau_gi",
                     "tau_plus", "tau_minus", "tau_y"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.w_ie_max <= 0 or self.w_ee_max <= 0:
            raise ValueError("maximum weights must be > 0")


# Tuned configuration for the single-hidden-layer base network.
BASE_HYPER = HyperParams()

# Tuned configuration for the 2-hidden-layer network (first/second layer).
TWO_LAYER_HYPER = [
    HyperParams(
        tau_adpt=1e6, dv_t=4.0e-4, tau_m=170.0, tau_ge=1.0, tau_gi=3.0,
        w_ie_max=58.0, lambda_ie=0.34, w_ee_max=100.0, lambda_ee=0.15,
        dw_inhib=1.4, max_delay_ee=50.0, max_delay_ie=10.0,
        v_tscale=0.21, v_tshift=0.40, w_scale=0.14, w_shift=0.40,
    ),
    HyperParams(
        tau_adpt=1e6, dv_t=3.0e-3, tau_m=190.0, tau_ge=0.3, tau_gi=3.0,
        w_ie_max=72.0, lambda_ie=0.24, w_ee_max=100.0, lambda_ee=0.15,
        dw_inhib=2.1, max_delay_ee=50.0, max_delay_ie=0.0,
        v_tscale=0.21, v_tshift=0.40, w_scale=0.14, w_shift=0.40,
    ),
]


@dataclass
class EncodingParams:
    """Poisson encoding and stimulus presentation settings."""

    r_max: float = 63.75         # Hz at full pixel intensity (pixel/4 Hz)
    duration: float = 500.0      # ms per presentation
    intensity_step: float = 0.25  # adaptive intensity increment
    min_layer_spikes: int = 5    # per-hidden-layer spike floor
    dt: float = DT

    def n_steps(self) -> int:
        n = self.duration / self.dt
        n_round = round(n)
        if abs(n - n_round) > 1e-9:
            raise ValueError("duration must be a multiple of dt")
        return int(n_round)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "EncodingParams":
        return cls(**d)
