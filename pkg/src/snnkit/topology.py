"""Network construction: populations, projections, phases, base-network merge.

A network is a feedforward stack of hidden layers over a 784-neuron Poisson
input layer.  Every hidden layer is fully connected to the input layer and to
all preceding hidden layers.  Hidden neurons carry a digit group (neuron k of
a population belongs to group k mod 10).  Lateral inhibition between
different-group neurons exists only in the Eval phase, confined to each
population (which after a merge means: confined to each base network).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import plasticity
from .errors import BadSpec, IncompatibleStates
from .params import E_REST, V_THRES, HyperParams
from .plasticity import StdpParams, TraceBlock

TRAIN = "train"
EVAL = "eval"


@dataclass
class NetworkSpec:
    layer_sizes: List[int]
    hyper: List[HyperParams]
    n_input: int = 784
    phase: str = TRAIN

    def validate(self) -> None:
        if not self.layer_sizes:
            raise BadSpec("at least one hidden layer required")
        for n in self.layer_sizes:
            if n <= 0 or n % 10 != 0:
                raise BadSpec(f"hidden layer size {n} is not a positive multiple of 10")
        if len(self.hyper) != len(self.layer_sizes):
            raise BadSpec("need one HyperParams per hidden layer")

    def to_dict(self) -> dict:
        return {"layer_sizes": list(self.layer_sizes),
                "hyper": [h.to_dict() for h in self.hyper],
                "n_input": self.n_input}

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkSpec":
        return cls(layer_sizes=list(d["layer_sizes"]),
                   hyper=[HyperParams.from_dict(h) for h in d["hyper"]],
                   n_input=int(d.get("n_input", 784)))


class NeuronPopulation:
    """Dynamic state of one block of hidden neurons sharing hyperparameters."""

    def __init__(self, n: int, hyper: HyperParams, layer: int, base: int):
        self.n = n
        self.hyper = hyper
        self.layer = layer
        self.base = base
        self.group = (np.arange(n) % 10).astype(np.int64)
        # spatial grid coordinates of the hidden-layer units (unused by the
        # fully connected model, kept for localized-connectivity variants)
        units = np.arange(n) // 10
        side = max(1, int(np.ceil(np.sqrt(max(1, n // 10)))))
        self.unit_xy = np.stack([units % side, units // side], axis=1)
        self.V = np.full(n, E_REST)
        self.g_e = np.zeros(n)
        self.g_i = np.zeros(n)
        self.V_t = np.full(n, V_THRES)
        self.refrac_until = np.full(n, -np.inf)
        self.spike_count_window = np.zeros(n, dtype=np.int64)

    def reset_dynamic(self) -> None:
        """Reset fast state; V_t persists (it is part of the learned state)."""
        self.V[:] = E_REST
        self.g_e[:] = 0.0
        self.g_i[:] = 0.0
        self.refrac_until[:] = -np.inf
        self.spike_count_window[:] = 0


class Projection:
    """A dense synapse block between two populations (or input -> population)."""

    def __init__(self, pre: int, post: int, sign: str, plastic: bool,
                 w: np.ndarray, delay: np.ndarray,
                 stdp: Optional[StdpParams], post_group: np.ndarray):
        self.pre = pre          # -1 for the input layer, else population index
        self.post = post
        self.sign = sign        # 'e' or 'i'
        self.plastic = plastic
        self.w = w              # (n_pre, n_post)
        self.delay = delay      # ms, same shape
        self.stdp = stdp
        self.post_group = post_group
        self.traces = TraceBlock(w.shape[0], w.shape[1]) if plastic else None

    @property
    def n_pre(self) -> int:
        return self.w.shape[0]

    @property
    def n_post(self) -> int:
        return self.w.shape[1]


class Network:
    def __init__(self, n_input: int, seed: int, spec: Optional[NetworkSpec] = None):
        self.n_input = n_input
        self.seed = seed
        self.spec = spec
        self.populations: List[NeuronPopulation] = []
        self.projections: List[Projection] = []        # excitatory, persistent
        self.inhib_projections: List[Projection] = []  # lateral, Eval only
        self.phase = TRAIN
        self._plan = None  # cached fast-kernel plan, invalidated on rebuild

    # -- bookkeeping ------------------------------------------------------

    def invalidate_plan(self) -> None:
        self._plan = None

    @property
    def n_layers(self) -> int:
        return 1 + max(p.layer for p in self.populations)

    def last_layer_populations(self) -> List[NeuronPopulation]:
        last = self.n_layers - 1
        return [p for p in self.populations if p.layer == last]

    def all_projections(self) -> List[Projection]:
        return self.projections + self.inhib_projections

    def reset_dynamic(self) -> None:
        for pop in self.populations:
            pop.reset_dynamic()
        for proj in self.projections:
            if proj.traces is not None:
                proj.traces.reset()

    def layer_spike_total(self, layer: int) -> int:
        return int(sum(p.spike_count_window.sum()
                       for p in self.populations if p.layer == layer))

    def group_counts_last_layer(self) -> np.ndarray:
        counts = np.zeros(10, dtype=np.int64)
        for pop in self.last_layer_populations():
            np.add.at(counts, pop.group, pop.spike_count_window)
        return counts


def _proj_rng(seed: int, tag: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, tag, index)))


def _make_excitatory(pre: int, post: int, n_pre: int, pop: NeuronPopulation,
                     kind: str, max_delay: float, seed: int, proj_index: int,
                     plastic: bool = True) -> Projection:
    stdp = StdpParams.from_hyper(pop.hyper, kind)
    rng = _proj_rng(seed, 0xE0, proj_index)
    w = rng.uniform(0.0, stdp.w_max, size=(n_pre, pop.n))
    delay = rng.uniform(0.0, max_delay, size=(n_pre, pop.n)) if max_delay > 0 \
        else np.zeros((n_pre, pop.n))
    proj = Projection(pre=pre, post=post, sign="e", plastic=plastic,
                      w=w, delay=delay, stdp=stdp, post_group=pop.group)
    plasticity.normalize_incoming(proj)
    return proj


def build_network(spec: NetworkSpec, seed: int) -> Network:
    """Create a fresh network in the Train phase: excitatory projections with
    normalized random weights and uniformly sampled delays, no inhibition."""
    spec.validate()
    net = Network(n_input=spec.n_input, seed=seed, spec=spec)
    for layer, (n, hyper) in enumerate(zip(spec.layer_sizes, spec.hyper)):
        hyper.validate()
        net.populations.append(NeuronPopulation(n, hyper, layer=layer, base=0))
    proj_index = 0
    for k, post_pop in enumerate(net.populations):
        h = post_pop.hyper
        net.projections.append(_make_excitatory(
            -1, k, spec.n_input, post_pop, "ie", h.max_delay_ie, seed, proj_index))
        proj_index += 1
        for j in range(k):
            pre_pop = net.populations[j]
            net.projections.append(_make_excitatory(
                j, k, pre_pop.n, post_pop, "ee", h.max_delay_ee, seed, proj_index))
            proj_index += 1
    return net


def set_phase(net: Network, phase: str) -> Network:
    """Toggle between Train (plastic, no inhibition) and Eval (frozen weights,
    lateral inhibition between different-group neurons of each population)."""
    if phase not in (TRAIN, EVAL):
        raise ValueError(f"unknown phase {phase!r}")
    net.inhib_projections = []
    net.phase = phase
    if phase == EVAL:
        for k, pop in enumerate(net.populations):
            h = pop.hyper
            same_group = pop.group[:, None] == pop.group[None, :]
            w = np.where(same_group, 0.0, h.dw_inhib)
            rng = _proj_rng(net.seed, 0x1B, k)
            if h.max_delay_ie > 0:
                delay = rng.uniform(0.0, h.max_delay_ie, size=w.shape)
                delay[same_group] = 0.0
            else:
                delay = np.zeros_like(w)
            net.inhib_projections.append(Projection(
                pre=k, post=k, sign="i", plastic=False,
                w=w, delay=delay, stdp=None, post_group=pop.group))
    net.invalidate_plan()
    return net


def merge_base_networks(states) -> Network:
    """Combine independently trained base networks into one network whose
    hidden layers are the concatenation of the bases' layers.  Each base
    keeps its own hyperparameters, weights, delays and thresholds; no synapse
    crosses base networks."""
    if not states:
        raise IncompatibleStates("nothing to merge")
    n_layers = len(states[0].spec.layer_sizes)
    n_input = states[0].spec.n_input
    for st in states:
        if len(st.spec.layer_sizes) != n_layers:
            raise IncompatibleStates("mismatched hidden layer counts")
        if st.spec.n_input != n_input:
            raise IncompatibleStates("mismatched input sizes")
    net = Network(n_input=n_input, seed=states[0].provenance.get("seed", 0))
    for b, st in enumerate(states):
        pops = []
        for layer, (n, hyper) in enumerate(zip(st.spec.layer_sizes, st.spec.hyper)):
            pop = NeuronPopulation(n, hyper, layer=layer, base=b)
            pops.append(pop)
            net.populations.append(pop)
        offset = len(net.populations) - len(pops)
        idx = 0
        for k, post_pop in enumerate(pops):
            for pre_local in [-1] + list(range(k)):
                w = st.weights[idx]
                delay = st.delays[idx]
                idx += 1
                kind = "ie" if pre_local == -1 else "ee"
                pre = -1 if pre_local == -1 else offset + pre_local
                net.projections.append(Projection(
                    pre=pre, post=offset + k, sign="e", plastic=True,
                    w=w.copy(), delay=delay.copy(),
                    stdp=StdpParams.from_hyper(post_pop.hyper, kind),
                    post_group=post_pop.group))
        vt_off = 0
        for pop in pops:
            pop.V_t[:] = st.v_t[vt_off:vt_off + pop.n]
            vt_off += pop.n
    return net
