"""Clock-driven simulation of conductance-based LIF populations.

Integration is exponential Euler per state variable at a fixed timestep:
exact for the pure exponential relaxations (conductances, adaptive
threshold, and the membrane with frozen conductances within a step).

Event-time convention: everything that happens during step s is stamped
t = s*dt.  Within a step the order is: trace decay, delayed-spike delivery,
input-spike handling (deliver, then depress, then mark r1), membrane
advance, threshold crossings (potentiate, then act as presynaptic spike for
downstream projections).  Spikes emitted by hidden neurons reach their
targets no earlier than the next step; input spikes with zero delay are
delivered within their own step.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from . import plasticity
from .errors import NonFiniteState
from .params import E_EXC, E_INH, E_REST, V_RESET, V_THRES, HyperParams
from .topology import EVAL, Network

# Slack for floating-point comparisons of times built as k*dt vs sums of ms.
TIME_EPS = 1e-9


@dataclass
class NeuronParams:
    """Per-population constants of the membrane/threshold dynamics."""

    E_rest: float = E_REST
    E_exc: float = E_EXC
    E_inh: float = E_INH
    V_thres: float = V_THRES
    V_reset: float = V_RESET
    tau_m: float = 200.0
    tau_ge: float = 0.4
    tau_gi: float = 4.0
    tau_adpt: float = 1e6
    dV_t: float = 4.4e-3
    V_tshift: float = 0.10
    V_tscale: float = 0.18
    t_refrac: float = 5.0

    @classmethod
    def from_hyper(cls, h: HyperParams) -> "NeuronParams":
        return cls(tau_m=h.tau_m, tau_ge=h.tau_ge, tau_gi=h.tau_gi,
                   tau_adpt=h.tau_adpt, dV_t=h.dv_t,
                   V_tshift=h.v_tshift, V_tscale=h.v_tscale,
                   t_refrac=h.t_refrac)


class SpikeRecord:
    """Spike events of one window, sorted by time then (population, index)."""

    def __init__(self, times=None, pops=None, indices=None,
                 group_counts=None, n_steps: int = 0):
        self.times = np.asarray(times if times is not None else [], dtype=float)
        self.pops = np.asarray(pops if pops is not None else [], dtype=np.int64)
        self.indices = np.asarray(indices if indices is not None else [], dtype=np.int64)
        self.group_counts = (np.zeros(10, dtype=np.int64)
                             if group_counts is None else group_counts)
        self.n_steps = n_steps

    @property
    def n_events(self) -> int:
        return len(self.times)

    def __eq__(self, other) -> bool:
        return (np.array_equal(self.times, other.times)
                and np.array_equal(self.pops, other.pops)
                and np.array_equal(self.indices, other.indices)
                and np.array_equal(self.group_counts, other.group_counts)
                and self.n_steps == other.n_steps)


def theta_vt(V_t, p: NeuronParams):
    """Soft gate in (0, 1) suppressing further threshold growth once V_t has
    risen far above its resting point."""
    arg = (-2.0 * (V_t - p.V_thres * (p.V_tshift - 0.5)) / p.V_thres + 1.0) / p.V_tscale
    return 0.5 - 0.5 * np.tanh(arg)


def advance_population(pop, p: NeuronParams, dt: float, t: float = 0.0,
                       adapt_on: bool = True) -> None:
    """One exponential-Euler step of V, g_e, g_i and V_t.  Refractory neurons
    hold V at V_reset; their conductances and thresholds keep evolving.
    Threshold adaptation runs only while learning (`adapt_on`), so evaluation
    leaves V_t untouched."""
    g_tot = 1.0 + pop.g_e + pop.g_i
    v_inf = (p.E_rest + pop.g_e * p.E_exc + pop.g_i * p.E_inh) / g_tot
    pop.V[:] = v_inf + (pop.V - v_inf) * np.exp(-dt * g_tot / p.tau_m)
    pop.V[t < pop.refrac_until - TIME_EPS] = p.V_reset
    pop.g_e *= np.exp(-dt / p.tau_ge)
    pop.g_i *= np.exp(-dt / p.tau_gi)
    if adapt_on:
        pop.V_t[:] = p.V_thres + (pop.V_t - p.V_thres) * np.exp(-dt / p.tau_adpt)
    if not np.isfinite(pop.V).all():
        raise NonFiniteState("membrane potential diverged")


def fire_and_reset(pop, p: NeuronParams, t: float,
                   adapt_on: bool = True) -> np.ndarray:
    """Threshold crossings at time t.  Spiking neurons reset, enter their
    refractory period and (while learning) raise their adaptive threshold.
    Returns the spiking indices (ascending)."""
    spiking = np.nonzero((pop.V > pop.V_t) & (t >= pop.refrac_until - TIME_EPS))[0]
    if spiking.size:
        pop.V[spiking] = p.V_reset
        pop.refrac_until[spiking] = t + p.t_refrac
        if adapt_on:
            pop.V_t[spiking] += p.dV_t * theta_vt(pop.V_t[spiking], p)
        pop.spike_count_window[spiking] += 1
    return spiking


class DelayLine:
    """Per-projection ring buffer of pending conductance increments."""

    def __init__(self, delay_steps: np.ndarray, n_post: int):
        self.delay_steps = delay_steps
        self.depth = int(delay_steps.max()) + 2 if delay_steps.size else 2
        self.buf = np.zeros((self.depth, n_post))

    def schedule_row(self, step: int, row_delay: np.ndarray, row_w: np.ndarray,
                     min_steps: int = 0) -> None:
        d = np.maximum(row_delay, min_steps)
        np.add.at(self.buf, ((step + d) % self.depth, np.arange(row_w.size)), row_w)

    def due(self, step: int) -> np.ndarray:
        return self.buf[step % self.depth]

    def clear_due(self, step: int) -> None:
        self.buf[step % self.depth, :] = 0.0


def deliver_spikes(pop, sign: str, increments: np.ndarray) -> None:
    """Apply the conductance increments due this step to the target."""
    if sign == "e":
        pop.g_e += increments
    else:
        pop.g_i += increments


def delay_to_steps(delay_ms: np.ndarray, dt: float) -> np.ndarray:
    return np.rint(delay_ms / dt).astype(np.int64)


def run_window_reference(net: Network, spikes, plasticity_on: bool = False,
                         label: int = -1, record_events: bool = True) -> SpikeRecord:
    """Pure numpy step loop; the behavioural reference for the fast kernel."""
    if plasticity_on and net.phase == EVAL:
        raise ValueError("plasticity must be off in the Eval phase")
    dt = spikes.dt
    n_steps = spikes.n_steps
    nps = [NeuronParams.from_hyper(pop.hyper) for pop in net.populations]
    projs = net.all_projections()
    lines = [DelayLine(delay_to_steps(pr.delay, dt), pr.n_post) for pr in projs]
    ev_t: List[float] = []
    ev_p: List[int] = []
    ev_i: List[int] = []

    for s in range(n_steps):
        t = s * dt
        if plasticity_on:
            for pr in projs:
                if pr.plastic:
                    plasticity.decay_traces(pr.traces, dt, pr.stdp)
        for pr, line in zip(projs, lines):
            deliver_spikes(net.populations[pr.post], pr.sign, line.due(s))
            line.clear_due(s)
        for pr, line in zip(projs, lines):
            if pr.pre != -1:
                continue
            post_pop = net.populations[pr.post]
            for i in spikes.indices[spikes.step_ptr[s]:spikes.step_ptr[s + 1]]:
                i = int(i)
                d_row = line.delay_steps[i]
                now = d_row == 0
                deliver_spikes(post_pop, pr.sign, np.where(now, pr.w[i], 0.0))
                later = ~now
                if later.any():
                    np.add.at(line.buf,
                              ((s + d_row[later]) % line.depth, np.nonzero(later)[0]),
                              pr.w[i, later])
                if plasticity_on and pr.plastic:
                    plasticity.on_pre_spike(pr, i)
        for pop, p in zip(net.populations, nps):
            advance_population(pop, p, dt, t, adapt_on=plasticity_on)
        for k, (pop, p) in enumerate(zip(net.populations, nps)):
            for n in fire_and_reset(pop, p, t, adapt_on=plasticity_on):
                n = int(n)
                if record_events:
                    ev_t.append(t)
                    ev_p.append(k)
                    ev_i.append(n)
                for pr, line in zip(projs, lines):
                    if pr.post == k and pr.plastic and plasticity_on:
                        plasticity.on_post_spike(pr, n, label)
                for pr, line in zip(projs, lines):
                    if pr.pre == k:
                        if pr.plastic and plasticity_on:
                            plasticity.on_pre_spike(pr, n)
                        line.schedule_row(s, line.delay_steps[n], pr.w[n],
                                          min_steps=1)

    return SpikeRecord(ev_t, ev_p, ev_i,
                       group_counts=net.group_counts_last_layer(),
                       n_steps=n_steps)


def run_window(net: Network, spikes, plasticity_on: bool = False,
               label: int = -1, record_events: bool = False,
               fast: bool = True) -> SpikeRecord:
    """Simulate one stimulus window.  Deterministic given the network state
    and the spike train; `fast` selects the compiled kernel."""
    if fast:
        from .kernel import run_window_fast
        return run_window_fast(net, spikes, plasticity_on=plasticity_on,
                               label=label, record_events=record_events)
    return run_window_reference(net, spikes, plasticity_on=plasticity_on,
                                label=label, record_events=record_events)
