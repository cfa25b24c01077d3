"""Poisson rate coding of images and the adaptive-intensity presentation loop."""

from __future__ import annotations

from typing import List, Tuple

import numpy as np

from .engine import SpikeRecord, run_window
from .params import EncodingParams
from .topology import Network


class SpikeTrain:
    """Input spikes of one window, stored CSR-style by timestep.

    At most one spike per neuron per step, so per-neuron spike times are
    strictly increasing by construction.
    """

    __slots__ = ("n_neurons", "n_steps", "dt", "step_ptr", "indices")

    def __init__(self, n_neurons: int, n_steps: int, dt: float,
                 step_ptr: np.ndarray, indices: np.ndarray):
        self.n_neurons = n_neurons
        self.n_steps = n_steps
        self.dt = dt
        self.step_ptr = step_ptr
        self.indices = indices

    @property
    def n_spikes(self) -> int:
        return len(self.indices)

    @property
    def duration(self) -> float:
        return self.n_steps * self.dt

    def times_per_neuron(self) -> List[np.ndarray]:
        steps = np.repeat(np.arange(self.n_steps),
                          np.diff(self.step_ptr))
        out = [np.empty(0) for _ in range(self.n_neurons)]
        order = np.argsort(self.indices, kind="stable")
        idx_sorted = self.indices[order]
        t_sorted = steps[order] * self.dt
        bounds = np.searchsorted(idx_sorted, np.arange(self.n_neurons + 1))
        for i in range(self.n_neurons):
            out[i] = t_sorted[bounds[i]:bounds[i + 1]]
        return out


def encode_poisson(img: np.ndarray, scale: float, ep: EncodingParams,
                   seed) -> SpikeTrain:
    """Bernoulli-per-step approximation of Poisson spiking: neuron i fires in
    a step with probability rate_i * dt, rate_i = scale * (pixel_i/255) * r_max."""
    if not 0.0 < scale <= 1.0:
        raise ValueError("scale must be in (0, 1]")
    img = np.asarray(img)
    n_neurons = img.size
    n_steps = ep.n_steps()
    rng = np.random.default_rng(seed)
    active = np.nonzero(img)[0]
    if active.size == 0:
        ptr = np.zeros(n_steps + 1, dtype=np.int64)
        return SpikeTrain(n_neurons, n_steps, ep.dt, ptr,
                          np.empty(0, dtype=np.int64))
    # rate in Hz, dt in ms
    p = scale * (img[active].astype(float) / 255.0) * ep.r_max * (ep.dt * 1e-3)
    fired = rng.random((n_steps, active.size)) < p[np.newaxis, :]
    rows, cols = np.nonzero(fired)  # row-major: already sorted by step
    indices = active[cols].astype(np.int64)
    ptr = np.zeros(n_steps + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n_steps), out=ptr[1:])
    return SpikeTrain(n_neurons, n_steps, ep.dt, ptr, indices)


def present_adaptive(net: Network, img: np.ndarray, ep: EncodingParams,
                     plasticity_on: bool, seed, label: int = -1,
                     fast: bool = True,
                     record_events: bool = False) -> Tuple[SpikeRecord, float]:
    """Present one image, raising the input intensity in steps until every
    hidden layer emits at least `min_layer_spikes` spikes or full intensity
    is reached.  Dynamic state is reset before each attempt; V_t and weights
    persist (and keep learning on every attempt when plasticity is on)."""
    n_attempts = int(round(1.0 / ep.intensity_step))
    record = None
    scale = ep.intensity_step
    for attempt in range(n_attempts):
        scale = min(1.0, (attempt + 1) * ep.intensity_step)
        net.reset_dynamic()
        train = encode_poisson(img, scale, ep,
                               np.random.SeedSequence((int(seed), attempt)))
        record = run_window(net, train, plasticity_on=plasticity_on,
                            label=label, record_events=record_events, fast=fast)
        enough = all(net.layer_spike_total(layer) >= ep.min_layer_spikes
                     for layer in range(net.n_layers))
        if enough:
            break
    return record, scale
