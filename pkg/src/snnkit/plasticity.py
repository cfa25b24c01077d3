"""Triplet STDP with label-gated potentiation and post-stimulus normalization.

The reduced triplet rule is used: pair-based depression on presynaptic
spikes, triplet-based potentiation on postsynaptic spikes, with the
pair-potentiation and triplet-depression amplitudes set to zero.  Only three
traces are therefore needed: r1 per presynaptic neuron, o1 and o2 per
postsynaptic neuron.  Potentiation additionally carries a supervision gate
(only neurons whose digit group matches the stimulus label potentiate) and a
soft saturation gate on the current weight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import HyperParams


@dataclass
class StdpParams:
    a2_minus: float
    a3_plus: float
    tau_plus: float
    tau_minus: float
    tau_y: float
    w_max: float
    w_shift: float
    w_scale: float
    lam: float  # normalization level: mean incoming weight -> lam * w_max

    @classmethod
    def from_hyper(cls, h: HyperParams, kind: str) -> "StdpParams":
        """`kind` is 'ie' (input->hidden) or 'ee' (hidden->hidden)."""
        if kind == "ie":
            w_max, lam = h.w_ie_max, h.lambda_ie
        elif kind == "ee":
            w_max, lam = h.w_ee_max, h.lambda_ee
        else:
            raise ValueError(f"unknown projection kind {kind!r}")
        return cls(a2_minus=h.a2_minus, a3_plus=h.a3_plus,
                   tau_plus=h.tau_plus, tau_minus=h.tau_minus, tau_y=h.tau_y,
                   w_max=w_max, w_shift=h.w_shift, w_scale=h.w_scale, lam=lam)


class TraceBlock:
    """Exponentially decaying spike-event detectors for one projection."""

    __slots__ = ("r1", "o1", "o2")

    def __init__(self, n_pre: int, n_post: int):
        self.r1 = np.zeros(n_pre)
        self.o1 = np.zeros(n_post)
        self.o2 = np.zeros(n_post)

    def reset(self) -> None:
        self.r1[:] = 0.0
        self.o1[:] = 0.0
        self.o2[:] = 0.0


def theta_w(w, p: StdpParams):
    """Soft gate in (0, 1) suppressing potentiation of near-saturated weights."""
    arg = (2.0 * (w + p.w_max * (p.w_shift - 0.5)) / p.w_max - 1.0) / p.w_scale
    return 0.5 - 0.5 * np.tanh(arg)


def decay_traces(tb: TraceBlock, dt: float, p: StdpParams) -> None:
    tb.r1 *= np.exp(-dt / p.tau_plus)
    tb.o1 *= np.exp(-dt / p.tau_minus)
    tb.o2 *= np.exp(-dt / p.tau_y)


def on_pre_spike(proj, i: int) -> None:
    """Presynaptic spike of neuron `i`: pair depression, then mark the trace."""
    p = proj.stdp
    tb = proj.traces
    w = proj.w
    np.clip(w[i, :] - tb.o1 * p.a2_minus, 0.0, p.w_max, out=w[i, :])
    tb.r1[i] += 1.0


def on_post_spike(proj, j: int, stimulus_label: int) -> None:
    """Postsynaptic spike of neuron `j`: gated triplet potentiation, then
    mark the traces.  o2 is read before its own increment."""
    p = proj.stdp
    tb = proj.traces
    if proj.post_group[j] == stimulus_label:
        o2_before = tb.o2[j]
        w_col = proj.w[:, j]
        dw = tb.r1 * (p.a3_plus * o2_before) * theta_w(w_col, p)
        np.clip(w_col + dw, 0.0, p.w_max, out=w_col)
    tb.o1[j] += 1.0
    tb.o2[j] += 1.0


def normalize_incoming(proj) -> None:
    """Rescale each postsynaptic neuron's incoming weights so their mean is
    lam * w_max.  All-zero columns are left untouched."""
    p = proj.stdp
    w = proj.w
    n_pre = w.shape[0]
    w_tot = w.sum(axis=0)
    target = p.lam * p.w_max * n_pre
    nz = w_tot > 0.0
    scale = np.ones_like(w_tot)
    scale[nz] = target / w_tot[nz]
    w *= scale[np.newaxis, :]
