"""Compiled fast path for the simulation step loop.

The numpy reference loop in `engine` is readable but pays Python-level
overhead per step; a 500 ms window is 5000 steps.  This module flattens the
network into plain arrays and runs the identical per-step schedule inside a
single numba-jitted function.  `tests/test_kernel.py` checks equivalence
against the reference loop on randomized networks.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit
from numba.typed import List as NList

from .errors import NonFiniteState
from .params import E_EXC, E_INH, E_REST, V_RESET, V_THRES
from .topology import EVAL, Network

TIME_EPS = 1e-9


@njit(cache=True)
def _run(n_steps, dt, label, plasticity_on,
         # per-neuron state
         V, ge, gi, Vt, refrac, counts,
         # per-neuron constants
         group, tau_m, ged, gid, vtd, dvt, vtshift, vtscale, t_ref,
         # input spikes (CSR by step)
         in_ptr, in_idx,
         # per-projection scalars
         pre_off, n_pre, post_off, n_post, sign_i, plastic,
         a2m, a3p, wmax, wshift, wscale, r1d, o1d, o2d, depth,
         # per-projection arrays
         Ws, Dsteps, bufs, r1s, o1s, o2s,
         # event output
         ev_step, ev_n):
    K = len(Ws)
    ne = 0
    for s in range(n_steps):
        t = s * dt
        # trace decay
        if plasticity_on:
            for p in range(K):
                if plastic[p] == 1:
                    r1 = r1s[p]
                    for i in range(r1.shape[0]):
                        r1[i] *= r1d[p]
                    o1 = o1s[p]
                    o2 = o2s[p]
                    for j in range(o1.shape[0]):
                        o1[j] *= o1d[p]
                        o2[j] *= o2d[p]
        # delayed deliveries due this step
        for p in range(K):
            row = bufs[p][s % depth[p]]
            off = post_off[p]
            if sign_i[p] == 0:
                for j in range(n_post[p]):
                    ge[off + j] += row[j]
                    row[j] = 0.0
            else:
                for j in range(n_post[p]):
                    gi[off + j] += row[j]
                    row[j] = 0.0
        # input spikes this step: deliver, then depress, then mark r1
        for p in range(K):
            if pre_off[p] != -1:
                continue
            w = Ws[p]
            d = Dsteps[p]
            buf = bufs[p]
            off = post_off[p]
            for kk in range(in_ptr[s], in_ptr[s + 1]):
                i = in_idx[kk]
                for j in range(n_post[p]):
                    if d[i, j] == 0:
                        ge[off + j] += w[i, j]
                    else:
                        buf[(s + d[i, j]) % depth[p], j] += w[i, j]
                if plasticity_on and plastic[p] == 1:
                    o1 = o1s[p]
                    for j in range(n_post[p]):
                        wv = w[i, j] - o1[j] * a2m[p]
                        if wv < 0.0:
                            wv = 0.0
                        elif wv > wmax[p]:
                            wv = wmax[p]
                        w[i, j] = wv
                    r1s[p][i] += 1.0
        # advance membranes
        for n in range(V.shape[0]):
            g_tot = 1.0 + ge[n] + gi[n]
            v_inf = (E_REST + ge[n] * E_EXC + gi[n] * E_INH) / g_tot
            V[n] = v_inf + (V[n] - v_inf) * math.exp(-dt * g_tot / tau_m[n])
            if t < refrac[n] - TIME_EPS:
                V[n] = V_RESET
            ge[n] *= ged[n]
            gi[n] *= gid[n]
            if plasticity_on:
                Vt[n] = V_THRES + (Vt[n] - V_THRES) * vtd[n]
            if not (V[n] == V[n]) or V[n] > 1e12 or V[n] < -1e12:
                return ne, -1
        # threshold crossings
        for n in range(V.shape[0]):
            if V[n] > Vt[n] and t >= refrac[n] - TIME_EPS:
                V[n] = V_RESET
                refrac[n] = t + t_ref[n]
                if plasticity_on:
                    arg = (-2.0 * (Vt[n] - V_THRES * (vtshift[n] - 0.5))
                           / V_THRES + 1.0) / vtscale[n]
                    Vt[n] += dvt[n] * (0.5 - 0.5 * math.tanh(arg))
                counts[n] += 1
                ev_step[ne] = s
                ev_n[ne] = n
                ne += 1
                # postsynaptic role: gated potentiation, trace marks
                if plasticity_on:
                    for p in range(K):
                        if plastic[p] == 1 and post_off[p] <= n < post_off[p] + n_post[p]:
                            j = n - post_off[p]
                            if group[n] == label:
                                o2b = o2s[p][j]
                                w = Ws[p]
                                r1 = r1s[p]
                                for i in range(n_pre[p]):
                                    wv = w[i, j]
                                    warg = (2.0 * (wv + wmax[p] * (wshift[p] - 0.5))
                                            / wmax[p] - 1.0) / wscale[p]
                                    thw = 0.5 - 0.5 * math.tanh(warg)
                                    wv = wv + r1[i] * (a3p[p] * o2b) * thw
                                    if wv < 0.0:
                                        wv = 0.0
                                    elif wv > wmax[p]:
                                        wv = wmax[p]
                                    w[i, j] = wv
                            o1s[p][j] += 1.0
                            o2s[p][j] += 1.0
                # presynaptic role: depress downstream, schedule delivery
                for p in range(K):
                    if pre_off[p] == -1 or not (pre_off[p] <= n < pre_off[p] + n_pre[p]):
                        continue
                    i = n - pre_off[p]
                    w = Ws[p]
                    if plasticity_on and plastic[p] == 1:
                        o1 = o1s[p]
                        for j in range(n_post[p]):
                            wv = w[i, j] - o1[j] * a2m[p]
                            if wv < 0.0:
                                wv = 0.0
                            elif wv > wmax[p]:
                                wv = wmax[p]
                            w[i, j] = wv
                        r1s[p][i] += 1.0
                    d = Dsteps[p]
                    buf = bufs[p]
                    for j in range(n_post[p]):
                        dd = d[i, j]
                        if dd < 1:
                            dd = 1
                        buf[(s + dd) % depth[p], j] += w[i, j]
    return ne, 0


class SimPlan:
    """Flattened, kernel-ready view of a network for a fixed dt."""

    def __init__(self, net: Network, dt: float):
        self.dt = dt
        pops = net.populations
        self.pop_off = np.cumsum([0] + [p.n for p in pops])[:-1]
        n_hidden = sum(p.n for p in pops)
        self.n_hidden = n_hidden
        self.group = np.concatenate([p.group for p in pops])
        self.tau_m = np.concatenate([np.full(p.n, p.hyper.tau_m) for p in pops])
        self.ged = np.concatenate([np.full(p.n, np.exp(-dt / p.hyper.tau_ge)) for p in pops])
        self.gid = np.concatenate([np.full(p.n, np.exp(-dt / p.hyper.tau_gi)) for p in pops])
        self.vtd = np.concatenate([np.full(p.n, np.exp(-dt / p.hyper.tau_adpt)) for p in pops])
        self.dvt = np.concatenate([np.full(p.n, p.hyper.dv_t) for p in pops])
        self.vtshift = np.concatenate([np.full(p.n, p.hyper.v_tshift) for p in pops])
        self.vtscale = np.concatenate([np.full(p.n, p.hyper.v_tscale) for p in pops])
        self.t_ref = np.concatenate([np.full(p.n, p.hyper.t_refrac) for p in pops])

        projs = net.all_projections()
        self.projs = projs
        K = len(projs)
        self.pre_off = np.empty(K, dtype=np.int64)
        self.n_pre = np.empty(K, dtype=np.int64)
        self.post_off = np.empty(K, dtype=np.int64)
        self.n_post = np.empty(K, dtype=np.int64)
        self.sign_i = np.empty(K, dtype=np.int64)
        self.plastic = np.empty(K, dtype=np.int64)
        self.a2m = np.zeros(K)
        self.a3p = np.zeros(K)
        self.wmax = np.ones(K)
        self.wshift = np.zeros(K)
        self.wscale = np.ones(K)
        self.r1d = np.ones(K)
        self.o1d = np.ones(K)
        self.o2d = np.ones(K)
        self.depth = np.empty(K, dtype=np.int64)
        self.Ws = NList()
        self.Dsteps = NList()
        for p, pr in enumerate(projs):
            if not (isinstance(pr.w, np.ndarray) and pr.w.flags.c_contiguous
                    and pr.w.dtype == np.float64):
                pr.w = np.ascontiguousarray(pr.w, dtype=np.float64)
            self.Ws.append(pr.w)
            ds = np.ascontiguousarray(np.rint(pr.delay / dt).astype(np.int64))
            self.Dsteps.append(ds)
            self.pre_off[p] = -1 if pr.pre == -1 else self.pop_off[pr.pre]
            self.n_pre[p] = pr.n_pre
            self.post_off[p] = self.pop_off[pr.post]
            self.n_post[p] = pr.n_post
            self.sign_i[p] = 0 if pr.sign == "e" else 1
            self.plastic[p] = 1 if pr.plastic else 0
            self.depth[p] = int(ds.max()) + 2 if ds.size else 2
            if pr.plastic:
                sp = pr.stdp
                self.a2m[p] = sp.a2_minus
                self.a3p[p] = sp.a3_plus
                self.wmax[p] = sp.w_max
                self.wshift[p] = sp.w_shift
                self.wscale[p] = sp.w_scale
                self.r1d[p] = np.exp(-dt / sp.tau_plus)
                self.o1d[p] = np.exp(-dt / sp.tau_minus)
                self.o2d[p] = np.exp(-dt / sp.tau_y)


def get_plan(net: Network, dt: float) -> SimPlan:
    plan = net._plan
    if plan is None or plan.dt != dt or len(plan.projs) != len(net.all_projections()):
        plan = SimPlan(net, dt)
        net._plan = plan
    return plan


def run_window_fast(net: Network, spikes, plasticity_on: bool = False,
                    label: int = -1, record_events: bool = False):
    from .engine import SpikeRecord  # local import to avoid a cycle

    if plasticity_on and net.phase == EVAL:
        raise ValueError("plasticity must be off in the Eval phase")
    dt = spikes.dt
    n_steps = spikes.n_steps
    plan = get_plan(net, dt)
    pops = net.populations

    V = np.concatenate([p.V for p in pops])
    ge = np.concatenate([p.g_e for p in pops])
    gi = np.concatenate([p.g_i for p in pops])
    Vt = np.concatenate([p.V_t for p in pops])
    refrac = np.concatenate([p.refrac_until for p in pops])
    counts = np.concatenate([p.spike_count_window for p in pops])

    bufs = NList()
    r1s = NList()
    o1s = NList()
    o2s = NList()
    for p, pr in enumerate(plan.projs):
        bufs.append(np.zeros((plan.depth[p], pr.n_post)))
        if pr.plastic:
            r1s.append(pr.traces.r1)
            o1s.append(pr.traces.o1)
            o2s.append(pr.traces.o2)
        else:
            r1s.append(np.zeros(1))
            o1s.append(np.zeros(1))
            o2s.append(np.zeros(1))

    cap = 0
    for p in pops:
        cap += p.n * (int(n_steps * dt / max(p.hyper.t_refrac, dt)) + 2)
    ev_step = np.empty(cap, dtype=np.int64)
    ev_n = np.empty(cap, dtype=np.int64)

    ne, err = _run(n_steps, dt, np.int64(label), plasticity_on,
                   V, ge, gi, Vt, refrac, counts,
                   plan.group, plan.tau_m, plan.ged, plan.gid, plan.vtd,
                   plan.dvt, plan.vtshift, plan.vtscale, plan.t_ref,
                   spikes.step_ptr, spikes.indices,
                   plan.pre_off, plan.n_pre, plan.post_off, plan.n_post,
                   plan.sign_i, plan.plastic,
                   plan.a2m, plan.a3p, plan.wmax, plan.wshift, plan.wscale,
                   plan.r1d, plan.o1d, plan.o2d, plan.depth,
                   plan.Ws, plan.Dsteps, bufs, r1s, o1s, o2s,
                   ev_step, ev_n)

    # scatter the flat state back into the populations
    for p, off in zip(pops, plan.pop_off):
        p.V[:] = V[off:off + p.n]
        p.g_e[:] = ge[off:off + p.n]
        p.g_i[:] = gi[off:off + p.n]
        p.V_t[:] = Vt[off:off + p.n]
        p.refrac_until[:] = refrac[off:off + p.n]
        p.spike_count_window[:] = counts[off:off + p.n]
    if err != 0:
        raise NonFiniteState("membrane potential diverged")

    times = ev_step[:ne] * dt
    pop_ids = np.searchsorted(plan.pop_off, ev_n[:ne], side="right") - 1
    indices = ev_n[:ne] - plan.pop_off[pop_ids]
    if not record_events:
        times = times[:0]
        pop_ids = pop_ids[:0]
        indices = indices[:0]
    return SpikeRecord(times, pop_ids, indices,
                       group_counts=net.group_counts_last_layer(),
                       n_steps=n_steps)
