"""Pure NumPy implementation of the hot kernels.

Mirrors heatshift._kernels._fast function for function; used when the
compiled extension is unavailable or when HEATSHIFT_KERNELS=py.
"""

import numpy as np

IDENTITY = 0
RELU = 1
SIGMOID = 2


def dense_forward(weights, biases, acts, x):
    """Forward pass through a dense stack.

    x is (n, d_in) float64. Returns the list of layer activations
    [x, a_1, ..., a_L] (post-activation, including the input).
    """
    layer_acts = [x]
    a = x
    for w, b, code in zip(weights, biases, acts):
        z = a @ w.T + b
        if code == RELU:
            a = np.maximum(z, 0.0)
        elif code == SIGMOID:
            a = 1.0 / (1.0 + np.exp(-z))
        else:
            a = z
        layer_acts.append(a)
    return layer_acts


def _act_deriv(a, code):
    # Derivative expressed in terms of the post-activation value.
    if code == RELU:
        return (a > 0.0).astype(np.float64)
    if code == SIGMOID:
        return a * (1.0 - a)
    return np.ones_like(a)


def dense_backward(weights, acts, layer_acts, upstream):
    """Gradients of sum_i <upstream_i, f(x_i)> w.r.t. weights and biases.

    layer_acts is the list returned by dense_forward. Returns (dws, dbs).
    """
    n_layers = len(weights)
    dws = [None] * n_layers
    dbs = [None] * n_layers
    delta = upstream * _act_deriv(layer_acts[-1], acts[-1])
    for layer in range(n_layers - 1, -1, -1):
        a_prev = layer_acts[layer]
        dws[layer] = delta.T @ a_prev
        dbs[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ weights[layer]) * _act_deriv(layer_acts[layer], acts[layer - 1])
    return dws, dbs


def gae_scan(rewards, values, dones, gamma, lam):
    """Backward recursion for generalized advantages.

    values has length len(rewards) + 1 (bootstrap at the end); dones is a
    float 0/1 array marking episode cuts. Returns (advantages, value targets).
    """
    n = rewards.shape[0]
    adv = np.empty(n, dtype=np.float64)
    last = 0.0
    for t in range(n - 1, -1, -1):
        nonterminal = 1.0 - dones[t]
        delta = rewards[t] + gamma * values[t + 1] * nonterminal - values[t]
        last = delta + gamma * lam * nonterminal * last
        adv[t] = last
    return adv, adv + values[:n]


def tank_step(t_lower, t_upper, v_lower, v_upper, heater_kw, heater_on,
              draw_l, inlet_c, ambient_c, loss_w_per_k, dt_s, cp_j_per_kg_k):
    """One quarter of two-layer tank physics.

    Event order: plug-flow draw, heating into the lower layer, standing
    losses, buoyancy mixing. Water density is 1 kg/l. Returns the new
    (t_lower, t_upper).
    """
    # (a) plug-flow draw: the column shifts up by draw_l litres, inlet
    # water fills the bottom. Segment overlaps handle draws larger than
    # a single layer.
    if draw_l > 0.0:
        total = v_lower + v_upper
        a_in_low = draw_l if draw_l < v_lower else v_lower
        a_old_low = v_lower - a_in_low
        new_lower = (a_in_low * inlet_c + a_old_low * t_lower) / v_lower

        a_in_up = min(draw_l, total) - v_lower
        if a_in_up < 0.0:
            a_in_up = 0.0
        lo = draw_l if draw_l > v_lower else v_lower
        hi = v_lower + draw_l
        if hi > total:
            hi = total
        a_low_up = hi - lo
        if a_low_up < 0.0:
            a_low_up = 0.0
        a_up_up = v_upper - draw_l
        if a_up_up < 0.0:
            a_up_up = 0.0
        new_upper = (a_in_up * inlet_c + a_low_up * t_lower + a_up_up * t_upper) / v_upper
        t_lower = new_lower
        t_upper = new_upper

    # (b) heating element sits in the lower layer
    if heater_on:
        t_lower = t_lower + heater_kw * 1000.0 * dt_s / (v_lower * cp_j_per_kg_k)

    # (c) standing losses per layer
    if loss_w_per_k > 0.0:
        t_lower = t_lower - loss_w_per_k * (t_lower - ambient_c) * dt_s / (v_lower * cp_j_per_kg_k)
        t_upper = t_upper - loss_w_per_k * (t_upper - ambient_c) * dt_s / (v_upper * cp_j_per_kg_k)

    # (d) buoyancy: an unstable profile mixes to the volume-weighted mean
    if t_lower > t_upper:
        mixed = (v_lower * t_lower + v_upper * t_upper) / (v_lower + v_upper)
        t_lower = mixed
        t_upper = mixed

    return t_lower, t_upper
