# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled implementation of the hot kernels (see _slow.py for the contract)."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp

cnp.import_array()

IDENTITY = 0
RELU = 1
SIGMOID = 2


cdef void _affine_act(const double[:, ::1] a, const double[:, ::1] w,
                      const double[::1] b, int code, double[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t d_in = a.shape[1]
    cdef Py_ssize_t d_out = w.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double s
    for i in range(n):
        for j in range(d_out):
            s = b[j]
            for k in range(d_in):
                s += w[j, k] * a[i, k]
            if code == 1:
                out[i, j] = s if s > 0.0 else 0.0
            elif code == 2:
                out[i, j] = 1.0 / (1.0 + exp(-s))
            else:
                out[i, j] = s


def dense_forward(list weights, list biases, acts, x):
    cdef double[:, ::1] a = x
    layer_acts = [x]
    cdef Py_ssize_t layer
    cdef int code
    for layer in range(len(weights)):
        w = weights[layer]
        b = biases[layer]
        code = acts[layer]
        out = np.empty((a.shape[0], (<object> w).shape[0]), dtype=np.float64)
        _affine_act(a, w, b, code, out)
        layer_acts.append(out)
        a = out
    return layer_acts


cdef void _backward_layer(const double[:, ::1] delta, const double[:, ::1] a_prev,
                          double[:, ::1] dw, double[::1] db) noexcept nogil:
    cdef Py_ssize_t n = delta.shape[0]
    cdef Py_ssize_t d_out = delta.shape[1]
    cdef Py_ssize_t d_in = a_prev.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double d
    for j in range(d_out):
        db[j] = 0.0
        for k in range(d_in):
            dw[j, k] = 0.0
    for i in range(n):
        for j in range(d_out):
            d = delta[i, j]
            db[j] += d
            for k in range(d_in):
                dw[j, k] += d * a_prev[i, k]


cdef void _propagate(const double[:, ::1] delta, const double[:, ::1] w,
                     const double[:, ::1] a, int code, double[:, ::1] out) noexcept nogil:
    # out = (delta @ w) * act'(a), derivative from the post-activation value
    cdef Py_ssize_t n = delta.shape[0]
    cdef Py_ssize_t d_out = w.shape[0]
    cdef Py_ssize_t d_in = w.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double s, g
    for i in range(n):
        for k in range(d_in):
            s = 0.0
            for j in range(d_out):
                s += delta[i, j] * w[j, k]
            if code == 1:
                g = 1.0 if a[i, k] > 0.0 else 0.0
            elif code == 2:
                g = a[i, k] * (1.0 - a[i, k])
            else:
                g = 1.0
            out[i, k] = s * g


cdef void _apply_deriv(const double[:, ::1] upstream, const double[:, ::1] a,
                       int code, double[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t n = upstream.shape[0]
    cdef Py_ssize_t m = upstream.shape[1]
    cdef Py_ssize_t i, j
    cdef double g
    for i in range(n):
        for j in range(m):
            if code == 1:
                g = 1.0 if a[i, j] > 0.0 else 0.0
            elif code == 2:
                g = a[i, j] * (1.0 - a[i, j])
            else:
                g = 1.0
            out[i, j] = upstream[i, j] * g


def dense_backward(list weights, acts, list layer_acts, upstream):
    cdef Py_ssize_t n_layers = len(weights)
    cdef Py_ssize_t layer
    dws = [None] * n_layers
    dbs = [None] * n_layers

    delta = np.empty_like(upstream)
    _apply_deriv(upstream, layer_acts[n_layers], acts[n_layers - 1], delta)
    for layer in range(n_layers - 1, -1, -1):
        w = weights[layer]
        a_prev = layer_acts[layer]
        dw = np.empty_like(w)
        db = np.empty((<object> w).shape[0], dtype=np.float64)
        _backward_layer(delta, a_prev, dw, db)
        dws[layer] = dw
        dbs[layer] = db
        if layer > 0:
            nxt = np.empty((upstream.shape[0], (<object> w).shape[1]), dtype=np.float64)
            _propagate(delta, w, layer_acts[layer], acts[layer - 1], nxt)
            delta = nxt
    return dws, dbs


def gae_scan(const double[::1] rewards, const double[::1] values,
             const double[::1] dones, double gamma, double lam):
    cdef Py_ssize_t n = rewards.shape[0]
    adv_arr = np.empty(n, dtype=np.float64)
    targ_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] adv = adv_arr
    cdef double[::1] targ = targ_arr
    cdef double last = 0.0
    cdef double nonterminal, delta
    cdef Py_ssize_t t
    with nogil:
        for t in range(n - 1, -1, -1):
            nonterminal = 1.0 - dones[t]
            delta = rewards[t] + gamma * values[t + 1] * nonterminal - values[t]
            last = delta + gamma * lam * nonterminal * last
            adv[t] = last
            targ[t] = last + values[t]
    return adv_arr, targ_arr


def tank_step(double t_lower, double t_upper, double v_lower, double v_upper,
              double heater_kw, int heater_on, double draw_l, double inlet_c,
              double ambient_c, double loss_w_per_k, double dt_s,
              double cp_j_per_kg_k):
    cdef double total, a_in_low, a_old_low, new_lower
    cdef double a_in_up, lo, hi, a_low_up, a_up_up, new_upper, mixed

    if draw_l > 0.0:
        total = v_lower + v_upper
        a_in_low = draw_l if draw_l < v_lower else v_lower
        a_old_low = v_lower - a_in_low
        new_lower = (a_in_low * inlet_c + a_old_low * t_lower) / v_lower

        a_in_up = (draw_l if draw_l < total else total) - v_lower
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

    if heater_on:
        t_lower = t_lower + heater_kw * 1000.0 * dt_s / (v_lower * cp_j_per_kg_k)

    if loss_w_per_k > 0.0:
        t_lower = t_lower - loss_w_per_k * (t_lower - ambient_c) * dt_s / (v_lower * cp_j_per_kg_k)
        t_upper = t_upper - loss_w_per_k * (t_upper - ambient_c) * dt_s / (v_upper * cp_j_per_kg_k)

    if t_lower > t_upper:
        mixed = (v_lower * t_lower + v_upper * t_upper) / (v_lower + v_upper)
        t_lower = mixed
        t_upper = mixed

    return t_lower, t_upper
