"""Shared test utilities: finite-difference gradient oracle."""

from __future__ import annotations

import numpy as np

from wncs import nn


def linear_loss(spec, params, cur, hist, probe):
    out, _ = nn.forward(spec, params, cur, hist)
    return float((out * probe).sum())


def fd_param_grads(spec, params, cur, hist, probe, h=1e-5):
    """Central-difference gradients of sum(out * probe) w.r.t. parameters."""
    grads = {}
    for key, arr in params.items():
        grad = np.zeros_like(arr)
        flat = arr.reshape(-1)
        grad_flat = grad.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            lo_plus = linear_loss(spec, params, cur, hist, probe)
            flat[i] = orig - h
            lo_minus = linear_loss(spec, params, cur, hist, probe)
            flat[i] = orig
            grad_flat[i] = (lo_plus - lo_minus) / (2.0 * h)
        grads[key] = grad
    return grads


def fd_input_grads(spec, params, cur, hist, probe, h=1e-5):
    """Central-difference gradients w.r.t. the network inputs."""
    dcur = None
    if cur is not None:
        cur = cur.copy()
        dcur = np.zeros_like(cur)
        flat, gflat = cur.reshape(-1), dcur.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            lp = linear_loss(spec, params, cur, hist, probe)
            flat[i] = orig - h
            lm = linear_loss(spec, params, cur, hist, probe)
            flat[i] = orig
            gflat[i] = (lp - lm) / (2.0 * h)
    hist = hist.copy()
    dhist = np.zeros_like(hist)
    flat, gflat = hist.reshape(-1), dhist.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        lp = linear_loss(spec, params, cur, hist, probe)
        flat[i] = orig - h
        lm = linear_loss(spec, params, cur, hist, probe)
        flat[i] = orig
        gflat[i] = (lp - lm) / (2.0 * h)
    return dcur, dhist


def max_rel_err(analytic, numeric, guard=1e-3):
    """Max elementwise relative error with a guarded denominator."""
    a = np.asarray(analytic, dtype=np.float64)
    b = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), guard)
    return float((np.abs(a - b) / denom).max())


def grad_check(spec, rng, batch=3, h=1e-5, guard=1e-3):
    """Build f64 params and random inputs, return worst relative error."""
    params = nn.init_params(spec, rng, dtype=np.float64)
    cur = None
    if spec.current_dim > 0:
        cur = rng.standard_normal((batch, spec.current_dim))
    hist = rng.standard_normal((batch, spec.history_len, spec.step_dim))
    probe = rng.standard_normal((batch, spec.out_dim))
    out, cache = nn.forward(spec, params, cur, hist)
    grads, dcur, dhist = nn.backward(spec, params, cache, probe)
    fd_grads = fd_param_grads(spec, params, cur, hist, probe, h=h)
    worst = 0.0
    for key in params:
        worst = max(worst, max_rel_err(grads[key], fd_grads[key], guard))
    fd_cur, fd_hist = fd_input_grads(spec, params, cur, hist, probe, h=h)
    if cur is not None:
        worst = max(worst, max_rel_err(dcur, fd_cur, guard))
    worst = max(worst, max_rel_err(dhist, fd_hist, guard))
    return worst
