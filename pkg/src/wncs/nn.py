"""Minimal differentiable networks on numpy: FC + GRU, manual gradients.

Topology is fixed to the two shapes the agents need:

  * two-branch: a current-input FC branch and a history branch (per-step FC
    embedding into a GRU unrolled over the history length), merged by an FC
    layer into an output head;
  * history-only: the history branch feeding the output head directly.

The history is a [batch, length, step_dim] sequence, one (observation, input)
pair per recurrent step. All gradients are exact reverse-mode, including
backprop through time across the unroll. Training math runs in the dtype of
the parameters (float32 by default; float64 for gradient checks).
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import asdict, dataclass

import numpy as np

_OUT_ACTIVATIONS = ("linear", "tanh", "relu", "sigmoid")
_MAGIC = b"WNCSNET"
_VERSION = 1
_DTYPE_CODES = {0: np.float32, 1: np.float64}
_DTYPE_TO_CODE = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}


@dataclass(frozen=True)
class NetworkSpec:
    """Shape description of one network.

    current_dim == 0 selects the history-only topology. step_dim is the width
    of one history entry; the branch consumes history_len of them in order,
    oldest first.
    """

    name: str
    current_dim: int
    step_dim: int
    history_len: int
    hidden_dim: int
    out_dim: int
    out_activation: str = "linear"

    def __post_init__(self):
        if self.out_activation not in _OUT_ACTIVATIONS:
            raise ValueError(f"unknown activation {self.out_activation!r}")
        for fieldname in ("step_dim", "history_len", "hidden_dim", "out_dim"):
            if getattr(self, fieldname) <= 0:
                raise ValueError(f"{fieldname} must be positive")
        if self.current_dim < 0:
            raise ValueError("current_dim must be >= 0")

    def param_shapes(self) -> dict[str, tuple[int, ...]]:
        h = self.hidden_dim
        shapes: dict[str, tuple[int, ...]] = {}
        if self.current_dim > 0:
            shapes["cur.W"] = (self.current_dim, h)
            shapes["cur.b"] = (h,)
        shapes["his.W"] = (self.step_dim, h)
        shapes["his.b"] = (h,)
        for gate in ("z", "r", "n"):
            shapes[f"gru.W{gate}"] = (h, h)
            shapes[f"gru.U{gate}"] = (h, h)
            shapes[f"gru.b{gate}"] = (h,)
        if self.current_dim > 0:
            shapes["merge.W"] = (2 * h, h)
            shapes["merge.b"] = (h,)
        shapes["out.W"] = (h, self.out_dim)
        shapes["out.b"] = (self.out_dim,)
        return shapes


class ParamSet(dict):
    """Named tensors that are views into one contiguous buffer.

    Behaves as a plain {name: array} mapping; the shared `flat` backing
    lets whole-network updates (Adam, Polyak, copies) run as single
    vector operations.
    """

    __slots__ = ("flat",)


def _build_paramset(shapes: dict, dtype) -> ParamSet:
    total = sum(math.prod(shape) for shape in shapes.values())
    ps = ParamSet()
    ps.flat = np.zeros(total, dtype=dtype)
    offset = 0
    for name, shape in shapes.items():
        size = math.prod(shape)
        ps[name] = ps.flat[offset:offset + size].reshape(shape)
        offset += size
    return ps


def _zeros_like_paramset(ps: ParamSet) -> ParamSet:
    out = ParamSet()
    out.flat = np.zeros(ps.flat.size, dtype=ps.flat.dtype)
    offset = 0
    for name, arr in ps.items():
        out[name] = out.flat[offset:offset + arr.size].reshape(arr.shape)
        offset += arr.size
    return out


def init_params(spec: NetworkSpec, rng: np.random.Generator,
                dtype=np.float32) -> ParamSet:
    """Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights, zero biases."""
    params = _build_paramset(spec.param_shapes(), dtype)
    for name, arr in params.items():
        if arr.ndim > 1:
            bound = 1.0 / np.sqrt(arr.shape[0])
            arr[:] = rng.uniform(-bound, bound, arr.shape).astype(dtype)
    return params


def _sigmoid(x):
    return 0.5 * (np.tanh(0.5 * x) + 1.0)


def _sigmoid_inplace(x):
    x *= 0.5
    np.tanh(x, out=x)
    x += 1.0
    x *= 0.5
    return x


def _out_act(x, kind):
    if kind == "linear":
        return x
    if kind == "tanh":
        return np.tanh(x)
    if kind == "relu":
        return np.maximum(x, 0.0)
    return _sigmoid(x)


def _out_act_grad(dout, out, kind):
    if kind == "linear":
        return dout
    if kind == "tanh":
        return dout * (1.0 - out * out)
    if kind == "relu":
        return dout * (out > 0)
    return dout * out * (1.0 - out)


def forward(spec: NetworkSpec, params: dict, cur, hist):
    """Run the network on a batch. Returns (output, cache).

    cur: [B, current_dim] or None for history-only networks.
    hist: [B, history_len, step_dim], oldest entry first.
    """
    hist = np.asarray(hist)
    if hist.ndim != 3 or hist.shape[1] != spec.history_len \
            or hist.shape[2] != spec.step_dim:
        raise ValueError(
            f"{spec.name}: history must have shape "
            f"[B, {spec.history_len}, {spec.step_dim}], got {hist.shape}")
    batch = hist.shape[0]
    if spec.current_dim > 0:
        cur = np.asarray(cur)
        if cur.ndim != 2 or cur.shape != (batch, spec.current_dim):
            raise ValueError(
                f"{spec.name}: current input must have shape "
                f"[{batch}, {spec.current_dim}], got "
                f"{None if cur is None else cur.shape}")
    elif cur is not None:
        raise ValueError(f"{spec.name}: history-only network takes no "
                         "current input")

    # hot loop: parameters hoisted and fresh temporaries updated in place
    his_w, his_b = params["his.W"], params["his.b"]
    w_z, u_z, b_z = params["gru.Wz"], params["gru.Uz"], params["gru.bz"]
    w_r, u_r, b_r = params["gru.Wr"], params["gru.Ur"], params["gru.br"]
    w_n, u_n, b_n = params["gru.Wn"], params["gru.Un"], params["gru.bn"]
    h = np.zeros((batch, spec.hidden_dim), dtype=params["out.W"].dtype)
    steps = []
    for t in range(spec.history_len):
        x_t = hist[:, t, :]
        e = x_t @ his_w
        e += his_b
        np.maximum(e, 0.0, out=e)
        z = e @ w_z
        z += h @ u_z
        z += b_z
        _sigmoid_inplace(z)
        r = e @ w_r
        r += h @ u_r
        r += b_r
        _sigmoid_inplace(r)
        h_un = h @ u_n
        n = e @ w_n
        n += r * h_un
        n += b_n
        np.tanh(n, out=n)
        h_new = 1.0 - z
        h_new *= n
        h_new += z * h
        steps.append((e, z, r, n, h, h_un))
        h = h_new

    cache = {"hist": hist, "steps": steps, "h_last": h}
    if spec.current_dim > 0:
        cur_act = cur @ params["cur.W"]
        cur_act += params["cur.b"]
        np.maximum(cur_act, 0.0, out=cur_act)
        merged_in = np.concatenate([cur_act, h], axis=1)
        merged = merged_in @ params["merge.W"]
        merged += params["merge.b"]
        np.maximum(merged, 0.0, out=merged)
        cache.update(cur=cur, cur_act=cur_act, merged_in=merged_in,
                     merged=merged)
        pre = merged @ params["out.W"]
        pre += params["out.b"]
    else:
        pre = h @ params["out.W"]
        pre += params["out.b"]
    out = _out_act(pre, spec.out_activation)
    cache["out"] = out
    if not np.all(np.isfinite(out)):
        _diagnose_nonfinite(spec, cache)
    return out, cache


def _diagnose_nonfinite(spec, cache):
    for t, step in enumerate(cache["steps"]):
        for label, arr in zip(("embed", "z-gate", "r-gate", "candidate"),
                              step[:4]):
            if not np.all(np.isfinite(arr)):
                raise FloatingPointError(
                    f"{spec.name}: non-finite values in history step {t} "
                    f"({label})")
    for label in ("cur_act", "merged"):
        if label in cache and not np.all(np.isfinite(cache[label])):
            raise FloatingPointError(
                f"{spec.name}: non-finite values in {label} layer")
    raise FloatingPointError(f"{spec.name}: non-finite values in output head")


def forward_one(spec: NetworkSpec, params: dict, cur, hist):
    """Single-sample forward; returns the output vector."""
    cur_b = None if cur is None else np.asarray(cur)[None, :]
    out, _ = forward(spec, params, cur_b, np.asarray(hist)[None, :, :])
    return out[0]


def backward(spec: NetworkSpec, params: dict, cache: dict, dout):
    """Exact reverse-mode gradients.

    Returns (param_grads, d_current, d_history); d_current is None for
    history-only networks.
    """
    dout = np.asarray(dout)
    if isinstance(params, ParamSet):
        grads = _zeros_like_paramset(params)
    else:
        grads = {k: np.zeros_like(v) for k, v in params.items()}
    dpre = _out_act_grad(dout, cache["out"], spec.out_activation)

    if spec.current_dim > 0:
        grads["out.W"] += cache["merged"].T @ dpre
        grads["out.b"] += dpre.sum(axis=0)
        dmerged = dpre @ params["out.W"].T
        dmerged_pre = dmerged * (cache["merged"] > 0)
        grads["merge.W"] += cache["merged_in"].T @ dmerged_pre
        grads["merge.b"] += dmerged_pre.sum(axis=0)
        dmerged_in = dmerged_pre @ params["merge.W"].T
        h_dim = spec.hidden_dim
        dcur_act = dmerged_in[:, :h_dim]
        dh = dmerged_in[:, h_dim:].copy()
        dcur_pre = dcur_act * (cache["cur_act"] > 0)
        grads["cur.W"] += cache["cur"].T @ dcur_pre
        grads["cur.b"] += dcur_pre.sum(axis=0)
        dcur = dcur_pre @ params["cur.W"].T
    else:
        grads["out.W"] += cache["h_last"].T @ dpre
        grads["out.b"] += dpre.sum(axis=0)
        dh = dpre @ params["out.W"].T
        dcur = None

    hist = cache["hist"]
    his_w = params["his.W"]
    w_z, u_z = params["gru.Wz"], params["gru.Uz"]
    w_r, u_r = params["gru.Wr"], params["gru.Ur"]
    w_n, u_n = params["gru.Wn"], params["gru.Un"]
    g_his_w, g_his_b = grads["his.W"], grads["his.b"]
    g_wz, g_uz, g_bz = grads["gru.Wz"], grads["gru.Uz"], grads["gru.bz"]
    g_wr, g_ur, g_br = grads["gru.Wr"], grads["gru.Ur"], grads["gru.br"]
    g_wn, g_un, g_bn = grads["gru.Wn"], grads["gru.Un"], grads["gru.bn"]
    dhist = np.zeros_like(hist, dtype=dh.dtype)
    for t in range(spec.history_len - 1, -1, -1):
        e, z, r, n, h_prev, h_un = cache["steps"][t]
        dn = dh * (1.0 - z)
        dz = dh * (h_prev - n)
        dh_prev = dh * z

        dn_pre = dn * (1.0 - n * n)
        g_wn += e.T @ dn_pre
        g_bn += dn_pre.sum(axis=0)
        de = dn_pre @ w_n.T
        dr = dn_pre * h_un
        d_hun = dn_pre * r
        g_un += h_prev.T @ d_hun
        dh_prev = dh_prev + d_hun @ u_n.T

        dz_pre = dz * z * (1.0 - z)
        g_wz += e.T @ dz_pre
        g_uz += h_prev.T @ dz_pre
        g_bz += dz_pre.sum(axis=0)
        de += dz_pre @ w_z.T
        dh_prev += dz_pre @ u_z.T

        dr_pre = dr * r * (1.0 - r)
        g_wr += e.T @ dr_pre
        g_ur += h_prev.T @ dr_pre
        g_br += dr_pre.sum(axis=0)
        de += dr_pre @ w_r.T
        dh_prev += dr_pre @ u_r.T

        de_pre = de * (e > 0)
        g_his_w += hist[:, t, :].T @ de_pre
        g_his_b += de_pre.sum(axis=0)
        dhist[:, t, :] = de_pre @ his_w.T
        dh = dh_prev

    return grads, dcur, dhist


class Adam:
    """Adam with bias correction, updating parameters in place."""

    def __init__(self, params: dict, lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        if isinstance(params, ParamSet):
            self.m = _zeros_like_paramset(params)
            self.v = _zeros_like_paramset(params)
        else:
            self.m = {k: np.zeros_like(v) for k, v in params.items()}
            self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict, grads: dict):
        self.t += 1
        correction1 = 1.0 - self.beta1 ** self.t
        correction2 = 1.0 - self.beta2 ** self.t
        if isinstance(params, ParamSet) and isinstance(grads, ParamSet) \
                and isinstance(self.m, ParamSet) \
                and params.flat.size == grads.flat.size:
            g = grads.flat
            m, v = self.m.flat, self.v.flat
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            params.flat -= (self.lr / correction1) * m \
                / (np.sqrt(v / correction2) + self.eps)
            return
        for key, g in grads.items():
            m = self.m[key]
            v = self.v[key]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            step = (self.lr / correction1) * m \
                / (np.sqrt(v / correction2) + self.eps)
            params[key] -= step


def polyak_update(target: dict, online: dict, tau: float):
    """target <- (1 - tau) * target + tau * online, in place."""
    if isinstance(target, ParamSet) and isinstance(online, ParamSet) \
            and target.flat.size == online.flat.size:
        t = target.flat
        t *= (1.0 - tau)
        t += tau * online.flat
        return
    for key, value in online.items():
        t = target[key]
        t *= (1.0 - tau)
        t += tau * value


def hard_copy(target: dict, online: dict):
    """target <- online, bit-exact."""
    if isinstance(target, ParamSet) and isinstance(online, ParamSet) \
            and target.flat.size == online.flat.size:
        np.copyto(target.flat, online.flat)
        return
    for key, value in online.items():
        np.copyto(target[key], value)


def clone_params(params: dict) -> dict:
    if isinstance(params, ParamSet):
        clone = _zeros_like_paramset(params)
        clone.flat[:] = params.flat
        return clone
    return {k: v.copy() for k, v in params.items()}


def save_params(path, params: dict, meta: dict | None = None):
    """Binary checkpoint: shape table then little-endian payloads.

    A JSON sidecar at <path>.json records the network description and any
    caller metadata.
    """
    entries = list(params.items())
    blob = bytearray()
    blob += _MAGIC
    blob += struct.pack("<B", _VERSION)
    blob += struct.pack("<I", len(entries))
    for name, arr in entries:
        code = _DTYPE_TO_CODE.get(arr.dtype)
        if code is None:
            raise ValueError(f"unsupported parameter dtype {arr.dtype}")
        encoded = name.encode("utf-8")
        blob += struct.pack("<H", len(encoded))
        blob += encoded
        blob += struct.pack("<BB", code, arr.ndim)
        blob += struct.pack(f"<{arr.ndim}I", *arr.shape)
    for _, arr in entries:
        dt = "<f4" if arr.dtype == np.float32 else "<f8"
        blob += np.ascontiguousarray(arr, dtype=arr.dtype) \
            .astype(dt, copy=False).tobytes()
    path = str(path)
    with open(path, "wb") as fh:
        fh.write(blob)
    if meta is not None:
        with open(path + ".json", "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")


def load_params(path):
    """Load a checkpoint written by save_params. Returns (params, meta)."""
    path = str(path)
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:7] != _MAGIC:
        raise ValueError(f"{path}: not a network checkpoint")
    version = blob[7]
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    offset = 8
    (count,) = struct.unpack_from("<I", blob, offset)
    offset += 4
    table = []
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", blob, offset)
        offset += 2
        name = blob[offset:offset + name_len].decode("utf-8")
        offset += name_len
        code, ndim = struct.unpack_from("<BB", blob, offset)
        offset += 2
        shape = struct.unpack_from(f"<{ndim}I", blob, offset)
        offset += 4 * ndim
        if code not in _DTYPE_CODES:
            raise ValueError(f"{path}: unknown dtype code {code}")
        table.append((name, _DTYPE_CODES[code], shape))
    params = {}
    for name, dtype, shape in table:
        n_items = int(np.prod(shape)) if shape else 1
        n_bytes = n_items * np.dtype(dtype).itemsize
        if offset + n_bytes > len(blob):
            raise ValueError(f"{path}: truncated checkpoint payload")
        dt = "<f4" if dtype == np.float32 else "<f8"
        arr = np.frombuffer(blob[offset:offset + n_bytes], dtype=dt)
        params[name] = arr.reshape(shape).astype(dtype, copy=True)
        offset += n_bytes
    if offset != len(blob):
        raise ValueError(f"{path}: trailing bytes in checkpoint")
    meta = None
    try:
        with open(path + ".json") as fh:
            meta = json.load(fh)
    except FileNotFoundError:
        pass
    return params, meta


def spec_meta(spec: NetworkSpec) -> dict:
    return {"network": asdict(spec)}
