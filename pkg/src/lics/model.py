"""Policy networks with forward pass, analytic gradients, and checkpointing.

The main variant encodes the LiDAR scan as a sequence of patches with a
three-block pre-norm transformer encoder, embeds the unit local goal as a
single decoder token, and decodes it through three cross-attention blocks
into a (v, w) command. An MLP variant of comparable size serves as the
ablation baseline. Everything runs in float64 numpy with hand-written
backward passes, validated by the finite-difference checker below.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import NonFiniteParams, ShapeMismatch

LN_EPS = 1e-5
_GELU_C = math.sqrt(2.0 / math.pi)

TRANSFORMER = "transformer"
MLP = "mlp"


@dataclass(frozen=True)
class ModelConfig:
    scan_len: int = 720
    patches: int = 20
    d_model: int = 64
    heads: int = 4
    d_ff: int = 128
    enc_layers: int = 3
    dec_layers: int = 3
    variant: str = TRANSFORMER
    mlp_hidden: tuple[int, ...] = (256, 256, 256)

    def __post_init__(self) -> None:
        if self.variant not in (TRANSFORMER, MLP):
            raise ShapeMismatch(f"unknown variant {self.variant!r}")
        if self.scan_len % self.patches != 0:
            raise ShapeMismatch(
                f"patch count {self.patches} does not divide scan length {self.scan_len}"
            )
        if self.d_model % self.heads != 0:
            raise ShapeMismatch(
                f"heads {self.heads} do not divide model width {self.d_model}"
            )

    @property
    def patch_len(self) -> int:
        return self.scan_len // self.patches


def patchify(scan: np.ndarray, patches: int) -> np.ndarray:
    """Reshape (..., H) into (..., N, H/N); element (i, j) is scan[i*D + j]."""
    scan = np.asarray(scan)
    h = scan.shape[-1]
    if h % patches != 0:
        raise ShapeMismatch(f"{patches} patches do not divide scan length {h}")
    return scan.reshape(*scan.shape[:-1], patches, h // patches)


def mse_loss(pred: np.ndarray, target: np.ndarray) -> float:
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise ShapeMismatch(f"pred {pred.shape} vs target {target.shape}")
    diff = pred - target
    return float(np.mean(diff * diff))


# --- parameter construction ---------------------------------------------------

def _uniform(rng: np.random.Generator, fan_in: int, shape) -> np.ndarray:
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def init_params(cfg: ModelConfig, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """Fresh parameter dictionary in canonical (checkpoint) order."""
    p: dict[str, np.ndarray] = {}
    if cfg.variant == MLP:
        sizes = [cfg.scan_len + 2, *cfg.mlp_hidden]
        for i in range(len(cfg.mlp_hidden)):
            p[f"mlp.{i}.w"] = _uniform(rng, sizes[i], (sizes[i], sizes[i + 1]))
            p[f"mlp.{i}.b"] = np.zeros(sizes[i + 1])
        p["head.w"] = _uniform(rng, sizes[-1], (sizes[-1], 2))
        p["head.b"] = np.zeros(2)
        return p

    dm, dff, dpatch = cfg.d_model, cfg.d_ff, cfg.patch_len
    p["patch_embed.w"] = _uniform(rng, dpatch, (dpatch, dm))
    p["patch_embed.b"] = np.zeros(dm)
    p["pos_embed"] = rng.normal(0.0, 0.02, size=(cfg.patches, dm))

    def attn_block(prefix: str) -> None:
        for name in ("wq", "wk", "wv", "wo"):
            p[f"{prefix}.{name}"] = _uniform(rng, dm, (dm, dm))
        for name in ("bq", "bv", "bo"):  # a key bias cancels inside softmax
            p[f"{prefix}.{name}"] = np.zeros(dm)

    def ffn_block(prefix: str) -> None:
        p[f"{prefix}.w1"] = _uniform(rng, dm, (dm, dff))
        p[f"{prefix}.b1"] = np.zeros(dff)
        p[f"{prefix}.w2"] = _uniform(rng, dff, (dff, dm))
        p[f"{prefix}.b2"] = np.zeros(dm)

    def norm(prefix: str) -> None:
        p[f"{prefix}.g"] = np.ones(dm)
        p[f"{prefix}.b"] = np.zeros(dm)

    for i in range(cfg.enc_layers):
        norm(f"enc{i}.ln1")
        attn_block(f"enc{i}.attn")
        norm(f"enc{i}.ln2")
        ffn_block(f"enc{i}.ffn")
    norm("enc_norm")
    p["goal_embed.w"] = _uniform(rng, 2, (2, dm))
    p["goal_embed.b"] = np.zeros(dm)
    for i in range(cfg.dec_layers):
        norm(f"dec{i}.ln1")
        attn_block(f"dec{i}.attn")
        norm(f"dec{i}.ln2")
        ffn_block(f"dec{i}.ffn")
    norm("dec_norm")
    p["head.w"] = _uniform(rng, dm, (dm, 2))
    p["head.b"] = np.zeros(2)
    return p


def count_params(params: dict[str, np.ndarray]) -> int:
    return int(sum(t.size for t in params.values()))


# --- primitive layers ---------------------------------------------------------

def _linear_bwd(x, w, dy):
    dx = dy @ w.T
    x2 = x.reshape(-1, x.shape[-1])
    dy2 = dy.reshape(-1, dy.shape[-1])
    return dx, x2.T @ dy2, dy2.sum(axis=0)


def _layernorm_fwd(x, g, b):
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + LN_EPS)
    xhat = xc * inv
    return xhat * g + b, (xhat, inv)


def _layernorm_bwd(cache, g, dy):
    xhat, inv = cache
    dg = (dy * xhat).reshape(-1, xhat.shape[-1]).sum(axis=0)
    db = dy.reshape(-1, dy.shape[-1]).sum(axis=0)
    dxhat = dy * g
    m1 = dxhat.mean(axis=-1, keepdims=True)
    m2 = (dxhat * xhat).mean(axis=-1, keepdims=True)
    dx = inv * (dxhat - m1 - xhat * m2)
    return dx, dg, db


def _gelu_fwd(x):
    x2 = x * x
    u = _GELU_C * (x + 0.044715 * (x2 * x))
    t = np.tanh(u)
    return 0.5 * x * (1.0 + t), (x, x2, t)


def _gelu_bwd(cache, dy):
    x, x2, t = cache
    du = _GELU_C * (1.0 + 0.134145 * x2)
    return dy * (0.5 * (1.0 + t) + 0.5 * x * ((1.0 - t * t) * du))


def _softmax(x):
    e = np.exp(x - x.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def _split_heads(x, heads):
    b, t, dm = x.shape
    return x.reshape(b, t, heads, dm // heads).transpose(0, 2, 1, 3)


def _merge_heads(x):
    b, h, t, dh = x.shape
    return x.transpose(0, 2, 1, 3).reshape(b, t, h * dh)


def _attn_fwd(q_src, kv_src, p, prefix, heads):
    q = _split_heads(q_src @ p[f"{prefix}.wq"] + p[f"{prefix}.bq"], heads)
    k = _split_heads(kv_src @ p[f"{prefix}.wk"], heads)
    v = _split_heads(kv_src @ p[f"{prefix}.wv"] + p[f"{prefix}.bv"], heads)
    scale = 1.0 / math.sqrt(q.shape[-1])
    scores = (q @ k.transpose(0, 1, 3, 2)) * scale
    attn = _softmax(scores)
    merged = _merge_heads(attn @ v)
    out = merged @ p[f"{prefix}.wo"] + p[f"{prefix}.bo"]
    return out, (q_src, kv_src, q, k, v, attn, merged, scale)


def _attn_bwd(cache, p, prefix, heads, dout, grads):
    q_src, kv_src, q, k, v, attn, merged, scale = cache
    dmerged, dwo, dbo = _linear_bwd(merged, p[f"{prefix}.wo"], dout)
    grads[f"{prefix}.wo"] += dwo
    grads[f"{prefix}.bo"] += dbo
    do = _split_heads(dmerged, heads)
    dattn = do @ v.transpose(0, 1, 3, 2)
    dv = attn.transpose(0, 1, 3, 2) @ do
    dscores = (dattn - (dattn * attn).sum(axis=-1, keepdims=True)) * attn
    dq = (dscores @ k) * scale
    dk = (dscores.transpose(0, 1, 3, 2) @ q) * scale
    dq_src, dwq, dbq = _linear_bwd(q_src, p[f"{prefix}.wq"], _merge_heads(dq))
    dk_src, dwk, _ = _linear_bwd(kv_src, p[f"{prefix}.wk"], _merge_heads(dk))
    dv_src, dwv, dbv = _linear_bwd(kv_src, p[f"{prefix}.wv"], _merge_heads(dv))
    grads[f"{prefix}.wq"] += dwq
    grads[f"{prefix}.bq"] += dbq
    grads[f"{prefix}.wk"] += dwk
    grads[f"{prefix}.wv"] += dwv
    grads[f"{prefix}.bv"] += dbv
    return dq_src, dk_src + dv_src


def _ffn_fwd(x, p, prefix):
    h1 = x @ p[f"{prefix}.w1"] + p[f"{prefix}.b1"]
    a, gelu_cache = _gelu_fwd(h1)
    out = a @ p[f"{prefix}.w2"] + p[f"{prefix}.b2"]
    return out, (x, a, gelu_cache)


def _ffn_bwd(cache, p, prefix, dout, grads):
    x, a, gelu_cache = cache
    da, dw2, db2 = _linear_bwd(a, p[f"{prefix}.w2"], dout)
    grads[f"{prefix}.w2"] += dw2
    grads[f"{prefix}.b2"] += db2
    dh1 = _gelu_bwd(gelu_cache, da)
    dx, dw1, db1 = _linear_bwd(x, p[f"{prefix}.w1"], dh1)
    grads[f"{prefix}.w1"] += dw1
    grads[f"{prefix}.b1"] += db1
    return dx


# --- full network -------------------------------------------------------------

def _check_inputs(cfg: ModelConfig, scans: np.ndarray, goals: np.ndarray):
    scans = np.atleast_2d(np.asarray(scans, dtype=float))
    goals = np.atleast_2d(np.asarray(goals, dtype=float))
    if scans.shape[-1] != cfg.scan_len:
        raise ShapeMismatch(f"scan length {scans.shape[-1]} != {cfg.scan_len}")
    if goals.shape != (scans.shape[0], 2):
        raise ShapeMismatch(f"goals {goals.shape} vs batch {scans.shape[0]}")
    return scans, goals


def _forward_transformer(cfg, p, scans, goals, need_cache):
    cache: dict = {"blocks": []}
    patched = patchify(scans, cfg.patches)
    x = patched @ p["patch_embed.w"] + p["patch_embed.b"]
    x = x + p["pos_embed"]
    cache["patched"] = patched if need_cache else None

    for i in range(cfg.enc_layers):
        pre = f"enc{i}"
        a, ln1_c = _layernorm_fwd(x, p[f"{pre}.ln1.g"], p[f"{pre}.ln1.b"])
        sa, attn_c = _attn_fwd(a, a, p, f"{pre}.attn", cfg.heads)
        x1 = x + sa
        b, ln2_c = _layernorm_fwd(x1, p[f"{pre}.ln2.g"], p[f"{pre}.ln2.b"])
        f, ffn_c = _ffn_fwd(b, p, f"{pre}.ffn")
        x = x1 + f
        cache["blocks"].append(("enc", pre, ln1_c, attn_c, ln2_c, ffn_c))
    memory, enc_norm_c = _layernorm_fwd(x, p["enc_norm.g"], p["enc_norm.b"])
    cache["enc_norm"] = enc_norm_c

    y = (goals @ p["goal_embed.w"] + p["goal_embed.b"])[:, None, :]
    dec_caches = []
    for i in range(cfg.dec_layers):
        pre = f"dec{i}"
        a, ln1_c = _layernorm_fwd(y, p[f"{pre}.ln1.g"], p[f"{pre}.ln1.b"])
        ca, attn_c = _attn_fwd(a, memory, p, f"{pre}.attn", cfg.heads)
        y1 = y + ca
        b, ln2_c = _layernorm_fwd(y1, p[f"{pre}.ln2.g"], p[f"{pre}.ln2.b"])
        f, ffn_c = _ffn_fwd(b, p, f"{pre}.ffn")
        y = y1 + f
        dec_caches.append((pre, ln1_c, attn_c, ln2_c, ffn_c))
    yn, dec_norm_c = _layernorm_fwd(y, p["dec_norm.g"], p["dec_norm.b"])
    out = yn[:, 0, :] @ p["head.w"] + p["head.b"]

    if not need_cache:
        return out, None
    cache["dec_blocks"] = dec_caches
    cache["dec_norm"] = dec_norm_c
    cache["yn"] = yn
    cache["memory"] = memory
    cache["goals"] = goals
    return out, cache


def _forward_mlp(cfg, p, scans, goals, need_cache):
    x = np.concatenate([scans, goals], axis=1)
    acts = [x]
    h = x
    for i in range(len(cfg.mlp_hidden)):
        h = np.tanh(h @ p[f"mlp.{i}.w"] + p[f"mlp.{i}.b"])
        acts.append(h)
    out = h @ p["head.w"] + p["head.b"]
    return out, (acts if need_cache else None)


def forward(cfg: ModelConfig, params: dict, scans, goals) -> np.ndarray:
    """Deterministic forward pass; scans must already be normalized to [0, 1]."""
    scans, goals = _check_inputs(cfg, scans, goals)
    dtype = next(iter(params.values())).dtype
    scans = scans.astype(dtype, copy=False)
    goals = goals.astype(dtype, copy=False)
    if cfg.variant == MLP:
        out, _ = _forward_mlp(cfg, params, scans, goals, need_cache=False)
    else:
        out, _ = _forward_transformer(cfg, params, scans, goals, need_cache=False)
    if not np.isfinite(out).all():
        for name, t in params.items():
            if not np.isfinite(t).all():
                raise NonFiniteParams(f"parameter {name!r} contains non-finite values")
        raise NonFiniteParams("forward produced non-finite output")
    return out


def predict_action(cfg: ModelConfig, params: dict, scan_norm, goal_unit) -> tuple[float, float]:
    out = forward(cfg, params, np.asarray(scan_norm)[None, :], np.asarray(goal_unit)[None, :])
    return float(out[0, 0]), float(out[0, 1])


def backward(cfg: ModelConfig, params: dict, scans, goals, targets) -> tuple[float, dict]:
    """Loss and gradients of mse_loss with respect to every parameter.
    Runs in the parameter dtype (float32 training is ~2x faster)."""
    scans, goals = _check_inputs(cfg, scans, goals)
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    if targets.shape != (scans.shape[0], 2):
        raise ShapeMismatch(f"targets {targets.shape} vs batch {scans.shape[0]}")
    dtype = next(iter(params.values())).dtype
    scans = scans.astype(dtype, copy=False)
    goals = goals.astype(dtype, copy=False)
    targets = targets.astype(dtype, copy=False)

    grads = {name: np.zeros_like(t) for name, t in params.items()}
    b = scans.shape[0]

    if cfg.variant == MLP:
        out, acts = _forward_mlp(cfg, params, scans, goals, need_cache=True)
        loss = mse_loss(out, targets)
        dout = (out - targets) / b  # d(mean sq err over 2B elements)
        dh, dw, dbias = _linear_bwd(acts[-1], params["head.w"], dout)
        grads["head.w"] += dw
        grads["head.b"] += dbias
        for i in reversed(range(len(cfg.mlp_hidden))):
            h = acts[i + 1]
            dz = dh * (1.0 - h * h)
            dh, dw, dbias = _linear_bwd(acts[i], params[f"mlp.{i}.w"], dz)
            grads[f"mlp.{i}.w"] += dw
            grads[f"mlp.{i}.b"] += dbias
    else:
        out, cache = _forward_transformer(cfg, params, scans, goals, need_cache=True)
        loss = mse_loss(out, targets)
        dout = (out - targets) / b

        dyn0, dw, dbias = _linear_bwd(cache["yn"][:, 0, :], params["head.w"], dout)
        grads["head.w"] += dw
        grads["head.b"] += dbias
        dyn = np.zeros_like(cache["yn"])
        dyn[:, 0, :] = dyn0
        dy, dg, dbn = _layernorm_bwd(cache["dec_norm"], params["dec_norm.g"], dyn)
        grads["dec_norm.g"] += dg
        grads["dec_norm.b"] += dbn

        dmemory = np.zeros_like(cache["memory"])
        for pre, ln1_c, attn_c, ln2_c, ffn_c in reversed(cache["dec_blocks"]):
            db_in = _ffn_bwd(ffn_c, params, f"{pre}.ffn", dy, grads)
            dy1, dg, dbn = _layernorm_bwd(ln2_c, params[f"{pre}.ln2.g"], db_in)
            grads[f"{pre}.ln2.g"] += dg
            grads[f"{pre}.ln2.b"] += dbn
            dy1 = dy1 + dy
            da, dmem = _attn_bwd(attn_c, params, f"{pre}.attn", cfg.heads, dy1, grads)
            dmemory += dmem
            dy0, dg, dbn = _layernorm_bwd(ln1_c, params[f"{pre}.ln1.g"], da)
            grads[f"{pre}.ln1.g"] += dg
            grads[f"{pre}.ln1.b"] += dbn
            dy = dy1 + dy0
        dgoal_emb = dy[:, 0, :]
        _, dw, dbias = _linear_bwd(cache["goals"], params["goal_embed.w"], dgoal_emb)
        grads["goal_embed.w"] += dw
        grads["goal_embed.b"] += dbias

        dx, dg, dbn = _layernorm_bwd(cache["enc_norm"], params["enc_norm.g"], dmemory)
        grads["enc_norm.g"] += dg
        grads["enc_norm.b"] += dbn
        for kind, pre, ln1_c, attn_c, ln2_c, ffn_c in reversed(cache["blocks"]):
            db_in = _ffn_bwd(ffn_c, params, f"{pre}.ffn", dx, grads)
            dx1, dg, dbn = _layernorm_bwd(ln2_c, params[f"{pre}.ln2.g"], db_in)
            grads[f"{pre}.ln2.g"] += dg
            grads[f"{pre}.ln2.b"] += dbn
            dx1 = dx1 + dx
            da, da_kv = _attn_bwd(attn_c, params, f"{pre}.attn", cfg.heads, dx1, grads)
            da = da + da_kv  # self-attention: q and kv share the input
            dx0, dg, dbn = _layernorm_bwd(ln1_c, params[f"{pre}.ln1.g"], da)
            grads[f"{pre}.ln1.g"] += dg
            grads[f"{pre}.ln1.b"] += dbn
            dx = dx1 + dx0
        grads["pos_embed"] += dx.sum(axis=0)
        patched = cache["patched"]
        _, dw, dbias = _linear_bwd(patched, params["patch_embed.w"], dx)
        grads["patch_embed.w"] += dw
        grads["patch_embed.b"] += dbias

    for name, g in grads.items():
        if not np.isfinite(g).all():
            raise NonFiniteParams(f"gradient for {name!r} is non-finite")
    return loss, grads


def grad_check(
    cfg: ModelConfig,
    params: dict,
    scans,
    goals,
    targets,
    step: float = 1e-5,
    rng: np.random.Generator | None = None,
    min_samples: int = 100,
    grads: dict | None = None,
) -> float:
    """Max relative error between analytic gradients and central finite
    differences over >= min_samples scalars drawn from every tensor."""
    rng = rng or np.random.default_rng(0)
    scans, goals = _check_inputs(cfg, scans, goals)
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    if grads is None:
        _, grads = backward(cfg, params, scans, goals, targets)

    names = list(params.keys())
    per_tensor = max(1, math.ceil(min_samples / len(names)))
    worst = 0.0
    work = {k: v.copy() for k, v in params.items()}
    for name in names:
        flat = work[name].reshape(-1)
        size = flat.shape[0]
        for idx in rng.integers(0, size, size=min(per_tensor, size)):
            orig = flat[idx]
            flat[idx] = orig + step
            up = mse_loss(forward(cfg, work, scans, goals), targets)
            flat[idx] = orig - step
            down = mse_loss(forward(cfg, work, scans, goals), targets)
            flat[idx] = orig
            fd = (up - down) / (2.0 * step)
            ga = float(grads[name].reshape(-1)[idx])
            rel = abs(ga - fd) / max(abs(ga), abs(fd), 1e-8)
            worst = max(worst, rel)
    return worst


# --- checkpoint codec ---------------------------------------------------------

def save_checkpoint(path, cfg: ModelConfig, params: dict) -> None:
    """JSON header line (schema, config, tensor directory with offsets into
    the data section) followed by the raw little-endian float32 tensors."""
    directory = []
    offset = 0
    blobs = []
    for name, t in params.items():
        raw = np.ascontiguousarray(t, dtype="<f4").tobytes()
        directory.append({"name": name, "shape": list(t.shape), "offset": offset})
        offset += len(raw)
        blobs.append(raw)
    header = {"schema": 1, "config": asdict(cfg), "tensors": directory}
    with open(path, "wb") as f:
        f.write(json.dumps(header).encode("utf-8"))
        f.write(b"\n")
        for raw in blobs:
            f.write(raw)


def load_checkpoint(path) -> tuple[ModelConfig, dict]:
    with open(path, "rb") as f:
        header_line = f.readline()
        data = f.read()
    header = json.loads(header_line.decode("utf-8"))
    cfg_dict = dict(header["config"])
    cfg_dict["mlp_hidden"] = tuple(cfg_dict.get("mlp_hidden", ()))
    cfg = ModelConfig(**cfg_dict)
    params: dict[str, np.ndarray] = {}
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        arr = np.frombuffer(data, dtype="<f4", count=count, offset=start)
        params[entry["name"]] = arr.reshape(shape).astype(np.float64)
    return cfg, params
