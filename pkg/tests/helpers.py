"""Independent oracles and deterministic random test models.

The oracles here deliberately avoid the library's vectorized code paths:
convolution is a naive 6-nested loop, co-occurrence counting walks pixels
one by one, entropies are plain Python summations. They exist so the fast
implementations can be checked against something that is obviously the
textbook definition.
"""

from __future__ import annotations

import math

import numpy as np

from tivis import nn


# --------------------------------------------------------------------------
# Direct-summation network oracle (single sample, scalar loops)


def conv2d_direct(x, weight, bias, stride, padding):
    """Naive convolution: six nested loops, no vectorization."""
    c, h, w = x.shape
    oc, ic, kh, kw = weight.shape
    xp = np.zeros((c, h + 2 * padding, w + 2 * padding))
    xp[:, padding : padding + h, padding : padding + w] = x
    ho = (h + 2 * padding - kh) // stride + 1
    wo = (w + 2 * padding - kw) // stride + 1
    out = np.zeros((oc, ho, wo))
    for o in range(oc):
        for i in range(ho):
            for j in range(wo):
                acc = float(bias[o])
                for ci in range(ic):
                    for ki in range(kh):
                        for kj in range(kw):
                            acc += weight[o, ci, ki, kj] * xp[ci, i * stride + ki, j * stride + kj]
                out[o, i, j] = acc
    return out


def forward_direct(model, image):
    """Full forward pass via scalar loops; returns logits for one image."""
    h_img, w_img = image.shape[:2]
    x = np.empty((3, h_img, w_img))
    for ch in range(3):
        for i in range(h_img):
            for j in range(w_img):
                v = float(image[i, j, ch])
                x[ch, i, j] = v / 255.0 if model.pixel_norm == "unit_01" else v / 127.5 - 1.0
    for layer in model.layers:
        if layer.kind == "conv2d":
            x = conv2d_direct(x, layer.weight, layer.bias, layer.stride, layer.padding)
        elif layer.kind == "relu":
            x = np.where(x > 0, x, 0.0)
        elif layer.kind == "maxpool2x2":
            c, h, w = x.shape
            out = np.zeros((c, h // 2, w // 2))
            for ci in range(c):
                for i in range(h // 2):
                    for j in range(w // 2):
                        out[ci, i, j] = max(
                            x[ci, 2 * i, 2 * j],
                            x[ci, 2 * i, 2 * j + 1],
                            x[ci, 2 * i + 1, 2 * j],
                            x[ci, 2 * i + 1, 2 * j + 1],
                        )
            x = out
        elif layer.kind == "avgpool_global":
            c = x.shape[0]
            x = np.array([float(np.sum(x[ci])) / x[ci].size for ci in range(c)])
        elif layer.kind == "flatten":
            x = x.reshape(-1)
        elif layer.kind == "dense":
            o, i_dim = layer.weight.shape
            out = np.zeros(o)
            for oi in range(o):
                acc = float(layer.bias[oi])
                for ii in range(i_dim):
                    acc += layer.weight[oi, ii] * x[ii]
                out[oi] = acc
            x = out
        else:
            raise AssertionError(f"oracle does not know layer kind {layer.kind}")
    return x


# --------------------------------------------------------------------------
# Finite-difference input-gradient oracle


def fd_input_gradient(model, image, target, objective, h=1e-4):
    """Central finite differences in normalized units, rescaled to display."""
    x = nn.normalize_images(model.pixel_norm, np.asarray(image, dtype=np.float64)[None])

    def objective_at(xn):
        logits, _ = nn.forward_batch(model, xn, keep_caches=False)
        if objective == "logit":
            return float(logits[0, target])
        return float(nn.softmax(logits[0])[target])

    grad = np.zeros(x.shape[1:])
    for idx in np.ndindex(grad.shape):
        xp = x.copy()
        xp[(0,) + idx] += h
        xm = x.copy()
        xm[(0,) + idx] -= h
        grad[idx] = (objective_at(xp) - objective_at(xm)) / (2.0 * h)
    return grad * nn.pixel_norm_slope(model.pixel_norm)


def relu_and_pool_margins(model, image):
    """Smallest |pre-activation| at ReLUs and top-2 gap in pool windows.

    Finite differences are only trustworthy away from the kinks of relu and
    maxpool; seeded cases whose margins are below a safe threshold get
    resampled (standard practice for gradient checks).
    """
    x = nn.normalize_images(model.pixel_norm, np.asarray(image, dtype=np.float64)[None])
    margin = np.inf
    for layer in model.layers:
        if layer.kind == "relu":
            margin = min(margin, float(np.min(np.abs(x))))
        if layer.kind == "maxpool2x2":
            n, c, h, w = x.shape
            win = x[:, :, : h // 2 * 2, : w // 2 * 2].reshape(
                n, c, h // 2, 2, w // 2, 2
            ).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h // 2, w // 2, 4)
            top2 = np.sort(win, axis=-1)[..., -2:]
            margin = min(margin, float(np.min(top2[..., 1] - top2[..., 0])))
        x, _ = layer.forward(x)
    return margin


# --------------------------------------------------------------------------
# Random small models for gradient and equivalence checks


def random_small_model(seed):
    """Deterministic small random model + image with safe kink margins."""
    base = seed
    while True:
        model, image = _draw_model(base)
        if relu_and_pool_margins(model, image) > 1e-3:
            return model, image
        base += 1000


def _draw_model(seed):
    rng = np.random.default_rng(seed)
    size = int(rng.integers(6, 11))
    k = int(rng.integers(3, 6))
    pixel_norm = "unit_01" if rng.integers(2) == 0 else "signed_11"
    variant = int(rng.integers(3))
    layers = []
    if variant == 0:
        c1 = int(rng.integers(2, 5))
        layers += [
            nn.Conv2d(weight=rng.normal(0, 0.4, (c1, 3, 3, 3)), bias=rng.normal(0, 0.2, c1), padding=1),
            nn.Relu(),
            nn.MaxPool2x2(),
            nn.Flatten(),
        ]
        feat = c1 * (size // 2) ** 2
    elif variant == 1:
        c1 = int(rng.integers(2, 5))
        c2 = int(rng.integers(2, 5))
        layers += [
            nn.Conv2d(weight=rng.normal(0, 0.4, (c1, 3, 3, 3)), bias=rng.normal(0, 0.2, c1)),
            nn.Relu(),
            nn.Conv2d(weight=rng.normal(0, 0.4, (c2, c1, 1, 1)), bias=rng.normal(0, 0.2, c2)),
            nn.Relu(),
            nn.Flatten(),
        ]
        feat = c2 * (size - 2) ** 2
    else:
        c1 = int(rng.integers(3, 6))
        layers += [
            nn.Conv2d(weight=rng.normal(0, 0.4, (c1, 3, 2, 2)), bias=rng.normal(0, 0.2, c1), stride=2),
            nn.Relu(),
            nn.GlobalAvgPool(),
        ]
        feat = c1
    layers.append(nn.Dense(weight=rng.normal(0, 0.5, (k, feat)), bias=rng.normal(0, 0.2, k)))
    model = nn.Model(
        layers=layers,
        input_shape=(3, size, size),
        class_names=tuple(f"c{i}" for i in range(k)),
        pixel_norm=pixel_norm,
    ).validate()
    image = np.floor(rng.uniform(0, 256, (size, size, 3)))
    return model, image


# --------------------------------------------------------------------------
# Entropy oracles (pure Python loops)


def cooccurrence_direct(gray):
    """Per-pixel co-occurrence counting with replicate padding, as a dict."""
    gray = np.asarray(gray, dtype=int)
    h, w = gray.shape
    counts = {}
    for i in range(h):
        for j in range(w):
            total = 0
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    if di == 0 and dj == 0:
                        continue
                    ii = min(max(i + di, 0), h - 1)
                    jj = min(max(j + dj, 0), w - 1)
                    total += int(gray[ii, jj])
            mean = total / 8.0
            jv = math.floor(mean + 0.5)  # round half away from zero (nonnegative)
            key = (int(gray[i, j]), jv)
            counts[key] = counts.get(key, 0) + 1
    return counts, h * w


def entropy_direct(counts, total):
    """Plain-Python Shannon entropy in bits from a count mapping."""
    acc = 0.0
    for c in counts.values():
        p = c / total
        acc -= p * math.log2(p)
    return acc


def entropy_of_gray_direct(gray):
    counts, total = cooccurrence_direct(gray)
    return entropy_direct(counts, total)


def luma_direct(r, g, b):
    """Integer BT.601 luma for integer channel values."""
    return (30 * int(r) + 59 * int(g) + 11 * int(b)) // 100
