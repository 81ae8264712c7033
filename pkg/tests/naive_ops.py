"""Independent brute-force reference implementations (test oracles).

These re-derive the operator quadratures with plain loops straight from
the definitions, sharing only the kernel evaluation and grid-extension
primitives with the package (those are the objects under a common
contract; the quadrature assembly is what is being cross-checked).
1D grids only.
"""

import math

import numpy as np

from mlplab.grid import extended_block
from mlplab.kernels import eval_dilated


def window_halfwidth(K, t, h):
    return int(math.floor(t * K.support_radius_hint / h)) + 2


def naive_gt(K, fs, t):
    """Per-node loop over the full offset meshes."""
    f0 = fs[0]
    N, h = f0.points_per_axis, f0.h
    W = window_halfwidth(K, t, h)
    exts = [extended_block(f, W) for f in fs]
    offs = np.arange(-W, W + 1)
    grids = np.meshgrid(*([offs] * K.m), indexing="ij")
    x = f0.axis_coords(0)
    kern_conv = None
    if K.form != "non-convolution":
        kern_conv = eval_dilated(K, t, [(-g * h)[..., None] for g in grids])
    out = np.zeros(N)
    for p in range(N):
        vals = np.ones_like(grids[0], dtype=float)
        for i in range(K.m):
            vals = vals * exts[i][p + grids[i] + W]
        if kern_conv is None:
            ys = [(x[p] + g * h)[..., None] for g in grids]
            kern = eval_dilated(K, t, ys, x=np.array([x[p]]))
        else:
            kern = kern_conv
        out[p] = float(np.sum(kern * vals)) * h**K.m
    return out


def naive_gt_stack(K, fs, tg):
    return np.stack([naive_gt(K, fs, float(t)) for t in tg.nodes])


def naive_g(K, fs, tg, stack=None):
    stack = naive_gt_stack(K, fs, tg) if stack is None else stack
    acc = np.zeros_like(stack[0])
    for k, w in enumerate(tg.weights):
        acc = acc + w * stack[k] ** 2
    return np.sqrt(acc)


def _cone_steps(t, h):
    d = 0
    while (d + 1) * h < t:
        d += 1
    return d


def naive_S(K, fs, tg, stack=None):
    stack = naive_gt_stack(K, fs, tg) if stack is None else stack
    f0 = fs[0]
    N, h = f0.points_per_axis, f0.h
    out = np.zeros(N)
    for p in range(N):
        acc = 0.0
        for k, (t, w) in enumerate(zip(tg.nodes, tg.weights)):
            t = float(t)
            dmax = _cone_steps(t, h)
            zlo, zhi = max(0, p - dmax), min(N - 1, p + dmax)
            s = 0.0
            for z in range(zlo, zhi + 1):
                s += stack[k][z] ** 2
            acc += s * w * h / t
        out[p] = math.sqrt(acc)
    return out


def naive_g_star(K, fs, tg, lam, weight_eps=1e-8, stack=None):
    stack = naive_gt_stack(K, fs, tg) if stack is None else stack
    f0 = fs[0]
    N, h = f0.points_per_axis, f0.h
    n = 1
    x = f0.axis_coords(0)
    out = np.zeros(N)
    for p in range(N):
        acc = 0.0
        for k, (t, w) in enumerate(zip(tg.nodes, tg.weights)):
            t = float(t)
            rho = t * (weight_eps ** (-1.0 / (lam * n)) - 1.0)
            cutoff = max(rho, t)
            s = 0.0
            for z in range(N):
                dist = abs(x[p] - x[z])
                if dist <= cutoff:
                    s += (t / (t + dist)) ** (lam * n) * stack[k][z] ** 2
            acc += s * w * h / t
        out[p] = math.sqrt(acc)
    return out
