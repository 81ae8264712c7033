"""Square functions built from the scale-t kernel transforms.

For a kernel acting on m inputs, the scale-t transform at a grid node x
is the mn-dimensional midpoint-rule sum

    G_t(f)(x) = sum over y-lattice windows of  K_t(x - y_1, ..., x - y_m)
                * prod_i f_i(y_i) * h^{mn}

(the non-convolution form substitutes ``K_t(x, y_1, ..., y_m)``).  The
y-window is per-variable and per-axis: lattice offsets with ``|o| <= W_t``
where ``W_t = floor(t * support_radius_hint / h) + 2`` cells, with the
extension policy supplying values beyond the box.  The window is symmetric
about x, which annihilates constants exactly for odd tensor factors; the
neglected tail beyond the window is bounded via the size condition and
reported on every operator field.

Three square functions integrate ``|G_t|^2`` against ``dt/t`` on a
log-spaced grid:

* ``g``: pointwise in x,
* ``S``: over the aperture-1 cone ``|z - x| < t`` (z ranging over grid
  nodes; the cone is clipped at the box),
* ``g*_lambda``: over all grid nodes z with the weight
  ``(t / (t + |x - z|))^{lambda * n}``, z-truncated where the weight
  falls below ``ConeSpec.weight_eps``.

The scale-t fields are computed once per t-node and shared across x by S
and g*; squared contributions accumulate with compensated (Neumaier)
summation because the t-sum spans many orders of magnitude.  Tensor
kernels take an exact separable fast path (per-axis discrete
convolutions) that reproduces the direct sum by factorization.

With a truncated t-grid every field is finite, so the continuum
either-infinite-everywhere-or-finite-a.e. dichotomy (a statement about
the t -> infinity end of the scale integral) has no numerical analogue
here; only the quantitative bounds are exercised.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage, signal

from .grid import Box, GridFunction, extended_block, read_grid_function, write_grid_function
from .kernels import KernelSpec, eval_dilated, neglected_y_tail

__all__ = [
    "ConeSpec",
    "OperatorField",
    "TGrid",
    "area_integral",
    "g_function",
    "g_star_lambda",
    "gt_field",
    "gt_stack",
    "operator_fields",
    "read_operator_field",
    "split_g",
    "tensor_fast_gt",
    "window_halfwidth",
    "write_operator_field",
]

_KERNEL_BLOCK = 4_000_000  # elements per kernel-tensor chunk


@dataclass(frozen=True)
class TGrid:
    """Log-spaced scale nodes with uniform d(log t) weights, so that
    ``sum f(t_k) w_k`` approximates the integral of f against dt/t."""

    t_min: float
    t_max: float
    count: int = 64

    def __post_init__(self):
        if not (0 < self.t_min < self.t_max):
            raise ValueError("need 0 < t_min < t_max")
        if self.count < 8:
            raise ValueError("count must be >= 8")

    @property
    def nodes(self) -> np.ndarray:
        return np.exp(np.linspace(math.log(self.t_min), math.log(self.t_max), self.count))

    @property
    def weights(self) -> np.ndarray:
        dlog = (math.log(self.t_max) - math.log(self.t_min)) / (self.count - 1)
        return np.full(self.count, dlog)

    @classmethod
    def default_for(cls, gf: GridFunction, count: int = 64) -> "TGrid":
        """Defaults t_min = h (scales below see no grid detail) and
        t_max = 2L (scales above are dominated by the kernel tail)."""
        return cls(t_min=gf.h, t_max=2.0 * gf.box.half_width[0], count=count)


@dataclass(frozen=True)
class ConeSpec:
    """Aperture-1 cone and the g*-weight truncation rule."""

    aperture: float = 1.0
    weight_eps: float = 1e-8

    def __post_init__(self):
        if self.aperture != 1.0:
            raise ValueError("the cone aperture is fixed at 1")
        if not (0 < self.weight_eps < 1):
            raise ValueError("weight_eps must lie in (0, 1)")

    def z_radius(self, t: float, lam: float, n: int) -> float:
        """Radius beyond which the g* weight is below weight_eps."""
        return t * (self.weight_eps ** (-1.0 / (lam * n)) - 1.0)


@dataclass(frozen=True)
class OperatorField:
    """A nonnegative operator output sampled at the grid nodes."""

    values: GridFunction
    kind: str
    kernel_id: str
    tgrid: TGrid
    lam: Optional[float] = None
    tail_bound: float = 0.0

    def __post_init__(self):
        if np.any(self.values.samples < 0):
            raise ValueError("operator fields are nonnegative by construction")

    def sidecar_text(self) -> str:
        lines = [
            f"kind={self.kind}",
            f"kernel={self.kernel_id}",
            f"lambda={'' if self.lam is None else '%.17g' % self.lam}",
            "t_min=%.17g" % self.tgrid.t_min,
            "t_max=%.17g" % self.tgrid.t_max,
            f"t_count={self.tgrid.count}",
            "tail_bound=%.17g" % self.tail_bound,
        ]
        return "\n".join(lines) + "\n"


def write_operator_field(field: OperatorField, basepath: str) -> None:
    write_grid_function(field.values, str(basepath) + ".bin", fmt="binary")
    write_grid_function(field.values, str(basepath) + ".csv", fmt="csv")
    with open(str(basepath) + ".meta", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(field.sidecar_text())


def read_operator_field(basepath: str) -> OperatorField:
    values = read_grid_function(str(basepath) + ".bin", fmt="binary")
    meta = {}
    with open(str(basepath) + ".meta", "r", encoding="utf-8") as fh:
        for line in fh:
            if "=" in line:
                k, v = line.rstrip("\n").split("=", 1)
                meta[k] = v
    return OperatorField(
        values=values,
        kind=meta["kind"],
        kernel_id=meta["kernel"],
        tgrid=TGrid(float(meta["t_min"]), float(meta["t_max"]), int(meta["t_count"])),
        lam=float(meta["lambda"]) if meta["lambda"] else None,
        tail_bound=float(meta["tail_bound"]),
    )


# ---------------------------------------------------------------------------
# scale-t transforms
# ---------------------------------------------------------------------------


def window_halfwidth(K: KernelSpec, t: float, h: float) -> int:
    """Per-variable, per-axis window half-width in cells at scale t."""
    return int(math.floor(t * K.support_radius_hint / h)) + 2


def _check_inputs(K: KernelSpec, fs: Sequence[GridFunction], t: float = 1.0):
    if len(fs) != K.m:
        raise ValueError(f"kernel expects m={K.m} inputs, got {len(fs)}")
    first = fs[0]
    for f in fs[1:]:
        if f.box != first.box or f.points_per_axis != first.points_per_axis:
            raise ValueError("all inputs must share box and resolution")
    if first.n != K.n:
        raise ValueError(f"kernel dimension n={K.n} != grid dimension {first.n}")
    if t <= 0:
        raise ValueError("scale t must be positive")


def _strict_steps(radius: float, h: float) -> int:
    """Largest integer d with d*h < radius (0 if radius <= h)."""
    q = radius / h
    if float(q).is_integer():
        return max(int(q) - 1, 0)
    return max(int(math.floor(q)), 0)


def gt_field(K: KernelSpec, fs: Sequence[GridFunction], t: float) -> GridFunction:
    """Direct quadrature path for the scale-t transform on the whole grid."""
    _check_inputs(K, fs, t)
    n, m = K.n, K.m
    if n == 1 and K.form != "non-convolution" and m <= 2:
        out = _gt_batched_1d(K, fs, t)
    else:
        out = _gt_loop(K, fs, t)
    return GridFunction(fs[0].box, fs[0].points_per_axis, out, "zero")


def _gt_batched_1d(K: KernelSpec, fs, t: float) -> np.ndarray:
    """n=1 convolution/tensor direct path, batched over x via dgemm."""
    f0 = fs[0]
    N, h = f0.points_per_axis, f0.h
    W = window_halfwidth(K, t, h)
    Ksz = 2 * W + 1
    offs = np.arange(-W, W + 1)
    u = -offs * h  # physical kernel offsets x - y, ascending in o
    views = [sliding_window_view(extended_block(f, W), Ksz) for f in fs]
    if K.m == 1:
        kv = eval_dilated(K, t, [u[:, None]])
        return views[0] @ kv * h
    out = np.zeros(N)
    chunk = max(1, _KERNEL_BLOCK // Ksz)
    V1, V2 = views
    for s in range(0, Ksz, chunk):
        u1 = u[s : s + chunk][:, None, None]
        u2 = u[None, :, None]
        c = u1.shape[0]
        Kblk = eval_dilated(
            K,
            t,
            [np.broadcast_to(u1, (c, Ksz, 1)), np.broadcast_to(u2, (c, Ksz, 1))],
        )
        out += np.einsum("pj,ij,pi->p", V2, Kblk, V1[:, s : s + chunk], optimize=True)
    return out * h**2


def _gt_loop(K: KernelSpec, fs, t: float) -> np.ndarray:
    """Generic direct path: per-node loop, any form, n in {1, 2}, m <= 3."""
    if K.m > 3:
        raise NotImplementedError("direct path supports m <= 3; use the tensor fast path")
    f0 = fs[0]
    N, h, n = f0.points_per_axis, f0.h, f0.n
    W = window_halfwidth(K, t, h)
    Ksz = 2 * W + 1
    exts = [extended_block(f, W) for f in fs]
    offs = np.arange(-W, W + 1) * h
    if n == 1:
        upts = (-offs)[:, None]  # (Ksz, 1)
        K_off = Ksz
    else:
        oi, oj = np.meshgrid(-offs, -offs, indexing="ij")
        upts = np.stack([oi.ravel(), oj.ravel()], axis=-1)  # (Ksz^2, 2)
        K_off = Ksz * Ksz
    nonconv = K.form == "non-convolution"
    axes = [f0.axis_coords(a) for a in range(n)]

    kern_cache = None
    out = np.empty((N,) * n)
    it = np.ndindex(*(N,) * n)
    for p in it:
        if n == 1:
            wins = [e[p[0] : p[0] + Ksz] for e in exts]
            xpt = np.array([axes[0][p[0]]])
        else:
            wins = [e[p[0] : p[0] + Ksz, p[1] : p[1] + Ksz].ravel() for e in exts]
            xpt = np.array([axes[0][p[0]], axes[1][p[1]]])
        if nonconv:
            kern = _kernel_tensor(K, t, upts, K_off, x=xpt)
        else:
            if kern_cache is None:
                kern_cache = _kernel_tensor(K, t, upts, K_off, x=None)
            kern = kern_cache
        acc = kern
        for w in reversed(wins):
            acc = acc @ w
        out[p] = acc * h ** (K.m * n)
    return out


def _kernel_tensor(K: KernelSpec, t: float, upts: np.ndarray, K_off: int, x) -> np.ndarray:
    """Dilated kernel on the full offset product grid, shape (K_off,)*m.

    For non-convolution kernels the arguments are absolute positions
    ``y_i = x - u_i``.
    """
    m = K.m
    shapes = []
    ys = []
    for i in range(m):
        sh = [1] * m + [upts.shape[-1]]
        sh[i] = K_off
        ui = upts.reshape(sh)
        yi = (x - ui) if x is not None else ui
        shapes.append(sh)
        ys.append(np.broadcast_to(yi, (K_off,) * m + (upts.shape[-1],)))
    if K_off**m > 8 * _KERNEL_BLOCK:
        raise MemoryError(
            f"direct kernel tensor of size {K_off}^{m} exceeds the memory budget; "
            "reduce the grid/scale or use the tensor fast path"
        )
    return eval_dilated(K, t, ys, x=x)


def tensor_fast_gt(K: KernelSpec, fs: Sequence[GridFunction], t: float) -> GridFunction:
    """Exact separable path for tensor kernels: per-axis discrete
    convolutions per variable, then the pointwise product.  With the same
    window this reproduces :func:`gt_field` by factorizing the sum."""
    _check_inputs(K, fs, t)
    if K.form != "tensor":
        raise ValueError("tensor_fast_gt requires a tensor-form kernel")
    f0 = fs[0]
    N, h, n = f0.points_per_axis, f0.h, f0.n
    W = window_halfwidth(K, t, h)
    offs = np.arange(-W, W + 1)
    out = None
    for prof, f in zip(K.factors, fs):
        if prof.axis_fns is None:
            raise ValueError("tensor fast path requires axis-separable profiles")
        ext = extended_block(f, W)
        if n == 1:
            vec = prof.axis_fns[0](-offs * h / t) * (h / t)
            ui = np.correlate(ext, vec, "valid")
        else:
            ui = ext
            for axis in range(n):
                vec = prof.axis_fns[axis](-offs * h / t) * (h / t)
                ui = ndimage.correlate1d(ui, vec, axis=axis, mode="constant", cval=0.0)
            ui = ui[W : W + N, W : W + N]
        out = ui if out is None else out * ui
    return GridFunction(f0.box, N, out, "zero")


def gt_stack(
    K: KernelSpec, fs: Sequence[GridFunction], tg: TGrid, path: str = "auto"
) -> np.ndarray:
    """Scale-t transforms for every t-node, shape (t_count, N, ...)."""
    _check_inputs(K, fs)
    if path == "auto":
        separable = K.form == "tensor" and all(p.axis_fns is not None for p in K.factors)
        path = "fast" if separable else "direct"
    engine = tensor_fast_gt if path == "fast" else gt_field
    shape = fs[0].samples.shape
    out = np.empty((tg.count,) + shape)
    for k, t in enumerate(tg.nodes):
        out[k] = engine(K, fs, float(t)).samples
    return out


def _field_tail_bound(K: KernelSpec, fs, tg: TGrid) -> float:
    """Reported bound on the neglected y-window tail, worst t-node."""
    sups = []
    Wmax = window_halfwidth(K, tg.t_max, fs[0].h)
    for f in fs:
        sups.append(float(np.max(np.abs(extended_block(f, Wmax)))))
    worst = 0.0
    for t in tg.nodes:
        W = window_halfwidth(K, float(t), fs[0].h)
        rho = W * fs[0].h / float(t)
        worst = max(worst, neglected_y_tail(K, rho))
    return worst * float(np.prod(sups))


def _neumaier_add(total: np.ndarray, comp: np.ndarray, term: np.ndarray) -> np.ndarray:
    s = total + term
    comp += np.where(np.abs(total) >= np.abs(term), (total - s) + term, (term - s) + total)
    return s


def _finish(total: np.ndarray, comp: np.ndarray) -> np.ndarray:
    return np.sqrt(np.maximum(total + comp, 0.0))


def g_function(
    K: KernelSpec,
    fs: Sequence[GridFunction],
    tg: TGrid,
    path: str = "auto",
    gt: Optional[np.ndarray] = None,
) -> OperatorField:
    """Pointwise square function: sqrt of the dt/t-sum of |G_t(x)|^2."""
    stack = gt_stack(K, fs, tg, path) if gt is None else gt
    total = np.zeros_like(stack[0])
    comp = np.zeros_like(total)
    for k, w in enumerate(tg.weights):
        total = _neumaier_add(total, comp, w * stack[k] ** 2)
    values = GridFunction(fs[0].box, fs[0].points_per_axis, _finish(total, comp), "zero")
    return OperatorField(values, "g", K.kernel_id, tg, None, _field_tail_bound(K, fs, tg))


def _window_sum_1d(arr: np.ndarray, half: int) -> np.ndarray:
    if half == 0:
        return arr.copy()
    padded = np.pad(arr, half)
    return np.correlate(padded, np.ones(2 * half + 1), "valid")


def _weighted_sum_1d(arr: np.ndarray, weights: np.ndarray) -> np.ndarray:
    half = (weights.size - 1) // 2
    if half == 0:
        return arr * weights[0]
    padded = np.pad(arr, half)
    return np.correlate(padded, weights, "valid")


def _window_sum_2d(arr: np.ndarray, mask: np.ndarray) -> np.ndarray:
    half = (mask.shape[0] - 1) // 2
    if half == 0:
        return arr * mask[0, 0]
    padded = np.pad(arr, half)
    return signal.fftconvolve(padded, mask, mode="valid")


def area_integral(
    K: KernelSpec,
    fs: Sequence[GridFunction],
    tg: TGrid,
    path: str = "auto",
    gt: Optional[np.ndarray] = None,
) -> OperatorField:
    """Cone square function: |G_t(z)|^2 summed over grid nodes z with
    |z - x| < t, then over scales; G_t is computed once per t-node and
    shared across all x."""
    stack = gt_stack(K, fs, tg, path) if gt is None else gt
    f0 = fs[0]
    n, h = f0.n, f0.h
    total = np.zeros_like(stack[0])
    comp = np.zeros_like(total)
    for k, (t, w) in enumerate(zip(tg.nodes, tg.weights)):
        sq = stack[k] ** 2
        dmax = _strict_steps(float(t), h)
        if n == 1:
            cone = _window_sum_1d(sq, dmax)
        else:
            d = np.arange(-dmax, dmax + 1)
            di, dj = np.meshgrid(d, d, indexing="ij")
            mask = ((di * di + dj * dj) * h * h < t * t).astype(float)
            cone = _window_sum_2d(sq, mask)
        total = _neumaier_add(total, comp, cone * (w * h**n / float(t) ** n))
    values = GridFunction(f0.box, f0.points_per_axis, _finish(total, comp), "zero")
    return OperatorField(values, "S", K.kernel_id, tg, None, _field_tail_bound(K, fs, tg))


def g_star_lambda(
    K: KernelSpec,
    fs: Sequence[GridFunction],
    tg: TGrid,
    lam: float,
    cone: ConeSpec = ConeSpec(),
    path: str = "auto",
    gt: Optional[np.ndarray] = None,
) -> OperatorField:
    """Weighted square function with weight (t/(t+|x-z|))^{lambda n} over
    grid nodes z, truncated where the weight falls below weight_eps."""
    if lam <= 1:
        raise ValueError("the weighted square function requires lambda > 1")
    m, n = K.m, K.n
    d = K.declared
    if lam <= 2 * m:
        warnings.warn(
            f"lambda = {lam} is at or below 2m = {2 * m}: outside the strong-type "
            "boundedness regime for this operator",
            stacklevel=2,
        )
    elif lam <= 3 * m + (2 * d.delta + 2 * d.gamma) / n:
        warnings.warn(
            f"lambda = {lam} is at or below 3m + (2*delta+2*gamma)/n = "
            f"{3 * m + (2 * d.delta + 2 * d.gamma) / n:.3g}: outside the "
            "BMO-to-BLO regime for this kernel's constants",
            stacklevel=2,
        )
    stack = gt_stack(K, fs, tg, path) if gt is None else gt
    f0 = fs[0]
    h = f0.h
    N = f0.points_per_axis
    total = np.zeros_like(stack[0])
    comp = np.zeros_like(total)
    for k, (t, w) in enumerate(zip(tg.nodes, tg.weights)):
        t = float(t)
        sq = stack[k] ** 2
        rho = cone.z_radius(t, lam, n)
        # never truncate inside the cone itself (keeps S <= 2^{lam n/2} g*)
        cutoff = max(rho, t)
        dz = min(max(int(math.floor(rho / h)), _strict_steps(t, h)), N - 1)
        dd = np.arange(-dz, dz + 1)
        if n == 1:
            wv = (t / (t + np.abs(dd) * h)) ** (lam * n)
            wv[np.abs(dd) * h > cutoff] = 0.0
            acc = _weighted_sum_1d(sq, wv)
        else:
            di, dj = np.meshgrid(dd, dd, indexing="ij")
            dist = np.sqrt((di * di + dj * dj).astype(float)) * h
            wv = (t / (t + dist)) ** (lam * n)
            wv[dist > cutoff] = 0.0
            acc = _window_sum_2d(sq, wv)
        total = _neumaier_add(total, comp, acc * (w * h**n / t**n))
    values = GridFunction(f0.box, N, _finish(total, comp), "zero")
    return OperatorField(
        values, "gstar", K.kernel_id, tg, lam, _field_tail_bound(K, fs, tg)
    )


def split_g(
    K: KernelSpec,
    fs: Sequence[GridFunction],
    tg: TGrid,
    r: float,
    path: str = "auto",
    gt: Optional[np.ndarray] = None,
) -> tuple[OperatorField, OperatorField]:
    """Split the scale sum at r: nodes with t <= r feed the local part g0,
    the rest feed g_inf; every node lands in exactly one part, so
    g^2 = g0^2 + g_inf^2 holds at every x up to rounding."""
    if not (tg.t_min <= r <= tg.t_max):
        raise ValueError(f"split radius r={r} outside the t-grid range "
                         f"[{tg.t_min}, {tg.t_max}]")
    stack = gt_stack(K, fs, tg, path) if gt is None else gt
    f0 = fs[0]
    parts = []
    for low in (True, False):
        total = np.zeros_like(stack[0])
        comp = np.zeros_like(total)
        for k, (t, w) in enumerate(zip(tg.nodes, tg.weights)):
            if bool(t <= r) == low:
                total = _neumaier_add(total, comp, w * stack[k] ** 2)
        values = GridFunction(f0.box, f0.points_per_axis, _finish(total, comp), "zero")
        parts.append(
            OperatorField(
                values,
                "g0" if low else "ginf",
                K.kernel_id,
                tg,
                None,
                _field_tail_bound(K, fs, tg),
            )
        )
    return parts[0], parts[1]


def operator_fields(
    K: KernelSpec,
    fs: Sequence[GridFunction],
    tg: TGrid,
    kinds: Sequence[str],
    lam: Optional[float] = None,
    cone: ConeSpec = ConeSpec(),
    path: str = "auto",
) -> dict[str, OperatorField]:
    """Compute several operator kinds from one shared scale-t stack."""
    stack = gt_stack(K, fs, tg, path)
    out = {}
    for kind in kinds:
        if kind == "g":
            out[kind] = g_function(K, fs, tg, gt=stack)
        elif kind == "S":
            out[kind] = area_integral(K, fs, tg, gt=stack)
        elif kind == "gstar":
            if lam is None:
                raise ValueError("gstar requires lambda")
            out[kind] = g_star_lambda(K, fs, tg, lam, cone=cone, gt=stack)
        else:
            raise ValueError(f"unknown operator kind {kind!r}")
    return out
