"""Multilinear square-function kernels: builtins, dilation, certification.

A kernel acts on m points of R^n.  Three forms are supported:

``convolution``
    ``K(y_1, ..., y_m)`` evaluated at difference arguments,
``non-convolution``
    ``K(x, y_1, ..., y_m)`` with additional regularity in x,
``tensor``
    ``K(y) = prod_i psi_i(y_i)`` with mean-zero one-variable profiles
    (pre-validated at construction); this is the form with a fast
    separable evaluation path in :mod:`mlplab.operators`.

Each builtin ships with declared constants ``(C_size, delta, C_smooth,
gamma)`` obtained from documented closed-form envelope scans (products of
one-dimensional maxima with safety margins), not fitted to the validator;
:func:`validate_kernel` certifies them numerically.  A separate ``fit``
mode reports the smallest constants that would pass, for exploratory
kernels.

The three certified conditions are: vanishing mean in each variable,
polynomial size decay of order ``m*n + delta``, and Hoelder smoothness of
order ``gamma`` under the displacement constraint ``2|dy| <= max_j |y_j|``
(for non-convolution kernels the y-constraint is ``2|dy_i| <= |x - y_i|``
and an x-smoothness condition with ``2|dx| <= max_j |x - y_j|`` is checked
as well).  Probes violating a constraint are discarded and counted.

The printed size condition for non-convolution kernels admits two decay
normalizations (centered at the origin or at x); both are implemented
behind ``size_centering`` and the default for non-convolution kernels is
centered at x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "DeclaredConstants",
    "KernelSpec",
    "KernelValidationReport",
    "ProbePlan",
    "Profile",
    "builtin_kernel",
    "eval_dilated",
    "neglected_y_tail",
    "validate_kernel",
]

SQPI = math.sqrt(math.pi)
TOL_VANISHING = 1e-6  # absolute, per unit C_size
TOL_RATIO = 1e-3  # ratio checks pass at <= 1 + TOL_RATIO


@dataclass(frozen=True)
class DeclaredConstants:
    c_size: float
    delta: float
    c_smooth: float
    gamma: float

    def __post_init__(self):
        if self.delta <= 0 or self.gamma <= 0:
            raise ValueError("delta and gamma must be positive")


@dataclass(frozen=True)
class Profile:
    """One-variable factor of a tensor kernel: psi_i : R^n -> R.

    ``axis_fns`` holds per-axis 1D factors whose product equals ``fn``
    when the profile is axis-separable (always present for n = 1).
    """

    name: str
    n: int
    fn: Callable[[np.ndarray], np.ndarray]
    axis_fns: Optional[tuple[Callable, ...]]
    support_radius_hint: float

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        return self.fn(pts)


def _as_points(arr, n: int) -> np.ndarray:
    """Promote to shape (..., n); n = 1 accepts plain scalars/arrays."""
    a = np.asarray(arr, dtype=float)
    if n == 1 and (a.ndim == 0 or a.shape[-1] != 1):
        a = a.reshape(a.shape + (1,))
    if a.shape[-1] != n:
        raise ValueError(f"points must have trailing dimension {n}")
    return a


@dataclass(frozen=True)
class KernelSpec:
    name: str
    m: int
    n: int
    form: str  # "convolution" | "non-convolution" | "tensor"
    declared: DeclaredConstants
    support_radius_hint: float
    eval_conv: Optional[Callable] = None
    eval_nonconv: Optional[Callable] = None
    factors: Optional[tuple[Profile, ...]] = None
    size_centering: str = "origin"  # "origin" | "x"
    tail_eps: float = 1e-16
    grad_constant: Optional[float] = None  # gradient-bound constant, m=1 builtins

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.form not in ("convolution", "non-convolution", "tensor"):
            raise ValueError(f"unknown kernel form {self.form!r}")
        if self.form == "tensor":
            if self.factors is None or len(self.factors) != self.m:
                raise ValueError("tensor form requires one profile per variable")
            _prevalidate_factors(self.factors)
        if self.form == "non-convolution" and self.eval_nonconv is None:
            raise ValueError("non-convolution form requires eval_nonconv")
        if self.form == "convolution" and self.eval_conv is None:
            raise ValueError("convolution form requires eval_conv")
        if self.size_centering not in ("origin", "x"):
            raise ValueError("size_centering must be 'origin' or 'x'")

    @property
    def kernel_id(self) -> str:
        return f"{self.name}(m={self.m},n={self.n})"

    def evaluate(self, ys: Sequence, x=None) -> np.ndarray:
        """Evaluate the undilated kernel at m points (each (..., n))."""
        pts = [_as_points(y, self.n) for y in ys]
        if len(pts) != self.m:
            raise ValueError(f"expected {self.m} point arguments, got {len(pts)}")
        if self.form == "tensor":
            out = self.factors[0](pts[0])
            for prof, p in zip(self.factors[1:], pts[1:]):
                out = out * prof(p)
            return out
        if self.form == "convolution":
            return self.eval_conv(pts)
        if x is None:
            raise ValueError("non-convolution kernel requires the x argument")
        return self.eval_nonconv(_as_points(x, self.n), pts)


def eval_dilated(K: KernelSpec, t: float, ys: Sequence, x=None) -> np.ndarray:
    """Scale-t renormalization: ``t^{-mn} K(y/t)`` (and ``x/t`` for the
    non-convolution form)."""
    if t <= 0:
        raise ValueError("dilation scale t must be positive")
    pts = [_as_points(y, K.n) / t for y in ys]
    xx = None if x is None else _as_points(x, K.n) / t
    return t ** (-K.m * K.n) * K.evaluate(pts, x=xx)


def _prevalidate_factors(factors: tuple[Profile, ...]) -> None:
    """Each tensor factor must integrate to 0 within 1e-10 over its
    declared support (quadrature over [-hint-4, hint+4])."""
    for prof in factors:
        E = prof.support_radius_hint + 4.0
        if prof.axis_fns is not None:
            # product of axis integrals; zero iff some axis factor is mean-zero
            vals = []
            q = np.linspace(-E, E, 4097)[:-1] + E / 4096.0
            dq = q[1] - q[0]
            for fn in prof.axis_fns:
                vals.append(float(np.sum(fn(q)) * dq))
            total = float(np.prod(vals))
        else:
            if prof.n == 1:
                q = (np.linspace(-E, E, 8193)[:-1] + E / 8192.0)[:, None]
                dq = 2 * E / 8192
                total = float(np.sum(prof(q)) * dq)
            else:
                Q = 1024
                ax = np.linspace(-E, E, Q + 1)[:-1] + E / Q
                dq = ax[1] - ax[0]
                X, Y = np.meshgrid(ax, ax, indexing="ij")
                pts = np.stack([X, Y], axis=-1)
                total = float(np.sum(prof(pts)) * dq * dq)
        if abs(total) > 1e-10:
            raise ValueError(
                f"tensor factor {prof.name!r} is not mean-zero: integral {total:.3e}"
            )


# ---------------------------------------------------------------------------
# builtin kernels
# ---------------------------------------------------------------------------

_R_SCAN = np.linspace(0.0, 60.0, 600_001)


@lru_cache(maxsize=None)
def _env_max(kind: str, power: float) -> float:
    """max over r >= 0 of env(r) * (1 + r)^power for a named radial envelope."""
    r = _R_SCAN
    if kind == "odd-gauss-1":  # |u e^{-u^2}|
        env = r * np.exp(-(r**2))
    elif kind == "odd-gauss-1-grad":  # |(1-2u^2) e^{-u^2}| <= (1+2r^2) e^{-r^2}
        env = (1 + 2 * r**2) * np.exp(-(r**2))
    elif kind == "odd-gauss-2":  # |u1 u2| e^{-|u|^2} <= (r^2/2) e^{-r^2}
        env = 0.5 * r**2 * np.exp(-(r**2))
    elif kind == "odd-gauss-2-grad":  # |grad| <= sqrt(2) r (1+2r^2) e^{-r^2}
        env = math.sqrt(2) * r * (1 + 2 * r**2) * np.exp(-(r**2))
    elif kind == "plain-gauss":
        env = np.exp(-(r**2))
    elif kind == "plain-gauss-grad":
        env = 2 * r * np.exp(-(r**2))
    elif kind.startswith("mexican-"):
        n = int(kind.split("-")[1])
        cn = (4 * math.pi) ** (-n / 2)
        if kind.endswith("-grad"):
            env = cn * (r / 2) * np.abs(1 + n / 2 - r**2 / 4) * np.exp(-(r**2) / 4)
        else:
            env = cn * np.abs(n / 2 - r**2 / 4) * np.exp(-(r**2) / 4)
    else:  # pragma: no cover
        raise ValueError(kind)
    return float(np.max(env * (1 + r) ** power))


def _size_constant(env_kind: str, m: int, n: int, delta: float, wmax: float = 1.0) -> float:
    # (1 + sum r_i)^p <= prod (1 + r_i)^p, so the joint max is bounded by a
    # product of 1D maxima; 1.1 covers scan coarseness.
    p = m * n + delta
    return 1.1 * wmax * _env_max(env_kind, p) ** m


def _smooth_constant(
    env_kind: str,
    grad_kind: str,
    m: int,
    n: int,
    delta: float,
    gamma: float,
    wmax: float = 1.0,
    wgrad: float = 0.0,
) -> float:
    # mean-value bound along the constrained segment: the shifted denominator
    # loses at most a factor 2^{mn+delta+gamma}; valid for displacements <= 1.
    p = m * n + delta + gamma
    G = _env_max(grad_kind, p)
    M = _env_max(env_kind, p)
    body = wmax * m * G * M ** (m - 1) + wgrad * M**m
    return 1.25 * 2**p * body


def _odd_gauss_profile(n: int) -> Profile:
    def axis_fn(u):
        return u * np.exp(-(u**2))

    def fn(pts):
        pts = np.asarray(pts)
        out = axis_fn(pts[..., 0])
        for a in range(1, n):
            out = out * axis_fn(pts[..., a])
        return out

    return Profile(
        name="odd-gaussian",
        n=n,
        fn=fn,
        axis_fns=(axis_fn,) * n,
        support_radius_hint=7.0,
    )


def _mexican_profile(n: int) -> Profile:
    cn = (4 * math.pi) ** (-n / 2)

    def fn(pts):
        pts = np.asarray(pts)
        r2 = np.sum(pts * pts, axis=-1)
        return cn * (n / 2 - r2 / 4) * np.exp(-r2 / 4)

    axis_fns = None
    if n == 1:
        axis_fns = (lambda u: cn * (0.5 - u**2 / 4) * np.exp(-(u**2) / 4),)
    return Profile(
        name="mexican-hat",
        n=n,
        fn=fn,
        axis_fns=axis_fns,
        support_radius_hint=14.0,
    )


def builtin_kernel(name: str, m: Optional[int] = None, n: int = 1, **params) -> KernelSpec:
    """Construct a documented builtin kernel.

    Names: ``mexican-hat`` (m=1; second Gaussian derivative, normalized so
    the 1D transform is ``s^2 e^{-s^2}``), ``odd-gaussian`` (m=1),
    ``tensor-odd-gaussian`` (any m up to 4), ``gaussian-no-vanish``
    (deliberately invalid vanishing), ``shifted-nonconv``
    (``w(x) * prod psi(y_i - x)`` with smooth bounded w and mean-zero psi).
    """
    if n not in (1, 2):
        raise ValueError("builtin kernels support n in {1, 2}")
    if params:
        raise ValueError(f"unknown kernel params {sorted(params)}")

    if name == "mexican-hat":
        m = 1 if m is None else m
        if m != 1:
            raise ValueError("mexican-hat is a linear (m=1) kernel")
        prof = _mexican_profile(n)
        c_size = 1.05 * _env_max(f"mexican-{n}", n + 1.0)
        c_smooth = 1.25 * 2 ** (n + 2.0) * _env_max(f"mexican-{n}-grad", n + 2.0)
        grad_c = 1.05 * _env_max(f"mexican-{n}-grad", n + 2.0)
        return KernelSpec(
            name=name,
            m=1,
            n=n,
            form="tensor",
            declared=DeclaredConstants(c_size, 1.0, c_smooth, 1.0),
            support_radius_hint=prof.support_radius_hint,
            factors=(prof,),
            grad_constant=grad_c,
        )

    if name == "odd-gaussian":
        m = 1 if m is None else m
        if m != 1:
            raise ValueError("odd-gaussian is a linear (m=1) kernel; "
                             "use tensor-odd-gaussian for m >= 2")
        name_env = f"odd-gauss-{n}"
        prof = _odd_gauss_profile(n)
        delta, gamma = 0.5, 0.4
        return KernelSpec(
            name=name,
            m=1,
            n=n,
            form="tensor",
            declared=DeclaredConstants(
                _size_constant(name_env, 1, n, delta),
                delta,
                _smooth_constant(name_env, name_env + "-grad", 1, n, delta, gamma),
                gamma,
            ),
            support_radius_hint=prof.support_radius_hint,
            factors=(prof,),
        )

    if name == "tensor-odd-gaussian":
        m = 2 if m is None else m
        if not 1 <= m <= 4:
            raise ValueError("tensor-odd-gaussian supports m in 1..4")
        name_env = f"odd-gauss-{n}"
        delta, gamma = 0.5, 0.4
        prof = _odd_gauss_profile(n)
        return KernelSpec(
            name=name,
            m=m,
            n=n,
            form="tensor",
            declared=DeclaredConstants(
                _size_constant(name_env, m, n, delta),
                delta,
                _smooth_constant(name_env, name_env + "-grad", m, n, delta, gamma),
                gamma,
            ),
            support_radius_hint=prof.support_radius_hint,
            factors=(prof,) * m,
        )

    if name == "gaussian-no-vanish":
        m = 1 if m is None else m
        if m != 1:
            raise ValueError("gaussian-no-vanish is m=1")
        delta, gamma = 0.5, 0.4

        def eval_conv(pts):
            r2 = np.sum(pts[0] * pts[0], axis=-1)
            return np.exp(-r2)

        return KernelSpec(
            name=name,
            m=1,
            n=n,
            form="convolution",
            declared=DeclaredConstants(
                _size_constant("plain-gauss", 1, n, delta),
                delta,
                _smooth_constant("plain-gauss", "plain-gauss-grad", 1, n, delta, gamma),
                gamma,
            ),
            support_radius_hint=7.0,
            eval_conv=eval_conv,
        )

    if name == "shifted-nonconv":
        m = 2 if m is None else m
        if not 1 <= m <= 3:
            raise ValueError("shifted-nonconv supports m in 1..3")
        delta, gamma = 0.5, 0.4
        prof = _odd_gauss_profile(n)
        name_env = f"odd-gauss-{n}"
        wmax, wgrad = 1.5, 0.5 * math.sqrt(n)

        def weight(x):
            return 1.0 + 0.5 * np.sin(np.sum(x, axis=-1))

        def eval_nonconv(x, pts):
            out = weight(x)
            for p in pts:
                out = out * prof(p - x)
            return out

        c_size = _size_constant(name_env, m, n, delta, wmax=wmax)
        c_smooth = max(
            _smooth_constant(name_env, name_env + "-grad", m, n, delta, gamma, wmax=wmax),
            _smooth_constant(
                name_env, name_env + "-grad", m, n, delta, gamma, wmax=wmax, wgrad=wgrad
            ),
        )
        return KernelSpec(
            name=name,
            m=m,
            n=n,
            form="non-convolution",
            declared=DeclaredConstants(c_size, delta, c_smooth, gamma),
            support_radius_hint=prof.support_radius_hint,
            eval_nonconv=eval_nonconv,
            size_centering="x",
        )

    raise ValueError(f"unknown builtin kernel {name!r}")


# ---------------------------------------------------------------------------
# analytic tail bounds from the size condition
# ---------------------------------------------------------------------------


def _sphere_area(n: int) -> float:
    return {1: 2.0, 2: 2 * math.pi}[n]


def _outer_tail_integral(n: int, s: float, rho: float) -> float:
    """Upper bound for the integral of (1+|v|)^{-s} over |v| > rho in R^n."""
    if s <= n:
        return math.inf
    return _sphere_area(n) * (1 + rho) ** (n - s) / (s - n)


def neglected_y_tail(K: KernelSpec, rho: float) -> float:
    """Size-condition bound on the kernel mass where some ``|v_i| > rho``
    (in dilation-invariant units v = y/t); multiplied by the sup of the
    inputs this bounds the truncation residue of one field evaluation."""
    s = K.m * K.n + K.declared.delta
    factor = 1.0
    for _ in range(K.m - 1):
        if s - K.n <= 0:
            return math.inf
        factor *= _sphere_area(K.n) / (s - K.n)
        s -= K.n
    return K.declared.c_size * K.m * factor * _outer_tail_integral(K.n, s, rho)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProbePlan:
    """Deterministic probe plan for :func:`validate_kernel`.

    ``extent`` is the per-variable quadrature half-width (must exceed the
    kernel's support radius hint by at least 1; default hint + 4);
    ``displacements`` are the smoothness displacement magnitudes, playing
    the role of {h, 2h, 4h} for a reference grid.
    """

    extent: Optional[float] = None
    quad_points: int = 4096
    slice_count: int = 8
    probe_count: int = 256
    displacements: tuple[float, ...] = (0.0625, 0.125, 0.25)
    seed: int = 0


@dataclass
class KernelValidationReport:
    """Defects and ratios for the three kernel conditions.

    ``pass`` semantics: vanishing passes iff the max per-variable defect
    is at most ``tol_vanishing * C_size``; size/smoothness pass iff the
    max ratio is at most ``1 + tol_ratio``.  The analytic truncation-tail
    bound for the vanishing quadrature is reported alongside (it is a
    polynomial size-condition bound, typically far weaker than the actual
    decay of a builtin).
    """

    kernel_id: str
    vanishing_defects: tuple[float, ...]
    vanishing_tail_bound: float
    size_ratio: float
    smoothness_ratio: float
    x_smoothness_ratio: Optional[float]
    discarded_probes: int
    probe_counts: dict
    tol_vanishing: float
    tol_ratio: float
    passes: dict
    fitted: Optional[dict] = None

    @property
    def passed(self) -> bool:
        return all(self.passes.values())

    def csv_text(self) -> str:
        lines = ["condition,value,probe_count,discard_count,pass"]
        lines.append(
            "vanishing,%.17g,%d,0,%s"
            % (
                max(self.vanishing_defects),
                self.probe_counts["vanishing"],
                self.passes["vanishing"],
            )
        )
        lines.append(
            "size,%.17g,%d,0,%s"
            % (self.size_ratio, self.probe_counts["size"], self.passes["size"])
        )
        lines.append(
            "smoothness,%.17g,%d,%d,%s"
            % (
                self.smoothness_ratio,
                self.probe_counts["smoothness"],
                self.discarded_probes,
                self.passes["smoothness"],
            )
        )
        if self.x_smoothness_ratio is not None:
            lines.append(
                "x-smoothness,%.17g,%d,%d,%s"
                % (
                    self.x_smoothness_ratio,
                    self.probe_counts["x-smoothness"],
                    self.discarded_probes,
                    self.passes["x-smoothness"],
                )
            )
        return "\n".join(lines) + "\n"


def _size_denominator(K: KernelSpec, ys: list[np.ndarray], x) -> np.ndarray:
    """(1 + sum of variable magnitudes), centered per the kernel switch."""
    if K.size_centering == "x" and x is not None:
        total = sum(np.linalg.norm(y - x, axis=-1) for y in ys)
    else:
        total = sum(np.linalg.norm(y, axis=-1) for y in ys)
    return 1.0 + total


def validate_kernel(K: KernelSpec, plan: Optional[ProbePlan] = None, fit: bool = False) -> KernelValidationReport:
    """Certify the vanishing/size/smoothness conditions on a probe plan.

    Deterministic given the plan seed.  Raises if the plan extent does not
    cover the kernel's support radius hint.
    """
    plan = plan or ProbePlan()
    E = plan.extent if plan.extent is not None else K.support_radius_hint + 4.0
    if E < K.support_radius_hint + 1.0:
        raise ValueError(
            f"probe extent {E} is below support_radius_hint + 1 = "
            f"{K.support_radius_hint + 1}; vanishing check would be meaningless"
        )
    rng = np.random.default_rng(plan.seed)
    m, n = K.m, K.n
    nonconv = K.form == "non-convolution"
    C = K.declared

    # --- vanishing: per-variable slice quadrature --------------------------
    Q = plan.quad_points
    ax = np.linspace(-E, E, Q + 1)[:-1] + E / Q  # symmetric midpoint nodes
    dq = 2 * E / Q
    if n == 1:
        quad_pts = ax[:, None]
        quad_w = dq
    else:
        Q2 = min(Q, 1024)
        ax2 = np.linspace(-E, E, Q2 + 1)[:-1] + E / Q2
        X, Y = np.meshgrid(ax2, ax2, indexing="ij")
        quad_pts = np.stack([X.ravel(), Y.ravel()], axis=-1)
        quad_w = (2 * E / Q2) ** 2

    defects = []
    for i in range(m):
        worst = 0.0
        for slice_idx in range(plan.slice_count):
            if slice_idx == 0:
                others = [np.zeros(n) for _ in range(m - 1)]
                x0 = np.zeros(n) if nonconv else None
            else:
                others = [rng.uniform(-E / 2, E / 2, size=n) for _ in range(m - 1)]
                x0 = rng.uniform(-E / 2, E / 2, size=n) if nonconv else None
            ys = []
            k = 0
            for v in range(m):
                if v == i:
                    # center the quadrature window at x for x-centred decay
                    shift = x0 if (nonconv and K.size_centering == "x") else 0.0
                    ys.append(quad_pts + shift)
                else:
                    ys.append(np.broadcast_to(others[k], quad_pts.shape))
                    k += 1
            vals = K.evaluate(ys, x=x0)
            worst = max(worst, abs(float(vals.sum() * quad_w)))
        defects.append(worst)
    tail = neglected_y_tail(K, E)

    # --- probe points for size and smoothness ------------------------------
    P = plan.probe_count
    pts = rng.uniform(-E, E, size=(P, m, n))
    diag = np.linspace(0, E, 33)[:, None].repeat(m * n, axis=1).reshape(-1, m, n)
    pts = np.concatenate([pts, diag], axis=0)
    xs = rng.uniform(-E / 2, E / 2, size=(pts.shape[0], n)) if nonconv else None

    ys = [pts[:, i, :] for i in range(m)]
    vals = K.evaluate(ys, x=xs)
    den = _size_denominator(K, ys, xs)
    size_num = np.abs(vals) * den ** (m * n + C.delta)
    size_ratio = float(np.max(size_num)) / C.c_size
    fitted_size = float(np.max(size_num))

    # --- smoothness probes --------------------------------------------------
    discard = 0
    smooth_ratio = 0.0
    fitted_smooth = 0.0
    checked = 0
    for d in plan.displacements:
        for i in range(m):
            axis = checked % n
            shift = np.zeros(n)
            shift[axis] = d
            if nonconv:
                limit = np.linalg.norm(ys[i] - xs, axis=-1)  # 2|dy_i| <= |x - y_i|
            else:
                limit = np.max(
                    np.stack([np.linalg.norm(y, axis=-1) for y in ys]), axis=0
                )
            ok = 2 * d <= limit
            discard += int(np.count_nonzero(~ok))
            if not np.any(ok):
                continue
            ys2 = [y.copy() for y in ys]
            ys2[i] = ys2[i] + shift
            v2 = K.evaluate([y[ok] for y in ys2], x=None if xs is None else xs[ok])
            v1 = vals[ok]
            dd = _size_denominator(K, [y[ok] for y in ys], None if xs is None else xs[ok])
            num = np.abs(v2 - v1) * dd ** (m * n + C.delta + C.gamma) / d**C.gamma
            smooth_ratio = max(smooth_ratio, float(np.max(num)) / C.c_smooth)
            fitted_smooth = max(fitted_smooth, float(np.max(num)))
            checked += 1

    x_ratio = None
    if nonconv:
        x_ratio = 0.0
        for d in plan.displacements:
            axis = 0
            shift = np.zeros(n)
            shift[axis] = d
            limit = np.max(
                np.stack([np.linalg.norm(y - xs, axis=-1) for y in ys]), axis=0
            )
            ok = 2 * d <= limit
            discard += int(np.count_nonzero(~ok))
            if not np.any(ok):
                continue
            v2 = K.evaluate([y[ok] for y in ys], x=xs[ok] + shift)
            v1 = vals[ok]
            dd = _size_denominator(K, [y[ok] for y in ys], xs[ok])
            num = np.abs(v2 - v1) * dd ** (m * n + C.delta + C.gamma) / d**C.gamma
            x_ratio = max(x_ratio, float(np.max(num)) / C.c_smooth)
            fitted_smooth = max(fitted_smooth, float(np.max(num)))

    passes = {
        "vanishing": max(defects) <= TOL_VANISHING * C.c_size,
        "size": size_ratio <= 1 + TOL_RATIO,
        "smoothness": smooth_ratio <= 1 + TOL_RATIO,
    }
    if x_ratio is not None:
        passes["x-smoothness"] = x_ratio <= 1 + TOL_RATIO

    fitted = None
    if fit:
        fitted = {
            "c_size": fitted_size,
            "c_smooth": fitted_smooth,
            "vanishing_defect": max(defects),
        }

    return KernelValidationReport(
        kernel_id=K.kernel_id,
        vanishing_defects=tuple(defects),
        vanishing_tail_bound=tail,
        size_ratio=size_ratio,
        smoothness_ratio=smooth_ratio,
        x_smoothness_ratio=x_ratio,
        discarded_probes=discard,
        probe_counts={
            "vanishing": m * plan.slice_count,
            "size": pts.shape[0],
            "smoothness": pts.shape[0] * len(plan.displacements) * m,
            "x-smoothness": pts.shape[0] * len(plan.displacements) if nonconv else 0,
        },
        tol_vanishing=TOL_VANISHING,
        tol_ratio=TOL_RATIO,
        passes=passes,
        fitted=fitted,
    )
