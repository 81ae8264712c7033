"""Discrete estimators of BMO, BLO, Lebesgue and weak-Lebesgue quantities.

All suprema over balls are taken over a finite family (dyadic radii
``h * 2^j`` crossed with node centers, optionally strided), and every
reported supremum returns the maximizing ball as a witness so the value
can be re-checked independently.  The continuum supremum over all balls
of R^n is not computable for box-truncated functions; we report
family-restricted values plus refinement trends and make no convergence
claims.

Conventions that keep the discrete inequalities exact:

* discrete essential infimum over a ball = minimum of the member samples
  (exact for the piecewise-constant interpretation of the grid),
* open balls realized by strict inequality on node coordinates; ties are
  impossible for dyadic radii because nodes sit at half-spacing offsets,
* the weak-L^p supremum over thresholds is attained at sample magnitudes
  because the distribution function is a step function of the threshold.

A brute-force path (plain loop over the same family) is retained behind
a flag as the oracle for desk sizes (N <= 512).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .grid import GridFunction

__all__ = [
    "Ball",
    "BallFamily",
    "LebesgueNorms",
    "NormReport",
    "blo_constant",
    "bmo_seminorm",
    "dyadic_family",
    "lebesgue_norms",
    "make_ball",
    "mean_over",
    "norm_report",
    "oscillation_growth",
]

_CHUNK_ELEMENTS = 4_000_000  # bound on rows*window elements per vector block


@dataclass(frozen=True)
class Ball:
    """Discrete open ball: grid nodes strictly within ``radius`` of a node."""

    center: tuple[float, ...]
    center_index: tuple[int, ...]
    radius: float
    member_indices: np.ndarray  # flat indices into samples.ravel()

    def __post_init__(self):
        members = np.asarray(self.member_indices)
        if members.size == 0:
            raise ValueError("ball has no member nodes")
        members.setflags(write=False)
        object.__setattr__(self, "member_indices", members)


def _strict_halfwidth(radius: float, h: float) -> int:
    """Largest integer k with k*h < radius."""
    q = radius / h
    if float(q).is_integer():
        return int(q) - 1
    return int(math.floor(q))


def make_ball(gf: GridFunction, center_index, radius: float, wrap: bool = False) -> Ball:
    """Ball centered at a grid node; must lie inside the box unless wrapped."""
    N = gf.points_per_axis
    h = gf.h
    cidx = tuple(int(v) for v in np.atleast_1d(center_index))
    if len(cidx) != gf.n:
        raise ValueError("center index dimension mismatch")
    q = radius / h
    if not wrap:
        for c in cidx:
            if (c + 0.5) + 1e-12 < q or (N - c - 0.5) + 1e-12 < q:
                raise ValueError("ball escapes the box")
    half = _strict_halfwidth(radius, h)
    if gf.n == 1:
        c = cidx[0]
        offs = np.arange(-half, half + 1)
        idx = (c + offs) % N if wrap else (c + offs)
        members = idx.astype(np.intp)
    else:
        oi, oj = np.meshgrid(np.arange(-half, half + 1), np.arange(-half, half + 1), indexing="ij")
        mask = (oi * oi + oj * oj) < q * q
        di, dj = oi[mask], oj[mask]
        ci, cj = cidx
        ii = (ci + di) % N if wrap else (ci + di)
        jj = (cj + dj) % N if wrap else (cj + dj)
        members = (ii * N + jj).astype(np.intp)
    return Ball(
        center=gf.node_coords(cidx),
        center_index=cidx,
        radius=float(radius),
        member_indices=members,
    )


@dataclass(frozen=True)
class BallFamily:
    """Dyadic-radii ball family over node centers.

    ``policy`` is descriptive ("dyadic-radii x all-node-centers",
    "dyadic-radii x strided-centers(s)", or the wrapped variant used for
    periodic functions, where membership wraps around the torus so that
    whole-cell translations act by symmetry).
    """

    points_per_axis: int
    n: int
    h: float
    radii: tuple[float, ...]
    stride: int = 1
    wrap: bool = False

    @property
    def policy(self) -> str:
        base = (
            "dyadic-radii x all-node-centers"
            if self.stride == 1
            else f"dyadic-radii x strided-centers({self.stride})"
        )
        return base + (" [wrapped]" if self.wrap else "")

    def radius_levels(self) -> list[tuple[int, float]]:
        return list(enumerate(self.radii))

    def centers_for(self, level: int) -> np.ndarray:
        """1D center indices valid for radius level j (per axis)."""
        R = 2**level
        N = self.points_per_axis
        if self.wrap:
            if 2 * R - 1 > N:
                return np.empty(0, dtype=int)
            return np.arange(0, N, self.stride)
        lo, hi = R, N - 1 - R
        if hi < lo:
            return np.empty(0, dtype=int)
        return np.arange(lo, hi + 1, self.stride)

    def balls(self, gf: GridFunction) -> Iterator[Ball]:
        """Lazily enumerate the family in canonical order (radii ascending,
        centers ascending row-major); this order defines tie-breaking."""
        for j, r in self.radius_levels():
            cs = self.centers_for(j)
            if cs.size == 0:
                continue
            if self.n == 1:
                for c in cs:
                    yield make_ball(gf, c, r, wrap=self.wrap)
            else:
                for ci in cs:
                    for cj in cs:
                        yield make_ball(gf, (ci, cj), r, wrap=self.wrap)

    def __len__(self) -> int:
        total = 0
        for j, _ in self.radius_levels():
            k = self.centers_for(j).size
            total += k**self.n
        return total


def dyadic_family(gf: GridFunction, stride: int = 1, wrap: bool = False) -> BallFamily:
    """Radii ``h * 2^j`` for j = 0..floor(log2(L/h)); levels whose balls
    cannot fit inside the box simply contribute no balls."""
    L = gf.box.half_width[0]
    j_max = int(math.floor(math.log2(L / gf.h)))
    radii = tuple(gf.h * 2**j for j in range(j_max + 1))
    return BallFamily(
        points_per_axis=gf.points_per_axis,
        n=gf.n,
        h=gf.h,
        radii=radii,
        stride=stride,
        wrap=wrap,
    )


def mean_over(gf: GridFunction, ball: Ball) -> float:
    """Mean value of the samples over the ball (uniform weights)."""
    return float(gf.samples.ravel()[ball.member_indices].mean())


def _scan_levels(gf: GridFunction, fam: BallFamily, stat: str):
    """Shared vectorized sweep over the family; stat in {'bmo', 'blo'}.

    Ties are broken toward the smallest ball index (canonical order), so
    the witness matches the brute-force loop exactly.
    """
    f = gf.samples
    N = fam.points_per_axis
    best_val = 0.0
    best: Optional[tuple[int, tuple[int, ...]]] = None

    for j, _r in fam.radius_levels():
        centers = fam.centers_for(j)
        if centers.size == 0:
            continue
        R = 2**j
        K = 2 * R - 1
        if fam.n == 1:
            if fam.wrap:
                fx = np.concatenate([f[-(R - 1):], f, f[: R - 1]]) if R > 1 else f
                rows_all = sliding_window_view(fx, K)
                row_of = centers
            else:
                rows_all = sliding_window_view(f, K)
                row_of = centers - (R - 1)
            chunk = max(1, _CHUNK_ELEMENTS // K)
            for s in range(0, centers.size, chunk):
                sel = row_of[s : s + chunk]
                rows = rows_all[sel]
                means = rows.mean(axis=1)
                if stat == "bmo":
                    vals = np.abs(rows - means[:, None]).mean(axis=1)
                else:
                    vals = means - rows.min(axis=1)
                k = int(np.argmax(vals))
                v = float(vals[k])
                if v > best_val or best is None:
                    best_val = v
                    best = (j, (int(centers[s + k]),))
        else:
            oi, oj = np.meshgrid(
                np.arange(-(R - 1), R), np.arange(-(R - 1), R), indexing="ij"
            )
            mask = (oi * oi + oj * oj) < R * R  # strict, exact in integers
            di, dj = oi[mask], oj[mask]
            Km = di.size
            pairs = [(ci, cj) for ci in centers for cj in centers]
            chunk = max(1, _CHUNK_ELEMENTS // Km)
            for s in range(0, len(pairs), chunk):
                block = pairs[s : s + chunk]
                ci = np.array([p[0] for p in block])[:, None]
                cj = np.array([p[1] for p in block])[:, None]
                ii = (ci + di[None, :]) % N if fam.wrap else ci + di[None, :]
                jj = (cj + dj[None, :]) % N if fam.wrap else cj + dj[None, :]
                rows = f[ii, jj]
                means = rows.mean(axis=1)
                if stat == "bmo":
                    vals = np.abs(rows - means[:, None]).mean(axis=1)
                else:
                    vals = means - rows.min(axis=1)
                k = int(np.argmax(vals))
                v = float(vals[k])
                if v > best_val or best is None:
                    best_val = v
                    best = (j, block[k])
    if best is None:
        return 0.0, None
    j, cidx = best
    witness = make_ball(gf, cidx if fam.n > 1 else cidx[0], fam.radii[j], wrap=fam.wrap)
    return best_val, witness


def _scan_brute(gf: GridFunction, fam: BallFamily, stat: str):
    """Oracle: plain loop over the same family in the same order."""
    f = gf.samples.ravel()
    best_val = 0.0
    best_ball: Optional[Ball] = None
    for ball in fam.balls(gf):
        vals = f[ball.member_indices]
        mu = vals.mean()
        if stat == "bmo":
            v = float(np.abs(vals - mu).mean())
        else:
            v = float(mu - vals.min())
        if v > best_val or best_ball is None:
            best_val = v
            best_ball = ball
    return best_val, best_ball


def bmo_seminorm(gf: GridFunction, fam: BallFamily, brute: bool = False):
    """Supremum over the family of the mean oscillation, with witness.

    Returns ``(value, ball)``; ``ball`` is None only for an empty family.
    """
    scan = _scan_brute if brute else _scan_levels
    return scan(gf, fam, "bmo")


def blo_constant(gf: GridFunction, fam: BallFamily, brute: bool = False):
    """Supremum over the family of mean minus member-minimum, with witness.

    The member-minimum realizes the essential infimum exactly for the
    piecewise-constant interpretation of the samples.  Not symmetric under
    negation (bounded lower oscillation is not a linear notion).
    """
    scan = _scan_brute if brute else _scan_levels
    return scan(gf, fam, "blo")


class LebesgueNorms(NamedTuple):
    lp: float
    linf: float
    weak_lp: float


def lebesgue_norms(gf: GridFunction, p: float) -> LebesgueNorms:
    """Discrete L^p norm, sup norm, and weak-L^p quasinorm.

    The weak quasinorm sup over thresholds is evaluated just below each
    distinct sample magnitude, where the step-function supremum is
    attained.
    """
    if p <= 0:
        raise ValueError("p must be positive")
    w = gf.h**gf.n
    a = np.abs(gf.samples.ravel())
    lp = float((a**p).sum() * w) ** (1.0 / p)
    linf = float(a.max()) if a.size else 0.0
    asort = np.sort(a)[::-1]
    counts = np.arange(1, asort.size + 1, dtype=float)
    cand = asort * (w * counts) ** (1.0 / p)
    weak = float(cand.max()) if cand.size else 0.0
    return LebesgueNorms(lp=lp, linf=linf, weak_lp=weak)


def oscillation_growth(gf: GridFunction, base: Ball, k_max: int):
    """Mean of |f - f_base| over the dilated balls ``2^k * base``.

    Returns ``[(k, value)]`` for k = 0..k_max; raises if a dilate escapes
    the box, naming the largest valid k.
    """
    f_base = mean_over(gf, base)
    absdev = gf.with_samples(np.abs(gf.samples - f_base))
    rows = []
    for k in range(k_max + 1):
        try:
            ball_k = make_ball(gf, base.center_index if gf.n > 1 else base.center_index[0],
                               base.radius * 2**k)
        except ValueError:
            raise ValueError(
                f"dilate 2^{k} * base escapes the box; largest valid k is {k - 1}"
            ) from None
        rows.append((k, mean_over(absdev, ball_k)))
    return rows


@dataclass
class NormReport:
    """Bundle of the function-space quantities with supremum witnesses."""

    function_id: str
    bmo: float
    blo: float
    linf: float
    p: float
    lp: float
    weak_lp: float
    bmo_witness: Optional[Ball] = None
    blo_witness: Optional[Ball] = None

    CSV_HEADER = (
        "function_id,bmo,blo,linf,p,lp,weak_lp,witness_center,witness_radius"
    )

    def csv_row(self) -> str:
        # witness columns refer to the BMO supremum ball
        if self.bmo_witness is not None:
            wc = ":".join("%.17g" % v for v in self.bmo_witness.center)
            wr = "%.17g" % self.bmo_witness.radius
        else:
            wc, wr = "", ""
        vals = ",".join(
            "%.17g" % v for v in (self.bmo, self.blo, self.linf, self.p, self.lp, self.weak_lp)
        )
        return f"{self.function_id},{vals},{wc},{wr}"


def norm_report(
    gf: GridFunction, fam: BallFamily, p: float, function_id: str = ""
) -> NormReport:
    bmo, bw = bmo_seminorm(gf, fam)
    blo, lw = blo_constant(gf, fam)
    leb = lebesgue_norms(gf, p)
    return NormReport(
        function_id=function_id,
        bmo=bmo,
        blo=blo,
        linf=leb.linf,
        p=p,
        lp=leb.lp,
        weak_lp=leb.weak_lp,
        bmo_witness=bw,
        blo_witness=lw,
    )
