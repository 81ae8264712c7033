"""Test-function families and theorem-level verification experiments.

The experiments measure ratios of the form

    blo( F^2 ) / prod_i ||f_i||_BMO^2      (BMO-product studies)
    blo( F^2 ) / prod_i ||f_i||_Linf^2     (bounded-input studies)
    ||F||_{L^p} / prod_i ||f_i||_{L^p_i}   (strong-type sanity)
    ||F||_{L^{1/m},inf} / prod_i ||f_i||_1 (endpoint sanity)

where F is one of the square-function fields.  The bounds under test
assert the existence of finite constants but give no numeric values, so
acceptance is stability of the measured ratios under refinement (grid,
box, scale range, input dilations), with a configurable drift threshold
defaulting to 25%.

Family rules are resolution-independent functions fixed by the family
seed (parameters are drawn from fixed reference ranges, not from the
current box), so the same instance can be resampled at any (box, N) for
refinement studies.  Instances with zero denominator norms are excluded
and counted; excluded + reported = requested always holds.  Every
reported supremum carries its witness ball.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .grid import AnalyticTail, Box, GridFunction, integrate, make_grid_function, read_grid_function
from .kernels import KernelSpec, builtin_kernel
from .operators import ConeSpec, OperatorField, TGrid, operator_fields
from .spaces import (
    BallFamily,
    blo_constant,
    bmo_seminorm,
    dyadic_family,
    lebesgue_norms,
)

__all__ = [
    "LpReport",
    "RatioReport",
    "RatioRow",
    "RefinementConfig",
    "StabilityReport",
    "TestFamily",
    "bmo_blo_ratio_study",
    "generate",
    "linf_blo_ratio_study",
    "lp_sanity",
    "plancherel_ratio",
    "ratio_scatter_svg",
    "refinement_study",
]

# parameter draw ranges are fixed (box-independent) so that instance rules
# survive box refinement
_LOG_A_RANGE = (-4.0, 4.0)
_LOG_SCALE_RANGE = (0.5, 2.0)
_BUMP_CENTER_RANGE = (-4.0, 4.0)
_BUMP_WIDTH_RANGE = (0.5, 2.0)
_BUMP_HEIGHT_RANGE = (0.5, 2.0)
_INDICATOR_THRESHOLD_RANGE = (-2.0, 2.0)
_MARTINGALE_DOMAIN = 8.0


@dataclass(frozen=True)
class TestFamily:
    """A named generator of test functions.

    Kinds: ``log-singularity(a, sign, scale)`` (the BMO-minus-Linf
    witness, carrying an analytic log tail), ``dyadic-martingale(depth,
    sigma)`` (random-sign refinement over dyadic cells of a fixed
    reference interval), ``smooth-bump(center, width, height)``,
    ``half-indicator(threshold, width)`` (width None = half-line jump;
    a finite width gives the integrable interval indicator used by the
    L^p studies), ``custom-file(path)``.
    """

    kind: str
    count: int = 1
    seed: int = 0
    params: dict = field(default_factory=dict)

    _KINDS = (
        "log-singularity",
        "dyadic-martingale",
        "smooth-bump",
        "half-indicator",
        "custom-file",
    )

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}")
        if self.count < 1:
            raise ValueError("count must be positive")


def _instance_rng(family: TestFamily, index: int) -> np.random.Generator:
    return np.random.default_rng([family.seed, index, 0xA5])


def _draw(rng, rng_range, explicit):
    if explicit is not None:
        return float(explicit)
    lo, hi = rng_range
    return float(rng.uniform(lo, hi))


def generate(
    family: TestFamily, box: Box, points_per_axis: int
) -> list[tuple[str, GridFunction]]:
    """Deterministic instances of the family sampled on the given grid."""
    out = []
    n = box.n
    h = 2.0 * box.half_width[0] / points_per_axis
    for i in range(family.count):
        rng = _instance_rng(family, i)
        p = family.params
        if family.kind == "log-singularity":
            a = _draw(rng, _LOG_A_RANGE, p.get("a"))
            sign = float(p.get("sign", 1.0 if rng.random() < 0.5 else -1.0))
            scale = _draw(rng, _LOG_SCALE_RANGE, p.get("scale"))
            shifted = ""
            nodes = box.lo[0] + (np.arange(points_per_axis) + 0.5) * h
            if np.any(nodes == a):
                a += h / 4  # singularity sat exactly on a node
                shifted = ",shifted"
            avec = (a,) * n

            def rule(*mesh, _a=avec, _s=sign, _c=scale):
                r2 = sum((mm - aa) ** 2 for mm, aa in zip(mesh, _a))
                return _s * _c * 0.5 * np.log(r2)

            gf = make_grid_function(
                box,
                points_per_axis,
                rule,
                AnalyticTail("log", a=avec, sign=sign, scale=scale),
            )
            ident = f"log[{i}]:a=%.6g,sign=%+g,scale=%.6g%s" % (a, sign, scale, shifted)
        elif family.kind == "dyadic-martingale":
            depth = int(p.get("depth", 6))
            sigma = float(p.get("sigma", 1.0))
            if not 1 <= depth <= 20:
                raise ValueError("martingale depth must be in 1..20")
            dom = _MARTINGALE_DOMAIN
            signs = [rng.integers(0, 2, size=2**lev) * 2 - 1 for lev in range(1, depth + 1)]

            def rule(*mesh, _signs=signs, _sigma=sigma, _dom=dom):
                x = np.clip(mesh[0], -_dom, np.nextafter(_dom, -np.inf))
                u = (x + _dom) / (2 * _dom)
                val = np.zeros_like(u)
                for lev, s in enumerate(_signs, start=1):
                    cells = np.minimum((u * 2**lev).astype(int), 2**lev - 1)
                    val = val + _sigma * s[cells]
                return val

            gf = make_grid_function(box, points_per_axis, rule, "edge")
            ident = f"martingale[{i}]:depth={depth},sigma=%.6g" % sigma
        elif family.kind == "smooth-bump":
            center = _draw(rng, _BUMP_CENTER_RANGE, p.get("center"))
            width = _draw(rng, _BUMP_WIDTH_RANGE, p.get("width"))
            height = _draw(rng, _BUMP_HEIGHT_RANGE, p.get("height"))
            # snap the center to the nearest node so the peak is sampled
            nodes = box.lo[0] + (np.arange(points_per_axis) + 0.5) * h
            center = float(nodes[np.argmin(np.abs(nodes - center))])

            def rule(*mesh, _c=center, _w=width, _h=height):
                r2 = sum((mm - _c) ** 2 for mm in mesh) / _w**2
                out = np.zeros_like(r2)
                inside = r2 < 1.0
                out[inside] = _h * np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
                return out

            gf = make_grid_function(box, points_per_axis, rule, "zero")
            ident = f"bump[{i}]:c=%.6g,w=%.6g,h=%.6g" % (center, width, height)
        elif family.kind == "half-indicator":
            th = _draw(rng, _INDICATOR_THRESHOLD_RANGE, p.get("threshold"))
            width = p.get("width")

            def rule(*mesh, _t=th, _w=width):
                x = mesh[0]
                if _w is None:
                    return (x > _t).astype(float)
                return ((x > _t) & (x < _t + _w)).astype(float)

            gf = make_grid_function(box, points_per_axis, rule, "edge")
            wtxt = "half-line" if width is None else "w=%.6g" % width
            ident = f"indicator[{i}]:t=%.6g,{wtxt}" % th
        elif family.kind == "custom-file":
            if family.count != 1:
                raise ValueError("custom-file families hold a single instance")
            path = p["path"]
            gf = read_grid_function(path)
            if gf.box != box or gf.points_per_axis != points_per_axis:
                raise ValueError(f"custom file {path} does not match the requested grid")
            ident = f"file[{i}]:{path}"
        else:  # pragma: no cover
            raise ValueError(family.kind)
        out.append((ident, gf))
    return out


# ---------------------------------------------------------------------------
# ratio studies
# ---------------------------------------------------------------------------


@dataclass
class RatioRow:
    instance: int
    input_ids: tuple[str, ...]
    numerator: float
    denominator: float
    ratio: float
    witness_center: Optional[tuple[float, ...]]
    witness_radius: Optional[float]
    square_check_ok: bool
    cross_check_ok: bool = True


@dataclass
class RatioReport:
    op_kind: str
    norm_kind: str  # "bmo" or "linf"
    requested: int
    rows: list[RatioRow]
    excluded: int

    CSV_HEADER = (
        "instance,input_ids,numerator,denominator,ratio,"
        "witness_center,witness_radius,square_check_ok,cross_check_ok"
    )

    @property
    def max_ratio(self) -> float:
        return max((r.ratio for r in self.rows), default=0.0)

    @property
    def median_ratio(self) -> float:
        vals = sorted(r.ratio for r in self.rows)
        return float(np.median(vals)) if vals else 0.0

    def csv_text(self) -> str:
        lines = [self.CSV_HEADER]
        for r in self.rows:
            wc = "" if r.witness_center is None else ":".join("%.17g" % v for v in r.witness_center)
            wr = "" if r.witness_radius is None else "%.17g" % r.witness_radius
            lines.append(
                "%d,%s,%.17g,%.17g,%.17g,%s,%s,%s,%s"
                % (
                    r.instance,
                    "|".join(r.input_ids),
                    r.numerator,
                    r.denominator,
                    r.ratio,
                    wc,
                    wr,
                    r.square_check_ok,
                    r.cross_check_ok,
                )
            )
        return "\n".join(lines) + "\n"

    def summary_text(self) -> str:
        return (
            f"op={self.op_kind} norm={self.norm_kind} requested={self.requested} "
            f"reported={len(self.rows)} excluded={self.excluded} "
            f"max_ratio={self.max_ratio:.6g} median_ratio={self.median_ratio:.6g}\n"
        )


def _pool(families: Sequence[TestFamily], box: Box, N: int):
    pool = []
    for fam in families:
        pool.extend(generate(fam, box, N))
    if not pool:
        raise ValueError("no instances generated")
    return pool


def _tuples(pool_size: int, m: int, count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng([seed, 0x714])
    return rng.integers(0, pool_size, size=(count, m))


def _study(
    op_kind: str,
    families: Sequence[TestFamily],
    K: KernelSpec,
    tg: Optional[TGrid],
    lam: Optional[float],
    norm_kind: str,
    *,
    box: Box,
    points_per_axis: int,
    count: int,
    seed: int,
    stride: int = 1,
    cone: ConeSpec = ConeSpec(),
) -> RatioReport:
    pool = _pool(families, box, points_per_axis)
    fam = dyadic_family(pool[0][1], stride=stride)
    tg = tg or TGrid.default_for(pool[0][1])
    p2 = 2.0  # reference exponent for the cached Lebesgue norms
    norms = []
    for ident, gf in pool:
        b, _ = bmo_seminorm(gf, fam)
        leb = lebesgue_norms(gf, p2)
        norms.append((b, leb.linf))

    picks = _tuples(len(pool), K.m, count, seed)
    rows: list[RatioRow] = []
    excluded = 0
    for idx, pick in enumerate(picks):
        ids = tuple(pool[j][0] for j in pick)
        fs = [pool[j][1] for j in pick]
        bmos = [norms[j][0] for j in pick]
        linfs = [norms[j][1] for j in pick]
        den_parts = bmos if norm_kind == "bmo" else linfs
        den = float(np.prod([v**2 for v in den_parts]))
        if den == 0.0:
            excluded += 1
            continue
        fields = operator_fields(K, fs, tg, [op_kind], lam=lam, cone=cone)
        F = fields[op_kind]
        Fsq = F.values.square()
        num, witness = blo_constant(Fsq, fam)
        blo_f, _ = blo_constant(F.values, fam)
        square_ok = blo_f**2 <= num + 1e-12 * max(1.0, num)
        cross_ok = True
        if norm_kind == "linf":
            # exact discrete chain: bmo <= 2*blo <= 4*linf per factor, hence
            # blo(F^2) <= ratio_bmo * prod (4*linf)^2
            cross_ok = all(b <= 4.0 * li for b, li in zip(bmos, linfs))
            den_bmo = float(np.prod([v**2 for v in bmos]))
            if den_bmo > 0:
                ratio_bmo = num / den_bmo
                bound = ratio_bmo * float(np.prod([(4.0 * li) ** 2 for li in linfs]))
                cross_ok = cross_ok and num <= bound * (1 + 1e-12)
        rows.append(
            RatioRow(
                instance=idx,
                input_ids=ids,
                numerator=num,
                denominator=den,
                ratio=num / den,
                witness_center=None if witness is None else witness.center,
                witness_radius=None if witness is None else witness.radius,
                square_check_ok=square_ok,
                cross_check_ok=cross_ok,
            )
        )
    return RatioReport(
        op_kind=op_kind,
        norm_kind=norm_kind,
        requested=count,
        rows=rows,
        excluded=excluded,
    )


def bmo_blo_ratio_study(
    op_kind: str,
    families: Sequence[TestFamily],
    K: KernelSpec,
    tg: Optional[TGrid] = None,
    lam: Optional[float] = None,
    **kwargs,
) -> RatioReport:
    """Ratios blo(F^2) / prod ||f_i||_BMO^2 over seeded m-tuples.

    Also re-asserts the square inequality blo(F)^2 <= blo(F^2) per
    instance (recorded on each row).
    """
    return _study(op_kind, families, K, tg, lam, "bmo", **kwargs)


def linf_blo_ratio_study(
    op_kind: str,
    families: Sequence[TestFamily],
    K: KernelSpec,
    tg: Optional[TGrid] = None,
    lam: Optional[float] = None,
    **kwargs,
) -> RatioReport:
    """Ratios blo(F^2) / prod ||f_i||_Linf^2 on bounded families only."""
    for fam in families:
        if fam.kind == "log-singularity":
            raise ValueError("linf study requires bounded families; "
                             f"{fam.kind!r} is unbounded")
    return _study(op_kind, families, K, tg, lam, "linf", **kwargs)


# ---------------------------------------------------------------------------
# L^p sanity
# ---------------------------------------------------------------------------


@dataclass
class LpRow:
    check: str  # "strong" | "endpoint"
    op_kind: str
    dilation: float
    numerator: float
    denominator: float
    ratio: float
    drift_vs_unit: float
    ok: bool


@dataclass
class LpReport:
    rows: list[LpRow]
    excluded: int
    requested: int
    tol: float

    CSV_HEADER = "check,op,dilation,numerator,denominator,ratio,drift_vs_unit,ok"

    def csv_text(self) -> str:
        lines = [self.CSV_HEADER]
        for r in self.rows:
            lines.append(
                "%s,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%s"
                % (r.check, r.op_kind, r.dilation, r.numerator, r.denominator,
                   r.ratio, r.drift_vs_unit, r.ok)
            )
        return "\n".join(lines) + "\n"

    @property
    def all_ok(self) -> bool:
        return all(r.ok for r in self.rows)


def _dilated_inputs(kind: str, m: int, s: float, box: Box, N: int):
    """Inputs f_i(x/s) realized by scaling the family parameters."""
    if kind == "bump":
        fam = TestFamily(
            "smooth-bump", count=m, seed=0,
            params={"center": 0.0, "width": 1.0 * s, "height": 1.0},
        )
    else:
        fam = TestFamily(
            "half-indicator", count=m, seed=0,
            params={"threshold": 1.0 * s, "width": 1.0 * s},
        )
    return [gf for _, gf in generate(fam, box, N)]


def lp_sanity(
    op_kind: str,
    K: KernelSpec,
    tg: Optional[TGrid] = None,
    ps: Sequence[float] = (4.0, 4.0),
    lam: Optional[float] = None,
    p: Optional[float] = None,
    *,
    box: Box,
    points_per_axis: int,
    dilations: Sequence[float] = (0.5, 1.0, 2.0),
    tol: float = 0.25,
    cone: ConeSpec = ConeSpec(),
) -> LpReport:
    """Strong-type and weak-endpoint norm ratios under input dilations.

    The bound's form is dilation-invariant in the continuum, so the
    measured ratios must be stable (within ``tol``) across the sweep.
    """
    m = K.m
    if len(ps) != m:
        raise ValueError(f"need {m} integrability exponents, got {len(ps)}")
    if any(q < 1 for q in ps):
        raise ValueError("exponents must be >= 1")
    p_implied = 1.0 / sum(1.0 / q for q in ps)
    if p is not None and abs(1.0 / p - sum(1.0 / q for q in ps)) > 1e-12:
        raise ValueError("inconsistent Hoelder exponents: 1/p != sum 1/p_i")
    p = p_implied
    if 1.0 not in dilations:
        raise ValueError("the dilation sweep must contain s = 1")

    rows: list[LpRow] = []
    excluded = 0
    requested = 0
    unit: dict[tuple[str, str], float] = {}
    for check, kind in (("strong", "bump"), ("endpoint", "indicator")):
        for s in dilations:
            requested += 1
            fs = _dilated_inputs(kind, m, float(s), box, points_per_axis)
            tg_s = tg or TGrid.default_for(fs[0])
            F = operator_fields(K, fs, tg_s, [op_kind], lam=lam, cone=cone)[op_kind]
            if check == "strong":
                num = lebesgue_norms(F.values, p).lp
                den = float(np.prod([lebesgue_norms(f, q).lp for f, q in zip(fs, ps)]))
            else:
                num = lebesgue_norms(F.values, 1.0 / m).weak_lp
                den = float(np.prod([lebesgue_norms(f, 1.0).lp for f in fs]))
            if den == 0.0:
                excluded += 1
                continue
            rows.append(LpRow(check, op_kind, float(s), num, den, num / den, 0.0, True))
            if s == 1.0:
                unit[(check, op_kind)] = num / den
    for r in rows:
        base = unit.get((r.check, r.op_kind))
        if base and r.dilation != 1.0:
            r.drift_vs_unit = abs(r.ratio / base - 1.0)
            r.ok = bool(np.isfinite(r.ratio)) and r.drift_vs_unit <= tol
        else:
            r.ok = bool(np.isfinite(r.ratio))
    return LpReport(rows=rows, excluded=excluded, requested=requested, tol=tol)


# ---------------------------------------------------------------------------
# refinement studies
# ---------------------------------------------------------------------------


def plancherel_ratio(
    points_per_axis: int,
    L: float = 8.0,
    t_count: int = 64,
    omega: float = 3.0,
    sigma: float = 1.0,
) -> float:
    """Measured ||g f||_2^2 / ||f||_2^2 for the mexican-hat kernel on a
    band-limited (modulated) Gaussian; the frequency-domain prediction for
    this normalization is 1/8."""
    box = Box((0.0,), (L,))
    f = make_grid_function(
        box,
        points_per_axis,
        lambda x: np.cos(omega * x) * np.exp(-(x**2) / (2 * sigma**2)),
        "zero",
    )
    K = builtin_kernel("mexican-hat", n=1)
    tg = TGrid.default_for(f, count=t_count)
    F = operator_fields(K, [f], tg, ["g"])["g"]
    return integrate(F.values.square()) / integrate(f.square())


@dataclass(frozen=True)
class RefinementConfig:
    kernel_name: str = "tensor-odd-gaussian"
    m: int = 2
    n: int = 1
    points_per_axis: int = 512
    L: float = 8.0
    t_count: int = 64
    op_kinds: tuple[str, ...] = ("g", "S")
    lam: Optional[float] = None
    families: tuple[TestFamily, ...] = ()
    count: int = 20
    seed: int = 0
    stride: int = 1
    threshold: float = 0.25
    include_plancherel: bool = False
    norm_kind: str = "bmo"


@dataclass
class StabilityRow:
    quantity: str
    variant: str
    base: float
    refined: float
    rel_drift: float
    flagged: bool


@dataclass
class StabilityReport:
    rows: list[StabilityRow]
    omissions: list[str]
    threshold: float

    CSV_HEADER = "quantity,variant,base,refined,rel_drift,flagged"

    @property
    def any_flagged(self) -> bool:
        return any(r.flagged for r in self.rows)

    def csv_text(self) -> str:
        lines = [self.CSV_HEADER]
        for r in self.rows:
            lines.append(
                "%s,%s,%.17g,%.17g,%.17g,%s"
                % (r.quantity, r.variant, r.base, r.refined, r.rel_drift, r.flagged)
            )
        for o in self.omissions:
            lines.append(f"# omitted: {o}")
        return "\n".join(lines) + "\n"


def _drift(base: float, refined: float) -> float:
    if base == 0.0 and refined == 0.0:
        return 0.0
    return abs(refined - base) / max(abs(base), 1e-300)


def refinement_study(cfg: RefinementConfig) -> StabilityReport:
    """Per-quantity relative drifts under N -> 2N, L -> 2L, and doubled
    t-range; flags drifts above the threshold.  Resource exhaustion in a
    variant is recorded as an omission instead of failing the study."""
    rows: list[StabilityRow] = []
    omissions: list[str] = []
    K = builtin_kernel(cfg.kernel_name, m=cfg.m, n=cfg.n)
    study = bmo_blo_ratio_study if cfg.norm_kind == "bmo" else linf_blo_ratio_study

    def max_ratio(op_kind, N, L, t_lo_factor=1.0, t_hi_factor=1.0):
        box = Box((0.0,) * cfg.n, (L,) * cfg.n)
        h = 2.0 * L / N
        tg = TGrid(h * t_lo_factor, 2.0 * L * t_hi_factor, cfg.t_count)
        rep = study(
            op_kind,
            cfg.families,
            K,
            tg,
            lam=cfg.lam,
            box=box,
            points_per_axis=N,
            count=cfg.count,
            seed=cfg.seed,
            stride=cfg.stride,
        )
        return rep.max_ratio

    variants = [
        ("N->2N", dict(N=2 * cfg.points_per_axis, L=cfg.L)),
        ("L->2L", dict(N=cfg.points_per_axis, L=2 * cfg.L)),
        ("t_min/2", dict(N=cfg.points_per_axis, L=cfg.L, t_lo_factor=0.5)),
        ("t_max*2", dict(N=cfg.points_per_axis, L=cfg.L, t_hi_factor=2.0)),
    ]
    for op_kind in cfg.op_kinds:
        try:
            base = max_ratio(op_kind, cfg.points_per_axis, cfg.L)
        except MemoryError as exc:
            omissions.append(f"max_ratio[{op_kind}] base: {exc}")
            continue
        for name, kw in variants:
            try:
                refined = max_ratio(op_kind, **kw)
            except MemoryError as exc:
                omissions.append(f"max_ratio[{op_kind}] {name}: {exc}")
                continue
            d = _drift(base, refined)
            rows.append(
                StabilityRow(
                    quantity=f"max_ratio[{op_kind}]",
                    variant=name,
                    base=base,
                    refined=refined,
                    rel_drift=d,
                    flagged=d > cfg.threshold,
                )
            )
    if cfg.include_plancherel:
        try:
            base = plancherel_ratio(cfg.points_per_axis, cfg.L, cfg.t_count)
            refined = plancherel_ratio(2 * cfg.points_per_axis, cfg.L, cfg.t_count)
            d = _drift(base, refined)
            rows.append(
                StabilityRow("plancherel_ratio", "N->2N", base, refined, d, d > 0.02)
            )
        except MemoryError as exc:
            omissions.append(f"plancherel_ratio: {exc}")
    return StabilityReport(rows=rows, omissions=omissions, threshold=cfg.threshold)


# ---------------------------------------------------------------------------
# artifacts
# ---------------------------------------------------------------------------


def ratio_scatter_svg(report: RatioReport, width: int = 640, height: int = 360) -> str:
    """Minimal self-contained SVG scatter of ratio vs. instance id
    (hand-rolled for byte-stable artifacts)."""
    pad = 40
    rows = report.rows
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{pad}" y="20" font-size="13">ratio vs instance '
        f"(op={report.op_kind}, norm={report.norm_kind})</text>",
    ]
    if rows:
        vmax = max(r.ratio for r in rows) or 1.0
        xmax = max(r.instance for r in rows) or 1
        for r in rows:
            x = pad + (width - 2 * pad) * (r.instance / max(xmax, 1))
            y = height - pad - (height - 2 * pad) * (r.ratio / vmax)
            parts.append(f'<circle cx="%.2f" cy="%.2f" r="3" fill="steelblue"/>' % (x, y))
        parts.append(
            f'<text x="{pad}" y="{height - 12}" font-size="11">max=%.6g median=%.6g '
            "excluded=%d</text>" % (report.max_ratio, report.median_ratio, report.excluded)
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
