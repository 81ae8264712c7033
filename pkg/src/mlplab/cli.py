"""Batch front-end: config parsing, experiment dispatch, artifact emission.

Config grammar (also accepted via ``--set key=value`` flags, which
override file keys):

* one ``key = value`` pair per line; ``#`` starts a comment,
* unknown keys are hard errors (silent typos would invalidate runs),
* every unset key takes the documented default and the fully-resolved
  config is echoed verbatim into the output directory as ``config.txt``,
  so re-running an emitted config reproduces all artifacts bit-exactly
  (all randomness flows from the single recorded seed).

Commands: ``validate-kernel``, ``compute``, ``norms``, ``verify``,
``sweep``, ``refine``.  Exit status is the conjunction of the per-check
pass flags; on failure a machine-readable ``failures.json`` is written.
CSV artifacts use comma separators, ``.`` decimals, LF endings, UTF-8.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field, fields, replace
from typing import Optional

import numpy as np

from .grid import Box, make_grid_function, write_grid_function
from .kernels import ProbePlan, builtin_kernel, validate_kernel
from .lab import (
    RatioReport,
    RefinementConfig,
    TestFamily,
    bmo_blo_ratio_study,
    generate,
    linf_blo_ratio_study,
    ratio_scatter_svg,
    refinement_study,
)
from .operators import TGrid, operator_fields, split_g, write_operator_field
from .spaces import blo_constant, bmo_seminorm, dyadic_family, lebesgue_norms, norm_report

__all__ = ["RunConfig", "main", "parse_config", "run"]

_COMMANDS = ("validate-kernel", "compute", "norms", "verify", "sweep", "refine")

# the documented defaults table; every key either set or defaulted from here
_DEFAULTS: dict[str, object] = {
    "command": "",
    "kernel": "tensor-odd-gaussian",
    "m": 0,  # 0 = the kernel's own default linearity
    "n": 1,
    "N": 512,
    "L": 8.0,
    "extension": "zero",
    "t_min": 0.0,  # 0 = auto (grid spacing h)
    "t_max": 0.0,  # 0 = auto (2L)
    "t_count": 64,
    "lambda": 5.0,
    "op": "g",
    "families": "log-singularity,dyadic-martingale",
    "count": 20,
    "inputs": "",
    "out": "",
    "seed": 1234,
    "stride": 1,
    "p": "4,4",
    "tol_ratio_drift": 0.25,
    "lambdas": "3,5,8,12",
}

_INT_KEYS = {"m", "n", "N", "t_count", "count", "seed", "stride"}
_FLOAT_KEYS = {"L", "t_min", "t_max", "lambda", "tol_ratio_drift"}


@dataclass(frozen=True)
class RunConfig:
    command: str
    kernel: str
    m: int
    n: int
    N: int
    L: float
    extension: str
    t_min: float
    t_max: float
    t_count: int
    lam: float
    op: str
    families: str
    count: int
    inputs: str
    out: str
    seed: int
    stride: int
    p: str
    tol_ratio_drift: float
    lambdas: str

    def echo_text(self) -> str:
        vals = {
            "command": self.command,
            "kernel": self.kernel,
            "m": self.m,
            "n": self.n,
            "N": self.N,
            "L": "%.17g" % self.L,
            "extension": self.extension,
            "t_min": "%.17g" % self.t_min,
            "t_max": "%.17g" % self.t_max,
            "t_count": self.t_count,
            "lambda": "%.17g" % self.lam,
            "op": self.op,
            "families": self.families,
            "count": self.count,
            "inputs": self.inputs,
            "out": self.out,
            "seed": self.seed,
            "stride": self.stride,
            "p": self.p,
            "tol_ratio_drift": "%.17g" % self.tol_ratio_drift,
            "lambdas": self.lambdas,
        }
        return "".join(f"{k} = {v}\n" for k, v in vals.items())


def parse_config(text: str, overrides: Optional[dict] = None) -> RunConfig:
    """Parse key=value config text, apply overrides, resolve defaults.

    Unknown keys raise; a missing command raises; lambda <= 1 with the
    weighted operator raises (the definition requires lambda > 1).
    """
    values = dict(_DEFAULTS)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value, got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _DEFAULTS:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
        values[key] = val
    for key, val in (overrides or {}).items():
        if key not in _DEFAULTS:
            raise ValueError(f"unknown config key {key!r}")
        values[key] = val

    def _coerce(key, val):
        if key in _INT_KEYS:
            return int(val)
        if key in _FLOAT_KEYS:
            return float(val)
        return str(val)

    coerced = {k: _coerce(k, v) for k, v in values.items()}
    cfg = RunConfig(
        command=coerced["command"],
        kernel=coerced["kernel"],
        m=coerced["m"],
        n=coerced["n"],
        N=coerced["N"],
        L=coerced["L"],
        extension=coerced["extension"],
        t_min=coerced["t_min"],
        t_max=coerced["t_max"],
        t_count=coerced["t_count"],
        lam=coerced["lambda"],
        op=coerced["op"],
        families=coerced["families"],
        count=coerced["count"],
        inputs=coerced["inputs"],
        out=coerced["out"],
        seed=coerced["seed"],
        stride=coerced["stride"],
        p=coerced["p"],
        tol_ratio_drift=coerced["tol_ratio_drift"],
        lambdas=coerced["lambdas"],
    )
    if not cfg.command:
        raise ValueError("command required")
    if cfg.command not in _COMMANDS:
        raise ValueError(f"unknown command {cfg.command!r}")
    if cfg.op not in ("g", "S", "gstar"):
        raise ValueError(f"unknown operator kind {cfg.op!r}")
    if cfg.op == "gstar" and cfg.lam <= 1:
        raise ValueError("the weighted square function requires lambda > 1")
    if cfg.N < 4:
        raise ValueError("N must be >= 4")
    if cfg.L <= 0:
        raise ValueError("L must be positive")
    return cfg


def _kernel(cfg: RunConfig):
    return builtin_kernel(cfg.kernel, m=cfg.m if cfg.m > 0 else None, n=cfg.n)


def _families(cfg: RunConfig) -> tuple[TestFamily, ...]:
    fams = []
    for tok in cfg.families.split(","):
        tok = tok.strip()
        if not tok:
            continue
        fams.append(TestFamily(tok, count=cfg.count, seed=cfg.seed))
    if not fams:
        raise ValueError("no families configured")
    return tuple(fams)


def _tgrid(cfg: RunConfig) -> TGrid:
    h = 2.0 * cfg.L / cfg.N
    t_min = cfg.t_min if cfg.t_min > 0 else h
    t_max = cfg.t_max if cfg.t_max > 0 else 2.0 * cfg.L
    return TGrid(t_min, t_max, cfg.t_count)


def _require_out(cfg: RunConfig) -> str:
    if not cfg.out:
        raise ValueError("--out <dir> is required for artifact-emitting commands")
    os.makedirs(cfg.out, exist_ok=True)
    return cfg.out


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _finish(cfg: RunConfig, out: Optional[str], failures: list[dict]) -> int:
    if out:
        _write(os.path.join(out, "config.txt"), cfg.echo_text())
        if failures:
            _write(
                os.path.join(out, "failures.json"),
                json.dumps(failures, indent=2, sort_keys=True) + "\n",
            )
    for f in failures:
        print(f"FAIL {f['check']}: {f['detail']}", file=sys.stderr)
    return 1 if failures else 0


def run(cfg: RunConfig) -> int:
    """Execute one command; returns the process exit status."""
    if cfg.command == "validate-kernel":
        return _cmd_validate(cfg)
    if cfg.command == "compute":
        return _cmd_compute(cfg)
    if cfg.command == "norms":
        return _cmd_norms(cfg)
    if cfg.command == "verify":
        return _cmd_verify(cfg)
    if cfg.command == "sweep":
        return _cmd_sweep(cfg)
    if cfg.command == "refine":
        return _cmd_refine(cfg)
    raise ValueError(f"unknown command {cfg.command!r}")  # pragma: no cover


def _cmd_validate(cfg: RunConfig) -> int:
    out = _require_out(cfg)
    K = _kernel(cfg)
    report = validate_kernel(K, ProbePlan(seed=cfg.seed))
    _write(os.path.join(out, "validation.csv"), report.csv_text())
    failures = [
        {"check": f"kernel-condition:{name}", "detail": f"{cfg.kernel} failed {name}"}
        for name, ok in report.passes.items()
        if not ok
    ]
    return _finish(cfg, out, failures)


def _grid_inputs(cfg: RunConfig):
    box = Box((0.0,) * cfg.n, (cfg.L,) * cfg.n)
    if cfg.inputs:
        from .grid import read_grid_function

        paths = [p.strip() for p in cfg.inputs.split(",") if p.strip()]
        inst = [(os.path.basename(p), read_grid_function(p)) for p in paths]
    else:
        inst = []
        for fam in _families(cfg):
            inst.extend(generate(fam, box, cfg.N))
    return box, inst


def _cmd_compute(cfg: RunConfig) -> int:
    out = _require_out(cfg)
    K = _kernel(cfg)
    box, inst = _grid_inputs(cfg)
    if len(inst) < K.m:
        raise ValueError(f"need at least m={K.m} inputs, have {len(inst)}")
    ids = [inst[i][0] for i in range(K.m)]
    fs = [inst[i][1] for i in range(K.m)]
    tg = _tgrid(cfg)
    lam = cfg.lam if cfg.op == "gstar" else None
    F = operator_fields(K, fs, tg, [cfg.op], lam=lam)[cfg.op]
    write_operator_field(F, os.path.join(out, "field"))
    fam = dyadic_family(F.values, stride=cfg.stride)
    rep = norm_report(F.values, fam, p=2.0, function_id=f"{cfg.op}({'|'.join(ids)})")
    _write(
        os.path.join(out, "field_norms.csv"),
        rep.CSV_HEADER + "\n" + rep.csv_row() + "\n",
    )
    return _finish(cfg, out, [])


def _cmd_norms(cfg: RunConfig) -> int:
    out = _require_out(cfg)
    _, inst = _grid_inputs(cfg)
    p = float(cfg.p.split(",")[0])
    lines = []
    for ident, gf in inst:
        fam = dyadic_family(gf, stride=cfg.stride)
        lines.append(norm_report(gf, fam, p=p, function_id=ident).csv_row())
    from .spaces import NormReport

    _write(os.path.join(out, "norms.csv"), NormReport.CSV_HEADER + "\n" + "\n".join(lines) + "\n")
    return _finish(cfg, out, [])


def _cmd_verify(cfg: RunConfig) -> int:
    out = cfg.out or None
    if out:
        os.makedirs(out, exist_ok=True)
    failures: list[dict] = []
    box, inst = _grid_inputs(cfg)

    for ident, gf in inst:
        fam = dyadic_family(gf, stride=cfg.stride)
        bmo, _ = bmo_seminorm(gf, fam)
        blo, _ = blo_constant(gf, fam)
        leb = lebesgue_norms(gf, 2.0)
        if blo > 2.0 * leb.linf:
            failures.append(
                {"check": "blo<=2*linf", "detail": f"{ident}: {blo} > 2*{leb.linf}"}
            )
        if bmo > 2.0 * blo:
            failures.append(
                {"check": "bmo<=2*blo", "detail": f"{ident}: {bmo} > 2*{blo}"}
            )
        if leb.weak_lp > leb.lp:
            failures.append(
                {"check": "weak<=lp", "detail": f"{ident}: {leb.weak_lp} > {leb.lp}"}
            )

    # operator-level exact checks on one bounded tuple
    K = _kernel(cfg)
    bump = TestFamily("smooth-bump", count=K.m, seed=cfg.seed)
    fs = [gf for _, gf in generate(bump, box, cfg.N)]
    tg = _tgrid(cfg)
    lam = max(cfg.lam, 2.0 * K.m + 1.0)
    fields = operator_fields(K, fs, tg, ["g", "S", "gstar"], lam=lam)
    fam = dyadic_family(fields["g"].values, stride=cfg.stride)
    for kind, F in fields.items():
        blo_f, _ = blo_constant(F.values, fam)
        blo_f2, _ = blo_constant(F.values.square(), fam)
        if blo_f**2 > blo_f2 + 1e-12 * max(1.0, blo_f2):
            failures.append(
                {"check": "square-blo", "detail": f"{kind}: {blo_f**2} > {blo_f2}"}
            )
    dom = 2.0 ** (lam * cfg.n / 2.0) * fields["gstar"].values.samples
    if np.any(fields["S"].values.samples > dom):
        failures.append(
            {"check": "cone-domination", "detail": "S exceeds 2^(lambda n/2) g*"}
        )
    g0, ginf = split_g(K, fs, tg, r=tg.t_max / 2.0)
    lhs = fields["g"].values.samples ** 2
    rhs = g0.values.samples ** 2 + ginf.values.samples ** 2
    scale = max(float(lhs.max()), 1e-300)
    if np.max(np.abs(lhs - rhs)) > 1e-12 * scale:
        failures.append({"check": "split-pythagoras", "detail": "g^2 != g0^2 + ginf^2"})

    return _finish(cfg, out, failures)


def _cmd_sweep(cfg: RunConfig) -> int:
    out = _require_out(cfg)
    K = _kernel(cfg)
    box = Box((0.0,) * cfg.n, (cfg.L,) * cfg.n)
    fams = _families(cfg)
    tg = _tgrid(cfg)
    failures = []
    summary = []
    for tok in cfg.lambdas.split(","):
        lam = float(tok)
        rep = bmo_blo_ratio_study(
            "gstar",
            fams,
            K,
            tg,
            lam=lam,
            box=box,
            points_per_axis=cfg.N,
            count=cfg.count,
            seed=cfg.seed,
            stride=cfg.stride,
        )
        tag = ("%.6g" % lam).replace(".", "p")
        _write(os.path.join(out, f"ratio_lambda_{tag}.csv"), rep.csv_text())
        _write(os.path.join(out, f"ratio_lambda_{tag}.svg"), ratio_scatter_svg(rep))
        summary.append(f"lambda={lam:.6g}: " + rep.summary_text())
        if not np.isfinite(rep.max_ratio):
            failures.append(
                {"check": "sweep-finite", "detail": f"lambda={lam}: non-finite ratio"}
            )
        if rep.excluded + len(rep.rows) != rep.requested:
            failures.append(
                {"check": "exclusion-accounting", "detail": f"lambda={lam}"}
            )
    _write(os.path.join(out, "summary.txt"), "".join(summary))
    return _finish(cfg, out, failures)


def _cmd_refine(cfg: RunConfig) -> int:
    out = _require_out(cfg)
    K = _kernel(cfg)
    rcfg = RefinementConfig(
        kernel_name=cfg.kernel,
        m=K.m,
        n=cfg.n,
        points_per_axis=cfg.N,
        L=cfg.L,
        t_count=cfg.t_count,
        op_kinds=(cfg.op,),
        lam=cfg.lam if cfg.op == "gstar" else None,
        families=_families(cfg),
        count=cfg.count,
        seed=cfg.seed,
        stride=cfg.stride,
        threshold=cfg.tol_ratio_drift,
    )
    report = refinement_study(rcfg)
    _write(os.path.join(out, "stability.csv"), report.csv_text())
    failures = [
        {
            "check": "refinement-drift",
            "detail": f"{r.quantity} {r.variant}: drift {r.rel_drift:.4g} "
            f"> {report.threshold}",
        }
        for r in report.rows
        if r.flagged
    ]
    for o in report.omissions:
        failures.append({"check": "refinement-omission", "detail": o})
    return _finish(cfg, out, failures)


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="mlplab",
        description="square-function laboratory: kernel validation, field "
        "computation, norm estimation, and inequality verification",
    )
    parser.add_argument("command", choices=_COMMANDS)
    parser.add_argument("--config", help="config file (key = value lines)")
    parser.add_argument("--out", help="output directory for artifacts")
    parser.add_argument(
        "--kernel", help="kernel name, optionally name:k=v;k=v (keys m, n)"
    )
    parser.add_argument("--seed", type=int, help="master seed recorded in artifacts")
    parser.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override any config key",
    )
    args = parser.parse_args(argv)

    overrides: dict[str, str] = {"command": args.command}
    if args.out:
        overrides["out"] = args.out
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    if args.kernel:
        name, _, params = args.kernel.partition(":")
        overrides["kernel"] = name
        for pair in filter(None, params.split(";")):
            k, v = pair.split("=", 1)
            if k not in ("m", "n"):
                raise SystemExit(f"unknown kernel param {k!r}")
            overrides[k] = v
    for pair in args.set:
        k, _, v = pair.partition("=")
        overrides[k.strip()] = v.strip()

    text = ""
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            text = fh.read()
    try:
        cfg = parse_config(text, overrides)
        return run(cfg)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
