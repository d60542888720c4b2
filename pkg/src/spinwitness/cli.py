"""Command-line front end: evaluate criteria, optimize gains, run soundness scans, tabulate C_J.

Exit codes: 0 success, 2 configuration error, 3 numeric failure, 4 failed verification.
Output goes to ``--out`` (or stdout) and is only written once the run has succeeded.

Network files are line based.  ``#`` starts a comment; each remaining line is
a keyword followed by ``key=value`` fields matching the network element types::

    modes 3
    squeezer mode=0 r=0.5 quadrature=P
    squeezer mode=1 r=r quadrature=X      # r=r takes the value from --r / --r-grid
    beamsplitter i=0 j=1 R=0.333333333333 phase=0
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import shlex
import sys
from fractions import Fraction

import numpy as np

from . import criteria as C
from . import gain_optimizer as go
from . import gaussian_engine as ge
from . import oracle
from . import presets
from . import qudit_engine as qe
from .errors import (ConvergenceFailure, DegenerateMeasurement, DegenerateObjective, InvalidArgument,
                     MissingData, TruncationError)
from .spin_algebra import planar_bound

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERIFY = 0, 2, 3, 4

EVALUATE_COLUMNS = ("r", "criterion_id", "lhs", "rhs", "margin", "verdict", "conditional", "validity",
                    "argmin_bipartitions", "flags")
OPTIMIZE_COLUMNS = ("r", "h", "g", "ratio", "verdict")
VERIFY_COLUMNS = ("criterion_id", "trials", "seed", "worst_margin", "worst_trial", "status")
PLANAR_COLUMNS = ("J", "C_J", "iterations", "residual")

VLF_IDS = ("c2", "c2b", "c4", "c4b", "c10")
GAIN_IDS = ("c1", "c3", "c6", "c7", "c8", "c9", "cv_sum", "cv_product")

log = logging.getLogger("spinwitness")


class ConfigError(Exception):
    pass


# --------------------------------------------------------------------------
# parsing helpers


def parse_number(text):
    """Decimal number with optional exponent, or a simple fraction like ``1/3``."""
    text = text.strip()
    try:
        value = float(Fraction(text)) if "/" in text else float(text)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"not a number: {text!r}")
    if not math.isfinite(value):
        raise ConfigError(f"number must be finite: {text!r}")
    return value


def parse_list(text):
    if text is None or not text.strip():
        return []
    return [parse_number(t) for t in text.split(",") if t.strip()]


def parse_params(items):
    params = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"--param expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        params[k.strip()] = v.strip()
    return params


_ELEMENT_FIELDS = {
    "squeezer": (ge.Squeezer, {"mode": int, "r": float, "quadrature": str}, ("mode", "r")),
    "beamsplitter": (ge.BeamSplitter, {"i": int, "j": int, "R": float, "phase": float}, ("i", "j", "R")),
}


def parse_network(text, r=None) -> ge.NetworkConfig:
    """Parse a network description; ``r`` substitutes any field written as ``r``."""
    n_modes, elements = None, []
    for lineno, raw in enumerate(text.splitlines(), 1):
        try:
            tokens = shlex.split(raw, comments=True)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {exc}")
        if not tokens:
            continue
        key, rest = tokens[0].lower(), tokens[1:]
        if key == "modes":
            if n_modes is not None or len(rest) != 1:
                raise ConfigError(f"line {lineno}: 'modes' must appear once with one value")
            value = parse_number(rest[0])
            if value != int(value):
                raise ConfigError(f"line {lineno}: mode count must be an integer")
            n_modes = int(value)
            continue
        if key not in _ELEMENT_FIELDS:
            raise ConfigError(f"line {lineno}: unknown element {tokens[0]!r}")
        cls, types, required = _ELEMENT_FIELDS[key]
        fields = {}
        for tok in rest:
            if "=" not in tok:
                raise ConfigError(f"line {lineno}: expected key=value, got {tok!r}")
            name, value = tok.split("=", 1)
            if name not in types:
                raise ConfigError(f"line {lineno}: {key} has no field {name!r}")
            kind = types[name]
            if kind is str:
                fields[name] = value
            elif value == "r":
                if r is None:
                    raise ConfigError(f"line {lineno}: field {name}=r needs --r or --r-grid")
                fields[name] = float(r)
            else:
                num = parse_number(value)
                if kind is int:
                    if num != int(num):
                        raise ConfigError(f"line {lineno}: {name} must be an integer")
                    num = int(num)
                fields[name] = num
        missing = [f for f in required if f not in fields]
        if missing:
            raise ConfigError(f"line {lineno}: {key} is missing {', '.join(missing)}")
        elements.append(cls(**fields))
    if n_modes is None:
        raise ConfigError("network file has no 'modes' line")
    try:
        return ge.NetworkConfig(n_modes, tuple(elements))
    except InvalidArgument as exc:
        raise ConfigError(str(exc))


# --------------------------------------------------------------------------
# output


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render(rows, columns, fmt):
    if fmt == "json":
        return json.dumps([{c: row.get(c) for c in columns} for row in rows], indent=1) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# moment sources


class Source:
    """Builds a :class:`presets.PresetResult` for a given ``r`` from a preset name or network file."""

    def __init__(self, args, params):
        if bool(args.preset) == bool(args.network):
            raise ConfigError("give exactly one of --preset or --network")
        self.params = params
        self.preset = args.preset
        self.network_text = None
        if args.preset and args.preset not in presets.PRESETS:
            raise ConfigError(f"unknown preset {args.preset!r}; choose from {', '.join(presets.PRESETS)}")
        if args.network:
            try:
                with open(args.network, encoding="utf-8") as fh:
                    self.network_text = fh.read()
            except OSError as exc:
                raise ConfigError(f"cannot read network file: {exc}")
            parse_network(self.network_text, r=0.0)  # syntax check up front

    def build(self, r):
        if self.preset:
            p = dict(self.params)
            if r is not None:
                p["r"] = r
            try:
                return presets.build(presets.PresetSpec(self.preset, p))
            except InvalidArgument as exc:
                raise ConfigError(str(exc))
        state = ge.run_network(parse_network(self.network_text, r))
        readout = self.params.get("readout", "quadrature")
        if readout == "quadrature":
            m = ge.quadrature_moment_set(state)
            quad = m
        elif readout == "stokes":
            alpha_v = parse_number(self.params.get("alpha_v", "1"))
            m = ge.linearized_stokes_moments(state, alpha_v=alpha_v)
            quad = presets._pq_moments(state)
        else:
            raise ConfigError(f"readout must be 'quadrature' or 'stokes', got {readout!r}")
        return presets.PresetResult("network", m, state, quad, None, {"r": r})


def _flag(params, name, default=False):
    if name not in params:
        return default
    try:
        return presets._flag(params[name])
    except ValueError:
        raise ConfigError(f"parameter {name!r} must be true or false")


def _gains_for(res: presets.PresetResult, flat, N):
    if flat is not None:
        if len(flat) != 2 * N:
            raise ConfigError(f"--gains needs {2 * N} values (h_1..h_{N}, g_1..g_{N}), got {len(flat)}")
        return C.GainVector.from_flat(flat)
    if res.default_gains is not None and res.default_gains.N == N:
        return res.default_gains
    return C.GainVector.unit(N)


def evaluate_one(cid, res: presets.PresetResult, gains_flat, optimize, params, source, r):
    large_spin = _flag(params, "large_spin")
    if cid == "c5":
        if "qudit_state" not in res.info:
            raise ConfigError("c5 needs a qubit preset (qubit_ghz or qubit_w)")
        return qe.criterion5_evaluate(res.info["qudit_state"], res.info["strategy"])
    if cid in ("fadel", "bec_split"):
        pair = (parse_number(params.get("gz", "-1")), parse_number(params.get("gy", "1")))
        if cid == "fadel":
            m = res.info.get("parent", res.moments)
            if m.N != 2:
                raise ConfigError("fadel needs a two-cloud moment set (bec_split preset)")
            return C.fadel_bipartite(m, pair)
        if res.moments.N != 3:
            raise ConfigError("bec_split needs three clouds")
        return C.criterion3_bec_split(res.moments, pair, large_spin)
    m = res.moments_for(cid)
    N = m.N
    if cid in VLF_IDS:
        free = None if gains_flat is None else _gains_for(res, gains_flat, N).g
        if cid == "c10":
            if N != 4:
                raise ConfigError("c10 needs four sites")
            return C.criterion10_fourpartite(m, free)
        if N != 3:
            raise ConfigError(f"{cid} needs three sites")
        variant = params.get("variant", "I+II")
        fn = {"c2": lambda: C.criterion2_vlf_sum(m, free),
              "c2b": lambda: C.criterion2b_vlf_sum(m, free, variant),
              "c4": lambda: C.criterion4_vlf_product(m, free),
              "c4b": lambda: C.criterion4b_vlf_product(m, free, variant)}[cid]
        return fn()
    if cid in ("c1", "c3") and N != 3:
        raise ConfigError(f"{cid} needs three sites; use c6/c7 (or c8/c9 for N=4)")
    if cid in ("c8", "c9") and N != 4:
        raise ConfigError(f"{cid} needs four sites")
    if optimize:
        mode = "product" if cid in ("c3", "c7", "c9", "cv_product") else "sum"
        spec = go.OptimizationSpec(objective=f"{mode}_ratio", criterion_id=cid)
        gains = go.optimize_gains(lambda rr: source.build(rr).moments_for(cid), r, spec).gains
    else:
        gains = _gains_for(res, gains_flat, N)
    if cid == "c6":
        return C.criterion6to9_npartite(m, gains, "sum", large_spin, criterion_id="c6")
    if cid == "c7":
        return C.criterion6to9_npartite(m, gains, "product", large_spin, criterion_id="c7")
    return go._CRITERION_FN[cid](m, gains, large_spin)


def _r_values(args, required):
    if args.r is not None and args.r_grid is not None:
        raise ConfigError("give --r or --r-grid, not both")
    if args.r is not None:
        values = [parse_number(args.r)]
    elif args.r_grid is not None:
        values = parse_list(args.r_grid)
    else:
        return [None] if not required else []
    if any(v < 0 for v in values):
        raise ConfigError("r must be >= 0")
    return values


def cmd_evaluate(args):
    params = parse_params(args.param)
    source = Source(args, params)
    criteria_ids = [c.strip() for c in (args.criteria or "").split(",") if c.strip()]
    if not criteria_ids:
        raise ConfigError("--criteria must list at least one criterion")
    unknown = [c for c in criteria_ids if c not in C.CRITERIA_IDS]
    if unknown:
        raise ConfigError(f"unknown criteria {unknown}; choose from {', '.join(C.CRITERIA_IDS)}")
    optimize = args.gains is not None and args.gains.strip().lower() == "optimize"
    gains_flat = None if args.gains is None or optimize else parse_list(args.gains)
    rows = []
    for r in _r_values(args, required=False):
        res = source.build(r)
        for cid in criteria_ids:
            result = evaluate_one(cid, res, gains_flat, optimize, params, source, r)
            rec = result.to_record()
            flags = {k: v for k, v in rec.items() if k not in EVALUATE_COLUMNS}
            rows.append({
                "r": r, "criterion_id": cid, "lhs": rec["lhs"], "rhs": rec["rhs"], "margin": rec["margin"],
                "verdict": rec["verdict"], "conditional": rec["conditional"], "validity": rec["validity"],
                "argmin_bipartitions": rec["argmin_bipartitions"],
                "flags": ";".join(f"{k}={_cell(v)}" for k, v in sorted(flags.items())),
            })
    return rows, EVALUATE_COLUMNS, EXIT_OK


def cmd_optimize(args):
    params = parse_params(args.param)
    source = Source(args, params)
    cid = (args.criteria or "c1").split(",")[0].strip()
    if cid not in go._CRITERION_FN:
        raise ConfigError(f"criterion {cid!r} has no gain optimization; choose from {', '.join(go._CRITERION_FN)}")
    mode = "product" if cid in ("c3", "c7", "c9", "cv_product") else "sum"
    spec = go.OptimizationSpec(objective=params.get("objective", f"{mode}_ratio"), criterion_id=cid)
    r_values = _r_values(args, required=True)
    rows = go.sweep(lambda r: source.build(r).moments_for(cid), r_values, spec, _flag(params, "large_spin"))
    return [row.to_record() for row in rows], OPTIMIZE_COLUMNS, EXIT_OK


def cmd_verify(args):
    if args.trials is not None and args.trials < 1:
        raise ConfigError("--trials must be >= 1")
    trials = 2000 if args.trials is None else args.trials
    seed = 0 if args.seed is None else args.seed
    ids = [c.strip() for c in (args.criteria or "").split(",") if c.strip()] or list(oracle.SOUNDNESS_SCOPE)
    unknown = [c for c in ids if c not in oracle.SOUNDNESS_SCOPE]
    if unknown:
        raise ConfigError(f"no soundness scan for {unknown}; choose from {', '.join(oracle.SOUNDNESS_SCOPE)}")
    rows, failed = [], False
    for cid in ids:
        scan = oracle.soundness_scan(cid, trials=trials, seed=seed)
        failed |= not scan.passed
        rows.append({"criterion_id": cid, "trials": trials, "seed": seed, "worst_margin": float(scan.worst_margin),
                     "worst_trial": scan.worst_trial, "status": "PASS" if scan.passed else "FAIL"})
    return rows, VERIFY_COLUMNS, EXIT_VERIFY if failed else EXIT_OK


def cmd_planar(args):
    grid = args.j_grid or "1/2"
    rows = []
    for tok in grid.split(","):
        if not tok.strip():
            continue
        try:
            J = Fraction(tok.strip())
        except ValueError:
            raise ConfigError(f"not a spin value: {tok!r}")
        try:
            res = planar_bound(J, units="pauli" if args.pauli else "spin")
        except InvalidArgument as exc:
            raise ConfigError(str(exc))
        rows.append({"J": float(J), "C_J": float(res.C_J), "iterations": int(res.iterations),
                     "residual": float(res.residual)})
    return rows, PLANAR_COLUMNS, EXIT_OK


# --------------------------------------------------------------------------
# entry point


def build_parser():
    parser = argparse.ArgumentParser(prog="spinwitness", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, source=True):
        if source:
            p.add_argument("--preset", help=f"one of: {', '.join(presets.PRESETS)}")
            p.add_argument("--network", help="path to a network description file")
            p.add_argument("--r", help="single squeezing parameter")
            p.add_argument("--r-grid", dest="r_grid", help="comma-separated squeezing parameters")
            p.add_argument("--param", action="append", metavar="KEY=VALUE", help="preset or readout parameter")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), default=None,
                       help="output format (default: from --out suffix, else csv)")
        p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("evaluate", help="evaluate criteria on a preset or network")
    common(p)
    p.add_argument("--gains", help="h_1..h_N,g_1..g_N or 'optimize'")
    p.add_argument("--criteria", required=True, help=f"comma-separated ids from: {', '.join(C.CRITERIA_IDS)}")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("optimize", help="minimize the bound ratio over symmetric gains")
    common(p)
    p.add_argument("--criteria", default="c1", help="criterion whose ratio is minimized (default c1)")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("verify", help="sample random biseparable states and check each bound")
    common(p, source=False)
    p.add_argument("--criteria", help="comma-separated ids (default: all)")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("planar", help="tabulate the planar uncertainty bound C_J")
    common(p, source=False)
    p.add_argument("--j-grid", dest="j_grid", help="comma-separated spins, e.g. 1/2,1,3/2 (default 1/2)")
    p.add_argument("--pauli", action="store_true", help="report in Pauli units (spin-1/2 only gives 1)")
    p.set_defaults(func=cmd_planar)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    fmt = args.format or ("json" if args.out and args.out.endswith(".json") else "csv")
    try:
        rows, columns, code = args.func(args)
    except (ConfigError, InvalidArgument, MissingData) as exc:
        print(f"spinwitness: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceFailure, TruncationError, DegenerateMeasurement, DegenerateObjective,
            np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"spinwitness: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    _emit(render(rows, columns, fmt), args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
