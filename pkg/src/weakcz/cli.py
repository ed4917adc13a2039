"""Command-line front end.

Every run reads an optional flat JSON config (``--config``); any field can be
overridden by the flag of the same name (dashes for underscores).  Outputs go
to ``--out`` and are byte-stable for a fixed config.

Exit codes: 0 success / all asserted entries pass, 1 bad config,
2 kernel evaluation error, 3 a ledger entry failed, 4 tuple budget exceeded.
"""
from __future__ import annotations

import argparse
from dataclasses import dataclass, field, fields
import json
import math
import os
import re
import sys
from typing import Sequence

import numpy as np

from . import __version__
from .decomposition import BallRoomError, build_ball_system
from .dyadic import whitney, whitney_check
from .grid import CellSet, GridFunction, GridSpec, cells_in_box, l1_norm
from .io import (cubes_to_json, distribution_csv, function_from_json, function_from_text,
                 function_to_text, operator_csv)
from .kernel import KernelEvaluationError, SamplerConfig, check_size, check_smoothness, kernel_by_name
from .maximal import maximal_function, weak_11_constant
from .operator import AtomicMeasure, BudgetExceededError, DEFAULT_BUDGET, TruncationPolicy, apply_slots
from .verify.ledger import InequalityLedger, dumps
from .verify.lemma1 import CoverSet, doubled_union, lemma1_sum, sup_inf_ratio
from .verify.quasinorm import distribution_function
from .verify.theorem1 import theorem1_ledger
from .verify.theorem2 import HypothesisError, LedgerConfig, theorem2_ledger

EXIT_OK, EXIT_CONFIG, EXIT_EVAL, EXIT_ASSERT, EXIT_BUDGET = 0, 1, 2, 3, 4


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Flat run configuration; field names double as flag and JSON key names."""

    kernel: str = "homogeneous"
    n: int = 1
    m: int = 2
    c: float = 1.0
    j: int = 1
    h: str = "2^-8"
    box: list = field(default_factory=lambda: [-8.0, 8.0])
    eps: float | None = None
    t: float = 4.0
    t_min: float = 2.0 ** -6
    t_max: float = 2.0 ** 6
    t_count: int = 64
    N: list = field(default_factory=lambda: [4, 16, 64])
    seed: int = 0
    samples: int = 512
    budget: float = DEFAULT_BUDGET
    out: str = "."
    scenario: str = "theorem2"
    sup: str = "pointwise"
    set: list = field(default_factory=lambda: [[0.0, 1.0]])
    inputs: list = field(default_factory=list)
    atoms: list = field(default_factory=list)
    targets: list = field(default_factory=list)

    # derived views ----------------------------------------------------------
    def h_value(self) -> float:
        return parse_h(self.h)

    def grid(self) -> GridSpec:
        lower, upper = parse_box(self.box, self.n)
        try:
            return GridSpec.from_box(lower, upper, self.h_value())
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def eps_cells(self) -> float:
        h = self.h_value()
        eps = 2 * h if self.eps is None else float(self.eps)
        if eps < h / 2:
            raise ConfigError(f"eps = {eps!r} is below h/2 = {h / 2!r}")
        return eps / h

    def t_grid(self) -> np.ndarray:
        if self.t_count < 1:
            raise ConfigError("t-grid is empty (t_count must be at least 1)")
        if not 0 < self.t_min <= self.t_max:
            raise ConfigError("need 0 < t_min <= t_max")
        if self.t_count == 1:
            return np.array([float(self.t_min)])
        if self.t_min == self.t_max:
            raise ConfigError("t_min = t_max with more than one point")
        return np.geomspace(self.t_min, self.t_max, self.t_count)

    def validate(self) -> None:
        if self.n < 1 or self.m < 1:
            raise ConfigError("n and m must be positive")
        if not self.budget > 0:
            raise ConfigError("budget must be positive")
        if self.sup not in ("pointwise", "global"):
            raise ConfigError("sup must be 'pointwise' or 'global'")
        self.grid()
        self.eps_cells()

    def ledger_config(self) -> LedgerConfig:
        return LedgerConfig(eps_cells=self.eps_cells(), budget=float(self.budget), sup=self.sup,
                            seed=int(self.seed))

    def kernel_spec(self):
        try:
            return kernel_by_name(self.kernel, n=self.n, m=self.m, c=self.c, j=self.j)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


_FIELDS = {f.name: f for f in fields(RunConfig)}


def parse_h(v) -> float:
    """``2^-8``, ``2**-8`` or a decimal; must be a power of two."""
    s = str(v).strip()
    mt = re.fullmatch(r"2\s*(\^|\*\*)\s*(-?\d+)", s)
    try:
        h = 2.0 ** int(mt.group(2)) if mt else float(s)
    except ValueError:
        raise ConfigError(f"cannot read h = {v!r}") from None
    if not (h > 0 and math.isfinite(h)) or math.frexp(h)[0] != 0.5:
        raise ConfigError(f"h = {v!r} is not a power of two")
    return h


def parse_box(box, n: int):
    arr = np.asarray(box, dtype=float).reshape(-1)
    if arr.size != 2 * n:
        raise ConfigError(f"box needs {2 * n} numbers (lower corner then upper corner)")
    return arr[:n], arr[n:]


def _floats(text: str) -> list:
    return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]


def _parse_flag(name: str, text: str):
    """Turn a flag string into the JSON type of field ``name``."""
    if name in ("box", "N"):
        vals = _floats(text)
        return [int(v) for v in vals] if name == "N" else vals
    if name == "set":
        return [_floats(part) for part in text.split(";") if part.strip()]
    if name in ("inputs", "atoms"):
        return [part.strip() for part in text.split("|") if part.strip()]
    if name == "targets":
        return _floats(text)
    if name == "eps":
        return None if text.lower() == "none" else float(text)
    if name == "h":
        return text
    default = _FIELDS[name].default
    if isinstance(default, bool):
        return text.lower() in ("1", "true", "yes")
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    return text


def load_config(args: argparse.Namespace) -> RunConfig:
    data = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a flat JSON object")
        unknown = sorted(set(data) - set(_FIELDS))
        if unknown:
            raise ConfigError(f"unknown config fields: {', '.join(unknown)}")
    for name in _FIELDS:
        v = getattr(args, name, None)
        if v is not None:
            try:
                data[name] = _parse_flag(name, v)
            except ValueError:
                raise ConfigError(f"cannot read --{name.replace('_', '-')} {v!r}") from None
    try:
        cfg = RunConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    for name in ("n", "m", "j", "t_count", "seed", "samples"):
        setattr(cfg, name, int(getattr(cfg, name)))
    for name in ("c", "t", "t_min", "t_max", "budget"):
        setattr(cfg, name, float(getattr(cfg, name)))
    cfg.validate()
    return cfg


# input specs -----------------------------------------------------------------

def parse_function(spec: str, grid: GridSpec) -> GridFunction:
    """``zero``, ``indicator:lo..,hi..[:value]`` or a path to a JSON/text grid function."""
    spec = spec.strip()
    if spec == "zero":
        return grid.zeros()
    if spec.startswith("indicator:"):
        parts = spec.split(":")[1:]
        lower, upper = parse_box(_floats(parts[0]), grid.n)
        value = float(parts[1]) if len(parts) > 1 else 1.0
        return GridFunction.indicator(grid, lower, upper, value)
    if os.path.exists(spec):
        with open(spec) as fh:
            text = fh.read()
        F = function_from_json(json.loads(text)) if text.lstrip().startswith("{") else \
            function_from_text(text)
        if F.grid != grid:
            raise ConfigError(f"grid function {spec} does not match the configured grid")
        return F
    raise ConfigError(f"cannot read function spec {spec!r}")


def parse_atoms(spec: str, n: int) -> AtomicMeasure:
    """``x1,..,xn:w;x1,..,xn:w``."""
    pts, wts = [], []
    for item in spec.split(";"):
        if not item.strip():
            continue
        pos, _, w = item.partition(":")
        p = _floats(pos)
        if len(p) != n or not w:
            raise ConfigError(f"atom {item!r} needs {n} coordinates and a weight")
        pts.append(p)
        wts.append(float(w))
    if not pts:
        raise ConfigError("empty atom list")
    return AtomicMeasure(pts, wts)


def parse_slot(spec: str, grid: GridSpec):
    if spec.startswith("atoms:"):
        return parse_atoms(spec[len("atoms:"):], grid.n)
    return parse_function(spec, grid)


def set_from_boxes(boxes, grid: GridSpec) -> CellSet:
    mask = np.zeros(grid.shape, dtype=bool)
    for b in boxes:
        lower, upper = parse_box(b, grid.n)
        mask |= cells_in_box(grid, lower, upper).mask
    return CellSet(grid, mask)


# commands --------------------------------------------------------------------

def _write(cfg: RunConfig, name: str, text: str) -> str:
    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, name)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def cmd_kernel_check(cfg: RunConfig) -> int:
    k = cfg.kernel_spec()
    scfg = SamplerConfig(samples=cfg.samples, seed=cfg.seed)
    size = check_size(k, scfg)
    sm = check_smoothness(k, scfg)
    report = {
        "kernel": k.name, "n": k.n, "m": k.m, "C_K": k.C_K, "delta": k.delta,
        "norm": k.norm, "norm_note": k.norm_note, "is_known_bounded": k.is_known_bounded,
        "size_estimate": size,
        "smoothness": {"delta": sm.delta, "constant": sm.constant,
                       "variants": {v: list(p) for v, p in sm.variants.items()},
                       "infinitely_smooth": sm.infinitely_smooth},
        "seed": cfg.seed, "samples": cfg.samples,
    }
    _write(cfg, "kernel_check.json", dumps(report))
    return EXIT_OK


def cmd_whitney(cfg: RunConfig) -> int:
    grid = cfg.grid()
    s = set_from_boxes(cfg.set, grid)
    if s.is_empty():
        raise ConfigError("the set is empty on this grid")
    wr = whitney(s)
    chk = whitney_check(s, wr.cubes)
    chk["remainder_cells"] = wr.remainder.count
    chk["cube_count"] = len(wr.cubes)
    _write(cfg, "cubes.json", dumps(cubes_to_json(wr.cubes)))
    _write(cfg, "whitney_check.json", dumps(chk))
    return EXIT_OK


def cmd_maximal(cfg: RunConfig) -> int:
    grid = cfg.grid()
    spec = cfg.inputs[0] if cfg.inputs else "indicator:" + ",".join(str(v) for v in cfg.set[0])
    f = parse_function(spec, grid)
    Mf = maximal_function(f)
    _write(cfg, "maximal.txt", function_to_text(Mf))
    _write(cfg, "maximal_report.json", dumps({"weak_11_constant": weak_11_constant(f, Mf),
                                              "l1_norm": l1_norm(f)}))
    return EXIT_OK


def cmd_apply(cfg: RunConfig) -> int:
    grid = cfg.grid()
    k = cfg.kernel_spec()
    if len(cfg.inputs) != k.m:
        raise ConfigError(f"kernel takes {k.m} inputs, got {len(cfg.inputs)}")
    slots = [parse_slot(s, grid) for s in cfg.inputs]
    if cfg.targets:
        x = np.asarray(cfg.targets, dtype=float).reshape(-1, grid.n)
    else:
        x = grid.centers()
    vals = apply_slots(k, slots, x, TruncationPolicy(eps_cells=cfg.eps_cells()),
                       budget=cfg.budget)
    _write(cfg, "apply.csv", operator_csv(x, vals.values, vals.tail_bound))
    return EXIT_OK


def cmd_ball_system(cfg: RunConfig) -> int:
    grid = cfg.grid()
    if not cfg.atoms:
        raise ConfigError("ball-system needs --atoms")
    nus = [parse_atoms(a, grid.n) for a in cfg.atoms]
    try:
        system = build_ball_system(nus, cfg.t, grid, max(cfg.m, len(nus)))
    except BallRoomError as exc:
        raise ConfigError(str(exc)) from None
    _write(cfg, "ball_system.json", dumps(system.to_json()))
    return EXIT_OK


def _lemma1_ledger(cfg: RunConfig) -> InequalityLedger:
    grid = cfg.grid()
    k = cfg.kernel_spec()
    colls = []
    for b in cfg.set:
        lower, upper = parse_box(b, grid.n)
        cells = cells_in_box(grid, lower, upper)
        if cells.is_empty():
            raise ConfigError(f"set {b} holds no cells")
        center = (lower + upper) / 2
        radius = float(np.linalg.norm(upper - lower) / 2)
        colls.append([CoverSet.from_cells(cells, center, radius)])
    if len(colls) == 1 and k.m > 1 and not (k.m == 2 and grid.n == 1):
        colls = colls * k.m
    outer = doubled_union(colls).complement()
    res = lemma1_sum(colls, k, outer, eps_cells=cfg.eps_cells(), sup=cfg.sup)
    other = "global" if cfg.sup == "pointwise" else "pointwise"
    alt = lemma1_sum(colls, k, outer, eps_cells=cfg.eps_cells(), sup=other)
    led = InequalityLedger()
    led.check("lemma1_ratio", "lemma1_ratio", sup_inf_ratio(colls, outer), 3.0, 1e-12)
    led.constants = {"sum": res.total, "ratio": res.ratio, "omega_measure": res.omega_measure,
                     f"sum_{other}": alt.total, f"ratio_{other}": alt.ratio,
                     "probes_skipped": res.probes_skipped, "probes_total": res.probes_total}
    led.provenance = {"seed": cfg.seed, "h": grid.h, "box": [grid.lower.tolist(), grid.upper.tolist()],
                      "eps": cfg.eps_cells() * grid.h, "N": [len(c) for c in colls],
                      "kernel": k.name, "sup": cfg.sup}
    return led


def cmd_verify(cfg: RunConfig) -> int:
    grid = cfg.grid()
    k = cfg.kernel_spec()
    lcfg = cfg.ledger_config()
    if cfg.scenario == "theorem1":
        specs = cfg.inputs or ["indicator:0,1"] * k.m
        fs = [parse_function(s, grid) for s in specs]
        ts = cfg.t_grid()
        led = theorem1_ledger(fs, ts, k, cfg.N, config=lcfg, allow_unbounded=True)
        from .operator import apply_functions
        Tf = apply_functions(k, fs, grid.centers(), lcfg.policy, budget=cfg.budget,
                             on_singular="nan")
        F = GridFunction(grid, np.nan_to_num(np.asarray(Tf.values)).reshape(grid.shape))
        _write(cfg, "distribution.csv", distribution_csv(distribution_function(F, ts)))
    elif cfg.scenario == "theorem2":
        if not cfg.atoms:
            raise ConfigError("theorem2 needs --atoms (one list per atomic slot)")
        nus = [parse_atoms(a, grid.n) for a in cfg.atoms]
        fs = [parse_function(s, grid) for s in cfg.inputs]
        try:
            led = theorem2_ledger(nus, fs, cfg.t, k, grid=grid, config=lcfg)
        except (HypothesisError, BallRoomError) as exc:
            raise ConfigError(str(exc)) from None
    elif cfg.scenario == "lemma1":
        led = _lemma1_ledger(cfg)
    else:
        raise ConfigError(f"unknown scenario {cfg.scenario!r}")
    _write(cfg, f"ledger_{cfg.scenario}.json", led.dumps())
    return EXIT_OK if led.all_pass else EXIT_ASSERT


COMMANDS = {
    "kernel-check": (cmd_kernel_check, "sampled size and smoothness checks of a kernel"),
    "whitney": (cmd_whitney, "Whitney cubes of a union of boxes (--set)"),
    "maximal": (cmd_maximal, "uncentered maximal function of an input (--inputs)"),
    "apply": (cmd_apply, "operator values at targets (--inputs, --targets)"),
    "ball-system": (cmd_ball_system, "disjointified balls for atoms (--atoms, --t)"),
    "verify": (cmd_verify, "inequality ledger for a scenario (theorem1, theorem2, lemma1)"),
}

_HELP = {
    "config": "flat JSON config file",
    "kernel": "homogeneous, tensor-hilbert or riesz",
    "h": "cell width, a power of two (e.g. 2^-8)",
    "box": "lower corner then upper corner, comma separated",
    "eps": "truncation radius (absolute, at least h/2; default 2h)",
    "N": "comma separated truncation levels",
    "set": "boxes 'lo..,hi..' separated by ';'",
    "inputs": "slot specs separated by '|': zero, indicator:lo..,hi..[:v], atoms:x:w;.., or a file",
    "atoms": "atom lists separated by '|', each 'x:w;x:w'",
    "targets": "target coordinates, comma separated (default: all cell centers)",
    "sup": "sup placement in the Hormander sum: pointwise or global",
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="weakcz", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"weakcz {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_, description=help_)
        sp.add_argument("--version", action="version", version=f"weakcz {__version__}")
        sp.add_argument("--config", help=_HELP["config"])
        for f in fields(RunConfig):
            sp.add_argument("--" + f.name.replace("_", "-"), dest=f.name, default=None,
                            help=_HELP.get(f.name))
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) if exc.code in (0, None) else EXIT_CONFIG
    func = COMMANDS[args.command][0]
    try:
        cfg = load_config(args)
        return func(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceededError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except KernelEvaluationError as exc:
        print(f"kernel evaluation error: {exc}", file=sys.stderr)
        return EXIT_EVAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
