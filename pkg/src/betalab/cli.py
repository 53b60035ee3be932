"""Command-line front end.

Every command reads its settings from flags and optionally a JSON config
file (``--config``); flags win over file values.  Enumerations print one JSON
object per line, scans print a JSON summary or a CSV table.

Exit codes: 0 success, 2 validation error, 3 cap or tolerance failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field, fields
from typing import Dict, List, Optional, Sequence

from betalab import measure, param, shift
from betalab.dyadic import Dyadic, Tolerance, to_dyadic
from betalab.errors import (
    CapExceeded,
    DepthExhausted,
    HypothesisViolated,
    NotInOmega,
    ParseError,
    RunFailed,
    SlopeTooSmall,
    ToleranceUnreachable,
    UnsupportedForm,
)
from betalab.expansion import expand, expansion_of_one, star_stream
from betalab.words import Word

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_LIMIT = 3

INPUT_BITS = 64

DEFAULTS = {
    "n": None,
    "bits": 64,
    "cap": None,
    "window": None,
    "seed": None,
    "workers": 1,
    "out": None,
    "format": "json",
    "samples": 500,
    "n_max": 1 << 14,
    "lam": None,
    "n_range": None,
    "strict": True,
    "counts": False,
    "target": None,
    "radius": None,
    "targets": None,
    "phi": None,
    "L": None,
    "l": None,
    "phi_n": None,
    "w": None,
    "x": None,
    "beta": None,
}


@dataclass
class RunConfig:
    """A fully merged command configuration; numbers stay as decimal strings."""

    command: str
    x: Optional[str] = None
    beta: Optional[str] = None
    n: Optional[int] = None
    window: Optional[str] = None
    bits: int = 64
    cap: Optional[int] = None
    seed: Optional[int] = None
    workers: int = 1
    out: Optional[str] = None
    format: str = "json"
    options: Dict[str, object] = field(default_factory=dict)

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        core = {k: v for k, v in obj.items() if k in names and k != "options"}
        opts = dict(obj.get("options", {}))
        opts.update({k: v for k, v in obj.items() if k not in names})
        return cls(options=opts, **core)

    def get(self, key: str):
        if hasattr(self, key) and key != "options":
            return getattr(self, key)
        return self.options.get(key, DEFAULTS.get(key))

    def validate(self):
        if self.bits < 1:
            raise ParseError("--bits must be positive")
        if self.n is not None and self.n < 1:
            raise ParseError("--n must be positive")
        if self.cap is not None and self.cap < 1:
            raise ParseError("--cap must be positive")
        if self.workers < 1:
            raise ParseError("--workers must be positive")
        if self.seed is not None and self.seed < 0:
            raise ParseError("--seed must be nonnegative")
        if self.format not in ("json", "csv"):
            raise ParseError("--format must be json or csv")
        for key in ("x", "beta"):
            if getattr(self, key) is not None:
                to_dyadic(getattr(self, key))


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(p: argparse.ArgumentParser, *names: str):
    help_text = {
        "x": "point x in (0, 1], decimal",
        "beta": "base beta > 1, decimal",
        "n": "word length / order",
        "window": "parameter window lo,hi (default: 1+2^-8, ceil(1/x)+2)",
        "bits": "tolerance bits for enclosures (default: 64)",
        "cap": "maximum number of enumerated cylinders (default: 10^7 shift, 10^6 parameter)",
        "seed": "random seed (required for scans)",
        "workers": "worker processes (default: 1)",
        "w": "digit word, e.g. 101 or [1,0,12]",
    }
    types = {"n": int, "bits": int, "cap": int, "seed": int, "workers": int}
    for name in names:
        p.add_argument(f"--{name}", type=types.get(name, str), default=None, help=help_text[name])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="betalab", description="Beta-expansion cylinders and hit experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    def cmd(name: str, help_text: str, *common: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", default=None, help="JSON config file; flags override its values")
        p.add_argument("--out", default=None, help="output path (scans: prefix for .csv and .json); default stdout")
        p.add_argument("--format", choices=("json", "csv"), default=None, help="output format (default: json)")
        _add_common(p, *common)
        return p

    cmd("expand", "greedy digits of x in base beta and the remainder T^n x", "x", "beta", "n")
    cmd("star", "first n digits of the expansion of 1 (periodic form when finite)", "beta", "n")
    cmd("admissible", "Parry admissibility of a word", "w", "beta")
    p = cmd("sigma", "all admissible words of length n with their cylinders", "beta", "n", "cap")
    p.add_argument("--counts", action="store_true", default=None, help="print only the count report")
    p = cmd("xi", "full words of length n with their cylinders", "beta", "n", "cap")
    p.add_argument("--counts", action="store_true", default=None, help="print only the count report")
    cmd("omega", "parameter cylinders of order n meeting a window", "x", "n", "window", "bits", "cap")
    cmd("full-check", "fullness of a word: parameter side with --x, shift side with --beta", "w", "x", "beta", "bits")
    p = cmd("proportion", "proportion of full cylinders against a lower bound lambda", "beta", "cap")
    p.add_argument("--lam", default=None, help="lambda in (0, 1)")
    p.add_argument("--n-range", dest="n_range", default=None, help="orders as a..b")
    p.add_argument("--no-strict", dest="strict", action="store_false", default=None,
                   help="report rows even when the premise on lambda fails (default: strict)")
    p = cmd("slice", "the part of a parameter cylinder where |f_w - target| < radius", "w", "x", "bits")
    p.add_argument("--target", default=None, help="target in [0, 1]")
    p.add_argument("--radius", default=None, help="radius phi(n) > 0")
    for name, what in (("scan-e", "hit scan over bases in a window"), ("scan-r", "recurrence scan over points at a fixed base")):
        p = cmd(name, what, *(("x", "window") if name == "scan-e" else ("beta",)), "seed", "workers")
        p.add_argument("--phi", default=None, help="rate: const:c | power:c,s | geom:c,q")
        p.add_argument("--samples", type=int, default=None, help="number of samples (default: 500)")
        p.add_argument("--n-max", dest="n_max", type=int, default=None, help="orbit length (default: 16384)")
        if name == "scan-e":
            p.add_argument("--targets", default=None, help="x_n: const:y | periodic:y1,y2 | table:y1,y2,...")
        else:
            p.add_argument("--L", default=None, help="affine map a,b (L(x) = a*x + b clipped to [0, 1])")
    p = cmd("beta-star", "convergence threshold of sum beta^-l_n", )
    p.add_argument("--l", default=None, help="l_n: log:b | l:a,b,c | const:c | power:c,s | geom:c,q")
    p = cmd("slice-r", "recurrence slice of a shift cylinder for affine L", "w", "beta")
    p.add_argument("--L", default=None, help="affine map a,b")
    p.add_argument("--phi-n", dest="phi_n", default=None, help="phi(n) > 0")
    cmd("structural", "cylinder inequalities and memberships on a window", "x", "n", "window", "bits", "cap")
    return parser


def merge_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                values.update(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(f"--config: {exc}") from None
        values.pop("command", None)
    for key, val in vars(args).items():
        if key in ("config", "command") or val is None:
            continue
        values[key] = val
    cfg = RunConfig.from_json({"command": args.command, **values})
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# helpers


def _need(cfg: RunConfig, key: str):
    v = cfg.get(key)
    if v is None:
        raise UsageError(f"--{key.replace('_', '-')} is required for {cfg.command}")
    return v


def _dy(cfg: RunConfig, key: str) -> Dyadic:
    return to_dyadic(str(_need(cfg, key)), INPUT_BITS)


def _window(cfg: RunConfig, x: Optional[Dyadic] = None):
    text = cfg.window
    if text is None:
        if x is None:
            raise UsageError("--window is required")
        return param.default_window(x)
    if isinstance(text, (list, tuple)):
        parts = [str(v) for v in text]
    else:
        parts = str(text).split(",")
    if len(parts) != 2:
        raise ParseError("--window must be lo,hi")
    lo, hi = (to_dyadic(p, INPUT_BITS) for p in parts)
    if not 1 < lo < hi:
        raise ParseError("--window must satisfy 1 < lo < hi")
    return lo, hi


def _n_range(text) -> range:
    if isinstance(text, (list, tuple)) and len(text) == 2:
        a, b = text
    else:
        sep = ".." if ".." in str(text) else "-"
        try:
            a, b = (int(v) for v in str(text).split(sep))
        except ValueError:
            raise ParseError("--n-range must be a..b") from None
    if not 1 <= a <= b:
        raise ParseError("--n-range must satisfy 1 <= a <= b")
    return range(int(a), int(b) + 1)


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=False, separators=(", ", ": "))


class Emitter:
    def __init__(self, path: Optional[str], stream=None):
        self.path = path
        self.lines: List[str] = []
        self.stream = stream or sys.stdout

    def line(self, obj):
        self.lines.append(obj if isinstance(obj, str) else _dumps(obj))

    def flush(self):
        text = "".join(line if line.endswith("\n") else line + "\n" for line in self.lines)
        if self.path:
            with open(self.path, "w") as fh:
                fh.write(text)
        else:
            self.stream.write(text)


# ---------------------------------------------------------------------------
# commands


def _cmd_expand(cfg: RunConfig, out: Emitter):
    res = expand(_dy(cfg, "x"), _dy(cfg, "beta"), _need(cfg, "n"))
    out.line(res.to_json())


def _cmd_star(cfg: RunConfig, out: Emitter):
    beta = _dy(cfg, "beta")
    n = _need(cfg, "n")
    star = star_stream(beta, max(n, 1) + shift.GUARD_DIGITS)
    one = expansion_of_one(beta, max(n, 1) + shift.GUARD_DIGITS)
    out.line({"beta": beta.to_json(), "digits": str(star.take(n)), "expansion_of_one": str(one), "finite": one.complete})


def _cmd_admissible(cfg: RunConfig, out: Emitter):
    w = Word(_need(cfg, "w"))
    beta = _dy(cfg, "beta")
    out.line({"w": str(w), "admissible": shift._admissible_escalating(w, beta, len(w) + shift.GUARD_DIGITS)})


def _cmd_sigma(cfg: RunConfig, out: Emitter, full_only: bool = False):
    beta = _dy(cfg, "beta")
    cyl, report = shift.enumerate_sigma(beta, _need(cfg, "n"), cfg.cap or shift.DEFAULT_CAP)
    if cfg.get("counts"):
        out.line(report.to_json())
        return
    for c in cyl:
        if c.is_full or not full_only:
            out.line(c.to_json())


def _cmd_omega(cfg: RunConfig, out: Emitter):
    x = _dy(cfg, "x")
    cyl = param.enumerate_param_window(x, _need(cfg, "n"), _window(cfg, x), Tolerance(cfg.bits), cfg.cap or param.DEFAULT_PARAM_CAP)
    for c in cyl:
        out.line(c.to_json())


def _cmd_full_check(cfg: RunConfig, out: Emitter):
    w = Word(_need(cfg, "w"))
    if cfg.x is not None:
        full, margin = param.is_full_param(w, _dy(cfg, "x"), Tolerance(cfg.bits), with_margin=True)
        out.line({"w": str(w), "side": "parameter", "full": full, "probe_margin": None if margin is None else margin.to_json()})
    elif cfg.beta is not None:
        out.line({"w": str(w), "side": "shift", "full": shift.is_full_word(w, _dy(cfg, "beta"))})
    else:
        raise UsageError("full-check needs --x or --beta")


def _cmd_proportion(cfg: RunConfig, out: Emitter):
    rep = shift.full_proportion_report(
        _dy(cfg, "beta"), _dy(cfg, "lam"), _n_range(_need(cfg, "n_range")), strict=bool(cfg.get("strict")), cap=cfg.cap or shift.DEFAULT_CAP
    )
    out.line({"premise": rep.premise.to_json(), "informational": rep.informational})
    for row in rep.rows:
        out.line(row.to_json())


def _cmd_slice(cfg: RunConfig, out: Emitter):
    tol = Tolerance(cfg.bits)
    x = _dy(cfg, "x")
    cyl = param.param_cylinder(Word(_need(cfg, "w")), x, tol)
    out.line(param.phi_slice(cyl, x, _dy(cfg, "target"), _dy(cfg, "radius"), tol).to_json())


def _scan_config(cfg: RunConfig) -> measure.ScanConfig:
    seed = cfg.seed
    if seed is None:
        raise UsageError(f"--seed is required for {cfg.command}")
    phi = measure.RateSpec.parse(_need(cfg, "phi"))
    phi.check_phi()
    samples, n_max = int(cfg.get("samples")), int(cfg.get("n_max"))
    if samples < 1 or n_max < 1:
        raise ParseError("--samples and --n-max must be positive")
    if cfg.command == "scan-e":
        x = _dy(cfg, "x")
        if not 0 < x <= 1:
            raise ParseError("--x must lie in (0, 1]")
        targets = measure.TargetSpec.parse(_need(cfg, "targets"))
        return measure.ScanConfig("param", seed, samples, n_max, phi, x=x, targets=targets, window=_window(cfg, x))
    beta = _dy(cfg, "beta")
    if not beta > 1:
        raise ParseError("--beta must exceed 1")
    return measure.ScanConfig("recurrence", seed, samples, n_max, phi, beta=beta, L=measure.AffineMap.parse(_need(cfg, "L")))


def _cmd_scan(cfg: RunConfig, out: Emitter):
    scfg = _scan_config(cfg)
    curve = measure.run_scan(scfg, cfg.workers)
    summary = _dumps(measure.scan_summary(scfg, curve))
    csv_text = curve.to_csv()
    if cfg.out:
        with open(cfg.out + ".csv", "w") as fh:
            fh.write(csv_text)
        with open(cfg.out + ".json", "w") as fh:
            fh.write(summary + "\n")
        out.path = None
        out.line({"csv": cfg.out + ".csv", "summary": cfg.out + ".json", "config_hash": scfg.digest()})
    elif cfg.format == "csv":
        out.line(csv_text)
    else:
        out.line(summary)


def _cmd_beta_star(cfg: RunConfig, out: Emitter):
    out.line(measure.beta_star(_need(cfg, "l")).to_json())


def _cmd_slice_r(cfg: RunConfig, out: Emitter):
    res = measure.recurrence_slice(Word(_need(cfg, "w")), _dy(cfg, "beta"), measure.AffineMap.parse(_need(cfg, "L")), _dy(cfg, "phi_n"))
    out.line(res.to_json())


def _cmd_structural(cfg: RunConfig, out: Emitter):
    x = _dy(cfg, "x")
    rep = param.structural_checks(x, _need(cfg, "n"), _window(cfg, x), Tolerance(cfg.bits), cfg.cap or param.DEFAULT_PARAM_CAP)
    out.line(rep.to_json())


COMMANDS = {
    "expand": _cmd_expand,
    "star": _cmd_star,
    "admissible": _cmd_admissible,
    "sigma": _cmd_sigma,
    "xi": lambda cfg, out: _cmd_sigma(cfg, out, full_only=True),
    "omega": _cmd_omega,
    "full-check": _cmd_full_check,
    "proportion": _cmd_proportion,
    "slice": _cmd_slice,
    "scan-e": _cmd_scan,
    "scan-r": _cmd_scan,
    "beta-star": _cmd_beta_star,
    "slice-r": _cmd_slice_r,
    "structural": _cmd_structural,
}

VALIDATION_ERRORS = (UsageError, ParseError, ValueError, NotInOmega, HypothesisViolated, SlopeTooSmall, UnsupportedForm)
LIMIT_ERRORS = (CapExceeded, ToleranceUnreachable, DepthExhausted, RunFailed)


def run(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = merge_config(args)
        out = Emitter(cfg.out, stdout)
        COMMANDS[cfg.command](cfg, out)
        out.flush()
    except LIMIT_ERRORS as exc:
        stderr.write(f"betalab {args.command}: {type(exc).__name__}: {exc}\n")
        return EXIT_LIMIT
    except VALIDATION_ERRORS as exc:
        stderr.write(f"betalab {args.command}: {type(exc).__name__}: {exc}\n")
        return EXIT_INVALID
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
