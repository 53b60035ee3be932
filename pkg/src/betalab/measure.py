"""Seeded Monte Carlo hit scans, the convergence threshold beta*, exact
recurrence slices and partial sums of rate functions.

The scans sample bases (or points) from a counter-based generator, run a
capped-precision orbit for each sample and record when ``|T^n - target|``
drops below ``phi(n)``.  Per sample only the first hit, the last hit and the
set of dyadic blocks containing a hit are kept; every curve is derived from
those, so results merge deterministically across workers.
"""

from __future__ import annotations

import csv
import functools
import hashlib
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, List, Optional, Sequence, Tuple

import mpmath
import numpy as np

from betalab.dyadic import Dyadic, Enclosure, to_dyadic
from betalab.errors import ParseError, RunFailed, SlopeTooSmall, UnsupportedForm
from betalab.rng import uniform_dyadic
from betalab.shift import fraction_json, shift_cylinder
from betalab.words import Word

SCAN_BITS = 256
MAX_SCAN_BITS = 1024
MAX_DISCARD_RATE = Fraction(1, 1000)
TAIL_SUM_BITS = 128
EXACT_SUM_TERMS = 2000


# ---------------------------------------------------------------------------
# rate and target specifications


@dataclass(frozen=True)
class RateSpec:
    """A rate function of ``n``.

    ``const``: ``c``; ``power``: ``c / n**s``; ``geom``: ``c * q**n``;
    ``linlog``: ``a*n + b*ln(n) + c`` (only meaningful as an exponent
    sequence ``l_n``, never as ``phi``).
    """

    kind: str
    params: Tuple[Dyadic, ...]

    KINDS = ("const", "power", "geom", "linlog")

    def __post_init__(self):
        need = {"const": 1, "power": 2, "geom": 2, "linlog": 3}
        if self.kind not in need:
            raise ParseError(f"unknown rate kind {self.kind!r}")
        if len(self.params) != need[self.kind]:
            raise ParseError(f"{self.kind} takes {need[self.kind]} parameters")

    @classmethod
    def parse(cls, text: str) -> "RateSpec":
        """``const:c``, ``power:c,s``, ``geom:c,q``, ``log:b`` or ``l:a,b,c``."""
        if isinstance(text, RateSpec):
            return text
        kind, _, body = str(text).strip().partition(":")
        values = tuple(to_dyadic(v) for v in body.split(",")) if body.strip() else ()
        if kind == "log":
            if len(values) != 1:
                raise ParseError("log takes one parameter")
            return cls("linlog", (Dyadic(0), values[0], Dyadic(0)))
        if kind == "l":
            kind = "linlog"
        return cls(kind, values)

    def __str__(self):
        body = ",".join(v.decimal() for v in self.params)
        return f"{self.kind}:{body}"

    def to_json(self) -> dict:
        return {"kind": self.kind, "params": [p.to_json() for p in self.params]}

    def check_phi(self):
        """Validate as a ``phi`` spec: values in ``(0, 1]`` for all ``n >= 1``."""
        if self.kind == "linlog":
            raise ParseError("l_n specs cannot be used as phi")
        c = self.params[0]
        if not 0 < c <= 1:
            raise ParseError("phi coefficient must lie in (0, 1]")
        if self.kind == "power" and self.params[1] < 0:
            raise ParseError("phi exponent must be nonnegative")
        if self.kind == "geom" and not 0 < self.params[1] <= 1:
            raise ParseError("phi ratio must lie in (0, 1]")

    def value(self, n: int) -> Fraction:
        """Exact value for rational forms; ``power`` needs an integer exponent."""
        p = [v.to_fraction() for v in self.params]
        if self.kind == "const":
            return p[0]
        if self.kind == "geom":
            return p[0] * p[1] ** n
        if self.kind == "power":
            if p[1].denominator != 1:
                raise UnsupportedForm("non-integer exponent has no exact value")
            return p[0] / Fraction(n) ** int(p[1])
        raise UnsupportedForm("linlog values are not rational")

    def value_interval(self, n: int, prec: int = 192):
        """Outward-rounded ``mpmath.iv`` enclosure of the value at ``n``."""
        iv = mpmath.iv
        saved = iv.prec
        iv.prec = prec
        try:
            p = [iv.mpf(v.m) * iv.mpf(2) ** v.e for v in self.params]
            if self.kind == "const":
                r = p[0]
            elif self.kind == "power":
                r = p[0] / iv.mpf(n) ** p[1]
            elif self.kind == "geom":
                r = p[0] * p[1] ** n
            else:
                r = p[0] * n + p[1] * iv.log(n) + p[2]
            return _mpf_dyadic(r.a), _mpf_dyadic(r.b)
        finally:
            iv.prec = saved

    def series_converges(self) -> bool:
        """Whether ``sum phi(n)`` is finite."""
        if self.kind == "const":
            return self.params[0] == 0
        if self.kind == "power":
            return self.params[1] > 1
        if self.kind == "geom":
            return self.params[1] < 1
        raise UnsupportedForm("convergence of linlog as phi is undefined")

    def scaled_ceil(self, n: int, bits: int) -> int:
        """``ceil(phi(n) * 2**bits)``, exact for rational forms."""
        try:
            return _ceil_div(*self._scaled_ratio(n, bits)) if self.kind == "power" else math.ceil(self.value(n) * (1 << bits))
        except UnsupportedForm:
            lo, hi = self.value_interval(n, prec=2 * bits + 64)
            a, b = math.ceil(lo.ldexp(bits)), math.ceil(hi.ldexp(bits))
            if a != b:
                raise RunFailed(f"threshold at n={n} undecided at {bits} bits") from None
            return a

    def _scaled_ratio(self, n: int, bits: int) -> Tuple[int, int]:
        """``phi(n) * 2**bits`` as ``num / den`` for integer-exponent power forms."""
        c, s = self.params
        if s.e < 0:
            raise UnsupportedForm("non-integer exponent has no exact value")
        num, den = c.m, n ** s.floor()
        sh = bits + c.e
        if sh >= 0:
            num <<= sh
        else:
            den <<= -sh
        return num, den


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def _mpf_dyadic(v) -> Dyadic:
    """The exact dyadic value of an ``mpf`` (no rounding through ``mp.prec``)."""
    raw = v._mpi_[0] if hasattr(v, "_mpi_") else v._mpf_
    man, exp = mpmath.mp.make_mpf(raw).man_exp
    return Dyadic(man, exp)


@dataclass(frozen=True)
class TargetSpec:
    """Target sequence ``x_n``: constant, periodic, or an explicit table."""

    kind: str
    values: Tuple[Dyadic, ...]

    def __post_init__(self):
        if self.kind not in ("const", "periodic", "table"):
            raise ParseError(f"unknown target kind {self.kind!r}")
        if not self.values:
            raise ParseError("target needs at least one value")
        if self.kind == "const" and len(self.values) != 1:
            raise ParseError("const target takes one value")
        for v in self.values:
            if not 0 <= v <= 1:
                raise ParseError("target values must lie in [0, 1]")

    @classmethod
    def parse(cls, text) -> "TargetSpec":
        """``const:y``, ``periodic:y1,y2,...`` or ``table:y1,y2,...``; a bare number is const."""
        if isinstance(text, TargetSpec):
            return text
        if isinstance(text, (list, tuple)):
            return cls("table", tuple(to_dyadic(str(v)) for v in text))
        text = str(text).strip()
        kind, sep, body = text.partition(":")
        if not sep:
            kind, body = "const", text
        return cls(kind, tuple(to_dyadic(v) for v in body.split(",")))

    def at(self, n: int) -> Dyadic:
        if self.kind == "const":
            return self.values[0]
        if self.kind == "periodic":
            return self.values[(n - 1) % len(self.values)]
        if n > len(self.values):
            raise ParseError(f"target table has {len(self.values)} entries, step {n} requested")
        return self.values[n - 1]

    def __str__(self):
        return f"{self.kind}:" + ",".join(v.decimal() for v in self.values)

    def to_json(self) -> dict:
        return {"kind": self.kind, "values": [v.to_json() for v in self.values]}


@dataclass(frozen=True)
class AffineMap:
    """``L(x) = a*x + b`` clipped to ``[0, 1]``; ``|a|`` is the Lipschitz constant."""

    a: Dyadic
    b: Dyadic

    @classmethod
    def parse(cls, text) -> "AffineMap":
        if isinstance(text, AffineMap):
            return text
        parts = str(text).split(",")
        if len(parts) != 2:
            raise ParseError("affine map is given as a,b")
        return cls(to_dyadic(parts[0]), to_dyadic(parts[1]))

    @property
    def kappa(self) -> Dyadic:
        return abs(self.a)

    def __call__(self, x: Fraction) -> Fraction:
        y = self.a.to_fraction() * x + self.b.to_fraction()
        return min(max(y, Fraction(0)), Fraction(1))

    def __str__(self):
        return f"{self.a.decimal()},{self.b.decimal()}"


# ---------------------------------------------------------------------------
# hit curves


def _blocks(n_max: int) -> List[Tuple[int, int]]:
    """Dyadic blocks ``[2^k, 2^(k+1) - 1]``, the last one closed at ``n_max``."""
    out = []
    k = 0
    while (1 << (k + 1)) <= n_max:
        out.append((1 << k, (1 << (k + 1)) - 1))
        k += 1
    lo = 1 << k
    if out and lo == n_max:
        out[-1] = (out[-1][0], n_max)
    else:
        out.append((lo, n_max))
    return out


@dataclass
class SampleResult:
    first: Optional[int]
    last: Optional[int]
    mask: int


@dataclass
class HitCurve:
    seed: int
    samples: int
    n_max: int
    results: List[Optional[SampleResult]] = field(repr=False)
    series_converges: Optional[bool] = None

    @property
    def discards(self) -> int:
        return sum(r is None for r in self.results)

    @property
    def valid(self) -> List[SampleResult]:
        return [r for r in self.results if r is not None]

    @property
    def blocks(self) -> List[Tuple[int, int]]:
        return _blocks(self.n_max)

    def _frac(self, count: int) -> float:
        v = len(self.valid)
        return count / v if v else 0.0

    def first_hit_count(self, n: int) -> int:
        return sum(1 for r in self.valid if r.first is not None and r.first <= n)

    def first_hit_fraction(self, n: int) -> float:
        return self._frac(self.first_hit_count(n))

    def tail_count_at(self, m: int) -> int:
        """Samples with a hit at some step in ``[m, n_max]``."""
        return sum(1 for r in self.valid if r.last is not None and r.last >= m)

    def tail_fraction_at(self, m: int) -> float:
        return self._frac(self.tail_count_at(m))

    def block_count(self, k: int) -> int:
        return sum(1 for r in self.valid if r.mask >> k & 1)

    def block_fraction(self, k: int) -> float:
        return self._frac(self.block_count(k))

    @property
    def final_fraction(self) -> float:
        """Fraction of samples hitting in the last dyadic block."""
        return self.block_fraction(len(self.blocks) - 1)

    def first_hit_curve(self) -> List[Tuple[int, float]]:
        return [(hi, self.first_hit_fraction(hi)) for _, hi in self.blocks]

    def is_monotone(self) -> bool:
        vals = [f for _, f in self.first_hit_curve()]
        return all(a <= b for a, b in zip(vals, vals[1:]))

    def rows(self) -> List[dict]:
        out = []
        for k, (lo, hi) in enumerate(self.blocks):
            out.append(
                {
                    "N": hi,
                    "first_hit": self.first_hit_count(hi),
                    "first_hit_fraction": self.first_hit_fraction(hi),
                    "block_lo": lo,
                    "block_hi": hi,
                    "block_hits": self.block_count(k),
                    "block_fraction": self.block_fraction(k),
                    "tail_hits": self.tail_count_at(lo),
                    "tail_fraction": self.tail_fraction_at(lo),
                    "discards": self.discards,
                }
            )
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        rows = self.rows()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
        return buf.getvalue()

    def verdict(self) -> dict:
        out = {
            "first_hit_at_n_max": self.first_hit_fraction(self.n_max),
            "final_fraction": self.final_fraction,
            "monotone": self.is_monotone(),
            "discard_rate": self.discards / self.samples if self.samples else 0.0,
        }
        if self.series_converges is not None:
            out["series"] = "convergent" if self.series_converges else "divergent"
            out["predicted_measure"] = "null" if self.series_converges else "full"
        return out


def _hit_loop(X: int, B: int, k: int, bits: int, n_max: int, targets, thr: Sequence[int], const_target: Optional[int]):
    """Run the fixed-point orbit; None if a digit was ambiguous.

    ``X`` is the start point scaled by ``2**bits``, ``B`` the base scaled by
    ``2**k``.  Mirrors :class:`betalab.expansion.CappedOrbit` inline, since
    this loop dominates the scan cost.
    """
    shift = bits + k
    one = 1 << shift
    half = 1 << (k - 1) if k else 0
    first = last = None
    mask = 0
    y = const_target
    for n in range(1, n_max + 1):
        prod = B * X
        d = prod >> shift
        r = prod - (d << shift)
        if k:
            if 2 * r < B or 2 * (one - r) < B:
                return None
            X = (r + half) >> k
        else:
            X = r
        if const_target is None:
            y = targets[n]
        if -thr[n] < X - y < thr[n]:
            if first is None:
                first = n
            last = n
            mask |= 1 << (n.bit_length() - 1)
    return first, last, mask


@dataclass(frozen=True)
class ScanConfig:
    """Everything that determines a scan's output (workers excluded)."""

    mode: str  # "param" or "recurrence"
    seed: int
    samples: int
    n_max: int
    phi: RateSpec
    x: Optional[Dyadic] = None
    targets: Optional[TargetSpec] = None
    window: Optional[Tuple[Dyadic, Dyadic]] = None
    beta: Optional[Dyadic] = None
    L: Optional[AffineMap] = None
    bits: int = SCAN_BITS

    def to_json(self) -> dict:
        out = {
            "mode": self.mode,
            "seed": self.seed,
            "samples": self.samples,
            "n_max": self.n_max,
            "phi": str(self.phi),
            "bits": self.bits,
        }
        if self.mode == "param":
            out.update(x=self.x.to_json(), targets=str(self.targets), window=[w.to_json() for w in self.window])
        else:
            out.update(beta=self.beta.to_json(), L=str(self.L))
        return out

    def digest(self) -> str:
        text = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


@functools.lru_cache(maxsize=16)
def _thresholds(phi: RateSpec, n_max: int, bits: int) -> List[int]:
    thr = [0] * (n_max + 1)
    for n in range(1, n_max + 1):
        thr[n] = phi.scaled_ceil(n, bits)
        if phi.kind == "geom" and thr[n] == 1:
            # phi is decreasing; once below one grid step it stays there
            for m in range(n + 1, n_max + 1):
                thr[m] = 1
            break
    return thr


def _sample(cfg: ScanConfig, index: int, bits: int) -> Optional[SampleResult]:
    if cfg.mode == "param":
        beta = uniform_dyadic(cfg.seed, index, *cfg.window)
        x0 = cfg.x
        targets = cfg.targets
    else:
        beta = cfg.beta
        x0 = uniform_dyadic(cfg.seed, index, Dyadic(0), Dyadic(1))
        targets = None
    k = max(0, -beta.e)
    B = beta.scaled(k)
    X = x0.scaled(bits)
    thr = _thresholds(cfg.phi, cfg.n_max, bits)
    if targets is None:
        const = (cfg.L(x0.to_fraction()) * (1 << bits))
        if const.denominator != 1:
            raise RunFailed("L(x) is not on the orbit grid")
        out = _hit_loop(X, B, k, bits, cfg.n_max, None, thr, int(const))
    elif targets.kind == "const":
        out = _hit_loop(X, B, k, bits, cfg.n_max, None, thr, targets.values[0].scaled(bits))
    else:
        tab = [0] + [targets.at(n).scaled(bits) for n in range(1, cfg.n_max + 1)]
        out = _hit_loop(X, B, k, bits, cfg.n_max, tab, thr, None)
    return None if out is None else SampleResult(*out)


def _sample_escalating(cfg: ScanConfig, index: int) -> Optional[SampleResult]:
    bits = cfg.bits
    while bits <= MAX_SCAN_BITS:
        res = _sample(cfg, index, bits)
        if res is not None:
            return res
        bits *= 2
    return None


def _run_chunk(cfg: ScanConfig, lo: int, hi: int) -> List[Optional[SampleResult]]:
    return [_sample_escalating(cfg, i) for i in range(lo, hi)]


def run_scan(cfg: ScanConfig, workers: int = 1, progress: Optional[Callable[[int], None]] = None) -> HitCurve:
    """Run every sample of ``cfg`` and merge in index order."""
    if cfg.samples < 1:
        raise ValueError("samples must be positive")
    if cfg.n_max < 1:
        raise ValueError("n_max must be positive")
    if cfg.seed < 0:
        raise ValueError("seed must be nonnegative")
    cfg.phi.check_phi()
    if workers <= 1:
        results = _run_chunk(cfg, 0, cfg.samples)
    else:
        size = max(1, -(-cfg.samples // (4 * workers)))
        spans = [(i, min(i + size, cfg.samples)) for i in range(0, cfg.samples, size)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, [cfg] * len(spans), *zip(*spans)))
        results = [r for part in parts for r in part]
    curve = HitCurve(cfg.seed, cfg.samples, cfg.n_max, results, cfg.phi.series_converges())
    if Fraction(curve.discards, cfg.samples) > MAX_DISCARD_RATE:
        raise RunFailed(f"{curve.discards} of {cfg.samples} samples discarded as ambiguous")
    if not curve.is_monotone():
        raise RunFailed("first-hit curve is not monotone")
    return curve


def hit_scan_param(x, targets, phi, window, samples: int, n_max: int, seed: int, workers: int = 1, bits: int = SCAN_BITS) -> HitCurve:
    """Sample bases uniformly in ``window`` and record ``|T^n x - x_n| < phi(n)``."""
    x = Dyadic.coerce(x) if not isinstance(x, str) else to_dyadic(x)
    if not 0 < x <= 1:
        raise ValueError("x must lie in (0, 1]")
    lo, hi = (Dyadic.coerce(w) if not isinstance(w, str) else to_dyadic(w) for w in window)
    if not 1 < lo < hi:
        raise ValueError("window must satisfy 1 < lo < hi")
    cfg = ScanConfig("param", seed, samples, n_max, RateSpec.parse(phi), x=x, targets=TargetSpec.parse(targets), window=(lo, hi), bits=bits)
    return run_scan(cfg, workers)


def recurrence_scan(beta, L, phi, samples: int, n_max: int, seed: int, workers: int = 1, bits: int = SCAN_BITS) -> HitCurve:
    """Sample points uniformly in ``[0, 1)`` and record ``|T^n x - L(x)| < phi(n)``."""
    beta = Dyadic.coerce(beta) if not isinstance(beta, str) else to_dyadic(beta)
    if not beta > 1:
        raise ValueError("base must exceed 1")
    cfg = ScanConfig("recurrence", seed, samples, n_max, RateSpec.parse(phi), beta=beta, L=AffineMap.parse(L), bits=bits)
    return run_scan(cfg, workers)


def scan_summary(cfg: ScanConfig, curve: HitCurve) -> dict:
    """JSON summary: seed, config hash, the curve and a verdict with a tail-sum fit."""
    rows = curve.rows()
    fit = []
    for row in rows:
        s = tail_sum(cfg.phi, row["block_lo"], cfg.n_max)
        mid = float(s.midpoint())
        fit.append({"m": row["block_lo"], "phi_tail_sum": mid, "tail_fraction": row["tail_fraction"]})
    ratios = [f["tail_fraction"] / f["phi_tail_sum"] for f in fit if f["phi_tail_sum"] > 0]
    verdict = curve.verdict()
    verdict["tail_sum_fit"] = {"C": max(ratios) if ratios else 0.0, "rows": fit}
    return {
        "seed": cfg.seed,
        "config_hash": cfg.digest(),
        "config": cfg.to_json(),
        "samples": curve.samples,
        "discards": curve.discards,
        "curve": rows,
        "verdict": verdict,
    }


# ---------------------------------------------------------------------------
# partial sums


def tail_sum(phi, m: int, N: int, bits: int = TAIL_SUM_BITS) -> Enclosure:
    """Enclosure of ``sum_{n=m}^{N} phi(n)``; exact (a point) whenever the sum is dyadic.

    Short rational sums are added exactly; long ones are summed term by term
    on the ``2**-bits`` grid with floor/ceil rounding, and non-rational terms
    use interval arithmetic.
    """
    phi = RateSpec.parse(phi)
    if not 1 <= m <= N:
        raise ValueError("need 1 <= m <= N")
    count = N - m + 1
    try:
        phi.value(m)
        rational = True
    except UnsupportedForm:
        rational = False
    if rational and phi.kind == "geom":
        c, q = (v.to_fraction() for v in phi.params)
        if q == 1:
            total = c * count
        else:
            total = c * (q**m - q ** (N + 1)) / (1 - q)
        return _enclose_fraction(total, bits)
    if rational and phi.kind == "const":
        return _enclose_fraction(phi.value(1) * count, bits)
    if rational and count <= EXACT_SUM_TERMS:
        total = sum((phi.value(n) for n in range(m, N + 1)), Fraction(0))
        return _enclose_fraction(total, bits)
    lo = hi = 0
    scale = 1 << bits
    for n in range(m, N + 1):
        if rational:
            num, den = phi._scaled_ratio(n, bits)
            lo += num // den
            hi += _ceil_div(num, den)
        else:
            a, b = phi.value_interval(n, prec=bits + 64)
            lo += math.floor(a.ldexp(bits))
            hi += math.ceil(b.ldexp(bits))
    return Enclosure(Dyadic(lo, -bits), Dyadic(hi, -bits))


def _enclose_fraction(q: Fraction, bits: int) -> Enclosure:
    d = q.denominator
    if d & (d - 1) == 0:
        return Enclosure.exact(Dyadic.coerce(q))
    return Enclosure(Dyadic.from_fraction_floor(q, bits), Dyadic.from_fraction_ceil(q, bits))


# ---------------------------------------------------------------------------
# the convergence threshold beta*


@dataclass(frozen=True)
class BetaStar:
    """``inf{beta > 1 : sum beta^(-l_n) < inf}``: an enclosure, or infinity."""

    enclosure: Optional[Enclosure]
    infinite: bool = False
    rigorous: bool = True

    def to_json(self) -> dict:
        if self.infinite:
            value = "inf"
        else:
            value = [self.enclosure.lo.decimal(), self.enclosure.hi.decimal()]
        return {
            "beta_star": value,
            "enclosure": None if self.infinite else self.enclosure.to_json(),
            "rigorous": self.rigorous,
        }


HEURISTIC_TERMS = 1 << 20


def beta_star(l, bits: int = 128, heuristic: bool = True, terms: Optional[Callable[[np.ndarray], np.ndarray]] = None) -> BetaStar:
    """Classify ``l_n = a*n + b*ln(n) + c``.

    ``a > 0`` gives 1; ``a = 0, b > 0`` gives ``e^(1/b)`` (a p-series in
    disguise); ``a = 0, b <= 0`` or ``a < 0`` diverges for every base.  Other
    forms, or an explicit ``terms`` callable mapping ``n`` to ``l_n``, go to a
    dyadic-block heuristic flagged non-rigorous, or raise
    :class:`UnsupportedForm` when ``heuristic`` is off.
    """
    if terms is None:
        l = RateSpec.parse(l)
        if l.kind == "const":
            return BetaStar(None, infinite=True)
        if l.kind == "linlog":
            a, b, _ = l.params
            if a > 0:
                return BetaStar(Enclosure.exact(1))
            if a < 0 or b <= 0:
                return BetaStar(None, infinite=True)
            iv = mpmath.iv
            saved = iv.prec
            iv.prec = bits + 32
            try:
                bb = iv.mpf(b.m) * iv.mpf(2) ** b.e
                r = iv.exp(1 / bb)
                lo, hi = _mpf_dyadic(r.a), _mpf_dyadic(r.b)
            finally:
                iv.prec = saved
            return BetaStar(Enclosure(lo, hi))
        if not heuristic:
            raise UnsupportedForm(f"no closed form for {l}")
        n = np.arange(1, HEURISTIC_TERMS + 1, dtype=np.float64)
        c, s = (float(v) for v in l.params)
        values = c / n**s if l.kind == "power" else c * float(l.params[1]) ** n
    else:
        if not heuristic:
            raise UnsupportedForm("tabulated l_n has no closed form")
        values = np.asarray(terms(np.arange(1, HEURISTIC_TERMS + 1, dtype=np.float64)), dtype=np.float64)
    return _beta_star_heuristic(values)


def _converges_heuristic(values: np.ndarray, beta: float) -> bool:
    # block sums over [2^k, 2^(k+1)); a convergent tail decays geometrically
    with np.errstate(over="ignore", under="ignore"):
        t = np.exp(-values * math.log(beta))
    last = t[(1 << 19) - 1 :].sum()
    prev = t[(1 << 18) - 1 : (1 << 19) - 1].sum()
    if not np.isfinite(last):
        return False
    if prev == 0:
        return True
    return last < 0.9 * prev


def _beta_star_heuristic(values: np.ndarray) -> BetaStar:
    lo, hi = 1.0, 2.0
    while not _converges_heuristic(values, hi):
        hi *= 2
        if hi > 2**20:
            return BetaStar(None, infinite=True, rigorous=False)
    if _converges_heuristic(values, 1 + 2**-20):
        return BetaStar(Enclosure.exact(1), rigorous=False)
    for _ in range(40):
        mid = (lo + hi) / 2
        if _converges_heuristic(values, mid):
            hi = mid
        else:
            lo = mid
    return BetaStar(Enclosure(Dyadic.coerce(lo), Dyadic.coerce(hi)), rigorous=False)


# ---------------------------------------------------------------------------
# recurrence slices at a fixed base


@dataclass(frozen=True)
class RecurrenceSlice:
    word: Word
    phi: Fraction
    interval: Optional[Tuple[Fraction, Fraction]]
    left_closed: bool
    is_full: bool
    slope_range: Tuple[Fraction, Fraction]
    beta_n: Fraction

    @property
    def length(self) -> Fraction:
        if self.interval is None:
            return Fraction(0)
        return self.interval[1] - self.interval[0]

    @property
    def upper_bound(self) -> Fraction:
        return 3 * self.phi / self.beta_n

    @property
    def lower_bound(self) -> Fraction:
        return self.phi / (4 * self.beta_n)

    @property
    def upper_ok(self) -> bool:
        return self.length <= self.upper_bound

    @property
    def lower_ok(self) -> Optional[bool]:
        """Asserted only for full cylinders."""
        return self.length >= self.lower_bound if self.is_full else None

    @property
    def slope_ok(self) -> bool:
        lo, hi = self.slope_range
        return 2 * self.beta_n / 3 < lo and hi < 4 * self.beta_n / 3

    def to_json(self) -> dict:
        return {
            "w": str(self.word),
            "interval": None if self.interval is None else [fraction_json(v) for v in self.interval],
            "left_closed": self.left_closed,
            "empty": self.interval is None,
            "len": fraction_json(self.length),
            "full": self.is_full,
            "upper_bound": fraction_json(self.upper_bound),
            "upper_ok": self.upper_ok,
            "lower_bound": fraction_json(self.lower_bound),
            "lower_ok": self.lower_ok,
            "slope_ok": self.slope_ok,
        }


def recurrence_slice(w, beta, L, phin) -> RecurrenceSlice:
    """``{x in cyl(w) : |beta^n (x - left) - L(x)| < phi_n}`` with exact endpoints.

    The map is piecewise affine (``L`` is clipped to ``[0, 1]``) and strictly
    increasing once ``beta^n > 3 kappa``, so each endpoint is found by
    locating the piece where it crosses and solving a linear equation.
    """
    w = Word(w)
    beta = Dyadic.coerce(beta) if not isinstance(beta, str) else to_dyadic(beta)
    L = AffineMap.parse(L)
    phi = Dyadic.coerce(phin).to_fraction() if not isinstance(phin, str) else to_dyadic(phin).to_fraction()
    if phi <= 0:
        raise ValueError("phi must be positive")
    n = len(w)
    b = beta.to_fraction()
    bn = b**n
    kappa = L.kappa.to_fraction()
    if not bn > 3 * kappa:
        raise SlopeTooSmall(f"beta^n = {float(bn)} does not exceed 3*kappa = {float(3 * kappa)}")
    cyl = shift_cylinder(w, beta)
    left, right = cyl.left, cyl.right
    a_, b_ = L.a.to_fraction(), L.b.to_fraction()

    def g(x: Fraction) -> Fraction:
        return bn * (x - left) - L(x)

    # pieces of L inside the cylinder
    cuts = {left, right}
    if a_ != 0:
        for y in (Fraction(0), Fraction(1)):
            t = (y - b_) / a_
            if left < t < right:
                cuts.add(t)
    pts = sorted(cuts)
    slopes = []
    for p, q in zip(pts, pts[1:]):
        mid = (p + q) / 2
        lin = a_ * mid + b_
        slopes.append(bn - (a_ if 0 < lin < 1 else 0))

    def solve(t: Fraction) -> Fraction:
        """Point where ``g = t``, clamped to the cylinder."""
        if g(left) >= t:
            return left
        if g(right) <= t:
            return right
        for (p, q), s in zip(zip(pts, pts[1:]), slopes):
            if g(p) <= t <= g(q):
                return p + (t - g(p)) / s
        raise AssertionError("piecewise solve fell through")

    lo_pt = solve(-phi)
    hi_pt = solve(phi)
    # lo_pt is excluded unless it is the closed left end with g > -phi there
    left_closed = lo_pt == left and g(left) > -phi
    interval = (lo_pt, hi_pt) if hi_pt > lo_pt else None
    return RecurrenceSlice(w, phi, interval, left_closed, cyl.is_full, (min(slopes), max(slopes)), bn)
