"""Construction configs: parsing, validation and a stable digest."""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .certified import CReal, parse_rational, rational_str
from .norms import EllipseFit, NormSpec, UnsupportedNormError, fit_best_ellipse, preset_fit


class ConfigError(ValueError):
    pass


class InfeasibleResidues(ConfigError):
    def __init__(self, index: int, message: str):
        super().__init__(message)
        self.index = index


_ANGLE_RE = re.compile(r"^\s*(?:([0-9.+\-/]+)\s*\*?\s*)?pi\s*(?:/\s*([0-9.]+))?\s*$")


def parse_angle(value: Any) -> float:
    """A number, or text such as ``"pi/4"`` or ``"3*pi/8"``."""
    if isinstance(value, (int, float)):
        return float(value)
    text = str(value).strip()
    m = _ANGLE_RE.match(text)
    if m:
        num = float(parse_rational(m.group(1))) if m.group(1) else 1.0
        den = float(m.group(2)) if m.group(2) else 1.0
        return num * math.pi / den
    return float(parse_rational(text))


def _endpoint(value: Any, M: CReal, upper: bool) -> Fraction:
    """Parse ``"0.95*M"``, ``"M"`` or a rational; irrational ones are rounded inward."""
    text = str(value).strip().replace(" ", "")
    if text.endswith("M"):
        factor = text[:-1].rstrip("*")
        f = parse_rational(factor) if factor else Fraction(1)
        x = f * M
        return x.lower(96) if upper else x.upper(96)
    return parse_rational(value)


@dataclass(frozen=True)
class IntervalPlan:
    """The target intervals ``I_0, I_1, ...`` for the long displacement lengths."""

    kind: str                       # constant, list or rising
    raw: Any
    intervals: tuple[tuple[Fraction, Fraction], ...] = ()
    r: Fraction | None = None

    @staticmethod
    def from_json(obj: dict[str, Any], M: CReal) -> "IntervalPlan":
        kind = obj.get("kind", "constant")
        if kind == "constant":
            lo, hi = obj["interval"]
            iv = ((_endpoint(lo, M, False), _endpoint(hi, M, True)),)
            return IntervalPlan("constant", obj, iv)
        if kind == "list":
            ivs = tuple((_endpoint(lo, M, False), _endpoint(hi, M, True))
                        for lo, hi in obj["intervals"])
            if not ivs:
                raise ConfigError("an interval list must not be empty")
            return IntervalPlan("list", obj, ivs)
        if kind == "rising":
            return IntervalPlan("rising", obj, (), parse_rational(obj["r"]))
        raise ConfigError(f"unknown interval plan {kind!r}")

    def to_json(self) -> Any:
        return self.raw

    def interval(self, n: int) -> tuple[Fraction, Fraction]:
        """``I_n`` with rational endpoints."""
        if self.kind == "constant":
            return self.intervals[0]
        if self.kind == "list":
            return self.intervals[min(n, len(self.intervals) - 1)]
        return rising_interval(self.r, n)

    def lambda_interval(self, n: int) -> tuple[Fraction, Fraction] | None:
        """For the rising plan, the unpowered interval ``[r - 1/(n+1), r - 1/(n+2)]``."""
        if self.kind != "rising":
            return None
        return (self.r - Fraction(1, n + 1), self.r - Fraction(1, n + 2))


def rising_interval(r: Fraction, n: int) -> tuple[Fraction, Fraction]:
    """``[r - 1/(n+1), r - 1/(n+2)]`` raised to the power 3/2 (negative parts clipped).

    Irrational endpoints are rounded inward to 96 bits.
    """
    lo = max(Fraction(0), r - Fraction(1, n + 1))
    hi = r - Fraction(1, n + 2)
    if hi <= 0:
        raise ConfigError(f"rising interval {n} is empty for r = {r}")
    three_halves = Fraction(3, 2)
    lo_p = CReal.of(lo).rpow(three_halves)
    hi_p = CReal.of(hi).rpow(three_halves)
    lo_r = lo_p.exact if lo_p.is_exact else lo_p.upper(96)
    hi_r = hi_p.exact if hi_p.is_exact else hi_p.lower(96)
    return lo_r, hi_r


@dataclass(frozen=True)
class Budgets:
    q_bits: int = 4096
    k_window: int = 4000
    k_max: int = 10 ** 30
    enum: int = 10 ** 6
    precision_bits: int = 512
    tau_retries: int = 8

    @staticmethod
    def from_json(obj: dict[str, Any]) -> "Budgets":
        known = {f for f in Budgets.__dataclass_fields__}
        bad = set(obj) - known
        if bad:
            raise ConfigError(f"unknown budget keys {sorted(bad)}")
        return Budgets(**{k: int(v) for k, v in obj.items()})


@dataclass(frozen=True)
class ConstructionConfig:
    norm: NormSpec
    theta: float
    delta: float
    intervals: IntervalPlan
    m: int = 1
    residues: tuple[int, ...] | None = None
    selector: tuple[int, ...] = ()
    steps: int = 5
    budgets: Budgets = field(default_factory=Budgets)
    raw: dict[str, Any] = field(default_factory=dict, compare=False)
    fit: EllipseFit | None = field(default=None, compare=False)

    # parsing -------------------------------------------------------------
    @staticmethod
    def from_json(obj: dict[str, Any]) -> "ConstructionConfig":
        try:
            norm = NormSpec.from_json(obj["norm"])
            sector = obj["sector"]
            theta, delta = parse_angle(sector["theta"]), parse_angle(sector["delta"])
        except KeyError as exc:
            raise ConfigError(f"missing config field {exc}") from exc
        if delta <= 0:
            raise ConfigError("the sector half-width must be positive")
        fit = engine_fit(norm)
        plan = IntervalPlan.from_json(obj.get("intervals", {}), fit.M)
        m = int(obj.get("m", 1))
        if m < 1:
            raise ConfigError("the modulus must be at least 1")
        res = obj.get("residues", "free")
        residues = None if res == "free" else tuple(int(z) for z in res)
        sel = tuple(int(s) for s in obj.get("selector", ()))
        if any(s < 0 for s in sel):
            raise ConfigError("selector entries must be non-negative")
        budgets = Budgets.from_json(obj.get("budgets", {}))
        return ConstructionConfig(norm, theta, delta, plan, m, residues, sel,
                                  int(obj.get("steps", 5)), budgets, dict(obj), fit)

    @staticmethod
    def load(path: str) -> "ConstructionConfig":
        with open(path) as fh:
            return ConstructionConfig.from_json(json.load(fh))

    def to_json(self) -> dict[str, Any]:
        out = dict(self.raw)
        out["norm"] = self.norm.to_json()
        out.setdefault("sector", {"theta": self.theta, "delta": self.delta})
        out["intervals"] = self.intervals.to_json()
        out["m"] = self.m
        out["residues"] = "free" if self.residues is None else list(self.residues)
        out["selector"] = list(self.selector)
        out["steps"] = self.steps
        out["budgets"] = dict(self.budgets.__dict__)
        return out

    def with_overrides(self, **kw: Any) -> "ConstructionConfig":
        obj = self.to_json()
        if kw.get("selector") is not None:
            obj["selector"] = list(kw["selector"])
        if kw.get("steps") is not None:
            obj["steps"] = int(kw["steps"])
        if kw.get("precision_bits") is not None:
            obj["budgets"] = dict(obj["budgets"], precision_bits=int(kw["precision_bits"]))
        return ConstructionConfig.from_json(obj)

    def digest(self) -> str:
        text = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    # derived -------------------------------------------------------------
    def z(self, n: int) -> int:
        """Residue target ``z_n``; ``z_0 = 1`` and ``z_{-1} = z_{-2} = 0``."""
        if n <= -1:
            return 0
        if n == 0:
            return 1 % self.m
        if self.residues is None:
            raise ConfigError("residues are free")
        if n > len(self.residues):
            raise ConfigError(f"no residue given for index {n}")
        return self.residues[n - 1] % self.m

    def skip(self, n: int) -> int:
        return self.selector[n - 1] if n - 1 < len(self.selector) else 0

    def validate(self) -> None:
        """Intervals inside ``[0, M]`` and a feasible residue chain."""
        from .engine import residue_plan

        M = self.fit.M
        for n in range(self.steps):
            lo, hi = self.intervals.interval(n)
            if not lo < hi:
                raise ConfigError(f"interval I_{n} = [{lo}, {hi}] is degenerate")
            if lo < 0 or not M > hi:
                raise ConfigError(
                    f"interval I_{n} = [{rational_str(lo)}, {rational_str(hi)}] "
                    f"is not inside [0, M] with M = {float(M):.8f}")
        if self.residues is not None:
            if len(self.residues) < self.steps:
                raise ConfigError("fewer residues than steps")
            for n in range(1, self.steps + 1):
                zs = [self.z(n - t) for t in range(4)]
                if residue_plan(zs[0], zs[1], zs[2], zs[3], self.m) is None:
                    raise InfeasibleResidues(n, f"residue chain is infeasible at index {n}")


def engine_fit(norm: NormSpec) -> EllipseFit:
    """Closed-form fit when available, otherwise a certified numerical fit."""
    try:
        return preset_fit(norm)
    except UnsupportedNormError:
        fit = fit_best_ellipse(norm)
        if not fit.certified:
            raise ConfigError(f"could not certify an ellipse fit for {norm.name}")
        return fit
