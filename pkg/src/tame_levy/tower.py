"""Tower descriptions: Q_p = K_1 < K_2 < ... with ramification data per level."""

from __future__ import annotations

import functools
import hashlib
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import sympy
import yaml

from .errors import ConfigError, LevelMismatch, NonDivisibleTower, NotIncreasing, WildRamification

DEFAULT_ENUM_CAP = 2**20
DEFAULT_PRECISION = 48


def parse_alpha(value) -> Fraction:
    if isinstance(value, float):
        value = repr(value)
    try:
        alpha = Fraction(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"alpha must be rational or decimal, got {value!r}") from exc
    if alpha <= 0:
        raise ConfigError("alpha must be positive")
    return alpha


@dataclass(frozen=True)
class TowerSpec:
    """Validated tower: prime, stability exponent and (e_n, f_n) relative to K_1.

    Levels past the listed ones exist only when ``extend`` is set; they repeat
    the ratio between the last two listed levels.
    """

    p: int
    alpha: Fraction
    levels: tuple[tuple[int, int], ...]
    extend: bool = False
    enum_cap: int = DEFAULT_ENUM_CAP
    precision: int = DEFAULT_PRECISION
    seed: int = 0

    @property
    def num_levels(self) -> int:
        return len(self.levels)

    def has_level(self, n: int) -> bool:
        return n >= 1 and (n <= len(self.levels) or self.extend)

    def ef(self, n: int) -> tuple[int, int]:
        if n < 1:
            raise LevelMismatch(f"levels start at 1, got {n}")
        if n <= len(self.levels):
            return self.levels[n - 1]
        if not self.extend:
            raise LevelMismatch(f"level {n} beyond the {len(self.levels)} listed levels")
        (e0, f0), (e1, f1) = self.levels[-2], self.levels[-1]
        k = n - len(self.levels)
        return e1 * (e1 // e0) ** k, f1 * (f1 // f0) ** k

    def e(self, n: int) -> int:
        return self.ef(n)[0]

    def f(self, n: int) -> int:
        return self.ef(n)[1]

    def m(self, n: int) -> int:
        e, f = self.ef(n)
        return e * f

    def q(self, n: int) -> int:
        return self.p ** self.f(n)

    def d(self, n: int) -> int:
        return self.e(n) - 1

    def group_order(self, n: int) -> int:
        """M(n) = q_1^(n m_n), the order of S/S_n (M(0) = 1)."""
        if n == 0:
            return 1
        return self.p ** (n * self.m(n))

    def enumerable(self, n: int) -> bool:
        return self.group_order(n) <= self.enum_cap

    def with_alpha(self, alpha) -> "TowerSpec":
        return build_tower({**self.to_config(), "alpha": str(parse_alpha(alpha))})

    def to_config(self) -> dict:
        return {
            "p": self.p,
            "alpha": str(self.alpha),
            "levels": [list(lv) for lv in self.levels],
            "extend": self.extend,
            "caps": {"enum_order": self.enum_cap},
            "precision": self.precision,
            "seed": self.seed,
        }

    def digest(self) -> str:
        return _digest(self)


@functools.cache
def _digest(spec: TowerSpec) -> str:
    blob = json.dumps(spec.to_config(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def build_tower(config: dict) -> TowerSpec:
    """Validate a parsed tower description and return the TowerSpec."""
    try:
        p = int(config["p"])
        levels = tuple((int(e), int(f)) for e, f in config["levels"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed tower description: {exc}") from exc
    if not sympy.isprime(p):
        raise ConfigError(f"p must be prime, got {p}")
    alpha = parse_alpha(config.get("alpha", 1))
    if not levels or levels[0] != (1, 1):
        raise ConfigError("the level list must start with (1, 1)")
    caps = config.get("caps") or {}
    extend = bool(config.get("extend", False))
    spec = TowerSpec(
        p=p,
        alpha=alpha,
        levels=levels,
        extend=extend,
        enum_cap=int(caps.get("enum_order", DEFAULT_ENUM_CAP)),
        precision=int(config.get("precision", DEFAULT_PRECISION)),
        seed=int(config.get("seed", 0)),
    )
    for n, (e, f) in enumerate(levels, start=1):
        if e < 1 or f < 1:
            raise ConfigError(f"level {n}: indices must be positive")
        if e % p == 0:
            raise WildRamification(f"level {n}: p={p} divides e={e}")
    for n in range(1, len(levels)):
        (e0, f0), (e1, f1) = levels[n - 1], levels[n]
        if e1 % e0 or f1 % f0:
            raise NonDivisibleTower(f"levels {n}->{n + 1}: ({e0},{f0}) does not divide ({e1},{f1})")
        if e1 * f1 <= e0 * f0:
            raise NotIncreasing(f"levels {n}->{n + 1}: degree {e0 * f0} -> {e1 * f1}")
    if extend:
        if len(levels) < 2:
            raise ConfigError("extend needs at least two listed levels")
        # the repeated step must itself be tame and increasing
        nxt = spec.ef(len(levels) + 1)
        if nxt[0] % p == 0:
            raise WildRamification(f"extension step gives e={nxt[0]} divisible by p={p}")
    if spec.precision < 8:
        raise ConfigError("precision must be at least 8 p-adic digits")
    return spec


def load_config(path) -> TowerSpec:
    try:
        data = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} is not a mapping")
    return build_tower(data)


def bundled_config(name: str) -> TowerSpec:
    """One of the shipped desk-scale towers: T1, T2 or T3."""
    path = Path(__file__).parent / "configs" / f"{name}.yaml"
    if not path.exists():
        raise ConfigError(f"no bundled tower named {name!r}")
    return load_config(path)
