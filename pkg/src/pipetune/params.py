"""Symbolic program parameters and concrete assignments.

A tunable program declares its open values as a list of :class:`ParamSpec`.
Each spec names the parameter, says whether it consumes switch resources
(``memory`` for per-array words, ``count`` for replicated structures) or not
(``nonresource``), and carries the domain of values the tuner may pick from.
A :class:`Config` is one concrete assignment for every declared parameter.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Union

Value = Union[int, bool, str]

MEMORY = "memory"
COUNT = "count"
NONRESOURCE = "nonresource"
KINDS = (MEMORY, COUNT, NONRESOURCE)


class DomainError(ValueError):
    """A domain was declared with no values or inconsistent bounds."""


@dataclass(frozen=True)
class IntRange:
    """Integer interval [lo, hi], stepped by 1."""

    lo: int
    hi: int

    def __post_init__(self):
        if self.lo > self.hi:
            raise DomainError(f"empty range [{self.lo}, {self.hi}]")

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1

    def contains(self, value: Value) -> bool:
        return isinstance(value, int) and not isinstance(value, bool) and self.lo <= value <= self.hi

    def values(self) -> Iterator[int]:
        return iter(range(self.lo, self.hi + 1))

    def value_at(self, i: int) -> int:
        return self.lo + i

    def index_of(self, value: int) -> int:
        return value - self.lo

    def clamp(self, value: int) -> int:
        # Largest domain value <= value, or the domain minimum.
        return max(self.lo, min(self.hi, value))

    @property
    def minimum(self) -> int:
        return self.lo

    @property
    def maximum(self) -> int:
        return self.hi


@dataclass(frozen=True)
class Pow2Range:
    """Powers of two {2^lo_exp .. 2^hi_exp}; search strategies step in exponents."""

    lo_exp: int
    hi_exp: int

    def __post_init__(self):
        if self.lo_exp > self.hi_exp or self.lo_exp < 0:
            raise DomainError(f"bad power-of-two range 2^{self.lo_exp}..2^{self.hi_exp}")

    @property
    def size(self) -> int:
        return self.hi_exp - self.lo_exp + 1

    def contains(self, value: Value) -> bool:
        if not isinstance(value, int) or isinstance(value, bool) or value <= 0:
            return False
        return value & (value - 1) == 0 and self.lo_exp <= value.bit_length() - 1 <= self.hi_exp

    def values(self) -> Iterator[int]:
        return (1 << e for e in range(self.lo_exp, self.hi_exp + 1))

    def value_at(self, i: int) -> int:
        return 1 << (self.lo_exp + i)

    def index_of(self, value: int) -> int:
        return value.bit_length() - 1 - self.lo_exp

    def clamp(self, value: int) -> int:
        # Largest domain value <= value, or the domain minimum.
        if value < self.minimum:
            return self.minimum
        exp = min(value.bit_length() - 1, self.hi_exp)
        return 1 << exp

    @property
    def minimum(self) -> int:
        return 1 << self.lo_exp

    @property
    def maximum(self) -> int:
        return 1 << self.hi_exp


@dataclass(frozen=True)
class BoolDomain:
    size: int = 2

    def contains(self, value: Value) -> bool:
        return isinstance(value, bool)

    def values(self) -> Iterator[bool]:
        return iter((False, True))

    def value_at(self, i: int) -> bool:
        return bool(i)

    def index_of(self, value: bool) -> int:
        return int(value)

    def clamp(self, value) -> bool:
        return bool(value)

    @property
    def minimum(self) -> bool:
        return False

    @property
    def maximum(self) -> bool:
        return True


@dataclass(frozen=True)
class EnumDomain:
    """Named choices, e.g. selecting one of several structure implementations."""

    choices: tuple[str, ...]

    def __post_init__(self):
        if not self.choices:
            raise DomainError("enum domain with no choices")
        if len(set(self.choices)) != len(self.choices):
            raise DomainError(f"duplicate enum choices: {self.choices}")

    @property
    def size(self) -> int:
        return len(self.choices)

    def contains(self, value: Value) -> bool:
        return value in self.choices

    def values(self) -> Iterator[str]:
        return iter(self.choices)

    def value_at(self, i: int) -> str:
        return self.choices[i]

    def index_of(self, value: str) -> int:
        return self.choices.index(value)

    def clamp(self, value) -> str:
        return value if value in self.choices else self.choices[0]

    @property
    def minimum(self) -> str:
        return self.choices[0]

    @property
    def maximum(self) -> str:
        return self.choices[-1]


Domain = Union[IntRange, Pow2Range, BoolDomain, EnumDomain]


@dataclass(frozen=True)
class ParamSpec:
    """Declaration of one symbolic parameter.

    ``start`` optionally overrides the preprocessing starting value; when
    absent, :func:`default_start` supplies it from the pipeline model.
    """

    name: str
    kind: str
    domain: Domain
    start: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown parameter kind {self.kind!r}")
        if self.start is not None and not self.domain.contains(self.start):
            raise DomainError(f"start value {self.start} outside domain of {self.name!r}")

    @property
    def is_resource(self) -> bool:
        return self.kind in (MEMORY, COUNT)

    @property
    def is_selector(self) -> bool:
        """Boolean/enum parameters select between structure implementations.

        They are nonresource for search purposes but each branch yields its
        own resource footprint, so preprocessing enumerates them separately.
        """
        return isinstance(self.domain, (BoolDomain, EnumDomain))


@dataclass(frozen=True)
class Config:
    """Concrete value for every declared parameter of a program."""

    assignments: dict[str, Value] = field(default_factory=dict)

    def __getitem__(self, name: str) -> Value:
        return self.assignments[name]

    def get(self, name: str, default=None):
        return self.assignments.get(name, default)

    def replace(self, **updates: Value) -> "Config":
        merged = dict(self.assignments)
        merged.update(updates)
        return Config(merged)

    def canonical_text(self) -> str:
        """Flat key=value form, one pair per line, names sorted lexicographically."""
        lines = []
        for name in sorted(self.assignments):
            lines.append(f"{name}={format_value(self.assignments[name])}")
        return "\n".join(lines) + "\n"

    def __hash__(self):
        return hash(self.canonical_text())

    def __eq__(self, other):
        return isinstance(other, Config) and self.assignments == other.assignments


def format_value(value: Value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def parse_value(text: str) -> Value:
    if text == "true":
        return True
    if text == "false":
        return False
    try:
        return int(text)
    except ValueError:
        return text


def parse_config_text(text: str) -> Config:
    """Parse the flat key=value serialization back into a Config."""
    assignments: dict[str, Value] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {line!r}")
        name, _, value = line.partition("=")
        assignments[name.strip()] = parse_value(value.strip())
    return Config(assignments)


@dataclass(frozen=True)
class Violation:
    name: str
    reason: str


def validate_config(specs: list[ParamSpec], config: Config) -> list[Violation]:
    """Check completeness and domain membership; empty result means ok.

    Violations are data, not failures: every (name, reason) pair is reported
    so a caller can surface all problems at once.
    """
    violations = []
    declared = {spec.name: spec for spec in specs}
    for spec in specs:
        if spec.name not in config.assignments:
            violations.append(Violation(spec.name, "missing"))
        elif not spec.domain.contains(config.assignments[spec.name]):
            violations.append(Violation(spec.name, f"value {config.assignments[spec.name]!r} out of domain"))
    for name in config.assignments:
        if name not in declared:
            violations.append(Violation(name, "not declared"))
    return violations


def default_start(spec: ParamSpec, pipe) -> int:
    """Preprocessing starting value for a resource parameter.

    Memory-like parameters start at the full per-stage SRAM budget and
    count-like parameters at 4, both snapped into the declared domain; an
    explicit start on the spec wins.
    """
    if spec.kind == NONRESOURCE:
        raise ValueError(f"{spec.name!r} is nonresource; it has no preprocessing start")
    if spec.start is not None:
        return spec.start
    if spec.kind == MEMORY:
        return spec.domain.clamp(pipe.sram_words_per_stage)
    return spec.domain.clamp(4)
