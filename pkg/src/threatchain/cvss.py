"""CVSS v3.x base vector parsing and scoring.

Scores follow the v3.1 base equations. The base score uses the integer
``round_up1`` from the v3.1 appendix; the exploitability and impact subscores
are reported rounded half-up to one decimal, which is how NVD publishes them.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

logger = logging.getLogger(__name__)

PREFIXES = ("CVSS:3.0", "CVSS:3.1")
BASE_METRICS = ("AV", "AC", "PR", "UI", "S", "C", "I", "A")
# temporal + environmental keys: accepted and ignored
OPTIONAL_METRICS = frozenset(
    ["E", "RL", "RC", "CR", "IR", "AR", "MAV", "MAC", "MPR", "MUI", "MS", "MC", "MI", "MA"]
)


class AttackVector(enum.Enum):
    NETWORK = "N"
    ADJACENT = "A"
    LOCAL = "L"
    PHYSICAL = "P"


class AttackComplexity(enum.Enum):
    LOW = "L"
    HIGH = "H"


class PrivilegesRequired(enum.Enum):
    NONE = "N"
    LOW = "L"
    HIGH = "H"


class UserInteraction(enum.Enum):
    NONE = "N"
    REQUIRED = "R"


class Scope(enum.Enum):
    UNCHANGED = "U"
    CHANGED = "C"


class Impact(enum.Enum):
    NONE = "N"
    LOW = "L"
    HIGH = "H"


_METRIC_TYPES = {
    "AV": AttackVector,
    "AC": AttackComplexity,
    "PR": PrivilegesRequired,
    "UI": UserInteraction,
    "S": Scope,
    "C": Impact,
    "I": Impact,
    "A": Impact,
}

_AV = {AttackVector.NETWORK: 0.85, AttackVector.ADJACENT: 0.62,
       AttackVector.LOCAL: 0.55, AttackVector.PHYSICAL: 0.2}
_AC = {AttackComplexity.LOW: 0.77, AttackComplexity.HIGH: 0.44}
_PR_UNCHANGED = {PrivilegesRequired.NONE: 0.85, PrivilegesRequired.LOW: 0.62,
                 PrivilegesRequired.HIGH: 0.27}
_PR_CHANGED = {PrivilegesRequired.NONE: 0.85, PrivilegesRequired.LOW: 0.68,
               PrivilegesRequired.HIGH: 0.5}
_UI = {UserInteraction.NONE: 0.85, UserInteraction.REQUIRED: 0.62}
_CIA = {Impact.NONE: 0.0, Impact.LOW: 0.22, Impact.HIGH: 0.56}


class CvssError(ValueError):
    """Base class for vector parsing failures.

    ``token`` is the offending text and ``offset`` its byte offset in the
    input string (``None`` when the problem is an absence).
    """

    def __init__(self, message: str, token: str | None = None, offset: int | None = None):
        where = f" at offset {offset}" if offset is not None else ""
        super().__init__(f"{message}{where}")
        self.token = token
        self.offset = offset


class MissingPrefix(CvssError):
    pass


class UnknownMetric(CvssError):
    pass


class DuplicateMetric(CvssError):
    pass


class MissingMandatoryMetric(CvssError):
    pass


class InvalidValue(CvssError):
    pass


@dataclass(frozen=True)
class CvssVector:
    attack_vector: AttackVector
    attack_complexity: AttackComplexity
    privileges_required: PrivilegesRequired
    user_interaction: UserInteraction
    scope: Scope
    confidentiality: Impact
    integrity: Impact
    availability: Impact
    version: str = "3.1"

    def metrics(self) -> dict[str, str]:
        values = (self.attack_vector, self.attack_complexity, self.privileges_required,
                  self.user_interaction, self.scope, self.confidentiality,
                  self.integrity, self.availability)
        return {key: v.value for key, v in zip(BASE_METRICS, values)}

    def to_string(self) -> str:
        body = "/".join(f"{k}:{v}" for k, v in self.metrics().items())
        return f"CVSS:{self.version}/{body}"

    __str__ = to_string


@dataclass(frozen=True)
class CvssScores:
    exploitability: float
    impact: float
    base: float


def parse_vector(text: str) -> CvssVector:
    """Parse a CVSS v3.0/v3.1 vector string into a :class:`CvssVector`."""
    prefix, sep, _ = text.partition("/")
    if prefix not in PREFIXES or not sep:
        raise MissingPrefix(f"vector must start with one of {PREFIXES}, got {prefix!r}",
                            token=prefix, offset=0)
    version = prefix.split(":")[1]

    seen: dict[str, str] = {}
    offset = len(prefix) + 1
    for part in text[offset:].split("/"):
        key, colon, value = part.partition(":")
        if not colon or not key:
            raise InvalidValue(f"malformed metric {part!r}", token=part,
                               offset=_byte_offset(text, offset))
        if key in seen:
            raise DuplicateMetric(f"duplicate metric {key}", token=key,
                                  offset=_byte_offset(text, offset))
        if key in _METRIC_TYPES:
            try:
                _METRIC_TYPES[key](value)
            except ValueError:
                raise InvalidValue(f"invalid value {value!r} for metric {key}", token=part,
                                   offset=_byte_offset(text, offset)) from None
        elif key in OPTIONAL_METRICS:
            logger.info("ignoring non-base metric %s in %s", part, text)
        else:
            raise UnknownMetric(f"unknown metric {key}", token=key,
                                offset=_byte_offset(text, offset))
        seen[key] = value
        offset += len(part) + 1

    for key in BASE_METRICS:
        if key not in seen:
            raise MissingMandatoryMetric(f"missing mandatory metric {key}", token=key)

    return CvssVector(*(_METRIC_TYPES[k](seen[k]) for k in BASE_METRICS), version=version)


def _byte_offset(text: str, char_offset: int) -> int:
    return len(text[:char_offset].encode("utf-8"))


def round_up1(x: float) -> float:
    """Smallest one-decimal number >= x, per the v3.1 integer Roundup."""
    if not math.isfinite(x):
        raise ValueError(f"round_up1 needs a finite input, got {x!r}")
    int_input = round(x * 100000)
    if int_input % 10000 == 0:
        return int_input / 100000.0
    return (math.floor(int_input / 10000) + 1) / 10.0


def _round1(x: float) -> float:
    return float(Decimal(repr(x)).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


def score_vector(v: CvssVector) -> CvssScores:
    changed = v.scope is Scope.CHANGED
    pr = (_PR_CHANGED if changed else _PR_UNCHANGED)[v.privileges_required]
    exploitability = 8.22 * _AV[v.attack_vector] * _AC[v.attack_complexity] * pr * _UI[v.user_interaction]

    iss = 1 - ((1 - _CIA[v.confidentiality]) * (1 - _CIA[v.integrity]) * (1 - _CIA[v.availability]))
    if changed:
        impact = 7.52 * (iss - 0.029) - 3.25 * (iss - 0.02) ** 15
    else:
        impact = 6.42 * iss

    if impact <= 0:
        base = 0.0
    elif changed:
        base = round_up1(min(1.08 * (impact + exploitability), 10))
    else:
        base = round_up1(min(impact + exploitability, 10))

    return CvssScores(
        exploitability=_round1(exploitability),
        impact=_round1(max(impact, 0.0)),
        base=base,
    )


def base_score(text: str) -> float:
    return score_vector(parse_vector(text)).base
