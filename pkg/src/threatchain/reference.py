"""Published attack probabilities for the bundled IoMT model.

``PUBLISHED_P_ATTACK`` holds the per-threat two-step probabilities as
originally reported for this model. Several rows cannot be recomputed from
the model's own weights; those are listed in ``DISCREPANCIES`` with the
reason, and only rows marked ``"excluded"`` are dropped from golden checks.
"""

from __future__ import annotations

from dataclasses import dataclass

# alpha_i * mu_i as published; mu = 0.98 everywhere
PUBLISHED_P_ATTACK: dict[str, float] = {
    "A1": 3.44e-3,
    "A2": 3.44e-3,
    "A3": 2.078e-3,
    "A4": 3.44e-3,
    "A5": 0.939e-3,
    "A6": 1.99e-3,
    "A7": 1.11e-3,
    "A8": 5.433e-3,
    "A9": 5.753e-3,
    "A10": 3.044e-3,
    "A11": 3.44e-3,
    "A12": 19.1e-3,
}

# alpha_i as published (A7's entry was printed as 1.132 with no exponent)
PUBLISHED_ALPHA: dict[str, float] = {
    "A1": 0.003506, "A2": 0.003506, "A3": 0.00212, "A4": 0.003506, "A5": 0.00098,
    "A6": 0.00204, "A7": 1.132, "A8": 0.00554, "A9": 0.00587, "A10": 0.00311,
    "A11": 0.003506, "A12": 0.019,
}

GOLDEN_REL_TOL = 0.02


@dataclass(frozen=True)
class Discrepancy:
    threat_id: str
    status: str  # "excluded" or "flagged"
    reason: str


DISCREPANCIES: tuple[Discrepancy, ...] = (
    Discrepancy("A5", "flagged",
                "W=13.0 gives alpha=0.00106 and p=1.0388e-3; published alpha 0.00098 and "
                "p 0.939e-3 are not recoverable from the weights (about 10% low)"),
    Discrepancy("A7", "excluded",
                "published alpha 1.132 is not a probability; W=35.6 gives alpha=0.00290"),
    Discrepancy("A8", "excluded",
                "W=6.8 gives alpha=0.000554; published 0.00554 is 10x larger"),
    Discrepancy("A9", "excluded",
                "W=7.2 gives alpha=0.000587; published 0.00587 is 10x larger"),
    Discrepancy("A11", "excluded",
                "exploits only V7 (W=7.0) yet the published value copies A1's alpha 0.003506"),
    Discrepancy("A12", "excluded",
                "W=23.9 gives alpha=0.00195; published 0.019 is 10x larger"),
)

PUBLISHED_DENOMINATOR = 390.0


def excluded_threats() -> set[str]:
    return {d.threat_id for d in DISCREPANCIES if d.status == "excluded"}


def flagged_threats() -> set[str]:
    return {d.threat_id for d in DISCREPANCIES if d.status == "flagged"}


def golden_threats() -> list[str]:
    """Rows expected to match the published values within ``GOLDEN_REL_TOL``."""
    skip = excluded_threats() | flagged_threats()
    return [t for t in PUBLISHED_P_ATTACK if t not in skip]
