"""Model builders shared by several test modules."""

import json

import numpy as np

from threatchain import catalog


def small_model_doc(**overrides) -> dict:
    doc = {
        "alpha": 0.2,
        "mu": 0.9,
        "mu_mode": "uniform",
        "denominator_override": None,
        "vulnerabilities": [
            {"id": "V1", "name": "one", "score": 4.0},
            {"id": "V2", "name": "two", "score": 6.0},
        ],
        "threats": [
            {"id": "A1", "name": "first", "stride": "spoofing", "requirement": "authentication",
             "exploits": ["V1"]},
            {"id": "A2", "name": "second", "stride": "tampering", "requirement": "integrity",
             "exploits": ["V1", "V2"]},
        ],
    }
    doc.update(overrides)
    return doc


def load_doc(doc: dict):
    return catalog.load_model(json.dumps(doc).encode())


def random_model(rng: np.random.Generator, override: bool = False,
                 max_score: float = 10.0) -> catalog.ThreatModel:
    """A random valid, resolved model with 1-20 threats over 1-15 vulnerabilities."""
    n_v = int(rng.integers(1, 16))
    n_t = int(rng.integers(1, 21))
    scores = np.round(rng.uniform(0.1, 10.0, n_v), 1) * (max_score / 10.0)
    vulns = tuple(catalog.VulnerabilityRecord(f"V{j + 1}", f"vuln {j + 1}", float(s), resolved_score=float(s))
                  for j, s in enumerate(scores))
    threats = []
    for i in range(n_t):
        k = int(rng.integers(1, n_v + 1))
        picked = sorted(rng.choice(n_v, size=k, replace=False))
        threats.append(catalog.ThreatRecord(
            f"A{i + 1}", f"threat {i + 1}", catalog.Stride.SPOOFING,
            catalog.Requirement.AUTHENTICATION, tuple(f"V{j + 1}" for j in picked)))
    total = sum(sum(scores[int(v[1:]) - 1] for v in t.exploits) for t in threats)
    return catalog.ThreatModel(
        vulnerabilities=vulns,
        threats=tuple(threats),
        alpha=float(rng.uniform(0.001, 0.999)),
        mu=float(rng.uniform(0.01, 1.0)),
        mu_mode=catalog.MuMode.PROPORTIONAL if rng.random() < 0.3 else catalog.MuMode.UNIFORM,
        denominator_override=float(total * rng.uniform(1.0, 2.0)) if override else None,
    )
