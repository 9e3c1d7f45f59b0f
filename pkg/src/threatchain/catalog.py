"""Threat-model schema, JSON loading/validation and score resolution."""

from __future__ import annotations

import enum
import json
import math
import re
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Callable, Iterable

from . import cvss


class Stride(enum.Enum):
    SPOOFING = "spoofing"
    TAMPERING = "tampering"
    REPUDIATION = "repudiation"
    INFORMATION_DISCLOSURE = "information_disclosure"
    DENIAL_OF_SERVICE = "denial_of_service"
    ELEVATION_OF_PRIVILEGE = "elevation_of_privilege"


class Requirement(enum.Enum):
    CONFIDENTIALITY = "confidentiality"
    INTEGRITY = "integrity"
    AUTHENTICATION = "authentication"
    AUTHORIZATION = "authorization"
    AVAILABILITY = "availability"


class MuMode(enum.Enum):
    UNIFORM = "uniform"
    PROPORTIONAL = "proportional"


class ModelError(ValueError):
    """A model document could not be turned into a usable model."""


class ModelSyntaxError(ModelError):
    pass


class ModelSchemaError(ModelError):
    pass


class ModelReferenceError(ModelError):
    pass


class InvalidModelError(ModelError):
    """Raised by downstream code when a model carries diagnostic errors."""

    def __init__(self, diagnostics: "ModelDiagnostics"):
        lines = "; ".join(f"{d.code} at {d.location}: {d.message}" for d in diagnostics.errors)
        super().__init__(f"model has {len(diagnostics.errors)} error(s): {lines}")
        self.diagnostics = diagnostics


class ScoreResolutionError(ModelError):
    """Wraps a CVSS failure with the vulnerability it came from."""

    def __init__(self, vuln_id: str, cause: Exception):
        super().__init__(f"{vuln_id}: {cause}")
        self.vuln_id = vuln_id
        self.cause = cause


@dataclass(frozen=True)
class Provenance:
    cve_id: str
    fetched_at: str


@dataclass(frozen=True)
class VulnerabilityRecord:
    id: str
    name: str
    score: float | None = None
    cvss_vector: str | None = None
    resolved_score: float | None = None
    provenance: Provenance | None = None


@dataclass(frozen=True)
class ThreatRecord:
    id: str
    name: str
    stride: Stride
    requirement: Requirement
    exploits: tuple[str, ...]
    note: str | None = None


@dataclass(frozen=True)
class ThreatModel:
    vulnerabilities: tuple[VulnerabilityRecord, ...]
    threats: tuple[ThreatRecord, ...]
    alpha: float
    mu: float
    mu_mode: MuMode = MuMode.UNIFORM
    denominator_override: float | None = None

    def vulnerability(self, vuln_id: str) -> VulnerabilityRecord:
        for v in self.vulnerabilities:
            if v.id == vuln_id:
                return v
        raise KeyError(vuln_id)

    def threat(self, threat_id: str) -> ThreatRecord:
        for t in self.threats:
            if t.id == threat_id:
                return t
        raise KeyError(threat_id)

    def without_override(self) -> "ThreatModel":
        return replace(self, denominator_override=None)


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    location: str


@dataclass
class ModelDiagnostics:
    errors: list[Diagnostic] = field(default_factory=list)
    warnings: list[Diagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def error(self, code: str, message: str, location: str) -> None:
        self.errors.append(Diagnostic(code, message, location))

    def warn(self, code: str, message: str, location: str) -> None:
        self.warnings.append(Diagnostic(code, message, location))

    def raise_for_errors(self) -> None:
        if self.errors:
            raise InvalidModelError(self)


def natural_key(ident: str) -> tuple:
    """Sort key that orders "A2" before "A10"."""
    return tuple(int(p) if p.isdigit() else p for p in re.split(r"(\d+)", ident))


def validate(model: ThreatModel) -> ModelDiagnostics:
    """Semantic checks shared by loading and downstream consumers."""
    diag = ModelDiagnostics()

    vuln_ids: set[str] = set()
    for v in model.vulnerabilities:
        loc = f"vulnerabilities/{v.id}"
        if v.id in vuln_ids:
            diag.error("DuplicateId", f"vulnerability id {v.id} declared twice", loc)
        vuln_ids.add(v.id)
        if (v.score is None) == (v.cvss_vector is None):
            diag.error("SchemaError", f"{v.id} needs exactly one of score / cvss_vector", loc)
        for label, value in (("score", v.score), ("resolved_score", v.resolved_score)):
            if value is not None and not (math.isfinite(value) and 0 <= value <= 10):
                diag.error("RangeError", f"{v.id} {label} {value} outside [0, 10]", loc)

    threat_ids: set[str] = set()
    used: set[str] = set()
    for t in model.threats:
        loc = f"threats/{t.id}"
        if t.id in threat_ids:
            diag.error("DuplicateId", f"threat id {t.id} declared twice", loc)
        threat_ids.add(t.id)
        if not t.exploits:
            diag.error("EmptyExploits", f"threat {t.id} exploits no vulnerability", loc)
        if len(set(t.exploits)) != len(t.exploits):
            diag.error("DuplicateId", f"threat {t.id} lists a vulnerability twice", loc)
        for vid in t.exploits:
            if vid not in vuln_ids:
                diag.error("ReferenceError", f"threat {t.id} references undeclared {vid}", loc)
        used.update(t.exploits)

    if not model.threats:
        diag.error("SchemaError", "model declares no threats", "threats")
    if not (0 < model.alpha < 1):
        diag.error("RangeError", f"alpha {model.alpha} must lie in (0, 1)", "alpha")
    if not (0 < model.mu <= 1):
        diag.error("RangeError", f"mu {model.mu} must lie in (0, 1]", "mu")
    if model.denominator_override is not None and not (
        math.isfinite(model.denominator_override) and model.denominator_override > 0
    ):
        diag.error("RangeError", "denominator_override must be > 0", "denominator_override")

    for v in model.vulnerabilities:
        if v.id not in used:
            diag.warn("UnusedVulnerability", f"{v.id} is exploited by no threat",
                      f"vulnerabilities/{v.id}")
    return diag


def require_valid(model: ThreatModel) -> None:
    validate(model).raise_for_errors()


_TOP_KEYS = {"alpha", "mu", "mu_mode", "denominator_override", "vulnerabilities", "threats"}
_VULN_KEYS = {"id", "name", "score", "cvss_vector", "provenance"}
_THREAT_KEYS = {"id", "name", "stride", "requirement", "exploits", "note"}


def _expect(obj: dict, required: Iterable[str], allowed: set[str], where: str) -> None:
    if not isinstance(obj, dict):
        raise ModelSchemaError(f"{where}: expected an object")
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ModelSchemaError(f"{where}: unknown field(s) {', '.join(unknown)}")
    missing = [k for k in required if k not in obj]
    if missing:
        raise ModelSchemaError(f"{where}: missing field(s) {', '.join(missing)}")


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ModelSchemaError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _enum(kind, value, where: str):
    try:
        return kind(value)
    except ValueError:
        choices = ", ".join(m.value for m in kind)
        raise ModelSchemaError(f"{where}: {value!r} is not one of {choices}") from None


def model_from_dict(doc: dict) -> ThreatModel:
    _expect(doc, ["alpha", "mu", "vulnerabilities", "threats"], _TOP_KEYS, "model")

    vulns = []
    if not isinstance(doc["vulnerabilities"], list):
        raise ModelSchemaError("vulnerabilities: expected a list")
    for n, raw in enumerate(doc["vulnerabilities"]):
        where = f"vulnerabilities[{n}]"
        _expect(raw, ["id", "name"], _VULN_KEYS, where)
        prov = raw.get("provenance")
        if prov is not None:
            _expect(prov, ["cve_id", "fetched_at"], {"cve_id", "fetched_at"}, f"{where}.provenance")
            prov = Provenance(str(prov["cve_id"]), str(prov["fetched_at"]))
        vector = raw.get("cvss_vector")
        if vector is not None and not isinstance(vector, str):
            raise ModelSchemaError(f"{where}.cvss_vector: expected a string")
        vulns.append(VulnerabilityRecord(
            id=str(raw["id"]),
            name=str(raw["name"]),
            score=None if raw.get("score") is None else _number(raw["score"], f"{where}.score"),
            cvss_vector=vector,
            provenance=prov,
        ))

    threats = []
    if not isinstance(doc["threats"], list):
        raise ModelSchemaError("threats: expected a list")
    for n, raw in enumerate(doc["threats"]):
        where = f"threats[{n}]"
        _expect(raw, ["id", "name", "stride", "requirement", "exploits"], _THREAT_KEYS, where)
        if not isinstance(raw["exploits"], list):
            raise ModelSchemaError(f"{where}.exploits: expected a list")
        threats.append(ThreatRecord(
            id=str(raw["id"]),
            name=str(raw["name"]),
            stride=_enum(Stride, raw["stride"], f"{where}.stride"),
            requirement=_enum(Requirement, raw["requirement"], f"{where}.requirement"),
            exploits=tuple(str(x) for x in raw["exploits"]),
            note=raw.get("note"),
        ))

    override = doc.get("denominator_override")
    return ThreatModel(
        vulnerabilities=tuple(vulns),
        threats=tuple(threats),
        alpha=_number(doc["alpha"], "alpha"),
        mu=_number(doc["mu"], "mu"),
        mu_mode=_enum(MuMode, doc.get("mu_mode", "uniform"), "mu_mode"),
        denominator_override=None if override is None else _number(override, "denominator_override"),
    )


def load_model(document: bytes | str) -> tuple[ThreatModel, ModelDiagnostics]:
    """Parse a JSON model document.

    Malformed JSON raises :class:`ModelSyntaxError` and structural problems
    (missing/unknown fields, wrong types) raise :class:`ModelSchemaError`.
    Semantic problems such as dangling references or out-of-range parameters
    are reported in the returned diagnostics instead.
    """
    if isinstance(document, bytes):
        try:
            document = document.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ModelSyntaxError(f"model is not valid UTF-8: {exc}") from None
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ModelSyntaxError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    model = model_from_dict(doc)
    return model, validate(model)


def model_to_dict(model: ThreatModel) -> dict:
    vulns = []
    for v in model.vulnerabilities:
        entry: dict = {"id": v.id, "name": v.name}
        if v.cvss_vector is not None:
            entry["cvss_vector"] = v.cvss_vector
        else:
            entry["score"] = v.score
        if v.provenance is not None:
            entry["provenance"] = {"cve_id": v.provenance.cve_id,
                                   "fetched_at": v.provenance.fetched_at}
        vulns.append(entry)
    threats = []
    for t in model.threats:
        entry = {"id": t.id, "name": t.name, "stride": t.stride.value,
                 "requirement": t.requirement.value, "exploits": list(t.exploits)}
        if t.note is not None:
            entry["note"] = t.note
        threats.append(entry)
    return {
        "alpha": model.alpha,
        "mu": model.mu,
        "mu_mode": model.mu_mode.value,
        "denominator_override": model.denominator_override,
        "vulnerabilities": vulns,
        "threats": threats,
    }


def dump_model(model: ThreatModel) -> str:
    return json.dumps(model_to_dict(model), indent=2) + "\n"


def resolve_scores(model: ThreatModel,
                   scorer: Callable[[str], float] = cvss.base_score) -> ThreatModel:
    """Fill ``resolved_score`` for every vulnerability.

    Literal scores pass straight through; vectors go through ``scorer``
    (CVSS base score by default).
    """
    resolved = []
    for v in model.vulnerabilities:
        if v.cvss_vector is not None:
            try:
                value = scorer(v.cvss_vector)
            except cvss.CvssError as exc:
                raise ScoreResolutionError(v.id, exc) from exc
        else:
            value = v.score
        resolved.append(replace(v, resolved_score=value))
    return replace(model, vulnerabilities=tuple(resolved))


def unresolve(model: ThreatModel) -> ThreatModel:
    return replace(model, vulnerabilities=tuple(
        replace(v, resolved_score=None) for v in model.vulnerabilities))


def builtin_iomt_model() -> ThreatModel:
    """The bundled IoMT edge-network model, scores resolved."""
    text = resources.files("threatchain.data").joinpath("iomt_model.json").read_bytes()
    model, diag = load_model(text)
    diag.raise_for_errors()
    return resolve_scores(model)
