"""NVD CVE API 2.0 client used to hydrate vulnerabilities with CVSS vectors.

The transport is injected: :class:`HttpTransport` talks to the live API,
:class:`FixtureTransport` serves stored responses from a directory of
``<CVE-ID>.json`` files and never touches the network.
"""

from __future__ import annotations

import datetime as dt
import json
import logging
import os
import re
import threading
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Protocol

from . import cvss
from .catalog import ModelReferenceError, Provenance, ThreatModel, require_valid, resolve_scores

logger = logging.getLogger(__name__)

NVD_CVE_ENDPOINT = "https://services.nvd.nist.gov/rest/json/cves/2.0"
API_KEY_ENV = "NVD_API_KEY"
CVE_PATTERN = re.compile(r"^CVE-\d{4}-\d{4,}$")


class NvdError(Exception):
    pass


class InvalidCveId(NvdError, ValueError):
    pass


class NotFound(NvdError):
    pass


class RateLimited(NvdError):
    def __init__(self, message: str, retry_after: float | None = None):
        super().__init__(message)
        self.retry_after = retry_after


class MalformedResponse(NvdError):
    pass


class NoV3Metrics(NvdError):
    pass


class HydrationError(NvdError):
    def __init__(self, vuln_id: str, cause: Exception):
        super().__init__(f"{vuln_id}: {cause}")
        self.vuln_id = vuln_id
        self.cause = cause


@dataclass(frozen=True)
class CveRecord:
    cve_id: str
    vector: str
    base_score_published: float
    fetched_at: str


class Transport(Protocol):
    def get(self, cve_id: str) -> bytes:
        """Raw response body for ``cve_id``."""


class FixtureTransport:
    def __init__(self, directory: str | os.PathLike):
        self.directory = Path(directory)

    def get(self, cve_id: str) -> bytes:
        path = self.directory / f"{cve_id}.json"
        try:
            return path.read_bytes()
        except FileNotFoundError:
            raise NotFound(f"{cve_id}: no fixture at {path}") from None


class HttpTransport:
    """Live NVD transport with a per-instance request-rate ceiling.

    NVD allows 5 requests / 30 s without a key and 50 / 30 s with one; the
    default spacing follows those limits.
    """

    def __init__(self, api_key: str | None = None, min_interval: float | None = None,
                 endpoint: str = NVD_CVE_ENDPOINT, timeout: float = 30.0, session=None):
        if api_key is None:
            api_key = os.environ.get(API_KEY_ENV) or None
        self.api_key = api_key
        self.min_interval = min_interval if min_interval is not None else (0.6 if api_key else 6.0)
        self.endpoint = endpoint
        self.timeout = timeout
        if session is None:
            import requests
            session = requests.Session()
        self.session = session
        self._lock = threading.Lock()
        self._last = -float("inf")

    def _wait_turn(self) -> None:
        with self._lock:
            now = time.monotonic()
            delay = self._last + self.min_interval - now
            if delay > 0:
                time.sleep(delay)
            self._last = time.monotonic()

    def get(self, cve_id: str) -> bytes:
        self._wait_turn()
        headers = {"apiKey": self.api_key} if self.api_key else {}
        resp = self.session.get(self.endpoint, params={"cveId": cve_id},
                                headers=headers, timeout=self.timeout)
        if resp.status_code in (403, 429, 503):
            retry = resp.headers.get("Retry-After")
            raise RateLimited(f"NVD answered {resp.status_code} for {cve_id}",
                              retry_after=float(retry) if retry else None)
        if resp.status_code == 404:
            raise NotFound(f"{cve_id}: NVD returned 404")
        if resp.status_code != 200:
            raise NvdError(f"NVD answered {resp.status_code} for {cve_id}")
        return resp.content


def _pick_metric(metrics: dict) -> dict | None:
    for key in ("cvssMetricV31", "cvssMetricV30"):
        entries = metrics.get(key) or []
        if entries:
            primary = [e for e in entries if e.get("type") == "Primary"]
            return (primary or entries)[0]
    return None


def parse_response(cve_id: str, body: bytes) -> CveRecord:
    try:
        doc = json.loads(body)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedResponse(f"{cve_id}: response is not JSON ({exc})") from None
    try:
        vulns = doc["vulnerabilities"]
        if not vulns:
            raise NotFound(f"{cve_id}: NVD has no such CVE")
        cve = vulns[0]["cve"]
        if cve["id"] != cve_id:
            raise MalformedResponse(f"{cve_id}: response is for {cve['id']}")
        metric = _pick_metric(cve.get("metrics", {}))
        if metric is None:
            raise NoV3Metrics(f"{cve_id}: no CVSS v3.x metrics published")
        data = metric["cvssData"]
        vector = data["vectorString"]
        score = float(data["baseScore"])
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        if isinstance(exc, NvdError):
            raise
        raise MalformedResponse(f"{cve_id}: unexpected response layout ({exc!r})") from None
    try:
        cvss.parse_vector(vector)
    except cvss.CvssError as exc:
        raise MalformedResponse(f"{cve_id}: unparseable vector {vector!r} ({exc})") from None
    fetched_at = doc.get("timestamp") or dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")
    return CveRecord(cve_id=cve_id, vector=vector, base_score_published=score, fetched_at=fetched_at)


def fetch_cve(cve_id: str, transport: Transport) -> CveRecord:
    if not CVE_PATTERN.match(cve_id):
        raise InvalidCveId(f"{cve_id!r} is not a CVE identifier")
    return parse_response(cve_id, transport.get(cve_id))


def hydrate_model(model: ThreatModel, mapping: Mapping[str, str], transport: Transport) -> ThreatModel:
    """Replace mapped vulnerabilities' scores with fetched CVSS vectors.

    ``mapping`` goes from vulnerability id to CVE id. Hydrated entries carry
    the CVE id and fetch time as provenance; scores are re-resolved.
    """
    if not mapping:
        return model
    declared = {v.id for v in model.vulnerabilities}
    unknown = sorted(set(mapping) - declared)
    if unknown:
        raise ModelReferenceError(f"mapping names undeclared vulnerabilities {unknown}")
    require_valid(model)

    updated = []
    for v in model.vulnerabilities:
        cve_id = mapping.get(v.id)
        if cve_id is None:
            updated.append(v)
            continue
        try:
            record = fetch_cve(cve_id, transport)
        except NvdError as exc:
            raise HydrationError(v.id, exc) from exc
        logger.info("%s <- %s (%s, published base %.1f)", v.id, cve_id, record.vector,
                    record.base_score_published)
        updated.append(replace(v, score=None, cvss_vector=record.vector, resolved_score=None,
                               provenance=Provenance(cve_id, record.fetched_at)))
    return resolve_scores(replace(model, vulnerabilities=tuple(updated)))
