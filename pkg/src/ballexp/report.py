"""Versioned JSON report envelope.

Every command writes one envelope.  ``timing`` sits outside ``payload_digest``
so identical configurations give identical digests across runs.
"""

from __future__ import annotations

import hashlib
import json
import os
from fractions import Fraction
from typing import Optional

from . import __version__
from .numerics import fmt_rational

SCHEMA = "ballexp-report/1"
OUTPUT_ENV = "BALLEXP_OUT"


def jsonable(obj):
    """Recursively convert rationals to ``"p/q"`` strings and tuples to lists."""
    if isinstance(obj, Fraction):
        return fmt_rational(obj)
    if isinstance(obj, dict):
        return {str(k) if not isinstance(k, Fraction) else fmt_rational(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = sorted(obj) if isinstance(obj, (set, frozenset)) else obj
        return [jsonable(v) for v in items]
    return obj


def canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def envelope(command: str, config: dict, payload, verdict: dict, seconds: Optional[float] = None) -> dict:
    body = {
        "schema": SCHEMA,
        "tool_version": __version__,
        "command": command,
        "config": jsonable(config),
        "result": jsonable(payload),
        "verdict": jsonable(verdict),
    }
    body["payload_digest"] = hashlib.sha256(canonical(body).encode()).hexdigest()
    if seconds is not None:
        body["timing"] = {"seconds": round(seconds, 3)}
    return body


def digest_of(report: dict) -> str:
    """Recompute the digest of a loaded envelope."""
    body = {k: v for k, v in report.items() if k not in ("timing", "payload_digest")}
    return hashlib.sha256(canonical(body).encode()).hexdigest()


def output_dir(explicit: Optional[str] = None) -> str:
    return explicit or os.environ.get(OUTPUT_ENV) or "."


def write_text(directory: str, name: str, text: str) -> str:
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, name)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return path


def write_report(directory: str, name: str, report: dict) -> str:
    return write_text(directory, name, json.dumps(report, indent=2, sort_keys=True) + "\n")
