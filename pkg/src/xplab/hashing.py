"""Canonical JSON serialization and digests, used to stamp outputs with provenance."""

import hashlib
import json


def canonical_json(obj) -> str:
    """Serialize with sorted keys and no whitespace so equal configs hash equally."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def canonical_digest(obj) -> str:
    return "sha256:" + hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()
