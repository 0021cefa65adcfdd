# app/services/cache_service.py
"""
Content-addressed cache of computed documents.
File location: app/services/cache_service.py

Entries live at <cache_dir>/<namespace>/<sha256 of the key>.json and hold
the document with its own checksum; a mismatch means the entry is
recomputed, never trusted. Writes go to a temporary file in the same
directory followed by os.replace, so readers never see partial entries.
"""

import hashlib
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Optional

from app.config.settings import settings

logger = logging.getLogger(__name__)


def canonical_json(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)


def content_hash(payload: Any) -> str:
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


class CacheService:
    def __init__(self, cache_dir: Optional[str] = None, enabled: bool = True):
        self.cache_dir = Path(cache_dir or settings.CACHE_DIR)
        self.enabled = enabled

    def key(self, payload: Dict[str, Any]) -> str:
        return content_hash(payload)

    def _path(self, namespace: str, key: str) -> Path:
        return self.cache_dir / namespace / f"{key}.json"

    def get(self, namespace: str, key: str) -> Optional[Dict[str, Any]]:
        if not self.enabled:
            return None
        path = self._path(namespace, key)
        if not path.exists():
            logger.info(f"cache miss {namespace}/{key[:12]}")
            return None
        try:
            entry = json.loads(path.read_text(encoding="utf-8"))
            document = entry["document"]
            if entry.get("checksum") != content_hash(document):
                logger.warning(f"cache entry {namespace}/{key[:12]} fails its checksum, recomputing")
                return None
        except (OSError, ValueError, KeyError, TypeError) as e:
            logger.warning(f"unreadable cache entry {namespace}/{key[:12]}: {str(e)}")
            return None
        logger.info(f"cache hit {namespace}/{key[:12]}")
        return document

    def put(self, namespace: str, key: str, document: Dict[str, Any]) -> Optional[Path]:
        if not self.enabled:
            return None
        path = self._path(namespace, key)
        path.parent.mkdir(parents=True, exist_ok=True)
        entry = {"checksum": content_hash(document), "document": document}
        handle = tempfile.NamedTemporaryFile(
            "w", dir=path.parent, prefix=".tmp-", suffix=".json", delete=False, encoding="utf-8"
        )
        try:
            with handle:
                handle.write(canonical_json(entry))
            os.replace(handle.name, path)
        except OSError:
            if os.path.exists(handle.name):
                os.unlink(handle.name)
            raise
        return path
