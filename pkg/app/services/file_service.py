# app/services/file_service.py
import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

from app.config.settings import settings

logger = logging.getLogger(__name__)


class FileService:
    """Writes run artifacts (CSV tables, text verdicts, JSON sidecars) under one output directory"""

    def __init__(self, output_dir: Optional[str] = None):
        self.output_dir = Path(output_dir or settings.OUTPUT_DIR)
        self._ensure_directories()

    def _ensure_directories(self):
        """Create the output directory if it doesn't exist"""
        self.output_dir.mkdir(parents=True, exist_ok=True)

    def write_csv(self, name: str, fields: Sequence[str], rows: Iterable[Dict[str, Any]]) -> Path:
        """Rows are dicts of strings; missing fields are written empty"""
        path = self.output_dir / name
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.DictWriter(handle, fieldnames=list(fields), lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow({field: row.get(field, "") for field in fields})
        logger.info(f"Wrote {path}")
        return path

    def read_csv(self, name: str) -> List[Dict[str, str]]:
        with open(self.output_dir / name, newline="", encoding="utf-8") as handle:
            return list(csv.DictReader(handle))

    def write_text(self, name: str, text: str) -> Path:
        path = self.output_dir / name
        path.write_text(text, encoding="utf-8")
        logger.info(f"Wrote {path}")
        return path

    def write_json(self, name: str, payload: Dict[str, Any]) -> Path:
        path = self.output_dir / name
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        logger.info(f"Wrote {path}")
        return path
