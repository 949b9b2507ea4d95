"""
Utility functions and helpers for the accident detection engine.
Stream input, JSONL output and file helpers shared by the CLI and web layers.
"""

import json
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Any, BinaryIO, Dict, Iterable, Iterator, List, Optional, TextIO

import structlog

from app.models import AccidentEvent


logger = structlog.get_logger(__name__)


class FileUtils:
    """Utility functions for file operations."""

    @staticmethod
    def create_directory(path: str) -> bool:
        """Create directory if it doesn't exist."""
        try:
            Path(path).mkdir(parents=True, exist_ok=True)
            return True
        except OSError as e:
            logger.error("create_directory_failed", path=path, error=str(e))
            return False

    @staticmethod
    def truth_path_for(stream_path: str) -> Path:
        """``scenario.jsonl`` -> ``scenario.truth``."""
        return Path(stream_path).with_suffix(".truth")

    @staticmethod
    def write_text(path: str, text: str) -> None:
        target = Path(path)
        if target.parent != Path("."):
            target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text, encoding="utf-8")


class StreamUtils:
    """Reading detection streams and writing JSON lines."""

    @staticmethod
    @contextmanager
    def open_input(path: Optional[str]) -> Iterator[TextIO]:
        """Yield a text handle for ``path``, or stdin when path is None or '-'."""
        if path is None or path == "-":
            yield sys.stdin
            return
        with open(path, encoding="utf-8") as handle:
            yield handle

    @staticmethod
    @contextmanager
    def open_stream(path: Optional[str]) -> Iterator[BinaryIO]:
        """Yield a binary handle for a detection stream; decoding happens per line."""
        if path is None or path == "-":
            yield getattr(sys.stdin, "buffer", sys.stdin)
            return
        with open(path, "rb") as handle:
            yield handle

    @staticmethod
    @contextmanager
    def open_output(path: Optional[str]) -> Iterator[TextIO]:
        """Yield a text handle for ``path``, or stdout when path is None or '-'."""
        if path is None or path == "-":
            yield sys.stdout
            return
        target = Path(path)
        if target.parent != Path("."):
            target.parent.mkdir(parents=True, exist_ok=True)
        with target.open("w", encoding="utf-8") as handle:
            yield handle

    @staticmethod
    def to_jsonl(records: Iterable[Dict[str, Any]]) -> str:
        return "".join(json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n" for record in records)

    @staticmethod
    def events_to_jsonl(events: Iterable[AccidentEvent]) -> str:
        return StreamUtils.to_jsonl(event.to_record() for event in events)

    @staticmethod
    def read_events(lines: Iterable[str]) -> List[AccidentEvent]:
        """Parse previously written event records, skipping blank lines."""
        return [AccidentEvent.from_record(json.loads(line)) for line in lines if line.strip()]
