"""
Caching utilities.
Provides hash-based cache keys and a disk cache for analysis documents.
"""

import hashlib
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, Optional

import diskcache
import orjson

logger = logging.getLogger(__name__)


def compute_data_hash(data: Any) -> str:
    """
    Compute a hash of the data for cache invalidation.

    Args:
        data: Any JSON-serializable data structure

    Returns:
        16-character MD5 hash string
    """
    canonical = orjson.dumps(data, default=str, option=orjson.OPT_SORT_KEYS | orjson.OPT_NON_STR_KEYS)
    return hashlib.md5(canonical).hexdigest()[:16]


def file_digest(path: Path, chunk_size: int = 1 << 20) -> str:
    """MD5 of a file's content, read in chunks."""
    digest = hashlib.md5()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(chunk_size), b""):
            digest.update(chunk)
    return digest.hexdigest()


class AnalysisCache:
    """
    Disk cache of analysis documents keyed by trace content and analysis settings.
    """

    def __init__(self, directory: str, key_prefix: str = "msgflow"):
        self.directory = directory
        self.key_prefix = key_prefix
        self._cache = diskcache.Cache(directory)

    def cache_key(self, paths: Iterable[Path], settings: Dict[str, Any]) -> str:
        """Generate a key from the trace files' content and the analysis settings."""
        files = sorted((Path(p).name, file_digest(Path(p))) for p in paths)
        return f"{self.key_prefix}_{compute_data_hash({'files': files, 'settings': settings})}"

    def get(self, key: str) -> Optional[bytes]:
        try:
            value = self._cache.get(key)
        except Exception as e:
            logger.warning(f"Error reading analysis cache: {e}")
            return None
        if value is not None:
            logger.info(f"Using cached analysis document {key}")
        return value

    def set(self, key: str, document: bytes) -> None:
        try:
            self._cache.set(key, document)
        except Exception as e:
            logger.warning(f"Error writing analysis cache: {e}")

    def clear(self) -> None:
        self._cache.clear()

    def close(self) -> None:
        self._cache.close()

    def __enter__(self) -> "AnalysisCache":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
