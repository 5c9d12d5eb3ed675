import pytest

from msgflow.core.cache import AnalysisCache, compute_data_hash, file_digest
from msgflow.core.config import AnalysisConfig, SyncMode
from msgflow.core.utils import dumps_document, make_json_serializable


def test_hash_ignores_key_order():
    assert compute_data_hash({"a": 1, "b": [1, 2]}) == compute_data_hash({"b": [1, 2], "a": 1})
    assert compute_data_hash({"a": 1}) != compute_data_hash({"a": 2})
    assert len(compute_data_hash({})) == 16


def test_cache_key_follows_content_and_settings(tmp_path):
    trace = tmp_path / "A.jsonl"
    trace.write_text("{}\n")
    with AnalysisCache(str(tmp_path / "cache")) as cache:
        key = cache.cache_key([trace], {"sync_mode": "pairs"})
        assert key.startswith("msgflow_")
        assert cache.cache_key([trace], {"sync_mode": "assume-synchronized"}) != key

        assert cache.get(key) is None
        cache.set(key, b"document")
        assert cache.get(key) == b"document"

        trace.write_text("{}\n{}\n")
        assert cache.cache_key([trace], {"sync_mode": "pairs"}) != key


def test_file_digest_reads_in_chunks(tmp_path):
    path = tmp_path / "blob"
    path.write_bytes(b"x" * 100)
    assert file_digest(path, chunk_size=7) == file_digest(path)


def test_config_overrides_layer_on_environment(monkeypatch):
    monkeypatch.setenv("MSGFLOW_SYNC_MODE", "assume-synchronized")
    monkeypatch.setenv("MSGFLOW_PX_PER_MS", "2.5")
    config = AnalysisConfig.load({"reference_host": "B", "min_one_way_delay_ns": None})
    assert config.sync_mode is SyncMode.ASSUME_SYNCHRONIZED
    assert config.px_per_ms == 2.5
    assert config.reference_host == "B"
    assert config.min_one_way_delay_ns == 0

    assert AnalysisConfig.load({"sync_mode": "pairs"}).sync_mode is SyncMode.PAIRS
    assert "px_per_ms" not in config.cache_key_fields()


def test_bad_sync_mode_in_environment(monkeypatch):
    monkeypatch.setenv("MSGFLOW_SYNC_MODE", "ntp")
    with pytest.raises(ValueError):
        AnalysisConfig.from_environment()


def test_documents_are_byte_stable():
    a = dumps_document({"b": (1, 2), "a": SyncMode.PAIRS})
    b = dumps_document({"a": SyncMode.PAIRS, "b": [1, 2]})
    assert a == b
    assert make_json_serializable({"x": (1, 2)}) == {"x": [1, 2]}
