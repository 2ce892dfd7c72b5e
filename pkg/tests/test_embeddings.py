import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tracekit import embeddings
from tracekit.embeddings import (
    EmbeddingProviderConfig, cosine, embed_texts, pair_representation, text_key,
    write_vector_file,
)
from tracekit.errors import ClientError, DataError
from tracekit.corpus import CandidatePair, load_dataset

from conftest import write_dataset


class TestFileProvider:
    def test_raw_text_keys_order_preserved(self, tmp_path):
        path = tmp_path / "vecs.json"
        path.write_text(json.dumps({"a": [1, 0], "b": [0, 1]}), encoding="utf-8")
        cfg = EmbeddingProviderConfig(kind="file", file_path=str(path))
        vecs = embed_texts(cfg, ["b", "a"])
        assert np.array_equal(vecs[0], [0, 1])
        assert np.array_equal(vecs[1], [1, 0])

    def test_hash_keys(self, tmp_path):
        path = tmp_path / "vecs.json"
        write_vector_file(path, {"hello world": [0.5, 0.5]})
        cfg = EmbeddingProviderConfig(kind="file", file_path=str(path))
        (vec,) = embed_texts(cfg, ["hello world"])
        assert np.allclose(vec, [0.5, 0.5])

    def test_alias_table(self, tmp_path):
        path = tmp_path / "vecs.json"
        path.write_text(json.dumps({
            "vectors": {"k1": [1.0, 2.0]},
            "aliases": {"artifact text": "k1"},
        }), encoding="utf-8")
        cfg = EmbeddingProviderConfig(kind="file", file_path=str(path))
        (vec,) = embed_texts(cfg, ["artifact text"])
        assert np.array_equal(vec, [1.0, 2.0])

    def test_missing_key(self, tmp_path):
        path = tmp_path / "vecs.json"
        path.write_text(json.dumps({"a": [1, 0]}), encoding="utf-8")
        cfg = EmbeddingProviderConfig(kind="file", file_path=str(path))
        with pytest.raises(DataError, match="missing embedding"):
            embed_texts(cfg, ["zzz"])

    def test_empty_texts(self, tmp_path):
        path = tmp_path / "vecs.json"
        path.write_text("{}", encoding="utf-8")
        cfg = EmbeddingProviderConfig(kind="file", file_path=str(path))
        assert embed_texts(cfg, []) == []

    def test_dim_mismatch_in_batch(self, tmp_path):
        path = tmp_path / "vecs.json"
        path.write_text(json.dumps({"a": [1, 0], "b": [1, 0, 0]}), encoding="utf-8")
        cfg = EmbeddingProviderConfig(kind="file", file_path=str(path))
        with pytest.raises(DataError, match="dim mismatch"):
            embed_texts(cfg, ["a", "b"])

    def test_kind_validation(self):
        with pytest.raises(ValueError):
            EmbeddingProviderConfig(kind="file")
        with pytest.raises(ValueError):
            EmbeddingProviderConfig(kind="weird", file_path="x")


def _remote_cfg(responses):
    """Config whose endpoint is served by a scripted transport."""
    calls = []

    def transport(url, body, headers, timeout):
        calls.append(json.loads(body.decode()))
        return 200, json.dumps(responses[len(calls) - 1]).encode()

    return transport, calls


class TestRemoteProvider:
    def test_reorders_by_index(self, monkeypatch):
        transport, calls = _remote_cfg([
            {"data": [
                {"index": 1, "embedding": [0, 1]},
                {"index": 0, "embedding": [1, 0]},
            ]}
        ])
        monkeypatch.setattr(embeddings._http, "_urllib_transport", transport)
        cfg = EmbeddingProviderConfig(kind="remote", endpoint="http://unit.test/embed",
                                      model_name="m")
        vecs = embed_texts(cfg, ["first", "second"])
        assert np.array_equal(vecs[0], [1, 0])
        assert np.array_equal(vecs[1], [0, 1])
        assert calls[0] == {"model": "m", "input": ["first", "second"]}

    def test_count_mismatch(self, monkeypatch):
        transport, _ = _remote_cfg([
            {"data": [{"index": i, "embedding": [1, 0]} for i in range(3)]}
        ])
        monkeypatch.setattr(embeddings._http, "_urllib_transport", transport)
        cfg = EmbeddingProviderConfig(kind="remote", endpoint="http://unit.test/embed")
        with pytest.raises(ClientError, match="count mismatch"):
            embed_texts(cfg, ["a", "b"])

    def test_batching(self, monkeypatch):
        transport, calls = _remote_cfg([
            {"data": [{"index": 0, "embedding": [1.0]}, {"index": 1, "embedding": [2.0]}]},
            {"data": [{"index": 0, "embedding": [3.0]}]},
        ])
        monkeypatch.setattr(embeddings._http, "_urllib_transport", transport)
        cfg = EmbeddingProviderConfig(kind="remote", endpoint="http://unit.test/embed",
                                      batch_size=2)
        vecs = embed_texts(cfg, ["a", "b", "c"])
        assert [v[0] for v in vecs] == [1.0, 2.0, 3.0]
        assert len(calls) == 2


class TestPairRepresentation:
    def test_concatenation_with_single_space(self, tmp_path):
        manifest = write_dataset(tmp_path, {"S1": "A"}, {"T1": "B"}, [])
        ds = load_dataset(tmp_path, manifest)
        assert pair_representation(CandidatePair("S1", "T1", False), ds) == "A B"

    def test_trailing_whitespace_removed_at_load(self, tmp_path):
        manifest = write_dataset(tmp_path, {"S1": "A \n"}, {"T1": " B"}, [])
        ds = load_dataset(tmp_path, manifest)
        assert pair_representation(CandidatePair("S1", "T1", False), ds) == "A B"

    def test_unknown_id(self, tmp_path):
        manifest = write_dataset(tmp_path, {"S1": "A"}, {"T1": "B"}, [])
        ds = load_dataset(tmp_path, manifest)
        with pytest.raises(DataError, match="unknown artifact id"):
            pair_representation(CandidatePair("S1", "T9", False), ds)


class TestCosine:
    def test_identical_unit_vectors(self):
        assert cosine(np.array([1.0, 0.0]), np.array([1.0, 0.0])) == 1.0

    def test_orthogonal(self):
        assert cosine(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    def test_analytic_value(self):
        assert cosine(np.array([1.0, 0.0]), np.array([0.6, 0.8])) == pytest.approx(0.6, abs=1e-12)

    def test_dim_mismatch(self):
        with pytest.raises(ValueError, match="dim mismatch"):
            cosine(np.array([1.0, 0.0]), np.array([1.0, 0.0, 0.0]))

    def test_zero_norm_is_error(self):
        with pytest.raises(ValueError, match="zero-norm"):
            cosine(np.array([0.0, 0.0]), np.array([1.0, 0.0]))


finite_vec = st.lists(
    st.floats(min_value=-100, max_value=100, allow_nan=False).filter(lambda x: abs(x) > 1e-6),
    min_size=2, max_size=6,
)


@settings(max_examples=200, deadline=None)
@given(finite_vec, finite_vec)
def test_cosine_symmetry_exact(u, v):
    n = min(len(u), len(v))
    a, b = np.array(u[:n]), np.array(v[:n])
    assert cosine(a, b) == cosine(b, a)
    assert -1.0 <= cosine(a, b) <= 1.0


@settings(max_examples=200, deadline=None)
@given(finite_vec, finite_vec, st.floats(min_value=1e-3, max_value=1e3))
def test_cosine_scale_invariance(u, v, alpha):
    n = min(len(u), len(v))
    a, b = np.array(u[:n]), np.array(v[:n])
    assert cosine(alpha * a, b) == pytest.approx(cosine(a, b), abs=1e-12)
