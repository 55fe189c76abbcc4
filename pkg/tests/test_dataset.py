import hashlib
import json

import numpy as np
import pytest

from synthfit import dataset as ds
from synthfit.errors import (
    BadMagicError,
    BadVersionError,
    FormatError,
    InputError,
    TruncatedFileError,
)
from synthfit.features import kmeans_fit, pca_fit, stft_logmag
from synthfit.params import LABEL_DIM, decode, encode, sample_patch
from synthfit.profiles import DESK_PROFILE, FULL_PROFILE


@pytest.fixture(scope="module")
def small_corpus(tmp_path_factory):
    stem = tmp_path_factory.mktemp("corpus") / "small"
    paths = ds.generate(stem, n=6, seed=11, profile=DESK_PROFILE)
    return paths


def test_label_pack_round_trip():
    rng = np.random.default_rng(0)
    for _ in range(20):
        pc = sample_patch(rng)
        bits = encode(pc)
        packed = ds.pack_label(bits)
        assert len(packed) == ds.LABEL_BYTES
        back = ds.unpack_label(packed)
        assert np.array_equal(back, bits)
        assert decode(back) == pc


def test_writer_read_header_round_trip(tmp_path):
    path = tmp_path / "x.ivsd"
    rng = np.random.default_rng(1)
    with ds.DatasetWriter(path, "bow", 3, 5) as w:
        for _ in range(3):
            w.add(rng.random(5).astype(np.float32), encode(sample_patch(rng)))
    assert ds.read_header(path) == ("bow", 3, 5)


def test_stream_and_load_agree(tmp_path):
    path = tmp_path / "x.ivsd"
    rng = np.random.default_rng(2)
    feats = rng.random((4, 7)).astype(np.float32)
    labels = [encode(sample_patch(rng)) for _ in range(4)]
    with ds.DatasetWriter(path, "bow", 4, 7) as w:
        for row, lab in zip(feats, labels):
            w.add(row, lab)
    streamed = list(ds.stream(path))
    assert len(streamed) == 4
    for (f, l), row, lab in zip(streamed, feats, labels):
        assert f.dtype == np.float32 and f.shape == (7,)
        assert np.array_equal(f, row)
        assert np.array_equal(l, lab)
    all_f, all_l = ds.load(path)
    assert np.array_equal(all_f, feats)
    assert np.array_equal(all_l, np.stack(labels))


def test_writer_rejects_wrong_sizes(tmp_path):
    w = ds.DatasetWriter(tmp_path / "x.ivsd", "bow", 1, 5)
    with pytest.raises(InputError):
        w.add(np.zeros(4, np.float32), encode(sample_patch(np.random.default_rng(0))))
    w.abort()
    with pytest.raises(InputError):
        ds.DatasetWriter(tmp_path / "y.ivsd", "raw", 1, 100)
    with pytest.raises(InputError):
        ds.DatasetWriter(tmp_path / "z.ivsd", "nope", 1, 5)


def test_writer_undercount_leaves_no_file(tmp_path):
    path = tmp_path / "x.ivsd"
    w = ds.DatasetWriter(path, "bow", 2, 3)
    w.add(np.zeros(3, np.float32), encode(sample_patch(np.random.default_rng(0))))
    with pytest.raises(InputError):
        w.close()
    assert not path.exists()
    assert not path.with_name(path.name + ".tmp").exists()


def test_writer_abort_on_exception_cleans_up(tmp_path):
    path = tmp_path / "x.ivsd"
    with pytest.raises(RuntimeError):
        with ds.DatasetWriter(path, "bow", 2, 3) as w:
            w.add(np.zeros(3, np.float32), encode(sample_patch(np.random.default_rng(0))))
            raise RuntimeError("disk on fire")
    assert not path.exists()
    assert not path.with_name(path.name + ".tmp").exists()


def test_generate_writes_paired_files_and_manifests(small_corpus):
    for kind in ("raw", "stft"):
        path = small_corpus[kind]
        assert path.exists()
        got_kind, n, record_floats = ds.read_header(path)
        assert got_kind == kind and n == 6
        manifest = ds.read_manifest(path)
        assert manifest["kind"] == kind
        assert manifest["n"] == 6 and manifest["seed"] == 11
        assert manifest["sampling"]["name"] == "desk"
        assert manifest["record_floats"] == record_floats


def test_content_hash_matches_payload(small_corpus):
    path = small_corpus["raw"]
    manifest = ds.read_manifest(path)
    payload = path.read_bytes()[ds._HEADER.size :]
    assert manifest["content_hash"] == hashlib.sha256(payload).hexdigest()


def test_regeneration_is_byte_identical(tmp_path, small_corpus):
    again = ds.generate(tmp_path / "again", n=6, seed=11, profile=DESK_PROFILE)
    for kind in ("raw", "stft"):
        assert again[kind].read_bytes() == small_corpus[kind].read_bytes()
    m1 = ds.read_manifest(small_corpus["stft"])
    m2 = ds.read_manifest(again["stft"])
    assert m1 == m2


def test_prefix_records_do_not_depend_on_corpus_size(tmp_path, small_corpus):
    shorter = ds.generate(tmp_path / "short", n=3, seed=11, profile=DESK_PROFILE)
    long_recs = list(ds.stream(small_corpus["raw"]))[:3]
    short_recs = list(ds.stream(shorter["raw"]))
    for (fl, ll), (fs, lss) in zip(long_recs, short_recs):
        assert np.array_equal(fl, fs)
        assert np.array_equal(ll, lss)


def test_different_seed_changes_content(tmp_path, small_corpus):
    other = ds.generate(tmp_path / "other", n=6, seed=12, profile=DESK_PROFILE)
    assert (
        ds.read_manifest(other["raw"])["content_hash"]
        != ds.read_manifest(small_corpus["raw"])["content_hash"]
    )


def test_paired_records_are_consistent(small_corpus):
    for (audio, la), (spec, ls) in zip(
        ds.stream(small_corpus["raw"]), ds.stream(small_corpus["stft"])
    ):
        assert np.array_equal(la, ls)
        recomputed = np.asarray(stft_logmag(audio), dtype=np.float32)
        assert np.array_equal(recomputed, spec)


def test_labels_honor_the_profile(small_corpus):
    pins = dict(DESK_PROFILE.pinned)
    for _, label in ds.stream(small_corpus["raw"]):
        pc = decode(label)
        for pid, cls in pins.items():
            assert pc[pid] == cls


def test_norm_stats_match_recomputation(small_corpus):
    manifest = ds.read_manifest(small_corpus["stft"])
    feats, _ = ds.load(small_corpus["stft"])
    values = feats.astype(np.float64)
    assert manifest["norm"]["mean"] == pytest.approx(values.mean(), abs=1e-12)
    assert manifest["norm"]["std"] == pytest.approx(values.std(), abs=1e-12)


def test_config_hash_semantics(tmp_path, small_corpus):
    m_raw = ds.read_manifest(small_corpus["raw"])
    m_stft = ds.read_manifest(small_corpus["stft"])
    assert m_raw["config_hash"] == m_stft["config_hash"]

    reseeded = ds.generate(tmp_path / "reseed", n=2, seed=99, profile=DESK_PROFILE)
    assert ds.read_manifest(reseeded["raw"])["config_hash"] == m_raw["config_hash"]

    full = ds.generate(tmp_path / "full", n=2, seed=11, profile=FULL_PROFILE)
    assert ds.read_manifest(full["raw"])["config_hash"] != m_raw["config_hash"]


def test_bad_magic(tmp_path, small_corpus):
    path = tmp_path / "junk.ivsd"
    data = bytearray(small_corpus["raw"].read_bytes())
    data[:4] = b"WAT?"
    path.write_bytes(data)
    with pytest.raises(BadMagicError):
        ds.read_header(path)


def test_bad_version(tmp_path, small_corpus):
    path = tmp_path / "vers.ivsd"
    data = bytearray(small_corpus["raw"].read_bytes())
    data[4:8] = (99).to_bytes(4, "little")
    path.write_bytes(data)
    with pytest.raises(BadVersionError):
        ds.read_header(path)


def test_truncated_file(tmp_path, small_corpus):
    path = tmp_path / "cut.ivsd"
    data = small_corpus["raw"].read_bytes()
    path.write_bytes(data[: len(data) - 100])
    with pytest.raises(TruncatedFileError):
        ds.read_header(path)
    path.write_bytes(data[:10])
    with pytest.raises(TruncatedFileError):
        ds.read_header(path)


def test_trailing_garbage_rejected(tmp_path, small_corpus):
    path = tmp_path / "fat.ivsd"
    path.write_bytes(small_corpus["raw"].read_bytes() + b"junk")
    with pytest.raises(FormatError):
        ds.read_header(path)


def test_missing_and_malformed_manifests(tmp_path, small_corpus):
    with pytest.raises(InputError):
        ds.read_manifest(tmp_path / "ghost.ivsd")
    bad = tmp_path / "bad.ivsd"
    bad.write_bytes(b"")
    ds.manifest_path(bad).write_text("{not json")
    with pytest.raises(FormatError):
        ds.read_manifest(bad)
    ds.manifest_path(bad).write_text(json.dumps({"kind": "raw"}))
    with pytest.raises(FormatError):
        ds.read_manifest(bad)


def test_derive_bow(tmp_path, small_corpus):
    feats, labels = ds.load(small_corpus["stft"])
    frames = feats.astype(np.float64).transpose(0, 2, 1).reshape(-1, feats.shape[1])
    pca = pca_fit(frames, target_dim=16)
    from synthfit.features import pca_transform

    codebook = kmeans_fit(pca_transform(pca, frames), k=8, rng=np.random.default_rng(0))
    out = ds.derive_bow(small_corpus["stft"], tmp_path / "bow.ivsd", pca, codebook)
    kind, n, record_floats = ds.read_header(out)
    assert (kind, n, record_floats) == ("bow", 6, 8)
    bow_feats, bow_labels = ds.load(out)
    assert np.array_equal(bow_labels, labels)
    assert np.allclose(bow_feats.sum(axis=1), 1.0, atol=1e-6)
    manifest = ds.read_manifest(out)
    assert manifest["kind"] == "bow"
    assert manifest["bow"] == {"k": 8, "pca_dim": 16}
    assert manifest["config_hash"] == ds.read_manifest(small_corpus["stft"])["config_hash"]
    assert manifest["source_content_hash"] == ds.read_manifest(small_corpus["stft"])["content_hash"]


def test_derive_bow_rejects_non_stft(tmp_path, small_corpus):
    feats, _ = ds.load(small_corpus["stft"])
    frames = feats.astype(np.float64).transpose(0, 2, 1).reshape(-1, feats.shape[1])
    pca = pca_fit(frames, target_dim=4)
    from synthfit.features import pca_transform

    codebook = kmeans_fit(pca_transform(pca, frames), k=4, rng=np.random.default_rng(0))
    with pytest.raises(InputError):
        ds.derive_bow(small_corpus["raw"], tmp_path / "bow.ivsd", pca, codebook)
