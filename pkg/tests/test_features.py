import numpy as np
import pytest

from synthfit import features
from synthfit.errors import InputError


def sine(hz, n=16384, rate=16384):
    return np.sin(2 * np.pi * hz * np.arange(n) / rate)


# --- stft ---

def test_stft_shape_and_zero_input():
    s = features.stft_logmag(np.zeros(16384))
    assert s.shape == (257, 64)
    assert np.allclose(s, np.log(1e-7))


def test_stft_rejects_wrong_length():
    with pytest.raises(InputError):
        features.stft_logmag(np.zeros(1000))


def test_stft_440hz_peak_bin():
    # 440 Hz falls at bin 440 * 512 / 16384 = 13.75, so the per-frame
    # argmax must sit at 13 or 14
    s = features.stft_logmag(sine(440.0))
    peaks = s.argmax(axis=0)
    assert set(peaks) <= {13, 14}


def test_stft_shift_covariance_at_hop():
    rng = np.random.default_rng(3)
    x = rng.standard_normal(16384)
    delayed = np.concatenate([np.zeros(256), x[:-256]])
    a = features.stft_logmag(x)
    b = features.stft_logmag(delayed)
    # interior frames of the delayed signal reproduce the originals one
    # frame later
    assert np.allclose(b[:, 2:62], a[:, 1:61], atol=1e-9)


def test_stft_finite_on_loud_input():
    s = features.stft_logmag(np.ones(16384))
    assert np.all(np.isfinite(s))


# --- ft ---

def test_ft_mag_zero_and_shape():
    m = features.ft_mag(np.zeros(16384))
    assert m.shape == (8193,)
    assert np.all(m == 0.0)


def test_ft_mag_sine_bin():
    m = features.ft_mag(sine(440.0))
    assert m.argmax() == 440
    assert m[440] == pytest.approx(16384 / 2, rel=1e-9)


def test_ft_mag_parseval():
    rng = np.random.default_rng(9)
    x = rng.standard_normal(16384)
    m = features.ft_mag(x)
    # reconstruct the full-spectrum energy from the non-redundant half
    full = m[0] ** 2 + m[-1] ** 2 + 2 * np.sum(m[1:-1] ** 2)
    assert np.sum(x**2) == pytest.approx(full / 16384, rel=1e-9)


def test_ft_mag_rejects_wrong_length():
    with pytest.raises(InputError):
        features.ft_mag(np.zeros(100))


# --- pca ---

def test_pca_full_rank_recovery():
    rng = np.random.default_rng(21)
    z = rng.standard_normal((300, 10))
    w = rng.standard_normal((10, 257))
    model = features.pca_fit(z @ w, target_dim=64)
    assert model.retained_variance == pytest.approx(1.0)
    assert model.effective_dim == 10
    # columns orthonormal
    g = model.projection.T @ model.projection
    assert np.allclose(g, np.eye(64), atol=1e-9)


def test_pca_transform_of_mean_is_zero():
    rng = np.random.default_rng(22)
    x = rng.standard_normal((100, 257))
    model = features.pca_fit(x)
    assert np.allclose(features.pca_transform(model, model.mean), 0.0, atol=1e-9)


def test_pca_projection_shrinks_norm():
    rng = np.random.default_rng(23)
    x = rng.standard_normal((200, 257))
    model = features.pca_fit(x, target_dim=32)
    for v in x[:20]:
        assert np.linalg.norm(features.pca_transform(model, v)) <= np.linalg.norm(v - model.mean) + 1e-9


def test_pca_beats_random_projections():
    rng = np.random.default_rng(24)
    x = rng.standard_normal((150, 257))
    xc = x - x.mean(axis=0)
    model = features.pca_fit(x, target_dim=64)
    err_pca = np.linalg.norm(xc - (xc @ model.projection) @ model.projection.T) ** 2
    for _ in range(10):
        q, _ = np.linalg.qr(rng.standard_normal((257, 64)))
        err_rand = np.linalg.norm(xc - (xc @ q) @ q.T) ** 2
        assert err_pca <= err_rand + 1e-6


def test_pca_degenerate_data_reports_reduced_dim():
    x = np.ones((50, 257))
    model = features.pca_fit(x, target_dim=8)
    assert model.effective_dim == 0


def test_pca_deterministic():
    rng = np.random.default_rng(25)
    x = rng.standard_normal((80, 257))
    m1 = features.pca_fit(x)
    m2 = features.pca_fit(x)
    assert np.array_equal(m1.projection, m2.projection)


def test_pca_input_validation():
    with pytest.raises(InputError):
        features.pca_fit(np.zeros(257))
    with pytest.raises(InputError):
        features.pca_fit(np.zeros((1, 257)))
    with pytest.raises(InputError):
        features.pca_fit(np.zeros((10, 257)), target_dim=500)


# --- kmeans / bow ---

def test_kmeans_exact_when_k_equals_points():
    rng = np.random.default_rng(31)
    x = rng.standard_normal((6, 4))
    book = features.kmeans_fit(x, 6, np.random.default_rng(0))
    assert book.inertia == pytest.approx(0.0, abs=1e-12)
    assert book.k == 6


def test_kmeans_rejects_k_above_distinct_count():
    x = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0]])
    with pytest.raises(InputError):
        features.kmeans_fit(x, 3, np.random.default_rng(0))


def test_kmeans_recovers_separated_clusters():
    rng = np.random.default_rng(32)
    centers = np.array([[0.0, 0.0], [20.0, 0.0], [0.0, 20.0]])
    x = np.vstack([c + 0.1 * rng.standard_normal((40, 2)) for c in centers])
    book = features.kmeans_fit(x, 3, np.random.default_rng(7))
    found = book.centroids[np.lexsort(book.centroids.T)]
    want = centers[np.lexsort(centers.T)]
    assert np.allclose(found, want, atol=0.2)


def test_kmeans_objective_non_increasing_in_iterations():
    rng = np.random.default_rng(33)
    x = rng.standard_normal((200, 5))
    prev = np.inf
    for iters in range(1, 9):
        book = features.kmeans_fit(x, 12, np.random.default_rng(4), max_iters=iters)
        assert book.inertia <= prev + 1e-9
        prev = book.inertia


def test_kmeans_handles_duplicate_heavy_data():
    # duplicated rows make colliding initial centroids likely, which forces
    # the empty-cluster reseed path
    base = np.array([[0.0, 0.0], [10.0, 10.0], [-10.0, 5.0]])
    x = np.repeat(base, 30, axis=0)
    for seed in range(6):
        book = features.kmeans_fit(x, 3, np.random.default_rng(seed))
        assert book.inertia == pytest.approx(0.0, abs=1e-12)


def test_bow_sums_to_one():
    rng = np.random.default_rng(34)
    x = rng.standard_normal((100, 8))
    book = features.kmeans_fit(x, 16, np.random.default_rng(1))
    v = features.bow_encode(book, rng.standard_normal((64, 8)))
    assert v.shape == (16,)
    assert np.all(v >= 0)
    assert v.sum() == pytest.approx(1.0, abs=1e-9)


def test_bow_identical_frames_concentrate():
    rng = np.random.default_rng(35)
    x = rng.standard_normal((50, 8))
    book = features.kmeans_fit(x, 10, np.random.default_rng(2))
    frames = np.tile(x[3], (64, 1))
    v = features.bow_encode(book, frames)
    assert np.sort(v)[-1] == 1.0
    assert v.sum() == 1.0


def test_bow_input_validation():
    x = np.random.default_rng(36).standard_normal((20, 8))
    book = features.kmeans_fit(x, 4, np.random.default_rng(3))
    with pytest.raises(InputError):
        features.bow_encode(book, np.zeros((5, 9)))
    with pytest.raises(InputError):
        features.bow_encode(book, np.zeros((0, 8)))
