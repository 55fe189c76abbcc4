import numpy as np
import pytest

from synthfit import dataset as ds
from synthfit.nn import TrainConfig
from synthfit.pipeline import train_from_corpus
from synthfit.profiles import DESK_PROFILE


@pytest.fixture(scope="session")
def desk_corpus(tmp_path_factory):
    """40-record desk-profile corpus shared by the heavier integration tests."""
    stem = tmp_path_factory.mktemp("shared_corpus") / "desk"
    return ds.generate(stem, n=40, seed=5, profile=DESK_PROFILE)


@pytest.fixture(scope="session")
def conv3_tiny_ckpt(desk_corpus):
    cfg = TrainConfig(batch_size=4, max_epochs=2, patience=5, seed=0)
    return train_from_corpus(desk_corpus["stft"], "Conv3", width_scale=0.1, cfg=cfg)


@pytest.fixture(scope="session")
def conv3_tiny_ckpt_path(conv3_tiny_ckpt, tmp_path_factory):
    from synthfit.checkpoint import save_checkpoint

    path = tmp_path_factory.mktemp("shared_ckpt") / "conv3_tiny.ivsc"
    return save_checkpoint(path, conv3_tiny_ckpt)


@pytest.fixture(scope="session")
def api():
    """In-process HTTP client against a fresh app."""
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DeprecationWarning)
        from fastapi.testclient import TestClient

    from synthfit.service import create_app

    return TestClient(create_app())
