import pytest

from gatedflow import DirectoryStore, register_builtin


@pytest.fixture
def registry():
    return register_builtin()


@pytest.fixture
def store(tmp_path):
    root = tmp_path / "primary"
    root.mkdir()
    return DirectoryStore(root)


@pytest.fixture
def spool(tmp_path):
    root = tmp_path / "spool"
    root.mkdir()
    return DirectoryStore(root)
