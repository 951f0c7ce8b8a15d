import pytest

from mbqtm.machine import load_machine
from mbqtm.resources import DATA_DIR


@pytest.fixture
def data_dir():
    return DATA_DIR


@pytest.fixture
def machine():
    def _load(name):
        return load_machine(DATA_DIR / name)

    return _load
