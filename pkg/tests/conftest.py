import pytest

from support import small_config


@pytest.fixture
def config():
    return small_config()
