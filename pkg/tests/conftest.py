import pytest

from dona.catalog import load_catalog
from dona.dialog import default_templates


@pytest.fixture(scope="session")
def sample_catalog_path():
    from importlib import resources

    with resources.as_file(
        resources.files("dona").joinpath("data/sample_catalog.json")
    ) as path:
        yield path


@pytest.fixture(scope="session")
def sample_catalog(sample_catalog_path):
    return load_catalog(sample_catalog_path)


@pytest.fixture(scope="session")
def templates():
    return default_templates()
