from pathlib import Path

import pytest

from genesim.data import load_csv

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def iris():
    return load_csv(DATA / "iris.csv", "species")


@pytest.fixture(scope="session")
def breast():
    return load_csv(DATA / "breast.csv", "diagnosis")


@pytest.fixture(scope="session")
def cars():
    return load_csv(DATA / "cars.csv", "acceptability")


@pytest.fixture(scope="session")
def twoclass():
    return load_csv(DATA / "twoclass.csv", "outcome")
