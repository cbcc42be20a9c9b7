import numpy as np
import pytest

from matchgan.datasets import Record, RecordSet


@pytest.fixture
def records_csv(tmp_path):
    path = tmp_path / "records.csv"
    path.write_text(
        "id,title,author\n"
        "r1,deep learning methods,smith j\n"
        "r2,deep learning method,smith j\n"
        "r3,database systems,jones a\n"
    )
    return path


@pytest.fixture
def gold_csv(tmp_path):
    path = tmp_path / "gold.csv"
    path.write_text("r1,r2\n")
    return path


@pytest.fixture
def three_records():
    return RecordSet(
        schema=("title", "author"),
        records=[
            Record("r1", ("deep learning methods", "smith j")),
            Record("r2", ("deep learning method", "smith j")),
            Record("r3", ("database systems", "jones a")),
        ],
    )


@pytest.fixture
def rng():
    return np.random.default_rng(42)
