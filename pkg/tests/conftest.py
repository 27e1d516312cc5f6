import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

MNIST_FILES = ("train-images-idx3-ubyte", "train-labels-idx1-ubyte",
               "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte")


def mnist_dir():
    d = Path(os.environ.get("ANNBN_MNIST_DIR", "/root/data/mnist"))
    ok = all((d / f).exists() or (d / (f + ".gz")).exists() for f in MNIST_FILES)
    return d if ok else None


@pytest.fixture
def mnist_path():
    d = mnist_dir()
    if d is None:
        pytest.skip("MNIST IDX files not found (set ANNBN_MNIST_DIR)")
    return d


def pytest_terminal_summary(terminalreporter):
    import acceptance_log

    if not acceptance_log.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in acceptance_log.summary_lines():
        terminalreporter.write_line(line)
