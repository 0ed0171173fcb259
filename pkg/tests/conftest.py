import json
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from gzspec.config import ToleranceConfig
from gzspec.core.monitoring import setup_monitoring
from gzspec.main import main
from gzspec.spectral_sets import Cluster, GeometricTail, PowerTail, SpectrumModel

SAMPLES = Path(__file__).resolve().parent.parent / "samples"


@pytest.fixture(autouse=True)
def logging_to_stderr():
    """Rebind the log stream around every test; capsys swaps sys.stderr."""
    setup_monitoring()
    yield
    setup_monitoring()


@pytest.fixture
def cfg():
    return ToleranceConfig()


@pytest.fixture
def samples_dir():
    return SAMPLES


@pytest.fixture
def harmonic_cluster():
    """{1/n : n >= 1} with limit 0."""
    return Cluster(limit=0, tail=PowerTail(scale=1, exponent=1))


@pytest.fixture
def harmonic(harmonic_cluster):
    return SpectrumModel.build(clusters=[harmonic_cluster])


@pytest.fixture
def double_harmonic():
    """Child limits 2^-m, each carrying 2^-m * (1 + 3^-k); everything accumulates at 0."""
    child = Cluster(limit=0, tail=GeometricTail(base=Fraction(1, 3), ratio=Fraction(1, 3)))
    return SpectrumModel.build(
        clusters=[
            Cluster(limit=0, tail=GeometricTail(base=Fraction(1, 2), ratio=Fraction(1, 2)), children=(child,))
        ]
    )


@pytest.fixture
def jordan2():
    return np.array([[0, 1], [0, 0]], dtype=complex)


@pytest.fixture
def jordan3():
    return np.array([[0, 1, 0], [0, 0, 1], [0, 0, 0]], dtype=complex)


@pytest.fixture
def write_json(tmp_path):
    def write(name, payload):
        path = tmp_path / name
        path.write_text(json.dumps(payload))
        return str(path)

    return write


@pytest.fixture
def run_cli(tmp_path):
    """Run the command line; returns (exit code, parsed report or None)."""
    counter = {"n": 0}

    def run(*argv):
        counter["n"] += 1
        out = tmp_path / f"report-{counter['n']}.json"
        code = main([*map(str, argv), "--out", str(out)])
        report = json.loads(out.read_text()) if out.exists() else None
        return code, report

    return run
