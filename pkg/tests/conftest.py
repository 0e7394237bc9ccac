"""
Pytest configuration and shared fixtures.
"""

import json
import shutil
import tempfile
from pathlib import Path
from typing import Any, Dict, Generator

import numpy as np
import pytest

from src.markets.params import HeterogeneousParams, NonSegmentedParams, PartiallySegmentedParams


@pytest.fixture
def temp_dir() -> Generator[Path, None, None]:
    """Create a temporary directory for tests."""
    temp_path = Path(tempfile.mkdtemp())
    yield temp_path
    shutil.rmtree(temp_path)


@pytest.fixture
def benchmark_params() -> NonSegmentedParams:
    """Single-asset non-segmented market with every rate 1 and m = 0.2."""
    return NonSegmentedParams(K=1, lam=[1.0], gamma_u=1.0, gamma_d=1.0,
                              gamma_ui=[1.0], gamma_di=[1.0], m=[0.2])


@pytest.fixture
def benchmark_root() -> float:
    """Positive root of 2x^2 + 3.4x - 1.6 = 0."""
    return (-3.4 + np.sqrt(3.4 ** 2 + 4 * 2 * 1.6)) / 4.0


@pytest.fixture
def three_asset_params() -> NonSegmentedParams:
    return NonSegmentedParams(K=3, lam=[2.0, 1.0, 0.5], gamma_u=0.7, gamma_d=1.3,
                              gamma_ui=[1.0, 0.8, 1.2], gamma_di=[0.5, 1.0, 0.7],
                              m=[0.15, 0.1, 0.2])


@pytest.fixture
def segmented_params() -> PartiallySegmentedParams:
    return PartiallySegmentedParams(K=3, lam=[2.0, 1.0, 0.5],
                                    gamma_ui=[1.0, 0.8, 1.2], gamma_di=[0.5, 1.0, 0.7],
                                    gamma_tilde_ui=[1.5, 0.6, 1.0],
                                    gamma_tilde_di=[0.4, 0.9, 1.1],
                                    m=[0.15, 0.1, 0.2])


@pytest.fixture
def mixed_heterogeneous_params() -> HeterogeneousParams:
    """Heterogeneous market where every position switches in both directions."""
    return HeterogeneousParams(lam=1.0, a=0.5, b=0.5, c=[1.0, 1.0, 1.0], d=[1.0, 1.0, 1.0], s=1.0)


@pytest.fixture
def counterexample():
    """Factory for the non-existence family at a given supply."""
    def build(s: float, lam: float = 1.0) -> HeterogeneousParams:
        return HeterogeneousParams(lam=lam, a=1.0, b=0.0, c=[0.0, 0.0, lam], d=[lam, 0.0, 0.0], s=s)
    return build


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(12345))


@pytest.fixture
def benchmark_config_data() -> Dict[str, Any]:
    return {
        'model_class': 'non-segmented',
        'params': {'K': 1, 'lambda': [1.0], 'gamma_u': 1.0, 'gamma_d': 1.0,
                   'gamma_ui': [1.0], 'gamma_di': [1.0], 'm': [0.2]},
        'integrate': {'t_end': 20.0, 'step': 0.01, 'sample_every': 1.0},
        'simulate': {'N': 200, 'seed': 3, 't_end': 5.0, 'sample_every': 1.0},
    }


@pytest.fixture
def write_config(temp_dir: Path):
    """Write a configuration dict to a JSON file and return its path."""
    def write(data: Dict[str, Any], name: str = 'config.json') -> Path:
        path = temp_dir / name
        path.write_text(json.dumps(data))
        return path
    return write
