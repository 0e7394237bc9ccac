"""
Result files: CSV tables through pandas and JSON reports, written atomically.
"""

import json
import logging
import os
import tempfile
from contextlib import contextmanager
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Generator, List, Union

import numpy as np
import pandas as pd

from src.markets.models import get_model
from src.markets.params import MarketParams
from src.steady.results import ConditionPReport, NoSteadyState, SteadySolution

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.17g'


@contextmanager
def atomic_write(path: Union[str, Path]) -> Generator[Path, None, None]:
    """
    Context manager yielding a temporary path that replaces `path` on success.

    The temporary file lives next to the target, so the final rename is
    atomic; on any error it is removed and the target is left untouched.

    Yields:
        Path to write to
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix='.tmp', dir=path.parent)
    os.close(fd)
    tmp_path = Path(tmp_name)
    try:
        yield tmp_path
        os.replace(tmp_path, path)
    except Exception as e:
        logger.error(f"Writing {path} failed: {e}")
        raise
    finally:
        if tmp_path.exists():
            tmp_path.unlink()


def _json_default(value: Any):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, Enum):
        return value.value
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def write_json(path: Union[str, Path], data: Dict[str, Any]) -> Path:
    """Write a JSON document; floats keep their shortest round-trip repr."""
    with atomic_write(path) as tmp:
        with open(tmp, 'w', encoding='utf-8') as f:
            json.dump(data, f, indent=2, default=_json_default)
            f.write('\n')
    logger.info(f"Wrote {path}")
    return Path(path)


def read_json(path: Union[str, Path]) -> Dict[str, Any]:
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)


def write_table(path: Union[str, Path], frame: pd.DataFrame) -> Path:
    with atomic_write(path) as tmp:
        frame.to_csv(tmp, index=False, float_format=FLOAT_FORMAT)
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return Path(path)


def read_table(path: Union[str, Path]) -> pd.DataFrame:
    return pd.read_csv(path, float_precision='round_trip')


def time_series_frame(times, values, columns: List[str]) -> pd.DataFrame:
    frame = pd.DataFrame(np.asarray(values, dtype=float), columns=columns)
    frame.insert(0, 't', np.asarray(times, dtype=float))
    return frame


def write_trajectory(path: Union[str, Path], trajectory, columns: List[str]) -> Path:
    return write_table(path, time_series_frame(trajectory.times, trajectory.values, columns))


def write_simulation(path: Union[str, Path], result, columns: List[str]) -> Path:
    return write_table(path, time_series_frame(result.sample_times, result.empirical, columns))


def write_comparison(path: Union[str, Path], comparison) -> Path:
    frame = pd.DataFrame({'t': comparison.sample_times, 'sup_distance': comparison.per_time})
    return write_table(path, frame)


def condition_p_to_dict(report: ConditionPReport) -> Dict[str, Any]:
    return {
        'holds': report.holds,
        'per_condition': list(report.per_condition),
        'margins': list(report.margins),
        'convention': report.convention,
        'quantification': 'worst case over the corners of the box [0,1]^6',
    }


def steady_report(model_class, params: MarketParams,
                  result: Union[SteadySolution, NoSteadyState]) -> Dict[str, Any]:
    """Serializable form of a steady-state result."""
    model = get_model(model_class)
    report: Dict[str, Any] = {
        'model_class': model.get_model_class().value,
        'params': model.params_to_dict(params),
    }
    if isinstance(result, NoSteadyState):
        report.update({
            'no_steady_state': True,
            'conclusive': result.conclusive,
            'restarts': result.restarts,
            'diagnostics': result.diagnostics,
        })
        return report

    report.update({
        'no_steady_state': False,
        'method': result.method.value,
        'residual_inf_norm': result.residual_inf_norm,
        'tolerance': result.tolerance,
        'certified_box_volume': result.certified_box_volume,
        'iterations': result.iterations,
        'state': dict(zip(model.column_names(params), result.state.values.tolist())),
        'metadata': result.metadata,
    })
    return report
