import os
import json
import logging
import dataclasses

from typing import List

import numpy as np

DEBUG = os.environ.get("DEBUG", "false")
if DEBUG.lower() == "true":
    logging.basicConfig(level=logging.DEBUG)


class JSONEncoder(json.JSONEncoder):
    def default(self, o):
        if dataclasses.is_dataclass(o):
            return dataclasses.asdict(o)
        if isinstance(o, np.ndarray):
            if np.iscomplexobj(o):
                return [[float(z.real), float(z.imag)] for z in o.ravel()]
            return o.tolist()
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.bool_):
            return bool(o)
        if isinstance(o, complex):
            return [o.real, o.imag]
        return super().default(o)


def dump_json(obj, path: str) -> None:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w") as f:
        json.dump(obj, f, cls=JSONEncoder, indent=2)
        f.write("\n")


def load_json(path: str):
    with open(path) as f:
        return json.load(f)


def parse_multi_columns(columns: str) -> list:
    if "|" in columns:
        return columns.split("|")
    else:
        return columns.split(",")


def comma_separated_string_to_list(s: str) -> List[str]:
    '''
    Split comma-separated values into a list.
    '''
    return s.strip().replace(' ', '').split(',')


def relative_error(actual: np.ndarray, expected: np.ndarray) -> float:
    """Frobenius-norm error of `actual` relative to `expected`."""
    actual = np.asarray(actual, dtype=float)
    expected = np.asarray(expected, dtype=float)
    scale = np.linalg.norm(expected)
    diff = np.linalg.norm(actual - expected)
    if scale == 0.0:
        return float(diff)
    return float(diff / scale)
