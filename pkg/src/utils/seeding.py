"""Deterministic random streams derived from (seed, component, counter)"""

import zlib
from typing import Union

import numpy as np

Key = Union[int, str]


def _as_int(part: Key) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    if part < 0:
        raise ValueError("seed components must be non-negative")
    return int(part)


def derive_seed(*parts: Key) -> np.random.SeedSequence:
    """SeedSequence from any mix of ints and names"""
    return np.random.SeedSequence([_as_int(p) for p in parts])


def derive_rng(*parts: Key) -> np.random.Generator:
    """
    Independent generator for a (seed, component, counter) key.
    Same key -> same stream, so schedules stay reproducible without saving RNG state.
    """
    return np.random.default_rng(derive_seed(*parts))
