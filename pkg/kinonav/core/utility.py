"""Collection of utility functions"""

from __future__ import annotations

import functools
import hashlib
import json
import math
from collections.abc import Callable, Iterable
from pathlib import Path
from typing import Any, TypeVar, cast

import numpy as np
from numpy.typing import ArrayLike, NDArray

from kinonav.core.exceptions import InvalidStateError, ParseError

FuncT = TypeVar("FuncT", bound=Callable[..., Any])


def require_finite(func: FuncT) -> FuncT:
    """
    Decorator that rejects calls whose value object arguments carry a non-finite component by raising
    InvalidStateError. Arguments are checked when they expose ``as_tuple``.
    """

    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        for arg in (*args, *kwargs.values()):
            as_tuple = getattr(arg, "as_tuple", None)
            if as_tuple is not None and not all(math.isfinite(value) for value in as_tuple()):
                raise InvalidStateError(f"Non finite value passed to {func.__name__}: {arg}")
        return func(*args, **kwargs)

    return cast(FuncT, wrapper)


def normalize_angle(theta: ArrayLike) -> Any:
    """
    Wrap an angle, or an array of angles, into (-pi, pi]
    :param theta: angle(s) in radians
    :return: wrapped angle(s), float for scalar input
    """
    wrapped = np.pi - np.mod(np.pi - np.asarray(theta, dtype=float), 2.0 * np.pi)
    if wrapped.ndim == 0:
        return float(wrapped)
    return wrapped


def _stable_key(key: str | int) -> int:
    if isinstance(key, int):
        return key
    return int.from_bytes(hashlib.sha256(key.encode("utf-8")).digest()[:4], "little")


def derive_rng(master_seed: int, *keys: str | int) -> np.random.Generator:
    """
    Derive an independent random stream from the master seed and a path of names, e.g.
    ``derive_rng(7, "noise", "episode-3")``. Streams with different key paths do not overlap, and adding a new
    consumer never perturbs an existing stream.
    :param master_seed: the run level seed
    :param keys: the named path of the sub-stream
    :return: a seeded numpy Generator
    """
    sequence = np.random.SeedSequence(entropy=master_seed, spawn_key=tuple(_stable_key(key) for key in keys))
    return np.random.default_rng(sequence)


def parse_key_value_lines(lines: Iterable[str], source: str) -> dict[str, str]:
    """
    Parse a flat ``name = value`` document. Blank lines and ``#`` comments are ignored.
    :param lines: the document lines
    :param source: name used in error messages
    :return: ordered mapping of name to raw value string
    :raises ParseError: on a line without '=' or a duplicated key
    """
    values: dict[str, str] = {}
    for number, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(source, number, f"expected 'name = value', got {raw.strip()!r}")
        name, value = (part.strip() for part in line.split("=", 1))
        if not name:
            raise ParseError(source, number, "empty key")
        if name in values:
            raise ParseError(source, number, f"duplicate key {name}")
        values[name] = value
    return values


def read_key_value_file(path: Path) -> dict[str, str]:
    """
    Read a key-value document from disk
    :param path: the file path
    :return: mapping of name to raw value string
    """
    try:
        with path.open(encoding="utf-8", mode="r") as fle:
            return parse_key_value_lines(fle.readlines(), str(path))
    except FileNotFoundError as exc:
        raise ParseError(str(path), None, "file does not exist") from exc


def parse_literal(value: str) -> Any:
    """
    Interpret a raw override value as a JSON literal when possible, falling back to the bare string
    :param value: raw value
    :return: the parsed value
    """
    lowered = value.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    try:
        return json.loads(value)
    except json.JSONDecodeError:
        return value


def format_float(value: float) -> str:
    """
    Shortest round-tripping representation, so written files are stable across runs
    """
    return repr(float(value))


def as_array(values: ArrayLike) -> NDArray[np.float64]:
    """Return a float64 numpy view or copy of the given values"""
    return np.asarray(values, dtype=np.float64)
