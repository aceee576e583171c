"""
Provides a generic repository class for reading and writing records stored as JSON lines files.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Generic, TypeVar

from pydantic import BaseModel, ValidationError

from kinonav.core.exceptions import ParseError
from kinonav.core.specifications.base import Specification

T = TypeVar("T", bound=BaseModel)

logger = logging.getLogger(__name__)


class Repo(Generic[T]):
    """
    A generic repository over one JSON lines file holding records of type T, one object per line.

    Reads go through a specification; writes append records and keep the file in the order they were added.
    """

    def __init__(self, path: Path) -> None:
        self._path = path

    @property
    def path(self) -> Path:
        return self._path

    def _load(self, model: type[T]) -> list[T]:
        if not self._path.exists():
            raise ParseError(str(self._path), None, "file does not exist")
        records = []
        with self._path.open(encoding="utf-8", mode="r") as fle:
            for number, line in enumerate(fle, start=1):
                if not line.strip():
                    continue
                try:
                    records.append(model.model_validate_json(line))
                except ValidationError as exc:
                    logger.exception("Invalid record on line %s of %s", number, self._path)
                    raise ParseError(str(self._path), number, exc.errors()[0]["msg"]) from exc
        return records

    def find(self, spec: Specification[T]) -> Sequence[T]:
        """
        Finds records matching the given specification.

        :param spec: A specification defining the query criteria.
        :return: A sequence of records of type T that match the specification.
        """
        return spec.select(self._load(spec.model))

    def add_all(self, records: Iterable[T], overwrite: bool = False) -> None:
        """
        Write records to the file, one JSON object per line
        :param records: the records, written in iteration order
        :param overwrite: truncate the file first instead of appending
        :return: None
        """
        self._path.parent.mkdir(parents=True, exist_ok=True)
        with self._path.open(encoding="utf-8", mode="w" if overwrite else "a") as fle:
            for record in records:
                fle.write(record.model_dump_json() + "\n")
