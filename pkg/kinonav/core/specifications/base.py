"""
Base Specification Module

Defines the abstract base class for record query specifications. A specification wraps a predicate over records of
one model together with ordering and a limit and offset, so that services describe *which* episodes or results they
want while the repository decides how the JSON lines file is read.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from collections.abc import Callable, Sequence
from typing import Generic, Literal, TypeVar

from pydantic import BaseModel

T = TypeVar("T", bound=BaseModel)

Predicate = Callable[[T], bool]


def apply_pagination(records: Sequence[T], limit: int, offset: int) -> list[T]:
    """
    Given a sequence of T, apply the given limit and offset
    :param records: The records
    :param limit: The limit, 0 for no limit
    :param offset: The offset
    :return: The records with limit and offset applied
    """
    selected = list(records[offset:]) if offset else list(records)
    return selected[:limit] if limit else selected


def apply_ordering(records: Sequence[T], order_by: str, order_direction: str) -> list[T]:
    """
    Order records by one of their fields. The sort is stable, so equal keys keep file order
    :param records: The records
    :param order_by: the field name
    :param order_direction: "asc" or "desc"
    :return: the ordered records
    """
    return sorted(records, key=lambda record: getattr(record, order_by), reverse=order_direction == "desc")


class Specification(Generic[T], ABC):
    """
    An abstract base class that defines a generic query specification over records of a pydantic model.
    """

    def __init__(self) -> None:
        self.value: Predicate[T] = lambda _: True
        self.order_by: str | None = None
        self.order_direction: Literal["asc", "desc"] = "asc"
        self.limit = 0
        self.offset = 0

    @property
    @abstractmethod
    def model(self) -> type[T]:
        """
        The pydantic model class the specification targets, used by the repository to validate each line.
        :return: The model class
        """

    def all(
        self,
        limit: int = 0,
        offset: int = 0,
        order_by: str | None = None,
        order_direction: Literal["asc", "desc"] = "asc",
    ) -> Specification[T]:
        """
        Select every record, optionally ordered and sliced
        :param limit: maximum number of records, 0 for no limit
        :param offset: number of records to skip after ordering
        :param order_by: field to order by, file order when None
        :param order_direction: "asc" or "desc"
        :return: this specification
        """
        self.value = lambda _: True
        self.limit = limit
        self.offset = offset
        self.order_by = order_by
        self.order_direction = order_direction
        return self

    def select(self, records: Sequence[T]) -> list[T]:
        """
        Apply the predicate, ordering and pagination to the given records
        :param records: all records of the model
        :return: the matching records
        """
        matching = [record for record in records if self.value(record)]
        if self.order_by is not None:
            matching = apply_ordering(matching, self.order_by, self.order_direction)
        return apply_pagination(matching, self.limit, self.offset)
