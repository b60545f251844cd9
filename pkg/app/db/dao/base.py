"""Data Access Object with read methods over an in-memory collection."""

from collections.abc import Callable, Sequence
from typing import Any, Generic, Literal, TypeVar

from loguru import logger
from pydantic import BaseModel, Field

from app.db.exceptions import ElementNotFoundError

ModelType = TypeVar("ModelType")  # pylint: disable=invalid-name


class Filter(BaseModel):
    """Filter to be applied to a query.
    - field: str → name of the element's attribute (example "speaker_id").
    - operator: str → one of "eq", "neq", "contains", "not_contains", "gt", "gte", "lt", "lte".
    - value: Any → value to comparison.
    """

    field: str = Field(..., examples=["speaker_id"])
    operator: Literal["eq", "neq", "contains", "not_contains", "gt", "gte", "lt", "lte"] = Field(
        ...,
        examples=["eq"],
    )
    value: str | int | float | bool = Field(..., examples=["spk-0001"])


class DAOBase(Generic[ModelType]):
    """Data Access Object with default read methods."""

    def __init__(self: "DAOBase[ModelType]", name: str) -> None:
        self.name = name

    def _get_filter_expression(
        self,
        operator: str,
        value: Any,  # noqa: ANN401
    ) -> Callable[[Any], bool]:
        """
        Return the predicate for an operator and value.

        Args:
            operator: The filter operation to perform (e.g., "eq", "neq").
            value: The value to compare the attribute against.

        Returns:
            A predicate over the attribute value.

        Raises:
            ValueError: If the operator is not supported.
        """
        operators: dict[str, Callable[[Any], bool]] = {
            "eq": lambda f: f == value,
            "neq": lambda f: f != value,
            "contains": lambda f: value in f,
            "not_contains": lambda f: value not in f,
            "gt": lambda f: f > value,
            "gte": lambda f: f >= value,
            "lt": lambda f: f < value,
            "lte": lambda f: f <= value,
        }

        if operator not in operators:
            msg = f"Operator {operator} not supported."
            raise ValueError(msg)
        return operators[operator]

    def _matches(self, item: ModelType, filters: list[Filter], logic_and: bool) -> bool:
        results = (
            self._get_filter_expression(f.operator, f.value)(getattr(item, f.field))
            for f in filters
        )
        return all(results) if logic_and else any(results)

    def _items(self, source: Any) -> Sequence[ModelType]:  # noqa: ANN401
        """Elements of the backing collection."""
        raise NotImplementedError

    def _key(self, item: ModelType) -> str:
        """Identifier used by :meth:`get_by_id`."""
        raise NotImplementedError

    def get_by_id(self, source: Any, item_id: str) -> ModelType:  # noqa: ANN401
        """Returns the element with the given id.

        Raises:
            ElementNotFoundError: If the element is not found.
        """
        logger.debug(f"Getting {self.name} with ID: {item_id}")
        for item in self._items(source):
            if self._key(item) == item_id:
                return item

        error_msg = f"{self.name} with ID: {item_id} not found."
        logger.error(error_msg)
        raise ElementNotFoundError(error_msg)

    def get_list(
        self,
        source: Any,  # noqa: ANN401
        offset: int | None = None,
        limit: int | None = None,
        filters: list[Filter] | None = None,
        filter_is_logic_and: bool = True,
        order_by: str | None = None,
        order_direction: Literal["asc", "desc"] = "asc",
    ) -> list[ModelType]:
        """Get a filtered, ordered and paginated list of elements.

        Args:
            source: The backing collection.
            offset (int | None = None): Number of elements skipped. Defaults to None.
            limit (int | None = None): Maximum number of elements returned. Defaults to None.
            filters (list[Filter] | None): Filters to apply. Defaults to None.
            filter_is_logic_and (bool, optional): If True, the filters are applied with AND logic,
                otherwise with OR logic. Defaults to True.
            order_by (str | None): Attribute to order the results by. Defaults to insertion order.
            order_direction (Literal["asc", "desc"], optional): Order direction for the results.

        Returns:
            list[ModelType]: Result with the Data.
        """
        logger.debug(f"Getting list of {self.name}")
        items = list(self._items(source))
        if filters:
            items = [i for i in items if self._matches(i, filters, filter_is_logic_and)]
            logger.debug(f"Filters applied: {filters}")
        if order_by:
            items.sort(key=lambda i: getattr(i, order_by), reverse=order_direction == "desc")
        start = offset or 0
        end = start + limit if limit else None
        return items[start:end]

    def count(self, source: Any, filters: list[Filter] | None = None) -> int:  # noqa: ANN401
        """Get the number of elements matching the filters."""
        return len(self.get_list(source, filters=filters))
