"""Defines data models for representing hyperlinks and pagination configuration."""

import math

from pydantic import AnyHttpUrl, BaseModel, Field

EXAMPLE_URL = "http://localhost:8000/api/v1/speakers?limit=10&offset=0"

MAX_OFFSET = 100_000
MAX_LIMIT = 1000


def calculate_page_number(offset: int, limit: int) -> int:
    """Calculate the 1-based page number of a page starting at `offset`.

    Raises:
        ValueError: If the limit is not positive or the offset is negative.
    """
    if limit <= 0:
        error_message = "Limit must be a positive integer."
        raise ValueError(error_message)
    if offset < 0:
        error_message = "Offset must be a non-negative integer."
        raise ValueError(error_message)
    return math.ceil((offset + 1) / limit)


def calculate_total_pages(limit: int, total_elements: int) -> int:
    """Compute the total number of pages based on limit and total elements.

    Raises:
        ValueError: If limit is not positive or total_elements is negative.
    """
    if limit <= 0:
        error_message = "Limit must be a positive integer."
        raise ValueError(error_message)
    if total_elements < 0:
        error_message = "Total elements must be a non-negative integer."
        raise ValueError(error_message)
    return math.ceil(total_elements / limit)


class HyperLink(BaseModel):
    """Represents a hyperlinked reference."""

    href: str | None = Field(default=None, examples=[EXAMPLE_URL])


class PaginationLinks(BaseModel):
    """Links to the first, previous, current, next and last pages."""

    first: HyperLink | None = None
    prev: HyperLink | None = None
    actual: HyperLink = Field(examples=[{"href": EXAMPLE_URL}])
    next: HyperLink | None = None
    last: HyperLink | None = None

    @classmethod
    def generate_pagination_links(
        cls: type["PaginationLinks"],
        url: str,
        total_pages: int,
        limit: int,
        offset: int,
        total_elements: int,
    ) -> "PaginationLinks":
        """Generate the links of a page.

        On the first and last page the prev and next links point to the actual page.
        """
        base_url = url.split("?", 1)[0]
        base_href = f"{base_url}?limit={limit}"

        def link(page_offset: int) -> HyperLink:
            return HyperLink(href=str(AnyHttpUrl(f"{base_href}&offset={page_offset}")))

        actual = link(offset)
        if total_elements == 0:
            return cls(actual=actual)

        last_offset = (total_pages - 1) * limit
        return cls(
            first=link(0),
            prev=link(max(0, offset - limit)) if offset > 0 else actual,
            actual=actual,
            next=link(min(last_offset, offset + limit)) if offset < last_offset else actual,
            last=link(last_offset),
        )


class Pagination(BaseModel):
    """Offsets, limits, page numbers, totals and links of a paginated list."""

    offset: int = Field(ge=0, le=MAX_OFFSET)
    limit: int = Field(ge=1, le=MAX_LIMIT)
    page_number: int = Field(ge=1)
    total_pages: int = Field(ge=0)
    total_elements: int = Field(ge=0)
    links: PaginationLinks | None = None

    @classmethod
    def get_pagination(
        cls: type["Pagination"],
        offset: int,
        limit: int,
        total_elements: int,
        url: str,
    ) -> "Pagination":
        """Generate pagination information based on the provided parameters.

        Args:
            offset: The starting index of the current page.
            limit: The maximum number of elements per page.
            total_elements: The total number of elements to be paginated.
            url: The URL of the request, used for the links.
        """
        total_pages = calculate_total_pages(limit, total_elements)
        links = PaginationLinks.generate_pagination_links(
            url=url,
            total_pages=total_pages,
            limit=limit,
            offset=offset,
            total_elements=total_elements,
        )
        return cls(
            offset=offset,
            limit=limit,
            page_number=calculate_page_number(offset, limit),
            total_pages=total_pages,
            total_elements=total_elements,
            links=links,
        )
