"""
Compact Rich representations for models carrying weight vectors and macro arrays.
"""

from collections.abc import Iterator, Sized
from typing import Any, ClassVar, cast

import numpy as np
from pydantic import BaseModel


class Summary:
    """A one-line stand-in for a field value, printed without quotes."""

    def __init__(self, text: str) -> None:
        self.text = text

    def __repr__(self) -> str:
        return self.text


def summarize(value: Any, max_items: int) -> Any:
    """
    Replaces arrays, and sequences longer than `max_items`, by a one-line description.
    Shorter sequences are returned as is, so Rich still expands the models inside them.
    """

    if isinstance(value, np.ndarray):
        array = cast(np.ndarray[Any, Any], value)
        return Summary(f"<ndarray {array.dtype} {array.shape}, {np.count_nonzero(array)} non-zero>")

    if isinstance(value, (tuple, list)) and len(cast(Sized, value)) > max_items:
        return Summary(f"<{type(value).__name__} of {len(cast(Sized, value))} items>")

    return value


class CompactReprMixin(BaseModel):
    """
    Mixin for models shown with `rich.pretty.Pretty`.

    Fields holding numpy arrays or more than `REPR_ITEMS` elements are summarized,
    so a compiled layer prints as a few lines per pass.
    """

    REPR_ITEMS: ClassVar[int] = 16

    def __rich_repr__(self) -> Iterator[tuple[str, Any]]:

        for name, field_info in type(self).model_fields.items():
            if field_info.exclude or not field_info.repr:
                continue
            yield name, summarize(getattr(self, name), self.REPR_ITEMS)
