from dataclasses import dataclass, field
from typing import Optional


@dataclass
class Location:
    """A shelf position inside a warehouse."""

    aisle: str
    shelf: int
    bin: int = 0

    def label(self) -> str:
        """Return the printable label, e.g. ``B-04-2``."""
        return f"{self.aisle}-{self.shelf:02d}-{self.bin}"

    def distance_to(self, other: "Location") -> int:
        if self.aisle != other.aisle:
            return 100 + abs(self.shelf - other.shelf)
        return abs(self.shelf - other.shelf) + abs(self.bin - other.bin)


@dataclass
class Item:
    sku: str
    name: str
    quantity: int = 0
    unit_price: float = 0.0
    location: Optional[Location] = None
    tags: list = field(default_factory=list)

    def total_value(self) -> float:
        """Stock value of this item at the current unit price."""
        return self.quantity * self.unit_price

    def restock(self, amount: int) -> int:
        if amount <= 0:
            raise ValueError("restock amount must be positive")
        self.quantity += amount
        return self.quantity

    def take(self, amount: int) -> int:
        """Remove up to ``amount`` units and return how many were taken."""
        taken = min(amount, self.quantity)
        self.quantity -= taken
        return taken

    def has_tag(self, tag: str) -> bool:
        return tag.lower() in (t.lower() for t in self.tags)


def parse_location(text: str) -> Location:
    """Parse a label produced by :meth:`Location.label`."""
    parts = text.strip().split("-")
    if len(parts) != 3:
        raise ValueError(f"bad location label: {text!r}")
    aisle, shelf, bin_ = parts
    return Location(aisle=aisle, shelf=int(shelf), bin=int(bin_))


def cheapest(items):
    best = None
    for item in items:
        if best is None or item.unit_price < best.unit_price:
            best = item
    return best
