from .models import Item, Location
from .store import Store

__all__ = ["Item", "Location", "Store"]
