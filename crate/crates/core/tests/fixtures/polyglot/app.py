import argparse
import sys

from inventory import Item, Store
from inventory.store import StockError


def build_demo_store():
    """Create a small store used by the command line demo."""
    store = Store("demo")
    store.add(Item("A-100", "bolt", 40, 0.15))
    store.add(Item("A-200", "nut", 3, 0.05))
    store.add(Item("B-300", "washer", 120, 0.02))
    store.move("A-100", "A-03-1")
    store.move("B-300", "B-01-0")
    return store


def main(argv=None):
    parser = argparse.ArgumentParser(description="inventory demo")
    parser.add_argument("--threshold", type=int, default=5)
    parser.add_argument("--pick", nargs="*", default=[])
    args = parser.parse_args(argv)

    store = build_demo_store()
    order = {}
    for spec in args.pick:
        sku, _, amount = spec.partition("=")
        order[sku] = int(amount or 1)
    try:
        picked = store.pick(order)
    except StockError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for sku, count in picked.items():
        print(f"{sku}: {count}")
    print("low stock:", ", ".join(store.low_stock(args.threshold)) or "none")
    print("value:", store.value())
    return 0


if __name__ == "__main__":
    sys.exit(main())
