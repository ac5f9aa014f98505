import { formatCents, groupBy, Emitter } from "./util.js";

const TAX_RATE = 0.0825;

// Shopping cart kept in memory; emits "change" on every mutation.
export class Cart extends Emitter {
  constructor() {
    super();
    this.lines = [];
  }

  add(sku, priceCents, quantity = 1) {
    if (quantity <= 0) {
      throw new Error("quantity must be positive");
    }
    const existing = this.lines.find((line) => line.sku === sku);
    if (existing) {
      existing.quantity += quantity;
    } else {
      this.lines.push({ sku, priceCents, quantity });
    }
    this.emit("change", this.summary());
  }

  remove(sku) {
    const before = this.lines.length;
    this.lines = this.lines.filter((line) => line.sku !== sku);
    if (this.lines.length !== before) {
      this.emit("change", this.summary());
    }
  }

  subtotal() {
    return this.lines.reduce((sum, line) => sum + line.priceCents * line.quantity, 0);
  }

  /**
   * Tax on the subtotal, rounded to whole cents.
   */
  tax() {
    return Math.round(this.subtotal() * TAX_RATE);
  }

  summary() {
    const total = this.subtotal() + this.tax();
    return {
      items: this.lines.length,
      subtotal: formatCents(this.subtotal()),
      total: formatCents(total),
    };
  }

  byPrefix() {
    return groupBy(this.lines, (line) => line.sku.split("-")[0]);
  }
}

export function restore(json) {
  const cart = new Cart();
  for (const line of JSON.parse(json)) {
    cart.add(line.sku, line.priceCents, line.quantity);
  }
  return cart;
}
