/**
 * Formats an integer amount of cents as a currency string.
 */
export function formatCents(cents, currency = "USD") {
  const sign = cents < 0 ? "-" : "";
  const abs = Math.abs(cents);
  const whole = Math.floor(abs / 100);
  const frac = String(abs % 100).padStart(2, "0");
  return `${sign}${currency} ${whole}.${frac}`;
}

// Rounds half away from zero, unlike Math.round for negatives.
export function roundHalfAway(value) {
  return value < 0 ? -Math.round(-value) : Math.round(value);
}

export function debounce(fn, wait) {
  let timer = null;
  return (...args) => {
    if (timer !== null) {
      clearTimeout(timer);
    }
    timer = setTimeout(() => {
      timer = null;
      fn(...args);
    }, wait);
  };
}

/**
 * Groups array entries by the key returned from keyFn.
 */
export function groupBy(items, keyFn) {
  const groups = new Map();
  for (const item of items) {
    const key = keyFn(item);
    if (!groups.has(key)) {
      groups.set(key, []);
    }
    groups.get(key).push(item);
  }
  return groups;
}

export class Emitter {
  constructor() {
    this.handlers = {};
  }

  on(event, handler) {
    (this.handlers[event] ||= []).push(handler);
    return () => this.off(event, handler);
  }

  off(event, handler) {
    const list = this.handlers[event] || [];
    this.handlers[event] = list.filter((h) => h !== handler);
  }

  emit(event, payload) {
    for (const handler of this.handlers[event] || []) {
      handler(payload);
    }
  }
}
