// Trailing-edge throttle for code-inspector edits: a burst of edits fires
// once, CODE_EDIT_THROTTLE_MS after the first edit, with the latest value.

export const CODE_EDIT_THROTTLE_MS = 2000;

export interface Throttled<T> {
  (value: T): void;
  cancel(): void;
  flush(): void;
}

export function trailingThrottle<T>(
  fn: (value: T) => void,
  waitMs: number = CODE_EDIT_THROTTLE_MS,
): Throttled<T> {
  let timer: ReturnType<typeof setTimeout> | null = null;
  let pending: { value: T } | null = null;

  const fire = () => {
    timer = null;
    if (pending) {
      const { value } = pending;
      pending = null;
      fn(value);
    }
  };

  const throttled = ((value: T) => {
    pending = { value };
    if (timer === null) {
      timer = setTimeout(fire, waitMs);
    }
  }) as Throttled<T>;

  throttled.cancel = () => {
    if (timer !== null) {
      clearTimeout(timer);
      timer = null;
    }
    pending = null;
  };

  throttled.flush = () => {
    if (timer !== null) {
      clearTimeout(timer);
      fire();
    }
  };

  return throttled;
}
