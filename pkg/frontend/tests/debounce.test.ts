import { afterEach, beforeEach, describe, expect, it, vi } from 'vitest';

import { debounce } from '../src/debounce.js';

beforeEach(() => vi.useFakeTimers());
afterEach(() => vi.useRealTimers());

describe('debounce', () => {
  it('collapses a burst into one trailing call', () => {
    const fn = vi.fn();
    const debounced = debounce(fn, 250);
    for (const value of [9, 10, 11, 12, 20]) debounced(value);
    expect(fn).not.toHaveBeenCalled();
    vi.advanceTimersByTime(250);
    expect(fn).toHaveBeenCalledTimes(1);
    expect(fn).toHaveBeenCalledWith(20);
  });

  it('fires again after the quiet period', () => {
    const fn = vi.fn();
    const debounced = debounce(fn, 250);
    debounced(1);
    vi.advanceTimersByTime(250);
    debounced(2);
    vi.advanceTimersByTime(250);
    expect(fn.mock.calls).toEqual([[1], [2]]);
  });

  it('resets the window on each call', () => {
    const fn = vi.fn();
    const debounced = debounce(fn, 250);
    debounced(1);
    vi.advanceTimersByTime(200);
    debounced(2);
    vi.advanceTimersByTime(200);
    expect(fn).not.toHaveBeenCalled();
    vi.advanceTimersByTime(50);
    expect(fn).toHaveBeenCalledWith(2);
  });
});
