import { describe, expect, it } from "vitest";

import { ClassHistogram } from "../src/histogram.js";

describe("ClassHistogram", () => {
  it("accumulates counts per class", () => {
    const hist = new ClassHistogram();
    for (const c of [3, 3, 0, 6, 3]) hist.add(c);
    expect(hist.bins()).toEqual([1, 0, 0, 3, 0, 0, 1]);
    expect(hist.total()).toBe(5);
  });

  it("rejects out-of-range classes", () => {
    const hist = new ClassHistogram();
    expect(() => hist.add(7)).toThrow();
    expect(() => hist.add(-1)).toThrow();
  });

  it("matches server bins exactly", () => {
    const hist = new ClassHistogram([0, 1, 0, 2, 0, 0, 0]);
    expect(hist.matches([0, 1, 0, 2, 0, 0, 0])).toBe(true);
    expect(hist.matches([0, 1, 0, 1, 0, 0, 1])).toBe(false);
    expect(hist.matches([1, 2])).toBe(false);
  });

  it("reconciles from the server copy", () => {
    const hist = new ClassHistogram();
    hist.replaceWith([0, 0, 1, 4, 0, 0, 0]);
    expect(hist.total()).toBe(5);
  });
});
