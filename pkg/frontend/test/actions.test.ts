import { describe, expect, it } from "vitest";

import {
  HOLD_CLASS,
  degreeLabel,
  displayOrder,
  pitchButtonTitle,
  rampClass,
  yawButtonTitle,
} from "../src/actions.js";

const YAW_DEGREES = [15, 10, 5, 0, -5, -10, -15];

describe("displayOrder", () => {
  it("renders hard-left to hard-right (descending class index)", () => {
    expect(displayOrder()).toEqual([6, 5, 4, 3, 2, 1, 0]);
  });
});

describe("degreeLabel", () => {
  it("annotates buttons with the signed degree value", () => {
    expect(degreeLabel(0, YAW_DEGREES)).toBe("+15°");
    expect(degreeLabel(3, YAW_DEGREES)).toBe("0°");
    expect(degreeLabel(6, YAW_DEGREES)).toBe("-15°");
  });

  it("rejects out-of-table classes", () => {
    expect(() => degreeLabel(7, YAW_DEGREES)).toThrow();
  });
});

describe("button titles", () => {
  it("class 0 is the hard clockwise/up end", () => {
    expect(yawButtonTitle(0)).toBe("hard right");
    expect(yawButtonTitle(6)).toBe("hard left");
    expect(pitchButtonTitle(0)).toBe("hard up");
    expect(pitchButtonTitle(6)).toBe("hard down");
  });
});

describe("rampClass", () => {
  it("ramps toward 0 one class per tick and saturates", () => {
    expect(rampClass(null, "toward0")).toBe(HOLD_CLASS - 1);
    expect(rampClass(2, "toward0")).toBe(1);
    expect(rampClass(0, "toward0")).toBe(0);
  });

  it("ramps toward 6 symmetrically", () => {
    expect(rampClass(null, "toward6")).toBe(HOLD_CLASS + 1);
    expect(rampClass(5, "toward6")).toBe(6);
    expect(rampClass(6, "toward6")).toBe(6);
  });
});
