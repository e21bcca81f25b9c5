// Class index conventions shared with the simulator: 7 classes per axis,
// class 3 is the no-op, lower classes are clockwise (yaw) / upward (pitch).

export const NUM_CLASSES = 7;
export const HOLD_CLASS = 3;

// Rows render hard-left..hard-right (yaw) and hard-down..hard-up (pitch),
// which is descending class index in both cases.
export function displayOrder(): number[] {
  return [6, 5, 4, 3, 2, 1, 0];
}

export function degreeLabel(classIndex: number, degrees: number[]): string {
  const value = degrees[classIndex];
  if (value === undefined) {
    throw new Error(`class ${classIndex} outside the degree table`);
  }
  const sign = value > 0 ? "+" : "";
  return `${sign}${value}°`;
}

export function yawButtonTitle(classIndex: number): string {
  const names = [
    "hard right",
    "right",
    "gentle right",
    "straight",
    "gentle left",
    "left",
    "hard left",
  ];
  return names[classIndex];
}

export function pitchButtonTitle(classIndex: number): string {
  const names = [
    "hard up",
    "up",
    "gentle up",
    "level",
    "gentle down",
    "down",
    "hard down",
  ];
  return names[classIndex];
}

export type RampDirection = "toward0" | "toward6";

// Teleop hold semantics: each tick a held key ramps the class one step
// sharper in its direction; releasing resets to HOLD_CLASS.
export function rampClass(
  current: number | null,
  direction: RampDirection,
): number {
  const start = current ?? HOLD_CLASS;
  if (direction === "toward0") {
    return Math.max(0, start - 1);
  }
  return Math.min(NUM_CLASSES - 1, start + 1);
}
