import { NUM_CLASSES } from "./actions.js";

// Label-mode selection state machine. Arrow keys step the class selection
// (left/right on the yaw row, down/up on the pitch row), digits 0-6
// direct-select on the focused row, Tab switches focus, Enter submits
// once both classes are selected.

export type Row = "yaw" | "pitch";

export interface Selection {
  yaw: number | null;
  pitch: number | null;
  focused: Row;
}

export function initialSelection(): Selection {
  return { yaw: null, pitch: null, focused: "yaw" };
}

export function canSubmit(sel: Selection): boolean {
  return sel.yaw !== null && sel.pitch !== null;
}

export type KeyIntent =
  | { kind: "update"; selection: Selection }
  | { kind: "submit" }
  | { kind: "none" };

function step(current: number | null, delta: number): number {
  const start = current ?? 3;
  return Math.min(NUM_CLASSES - 1, Math.max(0, start + delta));
}

export function handleKey(sel: Selection, key: string): KeyIntent {
  switch (key) {
    case "ArrowLeft":
      // leftward on the display row = counterclockwise = higher class
      return {
        kind: "update",
        selection: { ...sel, yaw: step(sel.yaw, +1), focused: "yaw" },
      };
    case "ArrowRight":
      return {
        kind: "update",
        selection: { ...sel, yaw: step(sel.yaw, -1), focused: "yaw" },
      };
    case "ArrowUp":
      // upward = positive pitch change = lower class
      return {
        kind: "update",
        selection: { ...sel, pitch: step(sel.pitch, -1), focused: "pitch" },
      };
    case "ArrowDown":
      return {
        kind: "update",
        selection: { ...sel, pitch: step(sel.pitch, +1), focused: "pitch" },
      };
    case "Tab":
      return {
        kind: "update",
        selection: { ...sel, focused: sel.focused === "yaw" ? "pitch" : "yaw" },
      };
    case "Enter":
      return canSubmit(sel) ? { kind: "submit" } : { kind: "none" };
    default:
      break;
  }
  if (/^[0-6]$/.test(key)) {
    const value = Number(key);
    if (sel.focused === "yaw") {
      return { kind: "update", selection: { ...sel, yaw: value } };
    }
    return { kind: "update", selection: { ...sel, pitch: value } };
  }
  return { kind: "none" };
}
