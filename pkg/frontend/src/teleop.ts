import { HOLD_CLASS, rampClass } from "./actions.js";

// Pure teleop helpers: key-hold to action mapping and send pacing. The
// loop never sends faster than the server's advertised action interval.

export interface HeldAction {
  yaw: number;
  pitch: number;
}

export function holdCourse(): HeldAction {
  return { yaw: HOLD_CLASS, pitch: HOLD_CLASS };
}

export function nextHeldAction(
  held: ReadonlySet<string>,
  current: HeldAction,
): HeldAction {
  let yaw = HOLD_CLASS;
  let pitch = HOLD_CLASS;
  if (held.has("ArrowRight") && !held.has("ArrowLeft")) {
    yaw = rampClass(current.yaw, "toward0"); // clockwise, sharper each tick
  } else if (held.has("ArrowLeft") && !held.has("ArrowRight")) {
    yaw = rampClass(current.yaw, "toward6");
  }
  if (held.has("ArrowUp") && !held.has("ArrowDown")) {
    pitch = rampClass(current.pitch, "toward0"); // upward
  } else if (held.has("ArrowDown") && !held.has("ArrowUp")) {
    pitch = rampClass(current.pitch, "toward6");
  }
  return { yaw, pitch };
}

export class SendPacer {
  private lastSent = Number.NEGATIVE_INFINITY;

  constructor(private readonly intervalMs: number) {}

  readyAt(nowMs: number): boolean {
    return nowMs - this.lastSent >= this.intervalMs;
  }

  markSent(nowMs: number): void {
    this.lastSent = nowMs;
  }
}

// Single in-flight request with at most one queued action.
export class ActionQueue {
  private inFlight = false;
  private pending: HeldAction | null = null;

  constructor(private readonly send: (action: HeldAction) => Promise<void>) {}

  offer(action: HeldAction): void {
    if (this.inFlight) {
      this.pending = action; // replaces any older queued action
      return;
    }
    void this.dispatch(action);
  }

  get busy(): boolean {
    return this.inFlight;
  }

  private async dispatch(action: HeldAction): Promise<void> {
    this.inFlight = true;
    try {
      await this.send(action);
    } finally {
      this.inFlight = false;
      if (this.pending) {
        const next = this.pending;
        this.pending = null;
        void this.dispatch(next);
      }
    }
  }
}
