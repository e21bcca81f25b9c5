// Application bootstrap: session form, label loop, teleop loop.

import { ApiError, FramePayload, SessionClient, ServiceConfig } from "./api.js";
import { ClassHistogram } from "./histogram.js";
import {
  Selection,
  canSubmit,
  handleKey,
  initialSelection,
} from "./keyboard.js";
import { ActionQueue, SendPacer, nextHeldAction, holdCourse } from "./teleop.js";
import {
  Elements,
  buildClassRows,
  grabElements,
  renderFrame,
  renderHistogram,
  renderSelection,
  showBanner,
} from "./ui.js";

const client = new SessionClient("");

interface AppState {
  sessionId: string;
  mode: string;
  step: number;
  selection: Selection;
  yawHist: ClassHistogram;
  pitchHist: ClassHistogram;
  submitting: boolean;
  finished: boolean;
}

let state: AppState | null = null;
let config: ServiceConfig | null = null;
let els: Elements | null = null;
let teleopTimer: number | null = null;

function applyFrame(frame: FramePayload): void {
  if (!state || !els) return;
  state.step = frame.step;
  state.finished = frame.finished;
  renderFrame(els, frame);
  if (frame.finished) {
    showBanner(els, "episode terminated; export your labels", "info");
  }
}

async function refreshStats(): Promise<void> {
  if (!state || !els) return;
  const stats = await client.getStats(state.sessionId);
  if (!state.yawHist.matches(stats.yaw_histogram)) {
    state.yawHist.replaceWith(stats.yaw_histogram);
  }
  if (!state.pitchHist.matches(stats.pitch_histogram)) {
    state.pitchHist.replaceWith(stats.pitch_histogram);
  }
  renderHistogram(els, state.yawHist.bins(), state.pitchHist.bins(),
                  stats.label_count);
}

async function submitLabel(): Promise<void> {
  if (!state || !els || state.submitting) return;
  const sel = state.selection;
  if (!canSubmit(sel) || state.finished) return;
  state.submitting = true;
  try {
    const frame = await client.postLabel(
      state.sessionId, sel.yaw as number, sel.pitch as number, state.step);
    state.yawHist.add(sel.yaw as number);
    state.pitchHist.add(sel.pitch as number);
    state.selection = initialSelection();
    renderSelection(els, state.selection);
    renderHistogram(els, state.yawHist.bins(), state.pitchHist.bins(),
                    state.yawHist.total());
    applyFrame(frame);
    showBanner(els, "");
  } catch (err) {
    if (err instanceof ApiError && err.code === "step_conflict") {
      showBanner(els, "frame already labeled; refreshing", "error");
      applyFrame(await client.getFrame(state.sessionId));
    } else {
      // selection is retained so nothing is lost on a network hiccup
      showBanner(els, `submit failed: ${(err as Error).message}; retry`,
                 "error");
    }
  } finally {
    state.submitting = false;
  }
}

function startLabelKeyboard(): void {
  document.addEventListener("keydown", (event) => {
    if (!state || !els || state.mode === "teleop") return;
    const intent = handleKey(state.selection, event.key);
    if (intent.kind === "none") return;
    event.preventDefault();
    if (intent.kind === "update") {
      state.selection = intent.selection;
      renderSelection(els, state.selection);
    } else {
      void submitLabel();
    }
  });
}

function startTeleop(): void {
  if (!state || !els || !config) return;
  const held = new Set<string>();
  let current = holdCourse();
  const pacer = new SendPacer(Math.max(config.action_interval_ms, 1));
  const queue = new ActionQueue(async (action) => {
    if (!state || !els) return;
    try {
      const frame = await client.postAction(
        state.sessionId, action.yaw, action.pitch, state.step);
      applyFrame(frame);
      showBanner(els, "");
    } catch (err) {
      if (err instanceof ApiError && err.status === 429) {
        return; // paced out; the next tick retries
      }
      stopTeleop();
      showBanner(els!, `teleop halted: ${(err as Error).message}`, "error");
    }
  });
  document.addEventListener("keydown", (ev) => {
    if (ev.key.startsWith("Arrow")) {
      held.add(ev.key);
      ev.preventDefault();
    }
  });
  document.addEventListener("keyup", (ev) => held.delete(ev.key));
  teleopTimer = window.setInterval(() => {
    if (!state || state.finished) {
      stopTeleop();
      return;
    }
    const now = performance.now();
    if (!pacer.readyAt(now) || queue.busy) return;
    current = nextHeldAction(held, current);
    pacer.markSent(now);
    queue.offer(current);
  }, 50);
}

function stopTeleop(): void {
  if (teleopTimer !== null) {
    window.clearInterval(teleopTimer);
    teleopTimer = null;
  }
}

async function startSession(): Promise<void> {
  const scenario = (document.getElementById("scenario") as HTMLSelectElement)
    .value;
  const seed = Number(
    (document.getElementById("seed") as HTMLInputElement).value || "0");
  const mode = (document.getElementById("mode") as HTMLSelectElement).value;
  const record = (document.getElementById("record") as HTMLInputElement)
    .checked;
  els = grabElements(document);
  try {
    config = await client.getConfig();
    const created = await client.createSession({ scenario, seed, mode,
                                                 record });
    state = {
      sessionId: created.session_id,
      mode: created.mode,
      step: created.step,
      selection: initialSelection(),
      yawHist: new ClassHistogram(),
      pitchHist: new ClassHistogram(),
      submitting: false,
      finished: false,
    };
    buildClassRows(els, config, (row, classIndex) => {
      if (!state || !els) return;
      state.selection = { ...state.selection, [row]: classIndex,
                          focused: row };
      renderSelection(els, state.selection);
    });
    renderSelection(els, state.selection);
    applyFrame(await client.getFrame(state.sessionId));
    await refreshStats();
    stopTeleop();
    if (mode === "teleop") {
      startTeleop();
      showBanner(els, "teleop: hold arrow keys to steer", "info");
    } else {
      showBanner(els, "select yaw and pitch, Enter submits", "info");
    }
  } catch (err) {
    showBanner(els, `session failed: ${(err as Error).message}`, "error");
  }
}

export function bootstrap(): void {
  const startButton = document.getElementById("start") as HTMLButtonElement;
  startButton.addEventListener("click", () => void startSession());
  const submitButton = document.getElementById("submit") as HTMLButtonElement;
  submitButton.addEventListener("click", () => void submitLabel());
  const statsButton = document.getElementById("refresh-stats");
  statsButton?.addEventListener("click", () => void refreshStats());
  const exportButton = document.getElementById("export");
  exportButton?.addEventListener("click", async () => {
    if (!state || !els) return;
    const path = (document.getElementById("export-path") as HTMLInputElement)
      .value;
    try {
      const summary = await client.exportDataset(state.sessionId, path);
      showBanner(els, `exported ${summary.count} labels to ${summary.path}`);
    } catch (err) {
      showBanner(els, `export failed: ${(err as Error).message}`, "error");
    }
  });
  startLabelKeyboard();
}

bootstrap();
