// DOM glue: renders the frame panel, the two 7-button class rows, the
// histogram readout, and the status banner. All logic lives in the pure
// modules; this file only wires them to elements.

import {
  degreeLabel,
  displayOrder,
  pitchButtonTitle,
  yawButtonTitle,
} from "./actions.js";
import { FramePayload, ServiceConfig, pngDataUrl } from "./api.js";
import { Selection } from "./keyboard.js";

export interface Elements {
  frameImage: HTMLImageElement;
  stepReadout: HTMLElement;
  poseReadout: HTMLElement;
  yawRow: HTMLElement;
  pitchRow: HTMLElement;
  histogram: HTMLElement;
  banner: HTMLElement;
  submitButton: HTMLButtonElement;
}

export function grabElements(doc: Document): Elements {
  const get = (id: string) => {
    const el = doc.getElementById(id);
    if (!el) throw new Error(`missing element #${id}`);
    return el;
  };
  return {
    frameImage: get("frame") as HTMLImageElement,
    stepReadout: get("step-readout"),
    poseReadout: get("pose-readout"),
    yawRow: get("yaw-row"),
    pitchRow: get("pitch-row"),
    histogram: get("histogram"),
    banner: get("banner"),
    submitButton: get("submit") as HTMLButtonElement,
  };
}

export function renderFrame(els: Elements, frame: FramePayload): void {
  els.frameImage.src = pngDataUrl(frame.png_base64);
  els.stepReadout.textContent = `step ${frame.step}`
    + (frame.finished ? " (finished)" : "");
  const p = frame.pose;
  els.poseReadout.textContent =
    `x ${p.x.toFixed(1)}  y ${p.y.toFixed(1)}  z ${p.z.toFixed(1)}  ` +
    `yaw ${p.yaw.toFixed(0)}°  pitch ${p.pitch.toFixed(0)}°`;
}

export function buildClassRows(
  els: Elements,
  config: ServiceConfig,
  onPick: (row: "yaw" | "pitch", classIndex: number) => void,
): void {
  els.yawRow.replaceChildren();
  els.pitchRow.replaceChildren();
  for (const c of displayOrder()) {
    const yawButton = document.createElement("button");
    yawButton.dataset.classIndex = String(c);
    yawButton.textContent =
      `${yawButtonTitle(c)}\n${degreeLabel(c, config.yaw_degrees)}`;
    yawButton.addEventListener("click", () => onPick("yaw", c));
    els.yawRow.appendChild(yawButton);

    const pitchButton = document.createElement("button");
    pitchButton.dataset.classIndex = String(c);
    pitchButton.textContent =
      `${pitchButtonTitle(c)}\n${degreeLabel(c, config.pitch_degrees)}`;
    pitchButton.addEventListener("click", () => onPick("pitch", c));
    els.pitchRow.appendChild(pitchButton);
  }
}

export function renderSelection(els: Elements, sel: Selection): void {
  const mark = (row: HTMLElement, chosen: number | null, focused: boolean) => {
    row.classList.toggle("focused", focused);
    for (const child of Array.from(row.children)) {
      const button = child as HTMLButtonElement;
      const isChosen = button.dataset.classIndex === String(chosen);
      button.classList.toggle("selected", isChosen);
    }
  };
  mark(els.yawRow, sel.yaw, sel.focused === "yaw");
  mark(els.pitchRow, sel.pitch, sel.focused === "pitch");
  els.submitButton.disabled = sel.yaw === null || sel.pitch === null;
}

export function renderHistogram(
  els: Elements,
  yawBins: number[],
  pitchBins: number[],
  labelCount: number,
): void {
  els.histogram.textContent =
    `labels ${labelCount}\nyaw   [${yawBins.join(" ")}]\n` +
    `pitch [${pitchBins.join(" ")}]`;
}

export function showBanner(els: Elements, text: string,
                           kind: "info" | "error" = "info"): void {
  els.banner.textContent = text;
  els.banner.className = `banner ${kind}`;
  els.banner.hidden = text === "";
}
