import { NUM_CLASSES } from "./actions.js";

// Running class histogram kept client-side and reconciled with the
// server's stats endpoint on refresh.
export class ClassHistogram {
  private counts: number[];

  constructor(initial?: number[]) {
    this.counts = initial ? [...initial] : new Array(NUM_CLASSES).fill(0);
    if (this.counts.length !== NUM_CLASSES) {
      throw new Error(`histogram needs ${NUM_CLASSES} bins`);
    }
  }

  add(classIndex: number): void {
    if (classIndex < 0 || classIndex >= NUM_CLASSES) {
      throw new Error(`class ${classIndex} out of range`);
    }
    this.counts[classIndex] += 1;
  }

  bins(): number[] {
    return [...this.counts];
  }

  total(): number {
    return this.counts.reduce((a, b) => a + b, 0);
  }

  matches(serverBins: number[]): boolean {
    return (
      serverBins.length === NUM_CLASSES &&
      serverBins.every((v, i) => v === this.counts[i])
    );
  }

  replaceWith(serverBins: number[]): void {
    if (serverBins.length !== NUM_CLASSES) {
      throw new Error(`histogram needs ${NUM_CLASSES} bins`);
    }
    this.counts = [...serverBins];
  }
}
