/** Steering loop: debounce slider/text changes, keep a single logical
 * in-flight request, and drop stale responses by sequence number. The
 * controller never computes tone math locally; every number it exposes
 * came from a service response. */

import { ApiClient, ApiError, type AdjustResponse } from "./api.js";
import {
  clampStrength,
  createSession,
  recordExploration,
  type SessionState,
} from "./session.js";

export const DEBOUNCE_MS = 150;

export interface ControllerEvents {
  onPreview?: (response: AdjustResponse, state: SessionState) => void;
  onSimilarity?: (score: number) => void;
  onError?: (error: ApiError) => void;
}

export class StudioController {
  readonly state: SessionState = createSession();
  private timer: ReturnType<typeof setTimeout> | null = null;
  private seq = 0; // last request issued
  private applied = 0; // last response applied

  constructor(
    private readonly api: ApiClient,
    private readonly events: ControllerEvents = {},
  ) {}

  loadImage(image: string): void {
    this.state.image = image;
    this.schedule();
  }

  setText(text: string): void {
    if (text === this.state.text) return;
    this.state.text = text;
    this.schedule();
  }

  setStrength(s: number): void {
    this.state.s = clampStrength(s);
    this.schedule();
  }

  /** One request per debounce window, however many changes arrived. */
  private schedule(): void {
    if (!this.state.image || !this.state.text) return;
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.issue();
    }, DEBOUNCE_MS);
  }

  private async issue(): Promise<void> {
    const { image, text, s } = this.state;
    if (!image || !text) return;
    const ticket = ++this.seq;
    recordExploration(this.state, text, s);
    try {
      const [adjusted, score] = await Promise.all([
        this.api.adjust(image, text, s),
        this.api.similarity(image, text),
      ]);
      if (ticket <= this.applied) return; // a newer response already landed
      this.applied = ticket;
      this.state.lastResponse = adjusted;
      this.state.similarity = score;
      this.events.onPreview?.(adjusted, this.state);
      this.events.onSimilarity?.(score);
    } catch (err) {
      if (err instanceof ApiError) {
        this.events.onError?.(err);
      } else {
        throw err;
      }
    }
  }

  /** The .cube body for the current (text, s), passed through verbatim. */
  async downloadCube(): Promise<string> {
    if (!this.state.text) throw new Error("no text selected");
    return this.api.lut(this.state.text, this.state.s, this.state.image ?? undefined);
  }

  /** Test hook: wait out the debounce window synchronously-ish. */
  get pending(): boolean {
    return this.timer !== null;
  }
}
