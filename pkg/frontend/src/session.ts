/** Session state: the loaded image, current steering inputs, the last
 * service response and an append-only exploration history. */

import type { AdjustResponse } from "./api.js";

export const SLIDER_MIN = -2;
export const SLIDER_MAX = 2;

export interface Exploration {
  text: string;
  s: number;
}

export interface SessionState {
  image: string | null; // base64 PNG as uploaded
  text: string;
  s: number;
  lastResponse: AdjustResponse | null;
  similarity: number | null;
  history: Exploration[];
}

export function createSession(): SessionState {
  return {
    image: null,
    text: "",
    s: 1.0,
    lastResponse: null,
    similarity: null,
    history: [],
  };
}

export function clampStrength(s: number): number {
  if (Number.isNaN(s)) return 0;
  return Math.min(SLIDER_MAX, Math.max(SLIDER_MIN, s));
}

/** Record an exploration; history only ever grows. */
export function recordExploration(state: SessionState, text: string, s: number): void {
  state.history.push({ text, s });
}

/** Simple FNV-1a checksum so before/after identity is testable. */
export function checksum(data: string): number {
  let hash = 0x811c9dc5;
  for (let i = 0; i < data.length; i++) {
    hash ^= data.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193) >>> 0;
  }
  return hash;
}
