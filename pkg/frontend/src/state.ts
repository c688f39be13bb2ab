/**
 * Client state: a single immutable object, advanced only by the reducer.
 * Every semantic change round-trips through the server; the authoritative
 * rendering input is always the last broadcast chart_state/display_list.
 */

import type { AnalysisResult, DisplayListDoc, Envelope } from "./protocol.js";

export type Mode = "select" | "addState" | "addTransition" | "editText";

export interface ClientState {
  chartId: string;
  lastSeq: number;
  chart: Record<string, unknown> | null;
  displayList: DisplayListDoc | null;
  selection: string | null;
  mode: Mode;
  pendingBatches: number;
  analysis: AnalysisResult | null;
  lastError: string | null;
  connected: boolean;
}

export function initialState(chartId: string): ClientState {
  return {
    chartId,
    lastSeq: 0,
    chart: null,
    displayList: null,
    selection: null,
    mode: "select",
    pendingBatches: 0,
    analysis: null,
    lastError: null,
    connected: false,
  };
}

/** Pure reducer over server messages. Unknown and stale messages leave
 *  the state unchanged (full-state replacement makes that safe). */
export function reduce(state: ClientState, msg: Envelope): ClientState {
  if (msg.chartId !== state.chartId) return state;
  if (msg.seq <= state.lastSeq) return state;
  const next = { ...state, lastSeq: msg.seq };
  switch (msg.type) {
    case "chart_state":
      return { ...next, chart: msg.payload.chart as Record<string, unknown>, lastError: null };
    case "display_list":
      return { ...next, displayList: msg.payload.displayList as unknown as DisplayListDoc };
    case "action_ack":
      return { ...next, pendingBatches: Math.max(0, state.pendingBatches - 1) };
    case "error":
      return {
        ...next,
        pendingBatches: Math.max(0, state.pendingBatches - 1),
        lastError: String(msg.payload.message ?? "server error"),
      };
    case "analysis_result":
      return { ...next, analysis: msg.payload as unknown as AnalysisResult };
    default:
      return next;
  }
}

export function setMode(state: ClientState, mode: Mode): ClientState {
  return { ...state, mode };
}

export function select(state: ClientState, id: string | null): ClientState {
  return { ...state, selection: id };
}

export function markPending(state: ClientState): ClientState {
  return { ...state, pendingBatches: state.pendingBatches + 1 };
}

export function markDisconnected(state: ClientState): ClientState {
  return { ...state, connected: false };
}

export function markConnected(state: ClientState): ClientState {
  return { ...state, connected: true };
}
