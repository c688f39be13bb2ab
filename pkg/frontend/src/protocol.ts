/**
 * The chart synchronization protocol: one JSON envelope per message.
 * This file is the single place that knows the wire format; everything
 * else works with the parsed types.
 */

export type MessageType =
  | "hello"
  | "chart_state"
  | "apply_actions"
  | "action_ack"
  | "error"
  | "analysis_request"
  | "analysis_result"
  | "display_list";

export interface Envelope {
  type: MessageType;
  chartId: string;
  seq: number;
  payload: Record<string, unknown>;
}

export interface RectTuple extends Array<number> {
  0: number;
  1: number;
  2: number;
  3: number;
}

export type DisplayItem =
  | { kind: "box"; rect: number[]; radius: number; stateKind: string; id: string; stateId: number }
  | { kind: "separator"; from: number[]; to: number[]; owner: number }
  | { kind: "path"; points: number[][]; arrow: boolean; id: string; connectionId: string }
  | { kind: "text"; rect: number[]; text: string; id: string; role: string }
  | { kind: "marker"; at: number[]; shape: string; id: string; pseudoId: number }
  | { kind: "leader"; from: number[]; to: number[]; connectionId: string };

export interface DisplayListDoc {
  items: DisplayItem[];
  size: number[];
}

export type EditorAction =
  | { action: "AddState"; parent: number; kind: string; name?: string; box?: number[] }
  | { action: "RenameState"; id: number; name: string }
  | { action: "MoveState"; id: number; box: number[] }
  | { action: "DeleteState"; id: number }
  | { action: "AddTransition"; source: number; label: string; target?: number; body?: unknown }
  | { action: "EditLabel"; id: number; label: string }
  | { action: "MoveLabelManual"; connectionId: string; rect: number[] | null }
  | { action: "SetInvariant"; id: number; text: string }
  | { action: "SetVariable"; id: number; decl: string }
  | { action: "AddQuery"; kind: string; target: number; attachedTo?: number }
  | { action: "DeleteTransition"; id: number };

export interface AnalysisResult {
  kind: "compile" | "check" | "query" | "codegen";
  intermediate?: string;
  violations?: ViolationDoc[];
  result?: QueryResultDoc;
  target?: string;
  files?: Record<string, string>;
}

export interface ViolationDoc {
  transId: number | null;
  commandId: number | null;
  stateId: number;
  stateName: string;
  invariant: string;
  pre: Record<string, number | boolean> | null;
  event: string | null;
  post: Record<string, number | boolean>;
  path: [string, number, number][];
}

export interface QueryResultDoc {
  query: string;
  target: number;
  value: number;
  residual: number;
  iterations: number;
  stateCount: number;
}

export function makeEnvelope(
  type: MessageType,
  chartId: string,
  seq: number,
  payload: Record<string, unknown>,
): Envelope {
  return { type, chartId, seq, payload };
}

export function parseEnvelope(raw: string): Envelope | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const m = data as Record<string, unknown>;
  if (typeof m.type !== "string" || typeof m.seq !== "number") return null;
  return {
    type: m.type as MessageType,
    chartId: String(m.chartId ?? ""),
    seq: m.seq,
    payload: (m.payload as Record<string, unknown>) ?? {},
  };
}
