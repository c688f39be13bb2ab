/**
 * Editor client: owns the socket, the outgoing sequence numbers, and the
 * single state object. Reconnects resend hello and reconcile by full
 * state replacement, so no client-side merging is ever needed.
 */

import type { EditorAction, Envelope } from "./protocol.js";
import { makeEnvelope, parseEnvelope } from "./protocol.js";
import {
  ClientState,
  initialState,
  markConnected,
  markDisconnected,
  markPending,
  reduce,
} from "./state.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
}

export interface SocketHandlers {
  onOpen(): void;
  onMessage(data: string): void;
  onClose(): void;
}

export type SocketFactory = (url: string, handlers: SocketHandlers) => SocketLike;

export function browserSocketFactory(url: string, handlers: SocketHandlers): SocketLike {
  const ws = new WebSocket(url);
  ws.onopen = () => handlers.onOpen();
  ws.onmessage = (ev) => handlers.onMessage(String(ev.data));
  ws.onclose = () => handlers.onClose();
  return {
    send: (data) => ws.send(data),
    close: () => ws.close(),
  };
}

export class EditorClient {
  state: ClientState;
  private socket: SocketLike | null = null;
  private outSeq = 0;
  private retryMs = 500;
  private closed = false;
  private listeners: ((state: ClientState) => void)[] = [];

  constructor(
    private url: string,
    chartId: string,
    private factory: SocketFactory = browserSocketFactory,
    private schedule: (fn: () => void, ms: number) => void = (fn, ms) => setTimeout(fn, ms),
  ) {
    this.state = initialState(chartId);
  }

  onChange(listener: (state: ClientState) => void): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const l of this.listeners) l(this.state);
  }

  private update(next: ClientState): void {
    this.state = next;
    this.emit();
  }

  connect(): void {
    this.socket = this.factory(this.url, {
      onOpen: () => {
        this.retryMs = 500;
        this.update(markConnected(this.state));
        this.sendEnvelope("hello", {});
      },
      onMessage: (data) => {
        const msg = parseEnvelope(data);
        if (msg) this.receive(msg);
      },
      onClose: () => {
        this.update(markDisconnected(this.state));
        if (!this.closed) {
          const wait = this.retryMs;
          this.retryMs = Math.min(this.retryMs * 2, 8000);
          this.schedule(() => this.connect(), wait);
        }
      },
    });
  }

  close(): void {
    this.closed = true;
    this.socket?.close();
  }

  receive(msg: Envelope): void {
    this.update(reduce(this.state, msg));
  }

  private sendEnvelope(type: Envelope["type"], payload: Record<string, unknown>): void {
    this.outSeq += 1;
    const env = makeEnvelope(type, this.state.chartId, this.outSeq, payload);
    this.socket?.send(JSON.stringify(env));
  }

  /** Semantic edits always go through the server; the next broadcast is
   *  the authoritative echo. */
  dispatchEdit(...actions: EditorAction[]): void {
    this.update(markPending(this.state));
    this.sendEnvelope("apply_actions", { actions });
  }

  requestAnalysis(kind: string, params: Record<string, unknown> = {}): void {
    this.sendEnvelope("analysis_request", { kind, ...params });
  }
}
