/**
 * Browser wiring: one editor instance per container. All semantic edits
 * dispatch to the server; rendering always reflects the last broadcast.
 */

import { EditorClient } from "./client.js";
import type { AnalysisResult, DisplayListDoc, EditorAction } from "./protocol.js";
import { boxOf, hitTestState, labelRect, renderDocument } from "./render.js";

interface DragState {
  kind: "state" | "label";
  stateId?: number;
  connectionId?: string;
  startRect: number[];
  startX: number;
  startY: number;
  moved: boolean;
}

export function mountEditor(container: HTMLElement, serverUrl: string, chartId: string): EditorClient {
  container.classList.add("pchart-editor");
  container.innerHTML = `
    <div class="toolbar">
      <span class="chart-name">${chartId}</span>
      <button data-mode="select" class="active">select</button>
      <button data-mode="addState">+ state</button>
      <button data-mode="addTransition">+ transition</button>
      <button data-cmd="rename">rename</button>
      <button data-cmd="invariant">invariant</button>
      <button data-cmd="variable">variable</button>
      <button data-cmd="delete">delete</button>
      <span class="spacer"></span>
      <button data-analysis="compile">compile</button>
      <button data-analysis="check">check</button>
      <button data-analysis="query">query</button>
      <button data-analysis="codegen">codegen</button>
    </div>
    <div class="banner" hidden></div>
    <div class="canvas-wrap"><svg class="canvas"></svg></div>
    <details class="panel"><summary>analysis</summary><pre class="panel-body"></pre></details>
  `;
  const svg = container.querySelector<SVGSVGElement>("svg.canvas")!;
  const banner = container.querySelector<HTMLElement>(".banner")!;
  const panel = container.querySelector<HTMLElement>(".panel")!;
  const panelBody = container.querySelector<HTMLElement>(".panel-body")!;

  const client = new EditorClient(serverUrl, chartId);
  let mode: "select" | "addState" | "addTransition" = "select";
  let transitionSource: number | null = null;
  let drag: DragState | null = null;

  function toCanvas(ev: MouseEvent): [number, number] {
    const rect = svg.getBoundingClientRect();
    const dl = client.state.displayList;
    if (!dl) return [0, 0];
    const [w, h] = dl.size;
    return [
      ((ev.clientX - rect.left) / rect.width) * w,
      ((ev.clientY - rect.top) / rect.height) * h,
    ];
  }

  function redraw(): void {
    const dl = client.state.displayList;
    if (!dl) return;
    const doc = new DOMParser().parseFromString(renderDocument(dl), "image/svg+xml");
    const incoming = doc.documentElement;
    svg.setAttribute("viewBox", incoming.getAttribute("viewBox") ?? "0 0 100 100");
    svg.setAttribute("font-family", "sans-serif");
    svg.setAttribute("font-size", "11");
    svg.replaceChildren(...Array.from(incoming.childNodes).map((n) => document.importNode(n, true)));
    if (client.state.selection) {
      const el = svg.querySelector(`[id="${client.state.selection}"]`);
      el?.classList.add("selected");
    }
  }

  function renderAnalysis(result: AnalysisResult | null): void {
    if (!result) return;
    panel.setAttribute("open", "");
    if (result.kind === "compile") {
      panelBody.textContent = result.intermediate ?? "";
    } else if (result.kind === "check") {
      const violations = result.violations ?? [];
      if (violations.length === 0) {
        panelBody.textContent = "no invariant violations";
      } else {
        panelBody.textContent = violations
          .map(
            (v) =>
              `invariant \`${v.invariant}\` of ${v.stateName} broken` +
              (v.pre ? `\n  ${JSON.stringify(v.pre)} --${v.event}--> ${JSON.stringify(v.post)}` : " at the initial state"),
          )
          .join("\n");
        const first = violations[0];
        svg.querySelector(`#state-${first.stateId}`)?.classList.add("violated");
      }
    } else if (result.kind === "query") {
      const r = result.result!;
      panelBody.textContent = `${r.query} = ${r.value}\n(${r.stateCount} states, ${r.iterations} iterations, residual ${r.residual})`;
    } else if (result.kind === "codegen") {
      panelBody.textContent = Object.entries(result.files ?? {})
        .map(([name, text]) => `// ---- ${name}\n${text}`)
        .join("\n");
    }
  }

  client.onChange((state) => {
    redraw();
    if (state.lastError) {
      banner.hidden = false;
      banner.textContent = state.lastError;
    } else if (!state.connected) {
      banner.hidden = false;
      banner.textContent = "disconnected - retrying";
    } else {
      banner.hidden = true;
    }
    renderAnalysis(state.analysis);
  });

  container.querySelectorAll<HTMLButtonElement>("[data-mode]").forEach((btn) => {
    btn.addEventListener("click", () => {
      mode = btn.dataset.mode as typeof mode;
      transitionSource = null;
      container.querySelectorAll("[data-mode]").forEach((b) => b.classList.remove("active"));
      btn.classList.add("active");
    });
  });

  function selectedStateId(): number | null {
    const sel = client.state.selection;
    if (sel?.startsWith("state-")) return Number(sel.slice(6));
    return null;
  }

  function selectedTransitionId(): number | null {
    const sel = client.state.selection;
    if (sel?.startsWith("conn-")) return Number(sel.slice(5).split(":")[0]);
    return null;
  }

  container.querySelectorAll<HTMLButtonElement>("[data-cmd]").forEach((btn) => {
    btn.addEventListener("click", () => {
      const cmd = btn.dataset.cmd;
      const sid = selectedStateId();
      if (cmd === "rename" && sid !== null) {
        const name = window.prompt("new name");
        if (name) client.dispatchEdit({ action: "RenameState", id: sid, name });
      } else if (cmd === "invariant" && sid !== null) {
        const text = window.prompt("invariant (empty clears)") ?? "";
        client.dispatchEdit({ action: "SetInvariant", id: sid, text });
      } else if (cmd === "variable" && sid !== null) {
        const decl = window.prompt("declaration, e.g. x: 0..3 = 0 (bare name deletes)");
        if (decl) client.dispatchEdit({ action: "SetVariable", id: sid, decl });
      } else if (cmd === "delete") {
        const tid = selectedTransitionId();
        if (sid !== null) client.dispatchEdit({ action: "DeleteState", id: sid });
        else if (tid !== null) client.dispatchEdit({ action: "DeleteTransition", id: tid });
      }
    });
  });

  container.querySelectorAll<HTMLButtonElement>("[data-analysis]").forEach((btn) => {
    btn.addEventListener("click", () => {
      const kind = btn.dataset.analysis!;
      if (kind === "query") {
        const queryKind = window.prompt("query kind: Pmax, Pmin, Emin, Emax", "Pmax");
        const target = window.prompt("target state name");
        if (queryKind && target) client.requestAnalysis("query", { queryKind, target });
      } else if (kind === "codegen") {
        const target = window.prompt("target: c or prism", "prism");
        if (target) client.requestAnalysis("codegen", { target });
      } else {
        client.requestAnalysis(kind);
      }
    });
  });

  svg.addEventListener("mousedown", (ev) => {
    if (mode !== "select") return;
    const target = ev.target as Element;
    const [x, y] = toCanvas(ev);
    const dl = client.state.displayList;
    if (!dl) return;
    const labelId = target.id.startsWith("lbl-") ? target.id.slice(4) : null;
    if (labelId) {
      const rect = labelRect(dl, labelId);
      if (rect) drag = { kind: "label", connectionId: labelId, startRect: rect, startX: x, startY: y, moved: false };
      return;
    }
    const sid = target.getAttribute("data-state");
    if (sid !== null) {
      const rect = boxOf(dl, Number(sid));
      if (rect) drag = { kind: "state", stateId: Number(sid), startRect: rect, startX: x, startY: y, moved: false };
    }
  });

  svg.addEventListener("mousemove", (ev) => {
    if (!drag) return;
    const [x, y] = toCanvas(ev);
    if (Math.abs(x - drag.startX) + Math.abs(y - drag.startY) > 2) drag.moved = true;
  });

  svg.addEventListener("mouseup", (ev) => {
    const [x, y] = toCanvas(ev);
    const dl = client.state.displayList;
    if (drag && dl) {
      const dx = x - drag.startX;
      const dy = y - drag.startY;
      if (drag.moved) {
        const [rx, ry, rw, rh] = drag.startRect;
        if (drag.kind === "state") {
          client.dispatchEdit({ action: "MoveState", id: drag.stateId!, box: [rx + dx, ry + dy, rw, rh] });
        } else {
          client.dispatchEdit({
            action: "MoveLabelManual",
            connectionId: drag.connectionId!,
            rect: [rx + dx, ry + dy, rw, rh],
          });
        }
        drag = null;
        return;
      }
      drag = null;
    }
    if (!dl) return;
    const target = ev.target as Element;
    if (mode === "addState") {
      const parent = hitTestState(dl, x, y);
      if (parent !== null) {
        client.dispatchEdit({ action: "AddState", parent, kind: "basic", box: [x, y, 120, 70] });
      }
      return;
    }
    if (mode === "addTransition") {
      const hit = hitTestState(dl, x, y);
      if (hit === null) return;
      if (transitionSource === null) {
        transitionSource = hit;
        client.state = { ...client.state, selection: `state-${hit}` };
        redraw();
      } else {
        const label = window.prompt("transition label", "E") ?? "E";
        client.dispatchEdit({ action: "AddTransition", source: transitionSource, label, target: hit });
        transitionSource = null;
      }
      return;
    }
    // select mode click
    const id = target.id || null;
    client.state = { ...client.state, selection: id };
    redraw();
  });

  svg.addEventListener("dblclick", (ev) => {
    const target = ev.target as Element;
    const dl = client.state.displayList;
    if (!dl) return;
    if (target.id.startsWith("lbl-")) {
      const connectionId = target.id.slice(4);
      const tid = Number(connectionId.split(":")[0]);
      const current = (target.textContent ?? "").trim();
      const label = window.prompt("label", current);
      if (label !== null) client.dispatchEdit({ action: "EditLabel", id: tid, label });
      return;
    }
    const sid = target.getAttribute("data-state") ?? (target.id.startsWith("name-") ? target.id.slice(5) : null);
    if (sid !== null) {
      const name = window.prompt("rename state");
      if (name) client.dispatchEdit({ action: "RenameState", id: Number(sid), name });
    }
  });

  client.connect();
  return client;
}

declare global {
  interface Window {
    pchartMountEditor: typeof mountEditor;
  }
}

if (typeof window !== "undefined") {
  window.pchartMountEditor = mountEditor;
}
