/**
 * Display list to SVG markup. The server computes all geometry; this
 * renderer only draws and tags elements with the model ids used for
 * hit-testing, so no layout logic is duplicated client-side.
 */

import type { DisplayItem, DisplayListDoc } from "./protocol.js";

const STROKE = "#1e293b";
const TEXT = "#334155";

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function num(x: number): string {
  return Number.isInteger(x) ? String(x) : String(Math.round(x * 1000) / 1000);
}

function renderItem(item: DisplayItem): string {
  switch (item.kind) {
    case "box": {
      const [x, y, w, h] = item.rect;
      return (
        `<rect id="${esc(item.id)}" data-state="${item.stateId}" class="state ${item.stateKind}" ` +
        `x="${num(x)}" y="${num(y)}" width="${num(w)}" height="${num(h)}" rx="${num(item.radius)}" ` +
        `fill="#ffffff" fill-opacity="0.85" stroke="${STROKE}"/>`
      );
    }
    case "separator":
      return (
        `<line x1="${num(item.from[0])}" y1="${num(item.from[1])}" x2="${num(item.to[0])}" ` +
        `y2="${num(item.to[1])}" stroke="${STROKE}" stroke-dasharray="6 4"/>`
      );
    case "path": {
      const d = "M " + item.points.map((p) => `${num(p[0])} ${num(p[1])}`).join(" L ");
      const arrow = item.arrow ? ' marker-end="url(#arrowhead)"' : "";
      return (
        `<path id="${esc(item.id)}" data-connection="${esc(item.connectionId)}" class="connection" ` +
        `d="${d}" fill="none" stroke="${STROKE}"${arrow}/>`
      );
    }
    case "text": {
      const [x, y, , h] = item.rect;
      const weight = item.role === "name" ? ' font-weight="bold"' : "";
      const style = item.role === "invariant" ? ' font-style="italic"' : "";
      return (
        `<text id="${esc(item.id)}" class="t-${esc(item.role)}" x="${num(x)}" ` +
        `y="${num(y + h - 3)}" fill="${TEXT}"${weight}${style}>${esc(item.text)}</text>`
      );
    }
    case "marker": {
      const [cx, cy] = item.at;
      if (item.shape === "prob") {
        return `<circle id="${esc(item.id)}" cx="${num(cx)}" cy="${num(cy)}" r="6" fill="${STROKE}"/>`;
      }
      const d = `M ${num(cx)} ${num(cy - 6)} L ${num(cx + 6)} ${num(cy)} L ${num(cx)} ${num(cy + 6)} L ${num(cx - 6)} ${num(cy)} z`;
      return `<path id="${esc(item.id)}" d="${d}" fill="#ffffff" stroke="${STROKE}"/>`;
    }
    case "leader":
      return (
        `<line x1="${num(item.from[0])}" y1="${num(item.from[1])}" x2="${num(item.to[0])}" ` +
        `y2="${num(item.to[1])}" stroke="${TEXT}" stroke-dasharray="2 3"/>`
      );
  }
}

/** Inner SVG markup (no outer <svg>); the app owns the svg element. */
export function renderItems(dl: DisplayListDoc): string {
  return dl.items.map(renderItem).join("\n");
}

export const SVG_DEFS =
  '<defs><marker id="arrowhead" markerWidth="10" markerHeight="8" refX="9" refY="4" ' +
  'orient="auto"><path d="M 0 0 L 10 4 L 0 8 z" fill="#1e293b"/></marker></defs>';

export function renderDocument(dl: DisplayListDoc): string {
  const [w, h] = dl.size;
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${num(w)} ${num(h)}" ` +
    `font-family="sans-serif" font-size="11">${SVG_DEFS}<g>` +
    renderItems(dl) +
    "</g></svg>"
  );
}

/** Census used by tests and by the app for sanity displays. */
export function census(dl: DisplayListDoc): Record<string, number> {
  const out: Record<string, number> = {};
  for (const item of dl.items) {
    const key = item.kind === "text" ? `text:${item.role}` : item.kind;
    out[key] = (out[key] ?? 0) + 1;
  }
  return out;
}

/** Smallest box containing the point: the innermost state under a click. */
export function hitTestState(dl: DisplayListDoc, x: number, y: number): number | null {
  let best: { id: number; area: number } | null = null;
  for (const item of dl.items) {
    if (item.kind !== "box") continue;
    const [bx, by, bw, bh] = item.rect;
    if (x >= bx && x <= bx + bw && y >= by && y <= by + bh) {
      const area = bw * bh;
      if (best === null || area < best.area) best = { id: item.stateId, area };
    }
  }
  return best?.id ?? null;
}

export function boxOf(dl: DisplayListDoc, stateId: number): number[] | null {
  for (const item of dl.items) {
    if (item.kind === "box" && item.stateId === stateId) return item.rect;
  }
  return null;
}

export function labelRect(dl: DisplayListDoc, connectionId: string): number[] | null {
  for (const item of dl.items) {
    if (item.kind === "text" && item.role === "label" && item.id === `lbl-${connectionId}`) {
      return item.rect;
    }
  }
  return null;
}
