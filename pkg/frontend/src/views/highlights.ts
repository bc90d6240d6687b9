/** Clinical-note annotation from attribution groups. Token spans are tinted
 * warm for positive phi and cool for negative, with opacity scaled by
 * |phi| / max|phi| over the whole explanation; hovering a span shows the
 * exact phi. Lab attributions go to a side table sorted by |phi|. */

import { formatPhi } from "../format";
import { renderErrorBanner } from "./banner";
import type { Attribution, Explanation } from "../types";

export const WARM_RGB = "214, 93, 47";
export const COOL_RGB = "47, 116, 214";

interface Segment {
  start: number;
  end: number;
  phi: number;
  group: string;
}

function collectSegments(note: string, attributions: Attribution[]): Segment[] {
  const segments: Segment[] = [];
  for (const attribution of attributions) {
    if (attribution.kind !== "token_span" || !attribution.spans) continue;
    for (const span of attribution.spans) {
      const [start, end] = span;
      if (
        !Number.isInteger(start) || !Number.isInteger(end) ||
        start < 0 || end > note.length || start >= end
      ) {
        console.warn(
          `span [${start}, ${end}) of group ${attribution.group_name} ` +
            `is out of bounds for a note of length ${note.length}; skipping`,
        );
        continue;
      }
      segments.push({ start, end, phi: attribution.phi,
                      group: attribution.group_name });
    }
  }
  segments.sort((a, b) => a.start - b.start || a.end - b.end);
  const disjoint: Segment[] = [];
  for (const segment of segments) {
    const last = disjoint[disjoint.length - 1];
    if (last && segment.start < last.end) {
      console.warn(
        `span [${segment.start}, ${segment.end}) of group ${segment.group} ` +
          `overlaps a previous span; skipping`,
      );
      continue;
    }
    disjoint.push(segment);
  }
  return disjoint;
}

function appendText(parent: HTMLElement, text: string): void {
  if (text) parent.appendChild(document.createTextNode(text));
}

export function renderNoteHighlights(
  container: HTMLElement,
  note: string,
  explanation: Explanation | null | undefined,
): void {
  if (!explanation || !Array.isArray(explanation.attributions)) {
    renderErrorBanner(container, "explanation payload is missing attributions");
    return;
  }

  container.replaceChildren();
  const view = document.createElement("div");
  view.className = "note-view";

  const maxAbs = explanation.attributions.reduce(
    (acc, a) => Math.max(acc, Math.abs(a.phi)), 0);

  const textPane = document.createElement("div");
  textPane.className = "note-text";
  let cursor = 0;
  for (const segment of collectSegments(note, explanation.attributions)) {
    appendText(textPane, note.slice(cursor, segment.start));
    const mark = document.createElement("mark");
    mark.className = "note-span";
    mark.textContent = note.slice(segment.start, segment.end);
    mark.title = `${segment.group}: phi = ${segment.phi}`;
    mark.dataset.phi = String(segment.phi);
    const weight = maxAbs > 0 ? Math.abs(segment.phi) / maxAbs : 0;
    mark.dataset.weight = String(weight);
    if (weight > 0) {
      mark.classList.add(segment.phi > 0 ? "warm" : "cool");
      const rgb = segment.phi > 0 ? WARM_RGB : COOL_RGB;
      mark.style.backgroundColor = `rgba(${rgb}, ${weight})`;
    }
    textPane.appendChild(mark);
    cursor = segment.end;
  }
  appendText(textPane, note.slice(cursor));
  view.appendChild(textPane);

  const side = document.createElement("div");
  side.className = "note-side";

  const heading = document.createElement("h3");
  heading.textContent = `Attributions for ${explanation.target}`;
  side.appendChild(heading);

  const labs = explanation.attributions
    .filter((a) => a.kind === "lab_analyte")
    .sort((a, b) =>
      Math.abs(b.phi) - Math.abs(a.phi) ||
      a.group_name.localeCompare(b.group_name));
  const table = document.createElement("table");
  table.className = "lab-attributions";
  for (const attribution of labs) {
    const row = table.insertRow();
    row.dataset.phi = String(attribution.phi);
    const name = row.insertCell();
    name.textContent = attribution.group_name;
    const phi = row.insertCell();
    phi.textContent = formatPhi(attribution.phi);
    phi.title = String(attribution.phi);
    phi.className = attribution.phi > 0 ? "phi-warm" : "phi-cool";
  }
  side.appendChild(table);

  view.appendChild(side);
  container.appendChild(view);
}
