/** Ranked thumbnail grid.  Cards render strictly in response order —
 * the grid never re-sorts or re-scores on the client. */

import type { RankedEntry } from "./types.js";

export interface ResultGridHandlers {
  onToggleSelect(id: string): void;
  thumbnailUrl(path: string): string;
}

export function renderResultGrid(
  container: HTMLElement,
  entries: RankedEntry[],
  queryIds: ReadonlySet<string>,
  selected: ReadonlySet<string>,
  handlers: ResultGridHandlers,
): void {
  const doc = container.ownerDocument;
  container.textContent = "";
  container.classList.add("result-grid");
  if (entries.length === 0) {
    const empty = doc.createElement("p");
    empty.className = "grid-empty";
    empty.textContent = "No results yet — run a query.";
    container.appendChild(empty);
    return;
  }
  entries.forEach((entry, index) => {
    const card = doc.createElement("figure");
    card.className = "result-card";
    card.dataset.id = entry.id;
    card.dataset.rank = String(index + 1);
    if (selected.has(entry.id)) {
      card.classList.add("selected");
    }
    if (queryIds.has(entry.id)) {
      card.classList.add("query-object");
    }

    const img = doc.createElement("img");
    img.className = "result-thumb";
    img.alt = entry.id;
    img.src = handlers.thumbnailUrl(entry.thumbnail);
    // objects without thumbnails fall back to a labeled placeholder
    img.addEventListener("error", () => {
      img.replaceWith(makePlaceholder(doc, entry.id));
    });
    card.appendChild(img);

    const caption = doc.createElement("figcaption");
    const rank = doc.createElement("span");
    rank.className = "result-rank";
    rank.textContent = `#${index + 1}`;
    const label = doc.createElement("span");
    label.className = "result-id";
    label.textContent = queryIds.has(entry.id) ? `[${entry.id}]` : entry.id;
    const score = doc.createElement("span");
    score.className = "result-score";
    score.textContent = entry.score.toFixed(9);
    caption.append(rank, label, score);
    card.appendChild(caption);

    card.addEventListener("click", () => handlers.onToggleSelect(entry.id));
    container.appendChild(card);
  });
}

function makePlaceholder(doc: Document, id: string): HTMLElement {
  const box = doc.createElement("div");
  box.className = "thumb-placeholder";
  box.textContent = id;
  return box;
}

/** Ranked ids as currently rendered, in DOM order. */
export function gridOrder(container: HTMLElement): string[] {
  return Array.from(container.querySelectorAll<HTMLElement>(".result-card")).map(
    (card) => card.dataset.id ?? "",
  );
}
