import { describe, expect, it } from "vitest";

import { gridOrder, renderResultGrid } from "../src/result-grid.js";
import type { RankedEntry } from "../src/types.js";
import { makeDom } from "./dom.js";

const ENTRIES: RankedEntry[] = [
  { id: "obj_004", score: 1.0, thumbnail: "/objects/obj_004/thumbnail" },
  { id: "obj_011", score: 0.87654321, thumbnail: "/objects/obj_011/thumbnail" },
  { id: "obj_002", score: 0.543210987, thumbnail: "/objects/obj_002/thumbnail" },
];

const HANDLERS = {
  onToggleSelect: () => {},
  thumbnailUrl: (path: string) => `http://svc${path}`,
};

describe("result grid", () => {
  it("renders cards strictly in response order", () => {
    const { container } = makeDom();
    renderResultGrid(container, ENTRIES, new Set(["obj_004"]), new Set(), HANDLERS);
    expect(gridOrder(container)).toEqual(["obj_004", "obj_011", "obj_002"]);
    const ranks = Array.from(
      container.querySelectorAll<HTMLElement>(".result-card"),
    ).map((card) => card.dataset.rank);
    expect(ranks).toEqual(["1", "2", "3"]);
  });

  it("shows nine-decimal scores from the response verbatim", () => {
    const { container } = makeDom();
    renderResultGrid(container, ENTRIES, new Set(), new Set(), HANDLERS);
    const scores = Array.from(container.querySelectorAll(".result-score")).map(
      (el) => el.textContent,
    );
    expect(scores).toEqual(["1.000000000", "0.876543210", "0.543210987"]);
  });

  it("marks query objects and selection", () => {
    const { container } = makeDom();
    renderResultGrid(
      container,
      ENTRIES,
      new Set(["obj_004"]),
      new Set(["obj_011"]),
      HANDLERS,
    );
    const cards = container.querySelectorAll<HTMLElement>(".result-card");
    expect(cards[0].classList.contains("query-object")).toBe(true);
    expect(cards[0].querySelector(".result-id")?.textContent).toBe("[obj_004]");
    expect(cards[1].classList.contains("selected")).toBe(true);
    expect(cards[2].classList.contains("selected")).toBe(false);
  });

  it("clicking a card reports its id", () => {
    const { container } = makeDom();
    const clicked: string[] = [];
    renderResultGrid(container, ENTRIES, new Set(), new Set(), {
      ...HANDLERS,
      onToggleSelect: (id) => clicked.push(id),
    });
    const cards = container.querySelectorAll<HTMLElement>(".result-card");
    cards[2].click();
    cards[0].click();
    expect(clicked).toEqual(["obj_002", "obj_004"]);
  });

  it("thumbnails resolve through the client base url", () => {
    const { container } = makeDom();
    renderResultGrid(container, ENTRIES, new Set(), new Set(), HANDLERS);
    const img = container.querySelector<HTMLImageElement>(".result-thumb");
    expect(img?.getAttribute("src")).toBe("http://svc/objects/obj_004/thumbnail");
  });

  it("failed thumbnail loads fall back to a labeled placeholder", () => {
    const { container, window } = makeDom();
    renderResultGrid(container, ENTRIES, new Set(), new Set(), HANDLERS);
    const img = container.querySelector(".result-thumb");
    img?.dispatchEvent(new (window as any).Event("error"));
    const placeholder = container.querySelector(".thumb-placeholder");
    expect(placeholder?.textContent).toBe("obj_004");
  });

  it("renders an empty-state message without results", () => {
    const { container } = makeDom();
    renderResultGrid(container, [], new Set(), new Set(), HANDLERS);
    expect(container.querySelector(".grid-empty")).not.toBeNull();
    expect(gridOrder(container)).toEqual([]);
  });
});
