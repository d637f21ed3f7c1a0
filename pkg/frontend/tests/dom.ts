/** Shared DOM scaffolding: every test builds its own isolated window. */

import { Window } from "happy-dom";

export interface Dom {
  window: Window;
  container: HTMLElement;
}

export function makeDom(): Dom {
  const window = new Window();
  const container = window.document.createElement("div");
  window.document.body.appendChild(container);
  return { window, container: container as unknown as HTMLElement };
}

export async function until(
  predicate: () => boolean,
  timeoutMs = 10_000,
  stepMs = 25,
): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (predicate()) {
      return;
    }
    await new Promise((resolve) => setTimeout(resolve, stepMs));
  }
  throw new Error("condition never became true");
}
