/** Browser entry point: mounts the app against a running service and
 * wires the file input that feeds the sparsity dashboard. */

import { ApiClient } from "./api.js";
import { App } from "./app.js";

declare global {
  interface Window {
    LATENTSIM_BASE?: string;
  }
}

const base = window.LATENTSIM_BASE ?? "http://127.0.0.1:8763";
const root = document.getElementById("app");
if (root) {
  const app = new App(root, new ApiClient(base));
  void app.start();

  const picker = document.getElementById("history-csv");
  if (picker instanceof HTMLInputElement) {
    picker.addEventListener("change", () => {
      const file = picker.files?.[0];
      if (file) {
        void file.text().then((text) => app.loadHistoryCsv(text));
      }
    });
  }
}
