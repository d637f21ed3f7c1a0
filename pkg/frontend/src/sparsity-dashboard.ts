/** Renders a training-history CSV (as produced by the engine's
 * sparsity-demo command) into loss and channel-ratio curves. */

export const HISTORY_HEADER = ["epoch", "L_task", "L_sp", "R_sp", "R_sp0", "gamma", "R"] as const;

export interface TrainingHistory {
  epoch: number[];
  taskLoss: number[];
  penalty: number[];
  activeRatio: number[];
  zeroRatio: number[];
  gate: number[];
  objective: number[];
}

export class HistoryParseError extends Error {}

export function parseHistoryCsv(text: string): TrainingHistory {
  const lines = text
    .split(/\r?\n/)
    .map((line) => line.trim())
    .filter((line) => line.length > 0);
  if (lines.length < 2) {
    throw new HistoryParseError("history CSV needs a header and at least one row");
  }
  const header = lines[0].split(",");
  if (header.join(",") !== HISTORY_HEADER.join(",")) {
    throw new HistoryParseError(
      `unexpected header "${lines[0]}"; expected ${HISTORY_HEADER.join(",")}`,
    );
  }
  const history: TrainingHistory = {
    epoch: [],
    taskLoss: [],
    penalty: [],
    activeRatio: [],
    zeroRatio: [],
    gate: [],
    objective: [],
  };
  for (const line of lines.slice(1)) {
    const cells = line.split(",").map(Number);
    if (cells.length !== HISTORY_HEADER.length || cells.some(Number.isNaN)) {
      throw new HistoryParseError(`bad history row: ${line}`);
    }
    history.epoch.push(cells[0]);
    history.taskLoss.push(cells[1]);
    history.penalty.push(cells[2]);
    history.activeRatio.push(cells[3]);
    history.zeroRatio.push(cells[4]);
    history.gate.push(cells[5]);
    history.objective.push(cells[6]);
  }
  return history;
}

const WIDTH = 420;
const HEIGHT = 160;
const PAD = 8;

function polylinePoints(xs: number[], ys: number[], yMax: number): string {
  const xMax = Math.max(...xs, 1);
  const span = yMax > 0 ? yMax : 1;
  return xs
    .map((x, i) => {
      const px = PAD + (x / xMax) * (WIDTH - 2 * PAD);
      const py = HEIGHT - PAD - (ys[i] / span) * (HEIGHT - 2 * PAD);
      return `${px.toFixed(1)},${py.toFixed(1)}`;
    })
    .join(" ");
}

interface Curve {
  label: string;
  values: number[];
  color: string;
}

function renderChart(doc: Document, title: string, xs: number[], curves: Curve[], yMax: number): HTMLElement {
  const SVG_NS = "http://www.w3.org/2000/svg";
  const wrap = doc.createElement("figure");
  wrap.className = "chart";
  const caption = doc.createElement("figcaption");
  caption.textContent = `${title} — ${curves.map((c) => c.label).join(", ")}`;
  wrap.appendChild(caption);
  const svg = doc.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
  svg.setAttribute("width", String(WIDTH));
  svg.setAttribute("height", String(HEIGHT));
  for (const curve of curves) {
    const line = doc.createElementNS(SVG_NS, "polyline");
    line.setAttribute("points", polylinePoints(xs, curve.values, yMax));
    line.setAttribute("fill", "none");
    line.setAttribute("stroke", curve.color);
    line.setAttribute("stroke-width", "1.5");
    line.setAttribute("data-series", curve.label);
    svg.appendChild(line);
  }
  wrap.appendChild(svg as unknown as Node);
  return wrap;
}

export function renderSparsityDashboard(container: HTMLElement, history: TrainingHistory): void {
  const doc = container.ownerDocument;
  container.textContent = "";
  container.classList.add("sparsity-dashboard");
  const lossMax = Math.max(...history.objective, ...history.taskLoss);
  container.appendChild(
    renderChart(doc, "losses", history.epoch, [
      { label: "L_task", values: history.taskLoss, color: "#1f77b4" },
      { label: "R", values: history.objective, color: "#d62728" },
    ], lossMax),
  );
  container.appendChild(
    renderChart(doc, "channel ratios", history.epoch, [
      { label: "R_sp0", values: history.zeroRatio, color: "#2ca02c" },
      { label: "gamma", values: history.gate, color: "#9467bd" },
    ], 1),
  );
  const summary = doc.createElement("p");
  summary.className = "dashboard-summary";
  const last = history.epoch.length - 1;
  summary.textContent =
    `final: L_task ${history.taskLoss[last].toFixed(4)}, ` +
    `R_sp0 ${history.zeroRatio[last].toFixed(3)}, ` +
    `gamma ${history.gate[last].toFixed(3)}`;
  container.appendChild(summary);
}
