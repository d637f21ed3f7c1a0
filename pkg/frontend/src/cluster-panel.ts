/** Cluster curation panel: membership counts, assignment of the current
 * grid selection, weight recomputation, and the staleness badge.
 *
 * Every edit round-trips through the server; the panel re-renders from
 * the response, so no optimistic state survives a failed request. */

export interface UiClusterPanelState {
  clusters: Record<string, string[]>;
  revision: number;
  weightProvenance: string | null;
  weightsStale: boolean;
  pendingSelection: ReadonlySet<string>;
}

export interface ClusterPanelHandlers {
  onAssignSelection(cluster: string): void;
  onRemoveCluster(name: string): void;
  onRecompute(): void;
}

export function renderClusterPanel(
  container: HTMLElement,
  state: UiClusterPanelState,
  handlers: ClusterPanelHandlers,
): void {
  const doc = container.ownerDocument;
  container.textContent = "";
  container.classList.add("cluster-panel");

  const heading = doc.createElement("h2");
  heading.textContent = "Clusters";
  container.appendChild(heading);

  const list = doc.createElement("ul");
  list.className = "cluster-list";
  const names = Object.keys(state.clusters);
  for (const name of names) {
    const item = doc.createElement("li");
    item.dataset.cluster = name;
    const label = doc.createElement("span");
    label.className = "cluster-name";
    label.textContent = `${name} (${state.clusters[name].length})`;
    const remove = doc.createElement("button");
    remove.className = "cluster-remove";
    remove.textContent = "remove";
    remove.addEventListener("click", () => handlers.onRemoveCluster(name));
    item.append(label, remove);
    list.appendChild(item);
  }
  if (names.length === 0) {
    const item = doc.createElement("li");
    item.className = "cluster-empty";
    item.textContent = "no clusters yet";
    list.appendChild(item);
  }
  container.appendChild(list);

  const assign = doc.createElement("form");
  assign.className = "assign-form";
  const nameInput = doc.createElement("input");
  nameInput.name = "cluster-name";
  nameInput.placeholder = "cluster name";
  const assignButton = doc.createElement("button");
  assignButton.type = "submit";
  assignButton.className = "assign-selected";
  assignButton.textContent = `Assign ${state.pendingSelection.size} selected`;
  assignButton.disabled = state.pendingSelection.size === 0;
  assign.append(nameInput, assignButton);
  assign.addEventListener("submit", (event) => {
    event.preventDefault();
    const name = nameInput.value.trim();
    if (name) {
      handlers.onAssignSelection(name);
    }
  });
  container.appendChild(assign);

  const weights = doc.createElement("div");
  weights.className = "weights-row";
  const provenance = doc.createElement("span");
  provenance.className = "weight-provenance";
  provenance.textContent = `weights: ${state.weightProvenance ?? "none"}`;
  weights.appendChild(provenance);
  if (state.weightsStale) {
    const badge = doc.createElement("span");
    badge.className = "badge stale-badge";
    badge.textContent = "stale";
    badge.title = "clusters changed since these weights were computed";
    weights.appendChild(badge);
  }
  const recompute = doc.createElement("button");
  recompute.className = "recompute-weights";
  recompute.textContent = "Recompute weights";
  recompute.addEventListener("click", () => handlers.onRecompute());
  weights.appendChild(recompute);
  container.appendChild(weights);
}

/** True when the staleness badge is currently rendered. */
export function staleBadgeVisible(container: HTMLElement): boolean {
  return container.querySelector(".stale-badge") !== null;
}
