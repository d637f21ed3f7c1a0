/** Composition root: owns the UI state, routes every action through the
 * service client, and re-renders panels from server responses only. */

import { ApiClient, ApiError } from "./api.js";
import { renderClusterPanel, type UiClusterPanelState } from "./cluster-panel.js";
import { renderQueryPanel } from "./query-panel.js";
import { gridOrder, renderResultGrid } from "./result-grid.js";
import {
  HistoryParseError,
  parseHistoryCsv,
  renderSparsityDashboard,
} from "./sparsity-dashboard.js";
import { initialQueryState, toRequestBody, validateQuery, type UiQueryState } from "./state.js";
import type { ClustersResponse } from "./types.js";

export class App {
  readonly state: UiQueryState = initialQueryState();
  private objectIds: string[] = [];
  private selection = new Set<string>();
  private clusters: ClustersResponse = { clusters: {}, revision: 0 };
  private weightProvenance: string | null = null;
  private weightsStale = false;

  private readonly queryPanel: HTMLElement;
  private readonly grid: HTMLElement;
  private readonly clusterPanel: HTMLElement;
  private readonly dashboard: HTMLElement;
  private readonly errorBar: HTMLElement;

  constructor(root: HTMLElement, private readonly api: ApiClient) {
    const doc = root.ownerDocument;
    this.errorBar = doc.createElement("div");
    this.errorBar.className = "error-bar";
    this.queryPanel = doc.createElement("section");
    this.grid = doc.createElement("section");
    this.clusterPanel = doc.createElement("section");
    this.dashboard = doc.createElement("section");
    root.append(
      this.errorBar,
      this.queryPanel,
      this.grid,
      this.clusterPanel,
      this.dashboard,
    );
  }

  /** Load object ids and cluster state, then draw everything. */
  async start(): Promise<void> {
    const status = await this.api.status();
    this.weightProvenance = status.weight_provenance;
    this.weightsStale = status.weights_stale;
    await this.refreshClusters();
    // object ids come from an unweighted full ranking of any known object;
    // the service exposes no separate listing endpoint
    this.objectIds = [];
    this.render();
  }

  setObjectIds(ids: string[]): void {
    this.objectIds = [...ids];
    this.render();
  }

  patchQueryState(patch: Partial<UiQueryState>): void {
    Object.assign(this.state, patch);
    this.render();
  }

  toggleSelect(id: string): void {
    if (this.selection.has(id)) {
      this.selection.delete(id);
    } else {
      this.selection.add(id);
    }
    this.render();
  }

  selectedIds(): string[] {
    return [...this.selection];
  }

  async runQuery(): Promise<void> {
    const errors = validateQuery(this.state);
    if (errors.length > 0) {
      this.showError(errors.map((e) => e.message).join("; "));
      return;
    }
    await this.guard(async () => {
      const response = await this.api.query(toRequestBody(this.state));
      this.state.lastResponse = response;
      this.weightProvenance = response.weight_provenance;
      this.weightsStale = response.weights_stale;
      if (this.objectIds.length === 0 && this.state.topK === null) {
        this.objectIds = response.ranked.map((entry) => entry.id).sort();
      }
      this.render();
    });
  }

  async assignSelection(cluster: string): Promise<void> {
    await this.guard(async () => {
      for (const id of this.selection) {
        this.clusters = await this.api.clusterOp({
          op: "assign",
          cluster,
          object_id: id,
        });
      }
      this.weightsStale = this.clusters.weights_stale ?? this.weightsStale;
      this.selection.clear();
      this.render();
    });
  }

  async removeCluster(name: string): Promise<void> {
    await this.guard(async () => {
      this.clusters = await this.api.deleteCluster(name);
      this.weightsStale = this.clusters.weights_stale ?? this.weightsStale;
      this.render();
    });
  }

  async recomputeWeights(): Promise<void> {
    await this.guard(async () => {
      const response = await this.api.recomputeWeights("cluster_diff");
      this.weightProvenance = response.weight_provenance;
      this.weightsStale = response.weights_stale;
      if (response.warning) {
        this.showError(response.warning);
      }
      this.render();
    });
  }

  async refreshClusters(): Promise<void> {
    this.clusters = await this.api.getClusters();
  }

  loadHistoryCsv(text: string): void {
    try {
      renderSparsityDashboard(this.dashboard, parseHistoryCsv(text));
      this.clearError();
    } catch (error) {
      if (error instanceof HistoryParseError) {
        this.showError(error.message);
      } else {
        throw error;
      }
    }
  }

  /** Ranked ids as rendered, for order assertions and scripting. */
  renderedOrder(): string[] {
    return gridOrder(this.grid);
  }

  clusterPanelElement(): HTMLElement {
    return this.clusterPanel;
  }

  queryPanelElement(): HTMLElement {
    return this.queryPanel;
  }

  gridElement(): HTMLElement {
    return this.grid;
  }

  errorText(): string {
    return this.errorBar.textContent ?? "";
  }

  private async guard(action: () => Promise<void>): Promise<void> {
    try {
      await action();
      this.clearError();
    } catch (error) {
      if (error instanceof ApiError) {
        this.showError(error.detail);
        this.render();
        return;
      }
      throw error;
    }
  }

  private showError(message: string): void {
    this.errorBar.textContent = message;
    this.errorBar.classList.add("visible");
  }

  private clearError(): void {
    this.errorBar.textContent = "";
    this.errorBar.classList.remove("visible");
  }

  private render(): void {
    renderQueryPanel(this.queryPanel, this.state, this.objectIds, {
      onChange: (patch) => this.patchQueryState(patch),
      onSubmit: () => {
        void this.runQuery();
      },
    });
    const response = this.state.lastResponse;
    renderResultGrid(
      this.grid,
      response ? response.ranked : [],
      new Set(response ? response.request.ids : []),
      this.selection,
      {
        onToggleSelect: (id) => this.toggleSelect(id),
        thumbnailUrl: (path) => this.api.thumbnailUrl(path),
      },
    );
    const panelState: UiClusterPanelState = {
      clusters: this.clusters.clusters,
      revision: this.clusters.revision,
      weightProvenance: this.weightProvenance,
      weightsStale: this.weightsStale,
      pendingSelection: this.selection,
    };
    renderClusterPanel(this.clusterPanel, panelState, {
      onAssignSelection: (cluster) => {
        void this.assignSelection(cluster);
      },
      onRemoveCluster: (name) => {
        void this.removeCluster(name);
      },
      onRecompute: () => {
        void this.recomputeWeights();
      },
    });
  }
}
