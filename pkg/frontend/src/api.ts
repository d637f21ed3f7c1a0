/** Typed fetch client for the similarity service.  Every UI action maps
 * to exactly one endpoint here; there is no client-side scoring. */

import type {
  ClusterOpBody,
  ClustersResponse,
  QueryRequestBody,
  QueryResponse,
  RecomputeResponse,
  StatusResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = (await response.json()) as { detail?: unknown };
        if (typeof body.detail === "string") {
          detail = body.detail;
        } else if (body.detail !== undefined) {
          detail = JSON.stringify(body.detail);
        }
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  query(body: QueryRequestBody): Promise<QueryResponse> {
    return this.post<QueryResponse>("/query", body);
  }

  getClusters(): Promise<ClustersResponse> {
    return this.request<ClustersResponse>("/clusters");
  }

  clusterOp(body: ClusterOpBody): Promise<ClustersResponse> {
    return this.post<ClustersResponse>("/clusters", body);
  }

  deleteCluster(name: string): Promise<ClustersResponse> {
    return this.request<ClustersResponse>(`/clusters/${encodeURIComponent(name)}`, {
      method: "DELETE",
    });
  }

  recomputeWeights(method = "cluster_diff"): Promise<RecomputeResponse> {
    return this.post<RecomputeResponse>("/weights/recompute", { method });
  }

  status(): Promise<StatusResponse> {
    return this.request<StatusResponse>("/session/status");
  }

  thumbnailUrl(path: string): string {
    return `${this.baseUrl}${path}`;
  }
}
