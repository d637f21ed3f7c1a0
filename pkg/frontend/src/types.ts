/** Wire types mirroring the similarity service JSON contract. */

export type MembershipKind = "gaussian" | "trapezoid";

export type WeightMode = "uniform" | "cluster_diff" | "svd" | "explicit";

export interface RankedEntry {
  id: string;
  score: number;
  thumbnail: string;
}

export interface QueryRequestBody {
  kind: MembershipKind;
  tau: number;
  ids: string[];
  weights: WeightMode;
  explicit?: number[] | null;
  top_k?: number | null;
  group?: string | null;
}

export interface QueryResponse {
  ranked: RankedEntry[];
  weight_provenance: WeightMode;
  weights_stale: boolean;
  warning: string | null;
  request: QueryRequestBody;
}

export interface ClustersResponse {
  clusters: Record<string, string[]>;
  revision: number;
  /** present on mutation responses only */
  weights_stale?: boolean;
  changed?: boolean;
}

export interface ClusterOpBody {
  op: "add" | "assign" | "unassign" | "rename" | "remove";
  cluster: string;
  object_id?: string;
  new_name?: string;
  keep_empty?: boolean;
}

export interface RecomputeResponse {
  weight_provenance: WeightMode;
  weight_revision: number;
  weights_stale: boolean;
  warning: string | null;
  weights: number[];
}

export interface StatusResponse {
  bundle_path: string;
  mode: string;
  objects: number;
  features_total: number;
  features_retained: number | null;
  variance_target: number | null;
  variance_retained: number | null;
  clusters: Record<string, number>;
  cluster_revision: number;
  weight_provenance: WeightMode | null;
  weight_revision: number;
  weights_stale: boolean;
}
