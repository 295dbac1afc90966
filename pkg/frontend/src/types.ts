/** Shapes of the tuning service's JSON payloads. */

export interface ClassInfo {
  index: number;
  name: string;
  count: number;
}

export interface Summary {
  n: number;
  d: number;
  classes: ClassInfo[];
  has_embedding: boolean;
  committed_k: Record<string, number> | null;
  jobs: JobInfo[];
}

export interface JobInfo {
  job_id: string;
  kind: string;
  status: 'queued' | 'running' | 'done' | 'failed';
  error?: string;
}

export interface EmbeddingPoint {
  id: string;
  x: number;
  y: number;
  class: number;
  sub?: number;
}

export interface EmbeddingPayload {
  points: EmbeddingPoint[];
  kl_final: number;
}

export interface PreviewLabel {
  id: string;
  sub: number;
}

export interface PreviewResult {
  labels: PreviewLabel[];
  silhouette: number | null;
}

export interface MetricsReport {
  accuracy: number;
  per_class_accuracy: number[];
  confusion: number[][];
  map: number;
  per_class_ap: (number | null)[];
  n_test: number;
}

export interface TrainReport {
  K: Record<string, number>;
  M: number;
  seed: number;
  n_train: number;
  n_test: number;
  sfm: MetricsReport;
  baseline: MetricsReport;
}
