/**
 * Typed client for the backend REST API.
 *
 * Every displayed number in the UI comes from one of these responses;
 * the client adds no business logic. All mutations carry the expected
 * revision so the server can reject stale writes (409 with the current
 * revision, surfaced as ApiError.currentRevision).
 */

export interface Box {
  x_min: number;
  y_min: number;
  x_max: number;
  y_max: number;
}

export interface Detection {
  box: Box;
  class: string;
  score: number;
}

export interface PipelineParams {
  flattener_window: number;
  rainbow_threshold: number;
  min_region_area: number;
  nms_iou_threshold: number;
}

export interface Annotation {
  frame_index: number;
  detection: Detection;
  source: "manual" | "automatic";
  params: PipelineParams;
  screenshot_ref: string | null;
  created_at: string;
}

export interface Inspection {
  id: string;
  title: string;
  created_at: string;
  frame_refs: string[];
  depth_ref: string | null;
  annotations: Annotation[];
  tags: string[];
  locked: boolean;
  revision: number;
}

export interface InspectionPage {
  items: Inspection[];
  page: number;
  page_size: number;
  total: number;
}

export interface StatisticsPayload {
  top_defects: { class: string; count: number }[];
  monthly_defect_rate: { month: string; rate: number }[];
}

export interface DatasetSummary {
  id: string;
  name: string;
  classes: string[];
  image_count: number;
  train_count: number | null;
  test_count: number | null;
  provenance_count: number;
}

export interface ModelVersion {
  id: string;
  family: string;
  version: number;
  created_at: string;
  trained_on: string;
  active: boolean;
  metrics: {
    per_class_ap: Record<string, number>;
    map_score: number;
    accuracy: number;
    iou_threshold: number;
    counts: Record<string, { tp: number; fp: number; fn: number }>;
  } | null;
}

export interface JobInfo {
  id: string;
  kind: string;
  payload: Record<string, unknown>;
  state: "queued" | "running" | "succeeded" | "failed" | "cancelled";
  enqueued_at: string | null;
  started_at: string | null;
  finished_at: string | null;
  result_ref: string | null;
  error: string | null;
}

export interface UserInfo {
  username: string;
  role: "admin" | "operator";
}

export interface TokenRecord extends UserInfo {
  token: string;
  issued_at: string;
  expires_at: string;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public currentRevision: number | null = null,
  ) {
    super(message);
  }
}

type FetchLike = typeof fetch;

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    public token: string | null = null,
    private fetchFn: FetchLike = (...args) => fetch(...args),
  ) {}

  private headers(extra: Record<string, string> = {}): Record<string, string> {
    const headers: Record<string, string> = { ...extra };
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    return headers;
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const init: RequestInit = { method, headers: this.headers() };
    if (body !== undefined) {
      (init.headers as Record<string, string>)["Content-Type"] = "application/json";
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (response.status === 204) return undefined as T;
    if (!response.ok) {
      let code = "error";
      let message = `${response.status}`;
      let currentRevision: number | null = null;
      try {
        const payload = await response.json();
        code = payload.code ?? code;
        message = payload.message ?? message;
        currentRevision = payload.current_revision ?? null;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(response.status, code, message, currentRevision);
    }
    return (await response.json()) as T;
  }

  // -- auth ------------------------------------------------------------

  async login(username: string, password: string): Promise<TokenRecord> {
    const record = await this.request<TokenRecord>("POST", "/api/auth/login", {
      username,
      password,
    });
    this.token = record.token;
    return record;
  }

  async logout(): Promise<void> {
    await this.request<void>("POST", "/api/auth/logout");
    this.token = null;
  }

  me(): Promise<UserInfo> {
    return this.request("GET", "/api/auth/me");
  }

  listUsers(): Promise<UserInfo[]> {
    return this.request("GET", "/api/auth/users");
  }

  createUser(username: string, password: string, role: string): Promise<UserInfo> {
    return this.request("POST", "/api/auth/users", { username, password, role });
  }

  setUserRole(username: string, role: string): Promise<UserInfo> {
    return this.request("PUT", `/api/auth/users/${username}/role`, { role });
  }

  setUserPassword(username: string, password: string): Promise<void> {
    return this.request("PUT", `/api/auth/users/${username}/password`, { password });
  }

  // -- inspections --------------------------------------------------------

  listInspections(page = 1, pageSize = 20): Promise<InspectionPage> {
    return this.request("GET", `/api/inspections?page=${page}&page_size=${pageSize}`);
  }

  getInspection(id: string): Promise<Inspection> {
    return this.request("GET", `/api/inspections/${id}`);
  }

  frameUrl(id: string, index: number): string {
    return `${this.baseUrl}/api/inspections/${id}/frames/${index}`;
  }

  async getFrame(id: string, index: number): Promise<ArrayBuffer> {
    const response = await this.fetchFn(this.frameUrl(id, index), {
      headers: this.headers(),
    });
    if (!response.ok) throw new ApiError(response.status, "error", "frame fetch failed");
    return response.arrayBuffer();
  }

  putDefects(
    id: string,
    annotations: Annotation[],
    expectedRevision: number,
  ): Promise<{ revision: number }> {
    return this.request("PUT", `/api/inspections/${id}/defects`, {
      annotations,
      expected_revision: expectedRevision,
    });
  }

  deleteDefect(
    id: string,
    index: number,
    expectedRevision: number,
  ): Promise<{ revision: number }> {
    return this.request(
      "DELETE",
      `/api/inspections/${id}/defects/${index}?expected_revision=${expectedRevision}`,
    );
  }

  getBundle(id: string): Promise<{ bundle: Record<string, unknown>; revision: number; bundle_hash: string }> {
    return this.request("GET", `/api/inspections/${id}/bundle`);
  }

  // -- statistics, tags, classes ---------------------------------------------

  statistics(source?: "manual" | "automatic"): Promise<StatisticsPayload> {
    const query = source ? `?source=${source}` : "";
    return this.request("GET", `/api/statistics${query}`);
  }

  listTags(): Promise<{ tags: string[] }> {
    return this.request("GET", "/api/tags");
  }

  tagInspection(
    id: string,
    tags: string[],
    expectedRevision?: number,
  ): Promise<Inspection> {
    return this.request("PUT", `/api/tags/${id}`, {
      tags,
      expected_revision: expectedRevision ?? null,
    });
  }

  getDefectClasses(): Promise<{ classes: string[] }> {
    return this.request("GET", "/api/defects/classes");
  }

  setDefectClasses(classes: string[]): Promise<{ classes: string[] }> {
    return this.request("PUT", "/api/defects/classes", { classes });
  }

  // -- ml ------------------------------------------------------------------

  listDatasets(): Promise<DatasetSummary[]> {
    return this.request("GET", "/api/ml/datasets");
  }

  createDataset(name: string, classes: string[]): Promise<DatasetSummary> {
    return this.request("POST", "/api/ml/datasets", { name, classes });
  }

  addDatasetImage(
    datasetId: string,
    imagePpmBase64: string,
    objects: { class: string; box: Box }[],
  ): Promise<DatasetSummary> {
    return this.request("POST", `/api/ml/datasets/${datasetId}/images`, {
      image_ppm_base64: imagePpmBase64,
      objects,
    });
  }

  augmentDataset(
    datasetId: string,
    ops: Record<string, unknown>[],
    seed: number,
  ): Promise<DatasetSummary> {
    return this.request("POST", `/api/ml/datasets/${datasetId}/augment`, { ops, seed });
  }

  splitDataset(
    datasetId: string,
    trainFraction: number,
    seed: number,
    stratified = true,
  ): Promise<DatasetSummary> {
    return this.request("POST", `/api/ml/datasets/${datasetId}/split`, {
      train_fraction: trainFraction,
      seed,
      stratified,
    });
  }

  startRetrain(datasetId: string): Promise<JobInfo> {
    return this.request("POST", `/api/ml/datasets/${datasetId}/retrain`, {});
  }

  listModels(): Promise<ModelVersion[]> {
    return this.request("GET", "/api/ml/models");
  }

  activateModel(versionId: string): Promise<ModelVersion> {
    return this.request("POST", `/api/ml/models/${versionId}/activate`);
  }

  startAnalysis(inspectionId: string, modelVersionId: string): Promise<JobInfo> {
    return this.request("POST", "/api/ml/analyze", {
      inspection_id: inspectionId,
      model_version_id: modelVersionId,
    });
  }

  listJobs(state?: string): Promise<JobInfo[]> {
    const query = state ? `?state=${state}` : "";
    return this.request("GET", `/api/ml/jobs${query}`);
  }

  cancelJob(jobId: string): Promise<JobInfo> {
    return this.request("POST", `/api/ml/jobs/${jobId}/cancel`);
  }
}
