// Typed access to the phenomap service. Every number the UI shows comes out
// of these responses; the client does formatting only, no model math.

export type FieldKind = "numeric" | "categorical" | "binary-flag";

/** Numeric and binary-flag fields carry training-set stats for form hints. */
export interface NumericField {
  name: string;
  kind: "numeric" | "binary-flag";
  minimum: number;
  maximum: number;
  typical: number;
}

export interface CategoricalField {
  name: string;
  kind: "categorical";
  values: string[];
}

export type SchemaField = NumericField | CategoricalField;

export interface Schema {
  tool_version: string;
  seed: number;
  complaint: string | null;
  outcome_column: string | null;
  n_clusters: number;
  primary_fold: number;
  fields: SchemaField[];
}

export interface EmbeddedPoint {
  row: number;
  x: number;
  y: number;
  cluster: number;
  truth?: number;
}

export interface PointPage {
  total: number;
  page: number;
  page_size: number;
  pages: number;
  points: EmbeddedPoint[];
}

export interface FeatureDifference {
  feature: string;
  difference: number;
}

export interface ClusterProfile {
  cluster: number;
  share: number | null;
  member_count: number | null;
  share_mean: number;
  share_ci: [number, number];
  admit_rate: { mean: number; ci: [number, number] } | null;
  member_count_mean: number;
  top_features: FeatureDifference[];
}

export interface ClusterSummary {
  primary_fold: number;
  clusters: ClusterProfile[];
}

export interface EmbedWarning {
  kind: string;
  column: string;
  detail: string;
}

export interface EmbedResponse {
  x: number;
  y: number;
  cluster: number;
  responsibilities: number[];
  profile: ClusterProfile | null;
  warnings: EmbedWarning[];
}

/** One form submission: null means "not recorded" and lets the service impute. */
export type PatientRecord = Record<string, number | string | boolean | null>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    detail: string,
    readonly fields: string[] = [],
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

/** Thrown to the older caller when a newer embed request replaces it. */
export class SupersededError extends Error {
  constructor() {
    super("request superseded by a newer submission");
    this.name = "SupersededError";
  }
}

function errorFromBody(status: number, body: unknown): ApiError {
  if (body !== null && typeof body === "object" && "code" in body) {
    const b = body as { code: string; detail?: string; fields?: string[] };
    return new ApiError(status, b.code, b.detail ?? "request failed", b.fields ?? []);
  }
  return new ApiError(status, "http-error", `request failed with status ${status}`);
}

async function getJson<T>(url: string): Promise<T> {
  let response: Response;
  try {
    response = await fetch(url);
  } catch (err) {
    throw new ApiError(0, "network", `service unreachable: ${String(err)}`);
  }
  const body = await response.json().catch(() => null);
  if (!response.ok) {
    throw errorFromBody(response.status, body);
  }
  return body as T;
}

export function fetchSchema(base = ""): Promise<Schema> {
  return getJson<Schema>(`${base}/api/schema`);
}

export function fetchClusters(base = "", top?: number): Promise<ClusterSummary> {
  const query = top === undefined ? "" : `?top=${top}`;
  return getJson<ClusterSummary>(`${base}/api/clusters${query}`);
}

const POINTS_PAGE_SIZE = 2000;

/** Walks /api/points until every page is in; order follows the stored test rows. */
export async function fetchAllPoints(base = ""): Promise<EmbeddedPoint[]> {
  const all: EmbeddedPoint[] = [];
  let page = 0;
  let pages = 1;
  while (page < pages) {
    const chunk = await getJson<PointPage>(
      `${base}/api/points?page=${page}&page_size=${POINTS_PAGE_SIZE}`,
    );
    all.push(...chunk.points);
    pages = chunk.pages;
    page += 1;
  }
  return all;
}

/**
 * POST /api/embed with at most one request in flight: submitting again aborts
 * the pending call and its awaiter gets a SupersededError instead of a result.
 */
export class EmbedClient {
  private inflight: AbortController | null = null;

  constructor(private readonly base = "") {}

  async submit(record: PatientRecord): Promise<EmbedResponse> {
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    try {
      const response = await fetch(`${this.base}/api/embed`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(record),
        signal: controller.signal,
      });
      const body = await response.json().catch(() => null);
      if (!response.ok) {
        throw errorFromBody(response.status, body);
      }
      return body as EmbedResponse;
    } catch (err) {
      if (controller.signal.aborted) throw new SupersededError();
      if (err instanceof ApiError) throw err;
      throw new ApiError(0, "network", `service unreachable: ${String(err)}`);
    } finally {
      if (this.inflight === controller) this.inflight = null;
    }
  }
}
