import {
  ApiError,
  EmbedClient,
  SupersededError,
  fetchAllPoints,
  fetchClusters,
  fetchSchema,
} from "./api";
import type { ClusterProfile, EmbedResponse, EmbeddedPoint, PatientRecord, Schema } from "./api";
import { clusterColor } from "./colors";
import { PatientForm } from "./form";
import { renderLegend, renderResult } from "./panel";
import { ScatterView } from "./scatter";

export interface ViewState {
  schema: Schema | null;
  points: EmbeddedPoint[];
  clusters: ClusterProfile[];
  lastRequest: PatientRecord | null;
  lastResponse: EmbedResponse | null;
}

export interface App {
  root: HTMLElement;
  state: ViewState;
  scatter: ScatterView;
  form(): PatientForm | null;
  submit(): Promise<void>;
  reload(): Promise<void>;
}

const TEMPLATE = `
  <header class="top">
    <h1>phenomap</h1>
    <span id="artifact-line" class="artifact-line"></span>
  </header>
  <div id="banner" class="banner hidden">
    <span id="banner-text"></span>
    <button id="banner-retry" type="button">retry</button>
  </div>
  <div class="layout">
    <section class="map-pane">
      <div class="map-toolbar">
        <span id="point-count"></span>
        <button id="reset-view" type="button" title="restore the fitted viewport">reset view</button>
      </div>
      <div id="map-box" class="map-box">
        <canvas id="map" width="840" height="560"></canvas>
        <div id="tooltip" class="tooltip hidden"></div>
      </div>
      <div id="legend" class="legend"></div>
    </section>
    <section class="entry-pane">
      <h2>project a patient</h2>
      <form id="patient-form" novalidate>
        <div id="field-rows"></div>
        <button id="submit-patient" type="submit">embed</button>
      </form>
      <div id="result" class="result"></div>
      <details class="inspector">
        <summary>request sent</summary>
        <pre id="request-json"></pre>
      </details>
    </section>
  </div>
`;

function describeError(err: unknown): string {
  if (err instanceof ApiError) {
    return err.code === "network" ? err.message : `${err.code}: ${err.message}`;
  }
  return String(err);
}

export async function startApp(root: HTMLElement, base = ""): Promise<App> {
  root.innerHTML = TEMPLATE;
  const pick = <T extends HTMLElement>(id: string) =>
    root.querySelector<T>(`#${id}`) as T;

  const canvas = pick<HTMLCanvasElement>("map");
  const banner = pick<HTMLElement>("banner");
  const bannerText = pick<HTMLElement>("banner-text");
  const bannerRetry = pick<HTMLButtonElement>("banner-retry");
  const tooltip = pick<HTMLElement>("tooltip");
  const legend = pick<HTMLElement>("legend");
  const pointCount = pick<HTMLElement>("point-count");
  const artifactLine = pick<HTMLElement>("artifact-line");
  const fieldRows = pick<HTMLElement>("field-rows");
  const formEl = pick<HTMLFormElement>("patient-form");
  const resultEl = pick<HTMLElement>("result");
  const requestJson = pick<HTMLElement>("request-json");

  const state: ViewState = {
    schema: null,
    points: [],
    clusters: [],
    lastRequest: null,
    lastResponse: null,
  };
  let form: PatientForm | null = null;
  let retryAction: () => void = () => undefined;
  const embedClient = new EmbedClient(base);

  const showBanner = (message: string, retry: () => void) => {
    bannerText.textContent = message;
    retryAction = retry;
    banner.classList.remove("hidden");
  };
  const hideBanner = () => banner.classList.add("hidden");
  bannerRetry.addEventListener("click", () => {
    hideBanner();
    retryAction();
  });

  const scatter = new ScatterView(canvas, {
    colorOf: clusterColor,
    onHover: (point, sx, sy) => {
      if (!point) {
        tooltip.classList.add("hidden");
        return;
      }
      tooltip.textContent = `cluster ${point.cluster} · row ${point.row}`;
      tooltip.style.left = `${sx + 14}px`;
      tooltip.style.top = `${sy + 14}px`;
      tooltip.classList.remove("hidden");
    },
  });

  // size to the layout when it exists; keep the attribute size under tests
  const fitCanvas = () => {
    const rect = pick<HTMLElement>("map-box").getBoundingClientRect();
    if (rect.width > 80 && rect.height > 80) {
      scatter.resize(rect.width, rect.height);
    }
  };
  fitCanvas();
  if (typeof ResizeObserver !== "undefined") {
    new ResizeObserver(fitCanvas).observe(pick<HTMLElement>("map-box"));
  }

  async function reload(): Promise<void> {
    hideBanner();
    let schema: Schema;
    let points: EmbeddedPoint[];
    let clusters: { clusters: ClusterProfile[] };
    try {
      [schema, points, clusters] = await Promise.all([
        fetchSchema(base),
        fetchAllPoints(base),
        fetchClusters(base),
      ]);
    } catch (err) {
      showBanner(describeError(err), () => void reload());
      return;
    }
    state.schema = schema;
    state.points = points;
    state.clusters = clusters.clusters;
    scatter.setPoints(points);
    renderLegend(legend, state.clusters, clusterColor);
    pointCount.textContent = `${points.length} patients`;
    const complaint = schema.complaint ? `${schema.complaint} · ` : "";
    artifactLine.textContent =
      `${complaint}${schema.n_clusters} clusters · ` +
      `${schema.tool_version} · seed ${schema.seed}`;
    if (!form) {
      form = new PatientForm(fieldRows, schema.fields);
    }
  }

  async function submit(): Promise<void> {
    if (!form || !form.validate()) return;
    const record = form.read();
    state.lastRequest = record;
    requestJson.textContent = JSON.stringify(record, null, 2);
    form.clearErrors();
    try {
      const response = await embedClient.submit(record);
      state.lastResponse = response;
      scatter.setMarker({ x: response.x, y: response.y, cluster: response.cluster });
      renderResult(resultEl, response, clusterColor);
    } catch (err) {
      if (err instanceof SupersededError) return; // a newer submission took over
      if (err instanceof ApiError && err.status === 422 && err.fields.length > 0) {
        form.setErrors(err.fields, err.message);
        return;
      }
      showBanner(describeError(err), () => void submit());
    }
  }

  formEl.addEventListener("submit", (e) => {
    e.preventDefault();
    void submit();
  });
  pick<HTMLButtonElement>("reset-view").addEventListener("click", () => scatter.resetView());

  await reload();
  return { root, state, scatter, form: () => form, submit, reload };
}
