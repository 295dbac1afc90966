/** DOM wiring: framework-free app around the state module.
 *
 * `createApp` builds the widget tree under a root element and returns
 * handles the tests (and the bootstrap below) drive. All data flow is
 * one-way: server responses and user input feed the state; `render`
 * projects the state into the DOM and canvas.
 */

import { ApiClient, ApiRequestError, pollJob } from './api.js';
import {
  ViewState,
  applyPreview,
  applySummary,
  canCommit,
  classSize,
  colorOf,
  commitPayload,
  initialState,
  jobActive,
  pointColor,
  selectClass,
  setChosenK,
  visiblePoints,
} from './state.js';
import { PlacedPoint, computeLayout, drawScatter, pickPoint } from './scatter.js';

const POLL_INTERVAL_MS = 1000;

export interface App {
  state: ViewState;
  root: HTMLElement;
  refresh(): Promise<void>;
  runEmbed(): Promise<void>;
  runPreview(classIndex: number): Promise<void>;
  commit(): Promise<void>;
  render(): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function createApp(
  root: HTMLElement,
  client: ApiClient,
  pollIntervalMs: number = POLL_INTERVAL_MS,
): App {
  let state = initialState();
  let placed: PlacedPoint[] = [];
  let commitInFlight = false;

  const banner = el('div', 'banner');
  const emptyPrompt = el('div', 'empty-prompt');
  const embedButton = el('button', 'embed-button', 'Run embedding');
  emptyPrompt.append(
    el('p', undefined, 'No embedding yet - compute one to inspect class structure.'),
    embedButton,
  );
  const canvas = el('canvas', 'scatter');
  canvas.width = 640;
  canvas.height = 480;
  const tooltip = el('div', 'tooltip');
  const classList = el('div', 'class-list');
  const previewInfo = el('div', 'preview-info');
  const commitButton = el('button', 'commit-button', 'Commit K and retrain');
  const jobLine = el('div', 'job-line');
  const reportBox = el('div', 'report');

  const sidebar = el('div', 'sidebar');
  sidebar.append(classList, previewInfo, commitButton, jobLine, reportBox);
  const plot = el('div', 'plot');
  plot.append(emptyPrompt, canvas, tooltip);
  root.append(banner, plot, sidebar);

  function setBanner(text: string | null) {
    state = { ...state, banner: text };
    render();
  }

  function renderClassList() {
    classList.textContent = '';
    if (!state.summary) return;
    const overview = el('button', 'class-row all-classes', 'All classes');
    overview.addEventListener('click', () => {
      state = selectClass(state, null);
      render();
    });
    classList.append(overview);
    for (const cls of state.summary.classes) {
      const row = el('div', 'class-row');
      if (state.selectedClass === cls.index) row.classList.add('selected');
      const swatch = el('span', 'swatch');
      swatch.style.background = colorOf(cls.index);
      const label = el('button', 'class-name', `${cls.name} (${cls.count})`);
      label.addEventListener('click', () => {
        state = selectClass(state, cls.index);
        render();
      });
      const k = el('input', 'k-input') as HTMLInputElement;
      k.type = 'number';
      k.min = '1';
      k.max = String(cls.count);
      k.value = String(state.chosenK[cls.index] ?? 1);
      k.addEventListener('change', () => {
        state = setChosenK(state, cls.index, Number(k.value));
        render();
      });
      const previewButton = el('button', 'preview-button', 'Preview');
      previewButton.addEventListener('click', () => void app.runPreview(cls.index));
      row.append(swatch, label, el('span', 'k-label', 'K ='), k, previewButton);
      classList.append(row);
    }
  }

  function renderPreviewInfo() {
    previewInfo.textContent = '';
    if (state.preview === null || state.previewClass === null) return;
    const groups = new Set(state.preview.labels.map((l) => l.sub)).size;
    previewInfo.append(
      el('div', 'preview-groups', `${groups} tentative group${groups === 1 ? '' : 's'}`),
    );
    if (state.preview.silhouette !== null) {
      previewInfo.append(
        el('div', 'silhouette', `silhouette ${state.preview.silhouette.toFixed(3)}`),
      );
    }
  }

  function renderReport() {
    reportBox.textContent = '';
    if (!state.report) return;
    const table = el('table', 'report-table');
    const head = el('tr');
    head.append(el('th'), el('th', undefined, 'subdivided'), el('th', undefined, 'baseline'));
    const accRow = el('tr', 'acc-row');
    accRow.append(
      el('td', undefined, 'accuracy'),
      el('td', 'sfm-acc', state.report.sfm.accuracy.toFixed(3)),
      el('td', 'baseline-acc', state.report.baseline.accuracy.toFixed(3)),
    );
    const mapRow = el('tr', 'map-row');
    mapRow.append(
      el('td', undefined, 'mAP'),
      el('td', 'sfm-map', state.report.sfm.map.toFixed(3)),
      el('td', 'baseline-map', state.report.baseline.map.toFixed(3)),
    );
    table.append(head, accRow, mapRow);
    reportBox.append(el('div', 'report-title', `K = ${JSON.stringify(state.report.K)}`), table);
  }

  function render() {
    banner.textContent = state.banner ?? '';
    banner.style.display = state.banner ? 'block' : 'none';
    const hasPoints = state.points !== null;
    emptyPrompt.style.display = hasPoints ? 'none' : 'block';
    canvas.style.display = hasPoints ? 'block' : 'none';
    if (hasPoints) {
      placed = computeLayout(visiblePoints(state), canvas.width, canvas.height);
      drawScatter(canvas, placed, (p) => pointColor(state, p));
    } else {
      placed = [];
    }
    commitButton.disabled = !canCommit(state) || commitInFlight;
    jobLine.textContent = jobActive(state)
      ? `training job ${state.jobStatus}...`
      : state.jobStatus === 'failed'
        ? 'last job failed'
        : '';
    renderClassList();
    renderPreviewInfo();
    renderReport();
  }

  canvas.addEventListener('mousemove', (event) => {
    const rect = canvas.getBoundingClientRect();
    const hit = pickPoint(placed, event.clientX - rect.left, event.clientY - rect.top);
    if (hit) {
      tooltip.textContent = hit.point.id;
      tooltip.style.display = 'block';
      tooltip.style.left = `${hit.px + 10}px`;
      tooltip.style.top = `${hit.py + 10}px`;
    } else {
      tooltip.style.display = 'none';
    }
  });

  async function refresh(): Promise<void> {
    const summary = await client.summary();
    state = applySummary(state, summary);
    if (summary.has_embedding && state.points === null) {
      const payload = await client.embedding();
      state = { ...state, points: payload.points };
    }
    render();
  }

  async function runEmbed(): Promise<void> {
    setBanner(null);
    try {
      const { job_id } = await client.startEmbed({});
      state = { ...state, jobStatus: 'queued' };
      render();
      await pollJob(client, job_id, pollIntervalMs, (info) => {
        state = { ...state, jobStatus: info.status };
        render();
      });
      state = { ...state, jobStatus: 'done' };
      const payload = await client.embedding();
      state = { ...state, points: payload.points };
      render();
    } catch (err) {
      state = { ...state, jobStatus: 'failed' };
      setBanner(errorText(err));
    }
  }

  async function runPreview(classIndex: number): Promise<void> {
    setBanner(null);
    const k = state.chosenK[classIndex] ?? 1;
    try {
      const preview = await client.preview(classIndex, k);
      state = applyPreview(selectClass(state, classIndex), classIndex, preview);
      render();
    } catch (err) {
      // validation problems (e.g. K out of range) surface inline, not as a crash
      setBanner(errorText(err));
    }
  }

  async function commit(): Promise<void> {
    if (!canCommit(state) || commitInFlight) return; // double-click guard
    commitInFlight = true;
    render();
    setBanner(null);
    try {
      const { job_id } = await client.startTrain(commitPayload(state));
      state = { ...state, jobStatus: 'queued' };
      render();
      await pollJob(client, job_id, pollIntervalMs, (info) => {
        state = { ...state, jobStatus: info.status };
        render();
      });
      state = { ...state, jobStatus: 'done', report: await client.report(job_id) };
      await refresh();
    } catch (err) {
      if (err instanceof ApiRequestError && err.status === 409) {
        setBanner('training in progress - wait for the current job');
      } else {
        state = { ...state, jobStatus: 'failed' };
        setBanner(errorText(err));
      }
    } finally {
      commitInFlight = false;
      render();
    }
  }

  embedButton.addEventListener('click', () => void runEmbed());
  commitButton.addEventListener('click', () => void commit());

  const app: App = {
    get state() {
      return state;
    },
    set state(next: ViewState) {
      state = next;
    },
    root,
    refresh,
    runEmbed,
    runPreview,
    commit,
    render,
  } as App;
  render();
  return app;
}

function errorText(err: unknown): string {
  if (err instanceof ApiRequestError) return `${err.code}: ${err.message}`;
  return err instanceof Error ? err.message : String(err);
}

declare global {
  interface Window {
    subfusionApp?: App;
  }
}

if (typeof document !== 'undefined' && document.getElementById('app')) {
  const app = createApp(document.getElementById('app') as HTMLElement, new ApiClient(''));
  window.subfusionApp = app;
  void app.refresh();
}
