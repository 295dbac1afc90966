/** View state and its pure transitions.
 *
 * The rendered view is a function of (server responses, local selections);
 * nothing here touches the DOM or the network, which keeps every rule
 * (K bounds, commit gating, color assignment) unit-testable.
 */

import type {
  EmbeddingPoint,
  PreviewResult,
  Summary,
  TrainReport,
} from './types.js';

export interface ViewState {
  summary: Summary | null;
  points: EmbeddingPoint[] | null;
  selectedClass: number | null;
  /** Locally chosen, uncommitted K per class index. */
  chosenK: Record<number, number>;
  /** Last preview: which class it belongs to plus the returned labels. */
  previewClass: number | null;
  preview: PreviewResult | null;
  report: TrainReport | null;
  jobStatus: string | null;
  banner: string | null;
}

export function initialState(): ViewState {
  return {
    summary: null,
    points: null,
    selectedClass: null,
    chosenK: {},
    previewClass: null,
    preview: null,
    report: null,
    jobStatus: null,
    banner: null,
  };
}

export function applySummary(state: ViewState, summary: Summary): ViewState {
  const chosenK = { ...state.chosenK };
  for (const cls of summary.classes) {
    if (!(cls.index in chosenK)) {
      chosenK[cls.index] = summary.committed_k?.[String(cls.index)] ?? 1;
    }
  }
  return { ...state, summary, chosenK };
}

export function classSize(state: ViewState, classIndex: number): number {
  const info = state.summary?.classes.find((c) => c.index === classIndex);
  return info ? info.count : 1;
}

/** Clamp a requested K into the legal [1, class size] range. */
export function setChosenK(state: ViewState, classIndex: number, k: number): ViewState {
  const bounded = Math.min(Math.max(Math.round(k), 1), classSize(state, classIndex));
  return { ...state, chosenK: { ...state.chosenK, [classIndex]: bounded } };
}

export function selectClass(state: ViewState, classIndex: number | null): ViewState {
  // previews belong to one class; switching classes invalidates them
  return { ...state, selectedClass: classIndex, preview: null, previewClass: null };
}

export function applyPreview(
  state: ViewState,
  classIndex: number,
  preview: PreviewResult,
): ViewState {
  return { ...state, previewClass: classIndex, preview };
}

export function jobActive(state: ViewState): boolean {
  return state.jobStatus === 'queued' || state.jobStatus === 'running';
}

/** Commit is allowed only with an embedding present and no job in flight. */
export function canCommit(state: ViewState): boolean {
  return state.points !== null && !jobActive(state);
}

export function commitPayload(state: ViewState): Record<string, number> {
  const payload: Record<string, number> = {};
  for (const [cls, k] of Object.entries(state.chosenK)) {
    payload[cls] = k;
  }
  return payload;
}

export const PALETTE = [
  '#3366cc', '#dc3912', '#ff9900', '#109618', '#990099',
  '#0099c6', '#dd4477', '#66aa00', '#b82e2e', '#316395',
];

export function colorOf(value: number): string {
  return PALETTE[((value % PALETTE.length) + PALETTE.length) % PALETTE.length];
}

/**
 * Color for a point: per-class in the overview; per tentative subcategory
 * inside the selected class when a preview is showing.
 */
export function pointColor(state: ViewState, point: EmbeddingPoint): string {
  if (
    state.selectedClass !== null &&
    state.preview !== null &&
    state.previewClass === state.selectedClass &&
    point.class === state.selectedClass
  ) {
    const sub = state.preview.labels.find((l) => l.id === point.id)?.sub ?? 0;
    return colorOf(sub);
  }
  return colorOf(point.class);
}

/** Points shown in the current view (all classes, or the selected one). */
export function visiblePoints(state: ViewState): EmbeddingPoint[] {
  if (state.points === null) return [];
  if (state.selectedClass === null) return state.points;
  return state.points.filter((p) => p.class === state.selectedClass);
}
