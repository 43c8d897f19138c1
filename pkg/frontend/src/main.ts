// DOM wiring: state transitions re-render from pure templates; all numbers
// come from the API responses untouched.

import { ApiError, RegisterApi } from './api.js';
import { debounce } from './debounce.js';
import {
  canSubmitOverride,
  initialState,
  setScenarioHorizon,
  visibleEntries,
  type SortKey,
  type ViewState,
} from './state.js';
import {
  renderDiffPanel,
  renderErrorBanner,
  renderOverrideDialog,
  renderTable,
  renderVersionPicker,
} from './render.js';
import type { Entry, ScenarioResponse, VersionMeta } from './types.js';

const API_BASE = (window as { QER_API_BASE?: string }).QER_API_BASE ?? 'http://127.0.0.1:8787';
const SCENARIO_DEBOUNCE_MS = 250;

const api = new RegisterApi(API_BASE);

let state: ViewState = initialState();
let versions: VersionMeta[] = [];
let entries: Entry[] = [];
let scenarioResponse: ScenarioResponse | null = null;
let errorMessage: string | null = null;
let highlightId: string | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function renderAll(): void {
  el('error-slot').innerHTML = renderErrorBanner(errorMessage);
  el<HTMLSelectElement>('version-picker').innerHTML = renderVersionPicker(
    versions,
    state.selectedVersion,
  );
  el('table-slot').innerHTML = renderTable(
    visibleEntries(entries, state),
    state.sortKey,
    state.sortAscending,
    highlightId,
  );
  const committed = versions.find((v) => v.version_id === state.selectedVersion)?.t_threat ?? 0;
  el('diff-slot').innerHTML = renderDiffPanel(scenarioResponse, committed);
  el<HTMLInputElement>('horizon-slider').value = String(state.scenarioTThreat);
  el('horizon-value').textContent = `${state.scenarioTThreat}y`;
}

async function loadVersions(selectLatest = true): Promise<void> {
  versions = await api.versions();
  if (selectLatest && versions.length > 0) {
    const latest = versions[versions.length - 1]!;
    state = { ...state, selectedVersion: latest.version_id, scenarioTThreat: latest.t_threat };
  }
}

async function loadEntries(): Promise<void> {
  if (state.selectedVersion === null) {
    entries = [];
    return;
  }
  entries = await api.entries(state.selectedVersion);
}

async function refresh(selectLatest = false): Promise<void> {
  try {
    await loadVersions(selectLatest);
    await loadEntries();
    errorMessage = null;
  } catch (err) {
    errorMessage = err instanceof ApiError ? err.message : String(err);
  }
  renderAll();
}

const runScenario = debounce(async (horizon: number) => {
  try {
    scenarioResponse = await api.scenario(horizon);
    errorMessage = null;
  } catch (err) {
    // Non-blocking: the banner shows, the table stays usable.
    errorMessage = err instanceof ApiError ? err.message : String(err);
    scenarioResponse = null;
  }
  renderAll();
}, SCENARIO_DEBOUNCE_MS);

function openOverrideDialog(entry: Entry): void {
  const dialog = el<HTMLDialogElement>('override-dialog');
  dialog.innerHTML = renderOverrideDialog(entry);
  dialog.showModal();
  const waveInput = el<HTMLSelectElement>('override-wave');
  const actorInput = el<HTMLInputElement>('override-actor');
  const rationaleInput = el<HTMLTextAreaElement>('override-rationale');
  const submit = el<HTMLButtonElement>('override-submit');

  const sync = () => {
    state = {
      ...state,
      pendingOverride: {
        qerId: entry.qer_id,
        toWave: Number(waveInput.value),
        actor: actorInput.value,
        rationale: rationaleInput.value,
      },
    };
    submit.disabled = !canSubmitOverride(state.pendingOverride);
  };
  waveInput.addEventListener('change', sync);
  actorInput.addEventListener('input', sync);
  rationaleInput.addEventListener('input', sync);
  sync();

  el('override-cancel').addEventListener('click', () => {
    state = { ...state, pendingOverride: null };
    dialog.close(); // no request is sent on cancel
  });
  submit.addEventListener('click', async () => {
    const draft = state.pendingOverride;
    if (!canSubmitOverride(draft) || draft === null || state.selectedVersion === null) return;
    try {
      const result = await api.override(
        state.selectedVersion,
        draft.qerId,
        draft.toWave,
        draft.actor.trim(),
        draft.rationale.trim(),
      );
      dialog.close();
      highlightId = draft.qerId;
      state = { ...state, pendingOverride: null, selectedVersion: result.version_id };
      await refresh();
    } catch (err) {
      if (err instanceof ApiError && err.code === 'CONFLICT') {
        errorMessage = `${err.message} — reloading the latest version`;
        dialog.close();
        await refresh(true);
      } else {
        errorMessage = err instanceof ApiError ? err.message : String(err);
        renderAll();
      }
    }
  });
}

function wireControls(): void {
  el<HTMLSelectElement>('version-picker').addEventListener('change', async (event) => {
    state = { ...state, selectedVersion: Number((event.target as HTMLSelectElement).value) };
    scenarioResponse = null;
    await refresh();
  });

  el<HTMLInputElement>('horizon-slider').addEventListener('input', (event) => {
    const value = Number((event.target as HTMLInputElement).value);
    state = setScenarioHorizon(state, value);
    el('horizon-value').textContent = `${state.scenarioTThreat}y`;
    const committed = versions.find((v) => v.version_id === state.selectedVersion)?.t_threat;
    if (committed !== undefined && value === committed) {
      scenarioResponse = null; // back at the committed horizon: empty diff
      renderAll();
      return;
    }
    runScenario(state.scenarioTThreat);
  });

  for (const [id, apply] of [
    ['filter-exposure', (v: string) => (state.filter.exposure = (v || null) as never)],
    ['filter-wave', (v: string) => (state.filter.wave = v ? Number(v) : null)],
    ['filter-evidence', (v: string) => (state.filter.evidence = (v || null) as never)],
  ] as const) {
    el<HTMLSelectElement>(id).addEventListener('change', (event) => {
      apply((event.target as HTMLSelectElement).value);
      renderAll();
    });
  }

  el('table-slot').addEventListener('click', (event) => {
    const target = event.target as HTMLElement;
    const sortHeader = target.closest('th.sortable');
    if (sortHeader) {
      const key = sortHeader.getAttribute('data-sort') as SortKey;
      state =
        state.sortKey === key
          ? { ...state, sortAscending: !state.sortAscending }
          : { ...state, sortKey: key, sortAscending: true };
      renderAll();
      return;
    }
    const row = target.closest('tr[data-qer-id]');
    if (row) {
      const qerId = row.getAttribute('data-qer-id');
      const entry = entries.find((e) => e.qer_id === qerId);
      if (entry) openOverrideDialog(entry);
    }
  });
}

async function init(): Promise<void> {
  wireControls();
  await refresh(true);
}

init();
