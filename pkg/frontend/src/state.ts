// View state and the pure logic behind the table: filtering, sorting, and
// override draft validation. No scoring arithmetic lives here or anywhere
// else in the dashboard; entries carry every displayed number.

import type { Entry } from './types.js';

export interface Filter {
  wave: number | null;
  exposure: 'YES' | 'BORDERLINE' | 'NO' | null;
  evidence: 'HIGH' | 'MED' | 'LOW' | null;
}

export type SortKey = 'qer_id' | 'priority' | 'wave' | 'exposure' | 'evidence' | 'asset';

export interface OverrideDraft {
  qerId: string;
  toWave: number;
  actor: string;
  rationale: string;
}

export interface ViewState {
  selectedVersion: number | null;
  scenarioTThreat: number;
  filter: Filter;
  sortKey: SortKey;
  sortAscending: boolean;
  pendingOverride: OverrideDraft | null;
}

export function initialState(): ViewState {
  return {
    selectedVersion: null,
    scenarioTThreat: 8,
    filter: { wave: null, exposure: null, evidence: null },
    sortKey: 'priority',
    sortAscending: false,
    pendingOverride: null,
  };
}

export function setScenarioHorizon(state: ViewState, value: number): ViewState {
  if (!(value > 0)) {
    return state; // invariant: the what-if horizon stays positive
  }
  return { ...state, scenarioTThreat: value };
}

export function filterEntries(entries: Entry[], filter: Filter): Entry[] {
  return entries.filter((entry) => {
    if (filter.wave !== null && entry.assigned_wave !== filter.wave) return false;
    if (filter.exposure !== null && entry.exposure !== filter.exposure) return false;
    if (filter.evidence !== null && entry.enriched.evidence !== filter.evidence) return false;
    return true;
  });
}

const EXPOSURE_RANK: Record<string, number> = { YES: 2, BORDERLINE: 1, NO: 0 };
const EVIDENCE_RANK: Record<string, number> = { HIGH: 2, MED: 1, LOW: 0 };

function sortValue(entry: Entry, key: SortKey): string | number {
  switch (key) {
    case 'qer_id':
      return entry.qer_id;
    case 'priority':
      // The API's decimal string compares numerically; still no arithmetic
      // on our side beyond ordering what the service computed.
      return Number(entry.priority.priority);
    case 'wave':
      return entry.assigned_wave;
    case 'exposure':
      return EXPOSURE_RANK[entry.exposure] ?? -1;
    case 'evidence':
      return EVIDENCE_RANK[entry.enriched.evidence] ?? -1;
    case 'asset':
      return entry.enriched.candidate.display_name;
  }
}

export function sortEntries(entries: Entry[], key: SortKey, ascending: boolean): Entry[] {
  const decorated = entries.map((entry, index) => ({ entry, index }));
  decorated.sort((a, b) => {
    const va = sortValue(a.entry, key);
    const vb = sortValue(b.entry, key);
    let cmp: number;
    if (typeof va === 'number' && typeof vb === 'number') {
      cmp = va - vb;
    } else {
      cmp = String(va) < String(vb) ? -1 : String(va) > String(vb) ? 1 : 0;
    }
    if (!ascending) cmp = -cmp;
    // Stable: equal keys keep input order regardless of direction.
    return cmp === 0 ? a.index - b.index : cmp;
  });
  return decorated.map((d) => d.entry);
}

export function visibleEntries(entries: Entry[], state: ViewState): Entry[] {
  return sortEntries(filterEntries(entries, state.filter), state.sortKey, state.sortAscending);
}

export function canSubmitOverride(draft: OverrideDraft | null): boolean {
  if (draft === null) return false;
  return (
    draft.rationale.trim().length > 0 &&
    draft.actor.trim().length > 0 &&
    Number.isInteger(draft.toWave) &&
    draft.toWave >= 1 &&
    draft.toWave <= 4
  );
}
