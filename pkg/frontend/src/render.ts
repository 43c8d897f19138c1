// Pure HTML renderers (string in, string out) so the table, diff panel, and
// dialog are unit-testable without a browser. main.ts owns the DOM wiring.

import type { Entry, ScenarioResponse, VersionMeta } from './types.js';
import type { SortKey } from './state.js';

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

// Column order mirrors the register's CSV export.
const COLUMNS: { key: SortKey | null; label: string }[] = [
  { key: 'qer_id', label: 'QER ID' },
  { key: 'asset', label: 'Asset/Service' },
  { key: null, label: 'Domain' },
  { key: null, label: 'Criticality C/I/A' },
  { key: null, label: 'T_shelf' },
  { key: null, label: 'T_migration' },
  { key: null, label: 'T_threat' },
  { key: 'exposure', label: 'Time-Exposed?' },
  { key: null, label: 'Current Crypto' },
  { key: 'evidence', label: 'Evidence Confidence' },
  { key: null, label: 'Owner Biz/Tech' },
  { key: null, label: 'Third-Party Dependency' },
  { key: null, label: 'Crypto-Agility' },
  { key: null, label: 'Target State' },
  { key: null, label: 'Next Action' },
  { key: 'priority', label: 'Priority' },
  { key: 'wave', label: 'Wave' },
];

const LEVEL_LABEL: Record<string, string> = { HIGH: 'High', MED: 'Med', LOW: 'Low' };
const EXPOSURE_LABEL: Record<string, string> = { YES: 'Yes', BORDERLINE: 'Borderline', NO: 'No' };
const TARGET_LABEL: Record<string, string> = {
  HYBRID: 'Hybrid',
  PQC: 'PQC',
  SUPPLIER_LED: 'Supplier-led',
  COMPENSATING_CONTROLS: 'Compensating controls',
};

export function criticalityLabel(entry: Entry): string {
  const c = entry.enriched.metadata.criticality;
  return [c.confidentiality, c.integrity, c.availability]
    .map((v) => LEVEL_LABEL[v] ?? v)
    .join(' / ');
}

export function ownerLabel(entry: Entry): string {
  const accountable = entry.enriched.metadata.raci['ACCOUNTABLE'] ?? [];
  return accountable.join(' / ');
}

export function waveCell(entry: Entry): string {
  if (entry.override === null) {
    return `<span class="wave wave-${entry.assigned_wave}">Wave ${entry.assigned_wave}</span>`;
  }
  // Overridden rows show both waves: the audit signal stays visible.
  return (
    `<span class="wave wave-${entry.assigned_wave} overridden" ` +
    `title="${escapeHtml(entry.override.rationale)}">` +
    `Wave ${entry.assigned_wave} <s>W${entry.priority.algorithmic_wave}</s></span>`
  );
}

export function renderHeader(sortKey: SortKey, ascending: boolean): string {
  const cells = COLUMNS.map(({ key, label }) => {
    if (key === null) return `<th>${label}</th>`;
    const marker = key === sortKey ? (ascending ? ' ▲' : ' ▼') : '';
    return `<th class="sortable" data-sort="${key}">${label}${marker}</th>`;
  });
  return `<tr>${cells.join('')}</tr>`;
}

export function renderRow(entry: Entry, highlight = false): string {
  const meta = entry.enriched.metadata;
  const candidate = entry.enriched.candidate;
  const cells = [
    entry.qer_id,
    candidate.display_name,
    meta.domain_label,
    criticalityLabel(entry),
    String(meta.t_shelf_years),
    String(meta.t_migration_years),
    String(entry.scenario.t_threat_years),
    EXPOSURE_LABEL[entry.exposure] ?? entry.exposure,
    candidate.crypto_label ||
      candidate.mechanisms.map((m) => m.raw ?? m.family).join(', '),
    LEVEL_LABEL[entry.enriched.evidence] ?? entry.enriched.evidence,
    ownerLabel(entry),
    candidate.dependency_edges.map(([target]) => target).join(', '),
    String(meta.crypto_agility),
    TARGET_LABEL[meta.target_state] ?? meta.target_state,
    meta.next_action,
    entry.priority.priority,
  ].map((value) => `<td>${escapeHtml(value)}</td>`);
  cells.push(`<td>${waveCell(entry)}</td>`);
  const classes = [
    `exposure-${entry.exposure.toLowerCase()}`,
    entry.override ? 'has-override' : '',
    highlight ? 'highlight' : '',
  ]
    .filter(Boolean)
    .join(' ');
  return `<tr class="${classes}" data-qer-id="${escapeHtml(entry.qer_id)}">${cells.join('')}</tr>`;
}

export function renderTable(
  entries: Entry[],
  sortKey: SortKey,
  ascending: boolean,
  highlightId: string | null = null,
): string {
  if (entries.length === 0) {
    return '<p class="empty-state">No register entries match the current view.</p>';
  }
  const rows = entries.map((e) => renderRow(e, e.qer_id === highlightId)).join('');
  return `<table class="register"><thead>${renderHeader(sortKey, ascending)}</thead><tbody>${rows}</tbody></table>`;
}

export function renderVersionPicker(versions: VersionMeta[], selected: number | null): string {
  const options = versions
    .map(
      (v) =>
        `<option value="${v.version_id}"${v.version_id === selected ? ' selected' : ''}>` +
        `v${v.version_id} — T_threat ${v.t_threat}y — ${v.created_at.slice(0, 10)}</option>`,
    )
    .join('');
  return options;
}

export function renderDiffPanel(response: ScenarioResponse | null, committed: number): string {
  if (response === null) {
    return '<p class="diff-idle">Move the slider to explore alternative threat horizons.</p>';
  }
  const heading =
    `<p class="diff-heading">What-if horizon <strong>${response.t_threat}y</strong> ` +
    `vs committed <strong>${committed}y</strong>: ` +
    `Yes ${response.exposure_counts.YES}, ` +
    `Borderline ${response.exposure_counts.BORDERLINE}, ` +
    `No ${response.exposure_counts.NO}</p>`;
  if (response.changes.length === 0) {
    return `${heading}<p class="diff-empty">No changes against the committed horizon.</p>`;
  }
  const rows = response.changes
    .map(
      (c) =>
        `<tr><td>${escapeHtml(c.qer_id)}</td>` +
        `<td>${escapeHtml(c.exposure[0])} → ${escapeHtml(c.exposure[1])}</td>` +
        `<td>${escapeHtml(c.priority[0])} → ${escapeHtml(c.priority[1])}</td>` +
        `<td>W${c.algorithmic_wave[0]} → W${c.algorithmic_wave[1]}</td></tr>`,
    )
    .join('');
  return (
    `${heading}<table class="diff"><thead><tr><th>QER ID</th><th>Exposure</th>` +
    `<th>Priority</th><th>Computed wave</th></tr></thead><tbody>${rows}</tbody></table>` +
    '<p class="diff-note">Exploration only — nothing is persisted.</p>'
  );
}

export function renderErrorBanner(message: string | null): string {
  if (!message) return '';
  return `<div class="error-banner" role="alert">${escapeHtml(message)}</div>`;
}

export function renderOverrideDialog(entry: Entry): string {
  return `
    <h3>Override wave for ${escapeHtml(entry.qer_id)}</h3>
    <p>${escapeHtml(entry.enriched.candidate.display_name)} — computed wave
      W${entry.priority.algorithmic_wave}, currently assigned W${entry.assigned_wave}.</p>
    <label>New wave
      <select id="override-wave">
        ${[1, 2, 3, 4]
          .map((w) => `<option value="${w}"${w === entry.assigned_wave ? ' selected' : ''}>Wave ${w}</option>`)
          .join('')}
      </select>
    </label>
    <label>Actor <input id="override-actor" type="text" placeholder="e.g. Risk Committee"></label>
    <label>Rationale <textarea id="override-rationale" placeholder="Required for the audit log"></textarea></label>
    <div class="dialog-actions">
      <button id="override-cancel" type="button">Cancel</button>
      <button id="override-submit" type="button" disabled>Submit override</button>
    </div>`;
}
