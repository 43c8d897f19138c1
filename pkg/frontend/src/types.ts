// Wire types mirroring the register API. The dashboard displays these
// values verbatim; it never recomputes scores, bands, or exposure locally.

export interface VersionMeta {
  version_id: number;
  created_at: string;
  t_threat: number;
  entry_count: number | null;
}

export interface Mechanism {
  family: string;
  parameter: string | null;
  protocol_context: string;
  usage_role: string;
  raw: string | null;
}

export interface Candidate {
  asset_id: string;
  display_name: string;
  system_context: string;
  mechanisms: Mechanism[];
  dependency_edges: [string, string][];
  third_party: boolean;
  unmapped: boolean;
  crypto_label: string;
}

export interface Metadata {
  criticality: { confidentiality: string; integrity: string; availability: string };
  t_shelf_years: number;
  t_migration_years: number;
  raci: Record<string, string[]>;
  crypto_agility: number;
  target_state: string;
  next_action: string;
  domain_label: string;
}

export interface Enriched {
  candidate: Candidate;
  metadata: Metadata;
  evidence: 'HIGH' | 'MED' | 'LOW';
  ownership_known: boolean;
  metadata_defaulted: boolean;
}

export interface Priority {
  criticality_score: number;
  time_exposure_score: number;
  evidence_penalty: number;
  priority: string; // decimal string from the API, e.g. "2.4"
  band: string;
  algorithmic_wave: number;
}

export interface Override {
  actor: string;
  timestamp: string;
  from_wave: number;
  to_wave: number;
  rationale: string;
}

export interface Entry {
  qer_id: string;
  enriched: Enriched;
  scenario: { t_threat_years: number; scenario_label: string; source_note: string };
  exposure: 'YES' | 'BORDERLINE' | 'NO';
  priority: Priority;
  assigned_wave: number;
  override: Override | null;
}

export interface ScenarioChange {
  qer_id: string;
  exposure: [string, string];
  priority: [string, string];
  algorithmic_wave: [number, number];
}

export interface ScenarioResponse {
  baseline_version: number;
  committed_t_threat: number;
  t_threat: number;
  changes: ScenarioChange[];
  exposure_counts: { YES: number; BORDERLINE: number; NO: number };
}

export interface ApiErrorBody {
  status: number;
  code: 'NOT_FOUND' | 'CONFLICT' | 'BAD_INPUT' | 'LOCKED';
  message: string;
}
