// Wire types mirroring the /api/v1 JSON schemas.

export interface EvidenceItem {
  id: string;
  item: string;
  weight: number;
  polarity: 'positive' | 'neutral' | 'negative';
  source_date: string | null;
}

export interface ModalityResult {
  modality: 'ehr' | 'image' | 'note';
  risk?: number;
  is_cox_score?: boolean;
  unavailable?: boolean;
  reason?: string;
  evidence?: EvidenceItem[];
}

export interface ConsensusBounds {
  min_modality_risk: number;
  max_modality_risk: number;
}

export interface Consensus {
  risk: number;
  confidence: number;
  rationale: string;
  bounds: ConsensusBounds;
  fallback?: boolean;
  transcript?: Record<string, unknown>;
}

export interface StepSummary {
  agent: string;
  sub_goal: string;
  result_summary: string;
  command_trace?: string;
}

export interface FinalReport {
  schema_version: number;
  report_id: string;
  status: 'completed' | 'partial' | 'clarification';
  task: { kind: string; goal: string; horizon_years: number | null; patient_id: string | null };
  consensus: Consensus | null;
  modalities: ModalityResult[];
  exploration: Record<string, unknown> | null;
  steps: StepSummary[];
  notebook_version: number;
  errors: string[];
}

export interface PatientSummary {
  patient_id: string;
  age_at_cutoff: number;
  sex: string;
  modalities: { ehr: boolean; note: boolean; image: boolean };
}

export interface FeedbackResponse {
  schema_version: number;
  status: 'accepted' | 'duplicate' | 'conflict' | 'skipped';
  notebook_version: number;
  entry?: NotebookEntry;
  conflicting?: NotebookEntry[];
  warning?: string;
}

export interface NotebookEntry {
  entry_id: string;
  text: string;
  factors: string[];
  direction: 'higher' | 'lower';
  provenance: string;
  created_version: number;
}

export interface ChatResponse {
  schema_version: number;
  reply: string;
  citations: string[];
  notebook_version: number;
}
