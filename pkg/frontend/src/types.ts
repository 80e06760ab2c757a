/** Wire types mirroring the adjudication service payloads. */

export const FINE_LABELS = [
  "Acute",
  "Subsegmental",
  "Chronic",
  "Equivocal",
  "Negative",
] as const;

export type FineLabel = (typeof FINE_LABELS)[number];
export type BinaryLabel = "Positive" | "Negative";
export type Role = "Unblinded" | "Blinded" | "Consensus";

/** Item as served to a session. model_prediction is present only in
 * Unblinded-role payloads; Blinded payloads never carry the field at all. */
export interface ReviewItemPayload {
  report_id: string;
  merged_note: string;
  full_report_available: boolean;
  status: string;
  report_text?: string;
  model_prediction?: BinaryLabel;
}

export interface NextItemResponse {
  item: ReviewItemPayload | null;
}

export interface LabelRequest {
  reviewer_id: string;
  role: Role;
  fine_label: FineLabel;
}

export interface LabelResponse {
  report_id: string;
  status: string;
}

export interface ReviewSummary {
  reviewer_id: string;
  role: Role;
  fine_label: FineLabel;
}

export interface ConflictItemPayload extends ReviewItemPayload {
  reviews: ReviewSummary[];
}

export interface ConflictsResponse {
  conflicts: ConflictItemPayload[];
}

export interface GoldRecord {
  report_id: string;
  fine: FineLabel;
  binary: BinaryLabel;
}

export interface ExportResponse {
  gold: GoldRecord[];
  pending: { report_id: string; status: string }[];
}

export interface ProgressResponse {
  total: number;
  consensus: number;
  conflicts: number;
  unreviewed: number;
  one_review: number;
}

export function collapseFine(fine: FineLabel): BinaryLabel {
  return fine === "Acute" || fine === "Subsegmental" ? "Positive" : "Negative";
}
