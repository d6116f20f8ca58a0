/** Wire types mirroring the assessment service JSON. */

export type AnswerValue =
  | "yes"
  | "probably_yes"
  | "probably_no"
  | "no"
  | "no_information"
  | "not_applicable";

export type RiskValue = "low" | "some_concerns" | "high";

export const SELECTABLE_ANSWERS: AnswerValue[] = [
  "yes",
  "probably_yes",
  "probably_no",
  "no",
  "no_information",
];

export const ANSWER_LABELS: Record<AnswerValue, string> = {
  yes: "Yes",
  probably_yes: "Probably yes",
  probably_no: "Probably no",
  no: "No",
  no_information: "No information",
  not_applicable: "Not applicable",
};

export interface EvidenceRef {
  paragraph_index: number;
  score: number;
}

export interface ModelAnswerDto {
  qid: string;
  answer: AnswerValue;
  rationale: string;
  model_id: string;
  context_mode: string;
  evidence: EvidenceRef[];
}

export interface VoteDto {
  paragraph_index: number;
  direction: "up" | "down";
}

export interface RecordDto {
  qid: string;
  final_answer: AnswerValue;
  final_rationale: string;
  answer_source: "model" | "expert";
  rationale_source: "model" | "expert";
  model_answer: ModelAnswerDto | null;
  votes: VoteDto[];
  added_paragraphs: number[];
}

export interface QuestionStateDto {
  qid: string;
  domain: number;
  text: string;
  elaboration: string;
  /** true = answerable, false = gated off, null = blocked on antecedents */
  active: boolean | null;
  answered: boolean;
  record: RecordDto | null;
}

export interface QuestionsResponse {
  session_id: string;
  status: "in_progress" | "complete";
  questions: QuestionStateDto[];
}

export interface SummaryDto {
  session_id: string;
  status: string;
  domains: Record<string, RiskValue | null>;
  overall: RiskValue | null;
}

export interface ParagraphDto {
  index: number;
  section_header: string;
  text: string;
}

export interface DocumentDto {
  doc_id: string;
  title: string;
  authors: string[];
  abstract: string;
  paragraphs: ParagraphDto[];
}
