/** Assessment flow: per-domain stepper, question screens, risk summaries.
 *
 * The flow never presents a gated-off question as answerable, and it blocks
 * navigation away from a screen with unsaved edits until the edits are saved
 * or explicitly discarded.
 */

import type { SessionStore } from "./store.js";
import type { AnswerValue, ParagraphDto, QuestionStateDto, RiskValue } from "./types.js";

export const DOMAIN_TITLES: Record<number, string> = {
  1: "Randomization process",
  2: "Deviations from intended interventions",
  3: "Missing outcome data",
  4: "Measurement of the outcome",
  5: "Selection of the reported result",
};

export interface DraftEdits {
  answer: AnswerValue | null;
  rationale: string | null;
}

export interface QuestionView {
  qid: string;
  text: string;
  elaboration: string;
  elaborationCollapsed: boolean;
  /** "answerable" | "answered" | "skipped" (gated off) | "blocked" */
  state: "answerable" | "answered" | "skipped" | "blocked";
  finalAnswer: AnswerValue | null;
  finalRationale: string;
  answerSource: string | null;
  modelAnswer: AnswerValue | null;
  evidence: EvidenceCard[];
  addedParagraphs: number[];
  hasUnsavedEdits: boolean;
}

export interface EvidenceCard {
  paragraphIndex: number;
  text: string;
  score: number;
  vote: "up" | "down" | null;
}

export interface NavigationResult {
  moved: boolean;
  blockedByUnsavedEdits: boolean;
}

const TOP_EVIDENCE = 3;

export class AssessmentFlow {
  domain = 1;
  cursor = 0;
  showAllEvidence = false;
  elaborationOpen = false;
  private draft: DraftEdits = { answer: null, rationale: null };

  constructor(readonly store: SessionStore) {}

  // -- stepper ---------------------------------------------------------------

  domainQuestions(domain: number = this.domain): QuestionStateDto[] {
    return this.store.questions.filter((q) => q.domain === domain);
  }

  /** Questions shown on screen for the current domain, in instrument order. */
  screens(): QuestionStateDto[] {
    return this.domainQuestions();
  }

  current(): QuestionStateDto {
    const screens = this.screens();
    const q = screens[Math.min(this.cursor, screens.length - 1)];
    if (!q) throw new Error(`domain ${this.domain} has no questions`);
    return q;
  }

  hasUnsavedEdits(): boolean {
    return this.draft.answer !== null || this.draft.rationale !== null;
  }

  private resetScreenState(): void {
    this.draft = { answer: null, rationale: null };
    this.showAllEvidence = false;
    this.elaborationOpen = false;
  }

  next(force = false): NavigationResult {
    return this.move(1, force);
  }

  prev(force = false): NavigationResult {
    return this.move(-1, force);
  }

  private move(step: number, force: boolean): NavigationResult {
    if (this.hasUnsavedEdits() && !force) {
      return { moved: false, blockedByUnsavedEdits: true };
    }
    const screens = this.screens();
    const target = this.cursor + step;
    if (target >= 0 && target < screens.length) {
      this.cursor = target;
    } else if (target >= screens.length && this.domain < 5) {
      this.domain += 1;
      this.cursor = 0;
    } else if (target < 0 && this.domain > 1) {
      this.domain -= 1;
      this.cursor = this.domainQuestions().length - 1;
    } else {
      return { moved: false, blockedByUnsavedEdits: false };
    }
    this.resetScreenState();
    return { moved: true, blockedByUnsavedEdits: false };
  }

  goTo(qid: string, force = false): NavigationResult {
    if (this.hasUnsavedEdits() && !force) {
      return { moved: false, blockedByUnsavedEdits: true };
    }
    const q = this.store.question(qid);
    this.domain = q.domain;
    this.cursor = this.domainQuestions().findIndex((x) => x.qid === qid);
    this.resetScreenState();
    return { moved: true, blockedByUnsavedEdits: false };
  }

  // -- per-question view -----------------------------------------------------

  questionState(q: QuestionStateDto): QuestionView["state"] {
    if (q.answered && q.record?.final_answer === "not_applicable") return "skipped";
    if (q.answered) return "answered";
    if (q.active === true) return "answerable";
    if (q.active === false) return "skipped";
    return "blocked";
  }

  view(qid: string = this.current().qid): QuestionView {
    const q = this.store.question(qid);
    const record = q.record;
    const evidence = (record?.model_answer?.evidence ?? []).map((e) => ({
      paragraphIndex: e.paragraph_index,
      text: this.paragraphText(e.paragraph_index),
      score: e.score,
      vote: this.voteFor(q, e.paragraph_index),
    }));
    const shown = this.showAllEvidence ? evidence : evidence.slice(0, TOP_EVIDENCE);
    return {
      qid: q.qid,
      text: q.text,
      elaboration: q.elaboration,
      elaborationCollapsed: !this.elaborationOpen,
      state: this.questionState(q),
      finalAnswer: record?.final_answer ?? null,
      finalRationale: this.draft.rationale ?? record?.final_rationale ?? "",
      answerSource: record?.answer_source ?? null,
      modelAnswer: record?.model_answer?.answer ?? null,
      evidence: shown,
      addedParagraphs: record?.added_paragraphs ?? [],
      hasUnsavedEdits: this.hasUnsavedEdits(),
    };
  }

  private voteFor(q: QuestionStateDto, paragraphIndex: number): "up" | "down" | null {
    const votes = q.record?.votes ?? [];
    for (let i = votes.length - 1; i >= 0; i -= 1) {
      const vote = votes[i];
      if (vote && vote.paragraph_index === paragraphIndex) return vote.direction;
    }
    return null;
  }

  paragraphText(index: number): string {
    const doc = this.store.document;
    const para = doc?.paragraphs[index];
    return para ? para.text : `(paragraph ${index})`;
  }

  /** Paragraphs offered by the add-evidence picker: the full parse minus the
   * paragraphs already shown as retrieved evidence for this question. */
  pickerParagraphs(qid: string): ParagraphDto[] {
    const doc = this.store.document;
    if (!doc) return [];
    const q = this.store.question(qid);
    const evidence = new Set(
      (q.record?.model_answer?.evidence ?? []).map((e) => e.paragraph_index),
    );
    return doc.paragraphs.filter((p) => !evidence.has(p.index));
  }

  // -- edits -------------------------------------------------------------

  setDraftAnswer(answer: AnswerValue): void {
    if (answer === "not_applicable") {
      throw new Error("not_applicable is assigned by cascade logic, not selected");
    }
    this.draft.answer = answer;
  }

  setDraftRationale(text: string): void {
    this.draft.rationale = text;
  }

  discardEdits(): void {
    this.draft = { answer: null, rationale: null };
  }

  /** Persist the draft as a single override mutation. */
  async saveEdits(): Promise<void> {
    const q = this.current();
    const answer = this.draft.answer ?? q.record?.final_answer;
    if (!answer || answer === "not_applicable") {
      throw new Error("nothing to save");
    }
    await this.store.override(q.qid, answer, this.draft.rationale ?? undefined);
    this.draft = { answer: null, rationale: null };
  }

  /** Ask the model for the current question's answer. */
  async answerCurrent(): Promise<void> {
    const q = this.current();
    if (this.questionState(q) !== "answerable") {
      throw new Error(`question ${q.qid} is not answerable`);
    }
    await this.store.answer(q.qid);
  }

  // -- judgments ---------------------------------------------------------

  domainComplete(domain: number): boolean {
    return this.domainQuestions(domain).every((q) => q.answered);
  }

  /** End-of-domain judgment, shown once the domain's questions are resolved. */
  domainJudgment(domain: number): RiskValue | null {
    return this.store.summary?.domains[String(domain)] ?? null;
  }

  /** Final summary bar: five domain chips plus the overall judgment. */
  summaryBar(): { domains: (RiskValue | null)[]; overall: RiskValue | null } {
    const domains = [1, 2, 3, 4, 5].map((d) => this.domainJudgment(d));
    return { domains, overall: this.store.summary?.overall ?? null };
  }

  assessmentComplete(): boolean {
    return [1, 2, 3, 4, 5].every((d) => this.domainComplete(d));
  }
}
