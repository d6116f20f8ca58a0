/** Session state: a pure projection of service responses.
 *
 * Every user action issues exactly one API mutation. Mutations with a
 * locally predictable result (override, vote, add paragraph) apply
 * optimistically and roll back when the service rejects them; answering a
 * question waits for the model's response. Failures are kept on the store
 * with a retry handle so the view can surface them inline.
 */

import { ApiError, Rob2Api } from "./api.js";
import type {
  AnswerValue,
  DocumentDto,
  QuestionStateDto,
  RecordDto,
  SummaryDto,
} from "./types.js";

export interface InlineFailure {
  qid: string | null;
  message: string;
  retry: () => Promise<void>;
}

type Listener = () => void;

function deepCopy<T>(value: T): T {
  return structuredClone(value);
}

export class SessionStore {
  questions: QuestionStateDto[] = [];
  summary: SummaryDto | null = null;
  document: DocumentDto | null = null;
  status: "in_progress" | "complete" = "in_progress";
  failure: InlineFailure | null = null;

  private listeners: Listener[] = [];

  constructor(
    readonly api: Rob2Api,
    readonly sessionId: string,
  ) {}

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }

  question(qid: string): QuestionStateDto {
    const q = this.questions.find((x) => x.qid === qid);
    if (!q) throw new Error(`unknown question ${qid}`);
    return q;
  }

  /** Reload everything from the service; the result is the whole UI state. */
  async refresh(): Promise<void> {
    const payload = await this.api.getQuestions(this.sessionId);
    this.questions = payload.questions;
    this.status = payload.status;
    this.summary = await this.api.getSummary(this.sessionId);
    this.emit();
  }

  async loadDocument(docId: string): Promise<void> {
    this.document = await this.api.getDocument(docId);
    this.emit();
  }

  private fail(qid: string | null, error: unknown, retry: () => Promise<void>): never {
    const message =
      error instanceof ApiError ? `${error.code}: ${error.message}` : String(error);
    this.failure = { qid, message, retry };
    this.emit();
    throw error;
  }

  clearFailure(): void {
    this.failure = null;
    this.emit();
  }

  /** Ask the model to answer a question (no optimistic state: the answer is
   * unknown until the service responds). */
  async answer(qid: string): Promise<RecordDto> {
    try {
      const record = await this.api.answerQuestion(this.sessionId, qid);
      this.failure = null;
      await this.refresh();
      return record;
    } catch (error) {
      this.fail(qid, error, () => this.answer(qid).then(() => undefined));
    }
  }

  /** Expert override: applied optimistically, rolled back on rejection. */
  async override(qid: string, answer: AnswerValue, rationale?: string): Promise<void> {
    const snapshot = deepCopy(this.questions);
    const q = this.question(qid);
    if (q.record) {
      q.record.final_answer = answer;
      q.record.answer_source = "expert";
      if (rationale !== undefined) {
        q.record.final_rationale = rationale;
        q.record.rationale_source = "expert";
      }
      this.emit();
    }
    try {
      await this.api.overrideAnswer(this.sessionId, qid, answer, rationale);
      this.failure = null;
      await this.refresh(); // overrides can re-activate downstream questions
    } catch (error) {
      this.questions = snapshot;
      this.fail(qid, error, () => this.override(qid, answer, rationale));
    }
  }

  /** Up/down vote on an evidence paragraph (latest vote wins server-side). */
  async vote(qid: string, paragraphIndex: number, direction: "up" | "down"): Promise<void> {
    const snapshot = deepCopy(this.questions);
    const record = this.question(qid).record;
    if (record) {
      record.votes = record.votes.filter((v) => v.paragraph_index !== paragraphIndex);
      record.votes.push({ paragraph_index: paragraphIndex, direction });
      this.emit();
    }
    try {
      const confirmed = await this.api.vote(this.sessionId, qid, paragraphIndex, direction);
      this.failure = null;
      this.applyRecord(qid, confirmed);
    } catch (error) {
      this.questions = snapshot;
      this.fail(qid, error, () => this.vote(qid, paragraphIndex, direction));
    }
  }

  async addParagraph(qid: string, paragraphIndex: number): Promise<void> {
    const snapshot = deepCopy(this.questions);
    const record = this.question(qid).record;
    if (record && !record.added_paragraphs.includes(paragraphIndex)) {
      record.added_paragraphs.push(paragraphIndex);
      this.emit();
    }
    try {
      const confirmed = await this.api.addParagraph(this.sessionId, qid, paragraphIndex);
      this.failure = null;
      this.applyRecord(qid, confirmed);
    } catch (error) {
      this.questions = snapshot;
      this.fail(qid, error, () => this.addParagraph(qid, paragraphIndex));
    }
  }

  private applyRecord(qid: string, record: RecordDto): void {
    const q = this.question(qid);
    q.record = record;
    q.answered = true;
    this.emit();
  }
}
