/** Typed client for the assessment service. The UI talks to nothing else. */

import type {
  AnswerValue,
  DocumentDto,
  QuestionsResponse,
  RecordDto,
  SummaryDto,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = typeof fetch;

async function parseError(response: Response): Promise<ApiError> {
  let code = "unknown";
  let message = response.statusText;
  try {
    const body = (await response.json()) as { error?: { code?: string; message?: string } };
    if (body.error) {
      code = body.error.code ?? code;
      message = body.error.message ?? message;
    }
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(response.status, code, message);
}

export class Rob2Api {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? undefined : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      throw await parseError(response);
    }
    return (await response.json()) as T;
  }

  uploadDocument(parsed: unknown): Promise<{ doc_id: string }> {
    return this.request("POST", "/documents", parsed);
  }

  getDocument(docId: string): Promise<DocumentDto> {
    return this.request("GET", `/documents/${encodeURIComponent(docId)}`);
  }

  createAssessment(body: {
    doc_id: string;
    mode?: string;
    model?: string;
    annotator_id?: string;
  }): Promise<{ session_id: string }> {
    return this.request("POST", "/assessments", body);
  }

  getQuestions(sessionId: string): Promise<QuestionsResponse> {
    return this.request("GET", `/assessments/${sessionId}/questions`);
  }

  answerQuestion(sessionId: string, qid: string): Promise<RecordDto> {
    return this.request("POST", `/assessments/${sessionId}/questions/${qid}/answer`);
  }

  overrideAnswer(
    sessionId: string,
    qid: string,
    answer: AnswerValue,
    rationale?: string,
  ): Promise<RecordDto> {
    return this.request("PATCH", `/assessments/${sessionId}/questions/${qid}/answer`, {
      answer,
      rationale: rationale ?? null,
    });
  }

  vote(
    sessionId: string,
    qid: string,
    paragraphIndex: number,
    direction: "up" | "down",
  ): Promise<RecordDto> {
    return this.request("POST", `/assessments/${sessionId}/questions/${qid}/votes`, {
      paragraph_index: paragraphIndex,
      direction,
    });
  }

  addParagraph(sessionId: string, qid: string, paragraphIndex: number): Promise<RecordDto> {
    return this.request("POST", `/assessments/${sessionId}/questions/${qid}/paragraphs`, {
      paragraph_index: paragraphIndex,
    });
  }

  getSummary(sessionId: string): Promise<SummaryDto> {
    return this.request("GET", `/assessments/${sessionId}/summary`);
  }
}
