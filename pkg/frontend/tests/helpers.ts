/** In-memory double of the assessment service for unit tests. */

import type {
  DocumentDto,
  QuestionStateDto,
  RecordDto,
  SummaryDto,
} from "../src/types.js";

export function record(qid: string, overrides: Partial<RecordDto> = {}): RecordDto {
  return {
    qid,
    final_answer: "no",
    final_rationale: "model rationale",
    answer_source: "model",
    rationale_source: "model",
    model_answer: {
      qid,
      answer: "no",
      rationale: "model rationale",
      model_id: "stub",
      context_mode: "topk:3",
      evidence: [
        { paragraph_index: 1, score: 0.9 },
        { paragraph_index: 2, score: 0.8 },
        { paragraph_index: 3, score: 0.7 },
      ],
    },
    votes: [],
    added_paragraphs: [],
    ...overrides,
  };
}

export function question(
  qid: string,
  overrides: Partial<QuestionStateDto> = {},
): QuestionStateDto {
  return {
    qid,
    domain: Number(qid.split(".")[0]),
    text: `Question ${qid}?`,
    elaboration: `Guidance for ${qid}.`,
    active: true,
    answered: false,
    record: null,
    ...overrides,
  };
}

export const FIXTURE_DOC: DocumentDto = {
  doc_id: "doc-1",
  title: "Fixture trial",
  authors: ["A"],
  abstract: "abstract text",
  paragraphs: [0, 1, 2, 3, 4, 5].map((i) => ({
    index: i,
    section_header: i === 0 ? "Abstract" : "Methods",
    text: `Paragraph ${i} text.`,
  })),
};

export interface FakeService {
  fetch: typeof fetch;
  questions: QuestionStateDto[];
  summary: SummaryDto;
  calls: { method: string; path: string }[];
  failNext: { status: number; code: string } | null;
}

export function fakeService(questions: QuestionStateDto[]): FakeService {
  const service: FakeService = {
    questions,
    summary: {
      session_id: "s-1",
      status: "in_progress",
      domains: { "1": null, "2": null, "3": null, "4": null, "5": null },
      overall: null,
    },
    calls: [],
    failNext: null,
    fetch: undefined as unknown as typeof fetch,
  };

  const json = (body: unknown, status = 200) =>
    new Response(JSON.stringify(body), {
      status,
      headers: { "Content-Type": "application/json" },
    });

  service.fetch = (async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = String(input);
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    const method = init?.method ?? "GET";
    service.calls.push({ method, path });

    if (service.failNext && method !== "GET") {
      const { status, code } = service.failNext;
      service.failNext = null;
      return json({ error: { code, message: "injected failure" } }, status);
    }

    if (method === "GET" && path.endsWith("/questions")) {
      return json({ session_id: "s-1", status: "in_progress", questions: service.questions });
    }
    if (method === "GET" && path.endsWith("/summary")) {
      return json(service.summary);
    }
    if (method === "GET" && path.startsWith("/documents/")) {
      return json(FIXTURE_DOC);
    }
    const voteMatch = path.match(/questions\/([0-9.]+)\/votes$/);
    if (method === "POST" && voteMatch) {
      const qid = voteMatch[1]!;
      const body = JSON.parse(String(init?.body)) as {
        paragraph_index: number;
        direction: "up" | "down";
      };
      const target = service.questions.find((q) => q.qid === qid)?.record;
      if (!target?.model_answer?.evidence.some((e) => e.paragraph_index === body.paragraph_index)) {
        return json({ error: { code: "conflict", message: "not evidence" } }, 409);
      }
      target.votes = target.votes.filter((v) => v.paragraph_index !== body.paragraph_index);
      target.votes.push(body);
      return json(target);
    }
    const paraMatch = path.match(/questions\/([0-9.]+)\/paragraphs$/);
    if (method === "POST" && paraMatch) {
      const qid = paraMatch[1]!;
      const body = JSON.parse(String(init?.body)) as { paragraph_index: number };
      const target = service.questions.find((q) => q.qid === qid)?.record;
      if (!target) return json({ error: { code: "not_found", message: "no record" } }, 404);
      target.added_paragraphs.push(body.paragraph_index);
      return json(target);
    }
    const answerMatch = path.match(/questions\/([0-9.]+)\/answer$/);
    if (answerMatch) {
      const qid = answerMatch[1]!;
      const state = service.questions.find((q) => q.qid === qid);
      if (!state) return json({ error: { code: "not_found", message: qid } }, 404);
      if (method === "POST") {
        state.record = record(qid);
        state.answered = true;
        return json(state.record);
      }
      if (method === "PATCH") {
        const body = JSON.parse(String(init?.body)) as {
          answer: RecordDto["final_answer"];
          rationale: string | null;
        };
        state.record = state.record ?? record(qid);
        state.record.final_answer = body.answer;
        state.record.answer_source = "expert";
        if (body.rationale !== null) {
          state.record.final_rationale = body.rationale;
          state.record.rationale_source = "expert";
        }
        return json(state.record);
      }
    }
    return json({ error: { code: "not_found", message: path } }, 404);
  }) as typeof fetch;

  return service;
}
