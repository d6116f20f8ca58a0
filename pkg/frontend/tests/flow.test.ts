import { beforeEach, describe, expect, it } from "vitest";

import { Rob2Api } from "../src/api.js";
import { AssessmentFlow } from "../src/flow.js";
import { SessionStore } from "../src/store.js";
import { FIXTURE_DOC, fakeService, question, record } from "./helpers.js";

function sessionWith(questions: ReturnType<typeof question>[]) {
  const service = fakeService(questions);
  const store = new SessionStore(new Rob2Api("http://svc", service.fetch), "s-1");
  return { service, store, flow: new AssessmentFlow(store) };
}

const BASE = [
  question("1.1", { answered: true, record: record("1.1") }),
  question("1.2"),
  question("1.3"),
  question("2.1", { answered: true, record: record("2.1") }),
  question("2.2", { answered: true, record: record("2.2") }),
  question("2.3", {
    active: false,
    answered: true,
    record: record("2.3", { final_answer: "not_applicable", model_answer: null }),
  }),
  question("2.4", { active: null }),
];

describe("AssessmentFlow", () => {
  let flow: AssessmentFlow;
  let store: SessionStore;

  beforeEach(async () => {
    ({ flow, store } = sessionWith(structuredClone(BASE)));
    await store.refresh();
    store.document = structuredClone(FIXTURE_DOC);
  });

  it("never presents a gated-off question as answerable", () => {
    expect(flow.view("2.3").state).toBe("skipped");
    expect(flow.view("2.4").state).toBe("blocked");
    expect(flow.view("1.2").state).toBe("answerable");
    expect(flow.view("1.1").state).toBe("answered");
  });

  it("answerCurrent refuses non-answerable questions", async () => {
    flow.goTo("2.3", true);
    await expect(flow.answerCurrent()).rejects.toThrow(/not answerable/);
  });

  it("stepper walks domains in order and resets screen state", () => {
    expect(flow.domain).toBe(1);
    flow.next();
    flow.next();
    expect(flow.current().qid).toBe("1.3");
    flow.next();
    expect(flow.domain).toBe(2);
    expect(flow.current().qid).toBe("2.1");
    flow.prev();
    expect(flow.domain).toBe(1);
    expect(flow.current().qid).toBe("1.3");
  });

  it("flags unsaved edits before navigation until saved or discarded", async () => {
    flow.goTo("1.1");
    flow.setDraftRationale("my own explanation");
    expect(flow.hasUnsavedEdits()).toBe(true);

    const blocked = flow.next();
    expect(blocked).toEqual({ moved: false, blockedByUnsavedEdits: true });
    expect(flow.current().qid).toBe("1.1");

    await flow.saveEdits();
    expect(flow.hasUnsavedEdits()).toBe(false);
    expect(flow.next().moved).toBe(true);
    expect(store.question("1.1").record?.rationale_source).toBe("expert");
  });

  it("discarding edits unblocks navigation without a mutation", () => {
    flow.goTo("1.1");
    flow.setDraftAnswer("probably_yes");
    flow.discardEdits();
    expect(flow.next().moved).toBe(true);
  });

  it("rejects selecting not_applicable by hand", () => {
    expect(() => flow.setDraftAnswer("not_applicable")).toThrow(/cascade/);
  });

  it("shows top-3 evidence by default and expands on request", () => {
    const view = flow.view("1.1");
    expect(view.evidence).toHaveLength(3);
    expect(view.evidence[0]?.text).toBe("Paragraph 1 text.");
    flow.showAllEvidence = true;
    expect(flow.view("1.1").evidence).toHaveLength(3); // record carries 3 overall
  });

  it("keeps the elaboration collapsed until opened", () => {
    expect(flow.view("1.1").elaborationCollapsed).toBe(true);
    flow.elaborationOpen = true;
    expect(flow.view("1.1").elaborationCollapsed).toBe(false);
  });

  it("paragraph picker offers the full parse minus retrieved evidence", () => {
    const offered = flow.pickerParagraphs("1.1").map((p) => p.index);
    expect(offered).toEqual([0, 4, 5]);
  });

  it("summary bar mirrors the service summary", async () => {
    store.summary = {
      session_id: "s-1",
      status: "in_progress",
      domains: { "1": "high", "2": "some_concerns", "3": "low", "4": "low", "5": null },
      overall: null,
    };
    const bar = flow.summaryBar();
    expect(bar.domains).toEqual(["high", "some_concerns", "low", "low", null]);
    expect(bar.overall).toBeNull();
  });
});
