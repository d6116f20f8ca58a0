/** DOM rendering. No framework: the whole view re-renders from flow state,
 * so what is on screen is always the projection of the last API responses. */

import type { AssessmentFlow } from "./flow.js";
import { DOMAIN_TITLES } from "./flow.js";
import { ANSWER_LABELS, SELECTABLE_ANSWERS } from "./types.js";
import type { AnswerValue, RiskValue } from "./types.js";

const RISK_LABELS: Record<RiskValue, string> = {
  low: "Low risk",
  some_concerns: "Some concerns",
  high: "High risk",
};

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: (Node | string)[] = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  for (const child of children) node.append(child);
  return node;
}

function riskChip(value: RiskValue | null, label: string): HTMLElement {
  return el("span", { class: `chip risk-${value ?? "pending"}` }, [
    `${label}: ${value ? RISK_LABELS[value] : "…"}`,
  ]);
}

export function renderApp(flow: AssessmentFlow, root: HTMLElement): void {
  const rerender = () => renderApp(flow, root);
  root.replaceChildren();

  // failure banner with inline retry
  const failure = flow.store.failure;
  if (failure) {
    root.append(
      el("div", { class: "banner error", role: "alert" }, [
        `Request failed: ${failure.message} `,
        button("Retry", () => {
          void failure.retry().catch(() => undefined).then(rerender);
        }),
        button("Dismiss", () => {
          flow.store.clearFailure();
          rerender();
        }),
      ]),
    );
  }

  // summary bar
  const bar = flow.summaryBar();
  root.append(
    el("div", { class: "summary-bar" }, [
      ...bar.domains.map((v, i) => riskChip(v, `D${i + 1}`)),
      riskChip(bar.overall, "Overall"),
    ]),
  );

  // per-domain stepper
  const stepper = el("nav", { class: "stepper" });
  for (const domain of [1, 2, 3, 4, 5]) {
    const active = domain === flow.domain ? " current" : "";
    const done = flow.domainComplete(domain) ? " done" : "";
    stepper.append(
      button(`D${domain} ${DOMAIN_TITLES[domain] ?? ""}`, () => {
        const first = flow.domainQuestions(domain)[0];
        if (first) {
          const result = flow.goTo(first.qid);
          if (result.blockedByUnsavedEdits) {
            window.alert("Save or discard your edits before leaving this question.");
            return;
          }
        }
        rerender();
      }, `step${active}${done}`),
    );
  }
  root.append(stepper);

  // question screen
  const view = flow.view();
  const card = el("section", { class: `question state-${view.state}` });
  card.append(el("h2", {}, [`${view.qid} · ${view.text}`]));

  const details = el("details", view.elaborationCollapsed ? {} : { open: "" });
  details.append(el("summary", {}, ["Guidance"]));
  details.append(el("p", { class: "elaboration" }, [view.elaboration]));
  details.addEventListener("toggle", () => {
    flow.elaborationOpen = details.open;
  });
  card.append(details);

  if (view.state === "skipped") {
    card.append(el("p", { class: "skipped" }, ["Skipped by cascade logic (not applicable)."]));
  } else if (view.state === "blocked") {
    card.append(el("p", { class: "blocked" }, ["Answer the preceding questions first."]));
  } else if (view.state === "answerable") {
    card.append(
      button("Ask the model", () => {
        void flow.answerCurrent().catch(() => undefined).then(rerender);
      }, "primary"),
    );
  } else {
    card.append(answerEditor(flow, view.qid, view.finalAnswer, view.finalRationale, rerender));
    card.append(evidenceList(flow, view.qid, rerender));
    card.append(paragraphPicker(flow, view.qid, rerender));
  }
  root.append(card);

  // navigation and end-of-domain judgment
  const nav = el("div", { class: "nav" }, [
    button("Back", () => {
      if (flow.prev().blockedByUnsavedEdits) {
        window.alert("Save or discard your edits before leaving this question.");
      }
      rerender();
    }),
    button("Next", () => {
      if (flow.next().blockedByUnsavedEdits) {
        window.alert("Save or discard your edits before leaving this question.");
      }
      rerender();
    }),
  ]);
  if (flow.domainComplete(flow.domain)) {
    nav.append(riskChip(flow.domainJudgment(flow.domain), `Domain ${flow.domain} judgment`));
  }
  root.append(nav);
}

function button(label: string, onClick: () => void, cls = ""): HTMLButtonElement {
  const node = el("button", cls ? { class: cls, type: "button" } : { type: "button" }, [label]);
  node.addEventListener("click", onClick);
  return node;
}

function answerEditor(
  flow: AssessmentFlow,
  qid: string,
  current: AnswerValue | null,
  rationale: string,
  rerender: () => void,
): HTMLElement {
  const wrap = el("div", { class: "editor" });
  const options = el("div", { class: "options", role: "radiogroup" });
  for (const value of SELECTABLE_ANSWERS) {
    const input = el("input", {
      type: "radio",
      name: `answer-${qid}`,
      value,
      id: `answer-${qid}-${value}`,
    });
    if (value === current) input.setAttribute("checked", "");
    input.addEventListener("change", () => flow.setDraftAnswer(value));
    options.append(
      el("label", { for: `answer-${qid}-${value}` }, [input, ANSWER_LABELS[value]]),
    );
  }
  wrap.append(options);

  const text = el("textarea", { class: "rationale", rows: "4" });
  text.value = rationale;
  text.addEventListener("input", () => flow.setDraftRationale(text.value));
  wrap.append(el("label", {}, ["Explanation", text]));

  wrap.append(
    button("Save", () => {
      void flow.saveEdits().catch(() => undefined).then(rerender);
    }, "primary"),
    button("Discard edits", () => {
      flow.discardEdits();
      rerender();
    }),
  );
  return wrap;
}

function evidenceList(flow: AssessmentFlow, qid: string, rerender: () => void): HTMLElement {
  const view = flow.view(qid);
  const wrap = el("div", { class: "evidence" }, [el("h3", {}, ["Evidence"])]);
  for (const cardData of view.evidence) {
    const voteState = cardData.vote ? ` voted-${cardData.vote}` : "";
    wrap.append(
      el("blockquote", { class: `evidence-card${voteState}` }, [
        el("p", {}, [cardData.text]),
        button(cardData.vote === "up" ? "▲ Upvoted" : "▲", () => {
          void flow.store.vote(qid, cardData.paragraphIndex, "up").catch(() => undefined).then(rerender);
        }),
        button(cardData.vote === "down" ? "▼ Downvoted" : "▼", () => {
          void flow.store.vote(qid, cardData.paragraphIndex, "down").catch(() => undefined).then(rerender);
        }),
      ]),
    );
  }
  if (!flow.showAllEvidence) {
    wrap.append(
      button("Show more from paper", () => {
        flow.showAllEvidence = true;
        rerender();
      }),
    );
  }
  return wrap;
}

function paragraphPicker(flow: AssessmentFlow, qid: string, rerender: () => void): HTMLElement {
  const wrap = el("div", { class: "picker" }, [el("h3", {}, ["Add a paragraph as evidence"])]);
  const select = el("select", { class: "picker-select" });
  for (const para of flow.pickerParagraphs(qid)) {
    const label = `${para.index}. ${para.text.slice(0, 80)}`;
    select.append(el("option", { value: String(para.index) }, [label]));
  }
  wrap.append(
    select,
    button("Add", () => {
      const index = Number(select.value);
      void flow.store.addParagraph(qid, index).catch(() => undefined).then(rerender);
    }),
  );
  return wrap;
}
