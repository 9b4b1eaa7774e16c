/** The annotator-facing single-page flow: instructions, token-snapped
 * highlighting with one color per parameter kind, screening questions
 * first, then the assigned excerpts.  Failing the screening gate ends the
 * session on a terminal screen. */

import { ApiError, NextItem, ServiceClient } from "./api";
import {
  TokenLabels,
  applySelection,
  clearSelection,
  toSpans,
} from "./labels";
import { CROWD_KINDS, KIND_TITLES, Kind, PALETTE } from "./palette";
import { Token, tokenize } from "./tokens";

type ViewName = "loading" | "annotate" | "failed" | "done" | "error";

export class AnnotationApp {
  view: ViewName = "loading";
  labels: TokenLabels = new Map();
  tokens: Token[] = [];
  activeKind: Kind = "sender";
  noParameters = false;

  private sessionToken = "";
  private item: NextItem | null = null;
  private anchor: number | null = null;
  private submitting = false;

  constructor(
    private readonly root: HTMLElement,
    private readonly client: ServiceClient,
    private readonly taskId: string,
  ) {}

  async start(): Promise<void> {
    const session = await this.client.openSession(this.taskId);
    this.sessionToken = session.session_token;
    await this.loadNext();
  }

  async loadNext(): Promise<void> {
    try {
      this.item = await this.client.nextItem(this.sessionToken);
    } catch (error) {
      if (error instanceof ApiError && error.code === "screening_failed") {
        this.renderFailed();
        return;
      }
      throw error;
    }
    if (this.item.done) {
      this.renderDone();
      return;
    }
    this.labels = new Map();
    this.noParameters = false;
    this.anchor = null;
    this.tokens = tokenize(this.item.text ?? "");
    this.renderAnnotate();
  }

  /** Label the inclusive token range with the active kind (overwrite). */
  selectRange(firstToken: number, lastToken: number): void {
    const lo = Math.min(firstToken, lastToken);
    const hi = Math.max(firstToken, lastToken);
    this.labels = applySelection(this.labels, lo, hi, this.activeKind);
    this.renderAnnotate();
  }

  clearRange(firstToken: number, lastToken: number): void {
    this.labels = clearSelection(
      this.labels,
      Math.min(firstToken, lastToken),
      Math.max(firstToken, lastToken),
    );
    this.renderAnnotate();
  }

  setKind(kind: Kind): void {
    this.activeKind = kind;
    this.renderAnnotate();
  }

  setNoParameters(value: boolean): void {
    this.noParameters = value;
    this.renderAnnotate();
  }

  get canSubmit(): boolean {
    return !this.submitting && (this.labels.size > 0 || this.noParameters);
  }

  payload() {
    return toSpans(this.labels, this.tokens);
  }

  async submitCurrent(): Promise<void> {
    if (!this.canSubmit || !this.item?.excerpt_id) return;
    this.submitting = true;
    try {
      const result = await this.client.submit(
        this.sessionToken,
        this.item.excerpt_id,
        this.payload(),
      );
      this.submitting = false;
      if (result.status === "screening_failed") {
        this.renderFailed();
        return;
      }
      await this.loadNext();
    } catch (error) {
      // keep the local labels so the annotator can retry
      this.submitting = false;
      this.renderError(error);
    }
  }

  // -- rendering -----------------------------------------------------------

  private renderAnnotate(): void {
    this.view = "annotate";
    const item = this.item!;
    this.root.innerHTML = "";

    const instructions = document.createElement("details");
    instructions.className = "instructions";
    const summary = document.createElement("summary");
    summary.textContent = "Instructions";
    instructions.append(summary);
    const body = document.createElement("p");
    body.textContent = item.instructions ?? "";
    instructions.append(body);
    this.root.append(instructions);

    const progress = document.createElement("p");
    progress.className = "progress";
    progress.textContent =
      `${item.progress.completed} of ${item.progress.total} completed` +
      (item.is_screening ? " (screening)" : "");
    this.root.append(progress);

    this.root.append(this.renderKindPicker(), this.renderText(), this.renderControls());
  }

  private renderKindPicker(): HTMLElement {
    const picker = document.createElement("div");
    picker.className = "kind-picker";
    const kinds = (this.item?.kinds as Kind[] | undefined) ?? CROWD_KINDS;
    for (const kind of kinds) {
      const button = document.createElement("button");
      button.dataset.kind = kind;
      button.textContent = KIND_TITLES[kind];
      button.style.color = PALETTE[kind];
      button.className = kind === this.activeKind ? "active" : "";
      button.addEventListener("click", () => this.setKind(kind));
      picker.append(button);
    }
    return picker;
  }

  private renderText(): HTMLElement {
    const container = document.createElement("p");
    container.className = "excerpt";
    const text = this.item?.text ?? "";
    let cursor = 0;
    this.tokens.forEach((token, i) => {
      if (token.start > cursor) {
        container.append(document.createTextNode(text.slice(cursor, token.start)));
      }
      const word = document.createElement("span");
      word.className = "token";
      word.dataset.index = String(i);
      word.textContent = token.text;
      const kind = this.labels.get(i);
      if (kind !== undefined) {
        word.style.backgroundColor = PALETTE[kind];
        word.dataset.kind = kind;
      }
      word.addEventListener("mousedown", () => {
        this.anchor = i;
      });
      word.addEventListener("mouseup", () => {
        this.selectRange(this.anchor ?? i, i);
        this.anchor = null;
      });
      word.addEventListener("dblclick", () => this.clearRange(i, i));
      container.append(word);
      cursor = token.end;
    });
    if (cursor < text.length) {
      container.append(document.createTextNode(text.slice(cursor)));
    }
    return container;
  }

  private renderControls(): HTMLElement {
    const controls = document.createElement("div");
    controls.className = "controls";

    const label = document.createElement("label");
    const checkbox = document.createElement("input");
    checkbox.type = "checkbox";
    checkbox.className = "no-parameters";
    checkbox.checked = this.noParameters;
    checkbox.addEventListener("change", () => this.setNoParameters(checkbox.checked));
    label.append(checkbox, document.createTextNode(" no parameters present"));
    controls.append(label);

    const submit = document.createElement("button");
    submit.className = "submit";
    submit.textContent = "Submit";
    submit.disabled = !this.canSubmit;
    submit.addEventListener("click", () => void this.submitCurrent());
    controls.append(submit);
    return controls;
  }

  private renderFailed(): void {
    this.view = "failed";
    this.root.innerHTML = "";
    const screen = document.createElement("div");
    screen.className = "terminal failed-screening";
    const heading = document.createElement("h1");
    heading.textContent = "You did not qualify";
    const message = document.createElement("p");
    message.textContent =
      "Your screening answers did not meet the qualification bar. " +
      "Thank you for your time; this session is now closed.";
    screen.append(heading, message);
    this.root.append(screen);
  }

  private renderDone(): void {
    this.view = "done";
    this.root.innerHTML = "";
    const screen = document.createElement("div");
    screen.className = "terminal done";
    const heading = document.createElement("h1");
    heading.textContent = "All excerpts completed";
    screen.append(heading);
    this.root.append(screen);
  }

  private renderError(error: unknown): void {
    this.view = "error";
    const existing = this.root.querySelector(".error-banner");
    existing?.remove();
    const banner = document.createElement("div");
    banner.className = "error-banner";
    const message = document.createElement("span");
    message.textContent =
      error instanceof ApiError
        ? `${error.code}: ${error.message}`
        : "network error, your work is kept locally";
    const retry = document.createElement("button");
    retry.className = "retry";
    retry.textContent = "Retry";
    retry.addEventListener("click", () => void this.submitCurrent());
    banner.append(message, retry);
    this.root.prepend(banner);
  }
}
