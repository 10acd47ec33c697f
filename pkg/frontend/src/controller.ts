/**
 * Session console controller: owns the polling loop, the single
 * in-flight mutation rule, and the error states (conflict, unknown
 * session, unreachable service).
 */

import {
  ApiClient,
  NetworkError,
  StaleSuggestionError,
  UnknownSessionError,
} from "./api.js";
import type { ConsoleData } from "./view.js";
import {
  clearNetworkFailure,
  renderNetworkFailure,
  renderStats,
  renderUnknownSession,
} from "./view.js";
import { buildResponseForm, formKind, ResponseForm } from "./forms.js";

export type ConsoleStatus = "loading" | "ready" | "unknown" | "network";

export interface ConsoleOptions {
  pollMs?: number;
}

export class SessionConsole {
  readonly root: HTMLElement;
  readonly api: ApiClient;
  readonly pollMs: number;

  status: ConsoleStatus = "loading";
  inFlight = false;

  private bannerZone: HTMLElement;
  private statsZone: HTMLElement;
  private formZone: HTMLElement;
  private form: ResponseForm | null = null;
  private data: ConsoleData | null = null;
  private timer: ReturnType<typeof setInterval> | null = null;
  /** Latest refresh promise, so tests can await settled state. */
  lastRefresh: Promise<void> = Promise.resolve();

  constructor(root: HTMLElement, api: ApiClient, opts: ConsoleOptions = {}) {
    this.root = root;
    this.api = api;
    this.pollMs = opts.pollMs ?? 2000;
    root.textContent = "";
    this.bannerZone = document.createElement("div");
    this.bannerZone.setAttribute("data-role", "banner-zone");
    this.statsZone = document.createElement("div");
    this.statsZone.setAttribute("data-role", "stats");
    this.statsZone.className = "stats-grid";
    this.formZone = document.createElement("div");
    this.formZone.setAttribute("data-role", "form-zone");
    root.appendChild(this.bannerZone);
    root.appendChild(this.formZone);
    root.appendChild(this.statsZone);
  }

  start(): void {
    this.lastRefresh = this.refresh();
    this.timer = setInterval(() => this.tick(), this.pollMs);
  }

  stop(): void {
    if (this.timer !== null) clearInterval(this.timer);
    this.timer = null;
  }

  /** One poll beat; skipped while the user is typing or a submit is out. */
  tick(): void {
    if (this.inFlight) return;
    if (this.form && this.form.entryActive()) return;
    this.lastRefresh = this.refresh();
  }

  async refresh(): Promise<void> {
    try {
      const state = await this.api.state();
      const active = state.phase === "active";
      const [estimate, sensitivity, history, suggest] = await Promise.all([
        this.api.estimate(),
        this.api.sensitivity(),
        this.api.history(),
        active ? this.api.suggest() : Promise.resolve(null),
      ]);
      this.data = { state, suggest, estimate, sensitivity, history };
      this.status = "ready";
      clearNetworkFailure(this.bannerZone);
      renderStats(this.statsZone, this.data);
      this.ensureForm(state.model.family_link);
    } catch (err) {
      if (err instanceof UnknownSessionError) {
        this.status = "unknown";
        this.stop();
        this.formZone.textContent = "";
        this.form = null;
        renderUnknownSession(this.statsZone, this.api.sessionId, err.detail);
        return;
      }
      if (err instanceof NetworkError) {
        this.status = "network";
        renderNetworkFailure(this.bannerZone, this.pollMs);
        return;
      }
      throw err;
    }
  }

  private ensureForm(familyLink: string): void {
    const kind = formKind(familyLink);
    if (this.form && this.form.kind === kind) return;
    this.formZone.textContent = "";
    this.form = buildResponseForm(kind, (y) => {
      void this.submit(y);
    });
    this.formZone.appendChild(this.form.element);
    if (this.inFlight) this.form.setEnabled(false);
  }

  /** The target of the next observation, straight from the payloads. */
  private submitTarget(): { index: number; seq: number } | null {
    if (!this.data) return null;
    const { state, suggest } = this.data;
    if (state.phase === "active") {
      if (!suggest) return null;
      return { index: suggest.index, seq: suggest.suggestion_seq };
    }
    if (state.pending_points.length === 0) return null;
    return { index: state.pending_points[0], seq: state.seq };
  }

  async submit(y: number): Promise<void> {
    if (this.inFlight) return;
    const target = this.submitTarget();
    if (target === null) return;
    this.inFlight = true;
    this.form?.setEnabled(false);
    try {
      await this.api.submit(target.index, y, target.seq);
      this.dismissConflict();
      this.form?.reset();
    } catch (err) {
      if (err instanceof StaleSuggestionError) {
        this.showConflict(err.detail);
        this.form?.reset();
      } else if (err instanceof UnknownSessionError) {
        this.status = "unknown";
        this.stop();
        this.formZone.textContent = "";
        this.form = null;
        renderUnknownSession(this.statsZone, this.api.sessionId, err.detail);
        return;
      } else if (err instanceof NetworkError) {
        this.status = "network";
        renderNetworkFailure(this.bannerZone, this.pollMs);
        return;
      } else {
        throw err;
      }
    } finally {
      this.inFlight = false;
      this.form?.setEnabled(true);
    }
    this.lastRefresh = this.refresh();
    await this.lastRefresh;
  }

  private showConflict(detail: string): void {
    this.dismissConflict();
    const banner = document.createElement("div");
    banner.className = "banner conflict";
    banner.setAttribute("data-role", "conflict");
    const head = document.createElement("strong");
    head.textContent = "suggestion changed under you";
    const body = document.createElement("p");
    body.textContent = detail;
    const note = document.createElement("p");
    note.textContent =
      "the observation was not recorded; the point shown below is current";
    banner.appendChild(head);
    banner.appendChild(body);
    banner.appendChild(note);
    this.bannerZone.appendChild(banner);
  }

  private dismissConflict(): void {
    this.bannerZone.querySelector('[data-role="conflict"]')?.remove();
  }
}
