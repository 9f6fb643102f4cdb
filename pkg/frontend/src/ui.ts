// DOM rendering for the operator console. All state comes from API
// documents; every action re-renders from the service's response.

import {
  ApiClient,
  ApiRequestError,
  RobotView,
  SessionDocument,
  SessionSummary,
} from "./api.js";
import {
  actuationParameters,
  advanceLabel,
  canAdvance,
  chartPoints,
  fabricationParameters,
  sessionProgress,
  speedBadge,
  validateMeasurementForm,
} from "./model.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function errorText(err: unknown): string {
  if (err instanceof ApiRequestError) {
    const missing = err.detail.missing;
    return missing && missing.length
      ? `${err.detail.message} (missing robots: ${missing.join(", ")})`
      : err.detail.message;
  }
  return err instanceof Error ? err.message : String(err);
}

export class Console {
  private banner: HTMLElement | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly root: HTMLElement,
  ) {}

  async route(): Promise<void> {
    const hash = window.location.hash;
    const match = hash.match(/^#\/session\/(.+)$/);
    try {
      if (match) {
        await this.showSession(await this.api.getSession(match[1]));
      } else {
        await this.showList();
      }
    } catch (err) {
      this.showUnreachable(err, () => void this.route());
    }
  }

  private clear(): void {
    this.root.textContent = "";
    this.banner = null;
  }

  private showBanner(message: string): void {
    if (!this.banner) return;
    this.banner.textContent = message;
    this.banner.hidden = message === "";
  }

  private showUnreachable(err: unknown, retry: () => void): void {
    this.clear();
    const banner = el("div", "banner error");
    banner.append(
      el("span", "", `service unreachable: ${errorText(err)} `),
    );
    const button = el("button", "", "retry");
    button.addEventListener("click", retry);
    banner.append(button);
    this.root.append(banner);
  }

  // -- session list ----------------------------------------------------

  private async showList(): Promise<void> {
    const sessions = await this.api.listSessions();
    this.clear();
    this.root.append(el("h1", "", "Robot race sessions"));
    this.root.append(this.buildList(sessions));
    this.root.append(this.buildCreateForm());
  }

  private buildList(sessions: SessionSummary[]): HTMLElement {
    if (sessions.length === 0) {
      return el("p", "muted", "No sessions yet. Create one below.");
    }
    const table = el("table", "sessions");
    const head = el("tr");
    for (const title of ["name", "algorithm", "status", "generation", ""]) {
      head.append(el("th", "", title));
    }
    table.append(head);
    for (const s of sessions) {
      const row = el("tr");
      row.append(el("td", "", s.name));
      row.append(el("td", "", s.algorithm.toUpperCase()));
      row.append(el("td", `status-${s.status}`, s.status));
      row.append(el("td", "", `${s.current_generation + 1}/${s.max_generations}`));
      const link = el("a", "", "open");
      link.href = `#/session/${s.id}`;
      const cell = el("td");
      cell.append(link);
      row.append(cell);
      table.append(row);
    }
    return table;
  }

  private buildCreateForm(): HTMLElement {
    const form = el("form", "create");
    form.append(el("h2", "", "New session"));
    const name = el("input");
    name.placeholder = "session name";
    const algorithm = el("select");
    for (const value of ["ga", "pso"]) {
      const option = el("option", "", value.toUpperCase());
      option.value = value;
      algorithm.append(option);
    }
    const seed = el("input");
    seed.placeholder = "seed";
    seed.inputMode = "numeric";
    const generations = el("input");
    generations.placeholder = "generations (5)";
    generations.inputMode = "numeric";
    const error = el("span", "field-error");
    const submit = el("button", "", "Create");
    submit.type = "submit";
    form.append(name, algorithm, seed, generations, submit, error);
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      const seedValue = Number(seed.value.trim());
      if (!name.value.trim() || !Number.isInteger(seedValue)) {
        error.textContent = "name and an integer seed are required";
        return;
      }
      const maxGenerations = generations.value.trim()
        ? Number(generations.value.trim())
        : 5;
      void this.api
        .createSession({
          name: name.value.trim(),
          algorithm: algorithm.value as "ga" | "pso",
          seed: seedValue,
          max_generations: maxGenerations,
        })
        .then((doc) => {
          window.location.hash = `#/session/${doc.id}`;
        })
        .catch((err) => {
          error.textContent = errorText(err);
        });
    });
    return form;
  }

  // -- session view ------------------------------------------------------

  private async showSession(doc: SessionDocument): Promise<void> {
    this.clear();
    const back = el("a", "back", "< all sessions");
    back.href = "#/";
    this.root.append(back);

    const header = el("div", "session-header");
    header.append(el("h1", "", doc.name));
    header.append(el("span", `status-${doc.status}`, doc.status));
    header.append(el("span", "muted", sessionProgress(doc)));
    this.root.append(header);

    this.banner = el("div", "banner error");
    this.banner.hidden = true;
    this.root.append(this.banner);

    this.root.append(this.buildChart(doc));

    if (doc.status === "complete") {
      const summary = el("div", "summary");
      summary.append(el("p", "", "Session complete."));
      const link = el("a", "", "download results CSV");
      link.href = this.api.exportUrl(doc.id);
      summary.append(link);
      this.root.append(summary);
    } else {
      const advance = el("button", "advance", advanceLabel(doc));
      advance.disabled = !canAdvance(doc);
      advance.addEventListener("click", () => {
        void this.api
          .advance(doc.id)
          .then((next) => this.showSession(next))
          .catch((err) => this.showBanner(errorText(err)));
      });
      this.root.append(advance);
    }

    const cards = el("div", "cards");
    for (const robot of doc.robots) {
      cards.append(this.buildCard(doc, robot));
    }
    this.root.append(cards);
  }

  private buildCard(doc: SessionDocument, robot: RobotView): HTMLElement {
    const card = el("div", robot.measured ? "card measured" : "card");
    card.append(el("h3", "", `Robot ${robot.robot_index}`));
    card.append(el("span", "badge", speedBadge(robot)));

    for (const [title, parameters] of [
      ["fabrication", fabricationParameters(robot)],
      ["actuation", actuationParameters(robot)],
    ] as const) {
      const block = el("dl", `block ${title}`);
      block.append(el("dt", "block-title", title));
      for (const parameter of parameters) {
        const row = el("div", "param");
        row.append(el("dt", "", parameter.name.replace(/_/g, " ")));
        row.append(el("dd", "", parameter.label));
        block.append(row);
      }
      card.append(block);
    }

    if (doc.status === "collecting") {
      card.append(this.buildMeasurementForm(doc, robot));
    }
    return card;
  }

  private buildMeasurementForm(doc: SessionDocument, robot: RobotView): HTMLElement {
    const form = el("form", "measure");
    const slopesA = el("input");
    slopesA.placeholder = "5 slopes, direction A";
    const slopesB = el("input");
    slopesB.placeholder = "5 slopes, direction B";
    const speed = el("input");
    speed.placeholder = "or direct speed (cm/min)";
    const error = el("span", "field-error");
    const submit = el("button", "", robot.measured ? "Overwrite" : "Record");
    submit.type = "submit";
    form.append(slopesA, slopesB, speed, submit, error);
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      const parsed = validateMeasurementForm(slopesA.value, slopesB.value, speed.value);
      if (parsed.kind === "invalid") {
        error.textContent = parsed.error;
        return;
      }
      if (robot.measured && !window.confirm(
          `Robot ${robot.robot_index} is already measured. Overwrite?`)) {
        return;
      }
      const body =
        parsed.kind === "speed"
          ? { speed: parsed.speed }
          : { slopes_dir_a: parsed.slopesA, slopes_dir_b: parsed.slopesB };
      void this.api
        .putMeasurement(doc.id, robot.robot_index, body, robot.measured)
        .then((next) => this.showSession(next))
        .catch((err) => {
          error.textContent = errorText(err);
        });
    });
    return form;
  }

  // -- progress chart ------------------------------------------------------

  private buildChart(doc: SessionDocument): HTMLElement {
    const wrapper = el("div", "chart");
    wrapper.append(el("h2", "", "Best speed per generation"));
    const points = chartPoints(doc);
    if (points.length === 0) {
      wrapper.append(el("p", "muted", "no completed generations yet"));
      return wrapper;
    }
    const width = 360;
    const height = 140;
    const pad = 24;
    const maxSpeed = Math.max(...points.map((p) => p.bestSpeed), 1e-9);
    const step =
      doc.max_generations > 1 ? (width - 2 * pad) / (doc.max_generations - 1) : 0;
    const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
    svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
    svg.setAttribute("class", "progress");
    const coords = points.map((p) => {
      const x = pad + p.generation * step;
      const y = height - pad - (p.bestSpeed / maxSpeed) * (height - 2 * pad);
      return { x, y, p };
    });
    if (coords.length > 1) {
      const line = document.createElementNS("http://www.w3.org/2000/svg", "polyline");
      line.setAttribute("points", coords.map((c) => `${c.x},${c.y}`).join(" "));
      line.setAttribute("class", "progress-line");
      svg.append(line);
    }
    for (const { x, y, p } of coords) {
      const dot = document.createElementNS("http://www.w3.org/2000/svg", "circle");
      dot.setAttribute("cx", String(x));
      dot.setAttribute("cy", String(y));
      dot.setAttribute("r", "4");
      dot.setAttribute("class", "progress-dot");
      svg.append(dot);
      const label = document.createElementNS("http://www.w3.org/2000/svg", "text");
      label.setAttribute("x", String(x));
      label.setAttribute("y", String(y - 8));
      label.setAttribute("class", "progress-label");
      label.textContent = String(p.bestSpeed);
      svg.append(label);
    }
    wrapper.append(svg);
    return wrapper;
  }
}
