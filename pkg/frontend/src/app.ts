/**
 * DOM wiring for the human-in-the-loop console.
 *
 * The flow mirrors the expert-review loop: fetch a slate of candidates with
 * their acquisition/posterior annotations, let the scientist pick one (or
 * override with a hand-chosen design), run the experiment offline, then
 * enter the measured outcome. All numbers come from the service.
 */

import {
  ApiRequestError,
  SeqboClient,
  type DesignPoint,
  type ParamRecord,
  type SlateItem,
  type StudyDetail,
} from "./api.js";
import {
  applyConflict,
  applyCurve,
  applySummary,
  clearConflict,
  emptyDashboard,
  incumbentLabel,
  sortSlate,
  validateOverride,
  type DashboardState,
} from "./state.js";

const client = new SeqboClient("");
let state: DashboardState = emptyDashboard();
let currentStudy: StudyDetail | null = null;
let currentSlate: SlateItem[] = [];
let selected: { x: DesignPoint; source: "algorithm" | "human-override" } | null = null;
let pollTimer: number | undefined;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function fmt(v: unknown): string {
  if (typeof v === "number") return Number.isInteger(v) ? String(v) : v.toPrecision(6);
  return String(v);
}

function pointLabel(x: DesignPoint): string {
  return Object.entries(x)
    .map(([k, v]) => `${k}=${fmt(v)}`)
    .join("  ");
}

// ---------------------------------------------------------------------------
// rendering

function renderStudyList(items: { id: string; state: string; n_observations: number }[]) {
  const list = el<HTMLUListElement>("study-list");
  list.innerHTML = "";
  for (const s of items) {
    const li = document.createElement("li");
    const a = document.createElement("a");
    a.href = "#";
    a.textContent = `${s.id} — ${s.state}, ${s.n_observations} observations`;
    a.onclick = (e) => {
      e.preventDefault();
      void openStudy(s.id);
    };
    li.appendChild(a);
    list.appendChild(li);
  }
}

function renderDashboard() {
  const summary = state.summary;
  el("dashboard").style.display = summary ? "block" : "none";
  if (!summary) return;
  el("study-title").textContent = `Study ${summary.id}`;
  const badge = el("state-badge");
  badge.textContent = summary.state;
  badge.className = `badge ${summary.state}`;
  el("incumbent").textContent = incumbentLabel(summary);
  el("meta").textContent =
    `${summary.n_observations} observations, ${summary.n_pending} pending, ` +
    `revision ${summary.revision}`;
  el("conflict-banner").style.display = state.conflict.active ? "block" : "none";
  el("conflict-message").textContent = state.conflict.message;
  const stopped = summary.state === "stopped";
  el<HTMLButtonElement>("fetch-slate").disabled = stopped;
  el<HTMLButtonElement>("stop-study").disabled = stopped;
  el("slate-section").style.display = stopped ? "none" : "block";
  renderCurve();
}

function renderCurve() {
  const svg = el<HTMLElement>("curve");
  const { iterations, best } = state.curve;
  if (!iterations.length) {
    svg.innerHTML = "";
    return;
  }
  const w = 560;
  const h = 180;
  const lo = Math.min(...best);
  const hi = Math.max(...best);
  const span = hi - lo || 1;
  const px = (i: number) => 10 + (540 * i) / Math.max(iterations.length - 1, 1);
  const py = (v: number) => 10 + 160 * (1 - (v - lo) / span);
  const path = best.map((v, i) => `${i ? "L" : "M"}${px(i).toFixed(1)},${py(v).toFixed(1)}`);
  svg.innerHTML =
    `<svg viewBox="0 0 ${w} ${h}" xmlns="http://www.w3.org/2000/svg">` +
    `<path d="${path.join(" ")}" fill="none" stroke="#2563eb" stroke-width="2"/>` +
    `<text x="12" y="18" class="axis">best ${fmt(hi)}</text>` +
    `<text x="12" y="${h - 6}" class="axis">${fmt(lo)}</text></svg>`;
}

function renderSlate() {
  const tbody = el<HTMLTableSectionElement>("slate-body");
  tbody.innerHTML = "";
  sortSlate(currentSlate).forEach((row, i) => {
    const tr = document.createElement("tr");
    tr.innerHTML =
      `<td>${i + 1}</td><td>${pointLabel(row.x)}</td>` +
      `<td>${fmt(row.score)}</td><td>${fmt(row.mean)}</td><td>${fmt(row.std)}</td>`;
    const td = document.createElement("td");
    const btn = document.createElement("button");
    btn.textContent = "select";
    btn.onclick = () => {
      selected = { x: row.x, source: "algorithm" };
      el("selected-label").textContent = pointLabel(row.x);
      el("observe-form").style.display = "block";
    };
    td.appendChild(btn);
    tr.appendChild(td);
    tbody.appendChild(tr);
  });
    el("slate-table").style.display = currentSlate.length ? "table" : "none";
}

function renderOverrideForm(space: ParamRecord[]) {
  const holder = el("override-fields");
  holder.innerHTML = "";
  for (const param of space) {
    const label = document.createElement("label");
    label.textContent = `${param.name} (${param.type})`;
    const input = document.createElement("input");
    input.name = param.name;
    input.placeholder = hintFor(param);
    label.appendChild(input);
    holder.appendChild(label);
  }
}

function hintFor(param: ParamRecord): string {
  if (param.type === "bool") return "true | false";
  if (param.type === "cat") return (param.categories ?? []).join(" | ");
  return `${param.lb} .. ${param.ub}`;
}

function renderHistory(rows: { iteration: number; x: DesignPoint; y: number; source: string }[]) {
  const tbody = el<HTMLTableSectionElement>("history-body");
  tbody.innerHTML = "";
  for (const row of [...rows].reverse()) {
    const tr = document.createElement("tr");
    tr.innerHTML =
      `<td>${row.iteration}</td><td>${pointLabel(row.x)}</td>` +
      `<td>${fmt(row.y)}</td><td>${row.source}</td>`;
    tbody.appendChild(tr);
  }
}

// ---------------------------------------------------------------------------
// actions

async function refresh(): Promise<void> {
  if (!currentStudy) return;
  const id = currentStudy.id;
  const [detail, curve, history] = await Promise.all([
    client.getStudy(id),
    client.curve(id),
    client.history(id),
  ]);
  currentStudy = detail;
  state = applyCurve(applySummary(state, detail), curve.iterations, curve.best_so_far);
  renderDashboard();
  renderHistory(history.observations);
}

async function openStudy(id: string): Promise<void> {
  currentStudy = await client.getStudy(id);
  state = emptyDashboard();
  currentSlate = [];
  selected = null;
  el("observe-form").style.display = "none";
  renderOverrideForm(currentStudy.space);
  await refresh();
  renderSlate();
  if (pollTimer) window.clearInterval(pollTimer);
  pollTimer = window.setInterval(() => void refresh().catch(() => undefined), 5000);
}

async function fetchSlate(): Promise<void> {
  if (!currentStudy) return;
  const k = Number(el<HTMLInputElement>("slate-k").value) || 5;
  try {
    const slate = await client.slate(currentStudy.id, k);
    currentSlate = slate.candidates;
    state = { ...clearConflict(state), slateRevision: slate.revision };
    renderSlate();
    renderDashboard();
  } catch (err) {
    showError(err);
  }
}

async function submitObservation(): Promise<void> {
  if (!currentStudy || !selected) return;
  const yRaw = el<HTMLInputElement>("observed-y").value.trim();
  const y = Number(yRaw);
  if (yRaw === "" || !Number.isFinite(y)) {
    el("observe-error").textContent = "enter the measured objective value (a finite number)";
    return;
  }
  el("observe-error").textContent = "";
  try {
    await client.observe(currentStudy.id, selected.x, y, selected.source,
                         state.slateRevision ?? undefined);
    selected = null;
    el("observe-form").style.display = "none";
    el<HTMLInputElement>("observed-y").value = "";
    currentSlate = [];
    renderSlate();
    await refresh();
  } catch (err) {
    if (err instanceof ApiRequestError && err.isConflict) {
      state = applyConflict(state, state.slateRevision ?? -1);
      await refresh();        // automatic refetch; the banner asks the user to retry
      await fetchSlate();
    } else {
      showError(err);
    }
  }
}

function startOverride(): void {
  if (!currentStudy) return;
  const form = el<HTMLFormElement>("override-form");
  const values: Record<string, string> = {};
  for (const input of Array.from(form.querySelectorAll("input"))) {
    values[input.name] = input.value;
  }
  const result = validateOverride(currentStudy.space, values);
  const errBox = el("override-errors");
  if (!result.ok) {
    errBox.textContent = result.errors.join("; ");
    return; // invalid override: no request leaves the browser
  }
  errBox.textContent = "";
  selected = { x: result.point as DesignPoint, source: "human-override" };
  el("selected-label").textContent = `${pointLabel(selected.x)} (override)`;
  el("observe-form").style.display = "block";
}

function downloadCsv(): void {
  if (!currentStudy) return;
  void client.history(currentStudy.id).then(({ observations }) => {
    const names = currentStudy ? currentStudy.space.map((p) => p.name) : [];
    const rows = [["iteration", ...names, "y", "source"].join(",")];
    for (const o of observations) {
      rows.push([o.iteration, ...names.map((n) => String(o.x[n])), o.y, o.source].join(","));
    }
    const blob = new Blob([rows.join("\n")], { type: "text/csv" });
    const a = document.createElement("a");
    a.href = URL.createObjectURL(blob);
    a.download = `${currentStudy?.id}-history.csv`;
    a.click();
  });
}

function showError(err: unknown): void {
  const box = el("global-error");
  box.textContent = err instanceof Error ? err.message : String(err);
  window.setTimeout(() => (box.textContent = ""), 8000);
}

async function createStudy(): Promise<void> {
  try {
    const space = JSON.parse(el<HTMLTextAreaElement>("space-doc").value) as ParamRecord[];
    const configText = el<HTMLTextAreaElement>("config-doc").value.trim();
    const config = configText ? (JSON.parse(configText) as Record<string, unknown>) : {};
    const detail = await client.createStudy(space, config);
    await loadStudyList();
    await openStudy(detail.id);
  } catch (err) {
    showError(err);
  }
}

async function loadStudyList(): Promise<void> {
  renderStudyList(await client.listStudies());
}

export function boot(): void {
  el("create-study").onclick = () => void createStudy();
  el("fetch-slate").onclick = () => void fetchSlate();
  el("submit-observation").onclick = () => void submitObservation();
  el("submit-override").onclick = () => startOverride();
  el("stop-study").onclick = () => {
    if (currentStudy) void client.stop(currentStudy.id).then(() => refresh());
  };
  el("download-csv").onclick = () => downloadCsv();
  el("conflict-dismiss").onclick = () => {
    state = clearConflict(state);
    renderDashboard();
  };
  void loadStudyList();
}

if (typeof document !== "undefined" && document.getElementById("create-study")) {
  boot();
}
