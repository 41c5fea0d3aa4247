/**
 * View-state logic for the console: slate ordering, client-side override
 * validation against the study's space schema, and the conflict banner.
 *
 * Nothing here computes scores or posteriors; every number displayed is
 * taken verbatim from an API payload.
 */

import type {
  DesignPoint,
  DesignValue,
  ParamRecord,
  SlateItem,
  StudySummary,
} from "./api.js";

export interface ValidationOk {
  ok: true;
  value: DesignValue;
}

export interface ValidationError {
  ok: false;
  error: string;
}

export type ValidationResult = ValidationOk | ValidationError;

function fail(error: string): ValidationError {
  return { ok: false, error };
}

function intGrid(param: ParamRecord): number[] {
  const lb = param.lb as number;
  const ub = param.ub as number;
  const grid: number[] = [];
  if (param.type === "int") {
    for (let v = lb; v <= ub; v++) grid.push(v);
  } else if (param.type === "step_int") {
    for (let v = lb; v <= ub; v += param.step as number) grid.push(v);
  } else if (param.type === "int_exponent") {
    const base = param.base as number;
    for (let v = lb; v <= ub; v *= base) grid.push(v);
  }
  return grid;
}

/** Validate one raw form value against its parameter record. */
export function validateValue(param: ParamRecord, raw: string): ValidationResult {
  const text = raw.trim();
  if (text === "") return fail(`${param.name}: value is required`);

  switch (param.type) {
    case "num":
    case "pow": {
      const v = Number(text);
      if (!Number.isFinite(v)) return fail(`${param.name}: not a number`);
      if (v < (param.lb as number) || v > (param.ub as number)) {
        return fail(`${param.name}: ${v} outside [${param.lb}, ${param.ub}]`);
      }
      if (param.type === "pow" && v <= 0) return fail(`${param.name}: must be positive`);
      return { ok: true, value: v };
    }
    case "int":
    case "step_int":
    case "int_exponent": {
      const v = Number(text);
      if (!Number.isInteger(v)) return fail(`${param.name}: not an integer`);
      if (!intGrid(param).includes(v)) {
        return fail(`${param.name}: ${v} not on the feasible grid`);
      }
      return { ok: true, value: v };
    }
    case "pow_int": {
      const v = Number(text);
      if (!Number.isInteger(v)) return fail(`${param.name}: not an integer`);
      if (v < (param.lb as number) || v > (param.ub as number)) {
        return fail(`${param.name}: ${v} outside [${param.lb}, ${param.ub}]`);
      }
      return { ok: true, value: v };
    }
    case "bool": {
      if (text === "true" || text === "1") return { ok: true, value: true };
      if (text === "false" || text === "0") return { ok: true, value: false };
      return fail(`${param.name}: expected true or false`);
    }
    case "cat": {
      if (!(param.categories ?? []).includes(text)) {
        return fail(`${param.name}: ${text} not among ${param.categories?.join(", ")}`);
      }
      return { ok: true, value: text };
    }
    default:
      return fail(`${param.name}: unknown parameter type`);
  }
}

export interface OverrideResult {
  ok: boolean;
  point?: DesignPoint;
  errors: string[];
}

/** Validate a whole override form; no request is sent unless this passes. */
export function validateOverride(
  space: ParamRecord[],
  form: Record<string, string>,
): OverrideResult {
  const point: DesignPoint = {};
  const errors: string[] = [];
  for (const param of space) {
    const result = validateValue(param, form[param.name] ?? "");
    if (result.ok) {
      point[param.name] = result.value;
    } else {
      errors.push(result.error);
    }
  }
  for (const key of Object.keys(form)) {
    if (!space.some((p) => p.name === key)) errors.push(`unknown parameter ${key}`);
  }
  return errors.length ? { ok: false, errors } : { ok: true, point, errors: [] };
}

/** Slate rows must render sorted by score descending (stable). */
export function sortSlate(items: SlateItem[]): SlateItem[] {
  return items
    .map((item, i) => ({ item, i }))
    .sort((a, b) => b.item.score - a.item.score || a.i - b.i)
    .map(({ item }) => item);
}

export function isSorted(items: SlateItem[]): boolean {
  return items.every((item, i) => i === 0 || (items[i - 1] as SlateItem).score >= item.score);
}

export interface ConflictState {
  active: boolean;
  message: string;
  staleRevision: number | null;
}

export const noConflict: ConflictState = { active: false, message: "", staleRevision: null };

export function conflictBanner(staleRevision: number, message?: string): ConflictState {
  return {
    active: true,
    staleRevision,
    message:
      message ??
      "Someone else updated this study. The view was refreshed; please review and retry.",
  };
}

export interface DashboardState {
  summary: StudySummary | null;
  curve: { iterations: number[]; best: number[] };
  conflict: ConflictState;
  slateRevision: number | null;
}

export function emptyDashboard(): DashboardState {
  return { summary: null, curve: { iterations: [], best: [] }, conflict: noConflict,
           slateRevision: null };
}

export function applySummary(state: DashboardState, summary: StudySummary): DashboardState {
  return { ...state, summary };
}

export function applyCurve(
  state: DashboardState,
  iterations: number[],
  best: number[],
): DashboardState {
  return { ...state, curve: { iterations, best } };
}

export function applyConflict(state: DashboardState, staleRevision: number): DashboardState {
  return { ...state, conflict: conflictBanner(staleRevision) };
}

export function clearConflict(state: DashboardState): DashboardState {
  return { ...state, conflict: noConflict };
}

/** Incumbent value shown in the header, straight from the summary payload. */
export function incumbentLabel(summary: StudySummary | null): string {
  if (!summary || !summary.best) return "no observations yet";
  return `best y = ${summary.best.y} (${summary.direction})`;
}
