/**
 * End-to-end console flows against a live service process.
 *
 * Spawns the Python service on a scratch data directory, then drives the
 * exact call sequences the DOM layer performs: create a study, work through
 * the slate-select-observe loop, the manual-override path, and the
 * stale-revision conflict banner.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiRequestError, SeqboClient, type DesignPoint } from "../src/api.js";
import {
  applyConflict,
  applySummary,
  emptyDashboard,
  incumbentLabel,
  isSorted,
  validateOverride,
} from "../src/state.js";

const PORT = 8931;
const BASE = `http://127.0.0.1:${PORT}`;

const SPACE = [
  { name: "x1", type: "num" as const, lb: 0.0, ub: 1.0 },
  { name: "x2", type: "num" as const, lb: 0.0, ub: 1.0 },
];

const CONFIG = {
  n_init: 3,
  seed: 0,
  acquisition: { kind: "ucb", beta: 2.0, direction: "maximize" },
  strategy: { kind: "random", pool_size: 64 },
  fit: { restarts: 2 },
};

let server: ChildProcess;
const client = new SeqboClient(BASE);

function wavy(x: DesignPoint): number {
  const a = x.x1 as number;
  const b = x.x2 as number;
  return (
    Math.sin(5 * Math.PI * a) * Math.cos(5 * Math.PI * b) +
    0.5 * Math.cos(10 * Math.PI * a) * Math.sin(10 * Math.PI * b)
  );
}

async function waitForServer(): Promise<void> {
  for (let i = 0; i < 100; i++) {
    try {
      const resp = await fetch(`${BASE}/studies`);
      if (resp.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 200));
  }
  throw new Error("service did not come up");
}

beforeAll(async () => {
  const dataDir = mkdtempSync(join(tmpdir(), "seqbo-e2e-"));
  const code =
    "import uvicorn; from seqbo.service.app import create_app; " +
    `uvicorn.run(create_app(${JSON.stringify(dataDir)}), host='127.0.0.1', ` +
    `port=${PORT}, log_level='warning')`;
  server = spawn("python3", ["-c", code], { stdio: "ignore" });
  await waitForServer();
}, 60_000);

afterAll(() => {
  server?.kill();
});

describe("HITL loop against the live service", () => {
  it("create -> slate of 5 -> select -> enter y -> incumbent updates", async () => {
    const study = await client.createStudy(SPACE, CONFIG);
    expect(study.state).toBe("initializing");

    // initialization: ask and tell until the surrogate has its seed data
    for (let i = 0; i < 3; i++) {
      const { points } = await client.suggest(study.id, 1);
      const point = points[0] as DesignPoint;
      await client.observe(study.id, point, wavy(point), "initialization");
    }

    const slate = await client.slate(study.id, 5);
    expect(slate.candidates).toHaveLength(5);
    expect(isSorted(slate.candidates)).toBe(true);
    for (const row of slate.candidates) {
      expect(Number.isFinite(row.score)).toBe(true);
      expect(Number.isFinite(row.mean)).toBe(true);
      expect(row.std).toBeGreaterThanOrEqual(0);
    }

    // the scientist picks the top candidate and reports a strong outcome
    const choice = (slate.candidates[0] as { x: DesignPoint }).x;
    const before = await client.getStudy(study.id);
    const y = 5.0; // clearly above anything wavy2d produced during init
    await client.observe(study.id, choice, y, "algorithm");

    const summary = await client.getStudy(study.id);
    expect(summary.n_observations).toBe(before.n_observations + 1);
    expect(summary.best?.y).toBe(5.0);

    const state = applySummary(emptyDashboard(), summary);
    expect(incumbentLabel(state.summary)).toBe("best y = 5 (maximize)");

    const history = await client.history(study.id);
    const last = history.observations.at(-1);
    expect(last?.source).toBe("algorithm");
    expect(last?.x).toEqual(choice);

    const curve = await client.curve(study.id);
    expect(curve.best_so_far.at(-1)).toBe(5.0);
  }, 60_000);

  it("override path: invalid forms never leave the browser, valid ones post", async () => {
    const study = await client.createStudy(SPACE, CONFIG);

    const bad = validateOverride(study.space, { x1: "1.7", x2: "0.4" });
    expect(bad.ok).toBe(false);
    expect(bad.errors[0]).toContain("outside");

    const good = validateOverride(study.space, { x1: "0.31", x2: "0.44" });
    expect(good.ok).toBe(true);
    await client.observe(study.id, good.point as DesignPoint, 0.123, "human-override");

    const history = await client.history(study.id);
    expect(history.observations[0]?.source).toBe("human-override");
    expect(history.observations[0]?.x).toEqual({ x1: 0.31, x2: 0.44 });
  }, 30_000);

  it("second tab committing on a stale revision gets the conflict banner", async () => {
    const study = await client.createStudy(SPACE, CONFIG);
    const revision = (await client.getStudy(study.id)).revision;

    await client.observe(study.id, { x1: 0.1, x2: 0.1 }, 0.5, "human-override", revision);

    let state = emptyDashboard();
    try {
      await client.observe(study.id, { x1: 0.2, x2: 0.2 }, 0.6, "human-override", revision);
      expect.unreachable("stale revision must conflict");
    } catch (err) {
      expect(err).toBeInstanceOf(ApiRequestError);
      expect((err as ApiRequestError).isConflict).toBe(true);
      state = applyConflict(state, revision);
    }
    expect(state.conflict.active).toBe(true);
    expect(state.conflict.message).toContain("refreshed");

    // the losing tab refetches and retries against the fresh revision
    const fresh = (await client.getStudy(study.id)).revision;
    const summary = await client.observe(
      study.id, { x1: 0.2, x2: 0.2 }, 0.6, "human-override", fresh);
    expect(summary.n_observations).toBe(2);
  }, 30_000);

  it("stopped studies hide the slate and reject suggestions", async () => {
    const study = await client.createStudy(SPACE, CONFIG);
    await client.stop(study.id);
    const summary = await client.getStudy(study.id);
    expect(summary.state).toBe("stopped");
    try {
      await client.suggest(study.id, 1);
      expect.unreachable("suggest on a stopped study must fail");
    } catch (err) {
      expect((err as ApiRequestError).code).toBe("state_error");
    }
  }, 30_000);
});
