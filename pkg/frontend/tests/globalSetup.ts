/** Spawn the label service on a synthetic region for integration tests. */

import { spawn, spawnSync, ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import type { TestProject } from "vitest/node";

let child: ChildProcess | null = null;
let rootDir: string | null = null;

async function waitForServer(baseUrl: string, attempts = 60): Promise<void> {
  for (let i = 0; i < attempts; i++) {
    try {
      const resp = await fetch(`${baseUrl}/api/regions`);
      if (resp.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 500));
  }
  throw new Error(`label service did not come up at ${baseUrl}`);
}

export default async function setup(project: TestProject): Promise<() => void> {
  rootDir = mkdtempSync(join(tmpdir(), "pond-labels-"));
  const synth = spawnSync(
    "python3",
    ["-m", "pondwatch.cli", "synth", "--regions", "1", "--seed", "4", "--out", rootDir],
    { stdio: "inherit" },
  );
  if (synth.status !== 0) {
    throw new Error("failed to synthesize the test region");
  }
  const port = 8700 + Math.floor(Math.random() * 800);
  child = spawn(
    "python3",
    ["-m", "pondwatch.cli", "serve", "--root", rootDir, "--port", String(port)],
    { stdio: "ignore" },
  );
  const baseUrl = `http://127.0.0.1:${port}`;
  await waitForServer(baseUrl);
  project.provide("baseUrl", baseUrl);

  return () => {
    child?.kill();
    if (rootDir) rmSync(rootDir, { recursive: true, force: true });
  };
}

declare module "vitest" {
  export interface ProvidedContext {
    baseUrl: string;
  }
}
