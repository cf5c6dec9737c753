/** Spawns the fixture-serving worktrail backend for the UI tests. */

import { spawn, type ChildProcess } from "node:child_process";
import path from "node:path";

let server: ChildProcess | null = null;

export async function setup(): Promise<void> {
  const script = path.resolve(__dirname, "..", "scripts", "test_server.py");
  server = spawn("python3", [script], { stdio: ["ignore", "pipe", "inherit"] });
  await new Promise<void>((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error("backend did not print READY")), 30000);
    server!.stdout!.on("data", (chunk: Buffer) => {
      if (chunk.toString().includes("READY")) {
        clearTimeout(timer);
        resolve();
      }
    });
    server!.on("exit", (code) => {
      clearTimeout(timer);
      reject(new Error(`backend exited early with code ${code}`));
    });
  });
}

export async function teardown(): Promise<void> {
  server?.kill("SIGTERM");
}
