/**
 * Client for the `industrialbench serve` protocol.
 *
 * The simulation runs in a child Python process; this module talks to it
 * over stdin/stdout, one JSON request and one JSON response per line. The
 * binding adds no randomness and does no arithmetic of its own, so a
 * trajectory driven through it is bit-identical to one produced by the
 * `industrialbench trace` command for the same seed and action log.
 */

import { spawn, type ChildProcessWithoutNullStreams } from "node:child_process";
import { createInterface, type Interface } from "node:readline";

/**
 * Observations cross the boundary as name -> value mappings to keep the
 * dimension naming contract primary. Array-oriented consumers should use
 * {@link observationArray}, which follows this fixed order.
 */
export const OBSERVATION_ORDER = [
  "SetPoint",
  "Velocity",
  "Gain",
  "Shift",
  "Consumption",
  "Fatigue",
] as const;

export type ObservationName = (typeof OBSERVATION_ORDER)[number];
export type Observation = Record<ObservationName, number>;

/** Steering deltas, each component in [-1, 1]. */
export type ActionTriple = [number, number, number];

export interface StepResult {
  observation: Observation;
  reward: number;
  /** The full extended state, e.g. FatigueLatentV, OperationalCostConv, ... */
  info: Record<string, number>;
}

export interface ResetOptions {
  velocity?: number;
  gain?: number;
  shift?: number;
  /** Use the seed as the stream seed directly instead of deriving it from
   *  (seed, set point). Leave off to match `industrialbench trace`. */
  rawSeed?: boolean;
}

export interface ClientOptions {
  /** Executable to launch, default "python3". */
  command?: string;
  /** Arguments, default ["-m", "industrialbench", "serve"]. */
  args?: string[];
}

/** Server-reported failure that is not a range violation. */
export class ServerError extends Error {
  constructor(
    readonly kind: string,
    message: string,
  ) {
    super(message);
    this.name = "ServerError";
  }
}

interface Pending {
  resolve: (response: Record<string, unknown>) => void;
  reject: (error: Error) => void;
}

function toException(response: Record<string, unknown>): Error {
  const message = typeof response.error === "string" ? response.error : "unknown server error";
  if (response.kind === "range") {
    return new RangeError(message);
  }
  return new ServerError(typeof response.kind === "string" ? response.kind : "protocol", message);
}

/** Flatten an observation mapping into the documented fixed order. */
export function observationArray(observation: Observation): number[] {
  return OBSERVATION_ORDER.map((name) => observation[name]);
}

/**
 * One client owns one child process and one live episode at a time. The
 * protocol is strictly request/response, so calls are answered in order;
 * a single instance must not be shared across concurrent drivers. Create
 * several clients for several environments.
 */
export class IndustrialBenchmarkClient {
  private readonly child: ChildProcessWithoutNullStreams;
  private readonly lines: Interface;
  private readonly pending: Pending[] = [];
  private stderrTail = "";
  private exited = false;
  private closing = false;

  constructor(options: ClientOptions = {}) {
    const command = options.command ?? "python3";
    const args = options.args ?? ["-m", "industrialbench", "serve"];
    this.child = spawn(command, args, { stdio: ["pipe", "pipe", "pipe"] });

    this.lines = createInterface({ input: this.child.stdout });
    this.lines.on("line", (line) => {
      const waiter = this.pending.shift();
      if (!waiter) {
        return; // unsolicited output; nothing sensible to do with it
      }
      try {
        waiter.resolve(JSON.parse(line) as Record<string, unknown>);
      } catch {
        waiter.reject(new ServerError("protocol", `unparseable server line: ${line}`));
      }
    });

    this.child.stderr.on("data", (chunk: Buffer) => {
      this.stderrTail = (this.stderrTail + chunk.toString()).slice(-2000);
    });

    const fail = (error: Error) => {
      this.exited = true;
      for (const waiter of this.pending.splice(0)) {
        waiter.reject(error);
      }
    };
    this.child.on("error", (error) => fail(new Error(`cannot launch serve process: ${error.message}`)));
    this.child.on("exit", (code) => {
      if (this.closing && (code === 0 || code === null)) {
        fail(new Error("serve process closed"));
      } else {
        fail(
          new Error(
            `serve process exited with code ${code}` +
              (this.stderrTail ? `; stderr: ${this.stderrTail.trim()}` : ""),
          ),
        );
      }
    });
  }

  private request(payload: Record<string, unknown>): Promise<Record<string, unknown>> {
    if (this.exited) {
      return Promise.reject(new Error("serve process is gone; create a new client"));
    }
    return new Promise<Record<string, unknown>>((resolve, reject) => {
      this.pending.push({ resolve, reject });
      this.child.stdin.write(JSON.stringify(payload) + "\n");
    }).then((response) => {
      if (response.ok !== true) {
        throw toException(response);
      }
      return response;
    });
  }

  /** Start a fresh episode and return the initial observation. */
  async reset(setPoint: number, seed: number, options: ResetOptions = {}): Promise<Observation> {
    const payload: Record<string, unknown> = { op: "reset", set_point: setPoint, seed };
    if (options.velocity !== undefined) payload.velocity = options.velocity;
    if (options.gain !== undefined) payload.gain = options.gain;
    if (options.shift !== undefined) payload.shift = options.shift;
    if (options.rawSeed) payload.raw_seed = true;
    const response = await this.request(payload);
    return response.observation as Observation;
  }

  /**
   * Apply one action and return (observation, reward, info). Out-of-range
   * or malformed actions are rejected here, before anything is forwarded.
   */
  async step(action: ActionTriple): Promise<StepResult> {
    if (!Array.isArray(action) || action.length !== 3) {
      throw new RangeError(`action must be a [dv, dg, ds] triple, got ${JSON.stringify(action)}`);
    }
    for (const x of action) {
      if (typeof x !== "number" || !Number.isFinite(x) || x < -1.0 || x > 1.0) {
        throw new RangeError(`action component ${x} outside [-1, 1]`);
      }
    }
    const response = await this.request({ op: "step", action });
    return {
      observation: response.observation as Observation,
      reward: response.reward as number,
      info: response.extended as Record<string, number>,
    };
  }

  /** Current observation of the live episode. */
  async state(): Promise<Observation> {
    const response = await this.request({ op: "state" });
    return response.observation as Observation;
  }

  /** Current extended state of the live episode. */
  async extended(): Promise<Record<string, number>> {
    const response = await this.request({ op: "extended" });
    return response.extended as Record<string, number>;
  }

  /** Server package version, schema version, and generator name. */
  async version(): Promise<{ version: string; schema: number; generator: string }> {
    const response = await this.request({ op: "version" });
    return {
      version: response.version as string,
      schema: response.schema as number,
      generator: response.generator as string,
    };
  }

  /** Shut the server down and wait for the process to go away. */
  async close(): Promise<void> {
    if (this.exited) {
      return;
    }
    this.closing = true;
    const done = new Promise<void>((resolve) => this.child.once("exit", () => resolve()));
    try {
      await this.request({ op: "close" });
    } catch {
      // the process may already be tearing down; exit is all we need
    }
    this.child.stdin.end();
    await done;
  }
}
