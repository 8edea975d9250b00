/**
 * TypeScript client for the bayesbench optimizer.
 *
 * The optimizer itself runs in a `bayesbench serve` child process speaking
 * newline-delimited JSON over stdio; all numerical state lives core-side.
 * Two entry points are exposed:
 *
 * - {@link optimize}: callback style, mirroring a direct core run.
 * - {@link AskTellSession}: stepwise propose()/tell() for callers that
 *   evaluate the target themselves.
 *
 * Coordinates and values cross the boundary as JSON numbers, which both
 * sides serialize in shortest round-trip form, so 64-bit floats survive the
 * crossing exactly.
 */

import { spawn, type ChildProcessWithoutNullStreams } from "node:child_process";
import { createInterface, type Interface } from "node:readline";

/** Flat configuration overrides; keys must be core parameter fields. */
export type ParamValue = number | string | number[];
export type ParamMap = Record<string, ParamValue>;

export interface SessionOptions {
  /** Per-dimension lower bounds. */
  lower: number[];
  /** Per-dimension upper bounds. */
  upper: number[];
  /** Parameter overrides (subset of the core config fields). */
  params?: ParamMap;
  /** Seed shorthand; equivalent to params.random_seed. */
  seed?: number;
  /** Config file path or shipped preset name. */
  config?: string;
  /** Command used to launch the core (default: "bayesbench"). */
  coreCommand?: string[];
}

export interface HistoryEntry {
  iteration: number;
  evalIndex: number;
  x: number[];
  y: number;
  yBest: number;
  criterion: string;
}

export interface OptimizeResult {
  xBest: number[];
  yBest: number;
  nEvals: number;
  history: HistoryEntry[];
}

/** Ask/tell protocol violation reported by the core (or detected locally). */
export class OutOfOrderError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "OutOfOrderError";
  }
}

/** Core process failed to start, crashed, or reported a non-protocol error. */
export class CoreError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "CoreError";
  }
}

interface ReadyMessage {
  ok: boolean;
  op: string;
  dim: number;
  n_init: number;
  n_iterations: number;
  total_evals: number;
}

interface CoreReply {
  ok: boolean;
  error?: string;
  message?: string;
  [key: string]: unknown;
}

function formatParam(value: ParamValue): string {
  if (Array.isArray(value)) {
    return `[${value.join(", ")}]`;
  }
  if (typeof value === "string") {
    return `"${value}"`;
  }
  return String(value);
}

/**
 * One optimization run driven stepwise from the host.
 *
 * The session owns a core child process. Sessions are independent; use one
 * per concurrent optimization. Always call {@link close} (or run to
 * completion and call {@link best}) to reap the child.
 */
export class AskTellSession {
  private proc: ChildProcessWithoutNullStreams;
  private lines: Interface;
  private queue: Array<(line: string) => void> = [];
  private stderrBuf = "";
  private exited = false;
  private readyInfo: ReadyMessage | null = null;

  readonly dim: number;

  private constructor(options: SessionOptions) {
    const dim = options.lower.length;
    if (options.upper.length !== dim || dim === 0) {
      throw new RangeError("lower/upper must be nonempty and equally long");
    }
    this.dim = dim;
    const command = options.coreCommand ?? ["bayesbench"];
    // --opt=value form: bounds may be negative, which bare argparse-style
    // "--lower -1,..." would misread as a flag
    const args = [
      ...command.slice(1),
      "serve",
      `--dim=${dim}`,
      `--lower=${options.lower.join(",")}`,
      `--upper=${options.upper.join(",")}`,
    ];
    if (options.config !== undefined) {
      args.push("--config", options.config);
    }
    if (options.seed !== undefined) {
      args.push("--seed", String(options.seed));
    }
    for (const [key, value] of Object.entries(options.params ?? {})) {
      args.push("--param", `${key} = ${formatParam(value)}`);
    }
    this.proc = spawn(command[0], args, { stdio: ["pipe", "pipe", "pipe"] });
    this.proc.stderr.on("data", (chunk) => {
      this.stderrBuf += String(chunk);
    });
    this.proc.on("exit", () => {
      this.exited = true;
      for (const resolve of this.queue.splice(0)) {
        resolve("");
      }
    });
    this.lines = createInterface({ input: this.proc.stdout });
    this.lines.on("line", (line) => {
      const next = this.queue.shift();
      if (next) {
        next(line);
      }
    });
  }

  /** Launch a session and wait for the core handshake. */
  static async open(options: SessionOptions): Promise<AskTellSession> {
    const session = new AskTellSession(options);
    const line = await session.nextLine();
    let ready: ReadyMessage;
    try {
      ready = JSON.parse(line) as ReadyMessage;
    } catch {
      throw new CoreError(
        `core did not produce a handshake: ${session.stderrBuf.trim()}`,
      );
    }
    if (!ready.ok || ready.op !== "ready") {
      throw new CoreError(`unexpected handshake: ${line}`);
    }
    session.readyInfo = ready;
    return session;
  }

  /** Total evaluation budget (initial design plus iterations). */
  get totalEvals(): number {
    return this.ready.total_evals;
  }

  get initialSamples(): number {
    return this.ready.n_init;
  }

  private get ready(): ReadyMessage {
    if (this.readyInfo === null) {
      throw new CoreError("session not ready");
    }
    return this.readyInfo;
  }

  private nextLine(): Promise<string> {
    return new Promise((resolve) => {
      this.queue.push(resolve);
    });
  }

  private async call(payload: object): Promise<CoreReply> {
    if (this.exited) {
      throw new CoreError(`core process exited: ${this.stderrBuf.trim()}`);
    }
    const pending = this.nextLine();
    this.proc.stdin.write(JSON.stringify(payload) + "\n");
    const line = await pending;
    if (line === "") {
      throw new CoreError(`core process exited: ${this.stderrBuf.trim()}`);
    }
    const reply = JSON.parse(line) as CoreReply;
    if (!reply.ok) {
      const message = `${reply.error}: ${reply.message}`;
      if (reply.error === "OutOfOrder" || reply.error === "OutOfOrderError") {
        throw new OutOfOrderError(message);
      }
      throw new CoreError(message);
    }
    return reply;
  }

  /** Next point to evaluate; must be answered with tell(). */
  async propose(): Promise<number[]> {
    const reply = await this.call({ op: "propose" });
    return reply.x as number[];
  }

  /** Report the observed value for the pending proposal. */
  async tell(x: number[], y: number): Promise<void> {
    if (!Number.isFinite(y)) {
      throw new RangeError(`objective value must be finite, got ${y}`);
    }
    await this.call({ op: "tell", x, y });
  }

  /** Best point so far plus the full evaluation history. */
  async best(): Promise<OptimizeResult> {
    const reply = await this.call({ op: "best" });
    const history = (reply.history as Array<Record<string, unknown>>).map(
      (entry) => ({
        iteration: entry.iteration as number,
        evalIndex: entry.eval_index as number,
        x: entry.x as number[],
        y: entry.y as number,
        yBest: entry.y_best as number,
        criterion: entry.criterion as string,
      }),
    );
    return {
      xBest: reply.x_best as number[],
      yBest: reply.y_best as number,
      nEvals: reply.n_evals as number,
      history,
    };
  }

  /** Terminate the core process. Safe to call more than once. */
  async close(): Promise<void> {
    if (this.exited) {
      return;
    }
    try {
      await this.call({ op: "exit" });
    } catch {
      this.proc.kill();
    }
  }
}

/**
 * Minimize a host callable over a box.
 *
 * Drives a full ask/tell loop against the core, so the result is identical
 * to a core-side run with the same seed and configuration. Exceptions
 * thrown by the target propagate to the caller; the core child is reaped
 * either way.
 */
export async function optimize(
  target: (x: number[]) => number | Promise<number>,
  options: SessionOptions,
): Promise<OptimizeResult> {
  const session = await AskTellSession.open(options);
  try {
    for (let i = 0; i < session.totalEvals; i++) {
      const x = await session.propose();
      const y = await target(x);
      await session.tell(x, y);
    }
    return await session.best();
  } finally {
    await session.close();
  }
}
