import { spawnSync } from 'node:child_process';

/** Name (or path) of the engine executable; override via TABPRIOR_BIN. */
export const ENGINE_BIN = process.env.TABPRIOR_BIN ?? 'tabprior';

export class EngineError extends Error {
  constructor(
    message: string,
    public readonly exitCode: number | null,
    public readonly stderr: string,
  ) {
    super(message);
    this.name = 'EngineError';
  }
}

/**
 * Run one engine subcommand synchronously and return its stdout.
 *
 * The engine communicates exclusively through its documented surface:
 * command-line flags in, files and JSON out.  Exit codes: 0 success,
 * 2 configuration error, 3 generation exhausted, 4 I/O failure.
 */
export function runEngine(args: string[]): string {
  const res = spawnSync(ENGINE_BIN, args, {
    encoding: 'utf8',
    maxBuffer: 256 * 1024 * 1024,
  });
  if (res.error) {
    throw new EngineError(`failed to launch ${ENGINE_BIN}: ${res.error.message}`, null, '');
  }
  if (res.status !== 0) {
    throw new EngineError(
      `${ENGINE_BIN} ${args[0]} exited with code ${res.status}: ${res.stderr.trim()}`,
      res.status,
      res.stderr,
    );
  }
  return res.stdout;
}
